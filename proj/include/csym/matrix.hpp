#pragma once

// Dense arbitrary-precision matrices over Z and Z/aZ with Smith normal form,
// cokernel extraction, and rank mod p. The Smith kernel runs on checked
// 64-bit integers and falls back to GMP when any intermediate would overflow.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "csym/group.hpp"

namespace csym {

/// Dense row-major matrix tagged with a ring modulus (0 encodes Z, a >= 1
/// encodes Z/aZ). Entries are kept reduced to [0, a) when modular.
class ExactMatrix {
 public:
  ExactMatrix(long rows, long cols, unsigned long modulus = 0)
      : rows_(rows), cols_(cols), modulus_(modulus),
        entries_(static_cast<std::size_t>(rows * cols), Int(0)) {
    if (rows < 1 || cols < 1)
      throw std::invalid_argument("matrix dimensions must be positive");
  }

  static ExactMatrix identity(long n, unsigned long modulus = 0) {
    ExactMatrix m(n, n, modulus);
    for (long i = 0; i < n; ++i) m.set(i, i, 1);
    return m;
  }

  static ExactMatrix from_rows(const std::vector<std::vector<long>>& rows,
                               unsigned long modulus = 0) {
    if (rows.empty() || rows[0].empty())
      throw std::invalid_argument("matrix dimensions must be positive");
    ExactMatrix m(static_cast<long>(rows.size()),
                  static_cast<long>(rows[0].size()), modulus);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows[0].size())
        throw std::invalid_argument("ragged matrix rows");
      for (std::size_t j = 0; j < rows[i].size(); ++j)
        m.set(static_cast<long>(i), static_cast<long>(j), Int(rows[i][j]));
    }
    return m;
  }

  long rows() const { return rows_; }
  long cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }
  unsigned long modulus() const { return modulus_; }

  const Int& at(long i, long j) const {
    return entries_[static_cast<std::size_t>(i * cols_ + j)];
  }

  void set(long i, long j, Int v) {
    entries_[static_cast<std::size_t>(i * cols_ + j)] = reduce(std::move(v));
  }

  Int reduce(Int v) const {
    if (modulus_ == 0) return v;
    Int m(modulus_);
    v %= m;
    if (v < 0) v += m;
    return v;
  }

  /// Same entries viewed over Z.
  ExactMatrix lift() const {
    ExactMatrix m(rows_, cols_, 0);
    m.entries_ = entries_;
    return m;
  }

  /// Entries reduced into Z/aZ.
  ExactMatrix reduced(unsigned long a) const {
    ExactMatrix m(rows_, cols_, a);
    for (long i = 0; i < rows_; ++i)
      for (long j = 0; j < cols_; ++j) m.set(i, j, at(i, j));
    return m;
  }

  ExactMatrix transpose() const {
    ExactMatrix m(cols_, rows_, modulus_);
    for (long i = 0; i < rows_; ++i)
      for (long j = 0; j < cols_; ++j) m.set(j, i, at(i, j));
    return m;
  }

  bool operator==(const ExactMatrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && modulus_ == o.modulus_ &&
           entries_ == o.entries_;
  }
  bool operator!=(const ExactMatrix& o) const { return !(*this == o); }

  bool is_zero() const {
    for (const auto& e : entries_)
      if (e != 0) return false;
    return true;
  }

 private:
  long rows_, cols_;
  unsigned long modulus_;
  std::vector<Int> entries_;
};

inline ExactMatrix multiply(const ExactMatrix& a, const ExactMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("multiply: shape");
  if (a.modulus() != b.modulus()) throw std::invalid_argument("multiply: ring");
  ExactMatrix out(a.rows(), b.cols(), a.modulus());
  for (long i = 0; i < a.rows(); ++i)
    for (long j = 0; j < b.cols(); ++j) {
      Int s = 0;
      for (long k = 0; k < a.cols(); ++k) s += a.at(i, k) * b.at(k, j);
      out.set(i, j, std::move(s));
    }
  return out;
}

inline ExactMatrix subtract(const ExactMatrix& a, const ExactMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() ||
      a.modulus() != b.modulus())
    throw std::invalid_argument("subtract: shape or ring mismatch");
  ExactMatrix out(a.rows(), a.cols(), a.modulus());
  for (long i = 0; i < a.rows(); ++i)
    for (long j = 0; j < a.cols(); ++j) out.set(i, j, a.at(i, j) - b.at(i, j));
  return out;
}

/// U * M * V = D with U, V unimodular and D diagonal with a divisibility
/// chain; zeros trail. Inverse transforms come along for free.
struct SmithDecomposition {
  long rows = 0, cols = 0;
  std::vector<Int> diagonal;  // length min(rows, cols)
  long rank = 0;
  std::optional<ExactMatrix> u, v, u_inv, v_inv;

  ExactMatrix d_matrix() const {
    ExactMatrix d(rows, cols, 0);
    for (std::size_t i = 0; i < diagonal.size(); ++i)
      d.set(static_cast<long>(i), static_cast<long>(i), diagonal[i]);
    return d;
  }
};

namespace detail {

struct snf_overflow {};

// Overflow-checked 64-bit integer for the fast Smith kernel.
struct I64 {
  std::int64_t v = 0;
  I64() = default;
  I64(std::int64_t x) : v(x) {}
  friend I64 operator+(I64 a, I64 b) {
    I64 r;
    if (__builtin_add_overflow(a.v, b.v, &r.v)) throw snf_overflow{};
    return r;
  }
  friend I64 operator-(I64 a, I64 b) {
    I64 r;
    if (__builtin_sub_overflow(a.v, b.v, &r.v)) throw snf_overflow{};
    return r;
  }
  friend I64 operator*(I64 a, I64 b) {
    I64 r;
    if (__builtin_mul_overflow(a.v, b.v, &r.v)) throw snf_overflow{};
    return r;
  }
  I64 operator-() const {
    if (v == INT64_MIN) throw snf_overflow{};
    return I64(-v);
  }
  friend bool operator==(I64 a, I64 b) { return a.v == b.v; }
  friend bool operator!=(I64 a, I64 b) { return a.v != b.v; }
  friend bool operator<(I64 a, I64 b) { return a.v < b.v; }
};

inline I64 abs_of(I64 a) { return a.v < 0 ? -a : a; }
inline Int abs_of(const Int& a) { return abs(a); }
inline bool is_zero(I64 a) { return a.v == 0; }
inline bool is_zero(const Int& a) { return a == 0; }
inline bool is_neg(I64 a) { return a.v < 0; }
inline bool is_neg(const Int& a) { return a < 0; }
inline bool divides(I64 d, I64 x) { return x.v % d.v == 0; }
inline bool divides(const Int& d, const Int& x) { return x % d == 0; }

// Quotient with balanced remainder: x - q*d has absolute value <= |d|/2.
inline I64 balanced_quot(I64 x, I64 d) {
  if (x.v == INT64_MIN || d.v == INT64_MIN) throw snf_overflow{};
  std::int64_t q = x.v / d.v, r = x.v - q * d.v;
  std::int64_t ad = d.v < 0 ? -d.v : d.v;
  if ((r < 0 ? -r : r) > ad / 2) q += ((r < 0) == (d.v < 0)) ? 1 : -1;
  return I64(q);
}
inline Int balanced_quot(const Int& x, const Int& d) {
  // Floor division leaves a remainder with the sign of d; one more step of d
  // always shrinks it when it exceeds |d|/2.
  Int q, r;
  mpz_fdiv_qr(q.get_mpz_t(), r.get_mpz_t(), x.get_mpz_t(), d.get_mpz_t());
  if (2 * abs(r) > abs(d)) q += 1;
  return q;
}

template <class T>
struct Dense {
  long r = 0, c = 0;
  std::vector<T> a;
  Dense() = default;
  Dense(long rr, long cc) : r(rr), c(cc), a(static_cast<std::size_t>(rr * cc)) {}
  T& at(long i, long j) { return a[static_cast<std::size_t>(i * c + j)]; }
  const T& at(long i, long j) const {
    return a[static_cast<std::size_t>(i * c + j)];
  }
  static Dense identity(long n) {
    Dense m(n, n);
    for (long i = 0; i < n; ++i) m.at(i, i) = T(1);
    return m;
  }
};

template <class T>
struct SnfTransforms {
  Dense<T> u, v, u_inv, v_inv;
};

// In-place Smith normal form with minimal-absolute-value pivoting; ties break
// at the lowest (row, col). Divisibility violations are fixed by adding the
// offending row to the pivot row and re-eliminating.
template <class T>
void snf_inplace(Dense<T>& m, SnfTransforms<T>* tr) {
  const long R = m.r, C = m.c;
  const long N = R < C ? R : C;

  auto row_op = [&](long dst, long src, const T& f) {  // row dst -= f*src
    for (long j = 0; j < C; ++j) m.at(dst, j) = m.at(dst, j) - f * m.at(src, j);
    if (tr) {
      for (long j = 0; j < R; ++j)
        tr->u.at(dst, j) = tr->u.at(dst, j) - f * tr->u.at(src, j);
      for (long i = 0; i < R; ++i)
        tr->u_inv.at(i, src) = tr->u_inv.at(i, src) + f * tr->u_inv.at(i, dst);
    }
  };
  auto col_op = [&](long dst, long src, const T& f) {  // col dst -= f*src
    for (long i = 0; i < R; ++i) m.at(i, dst) = m.at(i, dst) - f * m.at(i, src);
    if (tr) {
      for (long i = 0; i < C; ++i)
        tr->v.at(i, dst) = tr->v.at(i, dst) - f * tr->v.at(i, src);
      for (long j = 0; j < C; ++j)
        tr->v_inv.at(src, j) = tr->v_inv.at(src, j) + f * tr->v_inv.at(dst, j);
    }
  };
  auto row_swap = [&](long i, long j) {
    if (i == j) return;
    for (long k = 0; k < C; ++k) std::swap(m.at(i, k), m.at(j, k));
    if (tr) {
      for (long k = 0; k < R; ++k) std::swap(tr->u.at(i, k), tr->u.at(j, k));
      for (long k = 0; k < R; ++k)
        std::swap(tr->u_inv.at(k, i), tr->u_inv.at(k, j));
    }
  };
  auto col_swap = [&](long i, long j) {
    if (i == j) return;
    for (long k = 0; k < R; ++k) std::swap(m.at(k, i), m.at(k, j));
    if (tr) {
      for (long k = 0; k < C; ++k) std::swap(tr->v.at(k, i), tr->v.at(k, j));
      for (long k = 0; k < C; ++k)
        std::swap(tr->v_inv.at(i, k), tr->v_inv.at(j, k));
    }
  };
  auto row_negate = [&](long i) {
    for (long k = 0; k < C; ++k) m.at(i, k) = -m.at(i, k);
    if (tr) {
      for (long k = 0; k < R; ++k) tr->u.at(i, k) = -tr->u.at(i, k);
      for (long k = 0; k < R; ++k) tr->u_inv.at(k, i) = -tr->u_inv.at(k, i);
    }
  };

  const T one(1);
  for (long t = 0; t < N; ++t) {
    for (;;) {
      // Locate the minimal nonzero |entry| in the trailing submatrix; a unit
      // pivot cannot be beaten, so stop scanning as soon as one shows up.
      long pi = -1, pj = -1;
      T best{};
      for (long i = t; i < R && !(pi >= 0 && best == one); ++i)
        for (long j = t; j < C; ++j) {
          if (is_zero(m.at(i, j))) continue;
          T a = abs_of(m.at(i, j));
          if (pi < 0 || a < best) {
            best = a;
            pi = i;
            pj = j;
            if (best == one) break;
          }
        }
      if (pi < 0) {
        t = N;  // trailing block is zero
        break;
      }
      row_swap(t, pi);
      col_swap(t, pj);

      bool clean = true;
      for (long i = t + 1; i < R; ++i) {
        if (is_zero(m.at(i, t))) continue;
        T q = balanced_quot(m.at(i, t), m.at(t, t));
        if (!is_zero(q)) row_op(i, t, q);
        if (!is_zero(m.at(i, t))) clean = false;
      }
      for (long j = t + 1; j < C; ++j) {
        if (is_zero(m.at(t, j))) continue;
        T q = balanced_quot(m.at(t, j), m.at(t, t));
        if (!is_zero(q)) col_op(j, t, q);
        if (!is_zero(m.at(t, j))) clean = false;
      }
      if (!clean) continue;

      // Pivot is lone; enforce that it divides the rest of the submatrix
      // (a unit pivot divides everything).
      long vi = -1;
      if (!(abs_of(m.at(t, t)) == one))
        for (long i = t + 1; i < R && vi < 0; ++i)
          for (long j = t + 1; j < C; ++j)
            if (!is_zero(m.at(i, j)) && !divides(m.at(t, t), m.at(i, j))) {
              vi = i;
              break;
            }
      if (vi >= 0) {
        row_op(t, vi, T(-1));  // pull the violating row up, then re-reduce
        continue;
      }
      if (is_neg(m.at(t, t))) row_negate(t);
      break;
    }
    if (t >= N) break;
  }
}

inline Int to_int(const I64& x) { return Int(static_cast<long>(x.v)); }
inline Int to_int(const Int& x) { return x; }

template <class T>
ExactMatrix to_matrix(const Dense<T>& d) {
  ExactMatrix m(d.r, d.c, 0);
  for (long i = 0; i < d.r; ++i)
    for (long j = 0; j < d.c; ++j) m.set(i, j, to_int(d.at(i, j)));
  return m;
}

template <class T>
SmithDecomposition snf_run(const ExactMatrix& m, bool with_transforms,
                           std::vector<T> loaded) {
  Dense<T> a(m.rows(), m.cols());
  a.a = std::move(loaded);
  SnfTransforms<T> tr;
  if (with_transforms) {
    tr.u = Dense<T>::identity(m.rows());
    tr.u_inv = Dense<T>::identity(m.rows());
    tr.v = Dense<T>::identity(m.cols());
    tr.v_inv = Dense<T>::identity(m.cols());
  }
  snf_inplace(a, with_transforms ? &tr : nullptr);

  SmithDecomposition out;
  out.rows = m.rows();
  out.cols = m.cols();
  const long n = std::min(m.rows(), m.cols());
  out.diagonal.reserve(n);
  for (long i = 0; i < n; ++i) {
    out.diagonal.push_back(to_int(a.at(i, i)));
    if (out.diagonal.back() != 0) ++out.rank;
  }
  if (with_transforms) {
    out.u = to_matrix(tr.u);
    out.v = to_matrix(tr.v);
    out.u_inv = to_matrix(tr.u_inv);
    out.v_inv = to_matrix(tr.v_inv);
  }
  return out;
}

}  // namespace detail

/// Smith normal form over Z. When with_transforms is set, U, V and their
/// exact integer inverses are returned alongside the diagonal.
inline SmithDecomposition smith_normal_form(const ExactMatrix& m,
                                            bool with_transforms = false) {
  if (m.modulus() != 0)
    throw std::invalid_argument("smith_normal_form: matrix must be over Z");
  // Fast path on checked 64-bit values whenever the input fits comfortably.
  constexpr long kSmall = INT64_MAX / 4;
  bool small = true;
  std::vector<detail::I64> fast;
  fast.reserve(static_cast<std::size_t>(m.rows() * m.cols()));
  for (long i = 0; i < m.rows() && small; ++i)
    for (long j = 0; j < m.cols(); ++j) {
      const Int& e = m.at(i, j);
      if (!e.fits_slong_p() || e > kSmall || e < -kSmall) {
        small = false;
        break;
      }
      fast.emplace_back(e.get_si());
    }
  if (small) {
    try {
      return detail::snf_run<detail::I64>(m, with_transforms, std::move(fast));
    } catch (const detail::snf_overflow&) {
      // fall through to exact path
    }
  }
  std::vector<Int> wide;
  wide.reserve(static_cast<std::size_t>(m.rows() * m.cols()));
  for (long i = 0; i < m.rows(); ++i)
    for (long j = 0; j < m.cols(); ++j) wide.push_back(m.at(i, j));
  return detail::snf_run<Int>(m, with_transforms, std::move(wide));
}

/// coker(M) = Z^rows / M(Z^cols) for M over Z.
inline FiniteAbelianGroup cokernel(const ExactMatrix& m) {
  if (m.modulus() != 0)
    throw std::invalid_argument("cokernel: matrix must be over Z");
  auto s = smith_normal_form(m);
  std::vector<Int> dd;
  for (const auto& d : s.diagonal)
    if (d > 1) dd.push_back(d);
  return FiniteAbelianGroup(std::move(dd), m.rows() - s.rank);
}

/// coker(M) over Z/aZ, by lifting to Z, augmenting with the relations a*I,
/// and taking the integer cokernel of the combined system.
inline FiniteAbelianGroup cokernel_mod(const ExactMatrix& m) {
  if (m.modulus() == 0)
    throw std::invalid_argument("cokernel_mod: matrix must be modular");
  const long r = m.rows(), c = m.cols();
  ExactMatrix aug(r, c + r, 0);
  for (long i = 0; i < r; ++i) {
    for (long j = 0; j < c; ++j) aug.set(i, j, m.at(i, j));
    aug.set(i, c + i, Int(m.modulus()));
  }
  return cokernel(aug);
}

/// Ring-dispatching cokernel.
inline FiniteAbelianGroup cokernel_of(const ExactMatrix& m) {
  return m.modulus() == 0 ? cokernel(m) : cokernel_mod(m);
}

/// Rank of M reduced mod p, by Gaussian elimination over F_p.
inline long rank_mod_p(const ExactMatrix& m, const Int& p) {
  if (!is_probable_prime(p))
    throw std::invalid_argument("rank_mod_p: p not prime");
  const long r = m.rows(), c = m.cols();
  std::vector<Int> a(static_cast<std::size_t>(r * c));
  for (long i = 0; i < r; ++i)
    for (long j = 0; j < c; ++j) {
      Int e = m.at(i, j) % p;
      if (e < 0) e += p;
      a[static_cast<std::size_t>(i * c + j)] = e;
    }
  auto at = [&](long i, long j) -> Int& {
    return a[static_cast<std::size_t>(i * c + j)];
  };
  long rank = 0;
  for (long col = 0; col < c && rank < r; ++col) {
    long piv = -1;
    for (long i = rank; i < r; ++i)
      if (at(i, col) != 0) {
        piv = i;
        break;
      }
    if (piv < 0) continue;
    for (long j = 0; j < c; ++j) std::swap(at(rank, j), at(piv, j));
    Int inv;
    mpz_invert(inv.get_mpz_t(), at(rank, col).get_mpz_t(), p.get_mpz_t());
    for (long j = col; j < c; ++j) at(rank, j) = at(rank, j) * inv % p;
    for (long i = rank + 1; i < r; ++i) {
      if (at(i, col) == 0) continue;
      Int f = at(i, col);
      for (long j = col; j < c; ++j) {
        at(i, j) = (at(i, j) - f * at(rank, j)) % p;
        if (at(i, j) < 0) at(i, j) += p;
      }
    }
    ++rank;
  }
  return rank;
}

/// Minimal number of generators of coker(M): nontrivial cyclic summands plus,
/// over Z, the free rank.
inline long min_generators_cokernel(const ExactMatrix& m) {
  FiniteAbelianGroup g = cokernel_of(m);
  return g.rank() + g.free_rank();
}

/// True iff the diagonal vanishes and c_ij + c_ji = 0 in the ring.
inline bool is_alternating(const ExactMatrix& c) {
  if (!c.square()) return false;
  const Int a(c.modulus());
  for (long i = 0; i < c.rows(); ++i) {
    if (c.modulus() == 0 ? c.at(i, i) != 0 : c.at(i, i) % a != 0) return false;
    for (long j = i + 1; j < c.cols(); ++j) {
      Int s = c.at(i, j) + c.at(j, i);
      if (c.modulus() == 0 ? s != 0 : s % a != 0) return false;
    }
  }
  return true;
}

/// gcd of the (lifted) entries, combined with the modulus when modular: the
/// zero matrix over Z has content 0, the zero matrix over Z/aZ has content a.
inline Int content(const ExactMatrix& c) {
  Int g = c.modulus() == 0 ? Int(0) : Int(c.modulus());
  for (long i = 0; i < c.rows(); ++i)
    for (long j = 0; j < c.cols(); ++j) g = gcd(g, c.at(i, j));
  return g;
}

/// Block-diagonal nondegenerate alternating matrix (hyperbolic 2x2 blocks);
/// n must be even for full rank.
inline ExactMatrix hyperbolic_alternating(long n, unsigned long modulus) {
  if (n % 2 != 0)
    throw std::invalid_argument("hyperbolic_alternating: n must be even");
  ExactMatrix c(n, n, modulus);
  for (long b = 0; b < n; b += 2) {
    c.set(b, b + 1, Int(1));
    c.set(b + 1, b, Int(-1));
  }
  return c;
}

}  // namespace csym
