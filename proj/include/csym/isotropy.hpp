#pragma once

// Isotropy of a map F: R^n -> G for an alternating form C over R = Z/aZ:
// the three equivalent characterizations, explicit witness construction, and
// exact / Monte Carlo isotropy probabilities.
//
// Throughout, G = Z/d_1 x ... x Z/d_r is viewed with a padded divisor chain
// of length n (leading slots equal to 1), so that a surjection R^n -> G can
// be diagonalized to a coordinatewise projection.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "csym/estimate.hpp"
#include "csym/matrix.hpp"
#include "csym/models.hpp"

namespace csym {

/// A homomorphism R^n -> G, stored as an r x n coordinate matrix: column l
/// is the image of the l-th basis vector, row i is reduced mod d_i.
class GroupMap {
 public:
  GroupMap(FiniteAbelianGroup target, long n, unsigned long modulus,
           const ExactMatrix& coords)
      : target_(std::move(target)), n_(n), modulus_(modulus),
        coords_(1, 1, 0) {
    if (modulus_ < 1) throw std::invalid_argument("GroupMap: modulus must be >= 1");
    if (!target_.is_finite())
      throw std::invalid_argument("GroupMap: target must be finite");
    if (target_.exponent() > 0 && Int(modulus_) % target_.exponent() != 0)
      throw std::invalid_argument(
          "GroupMap: exponent of target must divide the ring modulus");
    const long r = target_.rank();
    if (r == 0) {
      coords_ = ExactMatrix(1, n_, 0);  // placeholder, never read
      return;
    }
    if (coords.rows() != r || coords.cols() != n_)
      throw std::invalid_argument("GroupMap: coordinate matrix must be r x n");
    ExactMatrix red(r, n_, 0);
    for (long i = 0; i < r; ++i)
      for (long j = 0; j < n_; ++j) {
        Int v = coords.at(i, j) % target_.divisors()[i];
        if (v < 0) v += target_.divisors()[i];
        red.set(i, j, v);
      }
    coords_ = std::move(red);
  }

  const FiniteAbelianGroup& target() const { return target_; }
  long n() const { return n_; }
  unsigned long modulus() const { return modulus_; }
  long r() const { return target_.rank(); }

  /// Row i of the coordinate matrix, entries in [0, d_i).
  const Int& coord(long i, long j) const { return coords_.at(i, j); }

  /// Divisor chain padded to length n with leading 1 slots.
  std::vector<Int> padded_divisors() const {
    std::vector<Int> d(static_cast<std::size_t>(n_), Int(1));
    const auto& dv = target_.divisors();
    for (long i = 0; i < target_.rank(); ++i)
      d[static_cast<std::size_t>(n_ - target_.rank() + i)] = dv[i];
    return d;
  }

  /// Coordinate matrix padded to n x n over Z (leading zero rows).
  ExactMatrix padded_matrix() const {
    ExactMatrix f(n_, n_, 0);
    const long off = n_ - target_.rank();
    for (long i = 0; i < target_.rank(); ++i)
      for (long j = 0; j < n_; ++j) f.set(off + i, j, coords_.at(i, j));
    return f;
  }

 private:
  FiniteAbelianGroup target_;
  long n_;
  unsigned long modulus_;
  ExactMatrix coords_;
};

/// Draws a uniformly random map R^n -> G (independent uniform columns).
inline GroupMap sample_uniform_map(const FiniteAbelianGroup& g, long n,
                                   unsigned long modulus,
                                   const SeedSpec& seed) {
  const long r = g.rank();
  ExactMatrix coords(std::max(r, 1L), n, 0);
  for (long i = 0; i < r; ++i) {
    const unsigned long di = g.divisors()[i].get_ui();
    for (long j = 0; j < n; ++j) {
      auto st = rng::entry_stream(seed, i, j);
      coords.set(i, j, Int(static_cast<long>(st.uniform(di))));
    }
  }
  return GroupMap(g, n, modulus, coords);
}

/// (k, i, j): level k and coordinate pair (i, j) of G_k^* at which the
/// induced alternating form fails to vanish. Indices are padded, 1-based.
struct FailingTriple {
  long k = 0, i = 0, j = 0;
};

struct IsotropyReport {
  bool isotropic = false;
  bool surjective = false;
  std::optional<FailingTriple> failing_triple;
  std::optional<ExactMatrix> witness;
};

namespace detail {

// Core of condition (3): for real divisor rows i <= j of F, the value
// row_i . C . row_j^T must vanish mod min(d_i, d_j). Diagonal pairs vanish
// automatically for alternating C, but are checked for robustness.
template <class Get>
inline std::optional<FailingTriple> condition3_violation_core(
    long r, long n, const std::vector<Int>& divisors, Get coord,
    const ExactMatrix& c) {
  std::vector<std::vector<Int>> cf(r, std::vector<Int>(n, Int(0)));
  for (long j = 0; j < r; ++j)
    for (long l = 0; l < n; ++l) {
      Int acc = 0;
      for (long m = 0; m < n; ++m) acc += c.at(l, m) * coord(j, m);
      cf[j][l] = std::move(acc);
    }
  for (long i = 0; i < r; ++i)
    for (long j = i; j < r; ++j) {
      Int val = 0;
      for (long l = 0; l < n; ++l) val += coord(i, l) * cf[j][l];
      const Int& mod = divisors[i];  // = min(d_i, d_j) along the chain
      if (val % mod != 0) {
        const long off = n - r;
        return FailingTriple{off + i + 1, off + i + 1, off + j + 1};
      }
    }
  return std::nullopt;
}

}  // namespace detail

/// Condition (3): the alternating form F_k . C_k . F_k^* vanishes on the
/// last n - k + 1 coordinates of G_k^* for every level k. Defined for every
/// homomorphism, surjective or not.
inline std::optional<FailingTriple> condition3_violation(
    const GroupMap& f, const ExactMatrix& c) {
  if (c.rows() != f.n() || c.cols() != f.n())
    throw std::invalid_argument("condition3: C must be n x n");
  if (c.modulus() != f.modulus())
    throw std::invalid_argument("condition3: modulus mismatch");
  if (!is_alternating(c))
    throw std::invalid_argument("condition3: C is not alternating");
  if (f.r() == 0) return std::nullopt;
  return detail::condition3_violation_core(
      f.r(), f.n(), f.target().divisors(),
      [&f](long i, long j) -> const Int& { return f.coord(i, j); }, c);
}

inline bool check_condition3(const GroupMap& f, const ExactMatrix& c) {
  return !condition3_violation(f, c).has_value();
}

/// Surjectivity of F, decided from the invariant factors of the augmented
/// relation matrix [F | diag(d)].
inline bool is_surjective(const GroupMap& f) {
  const long r = f.target().rank();
  if (r == 0) return true;
  ExactMatrix aug(r, f.n() + r, 0);
  for (long i = 0; i < r; ++i) {
    for (long j = 0; j < f.n(); ++j) aug.set(i, j, f.coord(i, j));
    aug.set(i, f.n() + i, f.target().divisors()[i]);
  }
  auto s = smith_normal_form(aug);
  for (const auto& d : s.diagonal)
    if (d != 1) return false;
  return true;
}

/// Change of basis diagonalizing a surjective F: in the new basis of R^n,
/// F is the coordinatewise projection onto the padded divisor chain, and a
/// bilinear form C transforms to U2 . C . U2^T.
struct SmithCoords {
  std::vector<Int> padded_divisors;
  ExactMatrix u2 = ExactMatrix(1, 1, 0);
  ExactMatrix u2_inv = ExactMatrix(1, 1, 0);
};

inline SmithCoords smith_coordinates(const GroupMap& f) {
  const long n = f.n();
  const auto padded = f.padded_divisors();

  // Kernel lattice K = { v : F v = 0 in G }, via the kernel of [F | -diag(d)].
  ExactMatrix fpad = f.padded_matrix();
  ExactMatrix q(n, 2 * n, 0);
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < n; ++j) q.set(i, j, fpad.at(i, j));
    q.set(i, n + i, -padded[static_cast<std::size_t>(i)]);
  }
  auto sq = smith_normal_form(q, true);
  if (sq.rank != n)
    throw std::logic_error("smith_coordinates: relation matrix rank defect");
  ExactMatrix kgen(n, n, 0);  // top halves of the kernel basis columns
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) kgen.set(i, j, sq.v->at(i, n + j));

  auto sk = smith_normal_form(kgen, true);
  SmithCoords out{padded, *sk.u, *sk.u_inv};
  for (long i = 0; i < n; ++i)
    if (sk.diagonal[static_cast<std::size_t>(i)] !=
        padded[static_cast<std::size_t>(i)])
      throw std::invalid_argument("smith_coordinates: map is not surjective");
  return out;
}

/// Condition (2) in Smith coordinates: after diagonalizing a surjective F,
/// the transformed form must satisfy c'_ij = 0 mod min(d_i, d_j) for i < j.
inline bool check_condition2_smith(const GroupMap& f, const ExactMatrix& c) {
  if (c.rows() != f.n() || c.cols() != f.n())
    throw std::invalid_argument("condition2: C must be n x n");
  if (c.modulus() != f.modulus())
    throw std::invalid_argument("condition2: modulus mismatch");
  if (!is_alternating(c))
    throw std::invalid_argument("condition2: C is not alternating");
  auto sc = smith_coordinates(f);  // throws when F is not surjective
  ExactMatrix cp = multiply(multiply(sc.u2, c.lift()), sc.u2.transpose());
  for (long i = 0; i < f.n(); ++i)
    for (long j = i + 1; j < f.n(); ++j) {
      const Int& mod = sc.padded_divisors[static_cast<std::size_t>(i)];
      if (cp.at(i, j) % mod != 0) return false;
    }
  return true;
}

struct no_witness_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Constructs a C-symmetric M with F . M = 0 for a surjective isotropic F:
/// in Smith coordinates take the strictly upper part of the transformed form
/// (every other entry 0), then transform back. Both defining equations are
/// replayed exactly before returning.
inline ExactMatrix build_witness(const GroupMap& f, const ExactMatrix& c) {
  if (!check_condition3(f, c))
    throw no_witness_error("build_witness: F is not isotropic for C");
  SmithCoords sc;
  try {
    sc = smith_coordinates(f);
  } catch (const std::invalid_argument&) {
    throw no_witness_error("build_witness: F is not surjective");
  }
  const long n = f.n();
  ExactMatrix cp = multiply(multiply(sc.u2, c.lift()), sc.u2.transpose());
  ExactMatrix mp(n, n, 0);
  for (long i = 0; i < n; ++i)
    for (long j = i + 1; j < n; ++j) mp.set(i, j, cp.at(i, j));
  ExactMatrix m_int =
      multiply(multiply(sc.u2_inv, mp), sc.u2_inv.transpose());
  ExactMatrix m = m_int.reduced(f.modulus());

  // Verify M - M^T = C in the ring.
  const Int a(f.modulus());
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) {
      Int diff = m.at(i, j) - m.at(j, i) - c.at(i, j);
      if (diff % a != 0)
        throw std::logic_error("build_witness: form equation failed");
    }
  // Verify F . M = 0: row i of F*M must vanish mod d_i.
  for (long i = 0; i < f.r(); ++i)
    for (long j = 0; j < n; ++j) {
      Int acc = 0;
      for (long l = 0; l < n; ++l) acc += f.coord(i, l) * m.at(l, j);
      if (acc % f.target().divisors()[i] != 0)
        throw std::logic_error("build_witness: annihilation equation failed");
    }
  return m;
}

/// Full report for one (F, C) pair: condition (3) verdict, the failing level
/// when not isotropic, and a verified witness when F is surjective.
inline IsotropyReport analyze_isotropy(const GroupMap& f,
                                       const ExactMatrix& c) {
  IsotropyReport rep;
  rep.surjective = is_surjective(f);
  auto viol = condition3_violation(f, c);
  rep.isotropic = !viol.has_value();
  rep.failing_triple = viol;
  if (rep.isotropic && rep.surjective) rep.witness = build_witness(f, c);
  return rep;
}

namespace detail {

// Machine-int evaluation of condition (3) for the enumerative and Monte
// Carlo paths. Entries of C and the divisors must be small; accumulators
// stay below n^2 * a^3 which is far inside int64 for every supported cell.
struct Cond3Fast {
  long r = 0, n = 0;
  std::vector<long> divisors;        // real divisor chain, ascending
  std::vector<long> c;               // n x n lifted entries

  Cond3Fast(const FiniteAbelianGroup& g, const ExactMatrix& cm) {
    r = g.rank();
    n = cm.rows();
    for (const auto& d : g.divisors()) divisors.push_back(d.get_si());
    c.resize(static_cast<std::size_t>(n * n));
    for (long i = 0; i < n; ++i)
      for (long j = 0; j < n; ++j)
        c[static_cast<std::size_t>(i * n + j)] = cm.at(i, j).get_si();
  }

  // f is r x n row-major with row i reduced mod divisors[i].
  bool satisfied(const std::vector<long>& f) const {
    thread_local std::vector<long> cf;
    cf.assign(static_cast<std::size_t>(r * n), 0);
    for (long j = 0; j < r; ++j)
      for (long l = 0; l < n; ++l) {
        long acc = 0;
        for (long m = 0; m < n; ++m)
          acc += c[static_cast<std::size_t>(l * n + m)] *
                 f[static_cast<std::size_t>(j * n + m)];
        cf[static_cast<std::size_t>(j * n + l)] = acc;
      }
    for (long i = 0; i < r; ++i)
      for (long j = i; j < r; ++j) {
        long val = 0;
        for (long l = 0; l < n; ++l)
          val += f[static_cast<std::size_t>(i * n + l)] *
                 cf[static_cast<std::size_t>(j * n + l)];
        if (val % divisors[i] != 0) return false;
      }
    return true;
  }
};

}  // namespace detail

/// Exact P[F isotropic for C] for F uniform over Hom(R^n, G), by enumerating
/// all |G|^n maps and counting condition-(3) successes.
inline Rat isotropy_probability_exact(const ExactMatrix& c,
                                      const FiniteAbelianGroup& g,
                                      unsigned long modulus,
                                      const Int& enumeration_cap = Int(1)
                                          << 24) {
  if (!c.square()) throw std::invalid_argument("isotropy_probability: C shape");
  if (c.modulus() != modulus)
    throw std::invalid_argument("isotropy_probability: modulus mismatch");
  if (!is_alternating(c))
    throw std::invalid_argument("isotropy_probability: C not alternating");
  if (!g.is_finite() || (g.exponent() > 1 && Int(modulus) % g.exponent() != 0))
    throw std::invalid_argument("isotropy_probability: bad target group");
  const long n = c.rows();
  Int total;
  mpz_pow_ui(total.get_mpz_t(), order(g).get_mpz_t(),
             static_cast<unsigned long>(n));
  if (total > enumeration_cap)
    throw std::domain_error("isotropy_probability_exact: enumeration bound");

  const long r = g.rank();
  if (r == 0) return Rat(1);
  detail::Cond3Fast fast(g, c);
  std::vector<long> f(static_cast<std::size_t>(r * n), 0);
  Int count = 0, done = 0;
  for (;;) {
    if (fast.satisfied(f)) ++count;
    ++done;
    // odometer over all r x n digit matrices, digit (i, l) < d_i
    std::size_t idx = 0;
    for (; idx < f.size(); ++idx) {
      const long i = static_cast<long>(idx) / n;
      if (++f[idx] < fast.divisors[static_cast<std::size_t>(i)]) break;
      f[idx] = 0;
    }
    if (idx == f.size()) break;
  }
  if (done != total)
    throw std::logic_error("isotropy_probability_exact: enumeration mismatch");
  Rat out(count, total);
  out.canonicalize();
  return out;
}

/// Monte Carlo estimate of the same probability; trials consume stream
/// indices seed.stream_index, +1, +2, ...
inline MomentEstimate isotropy_probability_mc(const ExactMatrix& c,
                                              const FiniteAbelianGroup& g,
                                              unsigned long modulus,
                                              std::uint64_t trials,
                                              const SeedSpec& seed) {
  if (trials < 1)
    throw std::invalid_argument("isotropy_probability_mc: trials must be >= 1");
  if (c.modulus() != modulus)
    throw std::invalid_argument("isotropy_probability_mc: modulus mismatch");
  if (!is_alternating(c))
    throw std::invalid_argument("isotropy_probability_mc: C not alternating");
  const long n = c.rows(), r = g.rank();
  detail::Cond3Fast fast(g, c);
  detail::RunningStat stat;
  std::vector<long> f(static_cast<std::size_t>(std::max(r, 1L) * n), 0);
  for (std::uint64_t t = 0; t < trials; ++t) {
    const SeedSpec sd = seed.with_stream(seed.stream_index + t);
    for (long i = 0; i < r; ++i) {
      const std::uint64_t di = fast.divisors[static_cast<std::size_t>(i)];
      for (long j = 0; j < n; ++j) {
        auto st = rng::entry_stream(sd, i, j);
        f[static_cast<std::size_t>(i * n + j)] =
            static_cast<long>(st.uniform(di));
      }
    }
    stat.add(fast.satisfied(f) ? 1.0 : 0.0);
  }
  MomentEstimate est;
  est.mean = stat.mean();
  est.stderr_ = stat.stderr_();
  est.trials = trials;
  est.seed = seed;
  est.target_group = g;
  est.model_desc = "uniform map ensemble";
  return est;
}

/// Isotropy over the residue field: for C divisible by b = a/p and target a
/// free module (Z/a)^r, F is isotropic for C iff the image of F^* is an
/// isotropic subspace for the reduced form Cbar = (C/b) mod p.
inline bool finite_field_isotropy(const GroupMap& f, const ExactMatrix& c,
                                  const Int& p) {
  if (!is_probable_prime(p))
    throw std::invalid_argument("finite_field_isotropy: p not prime");
  const Int a(f.modulus());
  if (a % p != 0)
    throw std::invalid_argument("finite_field_isotropy: p does not divide a");
  const Int b = a / p;
  for (long i = 0; i < f.r(); ++i)
    if (f.target().divisors()[i] != a)
      throw std::invalid_argument(
          "finite_field_isotropy: target must be a free R-module (Z/a)^r");
  // Cbar = (C / b) mod p; entries of C must be divisible by b.
  const long n = f.n();
  ExactMatrix cbar(n, n, 0);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) {
      if (c.at(i, j) % b != 0)
        throw std::invalid_argument(
            "finite_field_isotropy: C is not divisible by a/p");
      Int v = (c.at(i, j) / b) % p;
      if (v < 0) v += p;
      cbar.set(i, j, v);
    }
  // V = im(Fbar^*) is spanned by the rows of F mod p; isotropy of V for Cbar
  // is the vanishing of Fbar . Cbar . Fbar^T over F_p.
  for (long i = 0; i < f.r(); ++i)
    for (long j = 0; j < f.r(); ++j) {
      Int acc = 0;
      for (long l = 0; l < n; ++l) {
        Int inner = 0;
        for (long m = 0; m < n; ++m) inner += cbar.at(l, m) * f.coord(j, m);
        acc += f.coord(i, l) * inner;
      }
      if (acc % p != 0) return false;
    }
  return true;
}

namespace detail {

// Subset enumeration helper: visits every size-k subset of {0..n-1}.
template <class Visit>
inline void for_each_subset(long n, long k, Visit visit) {
  std::vector<long> idx(static_cast<std::size_t>(k));
  for (long i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
  if (k == 0) {
    visit(idx);
    return;
  }
  for (;;) {
    visit(idx);
    long i = k - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) break;
    ++idx[static_cast<std::size_t>(i)];
    for (long j = i + 1; j < k; ++j)
      idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

inline Int binomial(long n, long k) {
  Int b;
  mpz_bin_uiui(b.get_mpz_t(), static_cast<unsigned long>(n),
               static_cast<unsigned long>(k));
  return b;
}

// [G : F(R^n_sigma)] where sigma is a set of deleted coordinates.
inline Int restricted_index(const GroupMap& f, const std::vector<long>& sigma) {
  const long r = f.target().rank();
  if (r == 0) return 1;
  std::vector<char> removed(static_cast<std::size_t>(f.n()), 0);
  for (long s : sigma) removed[static_cast<std::size_t>(s)] = 1;
  std::vector<long> keep;
  for (long j = 0; j < f.n(); ++j)
    if (!removed[static_cast<std::size_t>(j)]) keep.push_back(j);
  ExactMatrix aug(r, static_cast<long>(keep.size()) + r, 0);
  for (long i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < keep.size(); ++j)
      aug.set(i, static_cast<long>(j), f.coord(i, keep[j]));
    aug.set(i, static_cast<long>(keep.size()) + i, f.target().divisors()[i]);
  }
  Int index = 1;
  for (const auto& d : smith_normal_form(aug).diagonal) index *= d;
  return index;  // |G / im| = product of invariant factors of [F_sigma | d]
}

inline long little_omega(Int d) {  // number of prime factors with multiplicity
  long out = 0;
  for (const auto& [p, e] : factorize(d)) out += e;
  return out;
}

}  // namespace detail

/// True iff F stays surjective after deleting any fewer than w coordinates.
/// Monotonicity lets the check run on subsets of size exactly min(w-1, n).
inline bool code_distance_check(const GroupMap& f, long w,
                                const Int& enumeration_cap = Int(1) << 20) {
  if (w < 1) throw std::invalid_argument("code_distance_check: w < 1");
  const long s = std::min(w - 1, f.n());
  if (detail::binomial(f.n(), s) > enumeration_cap)
    throw std::domain_error("code_distance_check: enumeration bound");
  bool ok = true;
  detail::for_each_subset(f.n(), s, [&](const std::vector<long>& sigma) {
    if (ok && detail::restricted_index(f, sigma) != 1) ok = false;
  });
  return ok;
}

/// w-depth: the largest D = [G : F(R^n_sigma)] over subsets sigma with
/// #sigma < l(D) * w, where l counts prime factors with multiplicity; 1 when
/// no such subset exists.
inline Int w_depth(const GroupMap& f, long w,
                   const Int& enumeration_cap = Int(1) << 20) {
  if (w < 1) throw std::invalid_argument("w_depth: w < 1");
  const long lmax = detail::little_omega(order(f.target()));
  const long smax = std::min<long>(f.n(), lmax * w - 1);
  Int total = 0;
  for (long s = 0; s <= smax; ++s) total += detail::binomial(f.n(), s);
  if (total > enumeration_cap)
    throw std::domain_error("w_depth: enumeration bound");
  Int best = 1;
  for (long s = 0; s <= smax; ++s)
    detail::for_each_subset(f.n(), s, [&](const std::vector<long>& sigma) {
      Int d = detail::restricted_index(f, sigma);
      if (d > 1 && s < detail::little_omega(d) * w && d > best) best = d;
    });
  return best;
}

}  // namespace csym
