#pragma once

// Exact algebra of finitely generated abelian groups: canonical invariant
// factors, subgroup enumeration, and Hom/Sur/Aut counting.

#include <gmpxx.h>

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace csym {

using Int = mpz_class;
using Rat = mpq_class;

/// A finitely generated abelian group Z^f x Z/d_1 x ... x Z/d_r in canonical
/// invariant-factor form: 2 <= d_1 | d_2 | ... | d_r. Two values are equal
/// iff their divisor chains and free ranks are equal.
class FiniteAbelianGroup {
 public:
  FiniteAbelianGroup() = default;

  /// Builds the group from an arbitrary multiset of cyclic orders. An order
  /// of 0 denotes a free Z factor, an order of 1 a trivial factor (dropped).
  explicit FiniteAbelianGroup(std::vector<Int> cyclic_orders, long free_rank = 0)
      : free_rank_(free_rank) {
    if (free_rank < 0) throw std::invalid_argument("negative free rank");
    for (auto& d : cyclic_orders) {
      if (d < 0) d = -d;
      if (d == 0)
        ++free_rank_;
      else if (d > 1)
        divisors_.push_back(d);
    }
    canonicalize();
  }

  static FiniteAbelianGroup trivial() { return FiniteAbelianGroup(); }

  static FiniteAbelianGroup cyclic(const Int& d) {
    return FiniteAbelianGroup(std::vector<Int>{d});
  }

  const std::vector<Int>& divisors() const { return divisors_; }
  long free_rank() const { return free_rank_; }
  bool is_trivial() const { return divisors_.empty() && free_rank_ == 0; }
  bool is_finite() const { return free_rank_ == 0; }

  /// Number of invariant factors (torsion generators).
  long rank() const { return static_cast<long>(divisors_.size()); }

  /// Exponent of the torsion part (1 for a torsion-free group).
  Int exponent() const { return divisors_.empty() ? Int(1) : divisors_.back(); }

  bool operator==(const FiniteAbelianGroup& o) const {
    return free_rank_ == o.free_rank_ && divisors_ == o.divisors_;
  }
  bool operator!=(const FiniteAbelianGroup& o) const { return !(*this == o); }
  bool operator<(const FiniteAbelianGroup& o) const {
    if (free_rank_ != o.free_rank_) return free_rank_ < o.free_rank_;
    return divisors_ < o.divisors_;
  }

 private:
  void canonicalize() {
    std::sort(divisors_.begin(), divisors_.end());
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t i = 0; i + 1 < divisors_.size(); ++i) {
        if (divisors_[i + 1] % divisors_[i] != 0) {
          Int g = gcd(divisors_[i], divisors_[i + 1]);
          Int l = divisors_[i] / g * divisors_[i + 1];
          divisors_[i] = g;
          divisors_[i + 1] = l;
          changed = true;
        }
      }
      if (changed) std::sort(divisors_.begin(), divisors_.end());
    }
    while (!divisors_.empty() && divisors_.front() == 1)
      divisors_.erase(divisors_.begin());
  }

  std::vector<Int> divisors_;
  long free_rank_ = 0;
};

/// |G|. Rejects infinite groups.
inline Int order(const FiniteAbelianGroup& g) {
  if (!g.is_finite()) throw std::domain_error("order: group is infinite");
  Int n = 1;
  for (const auto& d : g.divisors()) n *= d;
  return n;
}

/// |wedge^2 G| = prod_i d_i^(r-i) for the ascending chain d_1 | ... | d_r.
inline Int exterior_square_order(const FiniteAbelianGroup& g) {
  if (!g.is_finite())
    throw std::domain_error("exterior_square_order: group is infinite");
  Int out = 1;
  const auto& d = g.divisors();
  const std::size_t r = d.size();
  for (std::size_t i = 0; i < r; ++i) {
    Int pw;
    mpz_pow_ui(pw.get_mpz_t(), d[i].get_mpz_t(),
               static_cast<unsigned long>(r - 1 - i));
    out *= pw;
  }
  return out;
}

/// G[h]: the subgroup of elements of order dividing h (the free part
/// contributes nothing). Result is finite with divisors gcd(d_i, h).
inline FiniteAbelianGroup torsion_of_order_dividing(const FiniteAbelianGroup& g,
                                                    const Int& h) {
  if (h < 1) throw std::invalid_argument("torsion_of_order_dividing: h < 1");
  std::vector<Int> dd;
  dd.reserve(g.divisors().size());
  for (const auto& d : g.divisors()) dd.push_back(gcd(d, h));
  return FiniteAbelianGroup(std::move(dd));
}

inline bool is_probable_prime(const Int& p) {
  return p > 1 && mpz_probab_prime_p(p.get_mpz_t(), 32) > 0;
}

/// Complete factorization by trial division; adequate for the small moduli
/// this library works with.
inline std::map<Int, long> factorize(Int n) {
  std::map<Int, long> out;
  if (n < 0) n = -n;
  for (Int p = 2; p * p <= n; ++p)
    while (n % p == 0) {
      ++out[p];
      n /= p;
    }
  if (n > 1) ++out[n];
  return out;
}

/// p-Sylow subgroup G_p.
inline FiniteAbelianGroup sylow(const FiniteAbelianGroup& g, const Int& p) {
  if (!g.is_finite()) throw std::domain_error("sylow: group is infinite");
  if (!is_probable_prime(p)) throw std::invalid_argument("sylow: p not prime");
  std::vector<Int> dd;
  for (const auto& d : g.divisors()) {
    Int part = 1, rest = d;
    while (rest % p == 0) {
      part *= p;
      rest /= p;
    }
    if (part > 1) dd.push_back(part);
  }
  return FiniteAbelianGroup(std::move(dd));
}

/// G (x) Z/aZ: divisors gcd(d_i, a), each free factor contributing Z/a.
inline FiniteAbelianGroup tensor_mod(const FiniteAbelianGroup& g, const Int& a) {
  if (a < 1) throw std::invalid_argument("tensor_mod: a < 1");
  std::vector<Int> dd;
  for (const auto& d : g.divisors()) dd.push_back(gcd(d, a));
  for (long i = 0; i < g.free_rank(); ++i) dd.push_back(a);
  return FiniteAbelianGroup(std::move(dd));
}

/// #Hom(G, H) = prod_{i,j} gcd(d_i, e_j) * |H|^free_rank(G). H must be finite.
inline Int count_hom(const FiniteAbelianGroup& g, const FiniteAbelianGroup& h) {
  if (!h.is_finite()) throw std::domain_error("count_hom: infinite target");
  Int out = 1;
  for (const auto& dg : g.divisors())
    for (const auto& dh : h.divisors()) out *= gcd(dg, dh);
  if (g.free_rank() > 0) {
    Int oh = order(h), pw;
    mpz_pow_ui(pw.get_mpz_t(), oh.get_mpz_t(),
               static_cast<unsigned long>(g.free_rank()));
    out *= pw;
  }
  return out;
}

/// One subgroup of a finite group H, as element indices in mixed-radix
/// coordinates over H's divisor chain, together with its isomorphism type.
struct Subgroup {
  std::vector<int> elements;  // sorted element indices, always contains 0
  FiniteAbelianGroup type;
};

namespace detail {

// Mixed-radix element arithmetic for a finite group given by its divisors.
struct ElementTable {
  std::vector<long> radix;
  std::vector<long> stride;
  long size = 1;

  explicit ElementTable(const FiniteAbelianGroup& h) {
    for (const auto& d : h.divisors()) {
      if (!d.fits_slong_p())
        throw std::domain_error("subgroup enumeration: divisor too large");
      radix.push_back(d.get_si());
    }
    stride.resize(radix.size());
    for (std::size_t i = 0; i < radix.size(); ++i) {
      stride[i] = size;
      size *= radix[i];
    }
  }

  int add(int x, int y) const {
    long out = 0;
    for (std::size_t i = 0; i < radix.size(); ++i) {
      long xi = (x / stride[i]) % radix[i];
      long yi = (y / stride[i]) % radix[i];
      out += ((xi + yi) % radix[i]) * stride[i];
    }
    return static_cast<int>(out);
  }

  int scale(int x, const Int& k) const {
    long out = 0;
    for (std::size_t i = 0; i < radix.size(); ++i) {
      long xi = (x / stride[i]) % radix[i];
      Int v = (Int(xi) * k) % radix[i];
      out += v.get_si() * stride[i];
    }
    return static_cast<int>(out);
  }
};

// Isomorphism type of a subgroup from element-order statistics: for each
// prime p, |S[p^j]| determines the conjugate of the exponent partition.
inline FiniteAbelianGroup type_from_elements(const ElementTable& tab,
                                             const std::vector<int>& elems) {
  const Int n(static_cast<long>(elems.size()));
  if (n == 1) return FiniteAbelianGroup::trivial();
  std::map<Int, std::vector<long>> parts_by_prime;  // prime -> descending parts
  for (const auto& [p, unused] : factorize(n)) {
    std::vector<long> m{0};  // m[j] = v_p(|S[p^j]|)
    Int pj = 1;
    while (true) {
      pj *= p;
      long cnt = 0;
      for (int e : elems)
        if (tab.scale(e, pj) == 0) ++cnt;
      long v = 0;
      Int c(cnt);
      while (c % p == 0) {
        c /= p;
        ++v;
      }
      if (v == m.back()) break;  // stabilized
      m.push_back(v);
    }
    std::vector<long> conj;  // conj[j] = number of parts >= j+1
    for (std::size_t j = 1; j < m.size(); ++j) conj.push_back(m[j] - m[j - 1]);
    const long nparts = conj.empty() ? 0 : conj[0];
    std::vector<long> parts;
    for (long i = 0; i < nparts; ++i) {
      long part = 0;
      for (std::size_t j = 0; j < conj.size(); ++j)
        if (conj[j] > i) part = static_cast<long>(j) + 1;
      parts.push_back(part);
    }
    parts_by_prime[p] = parts;
  }
  std::size_t max_parts = 0;
  for (const auto& [p, parts] : parts_by_prime)
    max_parts = std::max(max_parts, parts.size());
  std::vector<Int> dd;
  for (std::size_t k = 0; k < max_parts; ++k) {
    Int d = 1;
    for (const auto& [p, parts] : parts_by_prime)
      if (k < parts.size()) {
        Int pw;
        mpz_pow_ui(pw.get_mpz_t(), p.get_mpz_t(),
                   static_cast<unsigned long>(parts[k]));
        d *= pw;
      }
    dd.push_back(d);
  }
  return FiniteAbelianGroup(std::move(dd));
}

}  // namespace detail

/// Group literal: "2,4" is Z/2 x Z/4, "2,4;free=1" adds a Z summand,
/// "1" is the trivial group.
inline std::string format_group(const FiniteAbelianGroup& g) {
  std::ostringstream os;
  if (g.divisors().empty())
    os << "1";
  else
    for (std::size_t i = 0; i < g.divisors().size(); ++i) {
      if (i) os << ",";
      os << g.divisors()[i];
    }
  if (g.free_rank() > 0) os << ";free=" << g.free_rank();
  return os.str();
}

inline FiniteAbelianGroup parse_group(const std::string& text) {
  std::string s;
  for (char c : text)
    if (!isspace(static_cast<unsigned char>(c))) s += c;
  long free_rank = 0;
  auto semi = s.find(';');
  if (semi != std::string::npos) {
    std::string tail = s.substr(semi + 1);
    if (tail.rfind("free=", 0) != 0)
      throw std::invalid_argument("group literal: expected ';free=k'");
    free_rank = std::stol(tail.substr(5));
    s = s.substr(0, semi);
  }
  std::vector<Int> dd;
  std::size_t pos = 0;
  while (pos < s.size()) {
    auto comma = s.find(',', pos);
    std::string tok = s.substr(
        pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (tok.empty()) throw std::invalid_argument("group literal: empty factor");
    dd.emplace_back(tok);
    if (dd.back() < 1)
      throw std::invalid_argument("group literal: factor must be >= 1");
    pos = (comma == std::string::npos) ? s.size() : comma + 1;
  }
  return FiniteAbelianGroup(std::move(dd), free_rank);
}

/// Every subgroup of a finite H with order(H) <= order_bound, each listed
/// exactly once with its isomorphism type. Memoized per isomorphism type.
inline std::vector<Subgroup> enumerate_subgroups(const FiniteAbelianGroup& h,
                                                 unsigned long order_bound =
                                                     10000) {
  if (!h.is_finite())
    throw std::domain_error("enumerate_subgroups: infinite group");
  if (order(h) > order_bound)
    throw std::domain_error("enumerate_subgroups: order bound exceeded");

  static std::map<std::string, std::vector<Subgroup>> cache;
  static std::mutex mu;
  const auto key = format_group(h);
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }

  detail::ElementTable tab(h);
  std::vector<std::vector<int>> known{{0}};
  std::map<std::vector<int>, std::size_t> seen{{{0}, 0}};
  // BFS closure: extend each known subgroup by one new element. Since the
  // base is closed, base + <x> is swept out coset by coset.
  for (std::size_t head = 0; head < known.size(); ++head) {
    const std::vector<int> base = known[head];
    std::vector<char> in_base(tab.size, 0);
    for (int e : base) in_base[e] = 1;
    for (int x = 1; x < tab.size; ++x) {
      if (in_base[x]) continue;
      std::vector<char> mark(tab.size, 0);
      std::vector<int> gen;
      int shift = 0;
      while (!mark[shift]) {
        for (int s : base) {
          int e = tab.add(s, shift);
          if (!mark[e]) {
            mark[e] = 1;
            gen.push_back(e);
          }
        }
        shift = tab.add(shift, x);
      }
      std::sort(gen.begin(), gen.end());
      if (seen.emplace(gen, known.size()).second) known.push_back(gen);
    }
  }
  std::vector<Subgroup> out;
  out.reserve(known.size());
  for (auto& elems : known)
    out.push_back(Subgroup{elems, detail::type_from_elements(tab, elems)});
  std::sort(out.begin(), out.end(), [](const Subgroup& a, const Subgroup& b) {
    if (a.elements.size() != b.elements.size())
      return a.elements.size() < b.elements.size();
    return a.elements < b.elements;
  });
  std::lock_guard<std::mutex> lock(mu);
  return cache.emplace(key, std::move(out)).first->second;
}

/// #Sur(G, H) by subgroup-lattice recursion:
/// #Sur(G,H) = #Hom(G,H) - sum over proper subgroups K < H of #Sur(G,K).
inline Int count_sur(const FiniteAbelianGroup& g, const FiniteAbelianGroup& h,
                     unsigned long order_bound = 10000) {
  if (!h.is_finite()) throw std::domain_error("count_sur: infinite target");
  if (h.is_trivial()) return 1;

  static std::map<std::pair<std::string, std::string>, Int> cache;
  static std::mutex mu;
  const auto key = std::make_pair(format_group(g), format_group(h));
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  const Int oh = order(h);
  Int total = count_hom(g, h);
  for (const auto& sub : enumerate_subgroups(h, order_bound)) {
    if (Int(static_cast<long>(sub.elements.size())) == oh) continue;
    total -= count_sur(g, sub.type, order_bound);
  }
  std::lock_guard<std::mutex> lock(mu);
  return cache.emplace(key, std::move(total)).first->second;
}

/// |Aut(G)| for finite G, multiplicative over Sylow subgroups, via the
/// standard abelian p-group automorphism count.
inline Int aut_order(const FiniteAbelianGroup& g) {
  if (!g.is_finite()) throw std::domain_error("aut_order: group is infinite");
  if (g.is_trivial()) return 1;

  std::map<Int, std::vector<long>> exps;  // prime -> ascending exponents
  for (const auto& d : g.divisors())
    for (const auto& [p, e] : factorize(d)) exps[p].push_back(e);

  Int out = 1;
  for (auto& [p, ee] : exps) {
    std::sort(ee.begin(), ee.end());
    const long n = static_cast<long>(ee.size());
    std::vector<long> dmax(n), cmin(n);  // 1-based run boundaries
    for (long k = 0; k < n; ++k) {
      long d = k, c = k;
      while (d + 1 < n && ee[d + 1] == ee[k]) ++d;
      while (c - 1 >= 0 && ee[c - 1] == ee[k]) --c;
      dmax[k] = d + 1;
      cmin[k] = c + 1;
    }
    auto ppow = [&p](long e) {
      Int pw;
      mpz_pow_ui(pw.get_mpz_t(), p.get_mpz_t(), static_cast<unsigned long>(e));
      return pw;
    };
    for (long k = 0; k < n; ++k) out *= ppow(dmax[k]) - ppow(k);
    for (long j = 0; j < n; ++j) out *= ppow(ee[j] * (n - dmax[j]));
    for (long i = 0; i < n; ++i) out *= ppow((ee[i] - 1) * (n - cmin[i] + 1));
  }
  return out;
}

}  // namespace csym
