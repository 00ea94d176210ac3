#pragma once

// Exact evaluation of the limiting objects: Cohen-Lenstra and sandpile
// probabilities on finite abelian p-groups, and the moment formulas they
// satisfy. Infinite products are truncated with an explicit tail bound.

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "csym/group.hpp"

namespace csym {

/// Truncated infinite-product value with a rigorous relative tail bound.
struct ProductValue {
  double value = 0.0;
  double tail_bound = 0.0;
};

struct LimitDistribution {
  enum class Kind { cohen_lenstra, sandpile };
  Kind kind = Kind::cohen_lenstra;
  Int p = 2;
  long u = 0;                  // cohen_lenstra only
  double truncation = 1e-12;

  static LimitDistribution cohen_lenstra(Int p, long u,
                                         double truncation = 1e-12) {
    return {Kind::cohen_lenstra, std::move(p), u, truncation};
  }
  static LimitDistribution sandpile(Int p, double truncation = 1e-12) {
    return {Kind::sandpile, std::move(p), 0, truncation};
  }

  std::string describe() const {
    std::string s = kind == Kind::cohen_lenstra ? "cl" : "sandpile";
    s += "(p=" + p.get_str();
    if (kind == Kind::cohen_lenstra) s += ",u=" + std::to_string(u);
    return s + ")";
  }
};

inline bool is_p_group(const FiniteAbelianGroup& g, const Int& p) {
  if (!g.is_finite()) return false;
  for (const auto& d : g.divisors()) {
    Int rest = d;
    while (rest % p == 0) rest /= p;
    if (rest != 1) return false;
  }
  return true;
}

namespace detail {

// prod_{k>=k0} (1 - p^-(s*k + off)) with s, off integers; stops once factors
// are within tol of 1 and reports the remaining tail (geometric series bound).
inline ProductValue truncated_product(const Int& p, long s, long off, long k0,
                                      double tol) {
  const double pd = p.get_d();
  long double value = 1.0L;
  long k = k0;
  long double x;
  for (;;) {
    x = std::pow((long double)pd, -(long double)(s * k + off));
    if (x < tol) break;
    value *= (1.0L - x);
    ++k;
    if (k > 1'000'000) break;
  }
  // remaining factors: |log prod| <= sum x_j <= x / (1 - p^-s)
  long double tail = x / (1.0L - std::pow((long double)pd, -(long double)s));
  ProductValue out;
  out.value = static_cast<double>(value);
  out.tail_bound = static_cast<double>(value * tail * 1.0000001L) +
                   std::numeric_limits<double>::epsilon();
  return out;
}

}  // namespace detail

/// P[Gamma_CL^(p,u) = G] = prod_{k>=1}(1 - p^-k-u) / (|G|^u |Aut G|).
inline ProductValue cl_probability(const FiniteAbelianGroup& g, const Int& p,
                                   long u, double truncation = 1e-12) {
  if (!is_p_group(g, p))
    throw std::invalid_argument("cl_probability: G is not a p-group");
  if (u < 0) throw std::invalid_argument("cl_probability: u < 0");
  ProductValue prod = detail::truncated_product(p, 1, u, 1, truncation);
  Int og = order(g), pw;
  mpz_pow_ui(pw.get_mpz_t(), og.get_mpz_t(), static_cast<unsigned long>(u));
  Int denom = pw * aut_order(g);
  ProductValue out;
  out.value = prod.value / denom.get_d();
  out.tail_bound = prod.tail_bound / denom.get_d();
  return out;
}

/// Number of symmetric, bilinear, perfect pairings G x G -> Q/Z, by direct
/// enumeration of symmetric Gram matrices. Memoized; brute-force bound on
/// order(G) keeps this honest and affordable.
inline Int count_perfect_symmetric_pairings(const FiniteAbelianGroup& g,
                                            unsigned long order_bound = 64) {
  if (!g.is_finite())
    throw std::domain_error("count_perfect_symmetric_pairings: infinite group");
  if (order(g) > order_bound)
    throw std::domain_error("count_perfect_symmetric_pairings: bound exceeded");
  if (g.is_trivial()) return 1;

  static std::map<std::string, Int> cache;
  static std::mutex mu;
  const auto key = format_group(g);
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }

  const auto& dv = g.divisors();
  const long r = g.rank();
  std::vector<long> d(r);
  for (long i = 0; i < r; ++i) d[i] = dv[i].get_si();

  // A pairing is a symmetric Gram matrix with b_ij in Z/gcd(d_i, d_j),
  // phi(e_i, e_j) = b_ij / gcd(d_i, d_j) in Q/Z. It is perfect iff the
  // induced map G -> Hom(G, Q/Z), e_i -> (t_ji)_j with
  // t_ji = b_ij * (d_j / gcd(d_i, d_j)) mod d_j, is bijective; by Nakayama
  // this reduces to invertibility of the induced matrix mod p for every
  // prime p dividing |G|.
  std::vector<std::pair<long, long>> slots;  // i <= j
  std::vector<long> slot_mod;
  for (long i = 0; i < r; ++i)
    for (long j = i; j < r; ++j) {
      slots.emplace_back(i, j);
      slot_mod.push_back(std::min(d[i], d[j]));  // = gcd along the chain
    }
  std::vector<long> primes;
  for (const auto& [p, e] : factorize(order(g))) primes.push_back(p.get_si());

  std::vector<long> b(slots.size(), 0);
  std::vector<std::vector<long>> gram(r, std::vector<long>(r, 0));
  std::vector<long> work;

  auto invertible_mod_p = [&](long p) {
    std::vector<long> idx;
    for (long i = 0; i < r; ++i)
      if (d[i] % p == 0) idx.push_back(i);
    const long m = static_cast<long>(idx.size());
    work.assign(static_cast<std::size_t>(m * m), 0);
    for (long jr = 0; jr < m; ++jr)
      for (long ic = 0; ic < m; ++ic) {
        const long i = idx[ic], j = idx[jr];
        const long gij = std::min(d[i], d[j]);
        work[static_cast<std::size_t>(jr * m + ic)] =
            gram[i][j] % p * ((d[j] / gij) % p) % p;
      }
    long rank = 0;
    for (long col = 0; col < m; ++col) {
      long piv = -1;
      for (long i = rank; i < m; ++i)
        if (work[static_cast<std::size_t>(i * m + col)] % p != 0) {
          piv = i;
          break;
        }
      if (piv < 0) return false;
      for (long j = 0; j < m; ++j)
        std::swap(work[static_cast<std::size_t>(rank * m + j)],
                  work[static_cast<std::size_t>(piv * m + j)]);
      long inv = 1;
      for (long t = 1; t < p; ++t)
        if (work[static_cast<std::size_t>(rank * m + col)] * t % p == 1)
          inv = t;
      for (long j = 0; j < m; ++j)
        work[static_cast<std::size_t>(rank * m + j)] =
            work[static_cast<std::size_t>(rank * m + j)] * inv % p;
      for (long i = rank + 1; i < m; ++i) {
        const long f = work[static_cast<std::size_t>(i * m + col)];
        if (f == 0) continue;
        for (long j = 0; j < m; ++j)
          work[static_cast<std::size_t>(i * m + j)] =
              ((work[static_cast<std::size_t>(i * m + j)] -
                f * work[static_cast<std::size_t>(rank * m + j)]) %
                   p +
               p) %
              p;
      }
      ++rank;
    }
    return rank == m;
  };

  Int count = 0;
  for (;;) {
    for (std::size_t s = 0; s < slots.size(); ++s) {
      gram[slots[s].first][slots[s].second] = b[s];
      gram[slots[s].second][slots[s].first] = b[s];
    }
    bool perfect = true;
    for (long p : primes)
      if (!invertible_mod_p(p)) {
        perfect = false;
        break;
      }
    if (perfect) ++count;

    std::size_t s = 0;
    for (; s < slots.size(); ++s) {
      if (++b[s] < slot_mod[s]) break;
      b[s] = 0;
    }
    if (s == slots.size()) break;
  }

  std::lock_guard<std::mutex> lock(mu);
  return cache.emplace(key, std::move(count)).first->second;
}

/// P[Gamma_sandpile^(p) = G] = #pairings(G)/(|G| |Aut G|) *
/// prod_{k>=1}(1 - p^(1-2k)).
inline ProductValue sandpile_probability(const FiniteAbelianGroup& g,
                                         const Int& p,
                                         double truncation = 1e-12,
                                         unsigned long pairing_bound = 64) {
  if (!is_p_group(g, p))
    throw std::invalid_argument("sandpile_probability: G is not a p-group");
  ProductValue prod = detail::truncated_product(p, 2, -1, 1, truncation);
  Int denom = order(g) * aut_order(g);
  Int pairings = count_perfect_symmetric_pairings(g, pairing_bound);
  ProductValue out;
  out.value = prod.value * pairings.get_d() / denom.get_d();
  out.tail_bound = prod.tail_bound * pairings.get_d() / denom.get_d();
  return out;
}

/// E[#Sur(Gamma_CL^(u), G)] = |G|^-u.
inline Rat cl_moment(const FiniteAbelianGroup& g, long u) {
  if (u < 0) throw std::invalid_argument("cl_moment: u < 0");
  Int og = order(g), pw;
  mpz_pow_ui(pw.get_mpz_t(), og.get_mpz_t(), static_cast<unsigned long>(u));
  Rat r(Int(1), pw);
  r.canonicalize();
  return r;
}

/// E[#Sur(Gamma_sandpile, G)] = |wedge^2 G|.
inline Int sandpile_moment(const FiniteAbelianGroup& g) {
  return exterior_square_order(g);
}

/// |wedge^2 G[h]|, the limiting moment for C-symmetric ensembles of content h.
inline Int h_moment(const FiniteAbelianGroup& g, const Int& h) {
  return exterior_square_order(torsion_of_order_dividing(g, h));
}

/// |wedge^2 G[h]| / |wedge^2 G|, the limiting isotropy probability.
inline Rat isotropy_fraction_limit(const FiniteAbelianGroup& g, const Int& h) {
  Rat r(h_moment(g, h), sandpile_moment(g));
  r.canonicalize();
  return r;
}

/// All finite abelian p-groups of order <= p^max_exponent, enumerated by
/// order and, within an order, by partition in a fixed lexicographic order.
inline std::vector<FiniteAbelianGroup> p_groups_up_to(const Int& p,
                                                      long max_exponent) {
  std::vector<FiniteAbelianGroup> out;
  std::vector<long> parts;
  auto emit = [&]() {
    std::vector<Int> dd;
    for (long e : parts) {
      Int pw;
      mpz_pow_ui(pw.get_mpz_t(), p.get_mpz_t(), static_cast<unsigned long>(e));
      dd.push_back(pw);
    }
    out.emplace_back(std::move(dd));
  };
  // Partitions of e with parts listed in non-increasing order.
  std::function<void(long, long)> rec = [&](long remaining, long max_part) {
    if (remaining == 0) {
      emit();
      return;
    }
    for (long part = std::min(remaining, max_part); part >= 1; --part) {
      parts.push_back(part);
      rec(remaining - part, part);
      parts.pop_back();
    }
  };
  for (long e = 0; e <= max_exponent; ++e) rec(e, e);
  return out;
}

}  // namespace csym
