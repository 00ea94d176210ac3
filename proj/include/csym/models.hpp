#pragma once

// Seeded samplers for the random matrix ensembles under study. Every draw is
// a pure function of (model, seed, entry position), so trials and entries are
// order-independent and reproducible across platforms.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "csym/matrix.hpp"

namespace csym {

/// (base_seed, stream_index) pins down one full entry stream; distinct
/// stream indices give statistically independent streams.
struct SeedSpec {
  std::uint64_t base_seed = 0;
  std::uint64_t stream_index = 0;

  SeedSpec with_stream(std::uint64_t s) const { return {base_seed, s}; }
};

namespace rng {

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

struct Splitmix {
  std::uint64_t state = 0;
  std::uint64_t next() { return mix64(state += 0x9E3779B97F4A7C15ULL); }

  std::uint64_t uniform(std::uint64_t n) {  // unbiased via rejection
    const std::uint64_t lim = n == 0 ? 0 : (0 - n) % n;  // 2^64 mod n
    std::uint64_t u;
    do {
      u = next();
    } while (u < lim);
    return u % n;
  }

  bool bernoulli_threshold(std::uint64_t threshold) {  // P = threshold / 2^64
    return next() < threshold;
  }
};

// Counter-style keyed stream for one matrix entry.
inline Splitmix entry_stream(const SeedSpec& sd, std::uint64_t row,
                             std::uint64_t col, std::uint64_t lane = 0) {
  std::uint64_t k = mix64(sd.base_seed ^ 0x243F6A8885A308D3ULL);
  k = mix64(k ^ sd.stream_index);
  k = mix64(k ^ row);
  k = mix64(k ^ col);
  k = mix64(k ^ lane);
  return Splitmix{k};
}

}  // namespace rng

/// Finite-support entry distribution with an epsilon-balancedness
/// certificate computed on demand.
class EntryDistribution {
 public:
  enum class Kind { uniform_mod, two_point, uniform_range };

  static EntryDistribution uniform_mod() {
    EntryDistribution d;
    d.kind_ = Kind::uniform_mod;
    return d;
  }

  /// Values v0 and v1 with P[v1] = prob1, prob1 strictly inside (0, 1).
  static EntryDistribution two_point(long v0, long v1, Rat prob1) {
    prob1.canonicalize();
    if (prob1 <= 0 || prob1 >= 1)
      throw std::invalid_argument("two_point: prob1 must be in (0,1)");
    if (v0 == v1) throw std::invalid_argument("two_point: equal values");
    EntryDistribution d;
    d.kind_ = Kind::two_point;
    d.v0_ = v0;
    d.v1_ = v1;
    d.prob1_ = prob1;
    Rat t = prob1 * Rat(Int(1) << 64);
    Int num = t.get_num() / t.get_den();
    d.threshold_ = num.fits_ulong_p() ? num.get_ui() : UINT64_MAX;
    return d;
  }

  static EntryDistribution uniform_range(long lo, long hi) {
    if (lo > hi) throw std::invalid_argument("uniform_range: lo > hi");
    EntryDistribution d;
    d.kind_ = Kind::uniform_range;
    d.v0_ = lo;
    d.v1_ = hi;
    return d;
  }

  Kind kind() const { return kind_; }
  long v0() const { return v0_; }
  long v1() const { return v1_; }
  const Rat& prob1() const { return prob1_; }

  long draw(rng::Splitmix& g, unsigned long modulus) const {
    switch (kind_) {
      case Kind::uniform_mod:
        if (modulus == 0)
          throw std::domain_error("uniform_mod entry draw needs a modulus");
        return static_cast<long>(g.uniform(modulus));
      case Kind::two_point:
        return g.bernoulli_threshold(threshold_) ? v1_ : v0_;
      case Kind::uniform_range:
        return v0_ + static_cast<long>(
                         g.uniform(static_cast<std::uint64_t>(v1_ - v0_) + 1));
    }
    return 0;
  }

  std::string describe() const {
    std::ostringstream os;
    switch (kind_) {
      case Kind::uniform_mod:
        os << "uniform_mod";
        break;
      case Kind::two_point:
        os << "two_point:" << v0_ << "," << v1_ << "," << prob1_.get_num()
           << "/" << prob1_.get_den();
        break;
      case Kind::uniform_range:
        os << "uniform_range:" << v0_ << "," << v1_;
        break;
    }
    return os.str();
  }

 private:
  Kind kind_ = Kind::uniform_range;
  long v0_ = 0, v1_ = 1;
  Rat prob1_ = Rat(1, 2);
  std::uint64_t threshold_ = (std::uint64_t)1 << 63;
};

/// Largest certified epsilon such that no residue class modulo any maximal
/// ideal of the ring carries mass above 1 - epsilon. nullopt means the
/// distribution is not balanced at all (some class has full mass).
inline std::optional<Rat> check_balanced(const EntryDistribution& dist,
                                         unsigned long modulus) {
  std::vector<Int> primes;
  if (modulus >= 2)
    for (const auto& [p, e] : factorize(Int(modulus))) primes.push_back(p);

  switch (dist.kind()) {
    case EntryDistribution::Kind::uniform_mod: {
      if (modulus == 0)
        throw std::domain_error("uniform_mod requires a modular ring");
      if (modulus == 1) return Rat(1);  // zero ring, vacuous
      // Each class mod p has mass 1/p; the binding prime is the smallest.
      Rat eps(1);
      for (const auto& p : primes) {
        Rat cand = Rat(1) - Rat(1, p);
        if (cand < eps) eps = cand;
      }
      return eps;
    }
    case EntryDistribution::Kind::two_point: {
      const Int diff = Int(dist.v1()) - Int(dist.v0());
      if (modulus == 0) {
        // Some prime divides any |diff| != 1, collapsing the two classes.
        if (abs(diff) != 1) return std::nullopt;
      } else {
        if (modulus == 1) return Rat(1);
        for (const auto& p : primes)
          if (diff % p == 0) return std::nullopt;
      }
      Rat q = dist.prob1();
      Rat one_minus_q = Rat(1) - q;
      return q < one_minus_q ? q : one_minus_q;
    }
    case EntryDistribution::Kind::uniform_range: {
      const long s = dist.v1() - dist.v0() + 1;
      if (s == 1) return std::nullopt;  // constant
      if (modulus == 1) return Rat(1);
      // s consecutive integers put at most ceil(s/p) values in one class.
      auto eps_at = [&](const Int& p) -> Rat {
        Int cl = (Int(s) + p - 1) / p;
        Rat mass(cl, Int(s));
        mass.canonicalize();
        Rat out = Rat(1) - mass;
        return out;
      };
      if (modulus == 0) return eps_at(2);  // p = 2 is the worst prime
      Rat eps(1);
      for (const auto& p : primes) {
        Rat cand = eps_at(p);
        if (cand < eps) eps = cand;
      }
      return eps;
    }
  }
  return std::nullopt;
}

struct CornerUnit {
  long row = 0, col = 0;
  long unit = 1;
};

/// Declarative description of one random matrix ensemble.
struct MatrixModel {
  enum class Kind {
    iid,
    symmetric,
    c_symmetric,
    symmetric_mod_h,
    corner_perturbed,
    alternating_uniform
  };

  Kind kind = Kind::iid;
  long n = 0;          // row count (and column count except for iid)
  long m = 0;          // column count (iid only)
  unsigned long modulus = 0;
  EntryDistribution dist = EntryDistribution::uniform_range(0, 1);
  EntryDistribution dist2 = EntryDistribution::uniform_range(0, 1);
  std::optional<ExactMatrix> c;       // c_symmetric
  std::vector<CornerUnit> corners;    // corner_perturbed
  Int h = 1;                          // symmetric_mod_h
  long corner_size = 0;               // alternating_uniform support corner

  static EntryDistribution default_dist(unsigned long modulus) {
    return modulus == 0 ? EntryDistribution::uniform_range(0, 1)
                        : EntryDistribution::uniform_mod();
  }

  static MatrixModel iid_model(long n, long m, unsigned long modulus,
                               std::optional<EntryDistribution> dist =
                                   std::nullopt) {
    MatrixModel mm;
    mm.kind = Kind::iid;
    mm.n = n;
    mm.m = m;
    mm.modulus = modulus;
    mm.dist = dist.value_or(default_dist(modulus));
    mm.validate();
    return mm;
  }

  static MatrixModel symmetric(long n, unsigned long modulus,
                               std::optional<EntryDistribution> dist =
                                   std::nullopt) {
    MatrixModel mm;
    mm.kind = Kind::symmetric;
    mm.n = n;
    mm.m = n;
    mm.modulus = modulus;
    mm.dist = dist.value_or(default_dist(modulus));
    mm.validate();
    return mm;
  }

  static MatrixModel c_symmetric(const ExactMatrix& c,
                                 std::optional<EntryDistribution> dist =
                                     std::nullopt) {
    MatrixModel mm;
    mm.kind = Kind::c_symmetric;
    mm.n = c.rows();
    mm.m = c.rows();
    mm.modulus = c.modulus();
    mm.dist = dist.value_or(default_dist(c.modulus()));
    mm.c = c;
    mm.validate();
    return mm;
  }

  static MatrixModel symmetric_mod_h(long n, unsigned long modulus, Int h,
                                     std::optional<EntryDistribution> dist =
                                         std::nullopt,
                                     std::optional<EntryDistribution> dist2 =
                                         std::nullopt) {
    MatrixModel mm;
    mm.kind = Kind::symmetric_mod_h;
    mm.n = n;
    mm.m = n;
    mm.modulus = modulus;
    mm.dist = dist.value_or(default_dist(modulus));
    mm.dist2 = dist2.value_or(mm.dist);
    mm.h = std::move(h);
    mm.validate();
    return mm;
  }

  static MatrixModel corner_perturbed(long n, unsigned long modulus,
                                      std::vector<CornerUnit> corners,
                                      std::optional<EntryDistribution> dist =
                                          std::nullopt) {
    MatrixModel mm;
    mm.kind = Kind::corner_perturbed;
    mm.n = n;
    mm.m = n;
    mm.modulus = modulus;
    mm.dist = dist.value_or(default_dist(modulus));
    mm.corners = std::move(corners);
    mm.validate();
    return mm;
  }

  /// k disjoint perturbation positions (0,1),(2,3),... with unit 1.
  static MatrixModel corner_perturbed(long n, unsigned long modulus, long k,
                                      std::optional<EntryDistribution> dist =
                                          std::nullopt) {
    if (2 * k > n)
      throw std::invalid_argument("corner_perturbed: k too large for n");
    std::vector<CornerUnit> cs;
    for (long t = 0; t < k; ++t) cs.push_back({2 * t, 2 * t + 1, 1});
    return corner_perturbed(n, modulus, std::move(cs), std::move(dist));
  }

  /// Uniform alternating matrix, strictly-upper entries supported inside the
  /// top-left corner x corner block (corner = n for the full ensemble).
  static MatrixModel alternating_uniform(long n, unsigned long modulus,
                                         long corner = -1) {
    MatrixModel mm;
    mm.kind = Kind::alternating_uniform;
    mm.n = n;
    mm.m = n;
    mm.modulus = modulus;
    mm.corner_size = corner < 0 ? n : corner;
    mm.dist = EntryDistribution::uniform_mod();
    mm.validate();
    return mm;
  }

  void validate() const {
    if (n < 1 || m < 1) throw std::invalid_argument("model: n must be >= 1");
    if (kind == Kind::alternating_uniform) {
      if (modulus < 2)
        throw std::invalid_argument("alternating_uniform needs modulus >= 2");
      if (corner_size < 0 || corner_size > n)
        throw std::invalid_argument("alternating_uniform: bad corner size");
      return;
    }
    auto eps = check_balanced(dist, modulus);
    if (!eps)
      throw std::invalid_argument(
          "model: entry distribution is not epsilon-balanced (" +
          dist.describe() + " over modulus " + std::to_string(modulus) + ")");
    switch (kind) {
      case Kind::c_symmetric:
        if (!c || !c->square() || c->rows() != n)
          throw std::invalid_argument("c_symmetric: C must be n x n");
        if (c->modulus() != modulus)
          throw std::invalid_argument("c_symmetric: C modulus mismatch");
        if (!is_alternating(*c))
          throw std::invalid_argument("c_symmetric: C is not alternating");
        break;
      case Kind::symmetric_mod_h: {
        if (h < 1) throw std::invalid_argument("symmetric_mod_h: h < 1");
        if (modulus > 0 && Int(modulus) % h != 0)
          throw std::invalid_argument("symmetric_mod_h: h must divide modulus");
        auto eps2 = check_balanced(dist2, modulus);
        if (!eps2)
          throw std::invalid_argument(
              "symmetric_mod_h: perturbation distribution is not balanced");
        break;
      }
      case Kind::corner_perturbed: {
        std::vector<char> row_used(n, 0), col_used(n, 0);
        std::vector<std::pair<long, long>> pairs;
        for (const auto& cu : corners) {
          if (cu.row < 0 || cu.row >= n || cu.col < 0 || cu.col >= n)
            throw std::invalid_argument("corner_perturbed: position range");
          if (cu.row == cu.col)
            throw std::invalid_argument("corner_perturbed: diagonal position");
          if (row_used[cu.row] || col_used[cu.col])
            throw std::invalid_argument(
                "corner_perturbed: positions share a row or column");
          row_used[cu.row] = col_used[cu.col] = 1;
          auto key = std::minmax(cu.row, cu.col);
          for (const auto& q : pairs)
            if (q == std::pair<long, long>(key.first, key.second))
              throw std::invalid_argument(
                  "corner_perturbed: mirrored position pair");
          pairs.emplace_back(key.first, key.second);
          const Int u(cu.unit);
          if (modulus == 0 ? abs(u) != 1 : gcd(u, Int(modulus)) != 1)
            throw std::invalid_argument("corner_perturbed: unit not invertible");
        }
        break;
      }
      default:
        break;
    }
  }

  std::string describe() const {
    std::ostringstream os;
    switch (kind) {
      case Kind::iid: os << "iid n=" << n << " m=" << m; break;
      case Kind::symmetric: os << "symmetric n=" << n; break;
      case Kind::c_symmetric: os << "c_symmetric n=" << n; break;
      case Kind::symmetric_mod_h:
        os << "symmetric_mod_h n=" << n << " h=" << h;
        break;
      case Kind::corner_perturbed:
        os << "corner_perturbed n=" << n << " k=" << corners.size();
        break;
      case Kind::alternating_uniform:
        os << "alternating_uniform n=" << n << " corner=" << corner_size;
        break;
    }
    os << " modulus=" << modulus << " dist=" << dist.describe();
    return os.str();
  }
};

/// Draws one matrix from the ensemble. Entries on and above the diagonal are
/// independent draws; below-diagonal entries are forced by the symmetry
/// constraint (x_ji = x_ij - c_ij for a C-symmetric model).
inline ExactMatrix sample(const MatrixModel& model, const SeedSpec& seed) {
  const long n = model.n;
  switch (model.kind) {
    case MatrixModel::Kind::iid: {
      ExactMatrix x(n, model.m, model.modulus);
      for (long i = 0; i < n; ++i)
        for (long j = 0; j < model.m; ++j) {
          auto g = rng::entry_stream(seed, i, j);
          x.set(i, j, Int(model.dist.draw(g, model.modulus)));
        }
      return x;
    }
    case MatrixModel::Kind::symmetric:
    case MatrixModel::Kind::c_symmetric:
    case MatrixModel::Kind::symmetric_mod_h:
    case MatrixModel::Kind::corner_perturbed: {
      ExactMatrix x(n, n, model.modulus);
      for (long i = 0; i < n; ++i)
        for (long j = i; j < n; ++j) {
          auto g = rng::entry_stream(seed, i, j);
          Int v(model.dist.draw(g, model.modulus));
          if (model.kind == MatrixModel::Kind::symmetric_mod_h && i < j) {
            auto g2 = rng::entry_stream(seed, i, j, 1);
            v += model.h * Int(model.dist2.draw(g2, model.modulus));
          }
          x.set(i, j, v);
          if (i != j) {
            Int below = v;
            if (model.kind == MatrixModel::Kind::c_symmetric)
              below -= model.c->at(i, j);
            x.set(j, i, below);
          }
        }
      if (model.kind == MatrixModel::Kind::corner_perturbed)
        for (const auto& cu : model.corners)
          x.set(cu.row, cu.col, x.at(cu.row, cu.col) + cu.unit);
      return x;
    }
    case MatrixModel::Kind::alternating_uniform: {
      ExactMatrix x(n, n, model.modulus);
      for (long i = 0; i < model.corner_size; ++i)
        for (long j = i + 1; j < model.corner_size; ++j) {
          auto g = rng::entry_stream(seed, i, j);
          Int v(static_cast<long>(g.uniform(model.modulus)));
          x.set(i, j, v);
          x.set(j, i, -v);
        }
      return x;
    }
  }
  throw std::logic_error("sample: unreachable");
}

/// The deterministic alternating form C with X - X^T = C for every sample of
/// the model. nullopt marks randomized-form kinds (symmetric_mod_h and
/// alternating_uniform); an iid model has no form at all and is rejected.
inline std::optional<ExactMatrix> derive_form(const MatrixModel& model) {
  switch (model.kind) {
    case MatrixModel::Kind::symmetric:
      return ExactMatrix(model.n, model.n, model.modulus);
    case MatrixModel::Kind::c_symmetric:
      return *model.c;
    case MatrixModel::Kind::corner_perturbed: {
      ExactMatrix c(model.n, model.n, model.modulus);
      for (const auto& cu : model.corners) {
        c.set(cu.row, cu.col, Int(cu.unit));
        c.set(cu.col, cu.row, Int(-cu.unit));
      }
      return c;
    }
    case MatrixModel::Kind::symmetric_mod_h:
    case MatrixModel::Kind::alternating_uniform:
      return std::nullopt;  // form is randomized
    case MatrixModel::Kind::iid:
      throw std::invalid_argument("derive_form: iid model has no form");
  }
  throw std::logic_error("derive_form: unreachable");
}

/// Parses "uniform_mod", "two_point:v0,v1,p" (p decimal or num/den), or
/// "uniform_range:lo,hi".
inline EntryDistribution parse_entry_distribution(const std::string& text) {
  auto colon = text.find(':');
  const std::string name = text.substr(0, colon);
  std::vector<std::string> args;
  if (colon != std::string::npos) {
    std::string rest = text.substr(colon + 1);
    std::size_t pos = 0;
    while (pos <= rest.size()) {
      auto comma = rest.find(',', pos);
      args.push_back(rest.substr(
          pos, comma == std::string::npos ? std::string::npos : comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
  }
  auto parse_prob = [](const std::string& s) {
    auto slash = s.find('/');
    if (slash != std::string::npos)
      return Rat(Int(s.substr(0, slash)), Int(s.substr(slash + 1)));
    auto dot = s.find('.');
    if (dot == std::string::npos) return Rat(Int(s));
    std::string digits = s.substr(0, dot) + s.substr(dot + 1);
    Int den = 1;
    for (std::size_t i = dot + 1; i < s.size(); ++i) den *= 10;
    Rat r(Int(digits), den);
    r.canonicalize();
    return r;
  };
  if (name == "uniform_mod") return EntryDistribution::uniform_mod();
  if (name == "two_point") {
    if (args.size() != 3)
      throw std::invalid_argument("two_point expects v0,v1,prob1");
    return EntryDistribution::two_point(std::stol(args[0]), std::stol(args[1]),
                                        parse_prob(args[2]));
  }
  if (name == "uniform_range") {
    if (args.size() != 2)
      throw std::invalid_argument("uniform_range expects lo,hi");
    return EntryDistribution::uniform_range(std::stol(args[0]),
                                            std::stol(args[1]));
  }
  throw std::invalid_argument("unknown entry distribution: " + text);
}

}  // namespace csym
