#pragma once

// File formats: matrix JSON ({"modulus": a, "rows": [[...], ...]}), report
// JSON/CSV emission, and the key=value experiment config format.

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "csym/harness.hpp"
#include "csym/isotropy.hpp"
#include "csym/limits.hpp"
#include "csym/matrix.hpp"
#include "csym/models.hpp"

namespace csym {

using nlohmann::json;

inline json matrix_to_json(const ExactMatrix& m) {
  json rows = json::array();
  for (long i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (long j = 0; j < m.cols(); ++j) {
      const Int& e = m.at(i, j);
      if (e.fits_slong_p())
        row.push_back(e.get_si());
      else
        row.push_back(e.get_str());
    }
    rows.push_back(std::move(row));
  }
  return json{{"modulus", m.modulus()}, {"rows", std::move(rows)}};
}

inline ExactMatrix matrix_from_json(const json& j) {
  if (!j.contains("rows") || !j["rows"].is_array() || j["rows"].empty())
    throw std::invalid_argument("matrix json: missing rows");
  const unsigned long modulus = j.value("modulus", 0ul);
  const auto& rows = j["rows"];
  const long r = static_cast<long>(rows.size());
  const long c = static_cast<long>(rows[0].size());
  ExactMatrix m(r, c, modulus);
  for (long i = 0; i < r; ++i) {
    if (static_cast<long>(rows[i].size()) != c)
      throw std::invalid_argument("matrix json: ragged rows");
    for (long jj = 0; jj < c; ++jj) {
      const auto& cell = rows[i][jj];
      if (cell.is_string())
        m.set(i, jj, Int(cell.get<std::string>()));
      else
        m.set(i, jj, Int(cell.get<long>()));
    }
  }
  return m;
}

inline ExactMatrix read_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open matrix file: " + path);
  json j;
  in >> j;
  return matrix_from_json(j);
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << j.dump(2) << "\n";
}

/// key=value lines; blank lines and #-comments ignored.
inline std::map<std::string, std::string> parse_kv_config(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::string stripped;
    for (char ch : line)
      if (!isspace(static_cast<unsigned char>(ch))) stripped += ch;
    if (stripped.empty()) continue;
    auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: expected key=value, got: " + line);
    out[stripped.substr(0, eq)] = stripped.substr(eq + 1);
  }
  return out;
}

inline std::map<std::string, std::string> read_kv_config(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  return parse_kv_config(in);
}

/// Positions syntax for corner models: "i,j,u;i,j,u;...".
inline std::vector<CornerUnit> parse_corner_positions(const std::string& text) {
  std::vector<CornerUnit> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto semi = text.find(';', pos);
    std::string tok = text.substr(
        pos, semi == std::string::npos ? std::string::npos : semi - pos);
    std::istringstream ts(tok);
    CornerUnit cu;
    char c1 = 0, c2 = 0;
    if (!(ts >> cu.row >> c1 >> cu.col >> c2 >> cu.unit) || c1 != ',' ||
        c2 != ',')
      throw std::invalid_argument("positions: expected i,j,u triples");
    out.push_back(cu);
    pos = (semi == std::string::npos) ? text.size() : semi + 1;
  }
  return out;
}

/// Builds a MatrixModel from config keys: model, n, m, modulus, dist, dist2,
/// h, k, positions, corner, c_file.
inline MatrixModel model_from_config(
    const std::map<std::string, std::string>& cfg) {
  auto get = [&](const std::string& key) -> std::optional<std::string> {
    auto it = cfg.find(key);
    if (it == cfg.end()) return std::nullopt;
    return it->second;
  };
  auto need = [&](const std::string& key) {
    auto v = get(key);
    if (!v) throw std::invalid_argument("config: missing key '" + key + "'");
    return *v;
  };
  const std::string kind = need("model");
  const unsigned long modulus = std::stoul(get("modulus").value_or("0"));
  const long n = std::stol(need("n"));
  std::optional<EntryDistribution> dist, dist2;
  if (auto d = get("dist")) dist = parse_entry_distribution(*d);
  if (auto d = get("dist2")) dist2 = parse_entry_distribution(*d);

  if (kind == "iid")
    return MatrixModel::iid_model(n, std::stol(get("m").value_or(
                                         std::to_string(n))),
                                  modulus, dist);
  if (kind == "symmetric") return MatrixModel::symmetric(n, modulus, dist);
  if (kind == "c_symmetric") {
    ExactMatrix c = read_matrix_file(need("c_file"));
    if (c.modulus() != modulus && modulus != 0) c = c.lift().reduced(modulus);
    return MatrixModel::c_symmetric(c, dist);
  }
  if (kind == "symmetric_mod_h")
    return MatrixModel::symmetric_mod_h(n, modulus, Int(need("h")), dist,
                                        dist2);
  if (kind == "corner_perturbed") {
    if (auto pos = get("positions"))
      return MatrixModel::corner_perturbed(n, modulus,
                                           parse_corner_positions(*pos), dist);
    return MatrixModel::corner_perturbed(n, modulus, std::stol(need("k")),
                                         dist);
  }
  if (kind == "alternating_uniform")
    return MatrixModel::alternating_uniform(
        n, modulus, std::stol(get("corner").value_or("-1")));
  throw std::invalid_argument("config: unknown model '" + kind + "'");
}

inline json estimate_to_json(const MomentEstimate& est) {
  return json{{"mean", est.mean},
              {"stderr", est.stderr_},
              {"trials", est.trials},
              {"seed", est.seed.base_seed},
              {"stream", est.seed.stream_index},
              {"group", format_group(est.target_group)},
              {"model", est.model_desc}};
}

inline json smith_to_json(const SmithDecomposition& s,
                          const FiniteAbelianGroup& coker) {
  json d = json::array();
  for (const auto& x : s.diagonal)
    if (x.fits_slong_p())
      d.push_back(x.get_si());
    else
      d.push_back(x.get_str());
  return json{{"d", std::move(d)},
              {"rank", s.rank},
              {"free_rank", coker.free_rank()},
              {"cokernel", format_group(coker)}};
}

inline json isotropy_report_to_json(const IsotropyReport& rep) {
  json j{{"isotropic", rep.isotropic}, {"surjective", rep.surjective}};
  if (rep.failing_triple)
    j["failing_triple"] = {rep.failing_triple->k, rep.failing_triple->i,
                           rep.failing_triple->j};
  if (rep.witness) j["witness"] = matrix_to_json(*rep.witness);
  return j;
}

inline json distribution_to_json(const DistributionTable& t) {
  json rows = json::array();
  for (const auto& r : t.rows) {
    json row{{"label", r.label},
             {"count", r.count},
             {"freq", r.freq.get_d()}};
    if (r.ref_prob) {
      row["ref_prob"] = *r.ref_prob;
      row["abs_diff"] = std::abs(r.freq.get_d() - *r.ref_prob);
    }
    rows.push_back(std::move(row));
  }
  json j{{"rows", std::move(rows)},
         {"trials", t.trials},
         {"modulus", t.modulus}};
  if (!t.ref_desc.empty()) j["reference"] = t.ref_desc;
  if (t.tv_distance) j["tv_distance"] = *t.tv_distance;
  return j;
}

inline std::string distribution_to_csv(const DistributionTable& t) {
  std::ostringstream os;
  os << "label,count,freq,ref_prob,abs_diff\n";
  for (const auto& r : t.rows) {
    os << '"' << r.label << "\"," << r.count << "," << r.freq.get_d() << ",";
    if (r.ref_prob)
      os << *r.ref_prob << "," << std::abs(r.freq.get_d() - *r.ref_prob);
    else
      os << ",";
    os << "\n";
  }
  return os.str();
}

inline json form_bound_to_json(const FormBoundReport& r) {
  return json{{"estimate", r.estimate}, {"stderr", r.stderr_},
              {"target", r.target},     {"bound", r.bound},
              {"exact", r.exact},       {"generators", r.generators},
              {"trials", r.trials},     {"pass", r.pass}};
}

inline json generation_bound_to_json(const GenerationBoundReport& r) {
  return json{{"failure_rate", r.failure_rate},
              {"stderr", r.stderr_},
              {"bound", r.bound},
              {"trials", r.trials},
              {"pass", r.pass}};
}

inline json directional_to_json(const DirectionalReport& r) {
  json rows = json::array();
  for (const auto& sc : r.scenarios)
    rows.push_back(json{{"name", sc.name},
                        {"mean", sc.estimate.mean},
                        {"stderr", sc.estimate.stderr_},
                        {"predicted", sc.predicted},
                        {"requirement", sc.requirement},
                        {"pass", sc.pass}});
  return json{{"scenarios", std::move(rows)}, {"pass", r.pass}};
}

}  // namespace csym
