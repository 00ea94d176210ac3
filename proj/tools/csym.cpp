// csym: exact cokernel statistics for structured random integer matrices.
//
// Subcommands: snf, cokernel, moment, isotropy, distribution, limits, verify.
// Exit codes: 0 on success/pass, 2 on a failed statistical check, 1 on usage
// errors.

#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "csym/harness.hpp"
#include "csym/io.hpp"
#include "csym/isotropy.hpp"
#include "csym/limits.hpp"

namespace {

using namespace csym;

void emit(const json& j, const std::string& out_path) {
  if (out_path.empty())
    std::cout << j.dump(2) << "\n";
  else
    write_json_file(out_path, j);
}

void emit_text(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot open output file: " + out_path);
    out << text;
  }
}

// Model flags shared by moment/distribution; set flags override the config
// file. Config-level seed/trials act as defaults for the global flags.
struct ModelArgs {
  std::string config, model, dist, dist2, positions, c_file;
  long n = -1, m = -1, k = -1, corner = -2;
  std::string h;
  long modulus = -1;
  std::optional<std::uint64_t> config_seed, config_trials;

  void attach(CLI::App* cmd) {
    cmd->set_help_flag("--help", "print help");  // frees --h for the model key
    cmd->add_option("--config", config, "key=value config file");
    cmd->add_option("--model", model,
                    "iid|symmetric|c_symmetric|symmetric_mod_h|"
                    "corner_perturbed|alternating_uniform");
    cmd->add_option("--n", n, "matrix size");
    cmd->add_option("--m", m, "column count (iid)");
    cmd->add_option("--modulus", modulus, "ring modulus (0 = Z)");
    cmd->add_option("--dist", dist, "entry distribution");
    cmd->add_option("--dist2", dist2, "perturbation distribution");
    cmd->add_option("--h", h, "symmetry modulus h");
    cmd->add_option("--k", k, "number of corner units");
    cmd->add_option("--positions", positions, "corner positions i,j,u;...");
    cmd->add_option("--c-file", c_file, "alternating form C (matrix json)");
    cmd->add_option("--corner", corner, "alternating_uniform corner size");
  }

  MatrixModel build() {
    std::map<std::string, std::string> cfg;
    if (!config.empty()) cfg = read_kv_config(config);
    if (auto it = cfg.find("seed"); it != cfg.end())
      config_seed = std::stoull(it->second);
    if (auto it = cfg.find("trials"); it != cfg.end())
      config_trials = std::stoull(it->second);
    if (!model.empty()) cfg["model"] = model;
    if (n >= 0) cfg["n"] = std::to_string(n);
    if (m >= 0) cfg["m"] = std::to_string(m);
    if (modulus >= 0) cfg["modulus"] = std::to_string(modulus);
    if (!dist.empty()) cfg["dist"] = dist;
    if (!dist2.empty()) cfg["dist2"] = dist2;
    if (!h.empty()) cfg["h"] = h;
    if (k >= 0) cfg["k"] = std::to_string(k);
    if (!positions.empty()) cfg["positions"] = positions;
    if (!c_file.empty()) cfg["c_file"] = c_file;
    if (corner >= -1) cfg["corner"] = std::to_string(corner);
    return model_from_config(cfg);
  }
};

GroupMap map_from_json_file(const std::string& path, unsigned long modulus) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open map file: " + path);
  json j;
  in >> j;
  FiniteAbelianGroup g = parse_group(j.at("group").get<std::string>());
  unsigned long a = j.value("modulus", modulus);
  ExactMatrix coords = matrix_from_json(
      json{{"modulus", 0}, {"rows", j.at("coords")}});
  long n = coords.cols();
  return GroupMap(g, n, a, coords);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact cokernel statistics for structured random matrices"};
  app.require_subcommand(1);

  std::string out_path, format = "json";
  std::uint64_t base_seed = 1;
  std::uint64_t trials = 20000;
  app.add_option("--out", out_path, "output file (default stdout)");
  app.add_option("--format", format, "json|csv");
  auto* seed_opt = app.add_option("--seed", base_seed, "base seed");
  auto* trials_opt = app.add_option("--trials", trials, "Monte Carlo trials");
  auto harness_defaults = [&](const ModelArgs& margs) {
    if (!*seed_opt && margs.config_seed) base_seed = *margs.config_seed;
    if (!*trials_opt && margs.config_trials) trials = *margs.config_trials;
  };

  // snf ----------------------------------------------------------------
  auto* snf_cmd = app.add_subcommand("snf", "Smith normal form of a matrix");
  std::string snf_in;
  bool snf_transforms = false;
  snf_cmd->add_option("--in", snf_in, "matrix json")->required();
  snf_cmd->add_flag("--transforms", snf_transforms, "include U and V");

  // cokernel -----------------------------------------------------------
  auto* cok_cmd = app.add_subcommand("cokernel", "cokernel of a matrix");
  std::string cok_in;
  cok_cmd->add_option("--in", cok_in, "matrix json")->required();

  // moment ---------------------------------------------------------------
  auto* mom_cmd =
      app.add_subcommand("moment", "empirical G-moment of a matrix model");
  ModelArgs mom_model;
  mom_model.attach(mom_cmd);
  std::string mom_group;
  double mom_expect = -1.0;
  mom_cmd->add_option("--group", mom_group, "target group literal")->required();
  mom_cmd->add_option("--expect", mom_expect,
                      "check the mean against this value at 4*stderr");

  // isotropy -------------------------------------------------------------
  auto* iso_cmd = app.add_subcommand(
      "isotropy", "isotropy of maps for an alternating form");
  std::string iso_c_file, iso_group, iso_f_file, iso_witness;
  long iso_modulus = 0;
  bool iso_exact = false;
  bool iso_mc = false;
  iso_cmd->add_option("--c-file", iso_c_file, "alternating form C")->required();
  iso_cmd->add_option("--group", iso_group, "target group literal")->required();
  iso_cmd->add_option("--modulus", iso_modulus, "ring modulus a")->required();
  iso_cmd->add_option("--f-file", iso_f_file,
                      "single map json {group, modulus, coords}");
  iso_cmd->add_flag("--exact", iso_exact, "exact probability by enumeration");
  iso_cmd->add_flag("--mc", iso_mc, "Monte Carlo probability");
  iso_cmd->add_option("--witness", iso_witness, "write witness matrix here");

  // distribution -----------------------------------------------------------
  auto* dist_cmd = app.add_subcommand(
      "distribution", "empirical cokernel distribution of a model");
  ModelArgs dist_model;
  dist_model.attach(dist_cmd);
  long dist_a = -1;
  std::string dist_ref;
  std::string dist_p = "2";
  long dist_u = 0;
  dist_cmd->add_option("--a", dist_a, "tensor modulus (defaults to model's)");
  dist_cmd->add_option("--reference", dist_ref, "cl|sandpile");
  dist_cmd->add_option("--p", dist_p, "reference prime");
  dist_cmd->add_option("--u", dist_u, "reference u (cl)");

  // limits -----------------------------------------------------------------
  auto* lim_cmd =
      app.add_subcommand("limits", "limit distribution values and moments");
  std::string lim_dist = "cl", lim_group, lim_p = "2";
  long lim_u = 0, lim_max_order = -1;
  lim_cmd->add_option("--dist", lim_dist, "cl|sandpile")->required();
  lim_cmd->add_option("--p", lim_p, "prime");
  lim_cmd->add_option("--u", lim_u, "u parameter (cl)");
  lim_cmd->add_option("--group", lim_group, "group literal");
  lim_cmd->add_option("--max-order", lim_max_order,
                      "emit a table of all p-groups of order <= p^B");

  // verify -------------------------------------------------------------
  auto* ver_cmd = app.add_subcommand("verify", "statistical bound checks");
  ver_cmd->require_subcommand(1);

  auto* vaf = ver_cmd->add_subcommand("alternating-form",
                                      "P[M^T C M = S] bound check");
  long vaf_a = 2, vaf_n = 8, vaf_m = 2;
  std::string vaf_c_file, vaf_s_file, vaf_mode = "exact";
  vaf->add_option("--a", vaf_a, "ring modulus");
  vaf->add_option("--n", vaf_n, "rows of C");
  vaf->add_option("--m", vaf_m, "columns of M");
  vaf->add_option("--c-file", vaf_c_file, "C (default: nondegenerate block)");
  vaf->add_option("--s-file", vaf_s_file, "S (default: zero)");
  vaf->add_option("--mode", vaf_mode, "exact|mc");

  auto* vgen =
      ver_cmd->add_subcommand("generation", "random generation bound check");
  long vgen_a = 2, vgen_ell = 1, vgen_k = 5;
  vgen->add_option("--a", vgen_a, "ring modulus");
  vgen->add_option("--ell", vgen_ell, "module rank");
  vgen->add_option("--k", vgen_k, "number of vectors");

  auto* vdir = ver_cmd->add_subcommand(
      "directional", "directional moment separation scenarios");
  long vdir_n = 40;
  vdir->add_option("--n", vdir_n, "matrix size (even)");

  auto* voracle = ver_cmd->add_subcommand(
      "moment-sum-oracle", "exact moment identity on one tractable cell");
  ModelArgs voracle_model;
  voracle_model.attach(voracle);
  std::string voracle_group;
  voracle->add_option("--group", voracle_group, "target group literal")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // help exits clean, usage errors exit 1
  }

  try {
    const SeedSpec seed{base_seed, 0};

    if (*snf_cmd) {
      ExactMatrix m = read_matrix_file(snf_in);
      FiniteAbelianGroup coker = cokernel_of(m);
      if (m.modulus() == 0) {
        auto s = smith_normal_form(m, snf_transforms);
        json j = smith_to_json(s, coker);
        if (snf_transforms) {
          j["u"] = matrix_to_json(*s.u);
          j["v"] = matrix_to_json(*s.v);
        }
        emit(j, out_path);
      } else {
        // Modular path: invariant factors of the lifted presentation.
        SmithDecomposition s;
        {
          const long r = m.rows(), c = m.cols();
          ExactMatrix aug(r, c + r, 0);
          for (long i = 0; i < r; ++i) {
            for (long j2 = 0; j2 < c; ++j2) aug.set(i, j2, m.at(i, j2));
            aug.set(i, c + i, Int(m.modulus()));
          }
          s = smith_normal_form(aug);
          s.diagonal.resize(static_cast<std::size_t>(r));
          s.rank = 0;
          for (const auto& d : s.diagonal)
            if (d == 1) ++s.rank;
        }
        emit(smith_to_json(s, coker), out_path);
      }
      return 0;
    }

    if (*cok_cmd) {
      ExactMatrix m = read_matrix_file(cok_in);
      FiniteAbelianGroup coker = cokernel_of(m);
      emit(json{{"cokernel", format_group(coker)},
                {"min_generators", min_generators_cokernel(m)}},
           out_path);
      return 0;
    }

    if (*mom_cmd) {
      MatrixModel model = mom_model.build();
      harness_defaults(mom_model);
      FiniteAbelianGroup g = parse_group(mom_group);
      MomentEstimate est =
          empirical_moment(model, g, trials, SeedSpec{base_seed, 0});
      json j = estimate_to_json(est);
      bool pass = true;
      if (mom_expect >= 0.0) {
        pass = std::abs(est.mean - mom_expect) <= 4.0 * est.stderr_;
        j["expect"] = mom_expect;
        j["pass"] = pass;
      }
      if (format == "csv")
        emit_text("mean,stderr,trials,group\n" + std::to_string(est.mean) +
                      "," + std::to_string(est.stderr_) + "," +
                      std::to_string(est.trials) + ",\"" +
                      format_group(est.target_group) + "\"\n",
                  out_path);
      else
        emit(j, out_path);
      return pass ? 0 : 2;
    }

    if (*iso_cmd) {
      ExactMatrix c = read_matrix_file(iso_c_file);
      if (c.modulus() != static_cast<unsigned long>(iso_modulus))
        c = c.lift().reduced(static_cast<unsigned long>(iso_modulus));
      FiniteAbelianGroup g = parse_group(iso_group);
      if (!iso_f_file.empty()) {
        GroupMap f = map_from_json_file(iso_f_file,
                                        static_cast<unsigned long>(iso_modulus));
        IsotropyReport rep = analyze_isotropy(f, c);
        if (!iso_witness.empty() && rep.witness)
          write_json_file(iso_witness, matrix_to_json(*rep.witness));
        emit(isotropy_report_to_json(rep), out_path);
        return 0;
      }
      if (iso_exact) {
        Rat p = isotropy_probability_exact(
            c, g, static_cast<unsigned long>(iso_modulus));
        emit(json{{"probability", p.get_str()}, {"value", p.get_d()}},
             out_path);
        return 0;
      }
      MomentEstimate est = isotropy_probability_mc(
          c, g, static_cast<unsigned long>(iso_modulus), trials, seed);
      emit(estimate_to_json(est), out_path);
      return 0;
    }

    if (*dist_cmd) {
      MatrixModel model = dist_model.build();
      harness_defaults(dist_model);
      unsigned long a =
          dist_a >= 1 ? static_cast<unsigned long>(dist_a) : model.modulus;
      std::optional<LimitDistribution> ref;
      if (dist_ref == "cl")
        ref = LimitDistribution::cohen_lenstra(Int(dist_p), dist_u);
      else if (dist_ref == "sandpile")
        ref = LimitDistribution::sandpile(Int(dist_p));
      else if (!dist_ref.empty())
        throw std::invalid_argument("--reference must be cl or sandpile");
      DistributionTable table = empirical_distribution(
          model, a, trials, SeedSpec{base_seed, 0}, ref);
      if (format == "csv")
        emit_text(distribution_to_csv(table), out_path);
      else
        emit(distribution_to_json(table), out_path);
      bool pass = true;
      for (const auto& row : table.rows)
        if (row.ref_prob) {
          double stderr_ = std::sqrt(row.freq.get_d() *
                                     (1.0 - row.freq.get_d()) /
                                     static_cast<double>(table.trials));
          if (std::abs(row.freq.get_d() - *row.ref_prob) > 4.0 * stderr_)
            pass = false;
        }
      return pass ? 0 : 2;
    }

    if (*lim_cmd) {
      Int p(lim_p);
      if (lim_max_order >= 0) {
        json rows = json::array();
        double total = 0.0;
        for (const auto& g : p_groups_up_to(p, lim_max_order)) {
          ProductValue pv = lim_dist == "sandpile"
                                ? sandpile_probability(g, p)
                                : cl_probability(g, p, lim_u);
          total += pv.value;
          rows.push_back(json{{"group", format_group(g)},
                              {"value", pv.value},
                              {"tail_bound", pv.tail_bound}});
        }
        emit(json{{"rows", std::move(rows)}, {"partial_mass", total}},
             out_path);
        return 0;
      }
      FiniteAbelianGroup g = parse_group(lim_group.empty() ? "1" : lim_group);
      ProductValue pv = lim_dist == "sandpile" ? sandpile_probability(g, p)
                                               : cl_probability(g, p, lim_u);
      emit(json{{"value", pv.value}, {"tail_bound", pv.tail_bound}}, out_path);
      return 0;
    }

    if (*ver_cmd) {
      if (*vaf) {
        ExactMatrix c = vaf_c_file.empty()
                            ? hyperbolic_alternating(
                                  vaf_n, static_cast<unsigned long>(vaf_a))
                            : read_matrix_file(vaf_c_file);
        ExactMatrix s = vaf_s_file.empty()
                            ? ExactMatrix(vaf_m, vaf_m,
                                          static_cast<unsigned long>(vaf_a))
                            : read_matrix_file(vaf_s_file);
        FormBoundReport rep = verify_alternating_form_bound(
            static_cast<unsigned long>(vaf_a), vaf_n, vaf_m, c, s,
            vaf_mode == "mc" ? VerifyMode::mc : VerifyMode::exact, trials,
            seed);
        emit(form_bound_to_json(rep), out_path);
        return rep.pass ? 0 : 2;
      }
      if (*vgen) {
        GenerationBoundReport rep = verify_generation_bound(
            static_cast<unsigned long>(vgen_a), vgen_ell, vgen_k, trials,
            seed);
        emit(generation_bound_to_json(rep), out_path);
        return rep.pass ? 0 : 2;
      }
      if (*vdir) {
        DirectionalReport rep = directional_checks(vdir_n, trials, seed);
        emit(directional_to_json(rep), out_path);
        return rep.pass ? 0 : 2;
      }
      if (*voracle) {
        MatrixModel model = voracle_model.build();
        FiniteAbelianGroup g = parse_group(voracle_group);
        auto [lhs, rhs] = moment_sum_oracle(model, g);
        bool pass = lhs == rhs;
        emit(json{{"lhs", lhs.get_str()},
                  {"rhs", rhs.get_str()},
                  {"pass", pass}},
             out_path);
        return pass ? 0 : 2;
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
