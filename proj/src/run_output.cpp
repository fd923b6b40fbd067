#include "dhif/run_output.hpp"

#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dhif/errors.hpp"
#include "dhif/scenario_io.hpp"
#include "dhif/version.hpp"

namespace dhif {

using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write " + p.string());
  return out;
}

json resolved_algorithm_json(const FilterConfig& cfg, const NetworkGraph& graph) {
  json j{{"label", cfg.effective_label()},
         {"algorithm", algorithm_name(cfg.algorithm)}};
  switch (cfg.algorithm) {
    case Algorithm::Dhif:
      j["weight_mode"] = weight_mode_name(cfg.weight_mode);
      j["weight_lower_bound"] = "1e-3 / |J_i|";
      break;
    case Algorithm::Kla:
      j["sigma_stencil"] = "sigma_ij = 1/|J_i| for every j in J_i";
      break;
    case Algorithm::Icf:
      j["epsilon"] = cfg.epsilon;
      j["n_hint"] = cfg.n_hint;
      j["sigma_stencil"] =
          "sigma_ij = epsilon for in-neighbors, sigma_ii = 1 - epsilon * in-degree";
      break;
    case Algorithm::Kcf:
      if (cfg.delta.has_value()) {
        j["delta"] = *cfg.delta;
      } else {
        j["delta"] = "epsilon / (1 + tr(P_posterior))";
        j["epsilon"] = cfg.epsilon;
      }
      break;
    case Algorithm::Ckf:
      break;
  }
  (void)graph;
  return j;
}

json analysis_json(const Scenario& s) {
  json j;
  j["max_in_degree"] = s.graph.max_in_degree();
  json naive = json::array();
  for (int a : naive_set(s.graph, s.sensors, s.process.F)) naive.push_back(a + 1);
  j["naive_agents"] = std::move(naive);
  const auto ok = boundedness_report(s.graph, s.sensors, s.process.F);
  json bounded = json::array();
  for (bool b : ok) bounded.push_back(b);
  j["boundedness_condition"] = std::move(bounded);
  json comps = json::array();
  for (const auto& comp : strongly_connected_components(s.graph)) {
    json c = json::array();
    for (int v : comp) c.push_back(v + 1);
    comps.push_back(std::move(c));
  }
  j["strongly_connected_components"] = std::move(comps);
  return j;
}

}  // namespace

void run_command(const Scenario& s, const std::string& out_dir, int threads) {
  s.validate();
  const auto t0 = std::chrono::steady_clock::now();
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);

  std::ofstream per_agent = open_out(dir / "per_agent.csv");
  per_agent << "trial,k,agent,algorithm,component,abs_error,sigma3\n";

  RmseAccumulator rmse(s);
  NeesAccumulator nees(s);
  const int dim = s.process.n();

  run_monte_carlo(
      s,
      [&](const TrialRecord& r) {
        rmse.consume(r);
        nees.consume(r);
        for (std::size_t a = 0; a < r.cells.size(); ++a) {
          const std::string& label = r.algorithm_labels[a];
          for (std::size_t k = 0; k < r.cells[a].size(); ++k) {
            for (std::size_t i = 0; i < r.cells[a][k].size(); ++i) {
              const RecordCell& cell = r.cells[a][k][i];
              for (int c = 0; c < dim; ++c) {
                per_agent << r.trial_index << ',' << (k + 1) << ',' << (i + 1)
                          << ',' << label << ',' << c << ','
                          << fmt(std::abs(cell.error(c))) << ','
                          << fmt(3.0 * cell.sigma(c)) << '\n';
              }
            }
          }
        }
      },
      threads);
  per_agent.close();

  {
    std::ofstream out = open_out(dir / "rmse.csv");
    out << "k,algorithm,component,psi\n";
    const auto psi = rmse.finish();
    for (std::size_t a = 0; a < psi.size(); ++a) {
      const std::string& label = s.algorithms[a].effective_label();
      for (int c = 0; c < dim; ++c) {
        for (int k = 0; k < s.horizon; ++k) {
          out << (k + 1) << ',' << label << ',' << c << ',' << fmt(psi[a][c][k])
              << '\n';
        }
      }
    }
  }

  {
    std::ofstream out = open_out(dir / "nees.csv");
    out << "k,agent,algorithm,mean_nees,chi2_lo,chi2_hi,excluded\n";
    const auto pts = nees.finish();
    for (std::size_t a = 0; a < pts.size(); ++a) {
      const std::string& label = s.algorithms[a].effective_label();
      for (int i = 0; i < s.graph.agent_count(); ++i) {
        for (int k = 0; k < s.horizon; ++k) {
          const NeesPoint& pt = pts[a][i][k];
          out << (k + 1) << ',' << (i + 1) << ',' << label << ','
              << fmt(pt.mean_nees) << ',' << fmt(pt.chi2_lo) << ','
              << fmt(pt.chi2_hi) << ',' << pt.excluded << '\n';
        }
      }
    }
  }

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json manifest;
  manifest["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
  manifest["seed"] = s.seed;
  manifest["trials"] = s.trials;
  manifest["scenario_digest"] = scenario_digest(s);
  manifest["wall_clock_seconds"] = wall;
  manifest["resolved"] = {
      {"initial_beliefs",
       s.initial_beliefs.empty() ? "zero-information (mean 0, Xi = 0)" : "explicit"},
      {"trial_seed_rule", "splitmix64(seed xor splitmix64(trial_index + 1))"},
      {"csv_float_format", "%.17g"},
  };
  json algos = json::array();
  for (const auto& cfg : s.algorithms) {
    algos.push_back(resolved_algorithm_json(cfg, s.graph));
  }
  manifest["resolved"]["algorithms"] = std::move(algos);
  manifest["analysis"] = analysis_json(s);
  manifest["scenario"] = scenario_to_json(s);

  std::ofstream out = open_out(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
}

bool check_command(const Scenario& s, std::string* report) {
  s.validate();
  const auto naive = naive_set(s.graph, s.sensors, s.process.F);
  const auto ok = boundedness_report(s.graph, s.sensors, s.process.F);
  bool all_ok = true;
  std::ostringstream os;
  os << "agent  observing  naive  bounded\n";
  for (int i = 0; i < s.graph.agent_count(); ++i) {
    all_ok = all_ok && ok[i];
    os << "  " << (i + 1) << "      " << (s.sensors[i].observing() ? "yes" : "no ")
       << "       " << (naive.count(i) ? "yes" : "no ") << "    "
       << (ok[i] ? "yes" : "NO") << "\n";
  }
  os << "max in-degree: " << s.graph.max_in_degree() << "\n";
  os << "boundedness condition " << (all_ok ? "holds for every agent" : "VIOLATED")
     << "\n";
  if (report) *report = os.str();
  return all_ok;
}

}  // namespace dhif
