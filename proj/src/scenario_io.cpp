#include "dhif/scenario_io.hpp"

#include <fstream>

#include "dhif/errors.hpp"
#include "dhif/linalg.hpp"

namespace dhif {

using nlohmann::json;

namespace {

Eigen::MatrixXd generated_matrix(const json& j) {
  const std::string kind = j.at("generator").get<std::string>();
  if (kind == "integrator2d") {
    // [[I2, dt*I2], [0, I2]]
    const double dt = j.at("dt").get<double>();
    Eigen::MatrixXd f = Eigen::MatrixXd::Identity(4, 4);
    f(0, 2) = dt;
    f(1, 3) = dt;
    return f;
  }
  if (kind == "integrator2d_q") {
    // [[q dt^3/3 I2, q dt^2/2 I2], [q dt^2/2 I2, q dt I2]]
    const double dt = j.at("dt").get<double>();
    const double q = j.value("intensity", 1.0);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(4, 4);
    const double a = q * dt * dt * dt / 3.0;
    const double b = q * dt * dt / 2.0;
    const double c = q * dt;
    for (int i = 0; i < 2; ++i) {
      m(i, i) = a;
      m(i, i + 2) = b;
      m(i + 2, i) = b;
      m(i + 2, i + 2) = c;
    }
    return m;
  }
  if (kind == "identity") {
    const int n = j.at("n").get<int>();
    return Eigen::MatrixXd::Identity(n, n);
  }
  if (kind == "scaled_identity") {
    const int n = j.at("n").get<int>();
    return j.at("value").get<double>() * Eigen::MatrixXd::Identity(n, n);
  }
  if (kind == "zero") {
    return Eigen::MatrixXd::Zero(j.at("rows").get<int>(), j.at("cols").get<int>());
  }
  throw InvalidInputError("unknown matrix generator: " + kind);
}

Eigen::VectorXd vector_from_json(const json& j) {
  if (!j.is_array()) throw InvalidInputError("expected a vector (list of numbers)");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json j = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

FilterConfig filter_config_from_json(const json& j, const NetworkGraph& graph) {
  FilterConfig cfg;
  cfg.algorithm = algorithm_from_name(j.at("algorithm").get<std::string>());
  cfg.weight_mode = weight_mode_from_name(j.value("weight_mode", "optimal"));
  const double default_eps = 0.65 / std::max(1, graph.max_in_degree());
  cfg.epsilon = j.value("epsilon", default_eps);
  if (j.contains("delta")) cfg.delta = j.at("delta").get<double>();
  cfg.n_hint = j.value("n_hint", graph.agent_count());
  cfg.label = j.value("label", "");
  return cfg;
}

json filter_config_to_json(const FilterConfig& cfg) {
  json j{{"algorithm", algorithm_name(cfg.algorithm)},
         {"weight_mode", weight_mode_name(cfg.weight_mode)},
         {"epsilon", cfg.epsilon},
         {"n_hint", cfg.n_hint},
         {"label", cfg.effective_label()}};
  if (cfg.delta.has_value()) j["delta"] = *cfg.delta;
  return j;
}

}  // namespace

Eigen::MatrixXd matrix_from_json(const json& j) {
  if (j.is_object()) return generated_matrix(j);
  if (!j.is_array()) throw InvalidInputError("expected a matrix (nested lists or generator)");
  const std::size_t rows = j.size();
  if (rows == 0) return Eigen::MatrixXd(0, 0);
  if (!j[0].is_array()) throw InvalidInputError("matrix rows must be lists");
  const std::size_t cols = j[0].size();
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      throw InvalidInputError("matrix rows must all have the same length");
    }
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<std::string> builtin_scenario_names() { return {"paper-fig3"}; }

Scenario paper_fig3_scenario() {
  Scenario s;
  const double dt = 4.0;
  s.process.F = matrix_from_json(json{{"generator", "integrator2d"}, {"dt", dt}});
  s.process.Q = matrix_from_json(
      json{{"generator", "integrator2d_q"}, {"dt", dt}, {"intensity", 5.0}});
  s.process.B = Eigen::MatrixXd::Identity(4, 4);

  const int agents = 10;
  s.sensors.assign(agents, SensorModel::none(4));
  auto row_sensor = [](std::initializer_list<double> h) {
    SensorModel m;
    m.H = Eigen::MatrixXd(1, 4);
    int c = 0;
    for (double v : h) m.H(0, c++) = v;
    m.R_inv = Eigen::MatrixXd::Constant(1, 1, 1.0 / 225.0);
    return m;
  };
  // agent 1 sees both positions, 2 the x position, 3 and 7 the y position
  SensorModel full;
  full.H = Eigen::MatrixXd::Zero(2, 4);
  full.H(0, 0) = 1.0;
  full.H(1, 1) = 1.0;
  full.R_inv = (1.0 / 225.0) * Eigen::MatrixXd::Identity(2, 2);
  s.sensors[0] = full;
  s.sensors[1] = row_sensor({1, 0, 0, 0});
  s.sensors[2] = row_sensor({0, 1, 0, 0});
  s.sensors[6] = row_sensor({0, 1, 0, 0});

  // directed topology (sender, receiver), 0-based: two observable strongly
  // connected cores {1,4} and {2,3,7} feeding blind chains; no vertex
  // reaches every other (no directed spanning tree)
  s.graph = NetworkGraph(agents, {{0, 3}, {3, 0}, {3, 4}, {4, 5},
                                  {1, 2}, {2, 6}, {6, 1}, {1, 6},
                                  {1, 7}, {2, 7}, {7, 8}, {8, 9}, {5, 9}});

  s.horizon = 70;
  s.trials = 500;
  s.seed = 1729;
  s.initial_state = Eigen::VectorXd::Zero(4);

  const double eps = 0.65 / s.graph.max_in_degree();
  FilterConfig dhif_cfg;
  dhif_cfg.algorithm = Algorithm::Dhif;
  dhif_cfg.weight_mode = WeightMode::Optimal;
  dhif_cfg.epsilon = eps;
  FilterConfig kla_cfg;
  kla_cfg.algorithm = Algorithm::Kla;
  kla_cfg.epsilon = eps;
  FilterConfig icf_cfg;
  icf_cfg.algorithm = Algorithm::Icf;
  icf_cfg.epsilon = eps;
  icf_cfg.n_hint = agents;
  FilterConfig ckf_cfg;
  ckf_cfg.algorithm = Algorithm::Ckf;
  s.algorithms = {dhif_cfg, kla_cfg, icf_cfg, ckf_cfg};
  return s;
}

Scenario scenario_from_json(const json& j) {
  Scenario s;
  const json& process = j.at("process");
  s.process.F = matrix_from_json(process.at("F"));
  s.process.Q = matrix_from_json(process.at("Q"));
  if (process.contains("B")) {
    s.process.B = matrix_from_json(process.at("B"));
  } else {
    s.process.B = Eigen::MatrixXd::Identity(s.process.F.rows(), s.process.F.rows());
  }
  const int n = s.process.n();

  const json& graph = j.at("graph");
  std::vector<std::pair<int, int>> edges;
  for (const auto& e : graph.at("edges")) {
    if (!e.is_array() || e.size() != 2) {
      throw InvalidInputError("graph edges must be [from, to] pairs");
    }
    // agent ids are 1-based in scenario files
    edges.emplace_back(e[0].get<int>() - 1, e[1].get<int>() - 1);
  }
  s.graph = NetworkGraph(graph.at("agents").get<int>(), std::move(edges));

  for (const auto& sj : j.at("sensors")) {
    SensorModel m;
    m.H = sj.contains("H") ? matrix_from_json(sj.at("H")) : Eigen::MatrixXd(0, 0);
    if (m.H.rows() == 0) {
      m = SensorModel::none(n);
    } else if (sj.contains("R_inv")) {
      m.R_inv = matrix_from_json(sj.at("R_inv"));
    } else if (sj.contains("R")) {
      m.R_inv = linalg::pd_inverse(matrix_from_json(sj.at("R")));
    } else {
      throw InvalidInputError("observing sensors need R or R_inv");
    }
    s.sensors.push_back(std::move(m));
  }

  s.horizon = j.at("horizon").get<int>();
  s.trials = j.value("trials", 1);
  s.seed = j.value("seed", std::uint64_t{0});
  s.initial_state = j.contains("initial_state")
                        ? vector_from_json(j.at("initial_state"))
                        : Eigen::VectorXd::Zero(n);

  for (const auto& aj : j.at("algorithms")) {
    s.algorithms.push_back(filter_config_from_json(aj, s.graph));
  }

  if (j.contains("initial_beliefs") && !j.at("initial_beliefs").is_null()) {
    for (const auto& bj : j.at("initial_beliefs")) {
      AgentBelief b;
      b.mean = vector_from_json(bj.at("mean"));
      b.info = matrix_from_json(bj.at("info"));
      s.initial_beliefs.push_back(std::move(b));
    }
  }
  s.validate();
  return s;
}

json scenario_to_json(const Scenario& s) {
  json j;
  j["process"] = {{"F", matrix_to_json(s.process.F)},
                  {"B", matrix_to_json(s.process.B)},
                  {"Q", matrix_to_json(s.process.Q)}};
  json sensors = json::array();
  for (const auto& m : s.sensors) {
    if (!m.observing()) {
      sensors.push_back(json{{"H", json::array()}});
    } else {
      sensors.push_back(json{{"H", matrix_to_json(m.H)},
                             {"R_inv", matrix_to_json(m.R_inv)}});
    }
  }
  j["sensors"] = std::move(sensors);
  json edges = json::array();
  for (const auto& [from, to] : s.graph.edges()) {
    edges.push_back(json::array({from + 1, to + 1}));
  }
  j["graph"] = {{"agents", s.graph.agent_count()}, {"edges", std::move(edges)}};
  j["horizon"] = s.horizon;
  j["trials"] = s.trials;
  j["seed"] = s.seed;
  j["initial_state"] = vector_to_json(s.initial_state);
  json algos = json::array();
  for (const auto& cfg : s.algorithms) algos.push_back(filter_config_to_json(cfg));
  j["algorithms"] = std::move(algos);
  if (!s.initial_beliefs.empty()) {
    json beliefs = json::array();
    for (const auto& b : s.initial_beliefs) {
      beliefs.push_back(json{{"mean", vector_to_json(b.mean)},
                             {"info", matrix_to_json(b.info)}});
    }
    j["initial_beliefs"] = std::move(beliefs);
  }
  return j;
}

Scenario load_scenario(const std::string& path_or_name) {
  if (path_or_name == "paper-fig3") return paper_fig3_scenario();
  std::ifstream in(path_or_name);
  if (!in) {
    throw IoError("cannot open scenario file: " + path_or_name);
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidInputError("scenario parse error in " + path_or_name + ": " + e.what());
  }
  try {
    if (j.is_object() && j.contains("scenario")) {
      return scenario_from_json(j.at("scenario"));  // run manifest
    }
    return scenario_from_json(j);
  } catch (const json::exception& e) {
    throw InvalidInputError("scenario validation error in " + path_or_name + ": " + e.what());
  }
}

std::string scenario_digest(const Scenario& s) {
  const std::string text = scenario_to_json(s).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace dhif
