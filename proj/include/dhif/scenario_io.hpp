#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "dhif/sim.hpp"

namespace dhif {

/// Names accepted by load_scenario in place of a file path.
std::vector<std::string> builtin_scenario_names();

/// The simulation scenario of the source experiments: 4-state double
/// integrator (dt = 4), 10 agents, sensors at agents 1, 2, 3, 7,
/// eps = 0.65 / max in-degree, 500 trials over 70 steps.
Scenario paper_fig3_scenario();

/// Parses a scenario from a file path or a built-in name. A run manifest
/// (a JSON object with a "scenario" member) is accepted too, so runs can
/// be reproduced straight from their manifests.
Scenario load_scenario(const std::string& path_or_name);

Scenario scenario_from_json(const nlohmann::json& j);

/// Fully resolved scenario (explicit matrices, defaults filled in);
/// loading the result reproduces the scenario exactly.
nlohmann::json scenario_to_json(const Scenario& s);

/// Matrix literals are row-major nested lists; named generators
/// ("integrator2d", "integrator2d_q", "identity", "scaled_identity",
/// "zero") avoid transcribing structured matrices by hand.
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);
nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);

/// FNV-1a over the canonical serialization; identifies a scenario in the
/// run manifest (not cryptographic).
std::string scenario_digest(const Scenario& s);

}  // namespace dhif
