#pragma once

#include <string>

#include "dhif/sim.hpp"

namespace dhif {

/// Executes the scenario and writes the result tables into `out_dir`:
///   rmse.csv       k, algorithm, component, psi
///   per_agent.csv  trial, k, agent, algorithm, component, abs_error, sigma3
///   nees.csv       k, agent, algorithm, mean_nees, chi2_lo, chi2_hi, excluded
///   manifest.json  configuration echo; re-running from it reproduces the
///                  CSVs byte for byte
/// k and agent ids are 1-based, components are 0-based state indices.
/// Floats are printed with 17 significant digits, locale-independent.
void run_command(const Scenario& s, const std::string& out_dir, int threads = 0);

/// Per-agent naivety and boundedness report; returns true when every agent
/// satisfies the boundedness condition.
bool check_command(const Scenario& s, std::string* report);

}  // namespace dhif
