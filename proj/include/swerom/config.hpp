#pragma once

// Experiment configuration file (JSON) and command-line value parsing.
// Keys are listed in docs/configuration.md.

#include "swerom/bench.hpp"

#include <string>
#include <utility>

namespace swerom::config {

// "31x23" -> {31, 23}
std::pair<Index, Index> parse_grid(const std::string& text);
bench::Window parse_window(const std::string& text);
solver::LinearSolverKind parse_linear_solver(const std::string& text);

// Applies the keys present in `json_text` on top of `base`. Unknown keys are
// rejected so that typos do not silently fall back to defaults.
bench::ExperimentConfig apply_json(const bench::ExperimentConfig& base, const std::string& json_text);
bench::ExperimentConfig load_file(const bench::ExperimentConfig& base, const std::string& path);

}  // namespace swerom::config
