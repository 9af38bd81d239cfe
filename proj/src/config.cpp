#include "swerom/config.hpp"

#include <json.hpp>

#include <fstream>
#include <regex>
#include <set>
#include <sstream>

namespace swerom::config {

using nlohmann::json;

std::pair<Index, Index> parse_grid(const std::string& text) {
  static const std::regex re(R"(\s*(\d+)\s*[xX]\s*(\d+)\s*)");
  std::smatch m;
  if (!std::regex_match(text, m, re))
    throw ConfigError("grid '" + text + "' is not of the form NxxNy, e.g. 31x23");
  const Index nx = std::stol(m[1]), ny = std::stol(m[2]);
  if (nx < 3 || ny < 3) throw ConfigError("grid '" + text + "': both dimensions must be >= 3");
  return {nx, ny};
}

bench::Window parse_window(const std::string& text) {
  if (text == "24h") return bench::Window::H24;
  if (text == "3h") return bench::Window::H3;
  throw ConfigError("window '" + text + "' must be 24h or 3h");
}

solver::LinearSolverKind parse_linear_solver(const std::string& text) {
  if (text == "direct") return solver::LinearSolverKind::DirectSparse;
  if (text == "gmres") return solver::LinearSolverKind::IterativeRestarted;
  throw ConfigError("linear_solver '" + text + "' must be direct or gmres");
}

namespace {

template <typename T>
T get(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

}  // namespace

bench::ExperimentConfig apply_json(const bench::ExperimentConfig& base,
                                   const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  static const std::set<std::string> known{
      "grids",           "window",         "dt",           "nt",
      "k",               "gamma",          "m",            "modes",
      "out",             "seed",           "timed",        "centering",
      "grammeltvedt_literal", "newton_tol", "newton_max_iters", "lu_refresh_every",
      "linear_solver",   "timing_repeats"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");

  bench::ExperimentConfig cfg = base;
  if (j.contains("grids")) {
    cfg.grids.clear();
    const auto& g = j["grids"];
    if (g.is_string()) {
      cfg.grids.push_back(parse_grid(g.get<std::string>()));
    } else if (g.is_array()) {
      for (const auto& e : g) {
        if (!e.is_string()) throw ConfigError("grids entries must be strings like \"31x23\"");
        cfg.grids.push_back(parse_grid(e.get<std::string>()));
      }
    } else {
      throw ConfigError("config key 'grids' has the wrong type");
    }
  }
  if (j.contains("window")) cfg.window = parse_window(get<std::string>(j, "window"));
  if (j.contains("dt") || j.contains("nt")) {
    cfg.apply_window();
    cfg.window = bench::Window::Custom;
    if (j.contains("dt")) cfg.solver.dt = get<double>(j, "dt");
    if (j.contains("nt")) cfg.solver.Nt = get<Index>(j, "nt");
  }
  if (j.contains("k")) {
    if (j["k"].is_null())
      cfg.k.reset();
    else
      cfg.k = get<Index>(j, "k");
  }
  if (j.contains("gamma")) {
    cfg.gamma = get<double>(j, "gamma");
    if (!j.contains("k")) cfg.k.reset();
  }
  if (j.contains("m")) {
    if (j["m"].is_array())
      cfg.m_list = get<std::vector<Index>>(j, "m");
    else
      cfg.m_list = {get<Index>(j, "m")};
  }
  if (j.contains("modes")) {
    if (j["modes"].is_string())
      cfg.modes = {get<std::string>(j, "modes")};
    else
      cfg.modes = get<std::vector<std::string>>(j, "modes");
  }
  if (j.contains("out")) cfg.out_dir = get<std::string>(j, "out");
  if (j.contains("seed")) cfg.seed = get<std::uint64_t>(j, "seed");
  if (j.contains("timed")) {
    const auto t = get<std::string>(j, "timed");
    if (t != "serial" && t != "parallel")
      throw ConfigError("config key 'timed' must be serial or parallel");
    cfg.timed_serial = t == "serial";
  }
  if (j.contains("centering")) cfg.centering = get<bool>(j, "centering");
  if (j.contains("grammeltvedt_literal"))
    cfg.initial_height = get<bool>(j, "grammeltvedt_literal") ? swe::GrammeltvedtForm::Literal
                                                               : swe::GrammeltvedtForm::Standard;
  if (j.contains("newton_tol")) cfg.solver.newton_tol = get<double>(j, "newton_tol");
  if (j.contains("newton_max_iters")) cfg.solver.newton_max_iters = get<int>(j, "newton_max_iters");
  if (j.contains("lu_refresh_every")) cfg.solver.lu_refresh_every = get<int>(j, "lu_refresh_every");
  if (j.contains("linear_solver"))
    cfg.solver.linear_solver = parse_linear_solver(get<std::string>(j, "linear_solver"));
  if (j.contains("timing_repeats")) cfg.timing_repeats = get<int>(j, "timing_repeats");
  return cfg;
}

bench::ExperimentConfig load_file(const bench::ExperimentConfig& base, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return apply_json(base, ss.str());
}

}  // namespace swerom::config
