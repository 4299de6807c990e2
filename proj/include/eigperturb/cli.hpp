// Batch front door: JSON scenario configuration, orchestration of the
// predict / validate / dift pipelines, and report emission. Reports are
// stable-schema ordered JSON ("<id>.report.json") plus a branch-table CSV
// ("<id>.branches.csv"); exit codes are 0 (all gates pass), 1 (validation
// failure), 2 (schema violation), 3 (numerical failure).
#pragma once

#include <json.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "eigperturb/branches.hpp"
#include "eigperturb/dift.hpp"
#include "eigperturb/dift_examples.hpp"
#include "eigperturb/fem.hpp"
#include "eigperturb/hadamard.hpp"
#include "eigperturb/modes.hpp"

namespace eigperturb::cli {

using json = nlohmann::ordered_json;
using geometry::DomainKind;
using geometry::DomainSpec;
using geometry::PerturbFamily;

struct SchemaError : std::runtime_error {
  std::string path;
  SchemaError(std::string p, const std::string& msg)
      : std::runtime_error(msg + " (at " + p + ")"), path(std::move(p)) {}
};

enum class ExitCode : int { ok = 0, validation = 1, schema = 2, numerical = 3 };

struct Settings {
  quadrature::Resolutions resolutions;
  int workers = 2;
  uint64_t seed = 20240101ULL;
  bool quick = false;
  std::string out_dir = ".";
  bool dump_mesh = false;
};

struct Scenario {
  std::string id;
  DomainSpec domain = DomainSpec::unit_disk();
  PerturbFamily family;

  enum class Space { disk, square, ball3d, pair } space = Space::disk;
  int disk_k = 1, disk_m = 1;
  int sigma1 = 1, sigma2 = 2;

  bool run_closed_form = true;
  bool run_quadrature = true;
  bool run_fem = false;

  double tol_rel = 0.02;
  double tol_abs = 1e-4;
  std::vector<double> t_grid = {-2e-3, -1e-3, 1e-3, 2e-3};
  std::vector<int> mesh_levels = {16, 32, 64};
  double window = 0.0;

  json resolved;  // full config echo with defaults filled in
};

// ---------------------------------------------------------------------------
// Catalog.
// ---------------------------------------------------------------------------
inline std::vector<std::string> list_catalog() {
  // Domains and eigenspace selectors share their names; families and dift
  // examples carry dotted names.
  std::vector<std::string> names = {
      "ball3d",          "disk",
      "pair",            "square",
      "ball3d.quadratic_normal", "dilation",
      "disk.holomorphic_poly",   "pair.dilations",
      "pair.translations",       "square.edge_bump",
      "translation"};
  for (const auto& d : dift::examples::catalog()) names.push_back(d);
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  return names;
}

// ---------------------------------------------------------------------------
// Config parsing. Every throw carries the JSON path of the offending field.
// ---------------------------------------------------------------------------
namespace detail {

inline const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) throw SchemaError(path + "." + key, "missing field");
  return obj.at(key);
}

inline double num_at(const json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError(path, "expected a number");
  return j.get<double>();
}

inline std::vector<double> vec_at(const json& j, const std::string& path, size_t lo, size_t hi) {
  if (!j.is_array() || j.size() < lo || j.size() > hi)
    throw SchemaError(path, "expected an array of size " + std::to_string(lo) + ".." +
                                std::to_string(hi));
  std::vector<double> v;
  for (size_t i = 0; i < j.size(); ++i) v.push_back(num_at(j[i], path + "[" + std::to_string(i) + "]"));
  return v;
}

inline DomainSpec parse_domain(const json& j, const std::string& path) {
  std::string kind;
  linalg::Vec2 offset{3.0, 0.0};
  if (j.is_string()) {
    kind = j.get<std::string>();
  } else if (j.is_object()) {
    kind = require(j, "kind", path).get<std::string>();
    if (j.contains("offset")) {
      const auto v = vec_at(j.at("offset"), path + ".offset", 2, 2);
      offset = {v[0], v[1]};
    }
  } else {
    throw SchemaError(path, "expected a string or object");
  }
  if (kind == "disk") return DomainSpec::unit_disk();
  if (kind == "square") return DomainSpec::square();
  if (kind == "ball3d") return DomainSpec::unit_ball();
  if (kind == "pair") {
    try {
      return DomainSpec::disjoint_pair(offset);
    } catch (const std::invalid_argument& e) {
      throw SchemaError(path + ".offset", e.what());
    }
  }
  throw SchemaError(path + ".kind", "unknown domain '" + kind + "'");
}

inline PerturbFamily parse_family(const json& j, const DomainSpec& domain,
                                  const std::string& path) {
  const std::string name = require(j, "name", path).get<std::string>();
  auto vec3_of = [&](const json& v, const std::string& p) {
    const auto a = vec_at(v, p, 2, 3);
    return linalg::Vec3{a[0], a[1], a.size() > 2 ? a[2] : 0.0};
  };

  if (name == "translation")
    return PerturbFamily::translation(vec3_of(require(j, "direction", path), path + ".direction"));

  if (name == "dilation") {
    const double rate = num_at(require(j, "rate", path), path + ".rate");
    linalg::Vec3 center{domain.component_center(0).x, domain.component_center(0).y, 0.0};
    if (j.contains("center")) center = vec3_of(j.at("center"), path + ".center");
    return PerturbFamily::dilation(rate, center);
  }

  if (name == "disk.holomorphic_poly") {
    const json& coeffs = require(j, "coefficients", path);
    if (!coeffs.is_array() || coeffs.empty())
      throw SchemaError(path + ".coefficients", "expected a non-empty array");
    std::vector<std::pair<int, std::complex<double>>> terms;
    for (size_t i = 0; i < coeffs.size(); ++i) {
      const std::string p = path + ".coefficients[" + std::to_string(i) + "]";
      const auto row = vec_at(coeffs[i], p, 2, 3);
      const int power = static_cast<int>(std::lround(row[0]));
      if (power < 0) throw SchemaError(p, "power must be nonnegative");
      terms.emplace_back(power,
                         std::complex<double>(row[1], row.size() > 2 ? row[2] : 0.0));
    }
    return PerturbFamily::holomorphic_poly(terms);
  }

  if (name == "square.edge_bump") {
    PerturbFamily::EdgeProfiles prof;
    auto read = [&](const char* key, std::vector<double>& dst) {
      if (j.contains(key)) dst = vec_at(j.at(key), path + "." + key, 0, 16);
    };
    read("bottom", prof.bottom);
    read("top", prof.top);
    read("left", prof.left);
    read("right", prof.right);
    return PerturbFamily::square_edge_bump(prof);
  }

  if (name == "ball3d.quadratic_normal") {
    double constant = 0.0;
    linalg::Vec3 lin{};
    std::array<std::array<double, 3>, 3> quad{};
    if (j.contains("constant")) constant = num_at(j.at("constant"), path + ".constant");
    if (j.contains("linear")) lin = vec3_of(j.at("linear"), path + ".linear");
    if (j.contains("quadratic")) {
      const json& q = j.at("quadratic");
      if (!q.is_array() || q.size() != 3) throw SchemaError(path + ".quadratic", "expected 3x3");
      for (int r = 0; r < 3; ++r) {
        const auto row = vec_at(q[r], path + ".quadratic[" + std::to_string(r) + "]", 3, 3);
        for (int c = 0; c < 3; ++c) quad[r][c] = row[c];
      }
    }
    return PerturbFamily::ball_quadratic_normal(constant, lin, quad);
  }

  if (name == "pair.dilations") {
    const auto rates = vec_at(require(j, "rates", path), path + ".rates", 2, 2);
    return PerturbFamily::per_component(domain, PerturbFamily::dilation(rates[0]),
                                        PerturbFamily::dilation(rates[1]));
  }

  if (name == "pair.translations") {
    const json& dirs = require(j, "directions", path);
    if (!dirs.is_array() || dirs.size() != 2)
      throw SchemaError(path + ".directions", "expected two direction vectors");
    return PerturbFamily::per_component(
        domain, PerturbFamily::translation(vec3_of(dirs[0], path + ".directions[0]")),
        PerturbFamily::translation(vec3_of(dirs[1], path + ".directions[1]")));
  }

  throw SchemaError(path + ".name", "unknown family '" + name + "'");
}

inline void parse_eigenspace(const json& j, Scenario& sc, const std::string& path) {
  const std::string kind = require(j, "kind", path).get<std::string>();
  if (kind == "disk") {
    sc.space = Scenario::Space::disk;
    sc.disk_k = static_cast<int>(num_at(require(j, "k", path), path + ".k"));
    sc.disk_m = static_cast<int>(num_at(require(j, "m", path), path + ".m"));
  } else if (kind == "square") {
    sc.space = Scenario::Space::square;
    sc.sigma1 = static_cast<int>(num_at(require(j, "sigma1", path), path + ".sigma1"));
    sc.sigma2 = static_cast<int>(num_at(require(j, "sigma2", path), path + ".sigma2"));
  } else if (kind == "ball3d") {
    sc.space = Scenario::Space::ball3d;
  } else if (kind == "pair") {
    sc.space = Scenario::Space::pair;
  } else {
    throw SchemaError(path + ".kind", "unknown eigenspace '" + kind + "'");
  }
}

inline void check_space_domain(const Scenario& sc, const std::string& path) {
  const auto dk = sc.domain.kind();
  const bool ok = (sc.space == Scenario::Space::disk && dk == DomainKind::disk) ||
                  (sc.space == Scenario::Space::square && dk == DomainKind::square) ||
                  (sc.space == Scenario::Space::ball3d && dk == DomainKind::ball) ||
                  (sc.space == Scenario::Space::pair && dk == DomainKind::pair);
  if (!ok) throw SchemaError(path + ".eigenspace", "eigenspace does not match the domain");
}

}  // namespace detail

inline std::pair<Settings, std::vector<Scenario>> parse_config(const json& cfg) {
  Settings settings;
  if (cfg.contains("settings")) {
    const json& s = cfg.at("settings");
    if (!s.is_object()) throw SchemaError("settings", "expected an object");
    if (s.contains("seed")) settings.seed = s.at("seed").get<uint64_t>();
    if (s.contains("workers")) settings.workers = s.at("workers").get<int>();
    if (s.contains("periodic_nodes"))
      settings.resolutions.periodic_nodes = s.at("periodic_nodes").get<int>();
    if (s.contains("interval_panels"))
      settings.resolutions.interval_panels = s.at("interval_panels").get<int>();
    if (s.contains("sphere_polar")) settings.resolutions.sphere_polar = s.at("sphere_polar").get<int>();
    if (s.contains("sphere_azimuth"))
      settings.resolutions.sphere_azimuth = s.at("sphere_azimuth").get<int>();
  }

  if (!cfg.contains("scenarios") || !cfg.at("scenarios").is_array() || cfg.at("scenarios").empty())
    throw SchemaError("scenarios", "expected a non-empty array");

  std::vector<Scenario> out;
  std::map<std::string, int> seen;
  for (size_t i = 0; i < cfg.at("scenarios").size(); ++i) {
    const std::string path = "scenarios[" + std::to_string(i) + "]";
    const json& sj = cfg.at("scenarios")[i];
    if (!sj.is_object()) throw SchemaError(path, "expected an object");

    Scenario sc;
    sc.id = detail::require(sj, "id", path).get<std::string>();
    if (seen.count(sc.id)) throw SchemaError(path + ".id", "duplicate scenario id '" + sc.id + "'");
    seen[sc.id] = 1;

    sc.domain = detail::parse_domain(detail::require(sj, "domain", path), path + ".domain");
    if (!sj.contains("family")) throw SchemaError(path + ".family", "missing field");
    sc.family = detail::parse_family(sj.at("family"), sc.domain, path + ".family");
    detail::parse_eigenspace(detail::require(sj, "eigenspace", path), sc, path + ".eigenspace");
    detail::check_space_domain(sc, path);

    if (sj.contains("pipelines")) {
      const json& p = sj.at("pipelines");
      if (p.contains("closed_form")) sc.run_closed_form = p.at("closed_form").get<bool>();
      if (p.contains("quadrature")) sc.run_quadrature = p.at("quadrature").get<bool>();
      if (p.contains("fem_validate")) sc.run_fem = p.at("fem_validate").get<bool>();
    }
    if (sc.run_fem && !sc.domain.is_2d())
      throw SchemaError(path + ".pipelines.fem_validate", "FEM validation requires a 2D domain");
    if (!sc.run_closed_form && !sc.run_quadrature)
      throw SchemaError(path + ".pipelines", "enable at least one of closed_form / quadrature");

    if (sj.contains("tolerances")) {
      const json& t = sj.at("tolerances");
      if (t.contains("slope_rel"))
        sc.tol_rel = detail::num_at(t.at("slope_rel"), path + ".tolerances.slope_rel");
      if (t.contains("slope_abs"))
        sc.tol_abs = detail::num_at(t.at("slope_abs"), path + ".tolerances.slope_abs");
      if (sc.tol_rel < 0.0 || sc.tol_abs < 0.0 || (sc.tol_rel == 0.0 && sc.tol_abs == 0.0))
        throw SchemaError(path + ".tolerances", "tolerances must be positive");
    }
    if (sj.contains("t_grid"))
      sc.t_grid = detail::vec_at(sj.at("t_grid"), path + ".t_grid", 2, 64);
    if (sj.contains("mesh_levels")) {
      sc.mesh_levels.clear();
      const json& ml = sj.at("mesh_levels");
      if (!ml.is_array() || ml.size() < 2) throw SchemaError(path + ".mesh_levels", "need >= 2 levels");
      for (const auto& v : ml) sc.mesh_levels.push_back(v.get<int>());
    }
    if (sj.contains("window"))
      sc.window = detail::num_at(sj.at("window"), path + ".window");

    // Echo of the resolved configuration, defaults filled in.
    sc.resolved = json{{"id", sc.id},
                       {"domain", sj.at("domain")},
                       {"family", sj.at("family")},
                       {"eigenspace", sj.at("eigenspace")},
                       {"pipelines",
                        {{"closed_form", sc.run_closed_form},
                         {"quadrature", sc.run_quadrature},
                         {"fem_validate", sc.run_fem}}},
                       {"tolerances", {{"slope_rel", sc.tol_rel}, {"slope_abs", sc.tol_abs}}},
                       {"t_grid", sc.t_grid},
                       {"mesh_levels", sc.mesh_levels},
                       {"window", sc.window}};
    out.push_back(std::move(sc));
  }
  return {settings, out};
}

// ---------------------------------------------------------------------------
// Scenario execution.
// ---------------------------------------------------------------------------
namespace detail {

inline json matrix_to_json(const linalg::Matrix& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

inline json pencil_to_json(const hadamard::PencilMatrices& p) {
  return json{{"provenance",
               p.provenance == hadamard::Provenance::quadrature ? "quadrature" : "closed_form"},
              {"A", matrix_to_json(p.A)},
              {"B", matrix_to_json(p.B)}};
}

inline json prediction_to_json(const hadamard::SlopePrediction& pred) {
  json roots = json::array(), simple = json::array(), slopes = json::array();
  for (const auto& r : pred.roots) {
    roots.push_back(r.mu);
    simple.push_back(r.simple);
    slopes.push_back(r.slope);
  }
  return json{{"roots", roots},
              {"simple", simple},
              {"slopes", slopes},
              {"gap_tolerance", pred.pencil_roots.gap_tolerance}};
}

inline double max_entry_diff(const linalg::Matrix& a, const linalg::Matrix& b) {
  double m = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
  return m;
}

}  // namespace detail

struct ScenarioResult {
  std::string id;
  json report;
  std::string branches_csv;  // empty when FEM validation did not run
  bool validation_ran = false;
  bool validation_pass = true;
  bool numerical_failure = false;
};

inline ScenarioResult run_scenario(const Scenario& sc, const Settings& settings) {
  ScenarioResult result;
  result.id = sc.id;
  json report;
  report["id"] = sc.id;
  report["config"] = sc.resolved;
  report["config"]["settings"] = {{"seed", settings.seed},
                                  {"quick", settings.quick},
                                  {"periodic_nodes", settings.resolutions.periodic_nodes},
                                  {"interval_panels", settings.resolutions.interval_panels},
                                  {"sphere_polar", settings.resolutions.sphere_polar},
                                  {"sphere_azimuth", settings.resolutions.sphere_azimuth}};

  try {
    // Eigenspace.
    modes::Eigenspace space = [&]() {
      switch (sc.space) {
        case Scenario::Space::disk: return modes::disk_eigenspace(sc.disk_k, sc.disk_m);
        case Scenario::Space::square: return modes::square_eigenspace(sc.sigma1, sc.sigma2);
        case Scenario::Space::ball3d: return modes::ball3d_second_eigenspace();
        case Scenario::Space::pair: return modes::disjoint_pair_eigenspace(sc.domain);
      }
      throw std::logic_error("unreachable");
    }();
    report["lambda0"] = space.lambda0;
    report["dimension"] = space.dimension();

    const auto speed = geometry::normal_speed(sc.domain, sc.family);

    json pencil_section;
    std::optional<hadamard::PencilMatrices> quad, closed;
    if (sc.run_quadrature) {
      quad = hadamard::assemble_quadrature(space, speed, settings.resolutions);
      pencil_section["quadrature"] = detail::pencil_to_json(*quad);
    }
    if (sc.run_closed_form) {
      json extras;
      switch (sc.space) {
        case Scenario::Space::disk: {
          const auto cf = hadamard::disk_closed_form(space, speed, settings.resolutions);
          closed = cf.pencil;
          extras = {{"discriminant", cf.discriminant},
                    {"delta_cos0", cf.delta_cos0},
                    {"delta_cos2k", cf.delta_cos2k},
                    {"delta_sin2k", cf.delta_sin2k}};
          break;
        }
        case Scenario::Space::square: {
          const auto cf = hadamard::square_closed_form(space, speed, settings.resolutions);
          closed = cf.pencil;
          json eta = json::object(), mu = json::object();
          for (const auto& [k, v] : cf.eta_hat) eta[std::to_string(k)] = v;
          for (const auto& [k, v] : cf.mu_hat) mu[std::to_string(k)] = v;
          extras = {{"genericity",
                     {{"offdiag", cf.generic_offdiag}, {"diag", cf.generic_diag}}},
                    {"eta_hat", eta},
                    {"mu_hat", mu}};
          break;
        }
        case Scenario::Space::ball3d: {
          const auto cf = hadamard::ball3d_closed_form(space, speed, settings.resolutions);
          closed = cf.pencil;
          extras = {{"a_scaled", cf.a_scaled}, {"residual", detail::matrix_to_json(cf.residual)}};
          break;
        }
        case Scenario::Space::pair: {
          const auto cf = hadamard::pair_closed_form(space, speed, settings.resolutions);
          closed = cf.pencil;
          extras = {{"delta_zero_mode", {cf.delta_zero_mode[0], cf.delta_zero_mode[1]}}};
          break;
        }
      }
      pencil_section["closed_form"] = detail::pencil_to_json(*closed);
      pencil_section["closed_form"]["extras"] = extras;
    }
    if (quad && closed)
      pencil_section["agreement_max_abs_diff"] = detail::max_entry_diff(quad->A, closed->A);
    report["pencil"] = pencil_section;

    if (!quad && !closed)
      throw std::invalid_argument("scenario enables neither quadrature nor closed form");
    const hadamard::PencilMatrices& pencil = quad ? *quad : *closed;
    const auto prediction = hadamard::predict_slopes(pencil);
    report["prediction"] = detail::prediction_to_json(prediction);

    if (sc.run_fem) {
      branches::BranchOptions opts;
      opts.window = sc.window;
      opts.t_grid = sc.t_grid;
      opts.mesh_levels = sc.mesh_levels;
      opts.expected_dim = space.dimension();
      opts.seed = settings.seed ^ std::hash<std::string>{}(sc.id);
      const auto table = branches::sample_branches(sc.domain, sc.family, space.lambda0, opts);
      const auto slopes = branches::estimate_slopes(table);
      const auto verdict =
          branches::compare(prediction, slopes, sc.tol_abs, sc.tol_rel, pencil.A, pencil.B);

      json measured = json::array();
      for (const auto& s : slopes)
        measured.push_back(
            {{"branch", s.branch_id}, {"slope", s.slope}, {"uncertainty", s.uncertainty}});
      json matches = json::array();
      for (const auto& m : verdict.matches)
        matches.push_back({{"branch", m.branch_id},
                           {"predicted", m.predicted},
                           {"measured", m.measured},
                           {"uncertainty", m.uncertainty},
                           {"informational", m.informational},
                           {"pass", m.informational ? json() : json(m.pass)}});
      report["validation"] = {
          {"measured", measured},
          {"matches", matches},
          {"counts_ok", verdict.counts_ok},
          {"sum_rule",
           {{"measured_sum", verdict.sum_rule.measured_sum},
            {"trace_target", verdict.sum_rule.trace_target},
            {"tolerance", verdict.sum_rule.tolerance},
            {"pass", verdict.sum_rule.pass}}},
          {"observed_order", table.observed_order},
          {"pass", verdict.pass},
          {"diagnostic", verdict.diagnostic}};

      std::ostringstream csv;
      branches::write_branches_csv(csv, table);
      result.branches_csv = csv.str();
      result.validation_ran = true;
      result.validation_pass = verdict.pass;
    }

    report["status"] = "ok";
  } catch (const std::exception& e) {
    report["status"] = "error";
    report["error"] = {{"code", "numerical"}, {"message", e.what()}};
    result.numerical_failure = true;
  }
  result.report = std::move(report);
  return result;
}

// ---------------------------------------------------------------------------
// Batch runner.
// ---------------------------------------------------------------------------
inline ExitCode run(const std::string& config_path, Settings overrides, std::ostream& log,
                    bool allow_fem = true) {
  json cfg;
  {
    std::ifstream in(config_path);
    if (!in) {
      log << json{{"error", {{"code", "schema"}, {"path", config_path},
                             {"message", "cannot open config file"}}}}
                 .dump(2)
          << "\n";
      return ExitCode::schema;
    }
    try {
      in >> cfg;
    } catch (const std::exception& e) {
      log << json{{"error",
                   {{"code", "schema"}, {"path", config_path}, {"message", e.what()}}}}
                 .dump(2)
          << "\n";
      return ExitCode::schema;
    }
  }

  Settings settings;
  std::vector<Scenario> scenarios;
  try {
    auto parsed = parse_config(cfg);
    settings = parsed.first;
    scenarios = std::move(parsed.second);
  } catch (const SchemaError& e) {
    log << json{{"error", {{"code", "schema"}, {"path", e.path}, {"message", e.what()}}}}.dump(2)
        << "\n";
    return ExitCode::schema;
  } catch (const std::exception& e) {
    // Type errors from the JSON accessors land here.
    log << json{{"error", {{"code", "schema"}, {"path", "config"}, {"message", e.what()}}}}.dump(2)
        << "\n";
    return ExitCode::schema;
  }

  // Command-line overrides.
  settings.out_dir = overrides.out_dir;
  settings.quick = overrides.quick;
  settings.dump_mesh = overrides.dump_mesh;
  if (overrides.workers > 0) settings.workers = overrides.workers;
  if (overrides.seed != 0) settings.seed = overrides.seed;
  if (settings.quick) {
    settings.resolutions = settings.resolutions.halved();
    for (auto& sc : scenarios) {
      for (auto& l : sc.mesh_levels) l = std::max(4, l / 2);
      sc.resolved["mesh_levels"] = sc.mesh_levels;
    }
  }
  if (!allow_fem) {
    // `predict` runs the pencil pipelines only.
    for (auto& sc : scenarios) {
      sc.run_fem = false;
      sc.resolved["pipelines"]["fem_validate"] = false;
    }
  }

  std::filesystem::create_directories(settings.out_dir);

  // Scenario-level worker pool; results land in a fixed slot per scenario so
  // the output is byte-identical for any worker count.
  std::vector<ScenarioResult> results(scenarios.size());
  std::atomic<size_t> next{0};
  auto work = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= scenarios.size()) return;
      results[i] = run_scenario(scenarios[i], settings);
    }
  };
  const int nworkers = std::max(1, std::min<int>(settings.workers, scenarios.size()));
  std::vector<std::thread> pool;
  for (int w = 1; w < nworkers; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();

  bool any_numerical = false, any_validation_fail = false;
  for (size_t i = 0; i < scenarios.size(); ++i) {
    const auto& r = results[i];
    const auto dir = std::filesystem::path(settings.out_dir);
    {
      std::ofstream out(dir / (r.id + ".report.json"));
      out << r.report.dump(2) << "\n";
    }
    if (!r.branches_csv.empty()) {
      std::ofstream out(dir / (r.id + ".branches.csv"));
      out << r.branches_csv;
    }
    if (settings.dump_mesh && scenarios[i].domain.is_2d()) {
      for (int l : scenarios[i].mesh_levels) {
        std::ofstream out(dir / (r.id + ".mesh_" + std::to_string(l) + ".txt"));
        fem::write_mesh(out, fem::mesh_domain(scenarios[i].domain, l));
      }
    }
    any_numerical = any_numerical || r.numerical_failure;
    any_validation_fail = any_validation_fail || (r.validation_ran && !r.validation_pass);
    log << r.id << ": "
        << (r.numerical_failure ? "numerical-error"
                                : (r.validation_ran ? (r.validation_pass ? "pass" : "fail")
                                                    : "predicted"))
        << "\n";
  }
  if (any_numerical) return ExitCode::numerical;
  if (any_validation_fail) return ExitCode::validation;
  return ExitCode::ok;
}

// ---------------------------------------------------------------------------
// dift example runner.
// ---------------------------------------------------------------------------
inline ExitCode run_dift(const std::string& name, const std::string& out_dir, std::ostream& log) {
  dift::DiftProblem problem;
  double lambda0 = 0.0;
  bool is_matrix = false;
  if (name == "dift.trivial_linear") {
    problem = dift::examples::trivial_linear();
  } else if (name == "dift.matrix_family_2x2") {
    auto ex = dift::examples::matrix_family_2x2();
    problem = std::move(ex.problem);
    lambda0 = ex.lambda0;
    is_matrix = true;
  } else if (name == "dift.matrix_family_2x2_offdiag") {
    auto ex = dift::examples::matrix_family_2x2_offdiag();
    problem = std::move(ex.problem);
    lambda0 = ex.lambda0;
    is_matrix = true;
  } else if (name == "dift.matrix_family_2x2_equal") {
    auto ex = dift::examples::matrix_family_2x2_equal();
    problem = std::move(ex.problem);
    lambda0 = ex.lambda0;
    is_matrix = true;
  } else if (name == "dift.matrix_family_3x3") {
    auto ex = dift::examples::matrix_family_3x3();
    problem = std::move(ex.problem);
    lambda0 = ex.lambda0;
    is_matrix = true;
  } else {
    log << json{{"error",
                 {{"code", "schema"}, {"path", "example"}, {"message", "unknown example '" + name + "'"}}}}
               .dump(2)
        << "\n";
    return ExitCode::schema;
  }

  json out;
  out["name"] = name;
  const auto rep = dift::check_conditions(problem);
  out["conditions"] = {{"manifold_ok", rep.manifold_ok},
                       {"kernel_ok", rep.kernel_ok},
                       {"compat_ok", rep.compat_ok},
                       {"transversal_ok", rep.transversal_ok},
                       {"manifold_residual", rep.manifold_residual},
                       {"kernel_column_norm", rep.kernel_column_norm},
                       {"x1_min_singular", rep.x1_min_singular},
                       {"compat_residual", rep.compat_residual},
                       {"transversal_ratio", rep.transversal_ratio},
                       {"failing", rep.failing()}};
  out["all_ok"] = rep.all_ok();

  ExitCode code = ExitCode::ok;
  if (rep.all_ok()) {
    try {
      std::vector<double> grid;
      for (int i = 1; i <= 8; ++i) {
        grid.push_back(0.0125 * i);
        grid.push_back(-0.0125 * i);
      }
      const auto branch = dift::solve_branch(problem, grid);
      json t = json::array(), x = json::array(), newton = json::array();
      for (size_t i = 0; i < branch.t.size(); ++i) {
        t.push_back(branch.t[i]);
        x.push_back(branch.x[i]);
        newton.push_back({{"t", branch.diagnostics[i].t},
                          {"iterations", branch.diagnostics[i].iterations},
                          {"residual", branch.diagnostics[i].residual},
                          {"quadratic", branch.diagnostics[i].quadratic}});
      }
      out["branch"] = {{"t", t},
                       {"x", x},
                       {"x_prime0", branch.x_prime0},
                       {"tangency_residual", branch.tangency_residual},
                       {"max_residual", branch.max_residual},
                       {"newton", newton}};
      if (is_matrix) {
        json lambdas = json::array();
        for (size_t i = 0; i < branch.t.size(); ++i) lambdas.push_back(lambda0 + branch.x[i][0]);
        out["branch"]["lambda"] = lambdas;
        out["branch"]["lambda_prime0"] = branch.x_prime0[0];
      }
    } catch (const std::exception& e) {
      out["error"] = {{"code", "numerical"}, {"message", e.what()}};
      code = ExitCode::numerical;
    }
  } else {
    code = ExitCode::validation;
  }

  std::filesystem::create_directories(out_dir);
  std::ofstream file(std::filesystem::path(out_dir) / (name + ".dift.json"));
  file << out.dump(2) << "\n";
  log << out.dump(2) << "\n";
  return code;
}

}  // namespace eigperturb::cli
