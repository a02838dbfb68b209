#pragma once

// Run configuration (JSON), orchestration of the run kinds, and export of
// summary.json plus long-format x,z,value CSV maps.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "sgwave/approximations.hpp"
#include "sgwave/exact_evolution.hpp"
#include "sgwave/observables.hpp"
#include "sgwave/textbook_reference.hpp"
#include "sgwave/tomography.hpp"

namespace sgwave {

using json = nlohmann::json;

enum class RunKind { evolve, approximate, compare, asymmetry, tomography, sweep };

inline const char* run_kind_name(RunKind k) {
  switch (k) {
    case RunKind::evolve: return "evolve";
    case RunKind::approximate: return "approximate";
    case RunKind::compare: return "compare";
    case RunKind::asymmetry: return "asymmetry";
    case RunKind::tomography: return "tomography";
    case RunKind::sweep: return "sweep";
  }
  return "?";
}

enum class SpinSelection { up, down, both };

struct SweepSpec {
  std::string axis;  ///< "A", "S" or "z0"
  std::vector<double> values;
  std::string hold = "none";  ///< "AS" keeps the product A*S of the base config
};

struct TomographySpec {
  std::optional<PolarizationVector> injected;  ///< synthetic observed map
  double noise = 0.0;                          ///< uniform noise amplitude, units of max(P0)
  std::uint64_t seed = 1;
  std::string observed_path;  ///< CSV map to fit instead of a synthetic one
};

struct RunConfig {
  SimParams params;
  RunKind kind = RunKind::evolve;
  SpinSelection m0 = SpinSelection::both;
  bool drift = true;
  std::string out_dir = "out";
  int stride = 20;
  Approximation approximation = Approximation::symmetrized;
  std::optional<SweepSpec> sweep;
  TomographySpec tomography;
  json echo;  ///< normalized config as parsed, echoed into summary.json
};

namespace detail {

inline double number_at(const json& j, const std::string& key) {
  const json& v = j.at(key);
  if (!v.is_number()) throw ValidationError(key + ": must be a number");
  return v.get<double>();
}

inline int integer_at(const json& j, const std::string& key) {
  const json& v = j.at(key);
  if (!v.is_number_integer()) throw ValidationError(key + ": must be an integer");
  return v.get<int>();
}

inline bool bool_at(const json& j, const std::string& key) {
  const json& v = j.at(key);
  if (!v.is_boolean()) throw ValidationError(key + ": must be true or false");
  return v.get<bool>();
}

inline std::string string_at(const json& j, const std::string& key) {
  const json& v = j.at(key);
  if (!v.is_string()) throw ValidationError(key + ": must be a string");
  return v.get<std::string>();
}

inline void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ValidationError(where + it.key() + ": unknown key");
}

inline RunKind run_kind_from(const std::string& s) {
  for (RunKind k : {RunKind::evolve, RunKind::approximate, RunKind::compare, RunKind::asymmetry,
                    RunKind::tomography, RunKind::sweep})
    if (s == run_kind_name(k)) return k;
  throw ValidationError("kind: must be one of evolve, approximate, compare, asymmetry, tomography, sweep");
}

}  // namespace detail

/// Parses and validates a JSON run configuration, applying defaults.
inline RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config: not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("config: must be a JSON object");
  detail::reject_unknown(j,
                         {"A", "S", "z0", "n_basis", "grid_extent", "grid_points", "dt", "textbook_mode",
                          "kind", "m0", "drift", "out", "stride", "approximation", "sweep", "tomography"},
                         "");
  std::string missing;
  for (const char* key : {"A", "S", "z0"})
    if (!j.contains(key)) missing += (missing.empty() ? "" : ", ") + std::string(key);
  if (!missing.empty()) throw ValidationError("missing required keys: " + missing);

  RunConfig c;
  c.params = SimParams::with_defaults(detail::number_at(j, "A"), detail::number_at(j, "S"),
                                      detail::number_at(j, "z0"));
  if (j.contains("n_basis")) c.params.n_basis = detail::integer_at(j, "n_basis");
  if (j.contains("grid_extent")) c.params.grid_extent = detail::number_at(j, "grid_extent");
  if (j.contains("grid_points")) c.params.grid_points = detail::integer_at(j, "grid_points");
  if (j.contains("dt")) c.params.dt = detail::number_at(j, "dt");
  if (j.contains("textbook_mode")) c.params.textbook_mode = detail::bool_at(j, "textbook_mode");
  if (j.contains("kind")) c.kind = detail::run_kind_from(detail::string_at(j, "kind"));
  if (j.contains("m0")) {
    const json& v = j.at("m0");
    if (v.is_string() && v == "both") c.m0 = SpinSelection::both;
    else if ((v.is_string() && v == "up") || (v.is_number() && v.get<double>() == 0.5)) c.m0 = SpinSelection::up;
    else if ((v.is_string() && v == "down") || (v.is_number() && v.get<double>() == -0.5)) c.m0 = SpinSelection::down;
    else throw ValidationError("m0: must be \"up\", \"down\", \"both\", 0.5 or -0.5");
  }
  if (j.contains("drift")) c.drift = detail::bool_at(j, "drift");
  if (j.contains("out")) c.out_dir = detail::string_at(j, "out");
  if (j.contains("stride")) c.stride = detail::integer_at(j, "stride");
  if (c.stride < 1) throw ValidationError("stride: must be >= 1");
  if (j.contains("approximation")) c.approximation = approximation_from_name(detail::string_at(j, "approximation"));

  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    if (!s.is_object()) throw ValidationError("sweep: must be an object");
    detail::reject_unknown(s, {"axis", "values", "hold"}, "sweep.");
    SweepSpec sw;
    if (!s.contains("axis")) throw ValidationError("sweep.axis: required");
    sw.axis = detail::string_at(s, "axis");
    if (sw.axis != "A" && sw.axis != "S" && sw.axis != "z0") throw ValidationError("sweep.axis: must be A, S or z0");
    if (!s.contains("values") || !s.at("values").is_array() || s.at("values").empty())
      throw ValidationError("sweep.values: must be a nonempty array of numbers");
    for (const json& v : s.at("values")) {
      if (!v.is_number()) throw ValidationError("sweep.values: must be a nonempty array of numbers");
      sw.values.push_back(v.get<double>());
    }
    if (s.contains("hold")) sw.hold = detail::string_at(s, "hold");
    if (sw.hold != "AS" && sw.hold != "none") throw ValidationError("sweep.hold: must be \"AS\" or \"none\"");
    if (sw.hold == "AS" && sw.axis == "z0") throw ValidationError("sweep.hold: AS can only be held along A or S");
    c.sweep = sw;
  }
  if (c.kind == RunKind::sweep && !c.sweep) throw ValidationError("sweep: required when kind = sweep");

  if (j.contains("tomography")) {
    const json& t = j.at("tomography");
    if (!t.is_object()) throw ValidationError("tomography: must be an object");
    detail::reject_unknown(t, {"p", "noise", "seed", "observed"}, "tomography.");
    if (t.contains("p")) {
      const json& p = t.at("p");
      if (!p.is_array() || p.size() != 3 || !p[0].is_number() || !p[1].is_number() || !p[2].is_number())
        throw ValidationError("tomography.p: must be an array of three numbers");
      PolarizationVector v{p[0].get<double>(), p[1].get<double>(), p[2].get<double>()};
      if (v.magnitude() > 1.0 + 1e-12) throw ValidationError("tomography.p: |p| must be <= 1");
      c.tomography.injected = v;
    }
    if (t.contains("noise")) c.tomography.noise = detail::number_at(t, "noise");
    if (c.tomography.noise < 0.0) throw ValidationError("tomography.noise: must be >= 0");
    if (t.contains("seed")) {
      if (!t.at("seed").is_number_unsigned()) throw ValidationError("tomography.seed: must be a non-negative integer");
      c.tomography.seed = t.at("seed").get<std::uint64_t>();
    }
    if (t.contains("observed")) c.tomography.observed_path = detail::string_at(t, "observed");
  }
  if (c.kind == RunKind::tomography && !c.tomography.injected && c.tomography.observed_path.empty())
    throw ValidationError("tomography: needs either p (synthetic) or observed (CSV path)");

  validate(c.params);
  c.echo = j;
  c.echo["grid_extent"] = c.params.grid_extent;
  c.echo["n_basis"] = c.params.n_basis;
  c.echo["grid_points"] = c.params.grid_points;
  c.echo["dt"] = c.params.dt;
  c.echo["kind"] = run_kind_name(c.kind);
  return c;
}

// ---------------------------------------------------------------------------
// CSV maps: header "x,z,value", one row per grid point, x varying slowest.

inline void write_map_csv(const std::filesystem::path& path, const GridMap& map) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "x,z,value\n";
  char line[96];
  for (int ix = 0; ix < map.grid.points; ++ix)
    for (int iz = 0; iz < map.grid.points; ++iz) {
      std::snprintf(line, sizeof line, "%.12e,%.12e,%.12e\n", map.grid.coord(ix), map.grid.coord(iz),
                    map.values(ix, iz));
      out << line;
    }
}

/// Reads a map written by write_map_csv and recovers its grid geometry.
inline GridMap read_map_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "x,z,value") throw ValidationError(path.string() + ": missing x,z,value header");
  std::vector<double> xs, zs, vs;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double x, z, v;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &x, &z, &v) != 3)
      throw ValidationError(path.string() + ": malformed row '" + line + "'");
    xs.push_back(x);
    zs.push_back(z);
    vs.push_back(v);
  }
  const auto n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(vs.size()))));
  if (n < 2 || static_cast<std::size_t>(n) * n != vs.size())
    throw ValidationError(path.string() + ": row count is not a square grid");
  GridMap map{Grid{-xs.front(), n}, RMatrix(n, n)};
  const double tol = 1e-9 * std::max(1.0, map.grid.extent);
  for (int ix = 0; ix < n; ++ix)
    for (int iz = 0; iz < n; ++iz) {
      const std::size_t r = static_cast<std::size_t>(ix) * n + iz;
      if (std::abs(xs[r] - map.grid.coord(ix)) > tol || std::abs(zs[r] - map.grid.coord(iz)) > tol)
        throw ValidationError(path.string() + ": coordinates are not a uniform square grid");
      map.values(ix, iz) = vs[r];
    }
  return map;
}

// ---------------------------------------------------------------------------
// Orchestration.

namespace detail {

inline json moments_json(const std::optional<Moments>& m) {
  if (!m) return nullptr;
  return {{"weight", m->weight}, {"mean_x", m->mean_x}, {"mean_z", m->mean_z}, {"var_x", m->var_x}, {"var_z", m->var_z}};
}

inline json component_json(const ComponentMoments& c) {
  return {{"up", moments_json(c.up)}, {"down", moments_json(c.down)}};
}

inline std::vector<Spin> selected_spins(SpinSelection s) {
  if (s == SpinSelection::up) return {Spin::up};
  if (s == SpinSelection::down) return {Spin::down};
  return {Spin::up, Spin::down};
}

/// Exact runs for each requested spin, evaluated concurrently.
inline std::map<Spin, EvolutionRecord> exact_runs(const SimParams& p, const std::vector<Spin>& spins, bool drift,
                                                  int stride) {
  std::map<Spin, std::future<EvolutionRecord>> jobs;
  for (Spin s : spins)
    jobs.emplace(s, std::async(std::launch::async, [=] { return evolve_and_drift(p, s, drift, stride); }));
  std::map<Spin, EvolutionRecord> out;
  for (auto& [s, f] : jobs) out.emplace(s, f.get());
  return out;
}

inline RunPair approximate_pair(Approximation kind, const SimParams& p, double t) {
  auto plus = std::async(std::launch::async, [&] { return approximate_wavefunction(kind, p, t, Spin::up); });
  GridSpinor minus = approximate_wavefunction(kind, p, t, Spin::down);
  return {plus.get(), std::move(minus)};
}

struct Artifacts {
  std::filesystem::path dir;
  json warnings = json::array();

  void map(const std::string& name, const GridMap& m) const { write_map_csv(dir / name, m); }
};

inline void write_pair_maps(const Artifacts& art, const RunPair& pair) {
  const GridMap p0 = probability_density(pair);
  const AsymmetryMaps a = asymmetry_maps(pair);
  art.map("p0.csv", p0);
  art.map("ax.csv", a.ax);
  art.map("ay.csv", a.ay);
  art.map("az.csv", a.az);
  art.map("flip_density.csv", spin_flip_density(pair.plus, Spin::up));
}

inline json pair_summary(const RunPair& pair) {
  const ObservableReport r = make_report(pair);
  return {{"flip_up_to_down", r.flip_up_to_down},
          {"flip_down_to_up", r.flip_down_to_up},
          {"moments_m0_up", component_json(r.moments_plus)},
          {"moments_m0_down", component_json(r.moments_minus)},
          {"lobes", {{"upper", moments_json(r.lobes.upper)}, {"lower", moments_json(r.lobes.lower)}}},
          {"max_abs_ax", r.asymmetries.ax.values.cwiseAbs().maxCoeff()},
          {"max_abs_ay", r.asymmetries.ay.values.cwiseAbs().maxCoeff()},
          {"max_abs_az", r.asymmetries.az.values.cwiseAbs().maxCoeff()},
          {"max_flip_density", r.flip_density.values.maxCoeff()}};
}

inline void write_trajectory(const Artifacts& art, const std::map<Spin, EvolutionRecord>& runs) {
  std::ofstream out(art.dir / "trajectory.csv");
  out << "m0,t,component,weight,mean_x,mean_z,var_x,var_z\n";
  char line[256];
  for (const auto& [m0, rec] : runs)
    for (const Snapshot& s : rec.snapshots) {
      const ComponentMoments cm = coefficient_moments(s.coeffs);
      for (Spin comp : {Spin::up, Spin::down}) {
        const auto& m = comp == Spin::up ? cm.up : cm.down;
        if (!m) continue;
        std::snprintf(line, sizeof line, "%+.1f,%.6f,%s,%.12e,%.12e,%.12e,%.12e,%.12e\n", projection(m0), s.t,
                      spin_name(comp), m->weight, m->mean_x, m->mean_z, m->var_x, m->var_z);
        out << line;
      }
    }
}

inline json run_record_json(Spin m0, const EvolutionRecord& rec) {
  return {{"m0", projection(m0)},
          {"flip_probability", spin_flip_probability(*rec.final_grid, m0)},
          {"max_norm_drift", rec.max_norm_drift},
          {"max_edge_population", rec.max_edge_population},
          {"basis_truncation_warning", rec.truncation_warning},
          {"grid_warning", rec.final_grid->truncation_warning},
          {"moments_t1", component_json(coefficient_moments(rec.final))},
          {"moments_final", component_json(component_moments(*rec.final_grid))}};
}

inline void collect_warnings(Artifacts& art, const std::map<Spin, EvolutionRecord>& runs) {
  for (const auto& [m0, rec] : runs) {
    if (rec.truncation_warning)
      art.warnings.push_back(std::string("basis truncation: top-shell population exceeds 1e-6 for m0 = ") + spin_name(m0));
    if (rec.final_grid && rec.final_grid->truncation_warning)
      art.warnings.push_back(std::string("grid: probability near the boundary for m0 = ") + spin_name(m0));
  }
}

inline RunPair pair_from(const std::map<Spin, EvolutionRecord>& runs) {
  return {*runs.at(Spin::up).final_grid, *runs.at(Spin::down).final_grid};
}

/// Exact pair at t = 1 and the four overlap deficits against it.
inline json compare_at(const SimParams& p, Artifacts* art) {
  const auto runs = exact_runs(p, {Spin::up, Spin::down}, false, std::numeric_limits<int>::max());
  const RunPair exact = pair_from(runs);
  json deficits = json::object(), flips = json::object();
  for (Approximation a : kAllApproximations) {
    const RunPair ap = approximate_pair(a, p, 1.0);
    deficits[approximation_name(a)] = 1.0 - overlap(exact, ap);
    flips[approximation_name(a)] = {{"flip_up_to_down", spin_flip_probability(ap.plus, Spin::up)},
                                    {"flip_down_to_up", spin_flip_probability(ap.minus, Spin::down)}};
  }
  if (art) {
    collect_warnings(*art, runs);
    write_pair_maps(*art, exact);
  }
  return {{"A", p.A},
          {"S", p.S},
          {"z0", p.z0},
          {"n_basis", p.n_basis},
          {"flip_up_to_down", spin_flip_probability(exact.plus, Spin::up)},
          {"flip_down_to_up", spin_flip_probability(exact.minus, Spin::down)},
          {"overlap_deficits", deficits},
          {"approximation_flips", flips},
          {"max_edge_population",
           std::max(runs.at(Spin::up).max_edge_population, runs.at(Spin::down).max_edge_population)}};
}

/// Basis size that keeps the top shells empty at separation S (about 5 levels
/// per unit of S, never below the configured size).
inline int basis_for_separation(int configured, double S) {
  return std::max(configured, static_cast<int>(std::ceil(5.0 * S)));
}

inline SimParams sweep_point(const SimParams& base, const SweepSpec& sw, double v) {
  SimParams p = base;
  const double product = base.A * base.S;
  if (sw.axis == "A") {
    p.A = v;
    if (sw.hold == "AS") p.S = product / v;
  } else if (sw.axis == "S") {
    p.S = v;
    if (sw.hold == "AS") p.A = product / v;
  } else {
    p.z0 = v;
    p.grid_extent = std::max(base.grid_extent, SimParams::with_defaults(p.A, p.S, v).grid_extent);
  }
  p.n_basis = basis_for_separation(base.n_basis, p.S);
  validate(p);
  return p;
}

inline GridMap synthetic_observation(const AsymmetryBasis& basis, const TomographySpec& spec) {
  GridMap obs = predicted_density(basis, *spec.injected);
  if (spec.noise > 0.0) {
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double amp = spec.noise * basis.p0.values.maxCoeff();
    for (Eigen::Index i = 0; i < obs.values.size(); ++i) obs.values.data()[i] += amp * u(rng);
  }
  return obs;
}

}  // namespace detail

/// Executes one configuration, writes its artifacts, and returns the summary.
/// Module errors propagate as exceptions.
inline json execute(const RunConfig& c) {
  const auto start = std::chrono::steady_clock::now();
  namespace fs = std::filesystem;
  fs::create_directories(c.out_dir);
  detail::Artifacts art{fs::path(c.out_dir)};
  const SimParams& p = c.params;

  json summary;
  summary["config"] = c.echo;
  summary["grid"] = {{"extent", p.grid_extent}, {"points", p.grid_points}, {"spacing", grid_of(p).spacing()}};
  summary["drift_time"] = p.A * p.S > 0.0 && c.drift ? json(drift_time(p)) : json(nullptr);

  switch (c.kind) {
    case RunKind::evolve: {
      const auto spins = detail::selected_spins(c.m0);
      const auto runs = detail::exact_runs(p, spins, c.drift, c.stride);
      detail::collect_warnings(art, runs);
      json list = json::array();
      for (const auto& [m0, rec] : runs) list.push_back(detail::run_record_json(m0, rec));
      summary["runs"] = list;
      detail::write_trajectory(art, runs);
      if (runs.size() == 2) {
        const RunPair pair = detail::pair_from(runs);
        summary["observables"] = detail::pair_summary(pair);
        detail::write_pair_maps(art, pair);
      } else {
        const auto& [m0, rec] = *runs.begin();
        art.map("flip_density.csv", spin_flip_density(*rec.final_grid, m0));
      }
      break;
    }
    case RunKind::approximate: {
      RunPair pair = detail::approximate_pair(c.approximation, p, 1.0);
      if (c.drift) {
        const double td = drift_time(p);
        pair = {free_drift(pair.plus, td, p), free_drift(pair.minus, td, p)};
      }
      summary["approximation"] = approximation_name(c.approximation);
      summary["observables"] = detail::pair_summary(pair);
      detail::write_pair_maps(art, pair);
      break;
    }
    case RunKind::compare: {
      summary["compare"] = detail::compare_at(p, &art);
      break;
    }
    case RunKind::asymmetry:
    case RunKind::tomography: {
      const auto runs = detail::exact_runs(p, {Spin::up, Spin::down}, c.drift, c.stride);
      detail::collect_warnings(art, runs);
      const RunPair pair = detail::pair_from(runs);
      summary["observables"] = detail::pair_summary(pair);
      detail::write_pair_maps(art, pair);
      if (c.kind == RunKind::tomography) {
        const AsymmetryBasis basis = AsymmetryBasis::from(probability_density(pair), asymmetry_maps(pair));
        const GridMap observed = c.tomography.observed_path.empty()
                                     ? detail::synthetic_observation(basis, c.tomography)
                                     : read_map_csv(c.tomography.observed_path);
        art.map("observed.csv", observed);
        const PolarizationFit fit = reconstruct_polarization(observed, basis);
        json t = {{"p", {fit.p.px, fit.p.py, fit.p.pz}},
                  {"residual", fit.residual},
                  {"condition_number", fit.condition_number},
                  {"scale_fitted", fit.scale_fitted},
                  {"scale", fit.scale},
                  {"unphysical", fit.unphysical}};
        if (c.tomography.injected) {
          const auto& q = *c.tomography.injected;
          t["injected_p"] = {q.px, q.py, q.pz};
        }
        summary["tomography"] = t;
      }
      break;
    }
    case RunKind::sweep: {
      json points = json::array();
      std::ofstream csv(art.dir / "sweep.csv");
      csv << "A,S,z0,n_basis,flip_up_to_down,flip_down_to_up,adiabatic,pseudo_adiabatic,coherent_state,symmetrized\n";
      for (double v : c.sweep->values) {
        const SimParams q = detail::sweep_point(p, *c.sweep, v);
        json point = detail::compare_at(q, nullptr);
        if (point["max_edge_population"].get<double>() > kEdgePopulationLimit)
          art.warnings.push_back("basis truncation at sweep value " + std::to_string(v));
        char line[512];
        const json& d = point["overlap_deficits"];
        std::snprintf(line, sizeof line, "%.12e,%.12e,%.12e,%d,%.12e,%.12e,%.12e,%.12e,%.12e,%.12e\n", q.A, q.S,
                      q.z0, q.n_basis, point["flip_up_to_down"].get<double>(),
                      point["flip_down_to_up"].get<double>(), d["adiabatic"].get<double>(),
                      d["pseudo_adiabatic"].get<double>(), d["coherent_state"].get<double>(),
                      d["symmetrized"].get<double>());
        csv << line;
        points.push_back(point);
      }
      summary["sweep"] = points;
      break;
    }
  }

  summary["warnings"] = art.warnings;
  summary["wall_time_s"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ofstream(art.dir / "summary.json") << summary.dump(2) << "\n";
  return summary;
}

inline json error_json(const std::string& type, const std::string& message) {
  return {{"error", {{"type", type}, {"message", message}}}};
}

/// Exit codes: 0 success, 2 validation error, 3 numerical failure. Errors are
/// reported on err as a one-line JSON object.
inline int run(const RunConfig& c, std::ostream& err) {
  try {
    execute(c);
    return 0;
  } catch (const ValidationError& e) {
    err << error_json("validation", e.what()).dump() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    err << error_json("numerical", e.what()).dump() << "\n";
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    err << error_json("validation", e.what()).dump() << "\n";
    return 2;
  }
}

}  // namespace sgwave
