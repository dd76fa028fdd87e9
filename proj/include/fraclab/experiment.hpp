#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "fraclab/acceptance.hpp"
#include "fraclab/coefficients.hpp"
#include "fraclab/ensemble.hpp"
#include "fraclab/error.hpp"
#include "fraclab/io.hpp"
#include "fraclab/norms.hpp"
#include "fraclab/observability.hpp"
#include "fraclab/radius.hpp"
#include "fraclab/solver.hpp"
#include "fraclab/spectral_inequality.hpp"
#include "fraclab/thick_set.hpp"

namespace fraclab::experiment {

inline constexpr const char* kVersion = "0.1.0";

/// Configuration rejected before any computation starts.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Numerical failure inside a named pipeline stage.
class StageFailure : public NumericalError {
 public:
  StageFailure(std::string stage, const std::string& what)
      : NumericalError("stage '" + stage + "' failed: " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

using KeyValues = std::map<std::string, std::string>;

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// "key = value" -> (key, value), both trimmed.
inline std::pair<std::string, std::string> parse_assignment(const std::string& line) {
  const auto eq = line.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + line + "'");
  auto key = trim(line.substr(0, eq));
  if (key.empty()) throw ConfigError("empty key in '" + line + "'");
  return {key, trim(line.substr(eq + 1))};
}

/// One assignment per line; '#' starts a comment; blank lines are skipped.
inline KeyValues parse_key_values(std::istream& in) {
  KeyValues out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    auto [k, v] = parse_assignment(line);
    if (!out.emplace(k, v).second)
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + k + "'");
  }
  return out;
}

struct ExperimentConfig {
  std::string experiment = "simulate";
  std::string output_dir = "fraclab_out";

  int grid_dim = 1;
  int grid_points = 64;
  double grid_period = 2.0 * std::numbers::pi;

  std::string coefficient_name = "cosine";
  double coefficient_amplitude = 0.5;
  int coefficient_mode = 1;
  double coefficient_time_freq = 1.0;
  double coefficient_value = 0.0;
  double coefficient_radius = 0.5;
  std::uint64_t coefficient_seed = 0;

  std::string set_kind = "slab";  // full | slab | random | ball_complement | mask | empty
  double set_fraction = 0.5;
  double set_L = 0.0;  // 0 selects period / 4
  std::uint64_t set_seed = 0;
  double set_radius = 1.0;
  std::string set_mask_file;

  double s = 1.5;
  double T = 1.0;
  double dt = 1e-3;
  std::string scheme = "etd2";
  int record_every = 10;

  int ensemble_count = 20;
  std::uint64_t ensemble_seed = 1;
  int ensemble_band_limit = 8;
  double ensemble_analytic_rho = 0.3;

  std::string initial_kind = "mode";  // mode | ensemble
  int initial_mode = 1;
  int initial_member = 0;

  std::vector<double> ls_N_list{0, 4, 8, 12, 16, 20, 24, 28, 32};

  std::vector<double> interp_t_list{0.1, 0.25, 0.5, 1.0};
  std::vector<double> interp_theta_list{0.25, 0.5, 0.75};

  std::vector<double> obs_T_list{0.25, 0.5, 1.0, 2.0};
  double obs_theta = 0.5;
  int obs_pair_points = 101;

  double radius_t_min = 0.1;
  double radius_min_k = 2.0;
  double radius_max_k = -1.0;
  double radius_floor = -1.0;

  int class_alpha_max = 0;  // 0 selects the grid default
  std::vector<double> class_t_list{0.0};

  double assert_energy_slack = 1e-6;
  double assert_radius_min = 0.2;
  double assert_ls_tolerance = 1e-10;

  std::vector<int> acceptance_criteria{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::uint64_t acceptance_seed = 1;
  double acceptance_solver_dt = 4e-3;
  std::string acceptance_observability_set = "slab";
  bool acceptance_enforce_runtime = true;

  GridSpec grid() const { return {grid_dim, grid_points, grid_period}; }
  bool operator==(const ExperimentConfig&) const = default;
};

namespace detail {

inline double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end)
    throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
  return out;
}

template <class Int>
Int parse_integer(const std::string& key, const std::string& v) {
  Int out{};
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end)
    throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
  return out;
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  if (!v.empty() && v.back() == ',') out.push_back("");
  return out;
}

inline std::string to_text(double v) { return io::format_double(v); }
inline std::string to_text(int v) { return std::to_string(v); }
inline std::string to_text(std::uint64_t v) { return std::to_string(v); }
inline std::string to_text(const std::string& v) { return v; }
inline std::string to_text(bool v) { return v ? "true" : "false"; }
template <class T>
std::string to_text(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + to_text(v[i]);
  return out;
}

inline void from_text(const std::string& k, const std::string& v, double& out) {
  out = parse_double(k, v);
}
inline void from_text(const std::string& k, const std::string& v, int& out) {
  out = parse_integer<int>(k, v);
}
inline void from_text(const std::string& k, const std::string& v, std::uint64_t& out) {
  out = parse_integer<std::uint64_t>(k, v);
}
inline void from_text(const std::string&, const std::string& v, std::string& out) { out = v; }
inline void from_text(const std::string& k, const std::string& v, bool& out) {
  if (v == "true" || v == "1")
    out = true;
  else if (v == "false" || v == "0")
    out = false;
  else
    throw ConfigError("key '" + k + "': expected true or false, got '" + v + "'");
}
template <class T>
void from_text(const std::string& k, const std::string& v, std::vector<T>& out) {
  out.clear();
  if (v.empty()) return;
  for (const auto& item : split_list(v)) {
    T x{};
    from_text(k, item, x);
    out.push_back(x);
  }
}

struct FieldCodec {
  std::string key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

template <class T>
FieldCodec codec(std::string key, T ExperimentConfig::*member) {
  return {key, [member](const ExperimentConfig& c) { return to_text(c.*member); },
          [key, member](ExperimentConfig& c, const std::string& v) {
            from_text(key, v, c.*member);
          }};
}

}  // namespace detail

/// Every configuration key, in canonical (sorted) order.
inline const std::vector<detail::FieldCodec>& config_fields() {
  using C = ExperimentConfig;
  using detail::codec;
  static const std::vector<detail::FieldCodec> fields = [] {
    std::vector<detail::FieldCodec> f{
        codec("experiment", &C::experiment),
        codec("output_dir", &C::output_dir),
        codec("grid.dim", &C::grid_dim),
        codec("grid.points", &C::grid_points),
        codec("grid.period", &C::grid_period),
        codec("coefficient.name", &C::coefficient_name),
        codec("coefficient.amplitude", &C::coefficient_amplitude),
        codec("coefficient.mode", &C::coefficient_mode),
        codec("coefficient.time_freq", &C::coefficient_time_freq),
        codec("coefficient.value", &C::coefficient_value),
        codec("coefficient.radius", &C::coefficient_radius),
        codec("coefficient.seed", &C::coefficient_seed),
        codec("set.kind", &C::set_kind),
        codec("set.fraction", &C::set_fraction),
        codec("set.L", &C::set_L),
        codec("set.seed", &C::set_seed),
        codec("set.radius", &C::set_radius),
        codec("set.mask_file", &C::set_mask_file),
        codec("dynamics.s", &C::s),
        codec("dynamics.T", &C::T),
        codec("dynamics.dt", &C::dt),
        codec("dynamics.scheme", &C::scheme),
        codec("dynamics.record_every", &C::record_every),
        codec("ensemble.count", &C::ensemble_count),
        codec("ensemble.seed", &C::ensemble_seed),
        codec("ensemble.band_limit", &C::ensemble_band_limit),
        codec("ensemble.analytic_rho", &C::ensemble_analytic_rho),
        codec("initial.kind", &C::initial_kind),
        codec("initial.mode", &C::initial_mode),
        codec("initial.member", &C::initial_member),
        codec("ls.N_list", &C::ls_N_list),
        codec("interp.t_list", &C::interp_t_list),
        codec("interp.theta_list", &C::interp_theta_list),
        codec("obs.T_list", &C::obs_T_list),
        codec("obs.theta", &C::obs_theta),
        codec("obs.pair_points", &C::obs_pair_points),
        codec("radius.t_min", &C::radius_t_min),
        codec("radius.min_k", &C::radius_min_k),
        codec("radius.max_k", &C::radius_max_k),
        codec("radius.floor", &C::radius_floor),
        codec("class.alpha_max", &C::class_alpha_max),
        codec("class.t_list", &C::class_t_list),
        codec("assert.energy_slack", &C::assert_energy_slack),
        codec("assert.radius_min", &C::assert_radius_min),
        codec("assert.ls_tolerance", &C::assert_ls_tolerance),
        codec("acceptance.criteria", &C::acceptance_criteria),
        codec("acceptance.seed", &C::acceptance_seed),
        codec("acceptance.solver_dt", &C::acceptance_solver_dt),
        codec("acceptance.observability_set", &C::acceptance_observability_set),
        codec("acceptance.enforce_runtime", &C::acceptance_enforce_runtime),
    };
    std::sort(f.begin(), f.end(), [](const auto& a, const auto& b) { return a.key < b.key; });
    return f;
  }();
  return fields;
}

/// Applies key/value pairs on top of cfg; unknown keys are rejected.
inline void apply(ExperimentConfig& cfg, const KeyValues& kv) {
  const auto& fields = config_fields();
  for (const auto& [k, v] : kv) {
    auto it = std::find_if(fields.begin(), fields.end(),
                           [&](const auto& f) { return f.key == k; });
    if (it == fields.end()) throw ConfigError("unknown key '" + k + "'");
    it->set(cfg, v);
  }
}

inline ExperimentConfig from_key_values(const KeyValues& kv) {
  ExperimentConfig cfg;
  apply(cfg, kv);
  return cfg;
}

inline KeyValues to_key_values(const ExperimentConfig& cfg) {
  KeyValues out;
  for (const auto& f : config_fields()) out[f.key] = f.get(cfg);
  return out;
}

/// Canonical text: every key, sorted, "key = value" per line.
inline std::string serialize(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : to_key_values(cfg)) out += k + " = " + v + "\n";
  return out;
}

inline ExperimentConfig parse_config(const std::string& text) {
  std::istringstream in(text);
  return from_key_values(parse_key_values(in));
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  return from_key_values(parse_key_values(in));
}

/// FNV-1a (64 bit) of the canonical serialization with output_dir blanked,
/// so the same experiment hashes equally wherever it writes.
inline std::uint64_t config_hash(ExperimentConfig cfg) {
  cfg.output_dir.clear();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : serialize(cfg)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"simulate",      "ls-scan",
                                              "interp-scan",   "observability",
                                              "radius-track",  "class-verify"};
  return names;
}

/// Objects built from a validated configuration.
struct Prepared {
  GridSpec grid;
  std::optional<CoefficientField> coefficient;
  std::optional<ThickSet> set;
  Scheme scheme = Scheme::etd2;
  EnsembleSpec ensemble;
};

namespace detail {

inline void check(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

inline void check_steps(const std::vector<double>& ts, double dt, const char* key) {
  for (double t : ts) {
    check(t > 0.0 && std::isfinite(t), std::string(key) + " entries must be positive");
    const double steps = t / dt;
    check(std::abs(steps - std::round(steps)) < 1e-6,
          std::string(key) + " entries must be whole multiples of dynamics.dt");
  }
}

inline ThickSet build_configured_set(const ExperimentConfig& c, const GridSpec& grid) {
  const double L = c.set_L > 0.0 ? c.set_L : grid.period / 4.0;
  if (c.set_kind == "full") return build_set(grid, ExplicitMask{std::vector<std::uint8_t>(grid.size(), 1), L});
  if (c.set_kind == "empty") return build_set(grid, ExplicitMask{std::vector<std::uint8_t>(grid.size(), 0), L});
  if (c.set_kind == "slab") return build_set(grid, PeriodicSlab{c.set_fraction, L});
  if (c.set_kind == "random") return build_set(grid, RandomPerCell{c.set_fraction, L, c.set_seed});
  if (c.set_kind == "ball_complement") return build_set(grid, ComplementOfBall{c.set_radius, L});
  if (c.set_kind == "mask") {
    std::ifstream in(c.set_mask_file, std::ios::binary);
    check(static_cast<bool>(in), "cannot read set.mask_file '" + c.set_mask_file + "'");
    auto set = io::read_mask(in);
    check(set.grid() == grid, "set.mask_file grid does not match the configured grid");
    return set;
  }
  throw ConfigError("unknown set.kind '" + c.set_kind + "'");
}

}  // namespace detail

/// Checks every precondition of the selected experiment and builds its inputs.
/// Throws ConfigError on any violation.
inline Prepared prepare(const ExperimentConfig& c) {
  using detail::check;
  const auto& names = experiment_names();
  check(std::find(names.begin(), names.end(), c.experiment) != names.end(),
        "unknown experiment '" + c.experiment + "'");
  check(!c.output_dir.empty(), "output_dir must not be empty");
  Prepared p;
  try {
    p.grid = c.grid();
    p.grid.validate();
    const std::map<std::string, double> params{
        {"amplitude", c.coefficient_amplitude}, {"mode", c.coefficient_mode},
        {"time_freq", c.coefficient_time_freq}, {"value", c.coefficient_value},
        {"radius", c.coefficient_radius},       {"seed", double(c.coefficient_seed)}};
    p.coefficient = builtin_coefficient(p.grid, c.coefficient_name, params);
    if (c.experiment != "class-verify") p.set = detail::build_configured_set(c, p.grid);
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }

  check(c.scheme == "etd1" || c.scheme == "etd2", "dynamics.scheme must be etd1 or etd2");
  p.scheme = c.scheme == "etd1" ? Scheme::etd1 : Scheme::etd2;
  check(c.s > 1.0 && std::isfinite(c.s), "dynamics.s must exceed 1");
  check(c.T > 0.0 && std::isfinite(c.T), "dynamics.T must be positive");
  check(c.dt > 0.0 && std::isfinite(c.dt), "dynamics.dt must be positive");
  check(c.record_every >= 1, "dynamics.record_every must be at least 1");
  check(c.ensemble_count >= 1, "ensemble.count must be at least 1");
  check(c.ensemble_band_limit >= 0, "ensemble.band_limit must be nonnegative");
  check(c.ensemble_analytic_rho >= 0.0, "ensemble.analytic_rho must be nonnegative");
  p.ensemble = EnsembleSpec{c.ensemble_count, c.ensemble_seed, c.ensemble_band_limit,
                            c.ensemble_analytic_rho};

  if (c.experiment == "simulate") {
    check(c.initial_kind == "mode" || c.initial_kind == "ensemble",
          "initial.kind must be mode or ensemble");
    check(std::abs(c.initial_mode) < c.grid_points / 2, "initial.mode exceeds the grid");
    check(c.initial_member >= 0 && c.initial_member < c.ensemble_count,
          "initial.member must index the ensemble");
  } else if (c.experiment == "ls-scan") {
    check(!c.ls_N_list.empty(), "ls.N_list must not be empty");
    for (std::size_t i = 0; i < c.ls_N_list.size(); ++i) {
      check(c.ls_N_list[i] >= 0.0, "ls.N_list entries must be nonnegative");
      check(c.ls_N_list[i] <= p.grid.max_wavenumber(), "ls.N_list entry exceeds the Nyquist radius");
      if (i) check(c.ls_N_list[i] > c.ls_N_list[i - 1], "ls.N_list must be increasing");
    }
  } else if (c.experiment == "interp-scan") {
    check(!c.interp_t_list.empty() && !c.interp_theta_list.empty(),
          "interp.t_list and interp.theta_list must not be empty");
    detail::check_steps(c.interp_t_list, c.dt, "interp.t_list");
    for (double th : c.interp_theta_list)
      check(th >= 0.0 && th <= 1.0, "interp.theta_list entries must lie in [0, 1]");
  } else if (c.experiment == "observability") {
    check(!c.obs_T_list.empty(), "obs.T_list must not be empty");
    detail::check_steps(c.obs_T_list, c.dt, "obs.T_list");
    check(c.obs_theta > 0.0 && c.obs_theta < 1.0, "obs.theta must lie in (0, 1)");
    check(c.obs_pair_points >= 2, "obs.pair_points must be at least 2");
  } else if (c.experiment == "radius-track") {
    check(c.radius_t_min >= 0.0, "radius.t_min must be nonnegative");
    check(c.radius_min_k >= 0.0, "radius.min_k must be nonnegative");
  } else if (c.experiment == "class-verify") {
    check(c.class_alpha_max >= 0, "class.alpha_max must be nonnegative");
    check(!c.class_t_list.empty(), "class.t_list must not be empty");
  }
  return p;
}

inline acceptance::AcceptanceConfig acceptance_config(const ExperimentConfig& c) {
  using detail::check;
  for (int id : c.acceptance_criteria)
    check(id >= 1 && id <= 10, "acceptance.criteria entries must lie in 1..10");
  check(c.acceptance_solver_dt > 0.0 && c.acceptance_solver_dt <= 1.0,
        "acceptance.solver_dt must lie in (0, 1]");
  check(c.acceptance_observability_set == "slab" || c.acceptance_observability_set == "empty",
        "acceptance.observability_set must be slab or empty");
  acceptance::AcceptanceConfig a;
  a.criteria = c.acceptance_criteria;
  a.seed = c.acceptance_seed;
  a.solver_dt = c.acceptance_solver_dt;
  a.observability_set = c.acceptance_observability_set;
  a.enforce_runtime = c.acceptance_enforce_runtime;
  return a;
}

/// A named number in the summary together with the role it plays.
struct SummaryItem {
  std::string name;
  std::string value;
  std::string role;
};

struct RunReport {
  std::vector<SummaryItem> summary;
  std::vector<std::string> violations;  ///< failed properties (exit 3 under --assert)
  std::vector<std::string> files;       ///< written artifacts, relative to output_dir
};

namespace detail {

template <class F>
auto stage(const std::string& name, F&& body) {
  try {
    return body();
  } catch (const StageFailure&) {
    throw;
  } catch (const NumericalError& e) {
    throw StageFailure(name, e.what());
  }
}

class Artifacts {
 public:
  Artifacts(std::filesystem::path dir, RunReport& report) : dir_(std::move(dir)), report_(report) {
    std::filesystem::create_directories(dir_);
  }

  std::ofstream open(const std::string& name, bool binary = false) {
    std::ofstream out(dir_ / name, binary ? std::ios::binary : std::ios::out);
    if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
    report_.files.push_back(name);
    return out;
  }

 private:
  std::filesystem::path dir_;
  RunReport& report_;
};

inline void add(RunReport& r, std::string name, double v, std::string role) {
  r.summary.push_back({std::move(name), io::format_double(v), std::move(role)});
}

inline void add(RunReport& r, std::string name, std::string v, std::string role) {
  r.summary.push_back({std::move(name), std::move(v), std::move(role)});
}

inline std::vector<Trajectory> run_ensemble(const Prepared& p, const ExperimentConfig& c,
                                            double horizon, bool keep_states) {
  std::vector<Trajectory> trajs(c.ensemble_count);
  parallel_for(c.ensemble_count, [&](int m) {
    SimulateOptions opt;
    opt.scheme = p.scheme;
    opt.record_every = c.record_every;
    opt.observe = p.set ? &*p.set : nullptr;
    opt.keep_states = keep_states;
    trajs[m] = simulate(p.ensemble.member(p.grid, m), *p.coefficient, c.s, horizon, c.dt, opt);
  });
  return trajs;
}

inline void run_simulate(const ExperimentConfig& c, const Prepared& p, Artifacts& art,
                         RunReport& rep) {
  const auto u0 = c.initial_kind == "mode" ? unit_mode(p.grid, c.initial_mode)
                                           : p.ensemble.member(p.grid, c.initial_member);
  SimulateOptions opt;
  opt.scheme = p.scheme;
  opt.record_every = c.record_every;
  opt.observe = &*p.set;
  opt.track_radius = true;
  opt.keep_states = false;
  const auto traj = stage("integrate", [&] {
    return simulate(u0, *p.coefficient, c.s, c.T, c.dt, opt);
  });
  {
    auto out = art.open("trajectory.csv");
    io::write_trajectory_csv(out, traj);
  }
  {
    // final state, re-integrated with states kept only at the end
    SimulateOptions last = opt;
    last.record_every = std::numeric_limits<int>::max();
    last.keep_states = true;
    last.track_radius = false;
    const auto fin = stage("integrate", [&] {
      return simulate(u0, *p.coefficient, c.s, c.T, c.dt, last);
    });
    auto out = art.open("final.snap", true);
    io::write_snapshot(out, fin.states.back(), fin.times.back());
  }
  const auto energy = stage("energy", [&] {
    return energy_certificate(traj, *p.coefficient, c.assert_energy_slack);
  });
  add(rep, "final_time", traj.times.back(), "end of the integration window");
  add(rep, "final_l2", traj.diagnostics.back().l2, "L2 norm of u(T)");
  add(rep, "energy_growth_rate", energy.growth_rate, "sup |a| over recorded times");
  add(rep, "energy_worst_ratio", energy.worst_ratio,
      "max ||u(t2)||^2 / (exp(2A(t2-t1)) ||u(t1)||^2), energy estimate");
  if (!energy.pass)
    rep.violations.push_back("energy estimate exceeded by ratio " +
                             io::format_double(energy.worst_ratio));
}

inline void run_ls_scan(const ExperimentConfig& c, const Prepared& p, Artifacts& art,
                        RunReport& rep) {
  const auto fit = stage("eigensolve", [&] { return ls_growth_fit(*p.set, c.ls_N_list); });
  {
    auto out = art.open("ls_scan.csv");
    io::CsvWriter w(out, {"N", "dimension", "constant", "lambda_min", "lambda_max", "status"});
    for (std::size_t i = 0; i < fit.N_list.size(); ++i) {
      const auto& k = fit.constants[i];
      w.values(fit.N_list[i], k.dimension, k.constant, k.lambda_min, k.lambda_max,
               std::string(k.status == LSConstant::Status::ok ? "ok" : "too_thin"));
    }
  }
  add(rep, "set_volume_fraction", p.set->volume_fraction(), "measure fraction of E");
  add(rep, "set_thickness", p.set->gamma(), "thickness ratio of E at scale L");
  add(rep, "log_constant_slope", fit.fit.slope,
      "growth rate of log C(N), sharp discrete Logvinenko-Sereda constant (periodic model)");
  add(rep, "log_constant_intercept", fit.fit.intercept, "intercept of the log C(N) line fit");
  add(rep, "log_constant_residual", fit.fit.residual, "RMS residual of the log C(N) line fit");
  add(rep, "fit_points", static_cast<double>(fit.fit.points), "resolved entries in the fit");
  for (std::size_t i = 1; i < fit.constants.size(); ++i)
    if (fit.constants[i].constant < fit.constants[i - 1].constant * (1.0 - c.assert_ls_tolerance))
      rep.violations.push_back("C(N) decreases between N=" + io::format_double(fit.N_list[i - 1]) +
                               " and N=" + io::format_double(fit.N_list[i]));
  for (const auto& k : fit.constants)
    if (!(k.constant >= 1.0 - c.assert_ls_tolerance))
      rep.violations.push_back("C(N) below 1");
}

inline void run_interp_scan(const ExperimentConfig& c, const Prepared& p, Artifacts& art,
                            RunReport& rep) {
  ObservabilitySettings st;
  st.s = c.s;
  st.dt = c.dt;
  st.scheme = p.scheme;
  st.ensemble = p.ensemble;
  const auto rows = stage("integrate", [&] {
    return interp_scan(*p.coefficient, *p.set, c.interp_t_list, c.interp_theta_list, st);
  });
  auto out = art.open("interp_scan.csv");
  io::CsvWriter w(out, {"theta", "t", "max_ratio"});
  double worst = 0.0;
  for (const auto& r : rows) {
    w.values(r.theta, r.t, r.max_ratio);
    worst = std::max(worst, r.max_ratio);
    if (!std::isfinite(r.max_ratio))
      rep.violations.push_back("interpolation ratio infinite at t=" + io::format_double(r.t) +
                               ", theta=" + io::format_double(r.theta));
  }
  add(rep, "max_interp_ratio", worst,
      "ensemble max of ||u(t)||^2 / (||u(t)||_E^(2 theta) ||u0||^(2(1-theta))), interpolation ratio");
}

inline void run_observability(const ExperimentConfig& c, const Prepared& p, Artifacts& art,
                              RunReport& rep) {
  ObservabilitySettings st;
  st.s = c.s;
  st.dt = c.dt;
  st.theta = c.obs_theta;
  st.scheme = p.scheme;
  st.ensemble = p.ensemble;
  st.pair_points = c.obs_pair_points;
  const auto scan = stage("observability", [&] {
    return observability_scan(*p.coefficient, *p.set, c.obs_T_list, st);
  });
  {
    auto out = art.open("observability.csv");
    io::CsvWriter w(out, {"T", "inv_T_pow", "empirical_ratio", "worst_member", "closed_form",
                          "series_value", "telescoped_bound", "infinite", "offending_member",
                          "offending_seed", "pass"});
    for (const auto& r : scan.rows)
      w.values(r.T, std::pow(r.T, -(c.s - 1.0)), r.empirical_ratio, r.worst_member,
               r.closed_form, r.series_value, r.telescoped_bound, int(r.infinite),
               r.offending_member, std::to_string(r.offending_seed), int(r.pass));
  }
  {
    auto out = art.open("observability_members.csv");
    io::CsvWriter w(out, {"T", "member", "ratio"});
    for (std::size_t i = 0; i < scan.rows.size(); ++i)
      for (std::size_t m = 0; m < scan.member_ratios[i].size(); ++m)
        w.values(scan.rows[i].T, m, scan.member_ratios[i][m]);
  }
  const auto& K = scan.constants;
  add(rep, "C_energy", K.C_energy, "measured energy constant on [0, 1]");
  add(rep, "C_interp", K.C_interp, "measured final-time interpolation constant");
  add(rep, "C_lift", K.C_lift, "constant fed to the space-time lift");
  add(rep, "C0", K.C0, "absorbed space-time interpolation constant");
  add(rep, "lambda", K.lambda, "ratio of the telescoping time sequence");
  for (const auto& r : scan.rows) {
    const std::string tag = "[T=" + io::format_double(r.T) + "]";
    add(rep, "observability_ratio" + tag, r.empirical_ratio,
        "max ||u(T)||^2 / int_0^T ||u||_E^2, observability ratio");
    add(rep, "telescoped_bound" + tag, r.telescoped_bound, "telescoped observability constant");
    if (r.infinite)
      rep.violations.push_back("observation vanished" + tag + " for member " +
                               std::to_string(r.offending_member) + " (seed " +
                               std::to_string(r.offending_seed) + ")");
    else if (!r.pass)
      rep.violations.push_back("observability ratio exceeds telescoped bound" + tag);
  }
}

inline void run_radius_track(const ExperimentConfig& c, const Prepared& p, Artifacts& art,
                             RunReport& rep) {
  const auto trajs = stage("integrate", [&] { return run_ensemble(p, c, c.T, true); });
  auto out = art.open("radius_track.csv");
  io::CsvWriter w(out, {"member", "t", "l2", "radius_estimate", "residual", "status"});
  double lo = kInfinity, hi = 0.0;
  int non_finite = 0;
  for (std::size_t m = 0; m < trajs.size(); ++m) {
    const auto& tr = trajs[m];
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
      const auto est = stage("radius", [&] {
        return radius_estimate(tr.states[i], c.radius_floor, {c.radius_min_k, c.radius_max_k});
      });
      const bool band = est.status == RadiusEstimate::Status::band_limited;
      w.values(m, tr.times[i], tr.diagnostics[i].l2, est.sigma, est.residual,
               std::string(band ? "band_limited" : "fitted"));
      if (tr.times[i] < c.radius_t_min - 1e-12) continue;
      if (!std::isfinite(est.sigma)) {
        ++non_finite;
        continue;
      }
      lo = std::min(lo, est.sigma);
      hi = std::max(hi, est.sigma);
    }
  }
  add(rep, "min_radius", lo, "smallest fitted analytic radius for t >= radius.t_min");
  add(rep, "max_radius", hi, "largest fitted analytic radius for t >= radius.t_min");
  if (non_finite > 0) rep.violations.push_back("non-finite radius estimates");
  if (lo < c.assert_radius_min)
    rep.violations.push_back("analytic radius fell to " + io::format_double(lo));
}

inline void run_class_verify(const ExperimentConfig& c, const Prepared& p, Artifacts& art,
                             RunReport& rep) {
  const auto& a = *p.coefficient;
  const int amax = c.class_alpha_max > 0 ? c.class_alpha_max : default_alpha_max(p.grid);
  const auto report = stage("class", [&] { return verify_class(a, amax, c.class_t_list); });
  {
    auto out = art.open("class_verify.csv");
    io::CsvWriter w(out, {"t", "alpha0", "alpha1", "observed_sup", "bound", "ratio"});
    for (double t : c.class_t_list) {
      const auto spec = clean_transform(a.grid, a.samples(t));
      for (const auto& alpha : multi_indices(p.grid.dim, amax)) {
        const double obs = derivative_sup(spec, alpha);
        const double bound = class_bound(a.declared, alpha);
        w.values(t, alpha[0], alpha[1], obs, bound, bound > 0.0 ? obs / bound : kInfinity);
      }
    }
  }
  add(rep, "worst_ratio", report.worst_ratio,
      "max sup|d^alpha a| / declared class bound, coefficient class certificate");
  add(rep, "worst_alpha", std::to_string(report.worst_alpha[0]) + "," +
                              std::to_string(report.worst_alpha[1]),
      "multi-index attaining the worst ratio");
  add(rep, "alpha_max", static_cast<double>(amax), "largest derivative order checked");
  if (!report.pass)
    rep.violations.push_back("declared class violated at ratio " +
                             io::format_double(report.worst_ratio));
}

inline void write_summary(std::ostream& out, const ExperimentConfig& c, const RunReport& rep) {
  out << "experiment: " << c.experiment << "\n";
  out << "model: periodic model (torus of period " << io::format_double(c.grid_period) << ", "
      << c.grid_points << " points per axis, dim " << c.grid_dim << ")\n";
  out << "config_hash: " << hex64(config_hash(c)) << "\n\n";
  for (const auto& item : rep.summary)
    out << item.name << " = " << item.value << "    # " << item.role << "\n";
  out << "\nproperties: ";
  if (rep.violations.empty()) {
    out << "all hold\n";
  } else {
    out << rep.violations.size() << " violated\n";
    for (const auto& v : rep.violations) out << "  - " << v << "\n";
  }
}

inline void write_metadata(std::ostream& out, const ExperimentConfig& c, const RunReport& rep) {
  nlohmann::ordered_json j;
  j["tool"] = "fraclab";
  j["version"] = kVersion;
  j["experiment"] = c.experiment;
  j["config_hash"] = hex64(config_hash(c));
  j["seed"] = c.ensemble_seed;
  j["model"] = "periodic model";
  j["versions"] = {{"fraclab", kVersion},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                 std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"compiler", __VERSION__},
                   {"cxx_standard", __cplusplus}};
  nlohmann::ordered_json cfg;
  for (const auto& [k, v] : to_key_values(c)) cfg[k] = v;
  j["config"] = cfg;
  auto files = rep.files;
  files.push_back("metadata.json");
  j["outputs"] = files;
  j["violations"] = rep.violations;
  out << j.dump(2) << "\n";
}

}  // namespace detail

/// Runs one experiment and writes its artifacts into cfg.output_dir.
/// Throws ConfigError before any output is produced, StageFailure on
/// numerical breakdown.
inline RunReport run(const ExperimentConfig& cfg) {
  const Prepared p = prepare(cfg);
  RunReport rep;
  detail::Artifacts art(cfg.output_dir, rep);
  if (p.set) {
    auto out = art.open("set.mask", true);
    io::write_mask(out, *p.set);
  }
  if (cfg.experiment == "simulate")
    detail::run_simulate(cfg, p, art, rep);
  else if (cfg.experiment == "ls-scan")
    detail::run_ls_scan(cfg, p, art, rep);
  else if (cfg.experiment == "interp-scan")
    detail::run_interp_scan(cfg, p, art, rep);
  else if (cfg.experiment == "observability")
    detail::run_observability(cfg, p, art, rep);
  else if (cfg.experiment == "radius-track")
    detail::run_radius_track(cfg, p, art, rep);
  else
    detail::run_class_verify(cfg, p, art, rep);
  {
    auto out = art.open("summary.txt");
    detail::write_summary(out, cfg, rep);
  }
  {
    std::ofstream out(std::filesystem::path(cfg.output_dir) / "metadata.json");
    detail::write_metadata(out, cfg, rep);
  }
  return rep;
}

}  // namespace fraclab::experiment
