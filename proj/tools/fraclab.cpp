#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fraclab/experiment.hpp"

namespace ex = fraclab::experiment;

namespace {

enum Exit { kOk = 0, kInvalidConfig = 1, kNumericalFailure = 2, kAssertViolation = 3 };

struct Options {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string output_dir;
  bool assert_mode = false;
};

ex::ExperimentConfig resolve(const Options& opt, const std::string& experiment) {
  ex::KeyValues kv;
  if (!opt.config_path.empty()) {
    std::ifstream in(opt.config_path);
    if (!in) throw ex::ConfigError("cannot read config file '" + opt.config_path + "'");
    kv = ex::parse_key_values(in);
  }
  for (const auto& o : opt.overrides) {
    auto [k, v] = ex::parse_assignment(o);
    kv[k] = v;
  }
  auto cfg = ex::from_key_values(kv);
  if (!experiment.empty()) cfg.experiment = experiment;
  if (!opt.output_dir.empty()) cfg.output_dir = opt.output_dir;
  return cfg;
}

int run_experiment(const Options& opt, const std::string& name) {
  const auto cfg = resolve(opt, name);
  const auto rep = ex::run(cfg);
  for (const auto& item : rep.summary) std::cout << item.name << " = " << item.value << "\n";
  std::cout << "outputs written to " << cfg.output_dir << "\n";
  if (!rep.violations.empty()) {
    for (const auto& v : rep.violations) std::cerr << "property violated: " << v << "\n";
    if (opt.assert_mode) return kAssertViolation;
  }
  return kOk;
}

int run_assert_suite(const Options& opt) {
  const auto cfg = resolve(opt, "");
  const auto acc = ex::acceptance_config(cfg);
  const auto results = fraclab::acceptance::run(acc);
  bool all = true;
  for (const auto& r : results) {
    std::cout << fraclab::acceptance::format_line(r) << "\n";
    all = all && r.pass;
  }
  if (!opt.output_dir.empty()) {
    std::filesystem::create_directories(opt.output_dir);
    std::ofstream out(std::filesystem::path(opt.output_dir) / "acceptance.csv");
    fraclab::io::CsvWriter w(out, {"id", "name", "pass", "seconds", "budget", "detail"});
    for (const auto& r : results)
      w.values(r.id, r.name, std::string(r.pass ? "pass" : "fail"), r.seconds, r.budget,
               r.detail);
  }
  std::cout << (all ? "all criteria pass" : "some criteria fail") << "\n";
  return all ? kOk : kAssertViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pseudospectral laboratory for the fractional heat equation on the torus"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "key = value configuration file");
    sub->add_option("--set", opt.overrides, "override one key (key=value); repeatable")
        ->take_all();
    sub->add_option("--output", opt.output_dir, "output directory (overrides output_dir)");
    sub->add_flag("--assert", opt.assert_mode, "exit 3 when a checked property fails");
  };

  std::string chosen;
  for (const auto& name : ex::experiment_names()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
    add_common(sub);
    sub->callback([&chosen, name] { chosen = name; });
  }
  auto* suite = app.add_subcommand("assert-suite", "run every acceptance criterion");
  add_common(suite);
  suite->callback([&chosen] { chosen = "assert-suite"; });
  auto* show = app.add_subcommand("show-config", "print the resolved canonical configuration");
  add_common(show);
  show->callback([&chosen] { chosen = "show-config"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalidConfig;
  }

  try {
    if (chosen == "assert-suite") return run_assert_suite(opt);
    if (chosen == "show-config") {
      std::cout << ex::serialize(resolve(opt, ""));
      return kOk;
    }
    return run_experiment(opt, chosen);
  } catch (const ex::StageFailure& e) {
    std::cerr << "numerical failure in stage '" << e.stage() << "': " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const fraclab::InvalidArgument& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return kInvalidConfig;
  } catch (const fraclab::NumericalError& e) {
    std::cerr << "numerical failure in stage 'run': " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "invalid config: cannot use output directory: " << e.what() << "\n";
    return kInvalidConfig;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure in stage 'run': " << e.what() << "\n";
    return kNumericalFailure;
  }
}
