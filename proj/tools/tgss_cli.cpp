#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tgss/tgss.hpp"

namespace {

using tgss::bench::ConfigMap;

// Flags shared by `run` and `solve`. Every flag writes the config key it mirrors.
struct SharedFlags {
  std::string config_path;
  ConfigMap cli;

  void add(CLI::App& app, bool single_method) {
    app.add_option("--config", config_path, "flat key = value settings file");
    add_key(app, "--problem", "problem.name", "invpot1d | invpot2d | linear-diag");
    add_key(app, "--mesh-n", "problem.mesh_n", "elements per direction");
    add_key(app, "--x0", "problem.x0", "constant initial guess");
    add_key(app, "--inner-product", "problem.inner_product", "euclidean | lumped");
    add_key(app, "--delta", "noise.delta", single_method ? "noise level" : "noise levels, comma separated");
    add_key(app, "--seed", "noise.seed", single_method ? "noise seed" : "noise seeds, comma separated");
    add_key(app, "--method", "run.methods",
            single_method ? "land | tpg-nes | tpg-dbts | sesop | tgss-nes | tgss-dbts"
                          : "methods, comma separated");
    add_key(app, "--tau", "solver.tau", "discrepancy factor");
    add_key(app, "--eta", "solver.eta", "tangential cone constant");
    add_key(app, "--mu", "solver.mu", "coupling factor mu > 1");
    add_key(app, "--cf", "solver.cf", "derivative bound c_F");
    add_key(app, "--alpha", "solver.alpha", "Nesterov alpha");
    add_key(app, "--q-scale", "solver.q_scale", "DBTS q(i) = q_scale / i^q_power");
    add_key(app, "--q-power", "solver.q_power", "DBTS exponent");
    add_key(app, "--jmax", "solver.jmax", "DBTS trials per step");
    add_key(app, "--i0", "solver.i0", "DBTS starting index");
    add_key(app, "--directions", "solver.directions", "search directions per step");
    add_key(app, "--max-iters", "solver.max_iters", "iteration cap");
    add_key(app, "--delta-mode", "solver.delta_mode", "effective | nominal");
    add_key(app, "--out", "output.out", "records file (stdout if absent)");
    add_key(app, "--trace", "output.trace", "directory for per-run trace CSVs");
    add_key(app, "--format", "output.format", "csv | json");
  }

  tgss::bench::BenchSpec spec() const {
    ConfigMap merged;
    if (!config_path.empty()) merged = tgss::bench::parse_config_file(config_path);
    for (const auto& [k, v] : cli) merged[k] = v;
    return tgss::bench::spec_from_config(merged);
  }

private:
  void add_key(CLI::App& app, const std::string& flag, const std::string& key, const std::string& help) {
    app.add_option_function<std::string>(flag, [this, key](const std::string& v) { cli[key] = v; }, help);
  }
};

int emit_records(const tgss::bench::BenchSpec& spec, const std::vector<tgss::bench::BenchRecord>& records) {
  if (spec.out.empty()) {
    if (spec.format == tgss::bench::Format::csv) {
      tgss::bench::write_csv(std::cout, records);
    } else {
      tgss::bench::write_json(std::cout, records);
    }
  } else {
    tgss::bench::emit(records, spec.out, spec.format);
  }
  for (const auto& r : records) {
    if (r.stopped_by == tgss::StopReason::failed) {
      std::cerr << "run failed: " << tgss::bench::to_string(r.method) << " delta=" << r.delta
                << " seed=" << r.seed << ": " << r.diagnostic << '\n';
    }
  }
  return tgss::bench::any_failed(records) ? 2 : 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Iterative regularization benchmarks (Landweber, TPG, SESOP, TGSS)"};
  app.require_subcommand(1);

  SharedFlags run_flags;
  SharedFlags solve_flags;
  auto* run_cmd = app.add_subcommand("run", "run a method suite and emit comparison records");
  run_flags.add(*run_cmd, false);
  auto* solve_cmd = app.add_subcommand("solve", "run a single method");
  solve_flags.add(*solve_cmd, true);
  std::uint64_t selftest_seed = 7;
  auto* self_cmd = app.add_subcommand("selftest", "run the invariant checks");
  self_cmd->add_option("--seed", selftest_seed, "random seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      const auto spec = run_flags.spec();
      return emit_records(spec, tgss::bench::run_suite(spec));
    }
    if (*solve_cmd) {
      auto spec = solve_flags.spec();
      if (spec.methods.size() != 1 || spec.deltas.size() != 1 || spec.seeds.size() != 1) {
        std::cerr << "solve takes exactly one method, one noise level and one seed\n";
        return 1;
      }
      return emit_records(spec, tgss::bench::run_suite(spec));
    }
    if (*self_cmd) {
      int failures = 0;
      for (const auto& c : tgss::selftest::run_all(selftest_seed)) {
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " (" << c.detail << ")\n";
        failures += c.passed ? 0 : 1;
      }
      return failures == 0 ? 0 : 1;
    }
  } catch (const tgss::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
