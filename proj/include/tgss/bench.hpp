#pragma once

// Benchmark harness: problem setup, method suites, comparison metrics and
// CSV/JSON output.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tgss/invpot.hpp"
#include "tgss/solvers.hpp"

namespace tgss::bench {

enum class Problem { invpot1d, invpot2d, linear_diag };
enum class Method { land, tpg_nes, tpg_dbts, sesop, tgss_nes, tgss_dbts };
/// euclidean: plain nodal inner product. lumped: nodal values weighted by the
/// lumped mass matrix (invpot problems only).
enum class InnerProduct { euclidean, lumped };
enum class Format { csv, json };

inline constexpr std::array<Method, 6> kAllMethods{Method::land,  Method::tpg_nes,  Method::tpg_dbts,
                                                   Method::sesop, Method::tgss_nes, Method::tgss_dbts};

inline std::string_view to_string(Problem p) {
  switch (p) {
  case Problem::invpot1d: return "invpot1d";
  case Problem::invpot2d: return "invpot2d";
  case Problem::linear_diag: return "linear-diag";
  }
  return "?";
}

inline std::string_view to_string(Method m) {
  switch (m) {
  case Method::land: return "land";
  case Method::tpg_nes: return "tpg-nes";
  case Method::tpg_dbts: return "tpg-dbts";
  case Method::sesop: return "sesop";
  case Method::tgss_nes: return "tgss-nes";
  case Method::tgss_dbts: return "tgss-dbts";
  }
  return "?";
}

inline std::string_view to_string(InnerProduct ip) {
  return ip == InnerProduct::euclidean ? "euclidean" : "lumped";
}

inline Problem parse_problem(std::string_view s) {
  for (auto p : {Problem::invpot1d, Problem::invpot2d, Problem::linear_diag})
    if (s == to_string(p)) return p;
  throw ConfigError("unknown problem '" + std::string(s) + "'");
}

inline Method parse_method(std::string_view s) {
  for (auto m : kAllMethods)
    if (s == to_string(m)) return m;
  throw ConfigError("unknown method '" + std::string(s) + "'");
}

inline InnerProduct parse_inner_product(std::string_view s) {
  if (s == "euclidean") return InnerProduct::euclidean;
  if (s == "lumped") return InnerProduct::lumped;
  throw ConfigError("unknown inner product '" + std::string(s) + "'");
}

inline DeltaMode parse_delta_mode(std::string_view s) {
  if (s == "effective") return DeltaMode::effective;
  if (s == "nominal") return DeltaMode::nominal;
  throw ConfigError("unknown delta mode '" + std::string(s) + "'");
}

inline Format parse_format(std::string_view s) {
  if (s == "csv") return Format::csv;
  if (s == "json") return Format::json;
  throw ConfigError("unknown format '" + std::string(s) + "'");
}

inline StopReason parse_stop_reason(std::string_view s) {
  for (auto r : {StopReason::discrepancy, StopReason::max_iters, StopReason::residual_zero, StopReason::failed})
    if (s == to_string(r)) return r;
  throw ConfigError("unknown stop reason '" + std::string(s) + "'");
}

struct MethodKind {
  Scheme scheme;
  LambdaRule rule;
};

inline MethodKind method_kind(Method m) {
  switch (m) {
  case Method::land: return {Scheme::landweber, LambdaRule::zero};
  case Method::tpg_nes: return {Scheme::tpg, LambdaRule::nesterov};
  case Method::tpg_dbts: return {Scheme::tpg, LambdaRule::dbts};
  case Method::sesop: return {Scheme::sesop, LambdaRule::zero};
  case Method::tgss_nes: return {Scheme::tgss, LambdaRule::nesterov};
  case Method::tgss_dbts: return {Scheme::tgss, LambdaRule::dbts};
  }
  throw ConfigError("unknown method");
}

/// Experiment settings per problem: 1-D uses alpha = 3, q(i) = 4/i^1.1;
/// 2-D uses alpha = 9, q(i) = 9/i^1.1.
inline SolverConfig default_config(Problem p) {
  SolverConfig cfg;
  if (p == Problem::invpot2d) {
    cfg.nesterov_alpha = 9.0;
    cfg.q_scale = 9.0;
    cfg.max_iters = 20000;
  } else {
    cfg.max_iters = 50000;
  }
  return cfg;
}

inline int default_mesh_n(Problem p) {
  switch (p) {
  case Problem::invpot1d: return 256;
  case Problem::invpot2d: return 32;
  case Problem::linear_diag: return 20;
  }
  return 0;
}

struct BenchSpec {
  Problem problem = Problem::invpot1d;
  int mesh_n = 256;
  std::vector<double> deltas{1e-3};
  std::vector<std::uint64_t> seeds{1};
  std::vector<Method> methods{kAllMethods.begin(), kAllMethods.end()};
  SolverConfig solver = default_config(Problem::invpot1d);
  /// Per-method replacements of `solver`.
  std::map<Method, SolverConfig> overrides;
  InnerProduct inner_product = InnerProduct::euclidean;
  /// Constant initial guess (all methods start from x0 = x0_value * 1).
  double x0_value = 1.0;
  std::string out;
  std::string trace_dir;
  Format format = Format::csv;

  [[nodiscard]] const SolverConfig& config_for(Method m) const {
    auto it = overrides.find(m);
    return it == overrides.end() ? solver : it->second;
  }

  void validate() const {
    if (methods.empty()) throw ConfigError("spec needs at least one method");
    if (deltas.empty()) throw ConfigError("spec needs at least one noise level");
    if (seeds.empty()) throw ConfigError("spec needs at least one seed");
    if (mesh_n < 1) throw ConfigError("mesh size must be >= 1");
    for (double d : deltas)
      if (!(d >= 0.0) || !std::isfinite(d)) throw ConfigError("noise levels must be finite and >= 0");
    if (problem == Problem::linear_diag && inner_product != InnerProduct::euclidean) {
      throw ConfigError("the lumped inner product applies to invpot problems only");
    }
    if (!std::isfinite(x0_value)) throw ConfigError("x0 must be finite");
    solver.validate();
    for (const auto& [m, c] : overrides) c.validate();
  }
};

struct BenchRecord {
  Method method = Method::land;
  double delta = 0.0;
  std::uint64_t seed = 0;
  long k_star = 0;
  double wall_time_s = 0.0;
  double re_final = 0.0;
  std::optional<double> rate_k;
  std::optional<double> rate_t;
  StopReason stopped_by = StopReason::max_iters;
  /// Error message of a failed run; not part of the CSV.
  std::string diagnostic;
};

inline double relative_error(const Vec& x, const Vec& truth) {
  require_same_size(x, truth, "relative_error");
  const double tn = norm(truth);
  if (!(tn > 0.0)) throw PreconditionError("relative_error: truth has zero norm");
  return norm(x - truth) / tn;
}

/// F(x) = d .* x with d_i = 1/(i+1) and x_i = 1 + sin(pi (i+1)/(n+1)).
inline DiagonalOperator linear_diag_operator(int n) {
  Vec d(n);
  for (int i = 0; i < n; ++i) d(i) = 1.0 / (i + 1.0);
  return DiagonalOperator(std::move(d));
}

inline Vec linear_diag_truth(int n) {
  Vec x(n);
  for (int i = 0; i < n; ++i) x(i) = 1.0 + std::sin(3.14159265358979323846 * (i + 1.0) / (n + 1.0));
  return x;
}

inline std::string trace_file_name(Method m, double delta, std::uint64_t seed) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", delta);
  return "trace_" + std::string(to_string(m)) + "_delta" + buf + "_seed" + std::to_string(seed) + ".csv";
}

namespace detail {

template <ForwardOperator Op, class Back>
void run_group(const BenchSpec& spec, const Op& op, const Vec& truth_solver, const Vec& truth_orig,
               const NoisyData& data, const Vec& x0, Back to_original, double delta, std::uint64_t seed,
               std::vector<BenchRecord>& out) {
  const std::size_t first = out.size();
  for (Method m : spec.methods) {
    SolverConfig cfg = spec.config_for(m);
    const MethodKind kind = method_kind(m);
    cfg.lambda_rule = kind.rule;
    const SolveResult res = run(kind.scheme, op, data, x0, cfg, truth_solver);
    BenchRecord rec;
    rec.method = m;
    rec.delta = delta;
    rec.seed = seed;
    rec.k_star = res.k_star;
    rec.wall_time_s = res.wall_time;
    rec.re_final = relative_error(to_original(res.x), truth_orig);
    rec.stopped_by = res.stopped_by;
    rec.diagnostic = res.diagnostic;
    if (!spec.trace_dir.empty()) {
      std::filesystem::create_directories(spec.trace_dir);
      write_trace_csv((std::filesystem::path(spec.trace_dir) / trace_file_name(m, delta, seed)).string(),
                      res.trace);
    }
    out.push_back(std::move(rec));
  }
  const auto land = std::find_if(out.begin() + static_cast<std::ptrdiff_t>(first), out.end(),
                                 [](const BenchRecord& r) { return r.method == Method::land; });
  if (land == out.end()) return;
  const double k_land = static_cast<double>(land->k_star);
  const double t_land = land->wall_time_s;
  for (std::size_t i = first; i < out.size(); ++i) {
    if (k_land > 0.0) out[i].rate_k = static_cast<double>(out[i].k_star) / k_land;
    if (t_land > 0.0) out[i].rate_t = out[i].wall_time_s / t_land;
  }
}

} // namespace detail

/// Runs every method of `spec` on every (delta, seed) pair. Within a pair all
/// methods see the same noisy data. Timings cover the iteration loop only.
inline std::vector<BenchRecord> run_suite(const BenchSpec& spec) {
  spec.validate();
  std::vector<BenchRecord> records;
  const auto identity = [](const Vec& x) { return x; };

  if (spec.problem == Problem::linear_diag) {
    const DiagonalOperator op = linear_diag_operator(spec.mesh_n);
    const Vec truth = linear_diag_truth(spec.mesh_n);
    const Vec y = op.apply(truth);
    const Vec x0 = Vec::Constant(spec.mesh_n, spec.x0_value);
    for (double delta : spec.deltas)
      for (std::uint64_t seed : spec.seeds)
        detail::run_group(spec, op, truth, truth, add_noise(y, delta, seed), x0, identity, delta, seed, records);
  } else {
    const int dim = spec.problem == Problem::invpot1d ? 1 : 2;
    invpot::PotentialOperator op(invpot::make_mesh(dim, spec.mesh_n), invpot::constant_one,
                                 OperatorMetadata{spec.solver.eta, spec.solver.c_F});
    const Vec truth = invpot::true_coefficient(op.mesh());
    const Vec y = op.apply(truth);
    const Vec x0 = Vec::Constant(truth.size(), spec.x0_value);
    if (spec.inner_product == InnerProduct::euclidean) {
      for (double delta : spec.deltas)
        for (std::uint64_t seed : spec.seeds)
          detail::run_group(spec, op, truth, truth, add_noise(y, delta, seed), x0, identity, delta, seed,
                            records);
    } else {
      const auto sop = invpot::lumped_l2(op);
      const auto back = [&sop](const Vec& x) { return sop.from_scaled(x); };
      for (double delta : spec.deltas)
        for (std::uint64_t seed : spec.seeds)
          detail::run_group(spec, sop, sop.to_scaled(truth), truth,
                            scale_data(add_noise(y, delta, seed), y, sop.range_scale()), sop.to_scaled(x0), back,
                            delta, seed, records);
    }
  }

  std::stable_sort(records.begin(), records.end(), [](const BenchRecord& a, const BenchRecord& b) {
    if (a.delta != b.delta) return a.delta > b.delta;
    if (a.seed != b.seed) return a.seed < b.seed;
    return static_cast<int>(a.method) < static_cast<int>(b.method);
  });
  return records;
}

inline bool any_failed(const std::vector<BenchRecord>& records) {
  return std::any_of(records.begin(), records.end(),
                     [](const BenchRecord& r) { return r.stopped_by == StopReason::failed; });
}

// ---- output --------------------------------------------------------------

inline constexpr std::string_view kCsvHeader =
    "method,delta,seed,k_star,wall_time_s,re_final,rate_k,rate_t,stopped_by";

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_csv(std::ostream& os, const std::vector<BenchRecord>& records) {
  os << kCsvHeader << '\n';
  for (const auto& r : records) {
    os << to_string(r.method) << ',' << format_number(r.delta) << ',' << r.seed << ',' << r.k_star << ','
       << format_number(r.wall_time_s) << ',' << format_number(r.re_final) << ','
       << (r.rate_k ? format_number(*r.rate_k) : "") << ',' << (r.rate_t ? format_number(*r.rate_t) : "") << ','
       << to_string(r.stopped_by) << '\n';
  }
}

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(what + ": not a number: '" + s + "'");
  }
}

inline long long parse_integer(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(what + ": not an integer: '" + s + "'");
  }
}

inline std::uint64_t parse_unsigned(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    if (!s.empty() && s.front() == '-') throw std::invalid_argument(s);
    const unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(what + ": not a non-negative integer: '" + s + "'");
  }
}

} // namespace detail

inline std::vector<BenchRecord> read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || detail::trim(line) != kCsvHeader) {
    throw IoError("records CSV: missing or unexpected header");
  }
  std::vector<BenchRecord> out;
  while (std::getline(is, line)) {
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split(detail::trim(line), ',');
    if (f.size() != 9) throw IoError("records CSV: expected 9 fields, got " + std::to_string(f.size()));
    BenchRecord r;
    r.method = parse_method(f[0]);
    r.delta = detail::parse_double(f[1], "delta");
    r.seed = detail::parse_unsigned(f[2], "seed");
    r.k_star = static_cast<long>(detail::parse_integer(f[3], "k_star"));
    r.wall_time_s = detail::parse_double(f[4], "wall_time_s");
    r.re_final = detail::parse_double(f[5], "re_final");
    if (!f[6].empty()) r.rate_k = detail::parse_double(f[6], "rate_k");
    if (!f[7].empty()) r.rate_t = detail::parse_double(f[7], "rate_t");
    r.stopped_by = parse_stop_reason(f[8]);
    out.push_back(std::move(r));
  }
  return out;
}

inline nlohmann::json to_json(const std::vector<BenchRecord>& records) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json j;
    j["method"] = std::string(to_string(r.method));
    j["delta"] = r.delta;
    j["seed"] = r.seed;
    j["k_star"] = r.k_star;
    j["wall_time_s"] = r.wall_time_s;
    j["re_final"] = r.re_final;
    j["rate_k"] = r.rate_k ? nlohmann::json(*r.rate_k) : nlohmann::json(nullptr);
    j["rate_t"] = r.rate_t ? nlohmann::json(*r.rate_t) : nlohmann::json(nullptr);
    j["stopped_by"] = std::string(to_string(r.stopped_by));
    if (!r.diagnostic.empty()) j["diagnostic"] = r.diagnostic;
    arr.push_back(std::move(j));
  }
  nlohmann::json doc;
  doc["metadata"] = {{"wall_time", "iteration loop only; mesh assembly and data generation excluded"},
                     {"rate_k", "k_star / k_star(land) within one (delta, seed) group"},
                     {"rate_t", "wall_time_s / wall_time_s(land) within one (delta, seed) group"}};
  doc["records"] = std::move(arr);
  return doc;
}

inline std::vector<BenchRecord> from_json(const nlohmann::json& doc) {
  try {
    const auto& arr = doc.contains("records") ? doc.at("records") : doc;
    std::vector<BenchRecord> out;
    for (const auto& j : arr) {
      BenchRecord r;
      r.method = parse_method(j.at("method").get<std::string>());
      r.delta = j.at("delta").get<double>();
      r.seed = j.at("seed").get<std::uint64_t>();
      r.k_star = j.at("k_star").get<long>();
      r.wall_time_s = j.at("wall_time_s").get<double>();
      r.re_final = j.at("re_final").get<double>();
      if (!j.at("rate_k").is_null()) r.rate_k = j.at("rate_k").get<double>();
      if (!j.at("rate_t").is_null()) r.rate_t = j.at("rate_t").get<double>();
      r.stopped_by = parse_stop_reason(j.at("stopped_by").get<std::string>());
      if (j.contains("diagnostic")) r.diagnostic = j.at("diagnostic").get<std::string>();
      out.push_back(std::move(r));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("records JSON: ") + e.what());
  }
}

inline void write_json(std::ostream& os, const std::vector<BenchRecord>& records) {
  os << to_json(records).dump(2) << '\n';
}

inline std::vector<BenchRecord> read_json(std::istream& is) {
  nlohmann::json doc;
  try {
    is >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("records JSON: ") + e.what());
  }
  return from_json(doc);
}

inline void emit(const std::vector<BenchRecord>& records, const std::string& path, Format format) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  if (format == Format::csv) {
    write_csv(os, records);
  } else {
    write_json(os, records);
  }
  if (!os) throw IoError("write to '" + path + "' failed");
}

// ---- configuration -------------------------------------------------------

/// Flat "key = value" settings; '#' starts a comment. Keys are dotted,
/// e.g. "solver.tau = 2.8".
using ConfigMap = std::map<std::string, std::string>;

inline ConfigMap parse_config(std::istream& is, const std::string& source = "config") {
  ConfigMap out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = detail::trim(std::string_view(t).substr(0, eq));
    const std::string value = detail::trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
    out[key] = value;
  }
  return out;
}

inline ConfigMap parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config '" + path + "'");
  return parse_config(is, path);
}

namespace detail {

inline void apply_solver_key(SolverConfig& cfg, const std::string& key, const std::string& v) {
  if (key == "tau") cfg.tau = parse_double(v, key);
  else if (key == "eta") cfg.eta = parse_double(v, key);
  else if (key == "mu") cfg.mu = parse_double(v, key);
  else if (key == "cf") cfg.c_F = parse_double(v, key);
  else if (key == "alpha") cfg.nesterov_alpha = parse_double(v, key);
  else if (key == "q_scale") cfg.q_scale = parse_double(v, key);
  else if (key == "q_power") cfg.q_power = parse_double(v, key);
  else if (key == "jmax") cfg.j_max = static_cast<int>(parse_integer(v, key));
  else if (key == "i0") cfg.i0 = static_cast<int>(parse_integer(v, key));
  else if (key == "directions") cfg.n_directions = static_cast<int>(parse_integer(v, key));
  else if (key == "max_iters") cfg.max_iters = static_cast<int>(parse_integer(v, key));
  else if (key == "delta_mode") cfg.delta_mode = parse_delta_mode(v);
  else throw ConfigError("unknown solver key '" + key + "'");
}

} // namespace detail

/// Builds a spec from settings. Recognized keys:
///   problem.name, problem.mesh_n, problem.x0, problem.inner_product,
///   noise.delta, noise.seed (comma-separated lists),
///   solver.{tau, eta, mu, cf, alpha, q_scale, q_power, jmax, i0, directions,
///           max_iters, delta_mode},
///   method.<name>.<solver key> (per-method override), run.methods,
///   output.out, output.trace, output.format.
/// Problem-specific defaults (mesh size, alpha, q, max_iters) are applied
/// first and then overridden by explicit keys.
inline BenchSpec spec_from_config(const ConfigMap& cfg) {
  BenchSpec spec;
  if (auto it = cfg.find("problem.name"); it != cfg.end()) spec.problem = parse_problem(it->second);
  spec.mesh_n = default_mesh_n(spec.problem);
  spec.solver = default_config(spec.problem);

  std::map<Method, std::vector<std::pair<std::string, std::string>>> per_method;
  for (const auto& [key, value] : cfg) {
    if (key == "problem.name") continue;
    if (key == "problem.mesh_n") {
      spec.mesh_n = static_cast<int>(detail::parse_integer(value, key));
    } else if (key == "problem.x0") {
      spec.x0_value = detail::parse_double(value, key);
    } else if (key == "problem.inner_product") {
      spec.inner_product = parse_inner_product(value);
    } else if (key == "noise.delta") {
      spec.deltas.clear();
      for (const auto& s : detail::split(value, ',')) spec.deltas.push_back(detail::parse_double(detail::trim(s), key));
    } else if (key == "noise.seed") {
      spec.seeds.clear();
      for (const auto& s : detail::split(value, ',')) spec.seeds.push_back(detail::parse_unsigned(detail::trim(s), key));
    } else if (key.rfind("solver.", 0) == 0) {
      detail::apply_solver_key(spec.solver, key.substr(7), value);
    } else if (key.rfind("method.", 0) == 0) {
      const auto rest = key.substr(7);
      const auto dot = rest.find('.');
      if (dot == std::string::npos) throw ConfigError("expected method.<name>.<key>, got '" + key + "'");
      per_method[parse_method(rest.substr(0, dot))].emplace_back(rest.substr(dot + 1), value);
    } else if (key == "run.methods") {
      spec.methods.clear();
      for (const auto& s : detail::split(value, ',')) spec.methods.push_back(parse_method(detail::trim(s)));
    } else if (key == "output.out") {
      spec.out = value;
    } else if (key == "output.trace") {
      spec.trace_dir = value;
    } else if (key == "output.format") {
      spec.format = parse_format(value);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  for (const auto& [m, kvs] : per_method) {
    SolverConfig c = spec.solver;
    for (const auto& [k, v] : kvs) detail::apply_solver_key(c, k, v);
    spec.overrides[m] = c;
  }
  return spec;
}

} // namespace tgss::bench
