#pragma once

// Iterative regularization methods for F(x) = y with noisy data:
// Landweber, two-point gradient (TPG), sequential subspace optimization
// (SESOP) and their combination TGSS, stopped by the discrepancy principle.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "tgss/geometry.hpp"
#include "tgss/operator.hpp"

namespace tgss {

enum class LambdaRule { zero, nesterov, coupling, dbts };

enum class Scheme { landweber, tpg, sesop, tgss };

struct SolverConfig {
  double eta = 0.1;
  double tau = 2.8;
  double mu = 1.01;
  double c_F = 0.1;
  double nesterov_alpha = 3.0;
  /// q(i) = q_scale / i^q_power
  double q_scale = 4.0;
  double q_power = 1.1;
  int j_max = 1;
  int i0 = 2;
  /// Size cap of the active index set; the current stripe is always included.
  int n_directions = 2;
  int max_iters = 50000;
  /// Radius of the ball in which the local assumptions hold. Informational only.
  double rho = 1.0;
  DeltaMode delta_mode = DeltaMode::effective;
  LambdaRule lambda_rule = LambdaRule::nesterov;

  [[nodiscard]] double q(double i) const { return q_scale / std::pow(i, q_power); }

  void validate() const {
    if (!(eta >= 0.0 && eta < 1.0)) throw ConfigError("eta must lie in [0,1)");
    if (!(tau > (1.0 + eta) / (1.0 - eta))) throw ConfigError("tau must exceed (1+eta)/(1-eta)");
    if (!(mu > 1.0)) throw ConfigError("mu must be > 1");
    if (!(c_F > 0.0)) throw ConfigError("c_F must be > 0");
    if (!(nesterov_alpha >= 3.0)) throw ConfigError("nesterov alpha must be >= 3");
    if (!(q_scale > 0.0) || !(q_power > 1.0)) throw ConfigError("q needs q_scale > 0 and q_power > 1");
    if (j_max < 1) throw ConfigError("j_max must be >= 1");
    if (i0 < 0) throw ConfigError("i0 must be >= 0");
    if (n_directions < 1 || static_cast<std::size_t>(n_directions) > kSmallSystemCap) {
      throw ConfigError("n_directions must lie in [1, " + std::to_string(kSmallSystemCap) + "]");
    }
    if (max_iters < 0) throw ConfigError("max_iters must be >= 0");
  }
};

/// Psi = (1 - eta) - (1 + eta)/tau.
inline double psi(const SolverConfig& cfg) {
  if (!(cfg.eta >= 0.0 && cfg.eta < 1.0)) throw ConfigError("eta must lie in [0,1)");
  if (!(cfg.tau > (1.0 + cfg.eta) / (1.0 - cfg.eta))) {
    throw ConfigError("tau must exceed (1+eta)/(1-eta)");
  }
  return (1.0 - cfg.eta) - (1.0 + cfg.eta) / cfg.tau;
}

/// Residual floor standing in for tau*delta when the data are exact.
inline constexpr double kExactDataResidualFloor = 1e-12;

inline bool discrepancy_met(double r_norm, double tau, double delta_used) {
  if (delta_used == 0.0) return r_norm <= kExactDataResidualFloor;
  return r_norm <= tau * delta_used;
}

inline bool discrepancy_met(double r_norm, const SolverConfig& cfg, double delta_used) {
  return discrepancy_met(r_norm, cfg.tau, delta_used);
}

/// (k-1)/(k+alpha-1), clipped at 0 for k = 0.
inline double lambda_nesterov(long k, double alpha) {
  const double kd = static_cast<double>(k);
  return std::max(0.0, (kd - 1.0) / (kd + alpha - 1.0));
}

/// min{ sqrt((Psi tau delta)^2 / (mu c_F^2 |dx|^2) + 1/4) - 1/2, k/(k+alpha) },
/// the largest lambda with lambda(lambda+1)|dx|^2 <= (Psi tau delta)^2/(mu c_F^2)
/// below the Nesterov-type cap. |dx| = 0 yields the cap.
inline double coupling_lambda(double psi_tau_delta, double mu, double c_F, double dx_norm, long k,
                              double alpha) {
  const double kd = static_cast<double>(k);
  const double cap = kd / (kd + alpha);
  if (dx_norm == 0.0) return cap;
  const double ratio = psi_tau_delta / (std::sqrt(mu) * c_F * dx_norm);
  const double r2 = ratio * ratio;
  const double root = r2 / (std::sqrt(r2 + 0.25) + 0.5);
  return std::min(root, cap);
}

inline double lambda_coupling(const Vec& x_cur, const Vec& x_prev, long k, double delta_used,
                              const SolverConfig& cfg) {
  const double dx = norm(x_cur - x_prev);
  return coupling_lambda(psi(cfg) * cfg.tau * delta_used, cfg.mu, cfg.c_F, dx, k, cfg.nesterov_alpha);
}

/// beta_k(i) = min{ q(i)/|dx|, k/(k+alpha) }; q/0 counts as +infinity.
inline double dbts_beta(const SolverConfig& cfg, long k, long i, double dx_norm) {
  const double kd = static_cast<double>(k);
  const double cap = kd / (kd + cfg.nesterov_alpha);
  if (dx_norm == 0.0) return cap;
  return std::min(cfg.q(static_cast<double>(i)) / dx_norm, cap);
}

/// lambda(lambda+1)|dx|^2 - Psi^2/(mu c_F^2) |r|^2; non-positive iff the
/// coupling condition holds.
inline double coupling_slack(double lambda, double dx_norm, double r_norm, const SolverConfig& cfg) {
  const double p = psi(cfg);
  return lambda * (lambda + 1.0) * dx_norm * dx_norm - p * p / (cfg.mu * cfg.c_F * cfg.c_F) * r_norm * r_norm;
}

/// A stripe built at some point z_i together with the data it came from.
struct StripeRecord {
  Stripe stripe;
  double residual_norm = 0.0;
};

/// Evaluation of the operator at a trial point z.
template <ForwardOperator Op>
struct Evaluation {
  using Lin = decltype(std::declval<const Op&>().linearize(std::declval<const Vec&>()));
  Vec z;
  Lin lin;
  Vec residual;
  double residual_norm;

  Evaluation(const Op& op, Vec point, const NoisyData& data)
      : z(std::move(point)), lin(op.linearize(z)), residual(lin.value() - data.y_delta),
        residual_norm(norm(residual)) {
    require_finite(residual, "operator evaluation");
  }
};

/// Stripe from the evaluation at z:
///   w = F(z) - y_delta, u = F'(z)^* w, alpha = <u,z> - <w,w>,
///   xi = (delta + eta(|w| + delta)) |w|.
/// Returns nullopt when the residual vanishes (u = 0 and w = 0); throws
/// InvariantViolation when u = 0 although w != 0.
template <class Lin>
std::optional<StripeRecord> build_stripe(const Lin& lin, const Vec& z, const Vec& w, double delta_used,
                                         double eta) {
  const double wn = norm(w);
  Vec u = lin.adjoint(w);
  require_finite(u, "search direction");
  if (u.squaredNorm() == 0.0) {
    if (wn == 0.0) return std::nullopt;
    throw InvariantViolation("zero search direction with nonzero residual (tangential cone condition violated)");
  }
  StripeRecord rec;
  rec.stripe.alpha = dot(u, z) - w.squaredNorm();
  rec.stripe.xi = (delta_used + eta * (wn + delta_used)) * wn;
  rec.stripe.u = std::move(u);
  rec.residual_norm = wn;
  return rec;
}

template <ForwardOperator Op>
std::optional<StripeRecord> build_stripe(const Op& op, const Vec& z, const NoisyData& data,
                                         const SolverConfig& cfg) {
  Evaluation<Op> ev(op, z, data);
  return build_stripe(ev.lin, ev.z, ev.residual, delta_used(data, cfg.delta_mode), cfg.eta);
}

/// (x_{k-1}, x_k, z_k) plus the DBTS counter and the stripes retained from
/// previous iterations (newest first).
struct IterationState {
  Vec x_prev;
  Vec x_cur;
  Vec z_cur;
  long k = 0;
  long i_k = 0;
  double lambda_cur = 0.0;
  std::deque<StripeRecord> retained;
  std::size_t dropped_directions = 0;

  static IterationState start(const Vec& x0, const SolverConfig& cfg) {
    IterationState s;
    s.x_prev = x0;
    s.x_cur = x0;
    s.z_cur = x0;
    s.i_k = cfg.i0;
    return s;
  }
};

enum class DbtsAcceptance { discrepancy, coupling, fallback };

template <ForwardOperator Op>
struct DbtsChoice {
  double lambda;
  long i_k;
  DbtsAcceptance accepted_by;
  Evaluation<Op> eval;
};

/// Discrete backtracking search for the combination parameter (k >= 1).
/// Tries lambda = beta_k(i_{k-1} + j) for j = 1..j_max and accepts the first
/// trial whose z meets the discrepancy principle or the coupling condition.
/// Otherwise lambda follows the closed-form coupling rule and
/// i_k = i_{k-1} + j_max. The accepted evaluation is returned for reuse.
template <ForwardOperator Op>
DbtsChoice<Op> dbts_select(const IterationState& state, const Op& op, const NoisyData& data,
                           const SolverConfig& cfg) {
  if (state.k < 1) throw PreconditionError("dbts_select requires k >= 1");
  const double dlt = delta_used(data, cfg.delta_mode);
  const Vec dx = state.x_cur - state.x_prev;
  const double dx_norm = norm(dx);
  const double p = psi(cfg);
  const double bound = p * p / (cfg.mu * cfg.c_F * cfg.c_F);
  for (int j = 1; j <= cfg.j_max; ++j) {
    const long i = state.i_k + j;
    const double lambda = dbts_beta(cfg, state.k, i, dx_norm);
    Evaluation<Op> ev(op, state.x_cur + lambda * dx, data);
    if (discrepancy_met(ev.residual_norm, cfg, dlt)) {
      return {lambda, i, DbtsAcceptance::discrepancy, std::move(ev)};
    }
    if (lambda * (lambda + 1.0) * dx_norm * dx_norm <= bound * ev.residual_norm * ev.residual_norm) {
      return {lambda, i, DbtsAcceptance::coupling, std::move(ev)};
    }
  }
  const double lambda = lambda_coupling(state.x_cur, state.x_prev, state.k, dlt, cfg);
  return {lambda, state.i_k + cfg.j_max, DbtsAcceptance::fallback,
          Evaluation<Op>(op, state.x_cur + lambda * dx, data)};
}

/// Everything a single iteration produced besides the new state.
struct StepReport {
  double lambda = 0.0;
  double residual_norm = 0.0;
  std::size_t n_dirs_used = 0;
  /// max over the stripes of I_k of the violation at x_{k+1}
  double containment_slack = std::numeric_limits<double>::quiet_NaN();
  /// Point after the first projection (projection schemes only).
  std::optional<Vec> first_point;
  std::optional<StripeRecord> current_stripe;
  bool residual_zero = false;
};

namespace detail {

/// Momentum point z_k = x_k + lambda (x_k - x_{k-1}) for the configured rule.
template <ForwardOperator Op>
std::pair<double, Evaluation<Op>> momentum_point(IterationState& state, const Op& op, const NoisyData& data,
                                                 const SolverConfig& cfg, LambdaRule rule) {
  const double dlt = delta_used(data, cfg.delta_mode);
  double lambda = 0.0;
  switch (rule) {
  case LambdaRule::zero:
    break;
  case LambdaRule::nesterov:
    lambda = lambda_nesterov(state.k, cfg.nesterov_alpha);
    break;
  case LambdaRule::coupling:
    lambda = lambda_coupling(state.x_cur, state.x_prev, state.k, dlt, cfg);
    break;
  case LambdaRule::dbts:
    if (state.k >= 1) {
      auto choice = dbts_select(state, op, data, cfg);
      state.i_k = choice.i_k;
      return {choice.lambda, std::move(choice.eval)};
    }
    break;
  }
  if (lambda == 0.0) return {0.0, Evaluation<Op>(op, state.x_cur, data)};
  return {lambda, Evaluation<Op>(op, state.x_cur + lambda * (state.x_cur - state.x_prev), data)};
}

template <ForwardOperator Op>
StepReport gradient_update(IterationState& state, const Evaluation<Op>& ev, double lambda) {
  StepReport rep;
  rep.lambda = lambda;
  rep.residual_norm = ev.residual_norm;
  rep.n_dirs_used = 1;
  Vec next = ev.z - ev.lin.adjoint(ev.residual);
  require_finite(next, "gradient step");
  state.x_prev = std::move(state.x_cur);
  state.x_cur = std::move(next);
  state.z_cur = ev.z;
  state.lambda_cur = lambda;
  ++state.k;
  return rep;
}

template <ForwardOperator Op>
StepReport projection_update(IterationState& state, const Evaluation<Op>& ev, double lambda,
                             const SolverConfig& cfg, double dlt) {
  StepReport rep;
  rep.lambda = lambda;
  rep.residual_norm = ev.residual_norm;
  auto current = build_stripe(ev.lin, ev.z, ev.residual, dlt, cfg.eta);
  if (!current) {
    rep.residual_zero = true;
    return rep;
  }

  std::vector<Stripe> stripes;
  stripes.push_back(current->stripe);
  const auto keep = static_cast<std::size_t>(cfg.n_directions - 1);
  for (std::size_t i = 0; i < std::min(keep, state.retained.size()); ++i) {
    stripes.push_back(state.retained[i].stripe);
  }
  if (classify(ev.z, stripes.front()) != StripeSide::above) {
    throw InvariantViolation("iterate does not lie above its own stripe although the discrepancy "
                             "principle is not met (check eta and tau)");
  }
  SequentialProjection proj = sequential_stripe_projection(ev.z, stripes);
  require_finite(proj.point, "projection step");

  rep.n_dirs_used = proj.active;
  rep.first_point = std::move(proj.first_point);
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& s : stripes) worst = std::max(worst, stripe_violation(proj.point, s));
  rep.containment_slack = worst;
  rep.current_stripe = current;

  state.dropped_directions += proj.dropped;
  state.retained.push_front(std::move(*current));
  while (state.retained.size() > keep) state.retained.pop_back();
  state.x_prev = std::move(state.x_cur);
  state.x_cur = std::move(proj.point);
  state.z_cur = ev.z;
  state.lambda_cur = lambda;
  ++state.k;
  return rep;
}

} // namespace detail

/// x_{k+1} = x_k - F'(x_k)^*(F(x_k) - y_delta), unit step size.
template <ForwardOperator Op>
StepReport step_landweber(IterationState& state, const Op& op, const NoisyData& data, const SolverConfig&) {
  Evaluation<Op> ev(op, state.x_cur, data);
  return detail::gradient_update(state, ev, 0.0);
}

/// z_k = x_k + lambda_k (x_k - x_{k-1}), x_{k+1} = z_k - F'(z_k)^*(F(z_k) - y_delta).
template <ForwardOperator Op>
StepReport step_tpg(IterationState& state, const Op& op, const NoisyData& data, const SolverConfig& cfg,
                    LambdaRule rule) {
  auto [lambda, ev] = detail::momentum_point(state, op, data, cfg, rule);
  return detail::gradient_update(state, ev, lambda);
}

/// Projection of x_k onto the intersection of the current stripe (built at
/// x_k) and up to n_directions-1 retained stripes.
template <ForwardOperator Op>
StepReport step_sesop(IterationState& state, const Op& op, const NoisyData& data, const SolverConfig& cfg) {
  Evaluation<Op> ev(op, state.x_cur, data);
  return detail::projection_update(state, ev, 0.0, cfg, delta_used(data, cfg.delta_mode));
}

/// Projection of the momentum point z_k onto the intersection of the stripe
/// built at z_k and up to n_directions-1 stripes retained from z_{k-1}, ...
template <ForwardOperator Op>
StepReport step_tgss(IterationState& state, const Op& op, const NoisyData& data, const SolverConfig& cfg,
                     LambdaRule rule) {
  auto [lambda, ev] = detail::momentum_point(state, op, data, cfg, rule);
  return detail::projection_update(state, ev, lambda, cfg, delta_used(data, cfg.delta_mode));
}

enum class StopReason { discrepancy, max_iters, residual_zero, failed };

inline std::string_view to_string(StopReason r) {
  switch (r) {
  case StopReason::discrepancy: return "discrepancy";
  case StopReason::max_iters: return "max_iters";
  case StopReason::residual_zero: return "residual_zero";
  case StopReason::failed: return "failed";
  }
  return "unknown";
}

/// One row per iteration index k. Step quantities describe the transition
/// k -> k+1 and are NaN on the final row.
struct TraceRow {
  long k = 0;
  double residual_norm = 0.0;
  double lambda = 0.0;
  std::size_t n_dirs_used = 0;
  /// RE of x_k (NaN without ground truth).
  double re = std::numeric_limits<double>::quiet_NaN();
  double coupling_slack = std::numeric_limits<double>::quiet_NaN();
  double containment_slack = std::numeric_limits<double>::quiet_NaN();
  /// |x_{k+1} - x_true| - |x_k - x_true|
  double monotonicity_slack = std::numeric_limits<double>::quiet_NaN();
  /// |x_true - x~|^2 - |x_true - z_k|^2 + (|r|(|r| - delta - eta(|r|+delta))/|u|)^2
  double descent_slack = std::numeric_limits<double>::quiet_NaN();
  /// max(|<u_k, x_true> - alpha_k| - xi_k) for the stripe built at step k
  double truth_containment_slack = std::numeric_limits<double>::quiet_NaN();
};

struct SolveResult {
  Vec x;
  long k_star = 0;
  StopReason stopped_by = StopReason::max_iters;
  double wall_time = 0.0;
  std::vector<TraceRow> trace;
  std::size_t dropped_directions = 0;
  std::string diagnostic;
};

/// Runs `scheme` from x0 until the discrepancy principle holds at z_k
/// (checked before stepping), the residual vanishes, or max_iters steps were
/// taken. A discrepancy stop returns z_{k*}, the point the test accepted;
/// otherwise x_k is returned. Errors inside the loop end the run with
/// StopReason::failed and a diagnostic.
template <ForwardOperator Op>
SolveResult run(Scheme scheme, const Op& op, const NoisyData& data, const Vec& x0, const SolverConfig& cfg,
                const std::optional<Vec>& truth = std::nullopt) {
  cfg.validate();
  if (x0.size() != op.domain_dim()) throw DimensionError("run: x0 has wrong length");
  if (data.y_delta.size() != op.range_dim()) throw DimensionError("run: data has wrong length");
  if (truth && truth->size() != x0.size()) throw DimensionError("run: truth has wrong length");

  const double dlt = delta_used(data, cfg.delta_mode);
  const LambdaRule rule =
      (scheme == Scheme::landweber || scheme == Scheme::sesop) ? LambdaRule::zero : cfg.lambda_rule;
  const double truth_norm = truth ? norm(*truth) : 0.0;
  const double psi_val = psi(cfg);

  SolveResult res;
  IterationState state = IterationState::start(x0, cfg);
  const auto t0 = std::chrono::steady_clock::now();

  auto finish = [&](StopReason why) {
    res.stopped_by = why;
    res.k_star = state.k;
    res.x = state.x_cur;
    res.dropped_directions = state.dropped_directions;
  };

  try {
    for (;;) {
      TraceRow row;
      row.k = state.k;
      if (truth && truth_norm > 0.0) row.re = norm(state.x_cur - *truth) / truth_norm;
      if (state.k >= cfg.max_iters) {
        row.residual_norm = residual(op, state.x_cur, data).second;
        res.trace.push_back(row);
        finish(StopReason::max_iters);
        break;
      }

      const double dx_norm = norm(state.x_cur - state.x_prev);
      const Vec x_before = state.x_cur;
      auto [lambda, ev] = detail::momentum_point(state, op, data, cfg, rule);
      row.lambda = lambda;
      row.residual_norm = ev.residual_norm;
      if (discrepancy_met(ev.residual_norm, cfg, dlt)) {
        res.trace.push_back(row);
        finish(StopReason::discrepancy);
        res.x = ev.z;
        break;
      }
      if (ev.residual_norm == 0.0) {
        res.trace.push_back(row);
        finish(StopReason::residual_zero);
        break;
      }

      StepReport rep = (scheme == Scheme::landweber || scheme == Scheme::tpg)
                           ? detail::gradient_update(state, ev, lambda)
                           : detail::projection_update(state, ev, lambda, cfg, dlt);
      if (rep.residual_zero) {
        res.trace.push_back(row);
        finish(StopReason::residual_zero);
        break;
      }
      row.n_dirs_used = rep.n_dirs_used;
      row.coupling_slack = lambda * (lambda + 1.0) * dx_norm * dx_norm -
                           psi_val * psi_val / (cfg.mu * cfg.c_F * cfg.c_F) * ev.residual_norm * ev.residual_norm;
      row.containment_slack = rep.containment_slack;
      if (truth) {
        row.monotonicity_slack = norm(state.x_cur - *truth) - norm(x_before - *truth);
        if (rep.first_point && rep.current_stripe) {
          const double r = ev.residual_norm;
          const double gain = r * (r - dlt - cfg.eta * (r + dlt)) / norm(rep.current_stripe->stripe.u);
          row.descent_slack =
              (*truth - *rep.first_point).squaredNorm() - (*truth - ev.z).squaredNorm() + gain * gain;
          row.truth_containment_slack = stripe_violation(*truth, rep.current_stripe->stripe);
        }
      }
      res.trace.push_back(row);
    }
  } catch (const Error& e) {
    finish(StopReason::failed);
    res.diagnostic = e.what();
  }
  res.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

/// Trace CSV: k,residual_norm,lambda,n_dirs_used,re,coupling_slack,containment_slack
inline void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& trace) {
  os << "k,residual_norm,lambda,n_dirs_used,re,coupling_slack,containment_slack\n";
  os.precision(17);
  for (const auto& r : trace) {
    os << r.k << ',' << r.residual_norm << ',' << r.lambda << ',' << r.n_dirs_used << ',' << r.re << ','
       << r.coupling_slack << ',' << r.containment_slack << '\n';
  }
}

inline void write_trace_csv(const std::string& path, const std::vector<TraceRow>& trace) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  write_trace_csv(os, trace);
  if (!os) throw IoError("write to '" + path + "' failed");
}

} // namespace tgss
