#pragma once

// Quick invariant checks run by `tgss selftest`.

#include <cmath>
#include <string>
#include <vector>

#include "tgss/geometry.hpp"
#include "tgss/invpot.hpp"
#include "tgss/solvers.hpp"

namespace tgss::selftest {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

namespace detail {

inline Vec random_vec(Xoshiro256& rng, Eigen::Index n) {
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.next_normal();
  return v;
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

inline CheckResult geometry_projections(std::uint64_t seed) {
  Xoshiro256 rng(seed);
  double worst = 0.0;
  for (int trial = 0; trial < 300; ++trial) {
    const Eigen::Index n = 2 + trial % 9;
    Stripe s{random_vec(rng, n), rng.next_normal(), std::abs(rng.next_normal())};
    const Vec x = 3.0 * random_vec(rng, n);
    const Vec p = project_stripe(x, s);
    worst = std::max(worst, std::max(0.0, stripe_violation(p, s)));
    worst = std::max(worst, norm(project_stripe(p, s) - p));
    const Vec w = random_vec(rng, n);
    const Vec pw = project_stripe(w, s);
    worst = std::max(worst, std::max(0.0, norm(p - pw) - norm(x - w)));
  }
  return {"stripe projection: membership, idempotence, non-expansiveness", worst <= 1e-9,
          "max slack " + fmt(worst)};
}

inline CheckResult operator_adjoint(std::uint64_t seed) {
  Xoshiro256 rng(seed);
  double worst = 0.0;
  double const_err = 0.0;
  for (int dim : {1, 2}) {
    invpot::PotentialOperator op(invpot::make_mesh(dim, dim == 1 ? 64 : 8), invpot::constant_one);
    const Vec one = Vec::Ones(op.domain_dim());
    const_err = std::max(const_err, (op.apply(one) - one).cwiseAbs().maxCoeff());
    for (int t = 0; t < 10; ++t) {
      const Vec c = one + 0.5 * random_vec(rng, op.domain_dim()).cwiseAbs();
      const Vec q = random_vec(rng, op.domain_dim());
      const Vec w = random_vec(rng, op.range_dim());
      const auto lin = op.linearize(c);
      const double lhs = dot(lin.derivative(q), w);
      const double rhs = dot(q, lin.adjoint(w));
      worst = std::max(worst, std::abs(lhs - rhs) / std::max(std::abs(lhs), std::abs(rhs)));
    }
  }
  return {"potential operator: constant solution and adjoint consistency", worst <= 1e-10 && const_err <= 1e-8,
          "adjoint " + fmt(worst) + ", constant " + fmt(const_err)};
}

inline CheckResult reductions(std::uint64_t seed) {
  Xoshiro256 rng(seed);
  double worst = 0.0;
  for (int t = 0; t < 5; ++t) {
    const Eigen::Index n = 8;
    Vec d(n);
    for (Eigen::Index i = 0; i < n; ++i) d(i) = 0.1 + rng.next_uniform();
    const DiagonalOperator op(d);
    const NoisyData data = add_noise(op.apply(random_vec(rng, n)), 1e-3, seed + t);
    const Vec x0 = Vec::Zero(n);
    SolverConfig cfg;
    cfg.eta = 0.0;
    cfg.tau = 2.0;
    cfg.max_iters = 30;
    cfg.lambda_rule = LambdaRule::zero;
    const auto land = run(Scheme::landweber, op, data, x0, cfg);
    const auto tpg = run(Scheme::tpg, op, data, x0, cfg);
    worst = std::max(worst, norm(land.x - tpg.x));
    cfg.n_directions = 1;
    const auto sesop = run(Scheme::sesop, op, data, x0, cfg);
    const auto tgss = run(Scheme::tgss, op, data, x0, cfg);
    worst = std::max(worst, norm(sesop.x - tgss.x));
  }
  return {"reductions: TPG(0) = Landweber, TGSS(0, n=1) = SESOP(1)", worst <= 1e-12, "max gap " + fmt(worst)};
}

inline CheckResult containment(std::uint64_t seed) {
  Xoshiro256 rng(seed);
  double worst = -1.0;
  const Eigen::Index n = 10;
  Vec d(n);
  for (Eigen::Index i = 0; i < n; ++i) d(i) = 1.0 / (1.0 + i);
  const DiagonalOperator op(d);
  const Vec truth = random_vec(rng, n);
  const NoisyData data = add_noise(op.apply(truth), 1e-3, seed);
  SolverConfig cfg;
  cfg.eta = 0.0;
  cfg.tau = 2.0;
  cfg.lambda_rule = LambdaRule::coupling;
  cfg.max_iters = 200;
  const auto res = run(Scheme::tgss, op, data, Vec::Zero(n), cfg, truth);
  for (const auto& row : res.trace)
    if (std::isfinite(row.truth_containment_slack)) worst = std::max(worst, row.truth_containment_slack);
  const bool ok = res.stopped_by != StopReason::failed && worst <= 1e-12;
  return {"diagonal operator: solution lies in every stripe", ok, "max violation " + fmt(worst)};
}

} // namespace detail

inline std::vector<CheckResult> run_all(std::uint64_t seed = 7) {
  return {detail::geometry_projections(seed), detail::operator_adjoint(seed), detail::reductions(seed),
          detail::containment(seed)};
}

} // namespace tgss::selftest
