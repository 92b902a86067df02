#pragma once

// Hyperplanes, halfspaces and stripes in coordinate Hilbert space together
// with their metric projections.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "tgss/numkernel.hpp"

namespace tgss {

/// {x : <u,x> = alpha}
struct Hyperplane {
  Vec u;
  double alpha = 0.0;
};

/// {x : |<u,x> - alpha| <= xi}. A stripe with xi = 0 is the hyperplane H(u, alpha).
struct Stripe {
  Vec u;
  double alpha = 0.0;
  double xi = 0.0;

  [[nodiscard]] Hyperplane upper() const { return {u, alpha + xi}; }
  [[nodiscard]] Hyperplane lower() const { return {u, alpha - xi}; }
};

enum class StripeSide { above, inside, below };

namespace detail {

inline double checked_norm_sq(const Vec& u, const char* what) {
  const double nn = u.squaredNorm();
  if (!(nn > 0.0) || !std::isfinite(nn)) {
    throw InvalidStripeError(std::string(what) + ": direction must be nonzero and finite");
  }
  return nn;
}

inline void check_stripe(const Stripe& s, const char* what) {
  checked_norm_sq(s.u, what);
  if (!(s.xi >= 0.0)) throw InvalidStripeError(std::string(what) + ": negative half-width");
}

} // namespace detail

/// Orthogonal projection x - ((<u,x> - alpha)/|u|^2) u.
inline Vec project_hyperplane(const Vec& x, const Hyperplane& h) {
  const double nn = detail::checked_norm_sq(h.u, "project_hyperplane");
  const double t = (dot(h.u, x) - h.alpha) / nn;
  return x - t * h.u;
}

/// Projection onto {x : <u,x> <= alpha}.
inline Vec project_halfspace(const Vec& x, const Vec& u, double alpha) {
  const double nn = detail::checked_norm_sq(u, "project_halfspace");
  const double ux = dot(u, x);
  if (ux <= alpha) return x;
  const double t_plus = (ux - alpha) / nn;
  return x - t_plus * u;
}

/// Projection onto {x : <u,x> >= alpha}.
inline Vec project_halfspace_geq(const Vec& x, const Vec& u, double alpha) {
  const double nn = detail::checked_norm_sq(u, "project_halfspace_geq");
  const double ux = dot(u, x);
  if (ux >= alpha) return x;
  const double t_minus = (ux - alpha) / nn;
  return x - t_minus * u;
}

/// Side of `x` relative to the stripe. Points on a boundary count as inside;
/// `slack` widens the stripe symmetrically for round-off tolerant checks.
inline StripeSide classify(const Vec& x, const Stripe& s, double slack = 0.0) {
  const double v = dot(s.u, x);
  if (v > s.alpha + s.xi + slack) return StripeSide::above;
  if (v < s.alpha - s.xi - slack) return StripeSide::below;
  return StripeSide::inside;
}

/// Signed violation |<u,x> - alpha| - xi; non-positive iff x lies in the stripe.
inline double stripe_violation(const Vec& x, const Stripe& s) {
  return std::abs(dot(s.u, x) - s.alpha) - s.xi;
}

inline Vec project_stripe(const Vec& x, const Stripe& s) {
  detail::check_stripe(s, "project_stripe");
  switch (classify(x, s)) {
  case StripeSide::above:
    return project_halfspace(x, s.u, s.alpha + s.xi);
  case StripeSide::below:
    return project_halfspace_geq(x, s.u, s.alpha - s.xi);
  case StripeSide::inside:
    break;
  }
  return x;
}

struct IntersectionProjection {
  Vec point;
  /// Multipliers t with point = x - sum_i t_i u_i.
  Vec coefficients;
};

/// Metric projection onto the intersection of up to kSmallSystemCap
/// hyperplanes. The multipliers minimize
///   h(t) = 1/2 |x - sum t_i u_i|^2 + sum t_i alpha_i,
/// whose stationarity conditions are the Gram system
///   sum_i <u_j,u_i> t_i = <u_j,x> - alpha_j.
/// Throws DependentDirectionsError if the directions are linearly dependent.
inline IntersectionProjection project_hyperplane_intersection(const Vec& x,
                                                              std::span<const Hyperplane> planes) {
  const auto n = static_cast<Eigen::Index>(planes.size());
  if (n == 0 || planes.size() > kSmallSystemCap) {
    throw DimensionError("project_hyperplane_intersection: need 1.." +
                         std::to_string(kSmallSystemCap) + " hyperplanes");
  }
  DenseMatrix gram(n, n);
  Vec rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& pi = planes[static_cast<std::size_t>(i)];
    detail::checked_norm_sq(pi.u, "project_hyperplane_intersection");
    rhs(i) = dot(pi.u, x) - pi.alpha;
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double g = dot(pi.u, planes[static_cast<std::size_t>(j)].u);
      gram(i, j) = g;
      gram(j, i) = g;
    }
  }
  Vec t = solve_spd_dense(gram, rhs);
  Vec p = x;
  for (Eigen::Index i = 0; i < n; ++i) p -= t(i) * planes[static_cast<std::size_t>(i)].u;
  return {std::move(p), std::move(t)};
}

/// sqrt(1 - cos^2) of the angle between two directions; 1 for orthogonal,
/// 0 for parallel vectors.
inline double gamma(const Vec& u1, const Vec& u2) {
  const double s1 = detail::checked_norm_sq(u1, "gamma");
  const double n2 = std::sqrt(detail::checked_norm_sq(u2, "gamma"));
  // |u2 - P_{u1} u2| / |u2| avoids the cancellation in 1 - cos^2
  const Vec r = u2 - (dot(u1, u2) / s1) * u1;
  return std::min(1.0, norm(r) / n2);
}

struct SequentialProjection {
  Vec point;
  /// Point after projecting onto the upper boundary of the first stripe.
  Vec first_point;
  /// One entry per input stripe: point = z - sum_i coefficients_i u_i.
  Vec coefficients;
  /// Stripes skipped because their direction depended on the active ones.
  std::size_t dropped = 0;
  /// Number of stripes whose boundary hyperplane ended up in the active set.
  std::size_t active = 0;
};

/// Ordered projection of `z` onto the intersection of `stripes`, newest
/// stripe first.
///
/// `z` is first projected onto the upper boundary hyperplane of stripes[0].
/// Each further stripe is then visited in order: if the current point lies
/// inside it nothing happens, otherwise the violated boundary hyperplane
/// (upper or lower, fixed at this moment) joins the active set and the point
/// is re-projected onto the intersection of all active hyperplanes. A stripe
/// whose direction is linearly dependent on the active ones is dropped. When
/// a later re-projection pushes the point out of a stripe that was skipped
/// earlier, the sweep is repeated for the remaining stripes.
inline SequentialProjection sequential_stripe_projection(const Vec& z, std::span<const Stripe> stripes) {
  if (stripes.empty() || stripes.size() > kSmallSystemCap) {
    throw DimensionError("sequential_stripe_projection: need 1.." + std::to_string(kSmallSystemCap) +
                         " stripes");
  }
  for (const auto& s : stripes) detail::check_stripe(s, "sequential_stripe_projection");

  const Stripe& current = stripes.front();
  if (classify(z, current) != StripeSide::above) {
    throw PreconditionError(
        "sequential_stripe_projection: point does not lie above the current stripe");
  }

  SequentialProjection out;
  out.coefficients = Vec::Zero(static_cast<Eigen::Index>(stripes.size()));

  std::vector<Hyperplane> planes{current.upper()};
  std::vector<std::size_t> owner{0};
  {
    const double t = (dot(current.u, z) - (current.alpha + current.xi)) / current.u.squaredNorm();
    out.point = z - t * current.u;
    out.coefficients(0) = t;
  }
  out.first_point = out.point;

  std::vector<bool> settled(stripes.size(), false);
  settled[0] = true;

  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 1; i < stripes.size(); ++i) {
      if (settled[i]) continue;
      const Stripe& s = stripes[i];
      const double slack = 1e-12 * (std::abs(s.alpha) + s.xi + norm(s.u) * norm(out.point));
      const StripeSide side = classify(out.point, s, slack);
      if (side == StripeSide::inside) continue;

      auto candidate = planes;
      candidate.push_back(side == StripeSide::above ? s.upper() : s.lower());
      IntersectionProjection proj;
      try {
        proj = project_hyperplane_intersection(out.point, candidate);
      } catch (const DependentDirectionsError&) {
        settled[i] = true;
        ++out.dropped;
        continue;
      }
      planes = std::move(candidate);
      owner.push_back(i);
      settled[i] = true;
      for (std::size_t a = 0; a < owner.size(); ++a) {
        out.coefficients(static_cast<Eigen::Index>(owner[a])) += proj.coefficients(static_cast<Eigen::Index>(a));
      }
      out.point = std::move(proj.point);
      changed = true;
    }
  }
  out.active = planes.size();
  return out;
}

} // namespace tgss
