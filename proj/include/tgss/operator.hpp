#pragma once

#include <concepts>
#include <cstdint>
#include <utility>
#include <type_traits>

#include "tgss/numkernel.hpp"

namespace tgss {

/// A forward operator frozen at one point c: F(c), v -> F'(c)v and
/// w -> F'(c)^* w. Solvers evaluate all three at the same point, so an
/// operator can share factorizations between them.
template <class L>
concept Linearization = requires(const L& lin, const Vec& v) {
  { lin.value() } -> std::convertible_to<const Vec&>;
  { lin.derivative(v) } -> std::same_as<Vec>;
  { lin.adjoint(v) } -> std::same_as<Vec>;
};

/// Contract every solver is written against. The adjoint must be the
/// Euclidean adjoint of the derivative:
///   <derivative_apply(c,q), w> == <q, adjoint_apply(c,w)>.
template <class Op>
concept ForwardOperator = requires(const Op& op, const Vec& c) {
  { op.domain_dim() } -> std::convertible_to<Eigen::Index>;
  { op.range_dim() } -> std::convertible_to<Eigen::Index>;
  { op.linearize(c) } -> Linearization;
  { op.apply(c) } -> std::same_as<Vec>;
  { op.derivative_apply(c, c) } -> std::same_as<Vec>;
  { op.adjoint_apply(c, c) } -> std::same_as<Vec>;
  { op.cone_constant() } -> std::convertible_to<double>;
  { op.derivative_bound() } -> std::convertible_to<double>;
};

/// Tangential cone constant eta and derivative bound c_F. Both are supplied
/// by configuration; nothing estimates them.
struct OperatorMetadata {
  double eta = 0.0;
  double c_F = 1.0;
};

/// Mixin providing the three single-shot evaluations on top of linearize().
template <class Derived>
class OperatorBase {
public:
  [[nodiscard]] Vec apply(const Vec& c) const { return self().linearize(c).value(); }
  [[nodiscard]] Vec derivative_apply(const Vec& c, const Vec& q) const {
    return self().linearize(c).derivative(q);
  }
  [[nodiscard]] Vec adjoint_apply(const Vec& c, const Vec& w) const {
    return self().linearize(c).adjoint(w);
  }

private:
  const Derived& self() const { return static_cast<const Derived&>(*this); }
};

/// F(c) = d .* c, the linear test operator (eta = 0, c_F = max |d_i|).
class DiagonalOperator : public OperatorBase<DiagonalOperator> {
public:
  class Lin {
  public:
    Lin(const Vec& d, const Vec& c) : d_(&d), value_(d.cwiseProduct(c)) {}
    [[nodiscard]] const Vec& value() const { return value_; }
    [[nodiscard]] Vec derivative(const Vec& q) const {
      require_same_size(*d_, q, "DiagonalOperator::derivative");
      return d_->cwiseProduct(q);
    }
    [[nodiscard]] Vec adjoint(const Vec& w) const {
      require_same_size(*d_, w, "DiagonalOperator::adjoint");
      return d_->cwiseProduct(w);
    }

  private:
    const Vec* d_;
    Vec value_;
  };

  explicit DiagonalOperator(Vec d) : d_(std::move(d)) {
    if (d_.size() == 0) throw InvalidOperatorError("diagonal operator: empty diagonal");
    require_finite(d_, "diagonal operator");
    if ((d_.array() == 0.0).any()) throw InvalidOperatorError("diagonal operator: zero diagonal entry");
    meta_.eta = 0.0;
    meta_.c_F = d_.cwiseAbs().maxCoeff();
  }

  [[nodiscard]] Eigen::Index domain_dim() const { return d_.size(); }
  [[nodiscard]] Eigen::Index range_dim() const { return d_.size(); }
  [[nodiscard]] double cone_constant() const { return meta_.eta; }
  [[nodiscard]] double derivative_bound() const { return meta_.c_F; }
  [[nodiscard]] const Vec& diagonal() const { return d_; }

  [[nodiscard]] Lin linearize(const Vec& c) const {
    require_same_size(d_, c, "DiagonalOperator::linearize");
    return Lin(d_, c);
  }

private:
  Vec d_;
  OperatorMetadata meta_;
};

inline DiagonalOperator diagonal_operator(Vec d) { return DiagonalOperator(std::move(d)); }

/// G(x) = S_y F(S_x^{-1} x) for positive diagonal scalings S_x, S_y.
/// Running a solver on G with Euclidean inner products is running it on F
/// with the weighted inner products <a,b> = sum s_i^2 a_i b_i.
template <ForwardOperator Op>
class ScaledOperator : public OperatorBase<ScaledOperator<Op>> {
public:
  using InnerLin = std::decay_t<decltype(std::declval<const Op&>().linearize(std::declval<const Vec&>()))>;

  class Lin {
  public:
    Lin(InnerLin inner, const Vec& sx, const Vec& sy)
        : inner_(std::move(inner)), sx_(&sx), sy_(&sy), value_(sy.cwiseProduct(inner_.value())) {}
    [[nodiscard]] const Vec& value() const { return value_; }
    [[nodiscard]] Vec derivative(const Vec& q) const {
      require_same_size(*sx_, q, "ScaledOperator::derivative");
      return sy_->cwiseProduct(inner_.derivative(q.cwiseQuotient(*sx_)));
    }
    [[nodiscard]] Vec adjoint(const Vec& w) const {
      require_same_size(*sy_, w, "ScaledOperator::adjoint");
      return inner_.adjoint(sy_->cwiseProduct(w)).cwiseQuotient(*sx_);
    }

  private:
    InnerLin inner_;
    const Vec* sx_;
    const Vec* sy_;
    Vec value_;
  };

  ScaledOperator(Op op, Vec domain_scale, Vec range_scale)
      : op_(std::move(op)), sx_(std::move(domain_scale)), sy_(std::move(range_scale)) {
    if (sx_.size() != op_.domain_dim() || sy_.size() != op_.range_dim()) {
      throw DimensionError("ScaledOperator: scale lengths do not match the operator");
    }
    if (!(sx_.array() > 0.0).all() || !(sy_.array() > 0.0).all() || !sx_.allFinite() || !sy_.allFinite()) {
      throw InvalidOperatorError("ScaledOperator: scales must be positive and finite");
    }
  }

  [[nodiscard]] Eigen::Index domain_dim() const { return op_.domain_dim(); }
  [[nodiscard]] Eigen::Index range_dim() const { return op_.range_dim(); }
  [[nodiscard]] double cone_constant() const { return op_.cone_constant(); }
  [[nodiscard]] double derivative_bound() const { return op_.derivative_bound(); }
  [[nodiscard]] const Op& base() const { return op_; }
  [[nodiscard]] const Vec& domain_scale() const { return sx_; }
  [[nodiscard]] const Vec& range_scale() const { return sy_; }

  [[nodiscard]] Vec to_scaled(const Vec& x) const { return sx_.cwiseProduct(x); }
  [[nodiscard]] Vec from_scaled(const Vec& x) const { return x.cwiseQuotient(sx_); }

  [[nodiscard]] Lin linearize(const Vec& x) const {
    require_same_size(sx_, x, "ScaledOperator::linearize");
    return Lin(op_.linearize(x.cwiseQuotient(sx_)), sx_, sy_);
  }

private:
  Op op_;
  Vec sx_;
  Vec sy_;
};

/// Noisy observation y_delta = y + delta * n with n standard normal.
struct NoisyData {
  Vec y_delta;
  /// Nominal noise level (the factor in front of n).
  double delta = 0.0;
  std::uint64_t seed = 0;
  /// Actual data error delta * |n|, i.e. |y_delta - y| up to round-off.
  double delta_effective = 0.0;
};

enum class DeltaMode { effective, nominal };

/// Noise bound handed to the discrepancy principle.
inline double delta_used(const NoisyData& data, DeltaMode mode) {
  return mode == DeltaMode::effective ? data.delta_effective : data.delta;
}

/// Exact data wrapped as NoisyData with zero noise.
inline NoisyData exact_data(Vec y) {
  NoisyData d;
  d.y_delta = std::move(y);
  return d;
}

inline NoisyData add_noise(const Vec& y, double delta, std::uint64_t seed) {
  if (!(delta >= 0.0)) throw ConfigError("add_noise: delta must be >= 0");
  NoisyData d;
  d.delta = delta;
  d.seed = seed;
  if (delta == 0.0) {
    d.y_delta = y;
    return d;
  }
  const Vec n = gaussian_vector(y.size(), seed);
  d.y_delta = y + delta * n;
  d.delta_effective = delta * norm(n);
  return d;
}

/// F(c) - y_delta and its norm.
template <ForwardOperator Op>
std::pair<Vec, double> residual(const Op& op, const Vec& c, const NoisyData& data) {
  Vec r = op.apply(c);
  require_same_size(r, data.y_delta, "residual");
  r -= data.y_delta;
  const double rn = norm(r);
  return {std::move(r), rn};
}

} // namespace tgss

namespace tgss {

/// Observation in the range coordinates of a ScaledOperator: y_delta and
/// the effective noise are multiplied by `range_scale`; the nominal level
/// and seed are kept.
inline NoisyData scale_data(const NoisyData& data, const Vec& y_exact, const Vec& range_scale) {
  require_same_size(data.y_delta, y_exact, "scale_data");
  require_same_size(data.y_delta, range_scale, "scale_data");
  NoisyData out = data;
  out.y_delta = range_scale.cwiseProduct(data.y_delta);
  out.delta_effective = norm(range_scale.cwiseProduct(data.y_delta - y_exact));
  return out;
}

} // namespace tgss
