#pragma once

// Small numerical kernel shared by every other module: Euclidean inner
// products, dense Gram solves, sparse SPD solves for the FEM systems and a
// reproducible Gaussian generator.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/IterativeLinearSolvers>

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <variant>

#include "tgss/error.hpp"

namespace tgss {

using Vec = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

/// Largest Gram system accepted by solve_spd_dense.
inline constexpr std::size_t kSmallSystemCap = 16;

inline void require_same_size(const Vec& x, const Vec& y, const char* what) {
  if (x.size() != y.size()) {
    throw DimensionError(std::string(what) + ": length mismatch (" + std::to_string(x.size()) +
                         " vs " + std::to_string(y.size()) + ")");
  }
}

inline void require_finite(const Vec& x, const char* what) {
  if (!x.allFinite()) {
    throw Error(std::string(what) + ": non-finite entry");
  }
}

inline double dot(const Vec& x, const Vec& y) {
  require_same_size(x, y, "dot");
  return x.dot(y);
}

inline double norm(const Vec& x) { return std::sqrt(x.squaredNorm()); }

/// Solves G t = b for a small symmetric positive definite G by an unpivoted
/// Cholesky factorization.
///
/// A pivot that is not positive, or that falls below `rel_pivot_tol` times
/// the largest diagonal entry, means the generating vectors are (numerically)
/// linearly dependent and DependentDirectionsError is thrown.
inline Vec solve_spd_dense(const DenseMatrix& G, const Vec& b, double rel_pivot_tol = 1e-12) {
  const auto n = G.rows();
  if (G.cols() != n || b.size() != n) {
    throw DimensionError("solve_spd_dense: G is " + std::to_string(G.rows()) + "x" +
                         std::to_string(G.cols()) + ", b has " + std::to_string(b.size()));
  }
  if (n == 0 || static_cast<std::size_t>(n) > kSmallSystemCap) {
    throw DimensionError("solve_spd_dense: dimension " + std::to_string(n) +
                         " outside [1, " + std::to_string(kSmallSystemCap) + "]");
  }
  const double scale = G.cwiseAbs().maxCoeff();
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw DependentDirectionsError("solve_spd_dense: zero or non-finite Gram matrix");
  }
  if ((G - G.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw Error("solve_spd_dense: matrix is not symmetric");
  }

  const double max_diag = G.diagonal().maxCoeff();
  DenseMatrix L = DenseMatrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double pivot = G(j, j);
    for (Eigen::Index k = 0; k < j; ++k) pivot -= L(j, k) * L(j, k);
    if (!(pivot > rel_pivot_tol * max_diag)) {
      throw DependentDirectionsError("solve_spd_dense: non-positive pivot at column " +
                                     std::to_string(j));
    }
    L(j, j) = std::sqrt(pivot);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double s = G(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
      L(i, j) = s / L(j, j);
    }
  }

  Vec t(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = b(i);
    for (Eigen::Index k = 0; k < i; ++k) s -= L(i, k) * t(k);
    t(i) = s / L(i, i);
  }
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    double s = t(i);
    for (Eigen::Index k = i + 1; k < n; ++k) s -= L(k, i) * t(k);
    t(i) = s / L(i, i);
  }
  return t;
}

struct SparseSolveOptions {
  /// Systems up to this many unknowns are factorized directly (a 128x128
  /// element grid has 129^2 nodes); larger ones use conjugate gradients.
  Eigen::Index direct_limit = 129 * 129;
  double cg_tolerance = 1e-12;
  Eigen::Index cg_max_iterations = 20000;
};

/// Factorization of one sparse SPD matrix, reusable for many right-hand
/// sides. solve() is const and may be called concurrently.
class SparseSpdFactorization {
public:
  explicit SparseSpdFactorization(const SparseMatrix& A, const SparseSolveOptions& opts = {})
      : n_(A.rows()) {
    if (A.rows() != A.cols() || A.rows() == 0) {
      throw DimensionError("SparseSpdFactorization: matrix must be square and non-empty");
    }
    if (n_ <= opts.direct_limit) {
      auto& ldlt = solver_.emplace<Direct>();
      ldlt.compute(A);
      if (ldlt.info() != Eigen::Success) {
        throw AdmissibilityError("sparse factorization failed");
      }
      const Vec d = ldlt.vectorD();
      if (!(d.minCoeff() > 0.0) || !d.allFinite()) {
        throw AdmissibilityError("sparse matrix is not positive definite");
      }
    } else {
      auto& cg = solver_.emplace<Iterative>();
      cg.setTolerance(opts.cg_tolerance);
      cg.setMaxIterations(opts.cg_max_iterations);
      cg.compute(A);
      if (cg.info() != Eigen::Success) {
        throw AdmissibilityError("conjugate gradient setup failed");
      }
    }
  }

  [[nodiscard]] Eigen::Index size() const { return n_; }

  [[nodiscard]] Vec solve(const Vec& f) const {
    if (f.size() != n_) {
      throw DimensionError("SparseSpdFactorization::solve: length mismatch");
    }
    Vec u;
    if (const auto* direct = std::get_if<Direct>(&solver_)) {
      u = direct->solve(f);
    } else {
      const auto& cg = std::get<Iterative>(solver_);
      u = cg.solve(f);
      if (cg.info() != Eigen::Success) {
        throw AdmissibilityError("conjugate gradient did not converge (indefinite system?)");
      }
    }
    if (!u.allFinite()) throw AdmissibilityError("sparse solve produced non-finite values");
    return u;
  }

private:
  using Direct = Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>;
  using Iterative =
      Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::IncompleteCholesky<double>>;

  Eigen::Index n_;
  std::variant<std::monostate, Direct, Iterative> solver_;
};

inline Vec solve_sparse_spd(const SparseMatrix& A, const Vec& f, const SparseSolveOptions& opts = {}) {
  return SparseSpdFactorization(A, opts).solve(f);
}

/// xoshiro256** 1.0 (Blackman & Vigna) seeded through SplitMix64, with a
/// Box-Muller transform for standard normal draws. The bit stream is fully
/// determined by the seed.
class Xoshiro256 {
public:
  explicit Xoshiro256(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64(sm);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform on [0, 1) with 53 random bits.
  double next_uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double next_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - next_uniform(); // (0, 1]
    const double u2 = next_uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  static std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::array<std::uint64_t, 4> s_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline Vec gaussian_vector(Eigen::Index n, std::uint64_t seed) {
  if (n < 1) throw DimensionError("gaussian_vector: n must be >= 1");
  Xoshiro256 rng(seed);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.next_normal();
  return v;
}

} // namespace tgss
