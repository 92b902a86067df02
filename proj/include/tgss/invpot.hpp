#pragma once

// Piecewise linear finite elements for
//     -Laplace(u) + c u = f  in (-1,1)^d,   du/dn = 0 on the boundary,
// exposed as the forward operator c -> u on nodal coefficient vectors.

#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <memory>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "tgss/operator.hpp"

namespace tgss::invpot {

using Point = Eigen::Vector2d;
using PointFunction = std::function<double(const Point&)>;

/// Uniform mesh of (-1,1) (N elements) or (-1,1)^2 (N x N cells, each cut
/// into two triangles along the diagonal from its lower-left corner).
/// Nodes are numbered lexicographically with the first coordinate fastest.
class Mesh {
public:
  Mesh(int dim, int n) : dim_(dim), n_(n) {
    if (dim != 1 && dim != 2) throw ConfigError("make_mesh: dimension must be 1 or 2");
    if (n < 2) throw ConfigError("make_mesh: N must be >= 2");
    const int side = n + 1;
    const double h = spacing();
    if (dim == 1) {
      points_.resize(side);
      for (int j = 0; j < side; ++j) points_[j] = Point(-1.0 + h * j, 0.0);
      for (int j = 0; j < n; ++j) elements_.push_back({j, j + 1, -1});
    } else {
      points_.resize(static_cast<std::size_t>(side) * side);
      for (int j = 0; j < side; ++j)
        for (int i = 0; i < side; ++i) points_[index(i, j)] = Point(-1.0 + h * i, -1.0 + h * j);
      for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
          const int a = index(i, j), b = index(i + 1, j), c = index(i + 1, j + 1), d = index(i, j + 1);
          elements_.push_back({a, b, c});
          elements_.push_back({a, c, d});
        }
      }
    }
  }

  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] int cells_per_side() const { return n_; }
  /// Grid spacing 2/N.
  [[nodiscard]] double spacing() const { return 2.0 / n_; }
  [[nodiscard]] Eigen::Index node_count() const { return static_cast<Eigen::Index>(points_.size()); }
  [[nodiscard]] const std::vector<Point>& points() const { return points_; }
  /// Interval elements use the first two entries; the third is -1.
  [[nodiscard]] const std::vector<std::array<int, 3>>& elements() const { return elements_; }
  [[nodiscard]] int nodes_per_element() const { return dim_ + 1; }
  /// Length (1-D) or area (2-D) of every element.
  [[nodiscard]] double element_measure() const {
    const double h = spacing();
    return dim_ == 1 ? h : 0.5 * h * h;
  }

private:
  int index(int i, int j) const { return j * (n_ + 1) + i; }

  int dim_;
  int n_;
  std::vector<Point> points_;
  std::vector<std::array<int, 3>> elements_;
};

inline Mesh make_mesh(int dim, int n) { return Mesh(dim, n); }

inline Vec interpolate(const Mesh& mesh, const PointFunction& f) {
  Vec v(mesh.node_count());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = f(mesh.points()[static_cast<std::size_t>(i)]);
  return v;
}

/// 1 - cos(pi x) in 1-D; 1 + cos(pi x1) cos(pi x2) on |x|_inf < 1/2 (else 1) in 2-D.
inline double true_coefficient_at(int dim, const Point& p) {
  using std::numbers::pi;
  if (dim == 1) return 1.0 - std::cos(pi * p.x());
  const bool inside = std::max(std::abs(p.x()), std::abs(p.y())) < 0.5;
  return 1.0 + (inside ? std::cos(pi * p.x()) * std::cos(pi * p.y()) : 0.0);
}

inline Vec true_coefficient(const Mesh& mesh) {
  return interpolate(mesh, [&](const Point& p) { return true_coefficient_at(mesh.dim(), p); });
}

struct AssembledSystem {
  SparseMatrix K;
  SparseMatrix M;
  SparseMatrix A;
  Vec load;
};

/// Reference element tensors. `mass3[a][b][c]` integrates phi_a phi_b phi_c
/// over one element: exactly for intervals, with the edge-midpoint rule for
/// triangles. Being symmetric in all three indices, it gives
/// M(c) u == M(u) c for the coefficient-weighted mass matrix.
class ElementTables {
public:
  explicit ElementTables(const Mesh& mesh) : k_(mesh.nodes_per_element()) {
    const double meas = mesh.element_measure();
    const double h = mesh.spacing();
    if (mesh.dim() == 1) {
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          stiff_[0][a][b] = (a == b ? 1.0 : -1.0) / h;
          for (int c = 0; c < 2; ++c) {
            const int ones = (a == 1) + (b == 1) + (c == 1);
            // int_0^1 (1-s)^p s^q ds * h = p! q! / (p+q+1)! * h with p+q = 3
            const double fact[] = {1.0, 1.0, 2.0, 6.0};
            mass3_[a][b][c] = meas * fact[3 - ones] * fact[ones] / 24.0;
          }
        }
    } else {
      // Two triangle orientations alternate (lower-right, upper-left);
      // their local stiffness differs by where the right angle sits.
      const auto& pts = mesh.points();
      for (int kind = 0; kind < 2; ++kind) {
        const auto& tri = mesh.elements()[static_cast<std::size_t>(kind)];
        tri_gradients(kind, pts[tri[0]], pts[tri[1]], pts[tri[2]], meas);
      }
      const double mid[3][3] = {{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}};
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          for (int c = 0; c < 3; ++c) {
            double s = 0.0;
            for (const auto& m : mid) s += m[a] * m[b] * m[c];
            mass3_[a][b][c] = meas / 3.0 * s;
          }
    }
  }

  [[nodiscard]] int nodes() const { return k_; }
  /// Local stiffness of element number `e` (orientation alternates in 2-D).
  [[nodiscard]] double stiffness(std::size_t e, int a, int b) const { return stiff_[k_ == 3 ? e % 2 : 0][a][b]; }
  [[nodiscard]] double mass3(int a, int b, int c) const { return mass3_[a][b][c]; }

private:
  void tri_gradients(int kind, const Point& p0, const Point& p1, const Point& p2, double area) {
    const Point pts[3] = {p0, p1, p2};
    Point grad[3];
    for (int a = 0; a < 3; ++a) {
      const Point& pb = pts[(a + 1) % 3];
      const Point& pc = pts[(a + 2) % 3];
      // gradient of the barycentric coordinate of vertex a
      grad[a] = Point(pb.y() - pc.y(), pc.x() - pb.x()) / (2.0 * area);
      const Point& pa = pts[a];
      if ((pa - pb).dot(grad[a]) < 0.0) grad[a] = -grad[a];
    }
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) stiff_[kind][a][b] = area * grad[a].dot(grad[b]);
  }

  int k_;
  double stiff_[2][3][3] = {};
  double mass3_[3][3][3] = {};
};

/// y = M(weight) v, the mass matrix with piecewise linear coefficient
/// `weight` applied to v without forming the matrix.
inline Vec weighted_mass_apply(const Mesh& mesh, const ElementTables& tab, const Vec& weight, const Vec& v) {
  require_same_size(weight, v, "weighted_mass_apply");
  if (weight.size() != mesh.node_count()) throw DimensionError("weighted_mass_apply: wrong length");
  const int k = tab.nodes();
  Vec y = Vec::Zero(v.size());
  for (const auto& e : mesh.elements()) {
    for (int a = 0; a < k; ++a) {
      double s = 0.0;
      for (int b = 0; b < k; ++b)
        for (int c = 0; c < k; ++c) s += tab.mass3(a, b, c) * weight(e[b]) * v(e[c]);
      y(e[a]) += s;
    }
  }
  return y;
}

/// Coefficients below this are rejected by the nodal-floor guard.
inline constexpr double kAdmissibilityFloor = -1e-8;

/// nodal_floor rejects any c with a nodal value below kAdmissibilityFloor.
/// positive_definite accepts any finite c for which A(c) factorizes as a
/// positive definite matrix; slightly negative iterates near zeros of the
/// coefficient pass.
enum class AdmissibilityGuard { nodal_floor, positive_definite };

namespace detail {

inline void check_admissible(const Vec& c, Eigen::Index n, AdmissibilityGuard guard) {
  if (c.size() != n) {
    throw DimensionError("coefficient has " + std::to_string(c.size()) + " entries, mesh has " +
                         std::to_string(n) + " nodes");
  }
  if (!c.allFinite()) throw AdmissibilityError("coefficient field has non-finite entries");
  if (guard == AdmissibilityGuard::nodal_floor && c.minCoeff() < kAdmissibilityFloor) {
    throw AdmissibilityError("coefficient field is not admissible (min nodal value " +
                             std::to_string(c.minCoeff()) + ")");
  }
}

/// Sparse matrix with the mesh sparsity pattern plus, for every element and
/// local pair (a,b), the position of entry (e[a], e[b]) in valuePtr().
struct Pattern {
  SparseMatrix shape;
  std::vector<int> slot; // element-major, k*k entries per element
};

inline Pattern build_pattern(const Mesh& mesh) {
  const int k = mesh.nodes_per_element();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(mesh.elements().size() * k * k);
  for (const auto& e : mesh.elements())
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b) trip.emplace_back(e[a], e[b], 0.0);
  Pattern p;
  p.shape.resize(mesh.node_count(), mesh.node_count());
  p.shape.setFromTriplets(trip.begin(), trip.end());
  p.shape.makeCompressed();
  p.slot.reserve(trip.size());
  const double* base = p.shape.valuePtr();
  for (const auto& e : mesh.elements())
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b) p.slot.push_back(static_cast<int>(&p.shape.coeffRef(e[a], e[b]) - base));
  return p;
}

} // namespace detail

/// Precomputed stiffness matrix, mass tensor and load for one mesh and one
/// right-hand side f. Immutable after construction.
class Discretization {
public:
  Discretization(Mesh mesh, const Vec& f_nodal)
      : mesh_(std::move(mesh)), tab_(mesh_), pattern_(detail::build_pattern(mesh_)) {
    if (f_nodal.size() != mesh_.node_count()) throw DimensionError("load has wrong length");
    K_ = pattern_.shape;
    double* kv = K_.valuePtr();
    const int k = tab_.nodes();
    std::size_t s = 0;
    for (std::size_t e = 0; e < mesh_.elements().size(); ++e)
      for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) kv[pattern_.slot[s++]] += tab_.stiffness(e, a, b);
    load_ = weighted_mass_apply(mesh_, tab_, Vec::Ones(mesh_.node_count()), f_nodal);
  }

  Discretization(Mesh mesh, const PointFunction& f) : Discretization(mesh, interpolate(mesh, f)) {}

  [[nodiscard]] const Mesh& mesh() const { return mesh_; }
  [[nodiscard]] const ElementTables& tables() const { return tab_; }
  [[nodiscard]] const SparseMatrix& stiffness() const { return K_; }
  [[nodiscard]] const Vec& load() const { return load_; }

  [[nodiscard]] SparseMatrix mass(const Vec& c) const {
    SparseMatrix M = pattern_.shape;
    add_mass(M, c);
    return M;
  }

  /// A(c) = K + M(c); rejects inadmissible c.
  [[nodiscard]] SparseMatrix system_matrix(const Vec& c,
                                           AdmissibilityGuard guard = AdmissibilityGuard::nodal_floor) const {
    detail::check_admissible(c, mesh_.node_count(), guard);
    SparseMatrix A = K_;
    add_mass(A, c);
    return A;
  }

  [[nodiscard]] Vec mass_apply(const Vec& weight, const Vec& v) const {
    return weighted_mass_apply(mesh_, tab_, weight, v);
  }

private:
  void add_mass(SparseMatrix& target, const Vec& c) const {
    if (c.size() != mesh_.node_count()) throw DimensionError("mass: coefficient has wrong length");
    double* val = target.valuePtr();
    const int k = tab_.nodes();
    std::size_t s = 0;
    for (const auto& e : mesh_.elements())
      for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) {
          double m = 0.0;
          for (int l = 0; l < k; ++l) m += tab_.mass3(l, a, b) * c(e[l]);
          val[pattern_.slot[s++]] += m;
        }
  }

  Mesh mesh_;
  ElementTables tab_;
  detail::Pattern pattern_;
  SparseMatrix K_;
  Vec load_;
};

inline AssembledSystem assemble(const Mesh& mesh, const Vec& c, const PointFunction& f) {
  Discretization disc(mesh, f);
  AssembledSystem sys;
  sys.A = disc.system_matrix(c);
  sys.K = disc.stiffness();
  sys.M = disc.mass(c);
  sys.load = disc.load();
  return sys;
}

/// F(c) = u with A(c) u = load. Derivative and adjoint are the exact
/// Euclidean derivative / transpose of the discrete map:
///   F'(c) q   = -A(c)^{-1} M(u) q
///   F'(c)^* w = -M(u) A(c)^{-1} w
class PotentialOperator : public OperatorBase<PotentialOperator> {
public:
  class Lin {
  public:
    Lin(const Discretization& disc, const SparseMatrix& A, const SparseSolveOptions& opts)
        : disc_(&disc), fact_(std::make_unique<SparseSpdFactorization>(A, opts)),
          u_(fact_->solve(disc.load())) {}

    [[nodiscard]] const Vec& value() const { return u_; }
    [[nodiscard]] Vec derivative(const Vec& q) const {
      return -fact_->solve(disc_->mass_apply(u_, q));
    }
    [[nodiscard]] Vec adjoint(const Vec& w) const {
      return -disc_->mass_apply(u_, fact_->solve(w));
    }
    /// A(c)^{-1} f with the factorization held by this linearization.
    [[nodiscard]] Vec solve(const Vec& f) const { return fact_->solve(f); }

  private:
    const Discretization* disc_;
    std::unique_ptr<SparseSpdFactorization> fact_;
    Vec u_;
  };

  PotentialOperator(Mesh mesh, const PointFunction& f, OperatorMetadata meta = {0.1, 0.1},
                    SparseSolveOptions opts = {},
                    AdmissibilityGuard guard = AdmissibilityGuard::positive_definite)
      : disc_(std::make_shared<const Discretization>(std::move(mesh), f)), meta_(meta), opts_(opts),
        guard_(guard) {}

  [[nodiscard]] Eigen::Index domain_dim() const { return disc_->mesh().node_count(); }
  [[nodiscard]] Eigen::Index range_dim() const { return disc_->mesh().node_count(); }
  [[nodiscard]] double cone_constant() const { return meta_.eta; }
  [[nodiscard]] double derivative_bound() const { return meta_.c_F; }
  [[nodiscard]] const Mesh& mesh() const { return disc_->mesh(); }
  [[nodiscard]] const Discretization& discretization() const { return *disc_; }

  [[nodiscard]] AdmissibilityGuard guard() const { return guard_; }

  [[nodiscard]] Lin linearize(const Vec& c) const {
    return Lin(*disc_, disc_->system_matrix(c, guard_), opts_);
  }

private:
  std::shared_ptr<const Discretization> disc_;
  OperatorMetadata meta_;
  SparseSolveOptions opts_;
  AdmissibilityGuard guard_;
};

inline double constant_one(const Point&) { return 1.0; }

inline Vec forward(const Mesh& mesh, const Vec& c, const PointFunction& f) {
  return PotentialOperator(mesh, f).apply(c);
}

inline Vec derivative_apply(const Mesh& mesh, const Vec& c, const Vec& q, const PointFunction& f) {
  return PotentialOperator(mesh, f).derivative_apply(c, q);
}

inline Vec adjoint_apply(const Mesh& mesh, const Vec& c, const Vec& w, const PointFunction& f) {
  return PotentialOperator(mesh, f).adjoint_apply(c, w);
}

/// Node coordinates and values, one node per row: "x,value" or "x,y,value".
inline void write_field_csv(std::ostream& os, const Mesh& mesh, const Vec& values) {
  if (values.size() != mesh.node_count()) throw DimensionError("write_field_csv: wrong length");
  os << (mesh.dim() == 1 ? "x,value\n" : "x,y,value\n");
  os.precision(17);
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const auto& p = mesh.points()[static_cast<std::size_t>(i)];
    os << p.x() << ',';
    if (mesh.dim() == 2) os << p.y() << ',';
    os << values(i) << '\n';
  }
}

inline void write_field_csv(const std::string& path, const Mesh& mesh, const Vec& values) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  write_field_csv(os, mesh, values);
  if (!os) throw IoError("write to '" + path + "' failed");
}

} // namespace tgss::invpot

namespace tgss::invpot {

/// Row sums of the consistent mass matrix M(1); the square roots turn the
/// Euclidean nodal structure into the lumped L2 one (see ScaledOperator).
inline Vec lumped_mass(const Discretization& disc) {
  const Vec one = Vec::Ones(disc.mesh().node_count());
  return disc.mass_apply(one, one);
}

inline ScaledOperator<PotentialOperator> lumped_l2(PotentialOperator op) {
  const Vec s = lumped_mass(op.discretization()).cwiseSqrt();
  return ScaledOperator<PotentialOperator>(std::move(op), s, s);
}

} // namespace tgss::invpot
