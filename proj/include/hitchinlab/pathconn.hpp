#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <vector>

#include "hitchinlab/hermitian.hpp"

namespace hitchinlab {

// Diagonal + off-diagonal data of a path ODE system on [0,1], sampled on a
// uniform grid of `nodes` points.  The diagonal of the full connection is
// alpha_j(s) = t*a_j(s) + b_j(s) with Re a_1 < ... < Re a_r at every node;
// B(s) is the off-diagonal perturbation (zero diagonal).
struct PathConnectionData {
  int rank = 0;
  int nodes = 0;
  double t = 0.0;
  std::vector<Vec> a;  // per node, size rank
  std::vector<Vec> b;  // per node, size rank
  std::vector<Mat> B;  // per node, rank x rank, zero diagonal

  double step() const { return 1.0 / (nodes - 1); }
  double s_at(int k) const { return static_cast<double>(k) * step(); }

  Vec alpha(int k) const { return t * a[k] + b[k]; }

  void validate() const {
    if (rank < 1) throw std::invalid_argument("path data: rank must be positive");
    if (nodes < 7) throw std::invalid_argument("path data: need at least 7 grid nodes");
    if (static_cast<int>(a.size()) != nodes || static_cast<int>(b.size()) != nodes ||
        static_cast<int>(B.size()) != nodes)
      throw std::invalid_argument("path data: sample arrays must have one entry per node");
    if (!(t >= 0) || !std::isfinite(t)) throw std::invalid_argument("path data: t must be finite and >= 0");
    for (int k = 0; k < nodes; ++k) {
      if (a[k].size() != rank || b[k].size() != rank)
        throw std::invalid_argument("path data: diagonal sample has wrong size");
      if (B[k].rows() != rank || B[k].cols() != rank)
        throw std::invalid_argument("path data: off-diagonal sample has wrong shape");
      if (!a[k].allFinite() || !b[k].allFinite() || !B[k].allFinite())
        throw std::invalid_argument("path data: non-finite sample");
      for (int j = 0; j + 1 < rank; ++j)
        if (!(a[k](j).real() < a[k](j + 1).real()))
          throw std::invalid_argument("path data: Re a_j must be strictly increasing at every node");
      for (int j = 0; j < rank; ++j)
        if (B[k](j, j) != cplx(0, 0))
          throw std::invalid_argument("path data: B must have zero diagonal");
    }
  }
};

// Per-node off-diagonal (zero-diagonal matrix) and diagonal (vector) families.
using OffDiagFun = std::vector<Mat>;
using DiagFun = std::vector<Vec>;

inline PathConnectionData sample_path(int rank, int nodes, double t,
                                      const std::function<cplx(int, double)>& a_fun,
                                      const std::function<cplx(int, double)>& b_fun,
                                      const std::function<Mat(double)>& B_fun) {
  PathConnectionData conn;
  conn.rank = rank;
  conn.nodes = nodes;
  conn.t = t;
  conn.a.resize(nodes);
  conn.b.resize(nodes);
  conn.B.resize(nodes);
  for (int k = 0; k < nodes; ++k) {
    const double s = static_cast<double>(k) / (nodes - 1);
    conn.a[k] = Vec(rank);
    conn.b[k] = Vec(rank);
    for (int j = 0; j < rank; ++j) {
      conn.a[k](j) = a_fun(j, s);
      conn.b[k](j) = b_fun(j, s);
    }
    conn.B[k] = B_fun(s);
  }
  conn.validate();
  return conn;
}

struct NonCriticalReport {
  bool noncritical = false;
  double gap = 0.0;     // min over nodes of adjacent Re a spacing
  int worst_node = -1;  // node achieving the gap
};

inline NonCriticalReport check_noncritical(const PathConnectionData& conn) {
  conn.validate();
  NonCriticalReport rep;
  rep.gap = std::numeric_limits<double>::infinity();
  if (conn.rank == 1) {
    rep.noncritical = true;
    rep.worst_node = 0;
    return rep;
  }
  for (int k = 0; k < conn.nodes; ++k)
    for (int j = 0; j + 1 < conn.rank; ++j) {
      const double g = conn.a[k](j + 1).real() - conn.a[k](j).real();
      if (g < rep.gap) {
        rep.gap = g;
        rep.worst_node = k;
      }
    }
  rep.noncritical = rep.gap > 0;
  return rep;
}

inline double sup_norm(const OffDiagFun& x) {
  double m = 0;
  for (const Mat& v : x) m = std::max(m, v.cwiseAbs().maxCoeff());
  return m;
}

inline double sup_norm(const DiagFun& x) {
  double m = 0;
  for (const Vec& v : x) m = std::max(m, v.cwiseAbs().maxCoeff());
  return m;
}

namespace detail {

// Weights of the declared first-derivative policy on a uniform grid: 5-point
// 4th-order one-sided stencils at the two nodes next to each end, central
// elsewhere.  Returns (offsets, weights/h).
inline void derivative_stencil(int k, int last, double h, int offs[5], double w[5]) {
  const double inv = 1.0 / (12.0 * h);
  if (k == 0) {
    const int o[5] = {0, 1, 2, 3, 4};
    const double c[5] = {-25, 48, -36, 16, -3};
    for (int i = 0; i < 5; ++i) {
      offs[i] = o[i];
      w[i] = c[i] * inv;
    }
  } else if (k == 1) {
    const int o[5] = {-1, 0, 1, 2, 3};
    const double c[5] = {-3, -10, 18, -6, 1};
    for (int i = 0; i < 5; ++i) {
      offs[i] = o[i];
      w[i] = c[i] * inv;
    }
  } else if (k == last - 1) {
    const int o[5] = {-3, -2, -1, 0, 1};
    const double c[5] = {-1, 6, -18, 10, 3};
    for (int i = 0; i < 5; ++i) {
      offs[i] = o[i];
      w[i] = c[i] * inv;
    }
  } else if (k == last) {
    const int o[5] = {-4, -3, -2, -1, 0};
    const double c[5] = {3, -16, 36, -48, 25};
    for (int i = 0; i < 5; ++i) {
      offs[i] = o[i];
      w[i] = c[i] * inv;
    }
  } else {
    const int o[5] = {-2, -1, 0, 1, 2};
    const double c[5] = {1, -8, 0, 8, -1};
    for (int i = 0; i < 5; ++i) {
      offs[i] = o[i];
      w[i] = c[i] * inv;
    }
  }
}

}  // namespace detail

// Entrywise derivative of a sampled matrix family with the declared stencil.
inline OffDiagFun stencil_derivative(const OffDiagFun& x, double h) {
  const int n = static_cast<int>(x.size());
  if (n < 7) throw std::invalid_argument("stencil_derivative: need at least 7 nodes");
  OffDiagFun out(n);
  int offs[5];
  double w[5];
  for (int k = 0; k < n; ++k) {
    detail::derivative_stencil(k, n - 1, h, offs, w);
    Mat acc = Mat::Zero(x[0].rows(), x[0].cols());
    for (int i = 0; i < 5; ++i) acc += w[i] * x[k + offs[i]];
    out[k] = acc;
  }
  return out;
}

inline std::vector<cplx> stencil_derivative(const std::vector<cplx>& x, double h) {
  const int n = static_cast<int>(x.size());
  if (n < 7) throw std::invalid_argument("stencil_derivative: need at least 7 nodes");
  std::vector<cplx> out(n);
  int offs[5];
  double w[5];
  for (int k = 0; k < n; ++k) {
    detail::derivative_stencil(k, n - 1, h, offs, w);
    cplx acc = 0;
    for (int i = 0; i < 5; ++i) acc += w[i] * x[k + offs[i]];
    out[k] = acc;
  }
  return out;
}

// Model operator on off-diagonal functions:
//   (D0 X)_ij(s_k) = X'_ij(s_k) + (alpha_i(s_k) - alpha_j(s_k)) X_ij(s_k),
// with the derivative realized by the declared stencil at every node.
inline OffDiagFun apply_D0(const OffDiagFun& x, const PathConnectionData& conn) {
  if (static_cast<int>(x.size()) != conn.nodes)
    throw std::invalid_argument("apply_D0: sample count mismatch");
  OffDiagFun out = stencil_derivative(x, conn.step());
  for (int k = 0; k < conn.nodes; ++k) {
    const Vec al = conn.alpha(k);
    for (int i = 0; i < conn.rank; ++i)
      for (int j = 0; j < conn.rank; ++j) {
        if (i == j) {
          out[k](i, j) = 0;
          continue;
        }
        out[k](i, j) += (al(i) - al(j)) * x[k](i, j);
      }
  }
  return out;
}

// Solution operator inverting D0 entrywise subject to the decay boundary
// conditions X_ij(1) = 0 for i < j and X_ij(0) = 0 for i > j.  Each scalar
// entry is solved as a square sparse linear system built from the same
// stencil rows as apply_D0, with the stencil equation at the boundary node
// replaced by the boundary-condition row (the classical side-condition
// placement; it keeps the discrete system well conditioned across the whole
// t range).  The stencil equations at all other nodes hold exactly, so the
// round trip through apply_D0 is limited only by the truncation error of the
// one stencil row at the boundary node.  The factorizations depend only on
// the connection data, so one instance can be reused across many right-hand
// sides.
class I0Operator {
 public:
  explicit I0Operator(const PathConnectionData& conn) : rank_(conn.rank), nodes_(conn.nodes) {
    conn.validate();
    const int n = nodes_;
    const double h = conn.step();
    solvers_.resize(rank_ * rank_);
    int offs[5];
    double w[5];
    for (int i = 0; i < rank_; ++i)
      for (int j = 0; j < rank_; ++j) {
        if (i == j) continue;
        const int bc_node = i < j ? n - 1 : 0;  // node pinned to zero
        std::vector<Eigen::Triplet<cplx>> trip;
        trip.reserve(6 * n);
        for (int k = 0; k < n; ++k) {
          if (k == bc_node) {
            trip.emplace_back(k, bc_node, cplx(1, 0));
            continue;
          }
          detail::derivative_stencil(k, n - 1, h, offs, w);
          const Vec al = conn.alpha(k);
          const cplx diag = al(i) - al(j);
          for (int q = 0; q < 5; ++q) {
            cplx val = w[q];
            if (offs[q] == 0) val += diag;
            trip.emplace_back(k, k + offs[q], val);
          }
        }
        Eigen::SparseMatrix<cplx> m(n, n);
        m.setFromTriplets(trip.begin(), trip.end());
        m.makeCompressed();
        auto solver = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<cplx>>>();
        solver->compute(m);
        if (solver->info() != Eigen::Success)
          throw std::runtime_error("I0Operator: singular discrete system");
        solvers_[i * rank_ + j] = std::move(solver);
      }
  }

  OffDiagFun apply(const OffDiagFun& y) const {
    if (static_cast<int>(y.size()) != nodes_) throw std::invalid_argument("I0Operator: sample count mismatch");
    const int n = nodes_;
    OffDiagFun out(n, Mat::Zero(rank_, rank_));
    Eigen::VectorXcd rhs(n);
    for (int i = 0; i < rank_; ++i)
      for (int j = 0; j < rank_; ++j) {
        if (i == j) continue;
        const int bc_node = i < j ? n - 1 : 0;
        for (int k = 0; k < n; ++k) rhs(k) = k == bc_node ? cplx(0, 0) : y[k](i, j);
        Eigen::VectorXcd sol = solvers_[i * rank_ + j]->solve(rhs);
        for (int k = 0; k < n; ++k) out[k](i, j) = sol(k);
      }
    return out;
  }

 private:
  int rank_;
  int nodes_;
  std::vector<std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<cplx>>>> solvers_;
};

inline OffDiagFun apply_I0(const OffDiagFun& y, const PathConnectionData& conn) {
  return I0Operator(conn).apply(y);
}

// Composite Simpson integral of node samples on a uniform grid.  Handles odd
// interval counts by a 3/8 closing rule on the last three intervals.
inline cplx simpson_integral(const std::vector<cplx>& f, double h) {
  const int n = static_cast<int>(f.size()) - 1;  // intervals
  if (n < 3) throw std::invalid_argument("simpson_integral: need at least 4 samples");
  cplx acc = 0;
  int m = n % 2 == 0 ? n : n - 3;
  for (int k = 0; k + 2 <= m; k += 2) acc += (h / 3.0) * (f[k] + 4.0 * f[k + 1] + f[k + 2]);
  if (m != n) acc += (3.0 * h / 8.0) * (f[n - 3] + 3.0 * f[n - 2] + 3.0 * f[n - 1] + f[n]);
  return acc;
}

inline double simpson_integral_real(const std::vector<double>& f, double h) {
  std::vector<cplx> c(f.size());
  for (size_t k = 0; k < f.size(); ++k) c[k] = f[k];
  return simpson_integral(c, h).real();
}

}  // namespace hitchinlab
