#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

namespace adaprec {

/// Ambient-space element: a d-vector (stored d-by-1) or an m-by-n matrix.
using Point = Eigen::MatrixXd;

/// The four preconditioner subspaces. Each one is a linear space of
/// self-adjoint operators on the ambient space, closed under operator
/// functions and with an order-preserving orthogonal projection:
///   ScalarIdentity  g |-> c * g                 on R^d
///   Diagonal        g |-> v (.) g               on R^d
///   LeftMatrix      G |-> B * G, B symmetric    on R^{m x n}
///   RowDiagonal     G |-> diag(b) * G           on R^{m x n}
enum class SpaceKind { ScalarIdentity, Diagonal, LeftMatrix, RowDiagonal };

inline const char* to_string(SpaceKind k) {
  switch (k) {
    case SpaceKind::ScalarIdentity: return "scalar_identity";
    case SpaceKind::Diagonal: return "diagonal";
    case SpaceKind::LeftMatrix: return "left_matrix";
    case SpaceKind::RowDiagonal: return "row_diagonal";
  }
  return "unknown";
}

class SpaceDescriptor {
public:
  static SpaceDescriptor scalar_identity(Eigen::Index d) {
    return SpaceDescriptor(SpaceKind::ScalarIdentity, d, 1);
  }
  static SpaceDescriptor diagonal(Eigen::Index d) {
    return SpaceDescriptor(SpaceKind::Diagonal, d, 1);
  }
  static SpaceDescriptor left_matrix(Eigen::Index m, Eigen::Index n) {
    return SpaceDescriptor(SpaceKind::LeftMatrix, m, n);
  }
  static SpaceDescriptor row_diagonal(Eigen::Index m, Eigen::Index n) {
    return SpaceDescriptor(SpaceKind::RowDiagonal, m, n);
  }

  SpaceKind kind() const { return kind_; }
  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }
  Eigen::Index dim() const { return rows_ * cols_; }

  bool matrix_kind() const {
    return kind_ == SpaceKind::LeftMatrix || kind_ == SpaceKind::RowDiagonal;
  }
  bool diagonal_kind() const { return kind_ != SpaceKind::LeftMatrix; }

  bool matches(const Point& p) const {
    return p.rows() == rows_ && p.cols() == cols_;
  }
  void require_match(const Point& p, const char* where) const {
    if (!matches(p)) {
      throw std::invalid_argument(
          std::string(where) + ": point shape " + std::to_string(p.rows()) +
          "x" + std::to_string(p.cols()) + " does not match " +
          to_string(kind_) + " space of shape " + std::to_string(rows_) + "x" +
          std::to_string(cols_));
    }
  }

  friend bool operator==(const SpaceDescriptor& a, const SpaceDescriptor& b) {
    return a.kind_ == b.kind_ && a.rows_ == b.rows_ && a.cols_ == b.cols_;
  }
  friend bool operator!=(const SpaceDescriptor& a, const SpaceDescriptor& b) {
    return !(a == b);
  }

private:
  SpaceDescriptor(SpaceKind kind, Eigen::Index rows, Eigen::Index cols)
      : kind_(kind), rows_(rows), cols_(cols) {
    if (rows < 1 || cols < 1) {
      throw std::invalid_argument("SpaceDescriptor: dimensions must be >= 1");
    }
    if (!matrix_kind() && cols != 1) {
      throw std::invalid_argument(
          "SpaceDescriptor: vector kinds carry a single column");
    }
  }

  SpaceKind kind_;
  Eigen::Index rows_;
  Eigen::Index cols_;
};

/// Compact representation of one member of the preconditioner space.
/// Payload shape by kind: 1x1 scalar c, d-by-1 vector v, symmetric m-by-m
/// matrix B, or m-by-1 vector b. LeftMatrix payloads are required to be
/// exactly symmetric; build them with symmetrize() when they come out of
/// floating-point products.
class SpaceElement {
public:
  SpaceElement(SpaceDescriptor space, Eigen::MatrixXd payload)
      : space_(space), payload_(std::move(payload)) {
    validate();
  }

  static SpaceElement zero(const SpaceDescriptor& space) {
    return SpaceElement(space,
                        Eigen::MatrixXd::Zero(payload_rows(space), payload_cols(space)));
  }

  /// Compact element of the identity operator (c = 1, ones, I_m, ones).
  static SpaceElement identity(const SpaceDescriptor& space) {
    if (space.kind() == SpaceKind::LeftMatrix) {
      return SpaceElement(space, Eigen::MatrixXd::Identity(space.rows(), space.rows()));
    }
    return SpaceElement(space, Eigen::MatrixXd::Ones(payload_rows(space), 1));
  }

  const SpaceDescriptor& space() const { return space_; }
  const Eigen::MatrixXd& payload() const { return payload_; }

  double scalar() const {
    if (space_.kind() != SpaceKind::ScalarIdentity) {
      throw std::invalid_argument("SpaceElement::scalar: not a ScalarIdentity element");
    }
    return payload_(0, 0);
  }

  static Eigen::Index payload_rows(const SpaceDescriptor& space) {
    switch (space.kind()) {
      case SpaceKind::ScalarIdentity: return 1;
      case SpaceKind::Diagonal: return space.rows();
      case SpaceKind::LeftMatrix: return space.rows();
      case SpaceKind::RowDiagonal: return space.rows();
    }
    return 0;
  }
  static Eigen::Index payload_cols(const SpaceDescriptor& space) {
    return space.kind() == SpaceKind::LeftMatrix ? space.rows() : 1;
  }

private:
  void validate() const {
    if (payload_.rows() != payload_rows(space_) ||
        payload_.cols() != payload_cols(space_)) {
      throw std::invalid_argument(
          std::string("SpaceElement: payload shape ") +
          std::to_string(payload_.rows()) + "x" + std::to_string(payload_.cols()) +
          " invalid for " + to_string(space_.kind()));
    }
    if (space_.kind() == SpaceKind::LeftMatrix &&
        (payload_.array() != payload_.transpose().array()).any()) {
      throw std::invalid_argument(
          "SpaceElement: LeftMatrix payload must be exactly symmetric");
    }
  }

  SpaceDescriptor space_;
  Eigen::MatrixXd payload_;
};

/// Exactly symmetric average of M and its transpose.
inline Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) {
  return 0.5 * (m + m.transpose().eval());
}

inline void require_same_space(const SpaceElement& a, const SpaceElement& b,
                               const char* where) {
  if (a.space() != b.space()) {
    throw std::invalid_argument(std::string(where) + ": descriptor mismatch");
  }
}

/// Orthogonal (Frobenius) projection of the rank-one operator x |-> <x,g> g
/// onto the space, in compact form. The 1/n factors on the matrix kinds come
/// from averaging the n identical column blocks of the dense operator.
inline SpaceElement project_rank_one(const SpaceDescriptor& space, const Point& g) {
  space.require_match(g, "project_rank_one");
  switch (space.kind()) {
    case SpaceKind::ScalarIdentity: {
      Eigen::MatrixXd c(1, 1);
      c(0, 0) = g.squaredNorm() / static_cast<double>(space.dim());
      return SpaceElement(space, c);
    }
    case SpaceKind::Diagonal:
      return SpaceElement(space, g.array().square().matrix());
    case SpaceKind::LeftMatrix:
      return SpaceElement(
          space, symmetrize((g * g.transpose()) / static_cast<double>(space.cols())));
    case SpaceKind::RowDiagonal:
      return SpaceElement(
          space, g.rowwise().squaredNorm() / static_cast<double>(space.cols()));
  }
  throw std::logic_error("project_rank_one: unreachable");
}

/// Payload-wise sum; projection is linear, so this maintains the projected
/// gradient second moment incrementally.
inline SpaceElement accumulate(const SpaceElement& acc, const SpaceElement& delta) {
  require_same_space(acc, delta, "accumulate");
  return SpaceElement(acc.space(), acc.payload() + delta.payload());
}

/// eta * (delta * I + A)^(-1/2) as an operator function on the space.
/// Eigenvalues of the accumulator are clamped at zero before the shift;
/// delta = 0 is permitted for hand-checked audits on already-positive input.
inline SpaceElement inv_sqrt_shifted(const SpaceElement& acc, double delta,
                                     double eta) {
  if (delta < 0.0 || eta <= 0.0) {
    throw std::invalid_argument("inv_sqrt_shifted: requires delta >= 0 and eta > 0");
  }
  const SpaceDescriptor& space = acc.space();
  if (space.kind() == SpaceKind::LeftMatrix) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(acc.payload());
    if (es.info() != Eigen::Success) {
      throw std::runtime_error("inv_sqrt_shifted: eigendecomposition failed");
    }
    Eigen::VectorXd vals = es.eigenvalues().cwiseMax(0.0).array() + delta;
    if (vals.minCoeff() <= 0.0) {
      throw std::runtime_error(
          "inv_sqrt_shifted: shifted operator is not positive definite");
    }
    Eigen::VectorXd w = eta * vals.array().rsqrt();
    Eigen::MatrixXd out =
        es.eigenvectors() * w.asDiagonal() * es.eigenvectors().transpose();
    return SpaceElement(space, symmetrize(out));
  }
  Eigen::ArrayXXd shifted = acc.payload().array().max(0.0) + delta;
  if (shifted.minCoeff() <= 0.0) {
    throw std::runtime_error(
        "inv_sqrt_shifted: shifted operator is not positive definite");
  }
  return SpaceElement(space, (eta * shifted.rsqrt()).matrix());
}

/// Applies the operator to a point: c*g, v(.)g, B*G, or diag(b)*G.
inline Point apply(const SpaceElement& h, const Point& g) {
  const SpaceDescriptor& space = h.space();
  space.require_match(g, "apply");
  switch (space.kind()) {
    case SpaceKind::ScalarIdentity: return h.scalar() * g;
    case SpaceKind::Diagonal: return h.payload().cwiseProduct(g);
    case SpaceKind::LeftMatrix: return h.payload() * g;
    case SpaceKind::RowDiagonal: return h.payload().col(0).asDiagonal() * g;
  }
  throw std::logic_error("apply: unreachable");
}

/// Operator inner product <A, S> = tr(A S*) evaluated in compact form.
/// The matrix kinds act blockwise on n columns, hence the factor n.
inline double inner(const SpaceElement& a, const SpaceElement& s) {
  require_same_space(a, s, "inner");
  const double n = static_cast<double>(a.space().cols());
  switch (a.space().kind()) {
    case SpaceKind::ScalarIdentity:
      return a.scalar() * s.scalar() * static_cast<double>(a.space().dim());
    case SpaceKind::Diagonal:
      return a.payload().cwiseProduct(s.payload()).sum();
    case SpaceKind::LeftMatrix:
      return n * a.payload().cwiseProduct(s.payload()).sum();
    case SpaceKind::RowDiagonal:
      return n * a.payload().cwiseProduct(s.payload()).sum();
  }
  throw std::logic_error("inner: unreachable");
}

/// Trace of the operator (not of the payload): the LeftMatrix and
/// RowDiagonal operators repeat over n columns, so tr = n * tr(payload).
inline double trace_of(const SpaceElement& a) {
  const double n = static_cast<double>(a.space().cols());
  switch (a.space().kind()) {
    case SpaceKind::ScalarIdentity:
      return a.scalar() * static_cast<double>(a.space().dim());
    case SpaceKind::Diagonal: return a.payload().sum();
    case SpaceKind::LeftMatrix: return n * a.payload().trace();
    case SpaceKind::RowDiagonal: return n * a.payload().sum();
  }
  throw std::logic_error("trace_of: unreachable");
}

/// <g, A g>; nonnegative whenever A is positive semi-definite.
inline double quad_form(const SpaceElement& a, const Point& g) {
  return g.cwiseProduct(apply(a, g)).sum();
}

/// Payload-wise operator inverse; requires strictly positive spectrum.
inline SpaceElement inverse_of(const SpaceElement& a) {
  const SpaceDescriptor& space = a.space();
  if (space.kind() == SpaceKind::LeftMatrix) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.payload());
    if (es.info() != Eigen::Success) {
      throw std::runtime_error("inverse_of: eigendecomposition failed");
    }
    if (es.eigenvalues().minCoeff() <= 0.0) {
      throw std::runtime_error("inverse_of: operator is not positive definite");
    }
    Eigen::VectorXd w = es.eigenvalues().cwiseInverse();
    return SpaceElement(
        space,
        symmetrize(es.eigenvectors() * w.asDiagonal() * es.eigenvectors().transpose()));
  }
  if (a.payload().minCoeff() <= 0.0) {
    throw std::runtime_error("inverse_of: operator is not positive definite");
  }
  return SpaceElement(space, a.payload().cwiseInverse());
}

/// tr(A^{-1}) without materializing the inverse.
inline double trace_inverse(const SpaceElement& a) {
  const double n = static_cast<double>(a.space().cols());
  switch (a.space().kind()) {
    case SpaceKind::ScalarIdentity: {
      if (a.scalar() <= 0.0) {
        throw std::runtime_error("trace_inverse: operator is not positive definite");
      }
      return static_cast<double>(a.space().dim()) / a.scalar();
    }
    case SpaceKind::Diagonal:
    case SpaceKind::RowDiagonal: {
      if (a.payload().minCoeff() <= 0.0) {
        throw std::runtime_error("trace_inverse: operator is not positive definite");
      }
      return (a.space().kind() == SpaceKind::Diagonal ? 1.0 : n) *
             a.payload().cwiseInverse().sum();
    }
    case SpaceKind::LeftMatrix: {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.payload());
      if (es.info() != Eigen::Success) {
        throw std::runtime_error("trace_inverse: eigendecomposition failed");
      }
      if (es.eigenvalues().minCoeff() <= 0.0) {
        throw std::runtime_error("trace_inverse: operator is not positive definite");
      }
      return n * es.eigenvalues().cwiseInverse().sum();
    }
  }
  throw std::logic_error("trace_inverse: unreachable");
}

/// Largest eigenvalue of the operator; equals the largest payload
/// eigenvalue for every kind since column blocks only repeat the spectrum.
inline double max_eigenvalue(const SpaceElement& a) {
  switch (a.space().kind()) {
    case SpaceKind::ScalarIdentity: return a.scalar();
    case SpaceKind::Diagonal:
    case SpaceKind::RowDiagonal: return a.payload().maxCoeff();
    case SpaceKind::LeftMatrix: {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.payload());
      if (es.info() != Eigen::Success) {
        throw std::runtime_error("max_eigenvalue: eigendecomposition failed");
      }
      return es.eigenvalues().maxCoeff();
    }
  }
  throw std::logic_error("max_eigenvalue: unreachable");
}

/// The norm induced by the space: R(x) = ||proj(x<x,.>)||_op^{1/2}.
/// Closed forms per kind; the LeftMatrix case goes through the SVD so it
/// stays independent of project_rank_one for cross-checking.
inline double space_norm(const SpaceDescriptor& space, const Point& x) {
  space.require_match(x, "space_norm");
  switch (space.kind()) {
    case SpaceKind::ScalarIdentity:
      return x.norm() / std::sqrt(static_cast<double>(space.dim()));
    case SpaceKind::Diagonal:
      return x.cwiseAbs().maxCoeff();
    case SpaceKind::LeftMatrix: {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(x);
      return svd.singularValues()(0) / std::sqrt(static_cast<double>(space.cols()));
    }
    case SpaceKind::RowDiagonal:
      return x.rowwise().norm().maxCoeff() /
             std::sqrt(static_cast<double>(space.cols()));
  }
  throw std::logic_error("space_norm: unreachable");
}

}  // namespace adaprec
