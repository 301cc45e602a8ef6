#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "adaprec/precond.hpp"
#include "adaprec/testbed.hpp"

namespace adaprec {

/// The four loop variants: the plain preconditioned loop, its Nesterov
/// accelerated counterpart, and both with a projection onto the ball
/// {x : R(x) <= radius} after every step.
enum class Algorithm { Plain, Accelerated, PlainClipped, AccelClipped };

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Plain: return "plain";
    case Algorithm::Accelerated: return "accelerated";
    case Algorithm::PlainClipped: return "plain_clipped";
    case Algorithm::AccelClipped: return "accel_clipped";
  }
  return "unknown";
}

inline bool is_accelerated(Algorithm a) {
  return a == Algorithm::Accelerated || a == Algorithm::AccelClipped;
}
inline bool is_clipped(Algorithm a) {
  return a == Algorithm::PlainClipped || a == Algorithm::AccelClipped;
}

struct RunConfig {
  Algorithm algorithm = Algorithm::Plain;
  int steps = 1;         // iterations executed; trace rows are k = 0..steps-1
  double radius = 1.0;   // iterate-distance scale; also the clipping radius
  double delta = 1e-12;
  std::uint64_t seed = 0;
  bool audit = true;
  bool accumulate_history = true;
  std::optional<double> eta_override;  // default: radius (plain), 2*radius (accelerated)
  std::optional<Point> start;          // default: origin
};

struct IterationRecord {
  int k = 0;
  double suboptimality = 0.0;  // f(current averaged output) - f_star
  double dist_R = 0.0;         // R(x_k - x_star) at the queried iterate
  double ftl_btl_gap = 0.0;    // 0 when audits are off or history is not accumulated
  double loewner_gap = 0.0;    // lambda_max(H_k - H_{k-1}); 0 at k = 0
  double trace_H_inv = 0.0;
};

struct AuditSummary {
  int failures = 0;
  std::string first_failure;
  void record(std::string message) {
    if (failures++ == 0) first_failure = std::move(message);
  }
};

struct RunTrace {
  Algorithm algorithm = Algorithm::Plain;
  bool stochastic = false;
  double radius = 0.0;
  double eta = 0.0;
  double delta = 0.0;
  std::vector<IterationRecord> records;
  Point final_iterate;
  double wall_seconds = 0.0;
  AuditSummary audit;
};

/// One preconditioned descent step: x - H g.
inline Point step_plain(const Point& x, const Point& g, const SpaceElement& h) {
  if (x.rows() != g.rows() || x.cols() != g.cols()) {
    throw std::invalid_argument("step_plain: iterate/gradient shape mismatch");
  }
  return x - apply(h, g);
}

/// Projection onto {x : R(x) <= radius} in the diagonal-preconditioner
/// metric. For every diagonal-kind space this is metric-independent:
/// coordinate clipping (Diagonal), per-row rescaling to radius*sqrt(n)
/// (RowDiagonal), or whole-vector rescaling to radius*sqrt(d)
/// (ScalarIdentity). LeftMatrix spaces are rejected: their metric
/// projection needs the dense preconditioner and has no cheap form.
inline Point project_norm_ball(const SpaceDescriptor& space, const Point& x,
                               double radius) {
  if (radius <= 0.0) {
    throw std::invalid_argument("project_norm_ball: radius must be > 0");
  }
  space.require_match(x, "project_norm_ball");
  switch (space.kind()) {
    case SpaceKind::ScalarIdentity: {
      const double limit = radius * std::sqrt(static_cast<double>(space.dim()));
      const double norm = x.norm();
      if (norm <= limit) return x;
      return Point(x * (limit / norm));
    }
    case SpaceKind::Diagonal:
      return x.cwiseMax(-radius).cwiseMin(radius);
    case SpaceKind::RowDiagonal: {
      const double limit = radius * std::sqrt(static_cast<double>(space.cols()));
      Point out = x;
      for (Eigen::Index r = 0; r < out.rows(); ++r) {
        const double rn = out.row(r).norm();
        if (rn > limit) out.row(r) *= limit / rn;
      }
      return out;
    }
    case SpaceKind::LeftMatrix:
      throw std::invalid_argument(
          "project_norm_ball: unsupported for LeftMatrix spaces");
  }
  throw std::logic_error("project_norm_ball: unreachable");
}

/// Stochastic gradient of the reparametrized objective
/// x |-> alpha^{-2} f(alpha x + (1 - alpha) x_bar): draws a gradient at the
/// blended point and scales it by 1/alpha (chain rule).
inline Point accelerated_gradient(const ProblemSpec& problem, const Point& x,
                                  const Point& x_bar, double alpha, Rng& rng) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("accelerated_gradient: alpha must lie in (0, 1]");
  }
  const Point blended = alpha * x + (1.0 - alpha) * x_bar;
  return problem.stochastic_grad(blended, rng) / alpha;
}

using IterationObserver =
    std::function<void(int k, const Point& x_next, const SpaceElement& h)>;

namespace detail {

inline bool isotropic_payload(const SpaceElement& e) {
  if (e.space().kind() != SpaceKind::LeftMatrix) return true;
  const Eigen::MatrixXd& b = e.payload();
  const double c = b(0, 0);
  return (b.array() == (c * Eigen::MatrixXd::Identity(b.rows(), b.cols())).array())
      .all();
}

}  // namespace detail

/// Executes config.steps iterations of the selected variant and returns the
/// per-iteration trace. Plain variants report the running average of the
/// queried iterates; accelerated variants report the momentum average, which
/// for the clipped loop blends the pre-projection point.
inline RunTrace run(const ProblemSpec& problem, const RunConfig& config,
                    const IterationObserver& observer = {}) {
  const SpaceDescriptor& space = problem.space;
  if (config.steps < 1) throw std::invalid_argument("run: steps must be >= 1");
  if (config.radius <= 0.0) throw std::invalid_argument("run: radius must be > 0");
  const bool accel = is_accelerated(config.algorithm);
  const bool clipped = is_clipped(config.algorithm);

  Point x = config.start.value_or(Point::Zero(space.rows(), space.cols()));
  space.require_match(x, "run: start point");
  if (clipped) {
    if (space.kind() == SpaceKind::LeftMatrix) {
      throw std::invalid_argument("run: clipped variants do not support LeftMatrix spaces");
    }
    if (space_norm(space, x) > config.radius + 1e-12) {
      throw std::invalid_argument("run: start point lies outside the clipping ball");
    }
    if (space_norm(space, problem.x_star) >= config.radius) {
      throw std::invalid_argument("run: clipping radius must exceed R(x_star)");
    }
  }
  if (accel && space.kind() == SpaceKind::LeftMatrix) {
    // The accelerated analysis needs L and Sigma to commute with every
    // preconditioner; for LeftMatrix that forces isotropic constants.
    if (!detail::isotropic_payload(problem.smoothness) ||
        !detail::isotropic_payload(problem.noise_sigma)) {
      throw std::invalid_argument(
          "run: accelerated LeftMatrix runs need isotropic L and Sigma");
    }
  }

  const double eta =
      config.eta_override.value_or((accel ? 2.0 : 1.0) * config.radius);
  Rng rng(config.seed);
  PrecondState state(space, eta, config.delta, config.accumulate_history,
                     config.audit);

  RunTrace trace;
  trace.algorithm = config.algorithm;
  trace.stochastic = !problem.deterministic();
  trace.radius = config.radius;
  trace.eta = eta;
  trace.delta = config.delta;
  trace.records.reserve(static_cast<std::size_t>(config.steps));

  Point x_bar = x;
  Point visited_sum = Point::Zero(space.rows(), space.cols());
  std::optional<SpaceElement> prev_h;

  const auto t0 = std::chrono::steady_clock::now();
  for (int k = 0; k < config.steps; ++k) {
    IterationRecord rec;
    rec.k = k;
    rec.dist_R = space_norm(space, x - problem.x_star);

    const double alpha = 2.0 / (k + 2.0);
    Point g = accel ? accelerated_gradient(problem, x, x_bar, alpha, rng)
                    : problem.stochastic_grad(x, rng);
    SpaceElement h = state.update(g);

    Point x_half = step_plain(x, g, h);
    Point x_next = clipped ? project_norm_ball(space, x_half, config.radius)
                           : std::move(x_half);
    if (!x_next.allFinite()) {
      throw std::runtime_error("run: non-finite iterate at iteration " +
                               std::to_string(k));
    }

    if (accel) {
      // The clipped loop averages the pre-projection point x_{k+1/2}.
      const Point& blend = (config.algorithm == Algorithm::AccelClipped)
                               ? x_half
                               : x_next;
      x_bar = alpha * blend + (1.0 - alpha) * x_bar;
      rec.suboptimality = problem.eval(x_bar) - problem.f_star;
    } else {
      visited_sum += x;
      rec.suboptimality =
          problem.eval(visited_sum / (k + 1.0)) - problem.f_star;
    }

    rec.trace_H_inv = trace_inverse(h);
    if (config.audit) {
      if (config.accumulate_history) {
        const FtlBtlAudit fb = state.ftl_btl_audit();
        rec.ftl_btl_gap = fb.gap();
        if (fb.gap() < -1e-8 * fb.scale()) {
          trace.audit.record("ftl-btl inequality violated at iteration " +
                             std::to_string(k));
        }
        if (prev_h) {
          rec.loewner_gap = loewner_monotone_check(*prev_h, h);
          if (rec.loewner_gap > 1e-10) {
            trace.audit.record("Loewner monotonicity violated at iteration " +
                               std::to_string(k));
          }
        }
      }
      if (clipped && space_norm(space, x_next) > config.radius + 1e-12) {
        trace.audit.record("clipping feasibility violated at iteration " +
                           std::to_string(k));
      }
    }

    trace.records.push_back(rec);
    if (observer) observer(k, x_next, h);
    prev_h = std::move(h);
    x = std::move(x_next);
  }
  trace.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  trace.final_iterate = x;
  return trace;
}

}  // namespace adaprec
