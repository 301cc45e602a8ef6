#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "adaprec/space.hpp"

namespace adaprec {

/// Running quantities needed to evaluate the FTL-BTL inequality at runtime.
struct AuditLedger {
  double sum_quad = 0.0;  // sum over past steps of <g_k, H_k g_k>
  std::optional<SpaceElement> last_H;
  bool enabled = true;
};

/// Both sides of the FTL-BTL inequality
///   sum_k ||g_k||^2_{H_k}  <=  <H_K, proj(S_K)> + delta tr(H_K) + eta^2 tr(H_K^{-1})
/// together with the slack. The inequality is guaranteed only while the
/// gradient history is accumulated.
struct FtlBtlAudit {
  double lhs = 0.0;
  double rhs = 0.0;
  double gap() const { return rhs - lhs; }
  double scale() const { return 1.0 + std::abs(lhs) + std::abs(rhs); }
};

/// lambda_max(next_H - prev_H); must stay <= ~0 under accumulation, where
/// preconditioners are nonincreasing in the Loewner order.
inline double loewner_monotone_check(const SpaceElement& prev_H,
                                     const SpaceElement& next_H) {
  require_same_space(prev_H, next_H, "loewner_monotone_check");
  SpaceElement diff(next_H.space(), next_H.payload() - prev_H.payload());
  return max_eigenvalue(diff);
}

/// Adaptive preconditioner state for one run: accumulates the projected
/// gradient second moment and produces H_k = eta (delta I + moment)^(-1/2).
/// With accumulate_history = false the moment is replaced each step instead
/// of summed, which makes H_k depend on the current gradient only.
class PrecondState {
public:
  PrecondState(const SpaceDescriptor& space, double eta, double delta,
               bool accumulate_history = true, bool audit = true)
      : space_(space),
        moment_(SpaceElement::zero(space)),
        eta_(eta),
        delta_(delta),
        accumulate_history_(accumulate_history) {
    if (eta <= 0.0) throw std::invalid_argument("PrecondState: eta must be > 0");
    if (delta < 0.0) throw std::invalid_argument("PrecondState: delta must be >= 0");
    ledger_.enabled = audit;
  }

  const SpaceDescriptor& space() const { return space_; }
  const SpaceElement& moment() const { return moment_; }
  double eta() const { return eta_; }
  double delta() const { return delta_; }
  bool accumulate_history() const { return accumulate_history_; }
  const AuditLedger& ledger() const { return ledger_; }
  int steps() const { return steps_; }

  /// Absorbs one gradient and returns the preconditioner to use for it.
  SpaceElement update(const Point& g) {
    space_.require_match(g, "PrecondState::update");
    if (!g.allFinite()) {
      throw std::runtime_error("PrecondState::update: non-finite gradient at iteration " +
                               std::to_string(steps_));
    }
    SpaceElement projected = project_rank_one(space_, g);
    moment_ = accumulate_history_ ? accumulate(moment_, projected)
                                  : std::move(projected);
    if (!moment_.payload().allFinite()) {
      throw std::runtime_error(
          "PrecondState::update: moment overflow at iteration " +
          std::to_string(steps_));
    }
    SpaceElement h = inv_sqrt_shifted(moment_, delta_, eta_);
    if (ledger_.enabled) {
      ledger_.sum_quad += quad_form(h, g);
      if (!std::isfinite(ledger_.sum_quad)) {
        throw std::runtime_error(
            "PrecondState::update: audit accumulator overflow at iteration " +
            std::to_string(steps_));
      }
    }
    ledger_.last_H = h;
    ++steps_;
    return h;
  }

  FtlBtlAudit ftl_btl_audit() const {
    if (steps_ == 0) {
      throw std::invalid_argument("ftl_btl_audit: no updates performed yet");
    }
    if (!accumulate_history_) {
      throw std::invalid_argument(
          "ftl_btl_audit: requires gradient accumulation");
    }
    if (!ledger_.enabled) {
      throw std::invalid_argument("ftl_btl_audit: ledger is disabled");
    }
    const SpaceElement& h = *ledger_.last_H;
    FtlBtlAudit audit;
    audit.lhs = ledger_.sum_quad;
    audit.rhs = inner(h, moment_) + delta_ * trace_of(h) +
                eta_ * eta_ * trace_inverse(h);
    return audit;
  }

  /// Slack of the FTL-BTL inequality; nonnegative up to rounding.
  double ftl_btl_gap() const { return ftl_btl_audit().gap(); }

private:
  SpaceDescriptor space_;
  SpaceElement moment_;
  double eta_;
  double delta_;
  bool accumulate_history_;
  AuditLedger ledger_;
  int steps_ = 0;
};

}  // namespace adaprec
