#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>

namespace memeguard {

enum class LossKind { cross_entropy, focal };

std::string_view to_string(LossKind kind);
LossKind loss_kind_from_string(std::string_view name);

struct LossSpec {
  LossKind kind = LossKind::cross_entropy;
  double gamma = 2.0;  // focal only

  void validate() const;
  /// Focusing exponent actually applied: 0 for cross-entropy.
  double effective_gamma() const { return kind == LossKind::focal ? gamma : 0.0; }
};

/// CE(p) = -ln p, FL(p) = -(1 - p)^gamma ln p. Throws std::domain_error
/// unless 0 < p_t <= 1.
double loss_value(double p_true, const LossSpec& spec);

/// Arithmetic mean of loss_value over the batch.
double batch_loss(std::span<const double> p_true, const LossSpec& spec);

struct LogitLoss {
  double loss = 0.0;
  double p_true = 0.0;
  std::array<double, 2> grad{};  // d loss / d logits
};

/// Two-class loss evaluated in log space from raw logits; p_t never
/// underflows to zero here.
LogitLoss loss_from_logits(const std::array<double, 2>& logits, int label, const LossSpec& spec);

}  // namespace memeguard
