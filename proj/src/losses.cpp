#include "memeguard/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace memeguard {

std::string_view to_string(LossKind kind) {
  return kind == LossKind::focal ? "focal" : "cross_entropy";
}

LossKind loss_kind_from_string(std::string_view name) {
  if (name == "cross_entropy" || name == "ce") return LossKind::cross_entropy;
  if (name == "focal" || name == "fl") return LossKind::focal;
  throw std::invalid_argument("unknown loss kind '" + std::string(name) + "'");
}

void LossSpec::validate() const {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("focal gamma must be >= 0");
}

namespace {

// -(q^gamma) * log_p where q = 1 - p. gamma == 0 reduces to -log_p exactly.
double focal_term(double log_p, double q, double gamma) {
  if (gamma == 0.0) return -log_p;
  return -std::pow(q, gamma) * log_p;
}

}  // namespace

double loss_value(double p_true, const LossSpec& spec) {
  if (!(p_true > 0.0) || p_true > 1.0) {
    throw std::domain_error("p_t must lie in (0, 1], got " + std::to_string(p_true));
  }
  return focal_term(std::log(p_true), 1.0 - p_true, spec.effective_gamma());
}

double batch_loss(std::span<const double> p_true, const LossSpec& spec) {
  if (p_true.empty()) return 0.0;
  double sum = 0.0;
  for (double p : p_true) sum += loss_value(p, spec);
  return sum / static_cast<double>(p_true.size());
}

LogitLoss loss_from_logits(const std::array<double, 2>& logits, int label, const LossSpec& spec) {
  if (label != 0 && label != 1) throw std::invalid_argument("label must be 0 or 1");
  const double zt = logits[static_cast<std::size_t>(label)];
  const double zo = logits[static_cast<std::size_t>(1 - label)];
  const double m = std::max(zt, zo);
  const double lse = m + std::log(std::exp(zt - m) + std::exp(zo - m));
  const double log_p = zt - lse;
  const double p = std::exp(log_p);
  const double q = std::exp(zo - lse);  // 1 - p without cancellation
  const double gamma = spec.effective_gamma();

  LogitLoss out;
  out.p_true = p;
  out.loss = focal_term(log_p, q, gamma);

  // dL/dlog_p = -q^g + g q^(g-1) p log_p ; dlog_p/dz_t = q, dlog_p/dz_o = -q.
  double dl_dlogp = gamma == 0.0 ? -1.0 : -std::pow(q, gamma);
  if (gamma != 0.0 && q > 0.0) dl_dlogp += gamma * std::pow(q, gamma - 1.0) * p * log_p;
  out.grad[static_cast<std::size_t>(label)] = dl_dlogp * q;
  out.grad[static_cast<std::size_t>(1 - label)] = -dl_dlogp * q;
  return out;
}

}  // namespace memeguard
