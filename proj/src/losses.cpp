#include "bevfuse/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bevfuse/error.hpp"
#include "bevfuse/log.hpp"

namespace bevfuse {

void LossWeights::validate() const {
  for (double l : {lambda_head, lambda_lidar, lambda_camera, lambda_cos}) {
    if (!std::isfinite(l) || l < 0.0) throw ConfigError("loss weights must be finite and non-negative");
  }
}

double focal_loss(std::span<const double> pred_prob, std::span<const int> target, double alpha, double gamma) {
  if (pred_prob.size() != target.size()) {
    throw ContractError("focal_loss: " + std::to_string(pred_prob.size()) + " predictions vs " +
                        std::to_string(target.size()) + " targets");
  }
  if (pred_prob.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < pred_prob.size(); ++i) {
    const double p = std::clamp(pred_prob[i], kProbabilityClamp, 1.0 - kProbabilityClamp);
    const double pt = target[i] != 0 ? p : 1.0 - p;
    sum += -alpha * std::pow(1.0 - pt, gamma) * std::log(pt);
  }
  return sum / static_cast<double>(pred_prob.size());
}

double l1_loss(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size()) {
    throw ContractError("l1_loss: " + std::to_string(pred.size()) + " predictions vs " +
                        std::to_string(target.size()) + " targets");
  }
  if (pred.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += std::abs(pred[i] - target[i]);
  return sum / static_cast<double>(pred.size());
}

std::optional<double> cosine_loss(std::span<const std::pair<std::vector<double>, std::vector<double>>> pairs) {
  double sum = 0.0;
  std::size_t used = 0;
  for (const auto& [a, b] : pairs) {
    if (a.size() != b.size()) throw ContractError("cosine_loss: vectors differ in length");
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      dot += a[i] * b[i];
      na += a[i] * a[i];
      nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) {
      log::warn("cosine_loss: skipping a pair with a zero-norm vector");
      continue;
    }
    const double cos = std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
    sum += 1.0 - cos;
    ++used;
  }
  if (used == 0) return std::nullopt;
  return sum / static_cast<double>(used);
}

std::optional<double> cosine_loss(std::span<const InstancePair> eip, std::span<const InstanceFeature> lidar,
                                  std::span<const InstanceFeature> camera, const Projection& squeeze) {
  std::vector<std::pair<std::vector<double>, std::vector<double>>> vecs;
  vecs.reserve(eip.size());
  for (const auto& p : eip) {
    auto l = point_squeeze(lidar[p.anchor], squeeze);
    const auto& raw = camera[p.guide].raw;
    if (raw.size() < l.size()) throw ConfigError("cosine_loss: camera instance shorter than the squeezed channel count");
    std::vector<double> c(raw.begin(), raw.begin() + static_cast<std::ptrdiff_t>(l.size()));
    vecs.emplace_back(std::move(l), std::move(c));
  }
  return cosine_loss(vecs);
}

LossBreakdown total_loss(double l_head, double l_lidar, double l_camera, std::optional<double> cos_result,
                         const LossWeights& weights, CosHistory& history) {
  LossBreakdown out;
  out.head = l_head;
  out.lidar = l_lidar;
  out.camera = l_camera;
  if (cos_result) {
    history.max_seen = std::max(history.max_seen, *cos_result);
    out.cos = *cos_result;
  } else {
    out.cos = history.max_seen;
    out.cos_from_history = true;
  }
  out.total = weights.lambda_head * out.head + weights.lambda_lidar * out.lidar + weights.lambda_camera * out.camera +
              weights.lambda_cos * out.cos;
  return out;
}

}  // namespace bevfuse
