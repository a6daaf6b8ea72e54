#pragma once

// Min-bottleneck bandwidth model, integer weight search and loaded-latency model.
//
// With traffic split by page fraction f_i = w_i / sum(w), tier i saturates when
// the aggregate offered bandwidth reaches bw_i / f_i, so the aggregate the system
// sustains is min_i bw_i / f_i over active tiers.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <fmt/format.h>

#include "memweave/calibration.hpp"
#include "memweave/error.hpp"
#include "memweave/policy.hpp"

namespace memweave {

struct Prediction {
  double aggregate_gbps = 0.0;
  std::size_t bottleneck = 0;
  std::vector<double> shares;       // w_i / sum(w), zero for inactive tiers
  std::vector<double> tier_gbps;    // bandwidth_at per tier, NaN for inactive tiers
  std::vector<double> utilization;  // fraction of each tier used at aggregate_gbps
};

namespace detail {

inline void check_alignment(const ProfileSet& profiles, const InterleaveWeights& weights) {
  if (weights.size() != profiles.size()) {
    throw ValidationError(fmt::format("weights {} have {} entries but the profile set has {} tiers",
                                      weights.label(), weights.size(), profiles.size()));
  }
}

inline std::vector<double> all_tier_bandwidths(const ProfileSet& profiles,
                                               const WorkloadMix& mix) {
  std::vector<double> bw;
  bw.reserve(profiles.size());
  for (const auto& tier : profiles) bw.push_back(bandwidth_at(tier, mix));
  return bw;
}

inline Prediction predict_from(std::span<const double> bw, const InterleaveWeights& weights) {
  Prediction p;
  const auto n = weights.size();
  const double total = static_cast<double>(weights.total());
  p.shares.assign(n, 0.0);
  p.tier_gbps.assign(n, std::numeric_limits<double>::quiet_NaN());
  p.utilization.assign(n, 0.0);
  p.aggregate_gbps = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (!weights.active(i)) continue;
    p.shares[i] = static_cast<double>(weights[i]) / total;
    p.tier_gbps[i] = bw[i];
    // bw * total / w keeps single-tier cases exact.
    const double cap = bw[i] * total / static_cast<double>(weights[i]);
    if (cap < p.aggregate_gbps) {
      p.aggregate_gbps = cap;
      p.bottleneck = i;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!weights.active(i)) continue;
    p.utilization[i] = i == p.bottleneck ? 1.0 : p.aggregate_gbps * p.shares[i] / bw[i];
  }
  return p;
}

// Strict-weak "a is preferred over b" once the objective is tied:
// smaller total, then more weight on tier 0, then lexicographically smaller.
inline bool tie_break_less(const InterleaveWeights& a, const InterleaveWeights& b) {
  if (a.total() != b.total()) return a.total() < b.total();
  if (a[0] != b[0]) return a[0] > b[0];
  return a < b;
}

inline bool nearly_equal(double a, double b) {
  return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b));
}

}  // namespace detail

inline Prediction predict_bandwidth(const ProfileSet& profiles, const InterleaveWeights& weights,
                                    const WorkloadMix& mix) {
  detail::check_alignment(profiles, weights);
  std::vector<double> bw(profiles.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    if (weights.active(i)) bw[i] = bandwidth_at(profiles[i], mix);
  }
  return detail::predict_from(bw, weights);
}

/// Fractions at which every tier saturates at once: bw_i / sum_j bw_j.
inline std::vector<double> optimal_fraction(const ProfileSet& profiles, const WorkloadMix& mix) {
  auto bw = detail::all_tier_bandwidths(profiles, mix);
  double sum = 0.0;
  for (double b : bw) sum += b;
  for (double& b : bw) b /= sum;
  return bw;
}

/// Calls `fn` for every weight vector with entries in [0, max_weight], not all
/// zero, in lexicographic order.
inline void for_each_weight_vector(std::size_t tiers, std::uint32_t max_weight,
                                   const std::function<void(const InterleaveWeights&)>& fn) {
  if (tiers == 0) return;
  if (max_weight < 1 || max_weight > kMaxTierWeight) {
    throw ValidationError(
        fmt::format("max_weight must be in [1, {}], got {}", kMaxTierWeight, max_weight));
  }
  const double candidates = std::pow(static_cast<double>(max_weight) + 1.0, tiers);
  if (candidates > 5e7) {
    throw ValidationError(fmt::format("weight search over {} tiers with max_weight {} is too large",
                                      tiers, max_weight));
  }
  std::vector<std::uint32_t> w(tiers, 0);
  while (true) {
    std::size_t i = tiers;
    while (i > 0 && w[i - 1] == max_weight) w[--i] = 0;
    if (i == 0) break;
    ++w[i - 1];
    fn(InterleaveWeights(w));
  }
}

struct Recommendation {
  InterleaveWeights weights;
  Prediction prediction;
};

/// Best predicted bandwidth among explicit candidates.
inline Recommendation recommend_weights_among(const ProfileSet& profiles, const WorkloadMix& mix,
                                              std::span<const InterleaveWeights> candidates) {
  if (candidates.empty()) throw ValidationError("no candidate weight vectors");
  const auto bw = detail::all_tier_bandwidths(profiles, mix);
  std::optional<Recommendation> best;
  for (const auto& w : candidates) {
    detail::check_alignment(profiles, w);
    auto p = detail::predict_from(bw, w);
    if (!best) {
      best = Recommendation{w, std::move(p)};
      continue;
    }
    const double a = p.aggregate_gbps;
    const double b = best->prediction.aggregate_gbps;
    const bool better = detail::nearly_equal(a, b) ? detail::tie_break_less(w, best->weights)
                                                   : a > b;
    if (better) best = Recommendation{w, std::move(p)};
  }
  return *best;
}

/// Exhaustive search over every vector with entries in [0, max_weight].
inline Recommendation recommend_weights(const ProfileSet& profiles, const WorkloadMix& mix,
                                        std::uint32_t max_weight = 10) {
  std::vector<InterleaveWeights> candidates;
  for_each_weight_vector(profiles.size(), max_weight,
                         [&](const InterleaveWeights& w) { candidates.push_back(w); });
  return recommend_weights_among(profiles, mix, candidates);
}

enum class LatencyModel { mm1 };

inline double loaded_latency(double unloaded_ns, double utilization,
                             LatencyModel model = LatencyModel::mm1) {
  if (!(unloaded_ns > 0.0)) throw ValidationError("base latency must be > 0");
  if (!(utilization >= 0.0)) {
    throw ValidationError(fmt::format("utilization must be >= 0, got {}", utilization));
  }
  if (utilization >= 1.0) {
    throw InfeasibleLoad(fmt::format("utilization {:.6g} >= 1: tier saturated", utilization));
  }
  switch (model) {
    case LatencyModel::mm1: break;
  }
  return unloaded_ns / (1.0 - utilization);
}

inline double loaded_latency(const TierProfile& profile, double utilization,
                             LatencyModel model = LatencyModel::mm1) {
  return loaded_latency(profile.unloaded_latency_ns, utilization, model);
}

/// Offered load in GB/s of total traffic.
struct DemandPoint {
  double offered_gbps = 0.0;

  explicit DemandPoint(double gbps) : offered_gbps(gbps) {
    if (!(gbps >= 0.0) || !std::isfinite(gbps)) {
      throw ValidationError(fmt::format("demand must be finite and >= 0, got {}", gbps));
    }
  }
};

namespace detail {

// Returns nullopt when some active tier would be at or past saturation.
inline std::optional<double> try_mixture_latency(const ProfileSet& profiles,
                                                 std::span<const double> bw,
                                                 const InterleaveWeights& weights,
                                                 double demand, LatencyModel model) {
  double latency = 0.0;
  const double total = static_cast<double>(weights.total());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!weights.active(i)) continue;
    const double f = static_cast<double>(weights[i]) / total;
    const double u = demand * f / bw[i];
    if (u >= 1.0) return std::nullopt;
    latency += f * loaded_latency(profiles[i].unloaded_latency_ns, u, model);
  }
  return latency;
}

}  // namespace detail

/// Page-fraction-weighted average of each active tier's loaded latency.
inline double mixture_latency(const ProfileSet& profiles, const InterleaveWeights& weights,
                              const WorkloadMix& mix, DemandPoint demand,
                              LatencyModel model = LatencyModel::mm1) {
  detail::check_alignment(profiles, weights);
  std::vector<double> bw(profiles.size(), 0.0);
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    if (weights.active(i)) bw[i] = bandwidth_at(profiles[i], mix);
  }
  auto latency = detail::try_mixture_latency(profiles, bw, weights, demand.offered_gbps, model);
  if (!latency) {
    throw InfeasibleLoad(fmt::format("demand {:.2f} GB/s saturates a tier under weights {}",
                                     demand.offered_gbps, weights.label()));
  }
  return *latency;
}

struct DemandRecommendation {
  InterleaveWeights weights;
  double latency_ns;
};

/// Weights minimizing mixture latency at `demand`, among vectors whose every
/// tier stays strictly below saturation.
inline DemandRecommendation recommend_weights_for_demand(const ProfileSet& profiles,
                                                         const WorkloadMix& mix,
                                                         DemandPoint demand,
                                                         std::uint32_t max_weight = 10,
                                                         LatencyModel model = LatencyModel::mm1) {
  const auto bw = detail::all_tier_bandwidths(profiles, mix);
  double capacity = 0.0;
  for (double b : bw) capacity += b;
  if (demand.offered_gbps >= capacity) {
    throw NoFeasibleWeights(fmt::format(
        "demand {:.2f} GB/s is at or above total tier bandwidth {:.2f} GB/s for mix {}",
        demand.offered_gbps, capacity, mix.spec()));
  }
  std::optional<DemandRecommendation> best;
  for_each_weight_vector(profiles.size(), max_weight, [&](const InterleaveWeights& w) {
    const auto latency = detail::try_mixture_latency(profiles, bw, w, demand.offered_gbps, model);
    if (!latency) return;
    if (!best) {
      best = DemandRecommendation{w, *latency};
      return;
    }
    const bool better = detail::nearly_equal(*latency, best->latency_ns)
                            ? detail::tie_break_less(w, best->weights)
                            : *latency < best->latency_ns;
    if (better) best = DemandRecommendation{w, *latency};
  });
  if (!best) {
    throw NoFeasibleWeights(fmt::format(
        "no weight vector with entries <= {} carries {:.2f} GB/s for mix {}", max_weight,
        demand.offered_gbps, mix.spec()));
  }
  return *best;
}

}  // namespace memweave
