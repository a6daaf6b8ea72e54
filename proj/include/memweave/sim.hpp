#pragma once

// Closed-loop, event-driven memory traffic simulator over an interleaved page
// space. Each tier is one FIFO server with a deterministic service time of
// transfer_bytes / bandwidth, followed by a fixed pipeline delay equal to the
// tier's unloaded latency that does not hold the server.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <queue>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <fmt/format.h>

#include "json.hpp"
#include "memweave/calibration.hpp"
#include "memweave/csv.hpp"
#include "memweave/error.hpp"
#include "memweave/policy.hpp"

namespace memweave {

enum class AccessPattern { uniform_random, sequential };

inline std::string_view to_string(AccessPattern p) {
  return p == AccessPattern::uniform_random ? "uniform_random" : "sequential";
}

struct SimConfig {
  SimConfig(ProfileSet profiles_, InterleaveWeights weights_, WorkloadMix mix_)
      : profiles(std::move(profiles_)), weights(std::move(weights_)), mix(std::move(mix_)) {}

  ProfileSet profiles;
  InterleaveWeights weights;
  WorkloadMix mix;
  std::uint32_t streams = 1;
  std::uint32_t outstanding_per_stream = 1;
  std::uint32_t transfer_bytes = 64;
  std::uint64_t page_count = 55440;  // divisible by every total weight up to 12
  AccessPattern pattern = AccessPattern::uniform_random;
  std::optional<std::uint64_t> warmup_requests;  // default: 10% of measured
  std::uint64_t measured_requests = 100000;
  std::uint64_t seed = 1;

  // A saturated tier's queue keeps filling for many round trips after start,
  // so the default warmup also scales with the requests in flight.
  std::uint64_t warmup() const {
    return warmup_requests.value_or(std::max(measured_requests / 10, 32 * concurrency()));
  }
  std::uint64_t concurrency() const {
    return std::uint64_t{streams} * outstanding_per_stream;
  }

  void validate() const {
    if (weights.size() != profiles.size()) {
      throw ValidationError(fmt::format("weights {} do not match {} profile tiers",
                                        weights.label(), profiles.size()));
    }
    if (streams == 0) throw ValidationError("streams must be >= 1");
    if (outstanding_per_stream == 0) throw ValidationError("outstanding_per_stream must be >= 1");
    if (transfer_bytes == 0 || transfer_bytes > 4096) {
      throw ValidationError(
          fmt::format("transfer_bytes must be in [1, 4096], got {}", transfer_bytes));
    }
    if (page_count == 0) throw ValidationError("page_count must be >= 1");
    if (measured_requests == 0) throw ValidationError("measured_requests must be >= 1");
  }
};

struct SimReport {
  double achieved_gbps = 0.0;
  double mean_latency_ns = 0.0;
  double p50_latency_ns = 0.0;
  double p95_latency_ns = 0.0;
  double p99_latency_ns = 0.0;
  std::vector<std::uint64_t> tier_requests;
  std::vector<double> tier_utilization;
  std::uint64_t reads = 0;
  std::uint64_t writes = 0;
  std::uint64_t measured_requests = 0;
  double window_ns = 0.0;
  double simulated_ns = 0.0;

  double throughput_requests_per_ns() const {
    return static_cast<double>(measured_requests) / window_ns;
  }
};

namespace detail {

// Unbiased draw in [0, bound) from the raw 64-bit engine output. std::uniform_int_distribution
// is implementation-defined, so it would break cross-platform reproducibility.
inline std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t threshold = (0 - bound) % bound;
  while (true) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % bound;
  }
}

struct Completion {
  double time;
  std::uint64_t seq;
  double issued;
  std::uint32_t stream;
  std::uint32_t tier;
  bool is_write;

  bool operator>(const Completion& o) const {
    return time != o.time ? time > o.time : seq > o.seq;
  }
};

inline double nearest_rank(std::span<const double> sorted, double p) {
  const auto n = sorted.size();
  auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  return sorted[rank - 1];
}

}  // namespace detail

inline SimReport run(const SimConfig& config) {
  config.validate();
  const std::size_t tiers = config.profiles.size();

  std::vector<double> service_ns(tiers, 0.0);
  std::vector<double> pipeline_ns(tiers, 0.0);
  for (std::size_t t = 0; t < tiers; ++t) {
    if (!config.weights.active(t)) continue;
    service_ns[t] = config.transfer_bytes / bandwidth_at(config.profiles[t], config.mix);
    pipeline_ns[t] = config.profiles[t].unloaded_latency_ns;
  }

  const PageMap pages = allocate(config.page_count, config.weights);
  std::mt19937_64 rng(config.seed);

  struct StreamState {
    std::uint64_t next_page;
    std::uint64_t ops;
  };
  std::vector<StreamState> streams(config.streams);
  for (std::uint32_t s = 0; s < config.streams; ++s) {
    streams[s] = {s * config.page_count / config.streams, 0};
  }

  std::vector<double> server_free(tiers, 0.0);
  std::vector<double> scheduled_work(tiers, 0.0);
  auto busy_until = [&](double t) {
    std::vector<double> busy(tiers);
    for (std::size_t i = 0; i < tiers; ++i) {
      busy[i] = scheduled_work[i] - std::max(0.0, server_free[i] - t);
    }
    return busy;
  };

  std::priority_queue<detail::Completion, std::vector<detail::Completion>,
                      std::greater<detail::Completion>>
      events;
  std::uint64_t seq = 0;

  auto issue = [&](std::uint32_t stream, double now) {
    auto& st = streams[stream];
    std::uint64_t page;
    if (config.pattern == AccessPattern::uniform_random) {
      page = detail::bounded_draw(rng, config.page_count);
    } else {
      page = st.next_page;
      st.next_page = (st.next_page + 1) % config.page_count;
    }
    const bool is_write = st.ops % config.mix.ops_per_repeat() >= config.mix.reads();
    ++st.ops;
    const std::uint32_t tier = pages.tier_of(page);
    const double start = std::max(now, server_free[tier]);
    server_free[tier] = start + service_ns[tier];
    scheduled_work[tier] += service_ns[tier];
    events.push({server_free[tier] + pipeline_ns[tier], seq++, now, stream, tier, is_write});
  };

  for (std::uint32_t s = 0; s < config.streams; ++s) {
    for (std::uint32_t q = 0; q < config.outstanding_per_stream; ++q) issue(s, 0.0);
  }

  const std::uint64_t warmup = config.warmup();
  const std::uint64_t measured = config.measured_requests;

  SimReport report;
  report.tier_requests.assign(tiers, 0);
  report.measured_requests = measured;
  std::vector<double> latencies;
  latencies.reserve(measured);

  double window_start = 0.0;
  std::vector<double> busy_start(tiers, 0.0);
  std::vector<double> busy_end(tiers, 0.0);
  double window_end = 0.0;
  std::uint64_t completed = 0;

  while (true) {
    const auto ev = events.top();
    events.pop();
    ++completed;
    if (completed <= warmup) {
      if (completed == warmup) {
        window_start = ev.time;
        busy_start = busy_until(ev.time);
      }
    } else {
      latencies.push_back(ev.time - ev.issued);
      ++report.tier_requests[ev.tier];
      ++(ev.is_write ? report.writes : report.reads);
      if (completed == warmup + measured) {
        window_end = ev.time;
        busy_end = busy_until(ev.time);
        break;
      }
    }
    issue(ev.stream, ev.time);
  }

  report.window_ns = window_end - window_start;
  report.simulated_ns = window_end;
  if (!(report.window_ns > 0.0)) {
    throw ValidationError("measurement window has zero length; increase measured_requests");
  }
  report.achieved_gbps =
      static_cast<double>(measured) * config.transfer_bytes / report.window_ns;

  double sum = 0.0;
  for (double l : latencies) sum += l;
  report.mean_latency_ns = sum / static_cast<double>(latencies.size());
  std::sort(latencies.begin(), latencies.end());
  report.p50_latency_ns = detail::nearest_rank(latencies, 0.50);
  report.p95_latency_ns = detail::nearest_rank(latencies, 0.95);
  report.p99_latency_ns = detail::nearest_rank(latencies, 0.99);

  report.tier_utilization.resize(tiers);
  for (std::size_t t = 0; t < tiers; ++t) {
    report.tier_utilization[t] =
        std::clamp((busy_end[t] - busy_start[t]) / report.window_ns, 0.0, 1.0);
  }
  return report;
}

inline nlohmann::ordered_json to_json(const SimReport& r) {
  nlohmann::ordered_json j;
  j["achieved_gbps"] = r.achieved_gbps;
  j["mean_latency_ns"] = r.mean_latency_ns;
  j["p50_latency_ns"] = r.p50_latency_ns;
  j["p95_latency_ns"] = r.p95_latency_ns;
  j["p99_latency_ns"] = r.p99_latency_ns;
  j["tier_requests"] = r.tier_requests;
  j["tier_utilization"] = r.tier_utilization;
  j["reads"] = r.reads;
  j["writes"] = r.writes;
  j["measured_requests"] = r.measured_requests;
  j["window_ns"] = r.window_ns;
  j["simulated_ns"] = r.simulated_ns;
  return j;
}

inline std::string csv_header(std::size_t tiers) {
  std::string h = "label,achieved_gbps,mean_ns,p50_ns,p95_ns,p99_ns";
  for (std::size_t t = 0; t < tiers; ++t) h += fmt::format(",util_tier{}", t);
  return h;
}

inline std::string csv_row(std::string_view label, const SimReport& r) {
  std::string row = fmt::format("{},{:.4f},{:.4f},{:.4f},{:.4f},{:.4f}", csv_field(label), r.achieved_gbps,
                                r.mean_latency_ns, r.p50_latency_ns, r.p95_latency_ns,
                                r.p99_latency_ns);
  for (double u : r.tier_utilization) row += fmt::format(",{:.6f}", u);
  return row;
}

// Sweep axes: a concurrency level sets outstanding_per_stream, a weight vector
// replaces the interleave weights.
struct Concurrency {
  std::uint32_t outstanding_per_stream;
};
using SweepPoint = std::variant<Concurrency, InterleaveWeights>;

struct SweepResult {
  std::string label;
  std::optional<SimReport> report;
  std::string error;  // set when the point failed
};

inline std::vector<SweepResult> sweep(const SimConfig& base, std::span<const SweepPoint> axis) {
  std::vector<SweepResult> out;
  out.reserve(axis.size());
  for (std::size_t i = 0; i < axis.size(); ++i) {
    SimConfig config = base;
    config.seed = base.seed + i;
    SweepResult result;
    if (const auto* c = std::get_if<Concurrency>(&axis[i])) {
      config.outstanding_per_stream = c->outstanding_per_stream;
      result.label = fmt::format("{}x{}", config.streams, c->outstanding_per_stream);
    } else {
      config.weights = std::get<InterleaveWeights>(axis[i]);
      result.label = config.weights.label();
    }
    try {
      result.report = run(config);
    } catch (const Error& e) {
      result.error = e.what();
    }
    out.push_back(std::move(result));
  }
  return out;
}

}  // namespace memweave
