#pragma once

// Weighted page interleaving with the run-length order of the Linux
// weighted-interleave mempolicy: w0 pages on tier 0, then w1 on tier 1, ...

#include <compare>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "memweave/error.hpp"

namespace memweave {

inline constexpr std::uint32_t kMaxTierWeight = 255;
inline constexpr std::size_t kPageSize = 4096;

/// Per-tier integer page weights, aligned with ProfileSet order.
class InterleaveWeights {
 public:
  explicit InterleaveWeights(std::vector<std::uint32_t> weights) : w_(std::move(weights)) {
    if (w_.empty()) throw ValidationError("weights: empty weight list");
    for (std::size_t i = 0; i < w_.size(); ++i) {
      if (w_[i] > kMaxTierWeight) {
        throw ValidationError(
            fmt::format("weights: tier {} weight {} exceeds {}", i, w_[i], kMaxTierWeight));
      }
    }
    total_ = std::accumulate(w_.begin(), w_.end(), std::uint64_t{0});
    if (total_ == 0) throw ValidationError("weights: at least one weight must be > 0");
  }
  InterleaveWeights(std::initializer_list<std::uint32_t> weights)
      : InterleaveWeights(std::vector<std::uint32_t>(weights)) {}

  std::size_t size() const { return w_.size(); }
  std::uint32_t operator[](std::size_t tier) const { return w_[tier]; }
  std::uint64_t total() const { return total_; }
  bool active(std::size_t tier) const { return w_[tier] > 0; }
  std::span<const std::uint32_t> values() const { return w_; }

  /// `(3,1)` as used in curve labels.
  std::string label() const { return fmt::format("({})", fmt::join(w_, ",")); }
  /// `3,1` as accepted by the CLI.
  std::string spec() const { return fmt::format("{}", fmt::join(w_, ",")); }

  friend bool operator==(const InterleaveWeights& a, const InterleaveWeights& b) {
    return a.w_ == b.w_;
  }
  friend auto operator<=>(const InterleaveWeights& a, const InterleaveWeights& b) {
    return a.w_ <=> b.w_;
  }

 private:
  std::vector<std::uint32_t> w_;
  std::uint64_t total_ = 0;
};

/// Parses `3,1` (or `3:1`) into weights.
inline InterleaveWeights parse_weights(std::string_view text) {
  std::vector<std::uint32_t> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t start = pos;
    std::uint64_t value = 0;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
      value = value * 10 + static_cast<std::uint64_t>(text[pos] - '0');
      if (value > UINT32_MAX) break;
      ++pos;
    }
    if (pos == start || value > UINT32_MAX) {
      throw ParseError(fmt::format(
          "invalid weights '{}': expected comma-separated nonnegative integers, e.g. 3,1", text));
    }
    out.push_back(static_cast<std::uint32_t>(value));
    if (pos == text.size()) break;
    if (text[pos] != ',' && text[pos] != ':') {
      throw ParseError(fmt::format(
          "invalid weights '{}': expected comma-separated nonnegative integers, e.g. 3,1", text));
    }
    ++pos;
  }
  return InterleaveWeights(std::move(out));
}

inline double traffic_fraction(const InterleaveWeights& weights, std::size_t tier) {
  if (tier >= weights.size()) {
    throw ValidationError(
        fmt::format("tier index {} out of range for {} weights", tier, weights.size()));
  }
  return static_cast<double>(weights[tier]) / static_cast<double>(weights.total());
}

/// Round-robin position. A default-constructed cursor has issued nothing yet;
/// afterwards `tier` is the next tier to emit and `remaining` the pages left in
/// its run, 1..weights[tier].
struct AllocatorCursor {
  std::size_t tier = 0;
  std::uint32_t remaining = 0;

  bool fresh() const { return remaining == 0; }
  friend bool operator==(const AllocatorCursor&, const AllocatorCursor&) = default;
};

namespace detail {

inline std::size_t next_active(const InterleaveWeights& weights, std::size_t from) {
  for (std::size_t step = 0; step < weights.size(); ++step) {
    const std::size_t t = (from + step) % weights.size();
    if (weights.active(t)) return t;
  }
  return 0;  // unreachable: weights guarantee an active tier
}

}  // namespace detail

inline std::pair<std::size_t, AllocatorCursor> next_tier(AllocatorCursor cursor,
                                                          const InterleaveWeights& weights) {
  if (cursor.fresh()) {
    const std::size_t first = detail::next_active(weights, 0);
    cursor = {first, weights[first]};
  } else if (cursor.tier >= weights.size() || !weights.active(cursor.tier) ||
             cursor.remaining > weights[cursor.tier]) {
    throw ValidationError(fmt::format("allocator cursor (tier {}, remaining {}) invalid for {}",
                                      cursor.tier, cursor.remaining, weights.label()));
  }
  const std::size_t emitted = cursor.tier;
  if (--cursor.remaining == 0) {
    const std::size_t next = detail::next_active(weights, emitted + 1);
    cursor = {next, weights[next]};
  }
  return {emitted, cursor};
}

/// Page index to tier index.
class PageMap {
 public:
  PageMap() = default;
  explicit PageMap(std::vector<std::uint32_t> assignment) : tiers_(std::move(assignment)) {}

  std::size_t page_count() const { return tiers_.size(); }
  std::uint32_t tier_of(std::size_t page) const { return tiers_[page]; }
  std::span<const std::uint32_t> assignment() const { return tiers_; }

  std::vector<std::size_t> counts(std::size_t tier_count) const {
    std::vector<std::size_t> out(tier_count, 0);
    for (auto t : tiers_) ++out.at(t);
    return out;
  }

  void write_csv(std::ostream& out) const {
    out << "page_index,tier_index\n";
    for (std::size_t i = 0; i < tiers_.size(); ++i) out << i << ',' << tiers_[i] << '\n';
  }

 private:
  std::vector<std::uint32_t> tiers_;
};

inline PageMap allocate(std::size_t page_count, const InterleaveWeights& weights) {
  std::vector<std::uint32_t> assignment;
  assignment.reserve(page_count);
  AllocatorCursor cursor;
  for (std::size_t i = 0; i < page_count; ++i) {
    auto [tier, next] = next_tier(cursor, weights);
    assignment.push_back(static_cast<std::uint32_t>(tier));
    cursor = next;
  }
  return PageMap(std::move(assignment));
}

}  // namespace memweave
