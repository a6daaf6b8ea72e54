#pragma once

// Workload mixes, per-tier bandwidth calibration, and the profile file format.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "json.hpp"
#include "memweave/error.hpp"

namespace memweave {

enum class WriteKind { regular, non_temporal };

inline std::string_view to_string(WriteKind kind) {
  return kind == WriteKind::regular ? "regular" : "non_temporal";
}

/// Read:write pattern of a workload, e.g. 2 reads and 1 write per repeat.
class WorkloadMix {
 public:
  WorkloadMix(std::uint32_t reads, std::uint32_t writes,
              WriteKind kind = WriteKind::regular, std::string label = {})
      : reads_(reads), writes_(writes), kind_(kind), label_(std::move(label)) {
    if (std::uint64_t{reads} + writes == 0) {
      throw ValidationError("workload mix needs at least one read or write");
    }
    if (kind == WriteKind::non_temporal && writes == 0) {
      throw ValidationError("non-temporal mix needs at least one write");
    }
  }

  static WorkloadMix read_only() { return WorkloadMix(1, 0); }

  std::uint32_t reads() const { return reads_; }
  std::uint32_t writes() const { return writes_; }
  std::uint64_t ops_per_repeat() const { return std::uint64_t{reads_} + writes_; }
  WriteKind write_kind() const { return kind_; }
  const std::string& label() const { return label_; }
  bool is_read_only() const { return writes_ == 0; }

  double read_fraction() const {
    return static_cast<double>(reads_) / static_cast<double>(ops_per_repeat());
  }

  /// Exact rational comparison of read fractions (2r1w == 4r2w).
  bool same_read_fraction(const WorkloadMix& other) const {
    return std::uint64_t{reads_} * other.ops_per_repeat() ==
           std::uint64_t{other.reads_} * ops_per_repeat();
  }

  /// Same (read_fraction, write_kind) key; read-only mixes ignore write kind.
  bool same_key(const WorkloadMix& other) const {
    if (!same_read_fraction(other)) return false;
    return is_read_only() || kind_ == other.kind_;
  }

  /// Canonical `<R>r<W>w[nt]` spelling.
  std::string spec() const {
    return fmt::format("{}r{}w{}", reads_, writes_,
                       kind_ == WriteKind::non_temporal ? "nt" : "");
  }

 private:
  std::uint32_t reads_;
  std::uint32_t writes_;
  WriteKind kind_;
  std::string label_;
};

/// Parses `<R>r<W>w[nt]`, e.g. `2r1w`, `1r0w`, `2r1wnt`.
inline WorkloadMix parse_mix(std::string_view text) {
  auto fail = [&]() -> ParseError {
    return ParseError(fmt::format("invalid mix '{}': expected <R>r<W>w[nt], e.g. 2r1w", text));
  };
  auto read_uint = [&](std::size_t& pos) {
    const std::size_t start = pos;
    std::uint64_t value = 0;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
      value = value * 10 + static_cast<std::uint64_t>(text[pos] - '0');
      if (value > UINT32_MAX) throw fail();
      ++pos;
    }
    if (pos == start) throw fail();
    return static_cast<std::uint32_t>(value);
  };

  std::size_t pos = 0;
  const auto reads = read_uint(pos);
  if (pos >= text.size() || text[pos] != 'r') throw fail();
  ++pos;
  const auto writes = read_uint(pos);
  if (pos >= text.size() || text[pos] != 'w') throw fail();
  ++pos;
  auto kind = WriteKind::regular;
  const auto rest = text.substr(pos);
  if (rest == "nt") {
    kind = WriteKind::non_temporal;
  } else if (!rest.empty()) {
    throw fail();
  }
  return WorkloadMix(reads, writes, kind);
}

enum class TierKind { dram, cxl, other };

inline std::string_view to_string(TierKind kind) {
  switch (kind) {
    case TierKind::dram: return "dram";
    case TierKind::cxl: return "cxl";
    case TierKind::other: break;
  }
  return "other";
}

struct CalibrationPoint {
  WorkloadMix mix;
  double gbps;  // decimal GB/s
};

struct TierProfile {
  std::string name;
  TierKind kind = TierKind::other;
  std::vector<CalibrationPoint> points;
  double unloaded_latency_ns = 0.0;

  void validate() const {
    if (points.empty()) {
      throw ValidationError(fmt::format("tier '{}': no calibration points", name));
    }
    if (!(unloaded_latency_ns > 0.0)) {
      throw ValidationError(
          fmt::format("tier '{}': unloaded_latency_ns must be > 0", name));
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto& p = points[i];
      if (!(p.gbps > 0.0)) {
        throw ValidationError(fmt::format("tier '{}', point {} ({}): bandwidth must be > 0",
                                          name, i, p.mix.spec()));
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (points[j].mix.same_key(p.mix)) {
          throw ValidationError(fmt::format(
              "tier '{}', point {} ({}): duplicates point {} (read_fraction {:.6g}, {})", name,
              i, p.mix.spec(), j, p.mix.read_fraction(), to_string(p.mix.write_kind())));
        }
      }
    }
  }
};

/// Ordered tiers; index 0 is the lowest-latency tier by convention.
class ProfileSet {
 public:
  explicit ProfileSet(std::vector<TierProfile> tiers) : tiers_(std::move(tiers)) {
    if (tiers_.empty()) throw ValidationError("profile set has no tiers");
    std::unordered_set<std::string> names;
    for (const auto& tier : tiers_) {
      tier.validate();
      if (!names.insert(tier.name).second) {
        throw ValidationError(fmt::format("duplicate tier name '{}'", tier.name));
      }
    }
  }

  std::size_t size() const { return tiers_.size(); }
  const TierProfile& operator[](std::size_t i) const { return tiers_[i]; }
  const TierProfile& at(std::size_t i) const { return tiers_.at(i); }
  auto begin() const { return tiers_.begin(); }
  auto end() const { return tiers_.end(); }

 private:
  std::vector<TierProfile> tiers_;
};

/// Sustained bandwidth of `profile` under `mix`, in GB/s.
///
/// Calibration points match exactly on (read_fraction, write_kind). Between
/// points the value is piecewise-linear in read_fraction within the family of
/// points sharing the mix's write kind; read-only points belong to every
/// family. Nothing is extrapolated past the family's calibrated interval.
inline double bandwidth_at(const TierProfile& profile, const WorkloadMix& mix) {
  std::vector<const CalibrationPoint*> family;
  bool has_kind_with_writes = false;
  for (const auto& p : profile.points) {
    if (p.mix.same_key(mix)) return p.gbps;
    if (p.mix.is_read_only() || p.mix.write_kind() == mix.write_kind()) {
      family.push_back(&p);
      has_kind_with_writes |= !p.mix.is_read_only();
    }
  }
  if (!mix.is_read_only() && !has_kind_with_writes) {
    throw MissingWriteKindFamily(fmt::format("tier '{}': no {} calibration points for mix {}",
                                             profile.name, to_string(mix.write_kind()),
                                             mix.spec()));
  }
  if (family.empty()) {
    throw MissingWriteKindFamily(
        fmt::format("tier '{}': no calibration points for mix {}", profile.name, mix.spec()));
  }

  std::sort(family.begin(), family.end(), [](const auto* a, const auto* b) {
    return a->mix.read_fraction() < b->mix.read_fraction();
  });
  const double x = mix.read_fraction();
  const double lo_x = family.front()->mix.read_fraction();
  const double hi_x = family.back()->mix.read_fraction();
  if (x < lo_x || x > hi_x) {
    throw OutOfCalibrationRange(fmt::format(
        "tier '{}': mix {} has read fraction {:.6g}, outside calibrated range [{:.6g}, {:.6g}]",
        profile.name, mix.spec(), x, lo_x, hi_x));
  }
  // x lies strictly inside one segment; exact hits returned above.
  for (std::size_t i = 1; i < family.size(); ++i) {
    const auto& lo = *family[i - 1];
    const auto& hi = *family[i];
    const double x0 = lo.mix.read_fraction();
    const double x1 = hi.mix.read_fraction();
    if (x <= x1) {
      const double t = (x - x0) / (x1 - x0);
      return lo.gbps + t * (hi.gbps - lo.gbps);
    }
  }
  return family.back()->gbps;
}

namespace detail {

inline std::string_view require_string(const nlohmann::json& j, const char* key,
                                       const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_string()) {
    throw ParseError(fmt::format("{}: missing string field '{}'", where, key));
  }
  return j.at(key).get_ref<const std::string&>();
}

inline double require_number(const nlohmann::json& j, const char* key,
                             const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw ParseError(fmt::format("{}: missing numeric field '{}'", where, key));
  }
  return j.at(key).get<double>();
}

inline std::uint32_t require_count(const nlohmann::json& j, const char* key,
                                   const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_number_unsigned()) {
    throw ParseError(fmt::format("{}: field '{}' must be a nonnegative integer", where, key));
  }
  const auto v = j.at(key).get<std::uint64_t>();
  if (v > UINT32_MAX) throw ParseError(fmt::format("{}: field '{}' too large", where, key));
  return static_cast<std::uint32_t>(v);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline nlohmann::ordered_json parse_json(const std::string& text, std::string_view source) {
  try {
    return nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(fmt::format("{}: {}", source, e.what()));
  }
}

}  // namespace detail

/// Builds a ProfileSet from the `{"tiers": [...]}` document.
inline ProfileSet parse_profiles(const nlohmann::ordered_json& doc, std::string_view source) {
  if (!doc.is_object() || !doc.contains("tiers") || !doc.at("tiers").is_array()) {
    throw ParseError(fmt::format("{}: top level must be an object with a 'tiers' array", source));
  }
  std::vector<TierProfile> tiers;
  for (std::size_t t = 0; t < doc.at("tiers").size(); ++t) {
    const auto& jt = doc.at("tiers")[t];
    const std::string where = fmt::format("{}: tiers[{}]", source, t);
    if (!jt.is_object()) throw ParseError(where + ": not an object");

    TierProfile tier;
    tier.name = std::string(detail::require_string(jt, "name", where));
    const auto kind = detail::require_string(jt, "kind", where);
    if (kind == "dram") {
      tier.kind = TierKind::dram;
    } else if (kind == "cxl") {
      tier.kind = TierKind::cxl;
    } else if (kind == "other") {
      tier.kind = TierKind::other;
    } else {
      throw ParseError(fmt::format("{}: unknown kind '{}'", where, kind));
    }
    tier.unloaded_latency_ns = detail::require_number(jt, "unloaded_latency_ns", where);
    if (!jt.contains("points") || !jt.at("points").is_array()) {
      throw ParseError(where + ": missing 'points' array");
    }
    for (std::size_t i = 0; i < jt.at("points").size(); ++i) {
      const auto& jp = jt.at("points")[i];
      const std::string pwhere = fmt::format("{} ('{}'), points[{}]", where, tier.name, i);
      if (!jp.is_object()) throw ParseError(pwhere + ": not an object");
      const auto reads = detail::require_count(jp, "reads", pwhere);
      const auto writes = detail::require_count(jp, "writes", pwhere);
      const auto wk = detail::require_string(jp, "write_kind", pwhere);
      WriteKind write_kind;
      if (wk == "regular") {
        write_kind = WriteKind::regular;
      } else if (wk == "non_temporal") {
        write_kind = WriteKind::non_temporal;
      } else {
        throw ParseError(fmt::format("{}: unknown write_kind '{}'", pwhere, wk));
      }
      std::string label;
      if (jp.contains("label")) label = std::string(detail::require_string(jp, "label", pwhere));
      const double gbps = detail::require_number(jp, "gbps", pwhere);
      try {
        tier.points.push_back({WorkloadMix(reads, writes, write_kind, std::move(label)), gbps});
      } catch (const ValidationError& e) {
        throw ValidationError(fmt::format("{}: {}", pwhere, e.what()));
      }
    }
    tiers.push_back(std::move(tier));
  }
  try {
    return ProfileSet(std::move(tiers));
  } catch (const ValidationError& e) {
    throw ValidationError(fmt::format("{}: {}", source, e.what()));
  }
}

inline ProfileSet load_profiles(const std::filesystem::path& path) {
  const auto text = detail::read_file(path);
  return parse_profiles(detail::parse_json(text, path.string()), path.string());
}

}  // namespace memweave
