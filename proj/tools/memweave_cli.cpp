// memweave command-line interface.
//
//   memweave profiles validate <path>
//   memweave predict   --mix 2r1w --weights 5,2
//   memweave recommend --mix 1r0w [--max-weight 10] [--demand 600]
//   memweave simulate  --mix 1r0w --weights 3,1 [--streams S --outstanding Q --seed N]
//   memweave sweep     --mix 1r0w [--weights-list ...] [--concurrency-list ...] --out DIR
//   memweave report    [--dataset PATH] [--mlc PATH]
//   memweave allocate  --pages N --weights 3,1
//
// Exit codes: 0 success, 1 parse/validation error, 2 infeasible load.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "CLI11.hpp"
#include "memweave/memweave.hpp"

namespace fs = std::filesystem;
using memweave::InterleaveWeights;
using memweave::ProfileSet;
using memweave::WorkloadMix;
using ojson = nlohmann::ordered_json;

namespace {

// Headline geometric-mean gain published alongside the bundled workload dataset.
constexpr double kPublishedGeomeanGain = 0.24;

enum class Format { text, json, csv };

struct Options {
  std::string profile;
  std::string format = "text";
  std::string mix;
  std::string weights;
  std::uint32_t max_weight = 10;
  std::optional<double> demand;
  std::uint32_t streams = 64;
  std::uint32_t outstanding = 64;
  std::uint64_t seed = 1;
  std::uint64_t measured = 200000;
  std::optional<std::uint64_t> warmup;
  std::uint32_t transfer_bytes = 64;
  std::uint64_t page_count = 55440;
  std::string pattern = "uniform_random";
  std::vector<std::string> weights_list{"1,0", "9,1", "5,2", "3,1"};
  std::vector<std::uint32_t> concurrency_list{1, 2, 4, 8, 16, 32, 64, 128};
  std::string out_dir;
  std::string dataset;
  std::string mlc;
  std::string validate_path;
  std::uint64_t pages = 0;
};

std::string data_path(const char* rel) { return fmt::format("{}/{}", MEMWEAVE_DATA_DIR, rel); }

ProfileSet load_default_profiles(const Options& o) {
  if (!o.profile.empty()) return memweave::load_profiles(o.profile);
  if (const char* env = std::getenv("MEMWEAVE_PROFILE"); env && *env) {
    return memweave::load_profiles(env);
  }
  return memweave::load_profiles(data_path("profiles/micron_xeon6.json"));
}

Format parse_format(const std::string& s) {
  if (s == "json") return Format::json;
  if (s == "csv") return Format::csv;
  return Format::text;
}

memweave::AccessPattern parse_pattern(const std::string& s) {
  if (s == "sequential") return memweave::AccessPattern::sequential;
  return memweave::AccessPattern::uniform_random;
}

ojson weights_json(const InterleaveWeights& w) {
  return ojson(std::vector<std::uint32_t>(w.values().begin(), w.values().end()));
}

ojson nullable(double v) { return std::isnan(v) ? ojson(nullptr) : ojson(v); }

int cmd_validate(const Options& o) {
  const auto profiles = memweave::load_profiles(o.validate_path);
  if (parse_format(o.format) == Format::json) {
    ojson j;
    j["valid"] = true;
    j["tiers"] = ojson::array();
    for (const auto& t : profiles) {
      j["tiers"].push_back({{"name", t.name},
                            {"kind", memweave::to_string(t.kind)},
                            {"points", t.points.size()},
                            {"unloaded_latency_ns", t.unloaded_latency_ns}});
    }
    std::cout << j.dump(2) << '\n';
    return 0;
  }
  fmt::print("ok: {} tier(s)\n", profiles.size());
  for (const auto& t : profiles) {
    fmt::print("  {} ({}): {} points, unloaded latency {:.1f} ns\n", t.name,
               memweave::to_string(t.kind), t.points.size(), t.unloaded_latency_ns);
  }
  return 0;
}

int cmd_predict(const Options& o) {
  const auto profiles = load_default_profiles(o);
  const auto mix = memweave::parse_mix(o.mix);
  const auto weights = memweave::parse_weights(o.weights);
  const auto p = memweave::predict_bandwidth(profiles, weights, mix);
  switch (parse_format(o.format)) {
    case Format::json: {
      ojson j;
      j["mix"] = mix.spec();
      j["weights"] = weights_json(weights);
      j["aggregate_gbps"] = p.aggregate_gbps;
      j["bottleneck"] = p.bottleneck;
      j["bottleneck_name"] = profiles[p.bottleneck].name;
      j["tiers"] = ojson::array();
      for (std::size_t i = 0; i < profiles.size(); ++i) {
        j["tiers"].push_back({{"name", profiles[i].name},
                              {"share", p.shares[i]},
                              {"gbps", nullable(p.tier_gbps[i])},
                              {"utilization", p.utilization[i]}});
      }
      std::cout << j.dump(2) << '\n';
      break;
    }
    case Format::csv:
      fmt::print("mix,weights,aggregate_gbps,bottleneck\n{},{},{:.4f},{}\n", mix.spec(),
                 memweave::csv_field(weights.spec()), p.aggregate_gbps,
                 profiles[p.bottleneck].name);
      break;
    case Format::text:
      fmt::print("{:.2f} GB/s\n", p.aggregate_gbps);
      fmt::print("bottleneck: {} (tier {})\n", profiles[p.bottleneck].name, p.bottleneck);
      for (std::size_t i = 0; i < profiles.size(); ++i) {
        if (!weights.active(i)) {
          fmt::print("  {}: inactive\n", profiles[i].name);
          continue;
        }
        fmt::print("  {}: share {:.4f}, tier bandwidth {:.2f} GB/s, utilization {:.4f}\n",
                   profiles[i].name, p.shares[i], p.tier_gbps[i], p.utilization[i]);
      }
      break;
  }
  return 0;
}

int cmd_recommend(const Options& o) {
  const auto profiles = load_default_profiles(o);
  const auto mix = memweave::parse_mix(o.mix);
  const auto fmt_kind = parse_format(o.format);

  if (o.demand) {
    const auto r = memweave::recommend_weights_for_demand(
        profiles, mix, memweave::DemandPoint(*o.demand), o.max_weight);
    if (fmt_kind == Format::json) {
      ojson j;
      j["mix"] = mix.spec();
      j["demand_gbps"] = *o.demand;
      j["max_weight"] = o.max_weight;
      j["weights"] = weights_json(r.weights);
      j["latency_ns"] = r.latency_ns;
      std::cout << j.dump(2) << '\n';
    } else if (fmt_kind == Format::csv) {
      fmt::print("mix,demand_gbps,weights,latency_ns\n{},{:.4f},{},{:.4f}\n", mix.spec(),
                 *o.demand, memweave::csv_field(r.weights.spec()), r.latency_ns);
    } else {
      fmt::print("weights: {}\nlatency: {:.2f} ns at {:.2f} GB/s\n", r.weights.spec(),
                 r.latency_ns, *o.demand);
    }
    return 0;
  }

  const auto r = memweave::recommend_weights(profiles, mix, o.max_weight);
  const auto& p = r.prediction;
  if (fmt_kind == Format::json) {
    ojson j;
    j["mix"] = mix.spec();
    j["max_weight"] = o.max_weight;
    j["weights"] = weights_json(r.weights);
    j["aggregate_gbps"] = p.aggregate_gbps;
    j["bottleneck"] = p.bottleneck;
    j["optimal_fraction"] = memweave::optimal_fraction(profiles, mix);
    std::cout << j.dump(2) << '\n';
  } else if (fmt_kind == Format::csv) {
    fmt::print("mix,weights,aggregate_gbps,bottleneck\n{},{},{:.4f},{}\n", mix.spec(),
               memweave::csv_field(r.weights.spec()), p.aggregate_gbps,
               profiles[p.bottleneck].name);
  } else {
    fmt::print("weights: {}\n", r.weights.spec());
    fmt::print("predicted: {:.2f} GB/s (bottleneck {})\n", p.aggregate_gbps,
               profiles[p.bottleneck].name);
    const auto opt = memweave::optimal_fraction(profiles, mix);
    fmt::print("optimal fractions: {:.4f}\n", fmt::join(opt, ", "));
  }
  return 0;
}

memweave::SimConfig make_sim_config(const Options& o, ProfileSet profiles,
                                    InterleaveWeights weights) {
  memweave::SimConfig c(std::move(profiles), std::move(weights), memweave::parse_mix(o.mix));
  c.streams = o.streams;
  c.outstanding_per_stream = o.outstanding;
  c.seed = o.seed;
  c.measured_requests = o.measured;
  c.warmup_requests = o.warmup;
  c.transfer_bytes = o.transfer_bytes;
  c.page_count = o.page_count;
  c.pattern = parse_pattern(o.pattern);
  return c;
}

int cmd_simulate(const Options& o) {
  const auto config =
      make_sim_config(o, load_default_profiles(o), memweave::parse_weights(o.weights));
  const auto r = memweave::run(config);
  switch (parse_format(o.format)) {
    case Format::json: {
      ojson j;
      j["config"] = {{"mix", config.mix.spec()},
                     {"weights", weights_json(config.weights)},
                     {"streams", config.streams},
                     {"outstanding_per_stream", config.outstanding_per_stream},
                     {"transfer_bytes", config.transfer_bytes},
                     {"page_count", config.page_count},
                     {"pattern", memweave::to_string(config.pattern)},
                     {"warmup_requests", config.warmup()},
                     {"measured_requests", config.measured_requests},
                     {"seed", config.seed}};
      j["report"] = memweave::to_json(r);
      std::cout << j.dump(2) << '\n';
      break;
    }
    case Format::csv:
      fmt::print("{}\n{}\n", memweave::csv_header(config.profiles.size()),
                 memweave::csv_row(config.weights.label(), r));
      break;
    case Format::text:
      fmt::print("achieved: {:.2f} GB/s\n", r.achieved_gbps);
      fmt::print("latency: mean {:.2f} ns, p50 {:.2f}, p95 {:.2f}, p99 {:.2f}\n",
                 r.mean_latency_ns, r.p50_latency_ns, r.p95_latency_ns, r.p99_latency_ns);
      for (std::size_t t = 0; t < config.profiles.size(); ++t) {
        fmt::print("  {}: {} requests, utilization {:.4f}\n", config.profiles[t].name,
                   r.tier_requests[t], r.tier_utilization[t]);
      }
      fmt::print("simulated: {:.1f} ns ({} measured requests)\n", r.simulated_ns,
                 r.measured_requests);
      break;
  }
  return 0;
}

int cmd_sweep(const Options& o) {
  const auto profiles = load_default_profiles(o);
  const auto mix = memweave::parse_mix(o.mix);
  if (o.out_dir.empty()) throw memweave::ValidationError("sweep needs --out DIR");
  fs::create_directories(o.out_dir);

  std::vector<InterleaveWeights> weights;
  for (const auto& w : o.weights_list) weights.push_back(memweave::parse_weights(w));
  if (weights.empty()) throw memweave::ValidationError("empty --weights-list");

  std::vector<memweave::SweepPoint> axis;
  for (auto c : o.concurrency_list) axis.emplace_back(memweave::Concurrency{c});

  std::string sweep_csv = memweave::csv_header(profiles.size()) + "\n";
  // Best achieved bandwidth per concurrency level, labeled with its weights.
  std::vector<std::optional<std::pair<memweave::SimReport, InterleaveWeights>>> best(axis.size());
  int failures = 0;
  for (const auto& w : weights) {
    const auto base = make_sim_config(o, profiles, w);
    const auto results = memweave::sweep(base, axis);
    for (std::size_t i = 0; i < results.size(); ++i) {
      const auto& res = results[i];
      if (!res.report) {
        fmt::print(stderr, "{} {}: {}\n", w.label(), res.label, res.error);
        ++failures;
        continue;
      }
      sweep_csv += memweave::csv_row(fmt::format("{}@{}", w.label(), res.label), *res.report) + "\n";
      if (!best[i] || res.report->achieved_gbps > best[i]->first.achieved_gbps) {
        best[i].emplace(*res.report, w);
      }
    }
  }
  {
    std::ofstream out(fs::path(o.out_dir) / "sweep.csv", std::ios::binary);
    out << sweep_csv;
  }

  std::vector<memweave::CurvePoint> sim_curve;
  for (const auto& b : best) {
    if (b) sim_curve.push_back({b->first.achieved_gbps, b->first.mean_latency_ns, b->second.label()});
  }
  if (!sim_curve.empty()) {
    memweave::emit_curve(sim_curve, fs::path(o.out_dir) / "sim_curve",
                         fmt::format("Simulated bandwidth vs latency, mix {}", mix.spec()));
  }

  // Analytic curve: latency-optimal weights over a demand grid up to 99% of the
  // best predicted bandwidth.
  const auto cap = memweave::recommend_weights(profiles, mix, o.max_weight).prediction.aggregate_gbps;
  std::vector<memweave::CurvePoint> analytic_curve;
  constexpr int kGrid = 24;
  for (int i = 1; i <= kGrid; ++i) {
    const double demand = 0.99 * cap * i / kGrid;
    const auto r = memweave::recommend_weights_for_demand(profiles, mix, memweave::DemandPoint(demand),
                                                          o.max_weight);
    analytic_curve.push_back({demand, r.latency_ns, r.weights.label()});
  }
  memweave::emit_curve(analytic_curve, fs::path(o.out_dir) / "analytic_curve",
                       fmt::format("Model latency-optimal weights, mix {}", mix.spec()));

  fmt::print("wrote {}/sweep.csv, sim_curve.{{csv,svg}}, analytic_curve.{{csv,svg}}\n", o.out_dir);
  return failures == 0 ? 0 : 1;
}

int cmd_report(const Options& o) {
  const auto rows = memweave::load_workloads(
      o.dataset.empty() ? data_path("data/paper_workloads.json") : o.dataset);
  const auto summary = memweave::summarize(rows);
  const auto profiles = load_default_profiles(o);
  const auto tables = memweave::load_measured_tables(
      o.mlc.empty() ? data_path("data/mlc_tables.json") : o.mlc);

  if (parse_format(o.format) == Format::json) {
    ojson j;
    j["workloads"] = ojson::array();
    for (std::size_t r = 0; r < summary.rows.size(); ++r) {
      ojson row;
      row["workload"] = summary.rows[r].workload;
      row["metric"] = summary.rows[r].metric;
      row["speedups"] = ojson::object();
      for (const auto& s : memweave::speedups(summary.rows[r])) row["speedups"][s.weights.spec()] = s.value;
      row["best_weights"] = summary.best[r].weights.spec();
      row["best_speedup"] = summary.best[r].value;
      j["workloads"].push_back(row);
    }
    j["geomean_best_speedup"] = summary.geomean_best;
    j["published_geomean_gain"] = kPublishedGeomeanGain;
    j["mlc"] = ojson::array();
    for (const auto& t : tables) {
      const auto measured = memweave::normalize_table(t.rows);
      ojson jt;
      jt["label"] = t.label;
      jt["mix"] = t.mix.spec();
      jt["rows"] = ojson::array();
      for (const auto& m : measured) {
        const double model = memweave::predict_bandwidth(profiles, m.weights, t.mix).aggregate_gbps;
        jt["rows"].push_back({{"weights", m.weights.spec()},
                              {"measured_gbps", m.gbps},
                              {"measured_normalized", m.normalized},
                              {"model_gbps", model}});
      }
      j["mlc"].push_back(jt);
    }
    std::cout << j.dump(2) << '\n';
    return 0;
  }

  for (std::size_t r = 0; r < summary.rows.size(); ++r) {
    const auto& row = summary.rows[r];
    fmt::print("{} ({}, {} is better)\n", row.workload, row.metric,
               row.direction == memweave::MetricDirection::lower_is_better ? "lower" : "higher");
    fmt::print("  {:>8} {:>10} {:>8}\n", "weights", "value", "speedup");
    const auto sp = memweave::speedups(row);
    fmt::print("  {:>8} {:>10g} {:>8}\n", sp[0].weights.spec(), row.baseline,
               memweave::render2(sp[0].value));
    for (std::size_t v = 0; v < row.variants.size(); ++v) {
      fmt::print("  {:>8} {:>10g} {:>8}\n", row.variants[v].first.spec(), row.variants[v].second,
                 memweave::render2(sp[v + 1].value));
    }
    fmt::print("  best: {} -> {}\n\n", summary.best[r].weights.spec(),
               memweave::render2(summary.best[r].value));
  }
  fmt::print("geometric mean of best speedups: {:.4f} (published headline: {:.0f}%)\n\n",
             summary.geomean_best, kPublishedGeomeanGain * 100);

  for (const auto& t : tables) {
    fmt::print("MLC {} ({})\n", t.label, t.mix.spec());
    fmt::print("  {:>8} {:>9} {:>6} {:>9} {:>6} {:>7}\n", "weights", "measured", "norm", "model",
               "norm", "error");
    const auto measured = memweave::normalize_table(t.rows);
    std::vector<InterleaveWeights> ws;
    for (const auto& m : measured) ws.push_back(m.weights);
    const auto model = memweave::mlc_table(profiles, t.mix, ws);
    for (std::size_t i = 0; i < measured.size(); ++i) {
      fmt::print("  {:>8} {:>9.0f} {:>6} {:>9.2f} {:>6} {:>6.1f}%\n", measured[i].weights.spec(),
                 measured[i].gbps, memweave::render2(measured[i].normalized), model[i].gbps,
                 memweave::render2(model[i].normalized),
                 100.0 * (model[i].gbps - measured[i].gbps) / measured[i].gbps);
    }
    fmt::print("\n");
  }
  return 0;
}

int cmd_allocate(const Options& o) {
  const auto map = memweave::allocate(o.pages, memweave::parse_weights(o.weights));
  map.write_csv(std::cout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"memweave: weighted DRAM/CXL interleaving model and simulator"};
  app.require_subcommand(1);
  app.fallthrough();

  Options o;
  app.add_option("--profile", o.profile, "Profile JSON (default: $MEMWEAVE_PROFILE or bundled)");
  app.add_option("--format", o.format, "Output format")
      ->check(CLI::IsMember({"text", "json", "csv"}));

  auto* profiles_cmd = app.add_subcommand("profiles", "Profile file utilities");
  profiles_cmd->require_subcommand(1);
  auto* validate_cmd = profiles_cmd->add_subcommand("validate", "Parse and validate a profile file");
  validate_cmd->add_option("path", o.validate_path, "Profile JSON")->required();

  auto* predict_cmd = app.add_subcommand("predict", "Predict interleaved bandwidth");
  predict_cmd->add_option("--mix", o.mix, "Mix, e.g. 2r1w, 1r0w, 2r1wnt")->required();
  predict_cmd->add_option("--weights", o.weights, "Weights, e.g. 3,1")->required();

  auto* recommend_cmd = app.add_subcommand("recommend", "Search integer weights");
  recommend_cmd->add_option("--mix", o.mix, "Mix")->required();
  recommend_cmd->add_option("--max-weight", o.max_weight, "Largest weight per tier")
      ->check(CLI::Range(1u, memweave::kMaxTierWeight));
  recommend_cmd->add_option("--demand", o.demand,
                            "Offered GB/s; minimize latency instead of maximizing bandwidth");

  auto add_sim_options = [&](CLI::App* cmd) {
    cmd->add_option("--mix", o.mix, "Mix")->required();
    cmd->add_option("--streams", o.streams, "Load-generating streams")->check(CLI::PositiveNumber);
    cmd->add_option("--outstanding", o.outstanding, "In-flight requests per stream")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--seed", o.seed, "Random seed");
    cmd->add_option("--measured", o.measured, "Measured requests")->check(CLI::PositiveNumber);
    cmd->add_option("--warmup", o.warmup, "Warmup requests (default: larger of 10% of measured and 32 per in-flight request)");
    cmd->add_option("--transfer-bytes", o.transfer_bytes, "Bytes per request")
        ->check(CLI::Range(1u, 4096u));
    cmd->add_option("--page-count", o.page_count, "Pages in the interleaved region")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--pattern", o.pattern, "Page pattern")
        ->check(CLI::IsMember({"uniform_random", "sequential"}));
  };

  auto* simulate_cmd = app.add_subcommand("simulate", "Run the closed-loop simulator");
  add_sim_options(simulate_cmd);
  simulate_cmd->add_option("--weights", o.weights, "Weights, e.g. 3,1")->required();

  auto* sweep_cmd = app.add_subcommand("sweep", "Bandwidth-latency sweep, writes CSV and SVG");
  add_sim_options(sweep_cmd);
  sweep_cmd->add_option("--weights-list", o.weights_list, "Weight vectors, e.g. 1,0 3,1");
  sweep_cmd->add_option("--concurrency-list", o.concurrency_list, "Outstanding-per-stream levels");
  sweep_cmd->add_option("--max-weight", o.max_weight, "Largest weight for the analytic curve")
      ->check(CLI::Range(1u, memweave::kMaxTierWeight));
  sweep_cmd->add_option("--out", o.out_dir, "Output directory")->required();

  auto* report_cmd = app.add_subcommand("report", "Speedup and bandwidth tables");
  report_cmd->add_option("--dataset", o.dataset, "Workload results JSON");
  report_cmd->add_option("--mlc", o.mlc, "Measured MLC tables JSON");

  auto* allocate_cmd = app.add_subcommand("allocate", "Print the page map as CSV");
  allocate_cmd->add_option("--pages", o.pages, "Page count")->required();
  allocate_cmd->add_option("--weights", o.weights, "Weights, e.g. 3,1")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    std::cerr << app.help();
    return 1;
  }

  try {
    if (validate_cmd->parsed()) return cmd_validate(o);
    if (predict_cmd->parsed()) return cmd_predict(o);
    if (recommend_cmd->parsed()) return cmd_recommend(o);
    if (simulate_cmd->parsed()) return cmd_simulate(o);
    if (sweep_cmd->parsed()) return cmd_sweep(o);
    if (report_cmd->parsed()) return cmd_report(o);
    if (allocate_cmd->parsed()) return cmd_allocate(o);
  } catch (const memweave::InfeasibleError& e) {
    fmt::print(stderr, "infeasible: {}\n", e.what());
    return 2;
  } catch (const memweave::Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 1;
}
