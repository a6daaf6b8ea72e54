// Prints the model's bandwidth for a handful of DRAM:CXL weight pairs under
// each bundled mix, normalized to DRAM only.

#include <fmt/format.h>

#include "memweave/memweave.hpp"

int main() {
  using namespace memweave;
  const auto profiles = load_profiles(MEMWEAVE_DATA_DIR "/profiles/micron_xeon6.json");
  const std::vector<InterleaveWeights> weights{{1, 0}, {1, 1}, {2, 1}, {5, 2},
                                               {3, 1}, {4, 1}, {0, 1}};
  for (const char* spec : {"1r0w", "2r1w", "1r1w", "2r1wnt"}) {
    const auto mix = parse_mix(spec);
    fmt::print("{}\n", spec);
    for (const auto& row : mlc_table(profiles, mix, weights)) {
      fmt::print("  {:>6}  {:7.2f} GB/s  {}\n", row.weights.label(), row.gbps, render2(row.normalized));
    }
  }
}
