#pragma once

#include <string>
#include <vector>

#include "qof/harness.hpp"

namespace qof::sim {

struct BenchPoint {
  std::string sweep;
  std::uint64_t x = 0;  // servers, payload bytes, or delay ms
  MetricsReport qof;
  MetricsReport baseline;
};

/// Runs one sweep ("servers", "payload" or "delay") of the fair-ordering
/// stack against the plain sequencer under the identical harness, seed and
/// load generator. Returns one point per sweep value.
std::vector<BenchPoint> bench_sweep(const std::string& which,
                                    std::uint64_t seed,
                                    std::uint32_t tx_count);

std::string bench_csv(const std::vector<BenchPoint>& points);

/// Two-column-per-series data for plotting: x, qof/baseline throughput and
/// latency.
std::string bench_dat(const std::vector<BenchPoint>& points);

}  // namespace qof::sim
