#include "qof/bench.hpp"

#include <sstream>

namespace qof::sim {

namespace {

Scenario bench_scenario(std::uint32_t n, std::uint32_t payload,
                        std::uint64_t delay_ms, std::uint64_t seed,
                        std::uint32_t tx_count) {
  Scenario sc;
  sc.config.n = n;
  sc.config.f = (n - 1) / 3;
  sc.config.kappa = 0;
  sc.config.round_trigger = 1;
  sc.config.batch_cap = 32;
  sc.seed = seed;
  sc.tx_count = tx_count;
  sc.payload_size = payload;
  sc.d_min_us = delay_ms * 1000;
  sc.d_max_us = delay_ms * 1000 + 2000;
  sc.jitter_us = 2000;
  sc.inject_window_us = 500'000;
  sc.relay_delay_us = 50'000;
  sc.duration_us = 600'000'000;
  return sc;
}

BenchPoint run_point(const std::string& sweep, std::uint64_t x, Scenario sc) {
  BenchPoint p;
  p.sweep = sweep;
  p.x = x;
  sc.name = sweep + "-" + std::to_string(x) + "-qof";
  sc.baseline = false;
  p.qof = run(sc).metrics;
  sc.name = sweep + "-" + std::to_string(x) + "-baseline";
  sc.baseline = true;
  p.baseline = run(sc).metrics;
  return p;
}

}  // namespace

std::vector<BenchPoint> bench_sweep(const std::string& which,
                                    std::uint64_t seed,
                                    std::uint32_t tx_count) {
  std::vector<BenchPoint> points;
  if (which == "servers") {
    for (std::uint32_t n : {4u, 8u, 16u})
      points.push_back(
          run_point(which, n, bench_scenario(n, 256, 1, seed, tx_count)));
  } else if (which == "payload") {
    for (std::uint32_t payload : {256u, 512u, 1024u, 2048u})
      points.push_back(run_point(
          which, payload, bench_scenario(4, payload, 1, seed, tx_count)));
  } else if (which == "delay") {
    for (std::uint64_t d : {0u, 5u, 10u, 20u})
      points.push_back(
          run_point(which, d, bench_scenario(4, 256, d, seed, tx_count)));
  } else {
    throw ConfigError("unknown sweep: " + which +
                      " (expected servers|payload|delay)");
  }
  return points;
}

std::string bench_csv(const std::vector<BenchPoint>& points) {
  std::ostringstream os;
  os << "sweep,x,mode," << MetricsReport::csv_header() << "\n";
  for (const auto& p : points) {
    os << p.sweep << "," << p.x << ",qof," << p.qof.csv_row() << "\n";
    os << p.sweep << "," << p.x << ",baseline," << p.baseline.csv_row()
       << "\n";
  }
  return os.str();
}

std::string bench_dat(const std::vector<BenchPoint>& points) {
  std::ostringstream os;
  os << "# x qof_tput base_tput qof_lat_ms base_lat_ms\n";
  for (const auto& p : points)
    os << p.x << " " << p.qof.throughput_tps << " "
       << p.baseline.throughput_tps << " " << p.qof.lat_mean_ms << " "
       << p.baseline.lat_mean_ms << "\n";
  return os.str();
}

}  // namespace qof::sim
