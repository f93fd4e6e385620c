#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gpumux/metrics.hpp"

namespace gpumux {

// Fixed, versioned sweep-output schema. Column order is part of the contract.
inline constexpr int kCsvSchemaVersion = 1;
inline constexpr const char* kCsvHeader =
    "schema_version,workload,policy,replicas,batch,seed,status,"
    "throughput_gflops,utilization,mean_ms,p50_ms,p99_ms,fairness_gap,"
    "slo_attainment,launches,peak_mem_bytes,cancelled";

struct CsvRow {
  std::string workload;
  std::string policy;
  std::int64_t replicas = 0;
  std::int64_t batch = 1;
  std::uint64_t seed = 0;
  std::string status = "ok";  // ok | oom | error
  RunMetrics metrics;         // ignored unless status == ok
};

std::string format_double(double v);  // locale-free "%.9g"
std::string csv_line(const CsvRow& row);
CsvRow parse_csv_line(const std::string& line);  // throws on malformed rows

std::vector<CsvRow> read_csv(const std::string& path);
void write_csv(const std::string& path, const std::vector<CsvRow>& rows);

}  // namespace gpumux
