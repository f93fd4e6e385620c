#include "gpumux/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gpumux {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string csv_line(const CsvRow& row) {
  std::string out;
  out += std::to_string(kCsvSchemaVersion);
  out += ',' + row.workload;
  out += ',' + row.policy;
  out += ',' + std::to_string(row.replicas);
  out += ',' + std::to_string(row.batch);
  out += ',' + std::to_string(row.seed);
  out += ',' + row.status;
  if (row.status == "ok") {
    const RunMetrics& m = row.metrics;
    out += ',' + format_double(m.throughput_gflops);
    out += ',' + format_double(m.utilization);
    out += ',' + format_double(m.mean_latency * 1e3);
    out += ',' + format_double(m.p50 * 1e3);
    out += ',' + format_double(m.p99 * 1e3);
    out += ',' + format_double(m.fairness_gap);
    out += ',' + format_double(m.slo_attainment);
    out += ',' + std::to_string(m.launches);
    out += ',' + format_double(m.peak_memory);
    out += ',' + std::to_string(m.cancelled);
  } else {
    out += ",,,,,,,,,,";
  }
  return out;
}

CsvRow parse_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  while (fields.size() < 17) fields.emplace_back();
  if (fields.size() != 17) throw std::runtime_error("csv: malformed row: " + line);
  if (fields[0] != std::to_string(kCsvSchemaVersion)) {
    throw std::runtime_error("csv: unsupported schema_version '" + fields[0] + "'");
  }
  CsvRow row;
  row.workload = fields[1];
  row.policy = fields[2];
  row.replicas = std::stoll(fields[3]);
  row.batch = std::stoll(fields[4]);
  row.seed = std::stoull(fields[5]);
  row.status = fields[6];
  if (row.status == "ok") {
    row.metrics.throughput_gflops = std::stod(fields[7]);
    row.metrics.utilization = std::stod(fields[8]);
    row.metrics.mean_latency = std::stod(fields[9]) / 1e3;
    row.metrics.p50 = std::stod(fields[10]) / 1e3;
    row.metrics.p99 = std::stod(fields[11]) / 1e3;
    row.metrics.fairness_gap = std::stod(fields[12]);
    row.metrics.slo_attainment = std::stod(fields[13]);
    row.metrics.launches = std::stoll(fields[14]);
    row.metrics.peak_memory = std::stod(fields[15]);
    row.metrics.cancelled = std::stoll(fields[16]);
  }
  return row;
}

std::vector<CsvRow> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("csv: empty file " + path);
  if (line != kCsvHeader) throw std::runtime_error("csv: unexpected header in " + path);
  std::vector<CsvRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    rows.push_back(parse_csv_line(line));
  }
  return rows;
}

void write_csv(const std::string& path, const std::vector<CsvRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("csv: cannot write " + path);
  out << kCsvHeader << '\n';
  for (const CsvRow& row : rows) out << csv_line(row) << '\n';
}

}  // namespace gpumux
