#pragma once

// Text and image serialization of orders, plans, scans, densities and reports.

#include "mereye/eye.hpp"
#include "mereye/mer.hpp"
#include "mereye/orders.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

namespace mereye {

/// Shortest text that parses back to exactly `v`.
[[nodiscard]] std::string format_double(double v);

void write_orders_csv(std::ostream& os, const OrderResult& result);
/// Inverse of write_orders_csv; the order is re-derived against `threshold`.
[[nodiscard]] OrderResult read_orders_csv(std::istream& is, double threshold);
void write_plan_csv(std::ostream& os, const SamplingPlan& plan);
[[nodiscard]] SamplingPlan read_plan_csv(std::istream& is);
void write_scan_csv(std::ostream& os, const MerScan& scan);
void write_density_csv(std::ostream& os, const EyeDensity& density);
/// Binary PGM; log-scaled mass with the densest cell black and empty cells white.
void write_density_pgm(std::ostream& os, const EyeDensity& density);

using KeyValues = std::map<std::string, std::string>;

void write_key_values(std::ostream& os, const KeyValues& kv);
/// Parses `key = value` lines; blank lines and '#' comments are skipped.
[[nodiscard]] KeyValues read_key_values(std::istream& is);

[[nodiscard]] KeyValues metrics_report(const EyeMetrics& m);
[[nodiscard]] EyeMetrics parse_metrics_report(const KeyValues& kv);
[[nodiscard]] KeyValues comparison_report(const ComparisonReport& r);

/// Writes through a temporary file and renames it into place.
void write_file(const std::filesystem::path& path, const std::string& contents);
[[nodiscard]] std::string read_file(const std::filesystem::path& path);

}  // namespace mereye
