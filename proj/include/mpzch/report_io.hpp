#pragma once

#include <string>

#include "mpzch/experiments.hpp"

namespace mpzch {

enum class ReportFormat { Json, Csv };

ReportFormat parse_format(const std::string& name);

// CSV schema: table_size,capacity_ratio,max_probe,method,collision_rate,
// distinct_slots,seed. Baseline rows carry max_probe 0.
std::string to_csv(const CollisionReport& report);
std::string to_json_string(const CollisionReport& report);
CollisionReport collision_report_from_csv(const std::string& text);
CollisionReport collision_report_from_json(const std::string& text);

std::string to_csv(const FreshnessReport& report);
std::string to_json_string(const FreshnessReport& report);
FreshnessReport freshness_report_from_json(const std::string& text);

std::string to_csv(const LatencyReport& report);
std::string to_json_string(const LatencyReport& report);
LatencyReport latency_report_from_json(const std::string& text);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// Render in the requested format and write to path, or to stdout when path
// is empty.
void emit_report(const CollisionReport& report, ReportFormat format,
                 const std::string& path);
void emit_report(const FreshnessReport& report, ReportFormat format,
                 const std::string& path);
void emit_report(const LatencyReport& report, ReportFormat format,
                 const std::string& path);

}  // namespace mpzch
