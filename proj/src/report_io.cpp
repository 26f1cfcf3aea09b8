#include "mpzch/report_io.hpp"

#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace mpzch {

namespace {

using nlohmann::json;

constexpr const char* kCollisionHeader =
    "table_size,capacity_ratio,max_probe,method,collision_rate,distinct_slots,seed";
constexpr const char* kFreshnessHeader =
    "steps,first_occurrences,inheritance_count,inheritance_rate,eviction_count,"
    "collision_count,reset_audit_failures";
constexpr const char* kLatencyHeader =
    "max_probe,batch_size,num_batches,total_ids,batched_ms_per_batch,"
    "per_id_ms_per_batch,batched_ids_per_sec,per_id_ids_per_sec,speedup";

// full round-trip precision for doubles in CSV cells
std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::vector<std::string> csv_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

json record_to_json(const CollisionRecord& r) {
    return json{{"table_size", r.table_size},
                {"capacity_ratio", r.capacity_ratio},
                {"max_probe", r.max_probe},
                {"method", to_string(r.method)},
                {"collision_rate", r.collision_rate},
                {"distinct_slots", r.distinct_slots},
                {"seed", r.seed}};
}

CollisionRecord record_from_json(const json& j) {
    CollisionRecord r;
    r.table_size = j.at("table_size").get<std::uint64_t>();
    r.capacity_ratio = j.at("capacity_ratio").get<double>();
    r.max_probe = j.at("max_probe").get<std::uint32_t>();
    r.method = parse_method(j.at("method").get<std::string>());
    r.collision_rate = j.at("collision_rate").get<double>();
    r.distinct_slots = j.at("distinct_slots").get<std::uint64_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    return r;
}

json counts_to_json(const OutcomeCounts& c) {
    return json{{"found", c.found},
                {"inserted", c.inserted},
                {"evicted", c.evicted},
                {"collision", c.collision}};
}

OutcomeCounts counts_from_json(const json& j) {
    OutcomeCounts c;
    c.found = j.at("found").get<std::uint64_t>();
    c.inserted = j.at("inserted").get<std::uint64_t>();
    c.evicted = j.at("evicted").get<std::uint64_t>();
    c.collision = j.at("collision").get<std::uint64_t>();
    return c;
}

void emit_text(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    write_text_file(path, text);
}

}  // namespace

ReportFormat parse_format(const std::string& name) {
    if (name == "json") return ReportFormat::Json;
    if (name == "csv") return ReportFormat::Csv;
    throw std::invalid_argument("unknown format '" + name + "' (expected json or csv)");
}

std::string to_csv(const CollisionReport& report) {
    std::string out = kCollisionHeader;
    out += '\n';
    for (const CollisionRecord& r : report.records) {
        out += std::to_string(r.table_size) + ',' + fmt_double(r.capacity_ratio) + ',' +
               std::to_string(r.max_probe) + ',' + to_string(r.method) + ',' +
               fmt_double(r.collision_rate) + ',' + std::to_string(r.distinct_slots) +
               ',' + std::to_string(r.seed) + '\n';
    }
    return out;
}

std::string to_json_string(const CollisionReport& report) {
    json records = json::array();
    for (const CollisionRecord& r : report.records) records.push_back(record_to_json(r));
    return json{{"num_ids", report.num_ids}, {"records", std::move(records)}}.dump(2) +
           "\n";
}

CollisionReport collision_report_from_csv(const std::string& text) {
    const std::vector<std::string> lines = csv_lines(text);
    if (lines.empty() || lines[0] != kCollisionHeader)
        throw std::runtime_error("collision CSV header mismatch");
    CollisionReport report;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::vector<std::string> cells = split_csv_line(lines[i]);
        if (cells.size() != 7)
            throw std::runtime_error("collision CSV row has wrong cell count");
        CollisionRecord r;
        r.table_size = std::stoull(cells[0]);
        r.capacity_ratio = std::stod(cells[1]);
        r.max_probe = static_cast<std::uint32_t>(std::stoul(cells[2]));
        r.method = parse_method(cells[3]);
        r.collision_rate = std::stod(cells[4]);
        r.distinct_slots = std::stoull(cells[5]);
        r.seed = std::stoull(cells[6]);
        report.records.push_back(r);
    }
    return report;
}

CollisionReport collision_report_from_json(const std::string& text) {
    const json j = json::parse(text);
    CollisionReport report;
    report.num_ids = j.at("num_ids").get<std::uint64_t>();
    for (const json& rec : j.at("records")) report.records.push_back(record_from_json(rec));
    return report;
}

std::string to_csv(const FreshnessReport& r) {
    std::string out = kFreshnessHeader;
    out += '\n';
    out += std::to_string(r.steps) + ',' + std::to_string(r.first_occurrences) + ',' +
           std::to_string(r.inheritance_count) + ',' + fmt_double(r.inheritance_rate) +
           ',' + std::to_string(r.eviction_count) + ',' +
           std::to_string(r.collision_count) + ',' +
           std::to_string(r.reset_audit_failures) + '\n';
    return out;
}

std::string to_json_string(const FreshnessReport& r) {
    return json{{"steps", r.steps},
                {"first_occurrences", r.first_occurrences},
                {"inheritance_count", r.inheritance_count},
                {"inheritance_rate", r.inheritance_rate},
                {"eviction_count", r.eviction_count},
                {"collision_count", r.collision_count},
                {"reset_audit_failures", r.reset_audit_failures}}
               .dump(2) +
           "\n";
}

FreshnessReport freshness_report_from_json(const std::string& text) {
    const json j = json::parse(text);
    FreshnessReport r;
    r.steps = j.at("steps").get<std::uint64_t>();
    r.first_occurrences = j.at("first_occurrences").get<std::uint64_t>();
    r.inheritance_count = j.at("inheritance_count").get<std::uint64_t>();
    r.inheritance_rate = j.at("inheritance_rate").get<double>();
    r.eviction_count = j.at("eviction_count").get<std::uint64_t>();
    r.collision_count = j.at("collision_count").get<std::uint64_t>();
    r.reset_audit_failures = j.at("reset_audit_failures").get<std::uint64_t>();
    return r;
}

std::string to_csv(const LatencyReport& report) {
    std::string out = kLatencyHeader;
    out += '\n';
    for (const LatencyRecord& r : report.records) {
        out += std::to_string(r.max_probe) + ',' + std::to_string(r.batch_size) + ',' +
               std::to_string(r.num_batches) + ',' + std::to_string(r.total_ids) + ',' +
               fmt_double(r.batched_ms_per_batch) + ',' +
               fmt_double(r.per_id_ms_per_batch) + ',' +
               fmt_double(r.batched_ids_per_sec) + ',' +
               fmt_double(r.per_id_ids_per_sec) + ',' + fmt_double(r.speedup) + '\n';
    }
    return out;
}

std::string to_json_string(const LatencyReport& report) {
    json records = json::array();
    for (const LatencyRecord& r : report.records) {
        records.push_back(json{{"max_probe", r.max_probe},
                               {"batch_size", r.batch_size},
                               {"num_batches", r.num_batches},
                               {"total_ids", r.total_ids},
                               {"batched_ms_per_batch", r.batched_ms_per_batch},
                               {"per_id_ms_per_batch", r.per_id_ms_per_batch},
                               {"batched_ids_per_sec", r.batched_ids_per_sec},
                               {"per_id_ids_per_sec", r.per_id_ids_per_sec},
                               {"speedup", r.speedup},
                               {"batched_outcomes", counts_to_json(r.batched_outcomes)},
                               {"per_id_outcomes", counts_to_json(r.per_id_outcomes)}});
    }
    return json{{"records", std::move(records)}}.dump(2) + "\n";
}

LatencyReport latency_report_from_json(const std::string& text) {
    const json j = json::parse(text);
    LatencyReport report;
    for (const json& rec : j.at("records")) {
        LatencyRecord r;
        r.max_probe = rec.at("max_probe").get<std::uint32_t>();
        r.batch_size = rec.at("batch_size").get<std::uint64_t>();
        r.num_batches = rec.at("num_batches").get<std::uint64_t>();
        r.total_ids = rec.at("total_ids").get<std::uint64_t>();
        r.batched_ms_per_batch = rec.at("batched_ms_per_batch").get<double>();
        r.per_id_ms_per_batch = rec.at("per_id_ms_per_batch").get<double>();
        r.batched_ids_per_sec = rec.at("batched_ids_per_sec").get<double>();
        r.per_id_ids_per_sec = rec.at("per_id_ids_per_sec").get<double>();
        r.speedup = rec.at("speedup").get<double>();
        r.batched_outcomes = counts_from_json(rec.at("batched_outcomes"));
        r.per_id_outcomes = counts_from_json(rec.at("per_id_outcomes"));
        report.records.push_back(r);
    }
    return report;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << text;
    if (!out) throw std::runtime_error("cannot write " + path);
}

void emit_report(const CollisionReport& report, ReportFormat format,
                 const std::string& path) {
    emit_text(format == ReportFormat::Csv ? to_csv(report) : to_json_string(report), path);
}

void emit_report(const FreshnessReport& report, ReportFormat format,
                 const std::string& path) {
    emit_text(format == ReportFormat::Csv ? to_csv(report) : to_json_string(report), path);
}

void emit_report(const LatencyReport& report, ReportFormat format,
                 const std::string& path) {
    emit_text(format == ReportFormat::Csv ? to_csv(report) : to_json_string(report), path);
}

}  // namespace mpzch
