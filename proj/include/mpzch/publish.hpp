#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mpzch/table.hpp"

namespace mpzch {

// Malformed or mismatched publish artifacts: bad magic, version mismatch,
// truncation, checksum failure, lineage/sequencing violations.
class PublishError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// CRC-32 (reflected, polynomial 0xEDB88320), the trailer checksum of every
// publish artifact. crc32("123456789") = 0xCBF43926.
std::uint32_t crc32(std::span<const std::uint8_t> bytes);

struct DeltaRecord {
    std::uint64_t global_row = 0;
    Id identity = kEmptySlot;
    std::vector<float> weights;
};

struct DeltaLog {
    std::uint32_t base_checksum = 0;  // trailer CRC of the snapshot this descends from
    std::uint64_t sequence = 0;       // 0, 1, 2, ... per source
    std::uint32_t dim = 0;
    std::vector<DeltaRecord> records;
};

// ---- snapshot (.mpzc): identities + weights, no metadata, no momentum ----

std::vector<std::uint8_t> serialize_snapshot(const MpzchTable& table);
MpzchTable parse_snapshot(std::span<const std::uint8_t> bytes);

// trailer CRC of an already-serialized snapshot, i.e. the lineage id that
// deltas must carry
std::uint32_t snapshot_checksum(std::span<const std::uint8_t> bytes);

void write_snapshot(const MpzchTable& table, const std::string& path);
MpzchTable read_snapshot(const std::string& path);

// ---- delta log (.mpzd): whole-row records against a snapshot lineage ----

std::vector<std::uint8_t> serialize_delta(const DeltaLog& log);
DeltaLog parse_delta(std::span<const std::uint8_t> bytes);

void write_delta(const DeltaLog& log, const std::string& path);
DeltaLog read_delta(const std::string& path);

// Lineage-checked, per-record-atomic application to a frozen replica.
// Rejects logs whose base checksum differs from the replica's, or whose
// sequence is not the next expected one.
void apply_delta(MpzchTable& replica, const DeltaLog& log);

// Producer-side cutter: pairs a snapshot lineage with successive cursors so
// each cut captures exactly the rows dirtied since the previous one.
// Construct immediately after serializing the snapshot, before any further
// mutation.
class DeltaSource {
public:
    DeltaSource(MpzchTable& table, std::uint32_t base_checksum);

    DeltaLog cut();

private:
    MpzchTable* table_;
    std::uint32_t base_checksum_;
    std::uint64_t next_sequence_ = 0;
    PublishCursor cursor_;
};

}  // namespace mpzch
