#include "mpzch/publish.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace mpzch {

namespace {

constexpr std::uint32_t kFormatVersion = 1;
constexpr std::array<std::uint8_t, 4> kSnapshotMagic{'M', 'P', 'Z', 'C'};
constexpr std::array<std::uint8_t, 4> kDeltaMagic{'M', 'P', 'Z', 'D'};

// All multi-byte values are little-endian regardless of host order.
class ByteWriter {
public:
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void magic(const std::array<std::uint8_t, 4>& m) {
        bytes_.insert(bytes_.end(), m.begin(), m.end());
    }

    // appends the CRC of everything written so far
    void trailer() { u32(crc32(bytes_)); }

    std::vector<std::uint8_t> take() { return std::move(bytes_); }

private:
    std::vector<std::uint8_t> bytes_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint32_t u32() {
        require(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::uint64_t u64() {
        require(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }

    void expect_magic(const std::array<std::uint8_t, 4>& m, const char* what) {
        require(4);
        if (std::memcmp(bytes_.data() + pos_, m.data(), 4) != 0)
            throw PublishError(std::string("bad magic; not a ") + what + " file");
        pos_ += 4;
    }

    // guards length-prefixed sections against overflowing size arithmetic
    void require_count(std::uint64_t count, std::size_t elem_size) const {
        if (count > remaining() / elem_size) throw PublishError("truncated file");
    }

    std::size_t remaining() const { return bytes_.size() - pos_; }
    std::size_t pos() const { return pos_; }

private:
    void require(std::size_t n) const {
        if (remaining() < n) throw PublishError("truncated file");
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

void check_trailer(std::span<const std::uint8_t> bytes, ByteReader& reader) {
    if (reader.remaining() != 4) throw PublishError("truncated file");
    const std::uint32_t stored = reader.u32();
    const std::uint32_t computed = crc32(bytes.first(bytes.size() - 4));
    if (stored != computed) throw PublishError("checksum failure");
}

void check_version(std::uint32_t version) {
    if (version != kFormatVersion)
        throw PublishError("unsupported format version " + std::to_string(version));
}

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PublishError("cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) throw PublishError("cannot read " + path);
    return bytes;
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw PublishError("cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw PublishError("cannot write " + path);
}

}  // namespace

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
    static const std::array<std::uint32_t, 256> table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t crc = 0xFFFFFFFFu;
    for (std::uint8_t b : bytes) crc = table[(crc ^ b) & 0xFFu] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

std::vector<std::uint8_t> serialize_snapshot(const MpzchTable& table) {
    if (!table.has_embeddings())
        throw std::logic_error("index-only tables (dim = 0) cannot be published");
    const TableLayout& layout = table.layout();
    ByteWriter w;
    w.magic(kSnapshotMagic);
    w.u32(kFormatVersion);
    w.u64(layout.seed);
    w.u32(table.max_probe());
    w.u32(table.dim());
    w.u32(layout.num_shards());
    for (std::uint64_t cap : layout.shard_capacities) w.u64(cap);

    w.u64(table.total_rows());
    for (std::uint32_t s = 0; s < layout.num_shards(); ++s) {
        const IdentityArray& ids = table.identities(s);
        for (std::uint64_t i = 0; i < ids.size(); ++i) w.u64(ids[i]);
    }

    const EmbeddingTable& emb = table.embeddings();
    w.u64(emb.weights_count());
    for (std::uint64_t i = 0; i < emb.weights_count(); ++i) w.f32(emb.weights_data()[i]);

    w.trailer();
    return w.take();
}

std::uint32_t snapshot_checksum(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4) throw PublishError("truncated file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v |= static_cast<std::uint32_t>(bytes[bytes.size() - 4 + i]) << (8 * i);
    return v;
}

MpzchTable parse_snapshot(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    r.expect_magic(kSnapshotMagic, "snapshot");
    check_version(r.u32());
    const std::uint64_t seed = r.u64();
    const std::uint32_t max_probe = r.u32();
    const std::uint32_t dim = r.u32();
    const std::uint32_t num_shards = r.u32();
    if (dim == 0) throw PublishError("snapshot dim must be >= 1");
    if (num_shards == 0) throw PublishError("snapshot must have at least one shard");

    r.require_count(num_shards, 8);
    std::vector<std::uint64_t> capacities(num_shards);
    for (std::uint32_t s = 0; s < num_shards; ++s) capacities[s] = r.u64();
    TableLayout layout = TableLayout::with_capacities(std::move(capacities), seed);

    const std::uint64_t identity_count = r.u64();
    if (identity_count != layout.total_rows())
        throw PublishError("identity section does not match the layout");
    r.require_count(identity_count, 8);
    std::vector<IdentityArray> identities;
    identities.reserve(num_shards);
    for (std::uint32_t s = 0; s < num_shards; ++s) {
        IdentityArray arr(layout.shard_capacities[s]);
        for (std::uint64_t i = 0; i < arr.size(); ++i) arr[i] = r.u64();
        identities.push_back(std::move(arr));
    }

    const std::uint64_t weight_count = r.u64();
    if (weight_count / dim != layout.total_rows() || weight_count % dim != 0)
        throw PublishError("weight section does not match the layout");
    r.require_count(weight_count, 4);
    std::vector<float> weights(weight_count);
    for (std::uint64_t i = 0; i < weight_count; ++i) weights[i] = r.f32();

    check_trailer(bytes, r);

    EmbeddingTable emb =
        EmbeddingTable::weights_only(layout.total_rows(), dim, std::move(weights));
    return MpzchTable::frozen_from_parts(std::move(layout), max_probe, std::move(identities),
                                         std::move(emb), snapshot_checksum(bytes));
}

void write_snapshot(const MpzchTable& table, const std::string& path) {
    write_file(path, serialize_snapshot(table));
}

MpzchTable read_snapshot(const std::string& path) { return parse_snapshot(read_file(path)); }

std::vector<std::uint8_t> serialize_delta(const DeltaLog& log) {
    ByteWriter w;
    w.magic(kDeltaMagic);
    w.u32(kFormatVersion);
    w.u32(log.base_checksum);
    w.u64(log.sequence);
    w.u32(log.dim);
    w.u64(log.records.size());
    for (const DeltaRecord& rec : log.records) {
        if (rec.weights.size() != log.dim)
            throw std::invalid_argument("delta record width does not match log dim");
        w.u64(rec.global_row);
        w.u64(rec.identity);
        for (float v : rec.weights) w.f32(v);
    }
    w.trailer();
    return w.take();
}

DeltaLog parse_delta(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    r.expect_magic(kDeltaMagic, "delta");
    check_version(r.u32());
    DeltaLog log;
    log.base_checksum = r.u32();
    log.sequence = r.u64();
    log.dim = r.u32();
    const std::uint64_t count = r.u64();
    if (log.dim == 0) throw PublishError("delta dim must be >= 1");
    r.require_count(count, 16 + std::size_t{4} * log.dim);
    log.records.resize(count);
    for (DeltaRecord& rec : log.records) {
        rec.global_row = r.u64();
        rec.identity = r.u64();
        rec.weights.resize(log.dim);
        for (std::uint32_t j = 0; j < log.dim; ++j) rec.weights[j] = r.f32();
    }
    check_trailer(bytes, r);
    return log;
}

void write_delta(const DeltaLog& log, const std::string& path) {
    write_file(path, serialize_delta(log));
}

DeltaLog read_delta(const std::string& path) { return parse_delta(read_file(path)); }

void apply_delta(MpzchTable& replica, const DeltaLog& log) {
    if (!replica.frozen())
        throw std::logic_error("delta records apply only to frozen replicas");
    if (log.base_checksum != replica.base_checksum())
        throw PublishError("delta lineage mismatch: log descends from a different snapshot");
    if (log.sequence != replica.next_sequence())
        throw PublishError("out-of-order delta: expected sequence " +
                           std::to_string(replica.next_sequence()) + ", got " +
                           std::to_string(log.sequence));
    if (log.dim != replica.dim()) throw PublishError("delta dim mismatch");
    for (const DeltaRecord& rec : log.records) {
        if (rec.global_row >= replica.total_rows())
            throw PublishError("delta row out of range");
        if (rec.weights.size() != log.dim)
            throw PublishError("delta record width does not match log dim");
    }
    for (const DeltaRecord& rec : log.records) {
        replica.apply_replica_record(rec.global_row, rec.identity, rec.weights);
    }
    replica.note_applied_sequence(log.sequence);
}

DeltaSource::DeltaSource(MpzchTable& table, std::uint32_t base_checksum)
    : table_(&table), base_checksum_(base_checksum), cursor_(table.make_cursor()) {
    if (!table.has_embeddings())
        throw std::logic_error("index-only tables (dim = 0) cannot be published");
}

DeltaLog DeltaSource::cut() {
    DeltaLog log;
    log.base_checksum = base_checksum_;
    log.sequence = next_sequence_++;
    log.dim = table_->dim();
    const std::vector<std::uint64_t> rows = table_->dirty_rows_since(cursor_);
    cursor_ = table_->make_cursor();
    log.records.reserve(rows.size());
    for (std::uint64_t row : rows) {
        DeltaRecord rec;
        rec.global_row = row;
        rec.identity = table_->row_identity(row);
        const std::span<const float> w = table_->embeddings().row(row);
        rec.weights.assign(w.begin(), w.end());
        log.records.push_back(std::move(rec));
    }
    return log;
}

}  // namespace mpzch
