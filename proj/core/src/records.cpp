#include "semcomm/records.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

#include "semcomm/errors.hpp"

namespace semcomm::io {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t crc_of(std::span<const std::uint8_t> bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed in chunks.
    std::size_t off = 0;
    while (off < bytes.size()) {
        const std::size_t n = std::min<std::size_t>(bytes.size() - off, 1u << 30);
        crc = crc32(crc, bytes.data() + off, static_cast<uInt>(n));
        off += n;
    }
    return static_cast<std::uint32_t>(crc);
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}

    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::span<const std::uint8_t> bytes(std::size_t n, const char* what) {
        need(n, what);
        auto s = b_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == b_.size(); }

private:
    void need(std::size_t n, const char* what) {
        if (b_.size() - pos_ < n) throw LoadError(std::string("truncated container while reading ") + what);
    }
    std::span<const std::uint8_t> b_;
    std::size_t pos_ = 0;
};

}  // namespace

std::size_t Record::count() const {
    std::size_t n = 1;
    for (auto e : extents) n *= e;
    return n;
}

std::vector<std::uint8_t> encode(std::span<const Record> records, std::uint32_t version) {
    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    put_u32(out, version);
    for (const auto& r : records) {
        if (r.payload.size() != r.count()) {
            throw ContractError("record '" + r.name + "' payload does not match its extents");
        }
        put_u32(out, static_cast<std::uint32_t>(r.name.size()));
        out.insert(out.end(), r.name.begin(), r.name.end());
        put_u32(out, static_cast<std::uint32_t>(r.extents.size()));
        for (auto e : r.extents) put_u32(out, e);
        for (float f : r.payload) put_u32(out, std::bit_cast<std::uint32_t>(f));
    }
    put_u32(out, crc_of(out));
    return out;
}

std::vector<Record> decode(std::span<const std::uint8_t> bytes, std::uint32_t expected_version) {
    if (bytes.size() < sizeof(kMagic) + 8) throw LoadError("container too short");
    if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) throw LoadError("bad container magic");
    const auto body = bytes.first(bytes.size() - 4);
    Reader tail(bytes.last(4));
    if (tail.u32("crc") != crc_of(body)) throw LoadError("container CRC mismatch (corrupt or truncated file)");

    Reader in(body.subspan(sizeof(kMagic)));
    const std::uint32_t version = in.u32("version");
    if (version != expected_version) {
        throw VersionError("container version " + std::to_string(version) + ", expected " +
                           std::to_string(expected_version));
    }
    std::vector<Record> out;
    while (!in.done()) {
        Record r;
        const std::uint32_t len = in.u32("name length");
        auto name = in.bytes(len, "name");
        r.name.assign(name.begin(), name.end());
        const std::uint32_t rank = in.u32("rank");
        for (std::uint32_t i = 0; i < rank; ++i) r.extents.push_back(in.u32("extent"));
        const std::size_t n = r.count();
        auto payload = in.bytes(n * 4, "payload");
        r.payload.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::uint32_t v = 0;
            for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(payload[4 * i + k]) << (8 * k);
            r.payload[i] = std::bit_cast<float>(v);
        }
        for (const auto& prev : out)
            if (prev.name == r.name) throw LoadError("duplicate record name: " + r.name);
        out.push_back(std::move(r));
    }
    return out;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("failed writing " + path.string());
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

Record u64_record(const std::string& name, std::uint64_t value) {
    Record r{name, {4}, {}};
    for (int i = 0; i < 4; ++i) r.payload.push_back(static_cast<float>((value >> (16 * i)) & 0xffff));
    return r;
}

std::uint64_t u64_from(const Record& r) {
    if (r.payload.size() != 4) throw LoadError("record '" + r.name + "' is not a 64-bit value");
    std::uint64_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint64_t>(r.payload[i]) << (16 * i);
    return v;
}

}  // namespace semcomm::io
