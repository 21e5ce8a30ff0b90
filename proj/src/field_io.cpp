#include "randers/field_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

namespace randers {

namespace {

constexpr char kMagic[6] = {'R', 'F', 'E', 'K', '1', '\n'};

void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
    const uint64_t bits = std::bit_cast<uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

uint32_t get_u32(const unsigned char* p) {
    return static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 |
           static_cast<uint32_t>(p[2]) << 16 | static_cast<uint32_t>(p[3]) << 24;
}

double get_f64(const unsigned char* p) {
    uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) bits = (bits << 8) | p[i];
    return std::bit_cast<double>(bits);
}

}  // namespace

FieldData read_field(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open " + path.string());

    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < 6 || std::memcmp(bytes.data(), kMagic, 6) != 0)
        throw BadMagic("bad magic in " + path.string());
    if (bytes.size() < 18) throw TruncatedFile("truncated header in " + path.string());

    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + 6;
    const uint32_t rows = get_u32(p);
    const uint32_t cols = get_u32(p + 4);
    const uint32_t channels = get_u32(p + 8);
    if (rows == 0 || cols == 0 || channels == 0)
        throw ZeroDimension("zero dimension in " + path.string());

    const size_t expected = 18 + 8ull * rows * cols * channels;
    if (bytes.size() < expected) throw TruncatedFile("truncated payload in " + path.string());

    FieldData out;
    out.channels.assign(channels, Grid2D<double>(static_cast<int>(rows), static_cast<int>(cols)));
    const unsigned char* v = reinterpret_cast<const unsigned char*>(bytes.data()) + 18;
    for (uint32_t r = 0; r < rows; ++r)
        for (uint32_t c = 0; c < cols; ++c)
            for (uint32_t ch = 0; ch < channels; ++ch, v += 8)
                out.channels[ch](static_cast<int>(r), static_cast<int>(c)) = get_f64(v);
    return out;
}

void write_field(const std::filesystem::path& path, const std::vector<Grid2D<double>>& channels) {
    if (channels.empty()) throw DimensionMismatch("write_field: no channels");
    const int rows = channels[0].rows();
    const int cols = channels[0].cols();
    for (const auto& ch : channels)
        if (!ch.same_shape(rows, cols))
            throw DimensionMismatch("write_field: channel dimensions differ");

    std::string bytes;
    bytes.reserve(18 + 8ull * rows * cols * channels.size());
    bytes.append(kMagic, 6);
    put_u32(bytes, static_cast<uint32_t>(rows));
    put_u32(bytes, static_cast<uint32_t>(cols));
    put_u32(bytes, static_cast<uint32_t>(channels.size()));
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            for (const auto& ch : channels) put_f64(bytes, ch(r, c));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoFailure("write failed for " + path.string());
}

void export_csv(const Grid2D<double>& field, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoFailure("cannot open " + path.string() + " for writing");
    std::array<char, 32> buf;
    for (int r = 0; r < field.rows(); ++r) {
        for (int c = 0; c < field.cols(); ++c) {
            auto res = std::to_chars(buf.data(), buf.data() + buf.size(), field(r, c));
            if (c) out.put(',');
            out.write(buf.data(), res.ptr - buf.data());
        }
        out.put('\n');
    }
    if (!out) throw IoFailure("write failed for " + path.string());
}

void write_metric(const std::filesystem::path& path, const MetricField& g) {
    write_field(path, {g.g11, g.g12, g.g22});
}

MetricField read_metric(const std::filesystem::path& path) {
    FieldData d = read_field(path);
    if (d.channel_count() != 3) throw DimensionMismatch("metric file needs 3 channels");
    MetricField g;
    g.g11 = std::move(d.channels[0]);
    g.g12 = std::move(d.channels[1]);
    g.g22 = std::move(d.channels[2]);
    return g;
}

void write_drift(const std::filesystem::path& path, const DriftField& b) {
    write_field(path, {b.b1, b.b2});
}

DriftField read_drift(const std::filesystem::path& path) {
    FieldData d = read_field(path);
    if (d.channel_count() != 2) throw DimensionMismatch("drift file needs 2 channels");
    DriftField b;
    b.b1 = std::move(d.channels[0]);
    b.b2 = std::move(d.channels[1]);
    return b;
}

void write_mask(const std::filesystem::path& path, const SourceMask& m) {
    Grid2D<double> ch(m.mask.rows(), m.mask.cols());
    for (size_t i = 0; i < ch.size(); ++i) ch[i] = m.mask[i] ? 1.0 : 0.0;
    write_field(path, {ch});
}

SourceMask read_mask(const std::filesystem::path& path) {
    FieldData d = read_field(path);
    if (d.channel_count() != 1) throw DimensionMismatch("mask file needs 1 channel");
    SourceMask m(d.rows(), d.cols());
    for (size_t i = 0; i < m.mask.size(); ++i) m.mask[i] = d.channels[0][i] != 0.0 ? 1 : 0;
    return m;
}

void write_arrival(const std::filesystem::path& path, const ArrivalField& t) {
    write_field(path, {t.t});
}

ArrivalField read_arrival(const std::filesystem::path& path) {
    FieldData d = read_field(path);
    if (d.channel_count() != 1) throw DimensionMismatch("arrival file needs 1 channel");
    ArrivalField t;
    t.t = std::move(d.channels[0]);
    return t;
}

}  // namespace randers
