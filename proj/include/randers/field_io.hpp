#pragma once

#include <filesystem>
#include <vector>

#include "randers/grid.hpp"

namespace randers {

/// On-disk field container. Layout: magic "RFEK1\n", three u32 little-endian
/// header words (rows, cols, channels), then rows*cols*channels f64
/// little-endian values, row-major with the channel index fastest.
struct FieldData {
    std::vector<Grid2D<double>> channels;

    int rows() const { return channels.empty() ? 0 : channels[0].rows(); }
    int cols() const { return channels.empty() ? 0 : channels[0].cols(); }
    int channel_count() const { return static_cast<int>(channels.size()); }
};

FieldData read_field(const std::filesystem::path& path);
void write_field(const std::filesystem::path& path, const std::vector<Grid2D<double>>& channels);

/// Single-channel CSV export: rows lines of cols comma-separated values,
/// shortest round-trip decimal form.
void export_csv(const Grid2D<double>& field, const std::filesystem::path& path);

// Convenience channel layouts used across the CLI: metric files carry
// (g11, g12, g22), drift files (b1, b2), masks a single 0/1 channel.
void write_metric(const std::filesystem::path& path, const MetricField& g);
MetricField read_metric(const std::filesystem::path& path);
void write_drift(const std::filesystem::path& path, const DriftField& b);
DriftField read_drift(const std::filesystem::path& path);
void write_mask(const std::filesystem::path& path, const SourceMask& m);
SourceMask read_mask(const std::filesystem::path& path);
void write_arrival(const std::filesystem::path& path, const ArrivalField& t);
ArrivalField read_arrival(const std::filesystem::path& path);

}  // namespace randers
