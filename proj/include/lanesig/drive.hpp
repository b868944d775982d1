#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace lanesig {

// One lane stretch inside a drive: samples [start, next.start) belong to
// `lane`. The first segment always starts at 0; the last one ends at
// samples.size().
struct LaneSegment {
    std::uint64_t start = 0;
    int lane = 0;

    bool operator==(const LaneSegment&) const = default;
};

// A z-axis accelerometer recording with lane ground truth and provenance.
struct Drive {
    std::vector<double> samples;
    double fs_hz = 1000.0;
    std::vector<LaneSegment> segments{{0, 0}};
    // original | scaled(...) | jittered(...) | warped(...) | stitched(...)
    std::string provenance = "original";
    std::uint64_t seed = 0;
    // Set when preprocessing met a constant (zero-variance) drive and
    // replaced it with zeros.
    bool degenerate_constant = false;

    bool single_lane() const { return segments.size() == 1; }
    int lane_at(std::uint64_t t) const;
    int last_lane() const { return segments.back().lane; }
    std::uint64_t size() const { return samples.size(); }

    // Throws std::invalid_argument when a structural invariant is broken.
    void validate() const;
};

// Text format: header `# lanesig-drive v1, fs_hz=<f>, lane=<id|stitched>,
// seed=<n>`, an optional `# switches=<i1:l1,...>` line carrying the full
// segment list, then one acceleration value per line (shortest
// round-trippable decimal).
void write_drive_csv(const Drive& d, const std::filesystem::path& path);
Drive read_drive_csv(const std::filesystem::path& path);

// Binary format: magic `LSDRV1`, little-endian, u64 sample count, f64
// sample rate, u32 segment count, (u64 start, i32 lane) pairs, f32 samples.
void write_drive_bin(const Drive& d, const std::filesystem::path& path);
Drive read_drive_bin(const std::filesystem::path& path);

// Format-dispatching helpers: `.csv` chooses text, anything else binary.
void write_drive(const Drive& d, const std::filesystem::path& path);
Drive read_drive(const std::filesystem::path& path);

}  // namespace lanesig
