#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lanesig/drive.hpp"

namespace lanesig::pipeline {

// Window geometry for slicing drives into fixed-length training units.
//
//   ell : sub-drive length in samples (windows over the raw drive)
//   s   : sub-drive stride
//   d   : sub-segment (cell input) length; must be even
//   m   : sub-segment stride; must equal d/2 exactly
//
// A sub-drive of length ell holds n = (ell - d)/m + 1 overlapping
// sub-segments, so (ell - d) must be divisible by m.
struct SegmentationConfig {
    std::uint64_t ell = 16000;
    std::uint64_t s = 2000;
    std::uint64_t d = 2000;
    std::uint64_t m = 1000;

    std::uint64_t n_cells() const { return (ell - d) / m + 1; }
    void validate() const;

    // Sample counts matched to a 1 kHz capture of a ~50 s drive.
    static SegmentationConfig bench_scale();
    // Sample counts matched to long high-rate captures (50K-sample cells).
    static SegmentationConfig field_scale();
};

// Per-cell ground-truth policy: MF picks the lane owning the majority of a
// cell's samples (ties resolved toward the lane entered most recently); LO
// picks the lane of the cell's final sample.
enum class LabelPolicy { MF, LO };

std::string to_string(LabelPolicy p);
LabelPolicy label_policy_from_string(const std::string& s);

// One fixed-length window cut from a drive, zero-padded at the tail when the
// drive ends mid-window.
struct SubDrive {
    std::vector<double> samples;      // length == ell
    std::size_t source_drive_id = 0;  // caller-assigned drive index
    std::uint64_t start_offset = 0;   // window start within the source drive
    std::vector<int> cell_targets;    // n lane ids (empty until labeled)
    std::uint64_t pad_len = 0;        // trailing zeros appended
};

// Z-score the drive (population standard deviation), then apply a Hampel
// filter: any sample deviating from its windowed median by more than
// hampel_k * 1.4826 * MAD is replaced by that median. Windows are centered
// and truncated at the boundaries. Length and lane segments are unchanged.
// A constant input cannot be normalized; it comes back all-zero with
// degenerate_constant set.
Drive preprocess(const Drive& drive, std::size_t hampel_window = 11,
                 double hampel_k = 3.0);

// Cut a drive into sub-drives of length ell at stride s. Window starts are
// 0, s, 2s, ..., s*ceil((N - ell)/s); the final window is zero-padded to ell.
// cell_targets are left empty (see label_cells).
std::vector<SubDrive> make_subdrives(const Drive& drive, std::uint64_t ell,
                                     std::uint64_t s, std::size_t drive_id = 0);

// The n overlapping views of a sub-drive, each d samples at stride d/2,
// jointly covering [0, ell).
std::vector<std::span<const double>> make_subsegments(const SubDrive& sd,
                                                      std::uint64_t d);

// Interleave one drive per lane into a single drive that switches to the
// next lane (round-robin from start_lane) every alpha samples. Sample j of
// the output is sample j of the active lane's drive, so a switch continues
// from the same road position in the new lane. Output length is the minimum
// input length; segments record every switch.
Drive stitch_lane_changes(const std::vector<Drive>& lane_drives,
                          std::uint64_t alpha, std::size_t start_lane = 0);

// Ground-truth lane per cell for a sub-drive at `offset` within a drive
// labeled by `segments` over [0, drive_len). Cell i spans
// [offset + i*m, offset + i*m + d). Spans reaching past drive_len are
// treated as padding: MF counts real samples only and LO reads the last
// real sample; a cell entirely inside the padding inherits the label of the
// drive's final sample. The offset itself must lie inside the drive.
std::vector<int> label_cells(const std::vector<LaneSegment>& segments,
                             std::uint64_t drive_len,
                             const SegmentationConfig& config,
                             std::uint64_t offset, LabelPolicy policy);

// Convenience: cut + label a whole preprocessed drive in one call.
std::vector<SubDrive> make_labeled_subdrives(const Drive& drive,
                                             const SegmentationConfig& config,
                                             LabelPolicy policy,
                                             std::size_t drive_id = 0);

// Seeded shuffle of [0, count) chunked into batches; the final batch keeps
// the remainder. Identical seeds give identical batch sequences.
std::vector<std::vector<std::size_t>> make_batches(std::size_t count,
                                                   std::size_t batch_size,
                                                   std::uint64_t seed);

// One ell-sized window at a seeded uniform offset in [0, N - ell], labeled
// under `policy`.
SubDrive random_subdrive_sample(const Drive& drive,
                                const SegmentationConfig& config,
                                std::uint64_t seed, LabelPolicy policy);

// ---------------------------------------------------------------------------
// Dataset manifest: the JSON index a dataset directory carries so the tools
// can locate drive files, their lane labels, and the train/test split.
// ---------------------------------------------------------------------------

struct ManifestEntry {
    std::string path;         // drive file, relative to the manifest
    int lane = 0;             // lane id (-1 for stitched multi-lane drives)
    std::string original_id;  // id of the source capture this file came from
    std::string split;        // "train" or "test"
    std::string provenance;   // transformation chain description
    std::uint64_t seed = 0;   // seed that produced the file
    bool preprocessed = false;
};

void write_manifest(const std::string& path,
                    const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest(const std::string& path);

// Every original_id must live entirely in one split; a violation (which
// would leak synthesized variants of a test capture into training) throws.
void validate_manifest_split(const std::vector<ManifestEntry>& entries);

}  // namespace lanesig::pipeline
