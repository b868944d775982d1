#ifndef LANESIG_EVAL_HPP
#define LANESIG_EVAL_HPP

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "lanesig/drive.hpp"
#include "lanesig/nnet.hpp"
#include "lanesig/pipeline.hpp"

namespace lanesig::eval {

// ---------------------------------------------------------------------------
// Classification windows
//
// Cell i of a drive consumes samples [(i-1)*m, (i-1)*m + d). A cell is a
// *classification window* for the lane segment that contains its final
// sample: once a switch happens inside a cell's span, that cell can only
// vouch for the newer lane, so a straddling cell counts toward the newer
// segment and a correct answer there is the new lane. The window's distance
// is measured from the segment start to the end of the cell span - how many
// samples of driving it took before this chance to call the lane arose.
// ---------------------------------------------------------------------------

struct Window {
    std::size_t cell = 0;      // 1-based cell index in the drive
    std::size_t distance = 0;  // span end - segment start, in samples
};

struct SegmentWindows {
    std::size_t segment = 0;  // index into the input segment list
    int lane = 0;
    std::size_t segment_start = 0;
    std::vector<Window> windows;  // distances strictly increasing by m
};

// Partition all complete cells of a drive of `total_len` samples among its
// lane segments. Every cell whose span fits in the drive lands in exactly
// one segment's list; segments too short to finish a cell get an empty
// list. Throws std::invalid_argument on an empty/unsorted segment list, a
// first segment not starting at 0, d == 0, m == 0, or total_len < d.
std::vector<SegmentWindows> enumerate_windows(
    const std::vector<LaneSegment>& segments, std::size_t d, std::size_t m,
    std::size_t total_len);

// ---------------------------------------------------------------------------
// Window accuracy on stitched drives (lane-change timeliness)
// ---------------------------------------------------------------------------

// One sub-drive cut from a stitched drive, pooled and ready for the model,
// with its lane segments re-based so sample 0 is the sub-drive start.
template <typename T>
struct StitchedItem {
    nnet::CellInputs<T> cells;
    std::vector<LaneSegment> segments;
};

// Cut every fully-populated sub-drive (stride cfg.s, no zero padding) out of
// a stitched drive and pool each one for the model. The drive is expected to
// be preprocessed already. Throws std::invalid_argument when the model and
// segmentation disagree (cell count, cell length, sub-drive length) or the
// drive is shorter than one sub-drive.
template <typename T>
std::vector<StitchedItem<T>> make_stitched_items(
    const Drive& dr, const pipeline::SegmentationConfig& cfg,
    const nnet::ModelSpec& spec);

// The fate of one classification window of one lane-change event.
struct WindowOutcome {
    std::size_t item = 0;     // index into the evaluated item list
    std::size_t segment = 0;  // segment index within that item
    std::size_t ordinal = 0;  // 1-based position among the event's windows
    std::size_t cell = 0;     // 1-based cell index within the item
    std::size_t distance = 0;
    std::size_t first_distance = 0;  // distance of the event's first window
    int truth = 0;
    int predicted = 0;
    bool correct = false;
};

struct GroupStat {
    std::size_t total = 0;
    std::size_t correct = 0;
    double accuracy() const {
        return total == 0 ? 0.0 : static_cast<double>(correct) /
                                      static_cast<double>(total);
    }
};

struct WindowReport {
    std::vector<WindowOutcome> outcomes;
    // k -> stats over the k-th window of every lane-change event.
    std::map<std::size_t, GroupStat> by_ordinal;
    // First-window distance -> stats over the *first* windows that arose at
    // exactly that distance (how accuracy depends on how soon the first
    // chance came).
    std::map<std::size_t, GroupStat> by_first_distance;

    GroupStat overall() const;
};

// Judge pre-computed per-cell lane predictions: every classification window
// of every lane-change event (segments that begin mid-drive; an item's
// opening segment follows no event and is skipped) is correct when its
// cell's prediction equals the segment's lane. Each item must supply one
// prediction per complete cell, i.e. (total_len - d) / m + 1 of them.
WindowReport score_windows(
    const std::vector<std::vector<LaneSegment>>& item_segments,
    const std::vector<std::vector<int>>& item_predictions, std::size_t d,
    std::size_t m, std::size_t total_len);

// Run the model over each item and score its argmax predictions as above,
// with d, m and the sub-drive length taken from the model's shape.
template <typename T>
WindowReport window_accuracy(const nnet::Model<T>& model,
                             const std::vector<StitchedItem<T>>& items);

// ---------------------------------------------------------------------------
// Per-cell accuracy matrix (accuracy vs accumulated driving distance)
// ---------------------------------------------------------------------------

struct MatrixEntry {
    double mean = 0.0;      // mean of per-batch accuracies
    double variance = 0.0;  // population variance across batches
};

struct AccuracyMatrixRow {
    std::size_t trained_len = 0;  // sub-drive length the model was built for
    std::vector<std::size_t> accumulated_len;  // d + (i-1)*m per cell
    std::vector<MatrixEntry> cells;
};

struct AccuracyMatrix {
    std::vector<AccuracyMatrixRow> rows;
};

// Samples consumed once cell i has spoken: d + (i-1)*m for i = 1..n.
std::vector<std::size_t> accumulated_lengths(const nnet::ModelSpec& spec);

// Read every intermediate cell of one trained model against the final-cell
// target of each test sample (test sub-drives carry a single lane, so that
// target is the sub-drive's lane). The test set is split in order into
// batches of `batch_size` (the last one may be smaller); each cell's entry
// is the mean and population variance of its per-batch accuracies. Throws
// std::invalid_argument on an empty test set or batch_size == 0.
template <typename T>
AccuracyMatrixRow excavation_row(std::size_t trained_len,
                                 const nnet::Model<T>& model,
                                 const std::vector<nnet::Sample<T>>& test,
                                 std::size_t batch_size);

// ---------------------------------------------------------------------------
// One-vs-rest ROC / AUC and weighted F1
// ---------------------------------------------------------------------------

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0;  // score at which this operating point opens
};

struct ClassRoc {
    int lane = 0;
    std::size_t positives = 0;
    std::size_t negatives = 0;
    std::vector<RocPoint> points;  // from (0,0) to (1,1), one per score tie-group
    // Trapezoidal area; empty when the class has no positives or no
    // negatives in the test set (the curve is undefined there).
    std::optional<double> auc;
};

struct RocF1Report {
    std::vector<ClassRoc> per_class;       // one per lane id, ascending
    std::vector<double> f1;                // aligned with per_class
    std::vector<std::size_t> support;      // true instances per lane
    double weighted_f1 = 0.0;              // support-weighted mean of f1
};

// One-vs-rest ROC for a single lane from per-sample scores: sweep the
// threshold score-descending with tie groups merged, so any strictly
// monotone rescoring leaves the curve (and its trapezoidal area) unchanged.
ClassRoc roc_curve(int lane, const std::vector<double>& scores,
                   const std::vector<int>& truths);

// Full report from per-sample score vectors (one score per lane, e.g. the
// final cell's softmax): per-lane ROC/AUC plus argmax-based F1, where argmax
// ties go to the lowest lane id, and the support-weighted F1 average.
// Throws std::invalid_argument on an empty set, ragged score vectors, or a
// target outside [0, n_lanes).
RocF1Report roc_f1_from_scores(const std::vector<std::vector<double>>& scores,
                               const std::vector<int>& truths,
                               std::size_t n_lanes);

// Score every test sample with the final cell's softmax and report as above.
template <typename T>
RocF1Report roc_f1(const nnet::Model<T>& model,
                   const std::vector<nnet::Sample<T>>& test);

// ---------------------------------------------------------------------------
// Rank correlation
// ---------------------------------------------------------------------------

// Spearman rank correlation with average ranks for ties. Returns NaN when
// either input is constant (ranks carry no information). Throws
// std::invalid_argument when sizes differ or fewer than two points given.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace lanesig::eval

#endif  // LANESIG_EVAL_HPP
