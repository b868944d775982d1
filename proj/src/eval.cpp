#include "lanesig/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>

namespace lanesig::eval {

// ---------------------------------------------------------------------------
// Classification windows
// ---------------------------------------------------------------------------

std::vector<SegmentWindows> enumerate_windows(
    const std::vector<LaneSegment>& segments, std::size_t d, std::size_t m,
    std::size_t total_len) {
    if (segments.empty())
        throw std::invalid_argument("segment list must not be empty");
    if (segments.front().start != 0)
        throw std::invalid_argument("first segment must start at sample 0");
    for (std::size_t j = 1; j < segments.size(); ++j)
        if (segments[j].start <= segments[j - 1].start)
            throw std::invalid_argument(
                "segment starts must be strictly increasing");
    if (segments.back().start >= total_len)
        throw std::invalid_argument("segment starts beyond the drive");
    if (d == 0) throw std::invalid_argument("cell length d must be positive");
    if (m == 0) throw std::invalid_argument("cell stride m must be positive");
    if (total_len < d)
        throw std::invalid_argument("drive shorter than one cell");

    std::vector<SegmentWindows> out(segments.size());
    for (std::size_t j = 0; j < segments.size(); ++j) {
        out[j].segment = j;
        out[j].lane = segments[j].lane;
        out[j].segment_start = segments[j].start;
    }

    // Cells and segments both advance left to right; track the governing
    // segment with one forward-moving cursor.
    std::size_t j = 0;
    for (std::size_t i = 1; (i - 1) * m + d <= total_len; ++i) {
        const std::size_t end = (i - 1) * m + d;  // one past the last sample
        while (j + 1 < segments.size() && segments[j + 1].start <= end - 1)
            ++j;
        out[j].windows.push_back({i, end - segments[j].start});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Window accuracy
// ---------------------------------------------------------------------------

GroupStat WindowReport::overall() const {
    GroupStat g;
    for (const auto& o : outcomes) {
        ++g.total;
        if (o.correct) ++g.correct;
    }
    return g;
}

WindowReport score_windows(
    const std::vector<std::vector<LaneSegment>>& item_segments,
    const std::vector<std::vector<int>>& item_predictions, std::size_t d,
    std::size_t m, std::size_t total_len) {
    if (item_segments.size() != item_predictions.size())
        throw std::invalid_argument(
            "need one prediction vector per segment list");
    if (d == 0 || m == 0 || total_len < d)
        throw std::invalid_argument("invalid window geometry");
    const std::size_t n_cells = (total_len - d) / m + 1;

    WindowReport rep;
    for (std::size_t it = 0; it < item_segments.size(); ++it) {
        if (item_predictions[it].size() != n_cells)
            throw std::invalid_argument(
                "prediction count must match the number of complete cells");
        const auto win =
            enumerate_windows(item_segments[it], d, m, total_len);
        for (const auto& sw : win) {
            if (sw.segment_start == 0) continue;  // no lane-change event
            for (std::size_t k = 0; k < sw.windows.size(); ++k) {
                const auto& w = sw.windows[k];
                WindowOutcome o;
                o.item = it;
                o.segment = sw.segment;
                o.ordinal = k + 1;
                o.cell = w.cell;
                o.distance = w.distance;
                o.first_distance = sw.windows.front().distance;
                o.truth = sw.lane;
                o.predicted = item_predictions[it][w.cell - 1];
                o.correct = o.predicted == o.truth;

                auto& ord = rep.by_ordinal[o.ordinal];
                ++ord.total;
                if (o.correct) ++ord.correct;
                if (o.ordinal == 1) {
                    auto& fd = rep.by_first_distance[o.first_distance];
                    ++fd.total;
                    if (o.correct) ++fd.correct;
                }
                rep.outcomes.push_back(o);
            }
        }
    }
    return rep;
}

template <typename T>
std::vector<StitchedItem<T>> make_stitched_items(
    const Drive& dr, const pipeline::SegmentationConfig& cfg,
    const nnet::ModelSpec& spec) {
    cfg.validate();
    spec.validate();
    dr.validate();
    if (spec.n_cells != cfg.n_cells())
        throw std::invalid_argument(
            "model cell count disagrees with the segmentation");
    if (spec.cell_len() != cfg.d)
        throw std::invalid_argument(
            "model cell length disagrees with the segmentation");
    if (spec.subdrive_len() != cfg.ell)
        throw std::invalid_argument(
            "model sub-drive length disagrees with the segmentation");
    const std::size_t n = dr.size();
    if (n < cfg.ell)
        throw std::invalid_argument("drive shorter than one sub-drive");

    std::vector<StitchedItem<T>> items;
    for (std::size_t off = 0; off + cfg.ell <= n; off += cfg.s) {
        StitchedItem<T> item;
        item.cells = nnet::pool_cells<T>(
            spec, std::span<const double>(dr.samples.data() + off, cfg.ell));
        for (std::size_t j = 0; j < dr.segments.size(); ++j) {
            const std::uint64_t seg_start = dr.segments[j].start;
            const std::uint64_t seg_end = j + 1 < dr.segments.size()
                                              ? dr.segments[j + 1].start
                                              : n;
            if (seg_end <= off || seg_start >= off + cfg.ell) continue;
            item.segments.push_back(
                {std::max<std::uint64_t>(seg_start, off) - off,
                 dr.segments[j].lane});
        }
        items.push_back(std::move(item));
    }
    return items;
}

template <typename T>
WindowReport window_accuracy(const nnet::Model<T>& model,
                             const std::vector<StitchedItem<T>>& items) {
    const std::size_t d = model.spec.cell_len();
    const std::size_t m = d / 2;
    const std::size_t total = model.spec.subdrive_len();
    std::vector<std::vector<LaneSegment>> segs;
    std::vector<std::vector<int>> preds;
    segs.reserve(items.size());
    preds.reserve(items.size());
    for (const auto& item : items) {
        segs.push_back(item.segments);
        preds.push_back(nnet::forward(model, item.cells).predictions);
    }
    return score_windows(segs, preds, d, m, total);
}

// ---------------------------------------------------------------------------
// Per-cell accuracy matrix
// ---------------------------------------------------------------------------

std::vector<std::size_t> accumulated_lengths(const nnet::ModelSpec& spec) {
    const std::size_t d = spec.cell_len();
    const std::size_t m = d / 2;
    std::vector<std::size_t> out(spec.n_cells);
    for (std::size_t i = 0; i < spec.n_cells; ++i) out[i] = d + i * m;
    return out;
}

template <typename T>
AccuracyMatrixRow excavation_row(std::size_t trained_len,
                                 const nnet::Model<T>& model,
                                 const std::vector<nnet::Sample<T>>& test,
                                 std::size_t batch_size) {
    if (test.empty()) throw std::invalid_argument("empty test set");
    if (batch_size == 0)
        throw std::invalid_argument("batch size must be positive");

    const std::size_t n_cells = model.spec.n_cells;
    const std::size_t n_batches = (test.size() + batch_size - 1) / batch_size;
    std::vector<std::vector<std::size_t>> correct(
        n_cells, std::vector<std::size_t>(n_batches, 0));
    std::vector<std::size_t> batch_total(n_batches, 0);

    for (std::size_t idx = 0; idx < test.size(); ++idx) {
        const auto& s = test[idx];
        if (s.targets.empty())
            throw std::invalid_argument("test sample without targets");
        const std::size_t b = idx / batch_size;
        ++batch_total[b];
        const auto out = nnet::forward(model, s.cells);
        for (std::size_t i = 0; i < n_cells; ++i)
            if (out.predictions[i] == s.targets.back()) ++correct[i][b];
    }

    AccuracyMatrixRow row;
    row.trained_len = trained_len;
    row.accumulated_len = accumulated_lengths(model.spec);
    row.cells.resize(n_cells);
    for (std::size_t i = 0; i < n_cells; ++i) {
        double mean = 0.0;
        std::vector<double> accs(n_batches);
        for (std::size_t b = 0; b < n_batches; ++b) {
            accs[b] = static_cast<double>(correct[i][b]) /
                      static_cast<double>(batch_total[b]);
            mean += accs[b];
        }
        mean /= static_cast<double>(n_batches);
        double var = 0.0;
        for (double a : accs) var += (a - mean) * (a - mean);
        var /= static_cast<double>(n_batches);
        row.cells[i] = {mean, var};
    }
    return row;
}

// ---------------------------------------------------------------------------
// ROC / AUC / weighted F1
// ---------------------------------------------------------------------------

ClassRoc roc_curve(int lane, const std::vector<double>& scores,
                   const std::vector<int>& truths) {
    if (scores.empty() || scores.size() != truths.size())
        throw std::invalid_argument(
            "need one score per truth label, at least one of each");

    ClassRoc roc;
    roc.lane = lane;
    for (int t : truths)
        if (t == lane)
            ++roc.positives;
        else
            ++roc.negatives;
    if (roc.positives == 0 || roc.negatives == 0) return roc;  // undefined

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] > scores[b];
    });

    const double P = static_cast<double>(roc.positives);
    const double N = static_cast<double>(roc.negatives);
    roc.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    std::size_t tp = 0, fp = 0, i = 0;
    double auc = 0.0;
    while (i < order.size()) {
        const double s = scores[order[i]];
        // Samples tied at one score cross the threshold together.
        while (i < order.size() && scores[order[i]] == s) {
            if (truths[order[i]] == lane)
                ++tp;
            else
                ++fp;
            ++i;
        }
        const RocPoint prev = roc.points.back();
        const RocPoint next = {static_cast<double>(fp) / N,
                               static_cast<double>(tp) / P, s};
        auc += (next.fpr - prev.fpr) * (prev.tpr + next.tpr) / 2.0;
        roc.points.push_back(next);
    }
    roc.auc = auc;
    return roc;
}

RocF1Report roc_f1_from_scores(const std::vector<std::vector<double>>& scores,
                               const std::vector<int>& truths,
                               std::size_t n_lanes) {
    if (scores.empty() || scores.size() != truths.size())
        throw std::invalid_argument(
            "need one score vector per truth label, at least one of each");
    if (n_lanes < 2)
        throw std::invalid_argument("need at least two lanes");
    for (const auto& s : scores)
        if (s.size() != n_lanes)
            throw std::invalid_argument("score vectors must have one entry "
                                        "per lane");
    for (int t : truths)
        if (t < 0 || static_cast<std::size_t>(t) >= n_lanes)
            throw std::invalid_argument("truth label outside the lane range");

    RocF1Report rep;
    std::vector<std::size_t> tp(n_lanes, 0), fp(n_lanes, 0), fn(n_lanes, 0);
    rep.support.assign(n_lanes, 0);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        // Argmax with ties resolved toward the lowest lane id.
        std::size_t pred = 0;
        for (std::size_t c = 1; c < n_lanes; ++c)
            if (scores[i][c] > scores[i][pred]) pred = c;
        const auto truth = static_cast<std::size_t>(truths[i]);
        ++rep.support[truth];
        if (pred == truth) {
            ++tp[truth];
        } else {
            ++fp[pred];
            ++fn[truth];
        }
    }

    std::vector<double> column(scores.size());
    double weighted = 0.0;
    for (std::size_t c = 0; c < n_lanes; ++c) {
        for (std::size_t i = 0; i < scores.size(); ++i)
            column[i] = scores[i][c];
        rep.per_class.push_back(roc_curve(static_cast<int>(c), column, truths));

        const double denom = static_cast<double>(2 * tp[c] + fp[c] + fn[c]);
        const double f1 =
            denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(tp[c]) / denom;
        rep.f1.push_back(f1);
        weighted += static_cast<double>(rep.support[c]) * f1;
    }
    rep.weighted_f1 = weighted / static_cast<double>(scores.size());
    return rep;
}

template <typename T>
RocF1Report roc_f1(const nnet::Model<T>& model,
                   const std::vector<nnet::Sample<T>>& test) {
    std::vector<std::vector<double>> scores;
    std::vector<int> truths;
    scores.reserve(test.size());
    truths.reserve(test.size());
    for (const auto& s : test) {
        if (s.targets.empty())
            throw std::invalid_argument("test sample without targets");
        const auto out = nnet::forward(model, s.cells);
        scores.emplace_back(out.probs.back().begin(), out.probs.back().end());
        truths.push_back(s.targets.back());
    }
    return roc_f1_from_scores(scores, truths, model.spec.n_lanes);
}

// ---------------------------------------------------------------------------
// Spearman rank correlation
// ---------------------------------------------------------------------------

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> rank(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        // Tied run [i, j] shares the mean of ranks i+1 .. j+1.
        const double r = static_cast<double>(i + j) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = r;
        i = j + 1;
    }
    return rank;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument(
            "need two equally sized samples of at least two points");
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mean = (n + 1.0) / 2.0;  // mean rank either way
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = rx[i] - mean;
        const double dy = ry[i] - mean;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        return std::numeric_limits<double>::quiet_NaN();
    return sxy / std::sqrt(sxx * syy);
}

// ---------------------------------------------------------------------------
// Explicit instantiations
// ---------------------------------------------------------------------------

template std::vector<StitchedItem<float>> make_stitched_items<float>(
    const Drive&, const pipeline::SegmentationConfig&, const nnet::ModelSpec&);
template std::vector<StitchedItem<double>> make_stitched_items<double>(
    const Drive&, const pipeline::SegmentationConfig&, const nnet::ModelSpec&);
template WindowReport window_accuracy<float>(
    const nnet::Model<float>&, const std::vector<StitchedItem<float>>&);
template WindowReport window_accuracy<double>(
    const nnet::Model<double>&, const std::vector<StitchedItem<double>>&);
template AccuracyMatrixRow excavation_row<float>(
    std::size_t, const nnet::Model<float>&,
    const std::vector<nnet::Sample<float>>&, std::size_t);
template AccuracyMatrixRow excavation_row<double>(
    std::size_t, const nnet::Model<double>&,
    const std::vector<nnet::Sample<double>>&, std::size_t);
template RocF1Report roc_f1<float>(const nnet::Model<float>&,
                                   const std::vector<nnet::Sample<float>>&);
template RocF1Report roc_f1<double>(const nnet::Model<double>&,
                                    const std::vector<nnet::Sample<double>>&);

}  // namespace lanesig::eval
