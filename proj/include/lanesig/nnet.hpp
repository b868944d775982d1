#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace lanesig::nnet {

// How per-cell classification losses are combined over a sequence of n cells:
//   weighted  - cell i (1-based) carries weight 2i/(n(n+1)) against the final
//               cell's target, favoring late cells while still rewarding
//               early commitment; the weights sum to 1 for every n
//   uniform   - every cell carries weight 1/n against its own per-cell target
//   last_cell - only the final cell's loss counts
enum class LossMode : std::uint32_t { weighted = 0, uniform = 1, last_cell = 2 };

std::string to_string(LossMode m);
LossMode loss_mode_from_string(const std::string& s);

// The per-cell loss weights described above; they sum to 1 in every mode.
std::vector<double> cell_loss_weights(std::size_t n, LossMode mode);

// Mean over sliding windows: output[j] = mean(x[j*S, j*S + K)), producing
// (N - K)/S + 1 values (valid placements only).
std::vector<double> avg_pool(std::span<const double> x, std::uint64_t kernel,
                             std::uint64_t stride);

// ---------------------------------------------------------------------------
// Model geometry
// ---------------------------------------------------------------------------

struct ModelSpec {
    std::uint64_t pool_kernel = 200;  // K, samples
    std::uint64_t pool_stride = 100;  // S, samples
    std::size_t input_dim = 19;       // D, pooled samples per cell
    std::size_t hidden_dim = 32;      // H
    std::size_t n_lanes = 2;
    std::size_t n_cells = 15;  // n, cells unrolled per sub-drive
    LossMode loss_mode = LossMode::weighted;
    bool shared_head = true;  // one dense head for all cells vs one per cell

    void validate() const;
    // Raw samples one cell consumes: (D - 1) * S + K. Must be even (cells
    // advance by half a cell).
    std::uint64_t cell_len() const;
    // Raw samples one sub-drive consumes: (n_cells + 1) * cell_len() / 2.
    std::uint64_t subdrive_len() const;
    std::size_t head_w_size() const;
    std::size_t head_b_size() const;
    std::size_t param_count() const;

    bool operator==(const ModelSpec&) const = default;
};

// One LSTM layer's parameters. Matrices are row-major with the four gate
// blocks stacked in the order: input (i), forget (f), candidate (g),
// output (o); rows [0,H) belong to i, [H,2H) to f, and so on.
template <typename T>
struct LstmLayer {
    std::vector<T> W_ih;  // (4H x in)
    std::vector<T> W_hh;  // (4H x H)
    std::vector<T> b_ih;  // (4H)
    std::vector<T> b_hh;  // (4H)
};

// Two stacked LSTM layers plus a dense softmax head per cell. The recurrence
// is stateless: h and c start at zero for every sub-drive.
template <typename T>
struct Model {
    ModelSpec spec;
    LstmLayer<T> layer1;  // input size D
    LstmLayer<T> layer2;  // input size H
    std::vector<T> head_W;  // shared: (n_lanes x H); per-cell: n_cells blocks
    std::vector<T> head_b;  // shared: (n_lanes);     per-cell: n_cells blocks

    // Parameter arrays in fixed (checkpoint) order.
    std::vector<std::span<T>> param_spans();
    std::vector<std::span<const T>> param_spans() const;
};

// Fresh model with weights drawn uniformly from [-1/sqrt(H), +1/sqrt(H)]
// (drawn in a fixed order at double precision, then cast), biases zero
// except the forget-gate input bias, which starts at 1.
template <typename T>
Model<T> make_model(const ModelSpec& spec, std::uint64_t seed);

Model<double> widen(const Model<float>& m);   // exact
Model<float> narrow(const Model<double>& m);  // rounds each parameter

// ---------------------------------------------------------------------------
// Forward pass
// ---------------------------------------------------------------------------

// Pooled inputs, one vector of length D per cell.
template <typename T>
using CellInputs = std::vector<std::vector<T>>;

// Slice a raw sub-drive into n_cells half-overlapping windows and average-
// pool each one down to D values.
template <typename T>
CellInputs<T> pool_cells(const ModelSpec& spec, std::span<const double> samples);

template <typename T>
struct CellOutputs {
    std::vector<std::vector<T>> logits;  // n_cells x n_lanes
    std::vector<std::vector<T>> probs;   // softmax (max-subtracted) of logits
    std::vector<int> predictions;        // argmax class index per cell
};

// Activations saved by forward() so backward() can run.
template <typename T>
struct ForwardCache {
    struct Layer {
        std::vector<std::vector<T>> gates;   // n_cells x 4H (i,f,g,o applied)
        std::vector<std::vector<T>> c;       // n_cells x H
        std::vector<std::vector<T>> tanh_c;  // n_cells x H
        std::vector<std::vector<T>> h;       // n_cells x H
    };
    Layer l1, l2;
};

template <typename T>
CellOutputs<T> forward(const Model<T>& m, const CellInputs<T>& cells,
                       ForwardCache<T>* cache = nullptr);

// Pool + forward in one call.
template <typename T>
CellOutputs<T> forward(const Model<T>& m, std::span<const double> samples);

// ---------------------------------------------------------------------------
// Loss and gradients
// ---------------------------------------------------------------------------

// Combined cross-entropy under the model's weighting mode. `targets` holds
// one class index per cell (uniform mode reads them all; the other modes
// read the final one). Computed from logits in double precision.
template <typename T>
double loss(const CellOutputs<T>& out, const std::vector<int>& targets,
            LossMode mode);

template <typename T>
struct Gradients {
    LstmLayer<T> layer1, layer2;
    std::vector<T> head_W, head_b;

    static Gradients zeros(const ModelSpec& spec);
    void clear();
    double squared_norm() const;
    std::vector<std::span<T>> param_spans();
    std::vector<std::span<const T>> param_spans() const;
};

// Reverse-mode gradients of loss() with respect to every parameter,
// accumulated (+=) into `grads`. Returns the sample loss.
template <typename T>
double backward(const Model<T>& m, const CellInputs<T>& cells,
                const std::vector<int>& targets, Gradients<T>& grads);

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

template <typename T>
struct Sample {
    CellInputs<T> cells;
    std::vector<int> targets;  // class indices, one per cell
};

struct TrainConfig {
    double learning_rate = 0.005;
    std::size_t batch_size = 128;
    std::size_t max_epochs = 6;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double clip_norm = 5.0;  // global-norm gradient clip
    std::uint64_t seed = 0;

    void validate() const;
};

template <typename T>
struct AdamState {
    Gradients<T> m, v;
    std::uint64_t t = 0;

    static AdamState zeros(const ModelSpec& spec);
};

struct StepStats {
    double loss = 0.0;
    double accuracy = 0.0;
    bool clipped = false;
};

// One Adam step on the given batch (mean gradients over the batch in index
// order, global-norm clipping, bias-corrected update). Throws on a
// non-finite loss, signalling divergence.
template <typename T>
StepStats train_step(Model<T>& m, const std::vector<Sample<T>>& samples,
                     std::span<const std::size_t> batch, AdamState<T>& opt,
                     const TrainConfig& cfg);

// The fraction of correct argmax predictions scored the way the loss mode
// cares about them: the final cell against the final target for weighted and
// last_cell, every cell against its own target for uniform.
template <typename T>
double accuracy_metric(const CellOutputs<T>& out,
                       const std::vector<int>& targets, LossMode mode);

struct EpochStats {
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double val_accuracy = 0.0;  // NaN when no validation split is given
    std::size_t clip_events = 0;
};

struct TrainHistory {
    std::vector<EpochStats> epochs;
    double clip_threshold = 0.0;
    std::size_t best_epoch = 0;  // epoch whose snapshot was returned
};

// Epoch loop with seeded reshuffling. With a validation split, training
// stops one epoch after validation accuracy first drops below the previous
// epoch's, and the model is rolled back to the best validation snapshot.
// With an empty validation split it runs exactly max_epochs and keeps the
// final parameters. max_epochs == 0 returns the model untouched.
template <typename T>
TrainHistory train(Model<T>& m, const std::vector<Sample<T>>& train_set,
                   const std::vector<Sample<T>>& val_set,
                   const TrainConfig& cfg);

// Same parameters, unrolled for only the first `i` cells (1-based).
template <typename T>
Model<T> truncate(const Model<T>& m, std::size_t i);

// Worst relative error between analytic gradients and central finite
// differences over every parameter (or a seeded subsample of 10^4 when the
// model is larger). 64-bit only: float gradients cannot be meaningfully
// checked against 32-bit differences.
double grad_check(const Model<double>& m, const Sample<double>& sample,
                  double epsilon = 1e-5, std::uint64_t subsample_seed = 0);

// ---------------------------------------------------------------------------
// Checkpoints: magic "LNET1", little-endian header (version, K, S, D, H,
// n_lanes, n_cells, loss_mode as u32, shared-head flag as u8), the parameter
// arrays as 32-bit floats in param_spans() order, then a CRC32 of everything
// before it. Returns the file size in bytes.
// ---------------------------------------------------------------------------

std::uint64_t save_checkpoint(const Model<float>& m, const std::string& path);
Model<float> load_checkpoint(const std::string& path);

// ---------------------------------------------------------------------------
// Lane id <-> class index mapping (models speak dense class indices; drives
// carry arbitrary integer lane ids).
// ---------------------------------------------------------------------------

class LaneIndexMap {
  public:
    LaneIndexMap() = default;
    explicit LaneIndexMap(std::vector<int> lane_ids);  // sorts + dedups

    std::size_t size() const { return ids_.size(); }
    std::size_t index_of(int lane_id) const;  // throws if unknown
    int id_of(std::size_t index) const;
    const std::vector<int>& ids() const { return ids_; }

  private:
    std::vector<int> ids_;
};

}  // namespace lanesig::nnet
