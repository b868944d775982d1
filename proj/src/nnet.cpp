#include "lanesig/nnet.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <stdexcept>

#include "lanesig/pipeline.hpp"
#include "lanesig/rng.hpp"

namespace lanesig::nnet {

std::string to_string(LossMode m) {
    switch (m) {
        case LossMode::weighted: return "weighted";
        case LossMode::uniform: return "uniform";
        case LossMode::last_cell: return "last_cell";
    }
    throw std::invalid_argument("invalid loss mode value");
}

LossMode loss_mode_from_string(const std::string& s) {
    if (s == "weighted") return LossMode::weighted;
    if (s == "uniform") return LossMode::uniform;
    if (s == "last_cell") return LossMode::last_cell;
    throw std::invalid_argument("unknown loss mode: " + s);
}

std::vector<double> cell_loss_weights(std::size_t n, LossMode mode) {
    if (n < 1) throw std::invalid_argument("need at least one cell");
    std::vector<double> w(n, 0.0);
    switch (mode) {
        case LossMode::weighted:
            for (std::size_t i = 0; i < n; ++i)
                w[i] = 2.0 * static_cast<double>(i + 1) /
                       (static_cast<double>(n) * static_cast<double>(n + 1));
            break;
        case LossMode::uniform:
            std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(n));
            break;
        case LossMode::last_cell:
            w[n - 1] = 1.0;
            break;
    }
    return w;
}

std::vector<double> avg_pool(std::span<const double> x, std::uint64_t kernel,
                             std::uint64_t stride) {
    if (kernel < 1 || stride < 1)
        throw std::invalid_argument("pooling kernel and stride must be >= 1");
    if (x.size() < kernel)
        throw std::invalid_argument("signal shorter than the pooling kernel");
    const std::size_t count =
        static_cast<std::size_t>((x.size() - kernel) / stride + 1);
    std::vector<double> out(count);
    for (std::size_t j = 0; j < count; ++j) {
        const std::size_t at = j * static_cast<std::size_t>(stride);
        double sum = 0.0;
        for (std::size_t k = 0; k < kernel; ++k) sum += x[at + k];
        out[j] = sum / static_cast<double>(kernel);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

void ModelSpec::validate() const {
    if (pool_kernel < 1 || pool_stride < 1)
        throw std::invalid_argument("pooling kernel and stride must be >= 1");
    if (input_dim < 1 || hidden_dim < 1 || n_lanes < 1 || n_cells < 1)
        throw std::invalid_argument("model dimensions must be >= 1");
    if (cell_len() % 2 != 0)
        throw std::invalid_argument(
            "cell length (D-1)*S + K must be even so cells can advance by "
            "half a cell");
}

std::uint64_t ModelSpec::cell_len() const {
    return static_cast<std::uint64_t>(input_dim - 1) * pool_stride + pool_kernel;
}

std::uint64_t ModelSpec::subdrive_len() const {
    return static_cast<std::uint64_t>(n_cells + 1) * (cell_len() / 2);
}

std::size_t ModelSpec::head_w_size() const {
    return (shared_head ? 1 : n_cells) * n_lanes * hidden_dim;
}

std::size_t ModelSpec::head_b_size() const {
    return (shared_head ? 1 : n_cells) * n_lanes;
}

std::size_t ModelSpec::param_count() const {
    const std::size_t H = hidden_dim;
    const std::size_t l1 = 4 * H * input_dim + 4 * H * H + 8 * H;
    const std::size_t l2 = 4 * H * H + 4 * H * H + 8 * H;
    return l1 + l2 + head_w_size() + head_b_size();
}

namespace {

template <typename T>
std::vector<std::span<T>> spans_of(LstmLayer<T>& a, LstmLayer<T>& b,
                                   std::vector<T>& hw, std::vector<T>& hb) {
    return {std::span<T>(a.W_ih), std::span<T>(a.W_hh), std::span<T>(a.b_ih),
            std::span<T>(a.b_hh), std::span<T>(b.W_ih), std::span<T>(b.W_hh),
            std::span<T>(b.b_ih), std::span<T>(b.b_hh), std::span<T>(hw),
            std::span<T>(hb)};
}

template <typename T>
std::vector<std::span<const T>> spans_of(const LstmLayer<T>& a,
                                         const LstmLayer<T>& b,
                                         const std::vector<T>& hw,
                                         const std::vector<T>& hb) {
    return {std::span<const T>(a.W_ih), std::span<const T>(a.W_hh),
            std::span<const T>(a.b_ih), std::span<const T>(a.b_hh),
            std::span<const T>(b.W_ih), std::span<const T>(b.W_hh),
            std::span<const T>(b.b_ih), std::span<const T>(b.b_hh),
            std::span<const T>(hw),     std::span<const T>(hb)};
}

template <typename T>
void size_layer(LstmLayer<T>& l, std::size_t in_dim, std::size_t H) {
    l.W_ih.assign(4 * H * in_dim, T(0));
    l.W_hh.assign(4 * H * H, T(0));
    l.b_ih.assign(4 * H, T(0));
    l.b_hh.assign(4 * H, T(0));
}

template <typename To, typename From>
Model<To> convert_model(const Model<From>& m) {
    Model<To> out;
    out.spec = m.spec;
    size_layer(out.layer1, m.spec.input_dim, m.spec.hidden_dim);
    size_layer(out.layer2, m.spec.hidden_dim, m.spec.hidden_dim);
    out.head_W.assign(m.spec.head_w_size(), To(0));
    out.head_b.assign(m.spec.head_b_size(), To(0));
    auto src = m.param_spans();
    auto dst = out.param_spans();
    for (std::size_t s = 0; s < src.size(); ++s)
        for (std::size_t k = 0; k < src[s].size(); ++k)
            dst[s][k] = static_cast<To>(src[s][k]);
    return out;
}

}  // namespace

template <typename T>
std::vector<std::span<T>> Model<T>::param_spans() {
    return spans_of(layer1, layer2, head_W, head_b);
}

template <typename T>
std::vector<std::span<const T>> Model<T>::param_spans() const {
    return spans_of(layer1, layer2, head_W, head_b);
}

template <typename T>
Model<T> make_model(const ModelSpec& spec, std::uint64_t seed) {
    spec.validate();
    Model<T> m;
    m.spec = spec;
    const std::size_t H = spec.hidden_dim;
    size_layer(m.layer1, spec.input_dim, H);
    size_layer(m.layer2, H, H);
    m.head_W.assign(spec.head_w_size(), T(0));
    m.head_b.assign(spec.head_b_size(), T(0));

    Rng rng(seed);
    const double lim = 1.0 / std::sqrt(static_cast<double>(H));
    auto fill = [&](std::vector<T>& w) {
        for (auto& v : w) v = static_cast<T>(rng.uniform(-lim, lim));
    };
    fill(m.layer1.W_ih);
    fill(m.layer1.W_hh);
    fill(m.layer2.W_ih);
    fill(m.layer2.W_hh);
    fill(m.head_W);
    // Forget-gate input bias starts at 1 to keep early memory open.
    for (std::size_t j = 0; j < H; ++j) {
        m.layer1.b_ih[H + j] = T(1);
        m.layer2.b_ih[H + j] = T(1);
    }
    return m;
}

Model<double> widen(const Model<float>& m) { return convert_model<double>(m); }

Model<float> narrow(const Model<double>& m) { return convert_model<float>(m); }

// ---------------------------------------------------------------------------
// Forward
// ---------------------------------------------------------------------------

template <typename T>
CellInputs<T> pool_cells(const ModelSpec& spec, std::span<const double> samples) {
    spec.validate();
    if (samples.size() != spec.subdrive_len())
        throw std::invalid_argument(
            "sub-drive length does not match the model geometry");
    const std::uint64_t d = spec.cell_len();
    const std::uint64_t m = d / 2;
    CellInputs<T> cells(spec.n_cells);
    for (std::size_t t = 0; t < spec.n_cells; ++t) {
        const auto view = samples.subspan(static_cast<std::size_t>(t * m),
                                          static_cast<std::size_t>(d));
        const auto pooled = avg_pool(view, spec.pool_kernel, spec.pool_stride);
        cells[t].resize(pooled.size());
        for (std::size_t k = 0; k < pooled.size(); ++k)
            cells[t][k] = static_cast<T>(pooled[k]);
    }
    return cells;
}

namespace {

template <typename T>
T sigmoid(T x) {
    return T(1) / (T(1) + std::exp(-x));
}

// One LSTM step at cell t. `gates` receives the post-activation gate values
// (i, f, g, o blocks of H each); c/tanh_c/h receive the cell state, its tanh,
// and the hidden output. h_prev/c_prev are null at t = 0 (stateless start).
template <typename T>
void lstm_step(const LstmLayer<T>& L, std::size_t in_dim, std::size_t H,
               const T* x, const T* h_prev, const T* c_prev, T* gates, T* c,
               T* tanh_c, T* h) {
    for (std::size_t r = 0; r < 4 * H; ++r) {
        T acc = L.b_ih[r] + L.b_hh[r];
        const T* wi = L.W_ih.data() + r * in_dim;
        for (std::size_t k = 0; k < in_dim; ++k) acc += wi[k] * x[k];
        if (h_prev) {
            const T* wh = L.W_hh.data() + r * H;
            for (std::size_t k = 0; k < H; ++k) acc += wh[k] * h_prev[k];
        }
        gates[r] = acc;
    }
    for (std::size_t j = 0; j < H; ++j) {
        const T gi = sigmoid(gates[j]);
        const T gf = sigmoid(gates[H + j]);
        const T gg = std::tanh(gates[2 * H + j]);
        const T go = sigmoid(gates[3 * H + j]);
        gates[j] = gi;
        gates[H + j] = gf;
        gates[2 * H + j] = gg;
        gates[3 * H + j] = go;
        const T cp = c_prev ? c_prev[j] : T(0);
        c[j] = gf * cp + gi * gg;
        tanh_c[j] = std::tanh(c[j]);
        h[j] = go * tanh_c[j];
    }
}

template <typename T>
void size_cache_layer(typename ForwardCache<T>::Layer& l, std::size_t n,
                      std::size_t H) {
    l.gates.assign(n, std::vector<T>(4 * H, T(0)));
    l.c.assign(n, std::vector<T>(H, T(0)));
    l.tanh_c.assign(n, std::vector<T>(H, T(0)));
    l.h.assign(n, std::vector<T>(H, T(0)));
}

}  // namespace

template <typename T>
CellOutputs<T> forward(const Model<T>& m, const CellInputs<T>& cells,
                       ForwardCache<T>* cache) {
    const ModelSpec& sp = m.spec;
    sp.validate();
    if (cells.size() != sp.n_cells)
        throw std::invalid_argument("cell count does not match the model");
    for (const auto& c : cells)
        if (c.size() != sp.input_dim)
            throw std::invalid_argument("cell input size does not match D");
    const std::size_t H = sp.hidden_dim;
    const std::size_t n = sp.n_cells;
    const std::size_t L = sp.n_lanes;

    ForwardCache<T> local;
    ForwardCache<T>& fc = cache ? *cache : local;
    size_cache_layer<T>(fc.l1, n, H);
    size_cache_layer<T>(fc.l2, n, H);

    CellOutputs<T> out;
    out.logits.assign(n, std::vector<T>(L, T(0)));
    out.probs.assign(n, std::vector<T>(L, T(0)));
    out.predictions.assign(n, 0);

    for (std::size_t t = 0; t < n; ++t) {
        const T* h1p = t ? fc.l1.h[t - 1].data() : nullptr;
        const T* c1p = t ? fc.l1.c[t - 1].data() : nullptr;
        lstm_step(m.layer1, sp.input_dim, H, cells[t].data(), h1p, c1p,
                  fc.l1.gates[t].data(), fc.l1.c[t].data(),
                  fc.l1.tanh_c[t].data(), fc.l1.h[t].data());
        const T* h2p = t ? fc.l2.h[t - 1].data() : nullptr;
        const T* c2p = t ? fc.l2.c[t - 1].data() : nullptr;
        lstm_step(m.layer2, H, H, fc.l1.h[t].data(), h2p, c2p,
                  fc.l2.gates[t].data(), fc.l2.c[t].data(),
                  fc.l2.tanh_c[t].data(), fc.l2.h[t].data());

        const std::size_t wo = sp.shared_head ? 0 : t * L * H;
        const std::size_t bo = sp.shared_head ? 0 : t * L;
        auto& z = out.logits[t];
        for (std::size_t l = 0; l < L; ++l) {
            T acc = m.head_b[bo + l];
            const T* w = m.head_W.data() + wo + l * H;
            const T* h2 = fc.l2.h[t].data();
            for (std::size_t j = 0; j < H; ++j) acc += w[j] * h2[j];
            z[l] = acc;
        }
        const T zmax = *std::max_element(z.begin(), z.end());
        T denom = T(0);
        for (std::size_t l = 0; l < L; ++l) {
            out.probs[t][l] = std::exp(z[l] - zmax);
            denom += out.probs[t][l];
        }
        for (std::size_t l = 0; l < L; ++l) out.probs[t][l] /= denom;
        out.predictions[t] = static_cast<int>(
            std::max_element(z.begin(), z.end()) - z.begin());
    }
    return out;
}

template <typename T>
CellOutputs<T> forward(const Model<T>& m, std::span<const double> samples) {
    return forward(m, pool_cells<T>(m.spec, samples));
}

// ---------------------------------------------------------------------------
// Loss
// ---------------------------------------------------------------------------

namespace {

// Cross-entropy and its weighted combination, evaluated with accumulator
// type A (double normally; long double inside grad_check, where the
// finite-difference subtraction would otherwise drown tiny gradients in
// evaluation roundoff).
template <typename A, typename T>
A ce_from_logits(const std::vector<T>& z, int target) {
    if (target < 0 || static_cast<std::size_t>(target) >= z.size())
        throw std::invalid_argument("target class out of range");
    A zmax = -std::numeric_limits<A>::infinity();
    for (T v : z) zmax = std::max(zmax, static_cast<A>(v));
    A denom = A(0);
    for (T v : z) denom += std::exp(static_cast<A>(v) - zmax);
    return std::log(denom) -
           (static_cast<A>(z[static_cast<std::size_t>(target)]) - zmax);
}

template <typename A, typename T>
A loss_acc(const CellOutputs<T>& out, const std::vector<int>& targets,
           LossMode mode) {
    const std::size_t n = out.logits.size();
    if (n == 0) throw std::invalid_argument("no cell outputs");
    if (targets.size() != n)
        throw std::invalid_argument("need one target per cell");
    const auto w = cell_loss_weights(n, mode);
    A total = A(0);
    for (std::size_t t = 0; t < n; ++t) {
        if (w[t] == 0.0) continue;
        const int tgt = mode == LossMode::uniform ? targets[t] : targets.back();
        total += static_cast<A>(w[t]) * ce_from_logits<A>(out.logits[t], tgt);
    }
    return total;
}

}  // namespace

template <typename T>
double loss(const CellOutputs<T>& out, const std::vector<int>& targets,
            LossMode mode) {
    return loss_acc<double>(out, targets, mode);
}

// ---------------------------------------------------------------------------
// Gradients / backward
// ---------------------------------------------------------------------------

template <typename T>
Gradients<T> Gradients<T>::zeros(const ModelSpec& spec) {
    Gradients<T> g;
    size_layer(g.layer1, spec.input_dim, spec.hidden_dim);
    size_layer(g.layer2, spec.hidden_dim, spec.hidden_dim);
    g.head_W.assign(spec.head_w_size(), T(0));
    g.head_b.assign(spec.head_b_size(), T(0));
    return g;
}

template <typename T>
void Gradients<T>::clear() {
    for (auto s : param_spans()) std::fill(s.begin(), s.end(), T(0));
}

template <typename T>
double Gradients<T>::squared_norm() const {
    double total = 0.0;
    for (auto s : param_spans())
        for (T v : s) total += static_cast<double>(v) * static_cast<double>(v);
    return total;
}

template <typename T>
std::vector<std::span<T>> Gradients<T>::param_spans() {
    return spans_of(layer1, layer2, head_W, head_b);
}

template <typename T>
std::vector<std::span<const T>> Gradients<T>::param_spans() const {
    return spans_of(layer1, layer2, head_W, head_b);
}

namespace {

// Backpropagation through time over one LSTM layer. `dh_in` carries the
// external gradient reaching each cell's hidden output; `xs(t)` yields the
// layer input at cell t; `dx_out`, when present, accumulates gradients with
// respect to those inputs.
template <typename T, typename XsFn>
void lstm_backward(const LstmLayer<T>& L, std::size_t in_dim, std::size_t H,
                   std::size_t n, XsFn xs,
                   const typename ForwardCache<T>::Layer& fc,
                   const std::vector<std::vector<T>>& dh_in, LstmLayer<T>& g,
                   std::vector<std::vector<T>>* dx_out) {
    std::vector<T> dh_next(H, T(0)), dc_next(H, T(0)), da(4 * H, T(0));
    for (std::size_t t = n; t-- > 0;) {
        const T* gi = fc.gates[t].data();
        const T* gf = gi + H;
        const T* gg = gi + 2 * H;
        const T* go = gi + 3 * H;
        for (std::size_t j = 0; j < H; ++j) {
            const T dh = dh_in[t][j] + dh_next[j];
            const T tc = fc.tanh_c[t][j];
            const T dov = dh * tc;
            const T dc = dh * go[j] * (T(1) - tc * tc) + dc_next[j];
            const T cp = t ? fc.c[t - 1][j] : T(0);
            const T div = dc * gg[j];
            const T dgv = dc * gi[j];
            const T dfv = dc * cp;
            dc_next[j] = dc * gf[j];
            da[j] = div * gi[j] * (T(1) - gi[j]);
            da[H + j] = dfv * gf[j] * (T(1) - gf[j]);
            da[2 * H + j] = dgv * (T(1) - gg[j] * gg[j]);
            da[3 * H + j] = dov * go[j] * (T(1) - go[j]);
        }
        const T* x = xs(t);
        const T* hp = t ? fc.h[t - 1].data() : nullptr;
        for (std::size_t r = 0; r < 4 * H; ++r) {
            const T d = da[r];
            g.b_ih[r] += d;
            g.b_hh[r] += d;
            T* wi = g.W_ih.data() + r * in_dim;
            for (std::size_t k = 0; k < in_dim; ++k) wi[k] += d * x[k];
            if (hp) {
                T* wh = g.W_hh.data() + r * H;
                for (std::size_t k = 0; k < H; ++k) wh[k] += d * hp[k];
            }
        }
        std::fill(dh_next.begin(), dh_next.end(), T(0));
        for (std::size_t r = 0; r < 4 * H; ++r) {
            const T d = da[r];
            const T* wh = L.W_hh.data() + r * H;
            for (std::size_t k = 0; k < H; ++k) dh_next[k] += wh[k] * d;
        }
        if (dx_out) {
            auto& dx = (*dx_out)[t];
            for (std::size_t r = 0; r < 4 * H; ++r) {
                const T d = da[r];
                const T* wi = L.W_ih.data() + r * in_dim;
                for (std::size_t k = 0; k < in_dim; ++k) dx[k] += wi[k] * d;
            }
        }
    }
}

template <typename T>
double backward_impl(const Model<T>& m, const CellInputs<T>& cells,
                     const std::vector<int>& targets, Gradients<T>& grads,
                     CellOutputs<T>* out_opt) {
    const ModelSpec& sp = m.spec;
    const std::size_t H = sp.hidden_dim;
    const std::size_t n = sp.n_cells;
    const std::size_t L = sp.n_lanes;

    ForwardCache<T> fc;
    CellOutputs<T> out = forward(m, cells, &fc);
    const double total = loss(out, targets, sp.loss_mode);
    const auto w = cell_loss_weights(n, sp.loss_mode);

    // Head backward; collect the gradient reaching each cell's layer-2 h.
    std::vector<std::vector<T>> dh2(n, std::vector<T>(H, T(0)));
    for (std::size_t t = 0; t < n; ++t) {
        if (w[t] == 0.0) continue;
        const int tgt =
            sp.loss_mode == LossMode::uniform ? targets[t] : targets.back();
        const std::size_t wo = sp.shared_head ? 0 : t * L * H;
        const std::size_t bo = sp.shared_head ? 0 : t * L;
        const T* h2 = fc.l2.h[t].data();
        for (std::size_t l = 0; l < L; ++l) {
            const T dz = static_cast<T>(w[t]) *
                         (out.probs[t][l] -
                          (static_cast<int>(l) == tgt ? T(1) : T(0)));
            grads.head_b[bo + l] += dz;
            T* gw = grads.head_W.data() + wo + l * H;
            const T* mw = m.head_W.data() + wo + l * H;
            for (std::size_t j = 0; j < H; ++j) {
                gw[j] += dz * h2[j];
                dh2[t][j] += mw[j] * dz;
            }
        }
    }

    // Layer 2 BPTT; its input gradients become layer 1's external dh.
    std::vector<std::vector<T>> dh1(n, std::vector<T>(H, T(0)));
    std::vector<std::vector<T>>* no_dx = nullptr;
    lstm_backward(
        m.layer2, H, H, n, [&](std::size_t t) { return fc.l1.h[t].data(); },
        fc.l2, dh2, grads.layer2, &dh1);
    lstm_backward(
        m.layer1, sp.input_dim, H, n,
        [&](std::size_t t) { return cells[t].data(); }, fc.l1, dh1,
        grads.layer1, no_dx);

    if (out_opt) *out_opt = std::move(out);
    return total;
}

}  // namespace

template <typename T>
double backward(const Model<T>& m, const CellInputs<T>& cells,
                const std::vector<int>& targets, Gradients<T>& grads) {
    return backward_impl(m, cells, targets, grads,
                         static_cast<CellOutputs<T>*>(nullptr));
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0))
        throw std::invalid_argument("learning rate must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
    if (!(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0))
        throw std::invalid_argument("Adam betas must lie in (0, 1)");
    if (!(epsilon > 0.0)) throw std::invalid_argument("Adam epsilon must be > 0");
    if (!(clip_norm > 0.0)) throw std::invalid_argument("clip norm must be > 0");
}

template <typename T>
AdamState<T> AdamState<T>::zeros(const ModelSpec& spec) {
    AdamState<T> s;
    s.m = Gradients<T>::zeros(spec);
    s.v = Gradients<T>::zeros(spec);
    s.t = 0;
    return s;
}

template <typename T>
double accuracy_metric(const CellOutputs<T>& out,
                       const std::vector<int>& targets, LossMode mode) {
    const std::size_t n = out.predictions.size();
    if (n == 0 || targets.size() != n)
        throw std::invalid_argument("need one target per cell");
    if (mode == LossMode::uniform) {
        std::size_t hit = 0;
        for (std::size_t t = 0; t < n; ++t)
            if (out.predictions[t] == targets[t]) ++hit;
        return static_cast<double>(hit) / static_cast<double>(n);
    }
    return out.predictions.back() == targets.back() ? 1.0 : 0.0;
}

template <typename T>
StepStats train_step(Model<T>& m, const std::vector<Sample<T>>& samples,
                     std::span<const std::size_t> batch, AdamState<T>& opt,
                     const TrainConfig& cfg) {
    cfg.validate();
    if (batch.empty()) throw std::invalid_argument("empty batch");

    Gradients<T> g = Gradients<T>::zeros(m.spec);
    double total_loss = 0.0;
    double total_acc = 0.0;
    CellOutputs<T> out;
    for (const std::size_t idx : batch) {
        if (idx >= samples.size())
            throw std::invalid_argument("batch index out of range");
        const Sample<T>& s = samples[idx];
        total_loss += backward_impl(m, s.cells, s.targets, g, &out);
        total_acc += accuracy_metric(out, s.targets, m.spec.loss_mode);
    }
    const double b = static_cast<double>(batch.size());
    StepStats st;
    st.loss = total_loss / b;
    st.accuracy = total_acc / b;
    if (!std::isfinite(st.loss))
        throw std::runtime_error(
            "training diverged: non-finite batch loss at Adam step " +
            std::to_string(opt.t + 1));

    // Mean gradient, then global-norm clipping folded into one scale factor.
    const double mean_norm = std::sqrt(g.squared_norm()) / b;
    double scale = 1.0 / b;
    if (mean_norm > cfg.clip_norm) {
        scale *= cfg.clip_norm / mean_norm;
        st.clipped = true;
    }

    opt.t += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(opt.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(opt.t));
    auto ps = m.param_spans();
    auto gs = g.param_spans();
    auto ms = opt.m.param_spans();
    auto vs = opt.v.param_spans();
    for (std::size_t s = 0; s < ps.size(); ++s) {
        for (std::size_t k = 0; k < ps[s].size(); ++k) {
            const double gk = static_cast<double>(gs[s][k]) * scale;
            const double mk =
                cfg.beta1 * static_cast<double>(ms[s][k]) + (1.0 - cfg.beta1) * gk;
            const double vk = cfg.beta2 * static_cast<double>(vs[s][k]) +
                              (1.0 - cfg.beta2) * gk * gk;
            ms[s][k] = static_cast<T>(mk);
            vs[s][k] = static_cast<T>(vk);
            const double update = cfg.learning_rate * (mk / bc1) /
                                  (std::sqrt(vk / bc2) + cfg.epsilon);
            ps[s][k] = static_cast<T>(static_cast<double>(ps[s][k]) - update);
        }
    }
    return st;
}

template <typename T>
TrainHistory train(Model<T>& m, const std::vector<Sample<T>>& train_set,
                   const std::vector<Sample<T>>& val_set,
                   const TrainConfig& cfg) {
    cfg.validate();
    if (train_set.empty())
        throw std::invalid_argument("training set is empty");

    TrainHistory hist;
    hist.clip_threshold = cfg.clip_norm;
    if (cfg.max_epochs == 0) return hist;

    AdamState<T> opt = AdamState<T>::zeros(m.spec);
    Model<T> best = m;
    double best_val = -1.0;
    double prev_val = std::numeric_limits<double>::quiet_NaN();

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        const auto batches = pipeline::make_batches(
            train_set.size(), cfg.batch_size, derive_seed(cfg.seed, epoch));
        double ep_loss = 0.0, ep_acc = 0.0;
        std::size_t seen = 0, clips = 0;
        for (const auto& batch : batches) {
            const StepStats st = train_step(m, train_set, batch, opt, cfg);
            ep_loss += st.loss * static_cast<double>(batch.size());
            ep_acc += st.accuracy * static_cast<double>(batch.size());
            seen += batch.size();
            clips += st.clipped ? 1 : 0;
        }
        EpochStats es;
        es.train_loss = ep_loss / static_cast<double>(seen);
        es.train_accuracy = ep_acc / static_cast<double>(seen);
        es.val_accuracy = std::numeric_limits<double>::quiet_NaN();
        es.clip_events = clips;

        if (!val_set.empty()) {
            double acc = 0.0;
            for (const auto& s : val_set)
                acc += accuracy_metric(forward(m, s.cells), s.targets,
                                       m.spec.loss_mode);
            es.val_accuracy = acc / static_cast<double>(val_set.size());
        }
        hist.epochs.push_back(es);

        if (!val_set.empty()) {
            if (es.val_accuracy > best_val) {
                best = m;
                best_val = es.val_accuracy;
                hist.best_epoch = epoch;
            }
            if (!std::isnan(prev_val) && es.val_accuracy < prev_val) break;
            prev_val = es.val_accuracy;
        } else {
            hist.best_epoch = epoch;
        }
    }
    if (!val_set.empty()) m = best;
    return hist;
}

template <typename T>
Model<T> truncate(const Model<T>& m, std::size_t i) {
    if (i < 1 || i > m.spec.n_cells)
        throw std::invalid_argument("truncation cell index out of range");
    Model<T> out = m;
    out.spec.n_cells = i;
    if (!m.spec.shared_head) {
        out.head_W.resize(out.spec.head_w_size());
        out.head_b.resize(out.spec.head_b_size());
    }
    return out;
}

double grad_check(const Model<double>& m, const Sample<double>& sample,
                  double epsilon, std::uint64_t subsample_seed) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
    Gradients<double> g = Gradients<double>::zeros(m.spec);
    backward(m, sample.cells, sample.targets, g);
    const auto gs = g.param_spans();

    // The difference (L+ - L-) shrinks with the gradient magnitude, so the
    // probe model is evaluated in extended precision: otherwise evaluation
    // roundoff (~1e-16 of the loss) dominates the quotient for small
    // gradients and the comparison measures noise instead of the backward
    // pass.
    Model<long double> probe = convert_model<long double>(m);
    CellInputs<long double> cells_ld(sample.cells.size());
    for (std::size_t c = 0; c < sample.cells.size(); ++c)
        cells_ld[c].assign(sample.cells[c].begin(), sample.cells[c].end());
    auto ps = probe.param_spans();

    // Flat index -> (span, offset) map.
    std::vector<std::pair<std::size_t, std::size_t>> where;
    where.reserve(m.spec.param_count());
    for (std::size_t s = 0; s < ps.size(); ++s)
        for (std::size_t k = 0; k < ps[s].size(); ++k) where.emplace_back(s, k);

    std::vector<std::size_t> chosen(where.size());
    for (std::size_t i = 0; i < chosen.size(); ++i) chosen[i] = i;
    constexpr std::size_t kMaxChecks = 10000;
    if (chosen.size() > kMaxChecks) {
        Rng rng(subsample_seed);
        for (std::size_t i = 0; i < kMaxChecks; ++i) {
            const std::size_t j =
                i + static_cast<std::size_t>(rng.uniform_index(chosen.size() - i));
            std::swap(chosen[i], chosen[j]);
        }
        chosen.resize(kMaxChecks);
    }

    const long double eps = static_cast<long double>(epsilon);
    double worst = 0.0;
    for (const std::size_t flat : chosen) {
        const auto [s, k] = where[flat];
        const long double orig = ps[s][k];
        ps[s][k] = orig + eps;
        const long double lp = loss_acc<long double>(
            forward(probe, cells_ld), sample.targets, m.spec.loss_mode);
        ps[s][k] = orig - eps;
        const long double lm = loss_acc<long double>(
            forward(probe, cells_ld), sample.targets, m.spec.loss_mode);
        ps[s][k] = orig;
        const double gn = static_cast<double>((lp - lm) / (2.0L * eps));
        const double ga = gs[s][k];
        const double rel = std::abs(ga - gn) /
                           std::max({std::abs(ga), std::abs(gn), 1e-12});
        worst = std::max(worst, rel);
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[5] = {'L', 'N', 'E', 'T', '1'};

std::uint32_t crc32(const unsigned char* data, std::size_t len) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int b = 0; b < 8; ++b)
                c = (c & 1) ? (0xEDB88320u ^ (c >> 1)) : (c >> 1);
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t crc = 0xFFFFFFFFu;
    for (std::size_t i = 0; i < len; ++i)
        crc = table[(crc ^ data[i]) & 0xFFu] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

void append_u32(std::vector<unsigned char>& buf, std::uint32_t v) {
    buf.push_back(static_cast<unsigned char>(v & 0xFF));
    buf.push_back(static_cast<unsigned char>((v >> 8) & 0xFF));
    buf.push_back(static_cast<unsigned char>((v >> 16) & 0xFF));
    buf.push_back(static_cast<unsigned char>((v >> 24) & 0xFF));
}

std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) |
           (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

std::uint64_t save_checkpoint(const Model<float>& m, const std::string& path) {
    m.spec.validate();
    if (m.spec.pool_kernel > UINT32_MAX || m.spec.pool_stride > UINT32_MAX)
        throw std::invalid_argument("pooling geometry exceeds the file format");

    std::vector<unsigned char> buf;
    buf.insert(buf.end(), kMagic, kMagic + sizeof(kMagic));
    append_u32(buf, 1);  // version
    append_u32(buf, static_cast<std::uint32_t>(m.spec.pool_kernel));
    append_u32(buf, static_cast<std::uint32_t>(m.spec.pool_stride));
    append_u32(buf, static_cast<std::uint32_t>(m.spec.input_dim));
    append_u32(buf, static_cast<std::uint32_t>(m.spec.hidden_dim));
    append_u32(buf, static_cast<std::uint32_t>(m.spec.n_lanes));
    append_u32(buf, static_cast<std::uint32_t>(m.spec.n_cells));
    append_u32(buf, static_cast<std::uint32_t>(m.spec.loss_mode));
    buf.push_back(m.spec.shared_head ? 1 : 0);

    for (const auto s : m.param_spans())
        for (const float v : s) append_u32(buf, std::bit_cast<std::uint32_t>(v));

    append_u32(buf, crc32(buf.data(), buf.size()));

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
    if (!f) throw std::runtime_error("write failed: " + path);
    return buf.size();
}

Model<float> load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::vector<unsigned char> buf(
        (std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    constexpr std::size_t kHeader = sizeof(kMagic) + 8 * 4 + 1;
    if (buf.size() < kHeader + 4)
        throw std::runtime_error("checkpoint " + path + ": file too short");
    if (std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("checkpoint " + path + ": bad magic");

    const unsigned char* p = buf.data() + sizeof(kMagic);
    const std::uint32_t version = read_u32(p);
    if (version != 1)
        throw std::runtime_error("checkpoint " + path +
                                 ": unsupported version " +
                                 std::to_string(version));
    ModelSpec sp;
    sp.pool_kernel = read_u32(p + 4);
    sp.pool_stride = read_u32(p + 8);
    sp.input_dim = read_u32(p + 12);
    sp.hidden_dim = read_u32(p + 16);
    sp.n_lanes = read_u32(p + 20);
    sp.n_cells = read_u32(p + 24);
    const std::uint32_t mode = read_u32(p + 28);
    if (mode > 2)
        throw std::runtime_error("checkpoint " + path + ": bad loss mode");
    sp.loss_mode = static_cast<LossMode>(mode);
    const unsigned char shared = p[32];
    if (shared > 1)
        throw std::runtime_error("checkpoint " + path + ": bad head flag");
    sp.shared_head = shared == 1;
    try {
        sp.validate();
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error("checkpoint " + path + ": " + e.what());
    }

    const std::size_t expected = kHeader + 4 * sp.param_count() + 4;
    if (buf.size() != expected)
        throw std::runtime_error(
            "checkpoint " + path + ": size " + std::to_string(buf.size()) +
            " does not match the header (expected " + std::to_string(expected) +
            " bytes)");
    const std::uint32_t stored = read_u32(buf.data() + buf.size() - 4);
    if (crc32(buf.data(), buf.size() - 4) != stored)
        throw std::runtime_error("checkpoint " + path + ": CRC mismatch");

    Model<float> m;
    m.spec = sp;
    size_layer(m.layer1, sp.input_dim, sp.hidden_dim);
    size_layer(m.layer2, sp.hidden_dim, sp.hidden_dim);
    m.head_W.assign(sp.head_w_size(), 0.0f);
    m.head_b.assign(sp.head_b_size(), 0.0f);
    const unsigned char* at = buf.data() + kHeader;
    for (auto s : m.param_spans())
        for (float& v : s) {
            v = std::bit_cast<float>(read_u32(at));
            at += 4;
        }
    return m;
}

// ---------------------------------------------------------------------------
// Lane id mapping
// ---------------------------------------------------------------------------

LaneIndexMap::LaneIndexMap(std::vector<int> lane_ids) : ids_(std::move(lane_ids)) {
    std::sort(ids_.begin(), ids_.end());
    ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
    if (ids_.empty()) throw std::invalid_argument("no lane ids given");
}

std::size_t LaneIndexMap::index_of(int lane_id) const {
    const auto it = std::lower_bound(ids_.begin(), ids_.end(), lane_id);
    if (it == ids_.end() || *it != lane_id)
        throw std::invalid_argument("unknown lane id " + std::to_string(lane_id));
    return static_cast<std::size_t>(it - ids_.begin());
}

int LaneIndexMap::id_of(std::size_t index) const {
    if (index >= ids_.size())
        throw std::invalid_argument("lane index out of range");
    return ids_[index];
}

// ---------------------------------------------------------------------------
// Explicit instantiations (float for training, double for verification)
// ---------------------------------------------------------------------------

template struct Model<float>;
template struct Model<double>;
template struct Gradients<float>;
template struct Gradients<double>;
template struct AdamState<float>;
template struct AdamState<double>;

template Model<float> make_model<float>(const ModelSpec&, std::uint64_t);
template Model<double> make_model<double>(const ModelSpec&, std::uint64_t);

template CellInputs<float> pool_cells<float>(const ModelSpec&,
                                             std::span<const double>);
template CellInputs<double> pool_cells<double>(const ModelSpec&,
                                               std::span<const double>);

template CellOutputs<float> forward<float>(const Model<float>&,
                                           const CellInputs<float>&,
                                           ForwardCache<float>*);
template CellOutputs<double> forward<double>(const Model<double>&,
                                             const CellInputs<double>&,
                                             ForwardCache<double>*);
template CellOutputs<float> forward<float>(const Model<float>&,
                                           std::span<const double>);
template CellOutputs<double> forward<double>(const Model<double>&,
                                             std::span<const double>);

template double loss<float>(const CellOutputs<float>&, const std::vector<int>&,
                            LossMode);
template double loss<double>(const CellOutputs<double>&,
                             const std::vector<int>&, LossMode);

template double backward<float>(const Model<float>&, const CellInputs<float>&,
                                const std::vector<int>&, Gradients<float>&);
template double backward<double>(const Model<double>&,
                                 const CellInputs<double>&,
                                 const std::vector<int>&, Gradients<double>&);

template double accuracy_metric<float>(const CellOutputs<float>&,
                                       const std::vector<int>&, LossMode);
template double accuracy_metric<double>(const CellOutputs<double>&,
                                        const std::vector<int>&, LossMode);

template StepStats train_step<float>(Model<float>&,
                                     const std::vector<Sample<float>>&,
                                     std::span<const std::size_t>,
                                     AdamState<float>&, const TrainConfig&);
template StepStats train_step<double>(Model<double>&,
                                      const std::vector<Sample<double>>&,
                                      std::span<const std::size_t>,
                                      AdamState<double>&, const TrainConfig&);

template TrainHistory train<float>(Model<float>&,
                                   const std::vector<Sample<float>>&,
                                   const std::vector<Sample<float>>&,
                                   const TrainConfig&);
template TrainHistory train<double>(Model<double>&,
                                    const std::vector<Sample<double>>&,
                                    const std::vector<Sample<double>>&,
                                    const TrainConfig&);

template Model<float> truncate<float>(const Model<float>&, std::size_t);
template Model<double> truncate<double>(const Model<double>&, std::size_t);

}  // namespace lanesig::nnet
