#include "otom/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <stdexcept>

#include "model_io.hpp"
#include "otom/mat.hpp"
#include "otom/prng.hpp"

namespace otom {
namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double sign_of(double x) { return (x > 0.0) - (x < 0.0); }

void ensure_size(std::vector<double>& v, std::size_t n) {
    if (v.size() < n) v.resize(n);
}

// One normalized sequence plus (optionally) its target, as seen by the core.
struct ItemView {
    const std::vector<std::array<double, 5>>* xs = nullptr;
    const std::array<double, 4>* y = nullptr;
};

}  // namespace

double l1_loss(const std::array<double, 4>& pred, const std::array<double, 4>& target) {
    double s = 0.0;
    for (int k = 0; k < 4; ++k) s += std::abs(target[k] - pred[k]);
    return s / 4.0;
}

void lstm_cell_forward(const std::vector<double>& x, const std::vector<double>& h,
                       const std::vector<double>& c, const double* wx, const double* wh,
                       const double* b, int hidden, std::vector<double>* h_out,
                       std::vector<double>* c_out) {
    const std::size_t H = static_cast<std::size_t>(hidden);
    if (hidden < 1) throw std::domain_error("lstm cell: hidden must be >= 1");
    if (h.size() != H || c.size() != H) throw std::domain_error("lstm cell: state size mismatch");
    const std::size_t in = x.size();
    if (in == 0) throw std::domain_error("lstm cell: empty input");
    h_out->assign(H, 0.0);
    c_out->assign(H, 0.0);
    for (std::size_t j = 0; j < H; ++j) {
        double a[4];
        for (int gate = 0; gate < 4; ++gate) {
            const std::size_t row = gate * H + j;
            double acc = b[row];
            for (std::size_t p = 0; p < in; ++p) acc += wx[row * in + p] * x[p];
            for (std::size_t p = 0; p < H; ++p) acc += wh[row * H + p] * h[p];
            a[gate] = acc;
        }
        const double gi = sigmoid(a[0]);
        const double gf = sigmoid(a[1]);
        const double gg = std::tanh(a[2]);
        const double go = sigmoid(a[3]);
        const double cn = gf * c[j] + gi * gg;
        (*c_out)[j] = cn;
        (*h_out)[j] = go * std::tanh(cn);
    }
}

struct BiLstmWorkspace::Impl {
    std::vector<int> order;   // sorted row -> original batch index
    std::vector<int> lens;    // per sorted row
    std::vector<int> active;  // active[t] = rows with len > t

    std::vector<double> X;                   // T*B*5
    std::vector<std::vector<double>> out;    // per layer, T*B*2H
    std::vector<std::vector<double>> gates;  // per layer*2+dir, T*B*4H (post-activation)
    std::vector<std::vector<double>> cc;     // per layer*2+dir, T*B*H
    std::vector<std::vector<double>> wxT;    // per layer*2+dir, in x 4H
    std::vector<std::vector<double>> whT;    // per layer*2+dir, H x 4H
    std::vector<double> headWT;              // 2H x 4

    std::vector<double> feats;  // B*2H
    std::vector<double> pre;    // B*4
    std::vector<double> preds;  // B*4
    std::vector<double> ys;     // B*4 (sorted targets)

    std::vector<double> dA;        // B*4H
    std::vector<double> dh_carry;  // B*H
    std::vector<double> dc_carry;  // B*H
    std::vector<double> dfeats;    // B*2H
    std::vector<double> dpre;      // B*4
    std::vector<double> dout_a;    // T*B*2H
    std::vector<double> dout_b;    // T*B*2H
};

BiLstmWorkspace::BiLstmWorkspace() : impl_(new Impl) {}
BiLstmWorkspace::~BiLstmWorkspace() = default;

namespace {

// Core batched pass. Rows are processed length-sorted (stable by original
// position) so the per-time-step active set is always a prefix. Targets and
// returned loss are optional; gradients are accumulated when grads != null.
double run_core(const BiLstmModel& m, const std::vector<ItemView>& items,
                std::vector<double>* grads, std::vector<std::array<double, 4>>* preds_out,
                BiLstmWorkspace::Impl& w) {
    const int L = m.layers();
    const int H = m.hidden();
    const std::size_t B = items.size();
    if (B == 0) throw std::domain_error("empty batch");
    for (const ItemView& it : items) {
        if (it.xs->empty()) throw std::domain_error("empty input sequence");
    }
    const bool want_loss = items[0].y != nullptr;
    if (grads && !want_loss) throw std::domain_error("gradients need targets");
    if (grads && grads->size() != m.params().size()) {
        throw std::domain_error("gradient buffer size mismatch");
    }

    // --- Sort rows by length (descending), stable in original order.
    w.order.resize(B);
    std::iota(w.order.begin(), w.order.end(), 0);
    std::stable_sort(w.order.begin(), w.order.end(), [&](int a, int b) {
        return items[a].xs->size() > items[b].xs->size();
    });
    w.lens.resize(B);
    for (std::size_t r = 0; r < B; ++r) {
        w.lens[r] = static_cast<int>(items[w.order[r]].xs->size());
    }
    const std::size_t T = static_cast<std::size_t>(w.lens[0]);
    w.active.resize(T);
    {
        std::size_t r = B;
        for (std::size_t t = 0; t < T; ++t) {
            while (r > 0 && static_cast<std::size_t>(w.lens[r - 1]) <= t) --r;
            w.active[t] = static_cast<int>(r);
        }
    }

    const std::size_t H2 = 2 * static_cast<std::size_t>(H);
    const std::size_t H4 = 4 * static_cast<std::size_t>(H);
    const double* P = m.params().data();

    // --- Buffers.
    ensure_size(w.X, T * B * 5);
    w.out.resize(L);
    w.gates.resize(2 * L);
    w.cc.resize(2 * L);
    w.wxT.resize(2 * L);
    w.whT.resize(2 * L);
    for (int l = 0; l < L; ++l) {
        ensure_size(w.out[l], T * B * H2);
        std::fill_n(w.out[l].begin(), T * B * H2, 0.0);
        for (int d = 0; d < 2; ++d) {
            const std::size_t in = static_cast<std::size_t>(m.layer_input_dim(l));
            ensure_size(w.gates[2 * l + d], T * B * H4);
            ensure_size(w.cc[2 * l + d], T * B * H);
            std::fill_n(w.cc[2 * l + d].begin(), T * B * H, 0.0);
            ensure_size(w.wxT[2 * l + d], in * H4);
            ensure_size(w.whT[2 * l + d], H * H4);
            transpose(H4, in, P + m.wx(l, d).offset, in, w.wxT[2 * l + d].data(), H4);
            transpose(H4, H, P + m.wh(l, d).offset, H, w.whT[2 * l + d].data(), H4);
        }
    }
    ensure_size(w.headWT, H2 * 4);
    transpose(4, H2, P + m.head_w().offset, H2, w.headWT.data(), 4);
    ensure_size(w.feats, B * H2);
    ensure_size(w.pre, B * 4);
    ensure_size(w.preds, B * 4);

    // --- Inputs, padded rows never read (reads are bounded by active[t]).
    for (std::size_t r = 0; r < B; ++r) {
        const auto& xs = *items[w.order[r]].xs;
        for (std::size_t t = 0; t < xs.size(); ++t) {
            std::memcpy(&w.X[(t * B + r) * 5], xs[t].data(), 5 * sizeof(double));
        }
    }

    // --- Forward through the stack.
    for (int l = 0; l < L; ++l) {
        const std::size_t in = static_cast<std::size_t>(m.layer_input_dim(l));
        const double* in_base = (l == 0) ? w.X.data() : w.out[l - 1].data();
        const std::size_t in_ld = (l == 0) ? 5 : H2;
        for (int d = 0; d < 2; ++d) {
            double* G = w.gates[2 * l + d].data();
            double* C = w.cc[2 * l + d].data();
            double* O = w.out[l].data();
            const double* bias = P + m.bias(l, d).offset;
            const double* wxT = w.wxT[2 * l + d].data();
            const double* whT = w.whT[2 * l + d].data();
            for (std::size_t step = 0; step < T; ++step) {
                const std::size_t t = (d == 0) ? step : T - 1 - step;
                const std::size_t mrows = static_cast<std::size_t>(w.active[t]);
                if (mrows == 0) continue;
                double* Gt = G + t * B * H4;
                for (std::size_t r = 0; r < mrows; ++r) {
                    std::memcpy(Gt + r * H4, bias, H4 * sizeof(double));
                }
                gemm_nn(mrows, H4, in, in_base + t * B * in_ld, in_ld, wxT, H4, Gt, H4, true);
                const bool has_prev = (d == 0) ? (t > 0) : (t + 1 < T);
                const std::size_t tp = (d == 0) ? t - 1 : t + 1;
                if (has_prev) {
                    gemm_nn(mrows, H4, H, O + tp * B * H2 + d * H, H2, whT, H4, Gt, H4, true);
                }
                const double* Cp = has_prev ? C + tp * B * H : nullptr;
                double* Ct = C + t * B * H;
                double* Ot = O + t * B * H2 + d * H;
                for (std::size_t r = 0; r < mrows; ++r) {
                    double* a = Gt + r * H4;
                    double* cr = Ct + r * H;
                    double* hr = Ot + r * H2;
                    const double* cp = Cp ? Cp + r * H : nullptr;
                    for (int j = 0; j < H; ++j) {
                        const double gi = sigmoid(a[j]);
                        const double gf = sigmoid(a[H + j]);
                        const double gg = std::tanh(a[2 * H + j]);
                        const double go = sigmoid(a[3 * H + j]);
                        a[j] = gi;
                        a[H + j] = gf;
                        a[2 * H + j] = gg;
                        a[3 * H + j] = go;
                        const double cn = gf * (cp ? cp[j] : 0.0) + gi * gg;
                        cr[j] = cn;
                        hr[j] = go * std::tanh(cn);
                    }
                }
            }
        }
    }

    // --- Head: concat(final forward state, first backward state).
    const double* Otop = w.out[L - 1].data();
    for (std::size_t r = 0; r < B; ++r) {
        const std::size_t tl = static_cast<std::size_t>(w.lens[r]) - 1;
        std::memcpy(&w.feats[r * H2], Otop + tl * B * H2 + r * H2, H * sizeof(double));
        std::memcpy(&w.feats[r * H2 + H], Otop + r * H2 + H, H * sizeof(double));
    }
    const double* headB = P + m.head_b().offset;
    for (std::size_t r = 0; r < B; ++r) std::memcpy(&w.pre[r * 4], headB, 4 * sizeof(double));
    gemm_nn(B, 4, H2, w.feats.data(), H2, w.headWT.data(), 4, w.pre.data(), 4, true);
    for (std::size_t i = 0; i < B * 4; ++i) w.preds[i] = std::max(0.0, w.pre[i]);

    if (preds_out) {
        preds_out->resize(B);
        for (std::size_t r = 0; r < B; ++r) {
            auto& p = (*preds_out)[w.order[r]];
            for (int k = 0; k < 4; ++k) p[k] = w.preds[r * 4 + k];
        }
    }

    double loss = 0.0;
    if (want_loss) {
        ensure_size(w.ys, B * 4);
        for (std::size_t r = 0; r < B; ++r) {
            const auto& y = *items[w.order[r]].y;
            for (int k = 0; k < 4; ++k) {
                w.ys[r * 4 + k] = y[k];
                loss += std::abs(y[k] - w.preds[r * 4 + k]);
            }
        }
        loss /= 4.0 * static_cast<double>(B);
    }
    if (!grads) return loss;

    // --- Backward. Loss gradient through the ReLU head.
    ensure_size(w.dpre, B * 4);
    ensure_size(w.dfeats, B * H2);
    const double scale = 1.0 / (4.0 * static_cast<double>(B));
    for (std::size_t i = 0; i < B * 4; ++i) {
        const double d = -sign_of(w.ys[i] - w.preds[i]) * scale;
        w.dpre[i] = (w.pre[i] > 0.0) ? d : 0.0;
    }
    double* GR = grads->data();
    gemm_tn_acc(4, H2, B, w.dpre.data(), 4, w.feats.data(), H2, GR + m.head_w().offset, H2);
    for (std::size_t r = 0; r < B; ++r) {
        for (int k = 0; k < 4; ++k) GR[m.head_b().offset + k] += w.dpre[r * 4 + k];
    }
    gemm_nn(B, H2, 4, w.dpre.data(), 4, P + m.head_w().offset, H2, w.dfeats.data(), H2, false);

    // Gradient w.r.t. the top layer outputs: head contributions at each
    // row's final forward step and at t=0 for the backward direction.
    ensure_size(w.dout_a, T * B * H2);
    ensure_size(w.dout_b, T * B * H2);
    std::fill_n(w.dout_a.begin(), T * B * H2, 0.0);
    for (std::size_t r = 0; r < B; ++r) {
        const std::size_t tl = static_cast<std::size_t>(w.lens[r]) - 1;
        for (int j = 0; j < H; ++j) {
            w.dout_a[tl * B * H2 + r * H2 + j] += w.dfeats[r * H2 + j];
            w.dout_a[r * H2 + H + j] += w.dfeats[r * H2 + H + j];
        }
    }

    ensure_size(w.dA, B * H4);
    ensure_size(w.dh_carry, B * H);
    ensure_size(w.dc_carry, B * H);

    double* dout = w.dout_a.data();
    double* din = w.dout_b.data();
    for (int l = L - 1; l >= 0; --l) {
        const std::size_t in = static_cast<std::size_t>(m.layer_input_dim(l));
        const double* in_base = (l == 0) ? w.X.data() : w.out[l - 1].data();
        const std::size_t in_ld = (l == 0) ? 5 : H2;
        if (l > 0) std::fill_n(din, T * B * H2, 0.0);
        for (int d = 0; d < 2; ++d) {
            const double* G = w.gates[2 * l + d].data();
            const double* C = w.cc[2 * l + d].data();
            const double* O = w.out[l].data();
            const double* Wx = P + m.wx(l, d).offset;
            const double* Wh = P + m.wh(l, d).offset;
            double* gWx = GR + m.wx(l, d).offset;
            double* gWh = GR + m.wh(l, d).offset;
            double* gB = GR + m.bias(l, d).offset;
            std::fill_n(w.dh_carry.begin(), B * H, 0.0);
            std::fill_n(w.dc_carry.begin(), B * H, 0.0);
            // BPTT runs opposite to this direction's forward order; carries
            // for rows outside the processed prefix are never written after
            // the initial zero fill, which is exactly the required boundary.
            for (std::size_t step = 0; step < T; ++step) {
                const std::size_t t = (d == 0) ? T - 1 - step : step;
                const std::size_t mrows = static_cast<std::size_t>(w.active[t]);
                if (mrows == 0) continue;
                const bool has_prev = (d == 0) ? (t > 0) : (t + 1 < T);
                const std::size_t tp = (d == 0) ? t - 1 : t + 1;
                const double* Gt = G + t * B * H4;
                const double* Ct = C + t * B * H;
                const double* Cp = has_prev ? C + tp * B * H : nullptr;
                for (std::size_t r = 0; r < mrows; ++r) {
                    const double* a = Gt + r * H4;
                    const double* cr = Ct + r * H;
                    const double* cp = Cp ? Cp + r * H : nullptr;
                    double* dAr = &w.dA[r * H4];
                    double* dhc = &w.dh_carry[r * H];
                    double* dcc = &w.dc_carry[r * H];
                    const double* dor = dout + t * B * H2 + r * H2 + d * H;
                    for (int j = 0; j < H; ++j) {
                        const double gi = a[j];
                        const double gf = a[H + j];
                        const double gg = a[2 * H + j];
                        const double go = a[3 * H + j];
                        const double tc = std::tanh(cr[j]);
                        const double dh = dor[j] + dhc[j];
                        const double dc = dcc[j] + dh * go * (1.0 - tc * tc);
                        const double cprev = cp ? cp[j] : 0.0;
                        dAr[j] = dc * gg * gi * (1.0 - gi);
                        dAr[H + j] = dc * cprev * gf * (1.0 - gf);
                        dAr[2 * H + j] = dc * gi * (1.0 - gg * gg);
                        dAr[3 * H + j] = dh * tc * go * (1.0 - go);
                        dcc[j] = dc * gf;
                    }
                }
                gemm_tn_acc(H4, in, mrows, w.dA.data(), H4, in_base + t * B * in_ld, in_ld,
                            gWx, in);
                if (has_prev) {
                    gemm_tn_acc(H4, H, mrows, w.dA.data(), H4, O + tp * B * H2 + d * H, H2,
                                gWh, H);
                }
                for (std::size_t r = 0; r < mrows; ++r) {
                    const double* dAr = &w.dA[r * H4];
                    for (std::size_t q = 0; q < H4; ++q) gB[q] += dAr[q];
                }
                gemm_nn(mrows, H, H4, w.dA.data(), H4, Wh, H, w.dh_carry.data(), H, false);
                if (l > 0) {
                    gemm_nn(mrows, H2, H4, w.dA.data(), H4, Wx, H2, din + t * B * H2, H2, true);
                }
            }
        }
        std::swap(dout, din);
    }
    return loss;
}

std::size_t walk_offsets(int layers, int hidden, int query_layer, int query_dir, int query_tensor,
                         TensorRef* ref) {
    // query_tensor: 0 = wx, 1 = wh, 2 = bias, 3 = head_w, 4 = head_b;
    // query_layer < 0 returns the total parameter count.
    const int H = hidden;
    std::size_t off = 0;
    for (int l = 0; l < layers; ++l) {
        const int in = (l == 0) ? BiLstmModel::kInputDim : 2 * H;
        for (int d = 0; d < 2; ++d) {
            const TensorRef tensors[3] = {
                {off, 4 * H, in},
                {off + static_cast<std::size_t>(4 * H) * in, 4 * H, H},
                {off + static_cast<std::size_t>(4 * H) * in + static_cast<std::size_t>(4 * H) * H,
                 4 * H, 1},
            };
            if (l == query_layer && d == query_dir && query_tensor < 3) {
                *ref = tensors[query_tensor];
                return 0;
            }
            off = tensors[2].offset + tensors[2].size();
        }
    }
    const TensorRef head_tensors[2] = {
        {off, BiLstmModel::kOutputDim, 2 * H},
        {off + static_cast<std::size_t>(BiLstmModel::kOutputDim) * 2 * H,
         BiLstmModel::kOutputDim, 1},
    };
    if (query_tensor == 3 || query_tensor == 4) {
        *ref = head_tensors[query_tensor - 3];
        return 0;
    }
    return head_tensors[1].offset + head_tensors[1].size();
}

}  // namespace

BiLstmModel::BiLstmModel(int layers, int hidden, const NormalizationSpec& norm,
                         std::uint64_t seed)
    : layers_(layers), hidden_(hidden), norm_(norm) {
    if (layers < 1 || hidden < 1) throw std::domain_error("bilstm: layers and hidden must be >= 1");
    TensorRef unused;
    params_.resize(walk_offsets(layers_, hidden_, -1, -1, -1, &unused));
    const double k = 1.0 / std::sqrt(static_cast<double>(hidden_));
    Xoshiro256 rng(seed);
    for (double& p : params_) p = rng.uniform(-k, k);
    for (int l = 0; l < layers_; ++l) {
        for (int d = 0; d < 2; ++d) {
            const TensorRef b = bias(l, d);
            for (int j = 0; j < hidden_; ++j) params_[b.offset + hidden_ + j] = 1.0;
        }
    }
}

int BiLstmModel::layer_input_dim(int layer) const {
    return (layer == 0) ? kInputDim : 2 * hidden_;
}

TensorRef BiLstmModel::wx(int layer, int direction) const {
    TensorRef ref;
    walk_offsets(layers_, hidden_, layer, direction, 0, &ref);
    return ref;
}

TensorRef BiLstmModel::wh(int layer, int direction) const {
    TensorRef ref;
    walk_offsets(layers_, hidden_, layer, direction, 1, &ref);
    return ref;
}

TensorRef BiLstmModel::bias(int layer, int direction) const {
    TensorRef ref;
    walk_offsets(layers_, hidden_, layer, direction, 2, &ref);
    return ref;
}

TensorRef BiLstmModel::head_w() const {
    TensorRef ref;
    walk_offsets(layers_, hidden_, -1, -1, 3, &ref);
    return ref;
}

TensorRef BiLstmModel::head_b() const {
    TensorRef ref;
    walk_offsets(layers_, hidden_, -1, -1, 4, &ref);
    return ref;
}

std::array<double, 4> BiLstmModel::forward(const std::vector<std::array<double, 5>>& xs) const {
    BiLstmWorkspace ws;
    std::vector<ItemView> items{{&xs, nullptr}};
    std::vector<std::array<double, 4>> preds;
    run_core(*this, items, nullptr, &preds, ws.impl());
    return preds[0];
}

double BiLstmModel::batch_loss_grad(const std::vector<const TrainItem*>& batch,
                                    std::vector<double>* grads,
                                    BiLstmWorkspace* workspace) const {
    std::vector<ItemView> items;
    items.reserve(batch.size());
    for (const TrainItem* it : batch) items.push_back({&it->xs, &it->y});
    if (workspace) return run_core(*this, items, grads, nullptr, workspace->impl());
    BiLstmWorkspace local;
    return run_core(*this, items, grads, nullptr, local.impl());
}

std::vector<std::array<double, 4>> BiLstmModel::forward_batch(
    const std::vector<std::vector<std::array<double, 5>>>& seqs) const {
    std::vector<std::array<double, 4>> result(seqs.size());
    if (seqs.empty()) return result;
    BiLstmWorkspace ws;
    constexpr std::size_t kChunk = 256;
    std::vector<ItemView> items;
    std::vector<std::array<double, 4>> preds;
    for (std::size_t start = 0; start < seqs.size(); start += kChunk) {
        const std::size_t end = std::min(seqs.size(), start + kChunk);
        items.clear();
        for (std::size_t i = start; i < end; ++i) items.push_back({&seqs[i], nullptr});
        run_core(*this, items, nullptr, &preds, ws.impl());
        for (std::size_t i = start; i < end; ++i) result[i] = preds[i - start];
    }
    return result;
}

TissueParams BiLstmModel::predict(const Fingerprint& fp, const Schedule& schedule) const {
    if (fp.size() != schedule.size()) {
        throw std::domain_error("fingerprint and schedule lengths differ");
    }
    return norm_.denormalize_target(forward(make_input_sequence(fp, schedule, norm_)));
}

std::vector<TissueParams> BiLstmModel::predict(const std::vector<Fingerprint>& fps,
                                               const Schedule& schedule) const {
    std::vector<std::vector<std::array<double, 5>>> seqs;
    seqs.reserve(fps.size());
    for (const Fingerprint& fp : fps) {
        if (fp.size() != schedule.size()) {
            throw std::domain_error("fingerprint and schedule lengths differ");
        }
        seqs.push_back(make_input_sequence(fp, schedule, norm_));
    }
    const auto outs = forward_batch(seqs);
    std::vector<TissueParams> result;
    result.reserve(outs.size());
    for (const auto& o : outs) result.push_back(norm_.denormalize_target(o));
    return result;
}

void BiLstmModel::save(const std::string& path, const std::string& history_json) const {
    ModelFile file;
    file.kind = kModelKindBiLstm;
    file.arch = {static_cast<std::uint32_t>(layers_), static_cast<std::uint32_t>(hidden_),
                 kInputDim, kOutputDim};
    file.norm = norm_;
    file.params = params_;
    write_model_file(path, file, history_json);
}

BiLstmModel BiLstmModel::load(const std::string& path) {
    const ModelFile file = read_model_file(path, kModelKindBiLstm);
    if (file.arch.size() != 4 || file.arch[2] != kInputDim || file.arch[3] != kOutputDim) {
        throw std::runtime_error("unexpected architecture descriptor in " + path);
    }
    BiLstmModel model;
    model.layers_ = static_cast<int>(file.arch[0]);
    model.hidden_ = static_cast<int>(file.arch[1]);
    model.norm_ = file.norm;
    TensorRef unused;
    const std::size_t expect = walk_offsets(model.layers_, model.hidden_, -1, -1, -1, &unused);
    if (file.params.size() != expect) {
        throw std::runtime_error("parameter count mismatch in " + path);
    }
    model.params_ = std::move(file.params);
    return model;
}

std::vector<std::array<double, 5>> make_input_sequence(const Fingerprint& fp,
                                                       const Schedule& schedule,
                                                       const NormalizationSpec& norm) {
    if (fp.size() != schedule.size()) {
        throw std::domain_error("fingerprint and schedule lengths differ");
    }
    std::vector<std::array<double, 5>> xs;
    xs.reserve(fp.size());
    for (std::size_t i = 0; i < fp.size(); ++i) {
        xs.push_back(norm.input_vector(fp[i], schedule[i]));
    }
    return xs;
}

}  // namespace otom
