#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "otom/dataset.hpp"
#include "otom/schedule.hpp"

// Bidirectional stacked LSTM regressor over variable-length acquisition
// sequences. Every time point contributes a 5-channel input
// [signal, b1, omega, ts, td] (scan channels normalized to [0, 1]); the
// final features are the last forward state concatenated with the first
// backward state of the top layer, mapped through a ReLU dense head to the
// four normalized tissue parameters. All math is double precision and
// hand-rolled; see mat.hpp for the kernels.
namespace otom {

// One normalized training example (inputs and targets in network units).
struct TrainItem {
    std::vector<std::array<double, 5>> xs;
    std::array<double, 4> y{};
};

// Mean absolute difference over the four components.
double l1_loss(const std::array<double, 4>& pred, const std::array<double, 4>& target);

// Location of one parameter tensor inside the flat parameter vector.
struct TensorRef {
    std::size_t offset = 0;
    int rows = 0;
    int cols = 0;

    std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
};

class BiLstmWorkspace;

class BiLstmModel {
public:
    static constexpr int kInputDim = 5;
    static constexpr int kOutputDim = 4;

    // Random initialization: every parameter uniform in +-1/sqrt(H) drawn in
    // storage order from the given seed, then the forget-gate bias rows are
    // set to exactly 1.0.
    BiLstmModel(int layers, int hidden, const NormalizationSpec& norm, std::uint64_t seed);

    int layers() const { return layers_; }
    int hidden() const { return hidden_; }
    const NormalizationSpec& normalization() const { return norm_; }

    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    // Parameter layout, in storage order: for each layer, for each direction
    // (forward then backward): inputWeights (4H x in), recurrentWeights
    // (4H x H), bias (4H); finally head weights (4 x 2H) and head bias (4).
    // Gate row order within 4H: input, forget, cell, output.
    int layer_input_dim(int layer) const;
    TensorRef wx(int layer, int direction) const;
    TensorRef wh(int layer, int direction) const;
    TensorRef bias(int layer, int direction) const;
    TensorRef head_w() const;
    TensorRef head_b() const;

    // Normalized-space forward pass over one sequence. Throws on an empty
    // sequence.
    std::array<double, 4> forward(const std::vector<std::array<double, 5>>& xs) const;

    // Mean L1 loss over the batch. When grads is non-null, accumulates
    // dLoss/dparams (exact reverse-mode, full BPTT) into it; grads must
    // already be sized and zeroed by the caller. Batch rows are processed in
    // a fixed deterministic order. A caller-provided workspace avoids
    // reallocation across batches; pass nullptr for a temporary one.
    double batch_loss_grad(const std::vector<const TrainItem*>& batch, std::vector<double>* grads,
                           BiLstmWorkspace* workspace = nullptr) const;

    // Batched normalized-space predictions, order preserved.
    std::vector<std::array<double, 4>> forward_batch(
        const std::vector<std::vector<std::array<double, 5>>>& seqs) const;

    // Physical-unit prediction: normalize inputs, forward, denormalize.
    // Throws if the fingerprint and schedule lengths differ. Thread-safe for
    // concurrent read-only use.
    TissueParams predict(const Fingerprint& fp, const Schedule& schedule) const;
    std::vector<TissueParams> predict(const std::vector<Fingerprint>& fps,
                                      const Schedule& schedule) const;

    // Weight file (magic "OTOMNN1"): architecture, normalization snapshot,
    // then the flat parameter vector as little-endian f64. A non-empty
    // history string is written verbatim to path + ".json".
    void save(const std::string& path, const std::string& history_json = "") const;
    static BiLstmModel load(const std::string& path);

private:
    BiLstmModel() = default;

    int layers_ = 0;
    int hidden_ = 0;
    NormalizationSpec norm_;
    std::vector<double> params_;
};

// Reusable buffers for batched forward/backward passes. Opaque; the
// definition lives with the model implementation.
class BiLstmWorkspace {
public:
    BiLstmWorkspace();
    ~BiLstmWorkspace();
    BiLstmWorkspace(const BiLstmWorkspace&) = delete;
    BiLstmWorkspace& operator=(const BiLstmWorkspace&) = delete;

    struct Impl;
    Impl& impl() const { return *impl_; }

private:
    std::unique_ptr<Impl> impl_;
};

// One LSTM cell step with explicit weights: wx (4H x in), wh (4H x H),
// b (4H), gate rows ordered [input, forget, cell, output]. Throws on shape
// mismatch.
void lstm_cell_forward(const std::vector<double>& x, const std::vector<double>& h,
                       const std::vector<double>& c, const double* wx, const double* wh,
                       const double* b, int hidden, std::vector<double>* h_out,
                       std::vector<double>* c_out);

// Builds the network input sequence for one fingerprint on its schedule.
std::vector<std::array<double, 5>> make_input_sequence(const Fingerprint& fp,
                                                       const Schedule& schedule,
                                                       const NormalizationSpec& norm);

}  // namespace otom
