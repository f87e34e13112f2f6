#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "otom/dataset.hpp"
#include "otom/lstm.hpp"
#include "otom/schedule.hpp"

namespace otom {

// Fully connected baseline regressor. Fixed input length N (the signal
// values of one specific schedule, scan parameters are implicit in the
// binding), ReLU hidden layers, 4 outputs through a final ReLU. Unlike the
// recurrent model it must be retrained per schedule.
class FcnnModel {
public:
    static constexpr int kOutputDim = 4;

    // Weights uniform in +-1/sqrt(fanIn) per layer, drawn in storage order
    // from the seed; biases zero.
    FcnnModel(const Schedule& schedule, int hidden_layers, int hidden_width,
              const NormalizationSpec& norm, std::uint64_t seed);

    int input_length() const { return input_length_; }
    int hidden_layers() const { return hidden_layers_; }
    int hidden_width() const { return hidden_width_; }
    const Schedule& bound_schedule() const { return schedule_; }
    const NormalizationSpec& normalization() const { return norm_; }

    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    // Normalized-space forward pass over the N signal values.
    std::array<double, 4> forward(const std::vector<double>& signal) const;

    // Mean L1 loss; accumulates dLoss/dparams when grads is non-null (must
    // be sized and zeroed by the caller). Items carry full 5-channel rows;
    // only the signal channel is consumed. Throws if any item length != N.
    double batch_loss_grad(const std::vector<const TrainItem*>& batch,
                           std::vector<double>* grads) const;

    // Physical-unit prediction; the schedule must equal the bound one.
    TissueParams predict(const Fingerprint& fp, const Schedule& schedule) const;

    void save(const std::string& path, const std::string& history_json = "") const;
    static FcnnModel load(const std::string& path);

private:
    FcnnModel() = default;

    int input_length_ = 0;
    int hidden_layers_ = 0;
    int hidden_width_ = 0;
    Schedule schedule_;
    NormalizationSpec norm_;
    std::vector<double> params_;
};

}  // namespace otom
