#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "otom/dataset.hpp"
#include "otom/fcnn.hpp"
#include "otom/lstm.hpp"

namespace otom {

struct TrainConfig {
    double lr_init = 1e-3;
    double lr_decay_factor = 0.1;
    int lr_decay_every_epochs = 5;
    int batch_size = 256;
    int max_epochs = 30;
    int early_stop_patience = 3;
    double early_stop_min_delta = 1e-5;
    std::uint64_t seed = 0;
};

struct TrainHistory {
    std::vector<double> train_loss;  // one entry per epoch run
    std::vector<double> val_loss;
    int best_epoch = 0;  // 1-based; 0 if no epoch ran
    double best_val_loss = 0.0;
    bool early_stopped = false;
};

// lr(epoch) = lrInit * factor^floor((epoch - 1) / every), epoch 1-based.
double learning_rate_for_epoch(const TrainConfig& config, int epoch);

// Deterministic 90/10 split on the record index (hash-based, fixed salt).
bool is_validation_index(std::uint64_t index);

// Generic minibatch loop: shuffled train split, Adam updates, stepped
// learning-rate decay, early stopping on validation loss, best-validation
// weights restored into params on return. The callback computes the batch
// loss and, when the pointer is non-null, accumulates parameter gradients
// into the zeroed buffer.
using LossGradFn =
    std::function<double(const std::vector<const TrainItem*>&, std::vector<double>*)>;
TrainHistory run_training(const LossGradFn& fn, std::vector<double>& params,
                          const std::vector<TrainItem>& items, const TrainConfig& config);

TrainHistory train_bilstm(BiLstmModel& model, const std::vector<TrainItem>& items,
                          const TrainConfig& config);
TrainHistory train_fcnn(FcnnModel& model, const std::vector<TrainItem>& items,
                        const TrainConfig& config);

// Normalized training items from a dataset file (inputs and targets mapped
// into network units with the given spec).
std::vector<TrainItem> load_training_items(const std::string& dataset_path,
                                           const NormalizationSpec& norm);

// Normalized training items for samples generated on one fixed schedule:
// per index i, tissue from derive(seed, 2i), noise from derive(seed, 2i+1).
std::vector<TrainItem> make_schedule_items(const Schedule& schedule, std::uint64_t n_samples,
                                           std::uint64_t seed, const TissueRanges& tissue_ranges,
                                           const NoiseSpec& noise,
                                           const NormalizationSpec& norm,
                                           const PoolConstants& consts);

// Fine-tuning on one fixed acquisition schedule with freshly generated
// samples. Zero samples is a no-op by contract.
struct TransferConfig {
    std::uint64_t n_samples = 100000;
    std::uint64_t seed = 1;
    TissueRanges tissue_ranges;
    NoiseSpec noise;
    TrainConfig train;

    TransferConfig() {
        train.lr_init = 1e-4;
        train.lr_decay_every_epochs = 2;
        train.max_epochs = 3;
    }
};

TrainHistory transfer_train(BiLstmModel& model, const Schedule& schedule,
                            const TransferConfig& config);

// JSON document with per-epoch losses and the effective configuration.
std::string history_json(const TrainHistory& history, const TrainConfig& config);

}  // namespace otom
