#include "otom/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "otom/adam.hpp"
#include "otom/prng.hpp"

namespace otom {
namespace {

constexpr std::uint64_t kSplitSalt = 0x4F544F4D53504C54ULL;  // split stream tag

void validate_config(const TrainConfig& c) {
    if (c.lr_init <= 0 || c.lr_decay_factor <= 0 || c.lr_decay_every_epochs < 1 ||
        c.batch_size < 1 || c.max_epochs < 0 || c.early_stop_patience < 1 ||
        c.early_stop_min_delta < 0) {
        throw std::domain_error("invalid training configuration");
    }
}

// Mean loss over a fixed index set, evaluated in deterministic batch order.
double evaluate_split(const LossGradFn& fn, const std::vector<TrainItem>& items,
                      const std::vector<std::size_t>& idx, int batch_size) {
    double total = 0.0;
    std::vector<const TrainItem*> batch;
    for (std::size_t start = 0; start < idx.size(); start += batch_size) {
        const std::size_t end = std::min(idx.size(), start + batch_size);
        batch.clear();
        for (std::size_t i = start; i < end; ++i) batch.push_back(&items[idx[i]]);
        total += fn(batch, nullptr) * static_cast<double>(end - start);
    }
    return total / static_cast<double>(idx.size());
}

}  // namespace

double learning_rate_for_epoch(const TrainConfig& config, int epoch) {
    if (epoch < 1) throw std::domain_error("epoch is 1-based");
    const int steps = (epoch - 1) / config.lr_decay_every_epochs;
    return config.lr_init * std::pow(config.lr_decay_factor, steps);
}

bool is_validation_index(std::uint64_t index) {
    return derive_seed(kSplitSalt, index) % 10 == 0;
}

TrainHistory run_training(const LossGradFn& fn, std::vector<double>& params,
                          const std::vector<TrainItem>& items, const TrainConfig& config) {
    validate_config(config);
    if (items.empty()) throw std::domain_error("empty training dataset");

    std::vector<std::size_t> train_idx, val_idx;
    for (std::size_t i = 0; i < items.size(); ++i) {
        (is_validation_index(i) ? val_idx : train_idx).push_back(i);
    }
    if (train_idx.empty()) throw std::domain_error("training split is empty");

    TrainHistory history;
    history.best_val_loss = std::numeric_limits<double>::infinity();
    AdamState adam(params.size());
    std::vector<double> grads(params.size(), 0.0);
    std::vector<double> best_params = params;
    std::vector<const TrainItem*> batch;
    int stale_epochs = 0;

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const double lr = learning_rate_for_epoch(config, epoch);
        Xoshiro256 rng(derive_seed(config.seed, static_cast<std::uint64_t>(epoch)));
        // Fisher-Yates shuffle of the train split.
        for (std::size_t i = train_idx.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
            std::swap(train_idx[i - 1], train_idx[j]);
        }

        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < train_idx.size();
             start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end =
                std::min(train_idx.size(), start + static_cast<std::size_t>(config.batch_size));
            batch.clear();
            for (std::size_t i = start; i < end; ++i) batch.push_back(&items[train_idx[i]]);
            std::fill(grads.begin(), grads.end(), 0.0);
            epoch_loss += fn(batch, &grads) * static_cast<double>(end - start);
            adam.step(params, grads, lr);
        }
        epoch_loss /= static_cast<double>(train_idx.size());
        history.train_loss.push_back(epoch_loss);

        // Fall back to the train split when the hash split left no
        // validation samples (tiny datasets only).
        const double val =
            val_idx.empty() ? epoch_loss : evaluate_split(fn, items, val_idx, config.batch_size);
        history.val_loss.push_back(val);

        if (val < history.best_val_loss - config.early_stop_min_delta) {
            history.best_val_loss = val;
            history.best_epoch = epoch;
            best_params = params;
            stale_epochs = 0;
        } else {
            ++stale_epochs;
            if (stale_epochs >= config.early_stop_patience) {
                history.early_stopped = true;
                break;
            }
        }
    }

    if (history.best_epoch > 0) params = best_params;
    return history;
}

TrainHistory train_bilstm(BiLstmModel& model, const std::vector<TrainItem>& items,
                          const TrainConfig& config) {
    BiLstmWorkspace workspace;
    const LossGradFn fn = [&](const std::vector<const TrainItem*>& batch,
                              std::vector<double>* grads) {
        return model.batch_loss_grad(batch, grads, &workspace);
    };
    return run_training(fn, model.params(), items, config);
}

TrainHistory train_fcnn(FcnnModel& model, const std::vector<TrainItem>& items,
                        const TrainConfig& config) {
    const LossGradFn fn = [&](const std::vector<const TrainItem*>& batch,
                              std::vector<double>* grads) {
        return model.batch_loss_grad(batch, grads);
    };
    return run_training(fn, model.params(), items, config);
}

std::vector<TrainItem> load_training_items(const std::string& dataset_path,
                                           const NormalizationSpec& norm) {
    DatasetReader reader(dataset_path);
    std::vector<TrainItem> items;
    items.reserve(reader.header().n_samples);
    DatasetRecord rec;
    while (reader.next(&rec)) {
        TrainItem item;
        item.xs.reserve(rec.scans.size());
        for (std::size_t i = 0; i < rec.scans.size(); ++i) {
            const ScanPoint p{rec.scans[i][0], rec.scans[i][1], rec.scans[i][2], rec.scans[i][3]};
            item.xs.push_back(norm.input_vector(rec.signal[i], p));
        }
        const TissueParams label{rec.label[0], rec.label[1], rec.label[2], rec.label[3]};
        item.y = norm.normalize_target(label);
        items.push_back(std::move(item));
    }
    return items;
}

std::vector<TrainItem> make_schedule_items(const Schedule& schedule, std::uint64_t n_samples,
                                           std::uint64_t seed, const TissueRanges& tissue_ranges,
                                           const NoiseSpec& noise,
                                           const NormalizationSpec& norm,
                                           const PoolConstants& consts) {
    if (schedule.size() == 0 && n_samples > 0) throw std::domain_error("empty schedule");
    std::vector<TrainItem> items;
    items.reserve(n_samples);
    for (std::uint64_t i = 0; i < n_samples; ++i) {
        const TissueParams tissue = sample_tissue(derive_seed(seed, 2 * i), tissue_ranges);
        const Fingerprint clean = simulate_fingerprint(tissue, consts, schedule);
        const Fingerprint noisy = add_noise(clean, noise, derive_seed(seed, 2 * i + 1));
        TrainItem item;
        item.xs = make_input_sequence(noisy, schedule, norm);
        item.y = norm.normalize_target(tissue);
        items.push_back(std::move(item));
    }
    return items;
}

TrainHistory transfer_train(BiLstmModel& model, const Schedule& schedule,
                            const TransferConfig& config) {
    if (config.n_samples == 0) return TrainHistory{};  // contract: no-op
    const PoolConstants consts{};
    const auto items = make_schedule_items(schedule, config.n_samples, config.seed,
                                           config.tissue_ranges, config.noise,
                                           model.normalization(), consts);
    return train_bilstm(model, items, config.train);
}

std::string history_json(const TrainHistory& history, const TrainConfig& config) {
    nlohmann::ordered_json j;
    j["config"] = {{"lrInit", config.lr_init},
                   {"lrDecayFactor", config.lr_decay_factor},
                   {"lrDecayEveryEpochs", config.lr_decay_every_epochs},
                   {"batchSize", config.batch_size},
                   {"maxEpochs", config.max_epochs},
                   {"earlyStopPatience", config.early_stop_patience},
                   {"earlyStopMinDelta", config.early_stop_min_delta},
                   {"seed", config.seed}};
    j["trainLoss"] = history.train_loss;
    j["valLoss"] = history.val_loss;
    j["bestEpoch"] = history.best_epoch;
    j["bestValLoss"] = history.best_val_loss;
    j["earlyStopped"] = history.early_stopped;
    j["epochsRun"] = history.train_loss.size();
    return j.dump(2) + "\n";
}

}  // namespace otom
