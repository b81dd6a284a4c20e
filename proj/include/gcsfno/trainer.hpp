#ifndef GCSFNO_TRAINER_HPP
#define GCSFNO_TRAINER_HPP

// Mini-batch training loop for the surrogate models: shuffled batches with
// Adam on the batch RMSE of normalized targets, per-epoch validation in
// physical units, best-validation checkpoint selection, and a CSV history.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gcsfno/checkpoint.hpp"
#include "gcsfno/datasets.hpp"
#include "gcsfno/fno.hpp"

namespace gcsfno {

struct TrainConfig {
    std::size_t batch_size = 20;
    int max_epochs = 20;
    double lr = 0.001;
    std::uint64_t shuffle_seed = 0;
    int eval_every = 1;  // validation cadence, in epochs

    void validate() const {
        if (batch_size == 0) throw ConfigError("train config: batch_size must be positive");
        if (max_epochs <= 0) throw ConfigError("train config: max_epochs must be positive");
        if (!(lr > 0.0)) throw ConfigError("train config: lr must be positive");
        if (eval_every <= 0) throw ConfigError("train config: eval_every must be positive");
    }
};

/// One history row. Validation fields are NaN on epochs where validation
/// was skipped (eval_every > 1).
struct TrainEpoch {
    int epoch = 0;
    double train_loss = 0.0;  // pooled RMSE of normalized targets
    double val_rmse_norm = 0.0;
    double val_rmse_phys = 0.0;
    double seconds = 0.0;
};

struct TrainHistory {
    TrainConfig config;
    std::vector<TrainEpoch> epochs;
    int best_epoch = 0;  // 1-based; the returned checkpoint's epoch
    double best_val_rmse_phys = 0.0;
};

/// Runs the training loop on the dataset's training split and returns the
/// checkpoint with the best validation RMSE (physical units) plus the full
/// history. Deterministic per (init_seed, cfg.shuffle_seed) in this
/// single-threaded implementation. When the validation split is empty the
/// training split doubles as the selection set. NumericError identifies
/// the epoch and batch when the loss or a gradient turns non-finite.
std::pair<Checkpoint, TrainHistory> train(const Dataset& data, const FnoArch& arch,
                                          const TrainConfig& cfg, std::uint64_t init_seed);

/// Pooled RMSE between model predictions and targets over all pixels of
/// all samples, in physical units: features are normalized on the way in,
/// predictions un-normalized on the way out, and pressure is converted to
/// psia. ContractError when a sample does not match the model's grid.
double evaluate_loss(const FnoParams<float>& params, const std::vector<Sample>& samples,
                     const Normalizer& normalizer, std::uint32_t target_code);

/// History rows as CSV: epoch, train_loss, val_rmse_norm, val_rmse_phys,
/// seconds. NaN fields are written as NA.
void write_history_csv(const std::string& path, const TrainHistory& history);

}  // namespace gcsfno

#endif
