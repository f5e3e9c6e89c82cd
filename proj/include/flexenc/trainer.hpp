#pragma once

#include <cstdint>
#include <ostream>
#include <utility>
#include <vector>

#include "flexenc/config.hpp"
#include "flexenc/data.hpp"
#include "flexenc/model.hpp"

namespace flexenc {

struct EvalReport {
    double rmse = 0.0;
    std::int64_t evaluated_count = 0;
    std::vector<double> epoch_train_rmse;
    double wall_seconds = 0.0;
};

// Everything a finished training run needs for evaluation or prediction.
struct TrainedModel {
    FlexModel model;
    RowMatrix train_matrix;
    RatingTable test_table;
    MeanTable means;
    std::vector<double> epoch_train_rmse;
};

// split -> pivot -> means, all derived deterministically from the config.
struct DataSplit {
    RowMatrix train_matrix;
    RatingTable test_table;
    MeanTable means;
};
DataSplit prepare_split(const ModelConfig& config, const RatingTable& table);

// The full loop: per epoch, per shuffled batch: train-mode forward, masked
// loss, backward, optimizer step, then dense re-feeding per config. Emits
// `epoch,<k>,train_rmse,<value>` per epoch to `metrics` when given. A
// non-finite loss raises DivergenceError naming the epoch.
TrainedModel run_training(const ModelConfig& config, const RatingTable& table,
                          std::ostream* metrics = nullptr);

// Masked-test protocol: per pivoted row, a seeded draw sends each held-out
// rating to the evaluation targets with probability test_mask_rate; the rest
// join the input alongside the training ratings. Predictions are denormalized
// (mean normalization) and optionally grid-rounded before the global RMSE.
EvalReport evaluate(const FlexModel& model, const ModelConfig& config, const RowMatrix& train,
                    const RatingTable& test, const MeanTable& means);

// run_training + evaluate; also emits the final
// `eval_rmse,<value>,count,<n>,seconds,<s>` line when `metrics` is given.
std::pair<FlexModel, EvalReport> train(const ModelConfig& config, const RatingTable& table,
                                       std::ostream* metrics = nullptr);

// Dense predictions for one pivoted row given its observed ratings.
std::vector<double> predict_row(const FlexModel& model, const ModelConfig& config,
                                const std::vector<std::pair<int, double>>& row_ratings,
                                const MeanTable& means, int row_index);

// Highest-scoring columns, descending by value, ties broken by ascending index.
std::vector<std::pair<int, double>> top_n(const std::vector<double>& predictions, int n);

}  // namespace flexenc
