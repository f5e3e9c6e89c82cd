#include "flexenc/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "flexenc/errors.hpp"

namespace flexenc {

namespace {

std::string fmt(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

}  // namespace

DataSplit prepare_split(const ModelConfig& config, const RatingTable& table) {
    auto [train_table, test_table] =
        split(table, config.test_split_rate, static_cast<std::uint64_t>(config.seed));
    DataSplit out;
    out.train_matrix = pivot_table(train_table, config.pivot);
    out.means = compute_means(out.train_matrix);
    out.test_table = std::move(test_table);
    return out;
}

TrainedModel run_training(const ModelConfig& config, const RatingTable& table,
                          std::ostream* metrics) {
    config.validate();
    if (table.triples.empty()) throw EmptyDataError("train: rating table is empty");

    DataSplit ds = prepare_split(config, table);
    TrainedModel tm;
    tm.train_matrix = std::move(ds.train_matrix);
    tm.test_table = std::move(ds.test_table);
    tm.means = std::move(ds.means);

    tm.model = build_model(config, tm.train_matrix.n_cols);
    OptimState opt(config.optimizer, tm.model.param_sizes());

    const RngStream base(static_cast<std::uint64_t>(config.seed));
    RngStream train_rng = base.child("train");

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        RngStream shuffle_rng = base.child("shuffle").child(static_cast<std::uint64_t>(epoch));
        double epoch_sq = 0.0;
        double epoch_count = 0.0;
        for (const std::vector<int>& rows :
             make_batch_plan(tm.train_matrix.n_rows, config.train_batch_size, shuffle_rng)) {
            // A batch of rows with no observed ratings carries no loss signal.
            if (!config.mean_normalization) {
                std::size_t observed = 0;
                for (int r : rows) observed += tm.train_matrix.row_size(r);
                if (observed == 0) continue;
            }
            RowBatch batch =
                materialize_batch(tm.train_matrix, tm.means, rows, config.mean_normalization);
            ForwardTrace trace = forward(tm.model, batch, ForwardMode::Train, train_rng);
            LossReport loss = masked_mse(batch.y, trace.output(), batch.mask);
            if (!std::isfinite(loss.mmse)) throw DivergenceError(epoch);
            epoch_sq += loss.mmse * loss.observed_count;
            epoch_count += loss.observed_count;

            Gradients grads = backward(tm.model, trace, batch);
            opt.step(tm.model.param_refs(grads), config.lr, config.weight_decay);

            if (config.dense_refeed > 0) {
                std::optional<LossReport> refeed =
                    dense_refeed(tm.model, trace, config.dense_refeed,
                                 config.dense_refeed_rounding, opt, config.lr,
                                 config.weight_decay, train_rng);
                if (refeed && !std::isfinite(refeed->mmse)) throw DivergenceError(epoch);
            }
        }
        const double train_rmse = epoch_count > 0.0 ? std::sqrt(epoch_sq / epoch_count) : 0.0;
        tm.epoch_train_rmse.push_back(train_rmse);
        if (metrics) {
            (*metrics) << "epoch," << epoch << ",train_rmse," << fmt(train_rmse, 6) << '\n';
        }
    }
    return tm;
}

EvalReport evaluate(const FlexModel& model, const ModelConfig& config, const RowMatrix& train,
                    const RatingTable& test, const MeanTable& means) {
    if (test.triples.empty()) {
        throw EmptyEvaluationError("evaluate: no held-out ratings to evaluate");
    }
    RowMatrix test_matrix = pivot_table(test, config.pivot);
    if (test_matrix.n_rows != train.n_rows || test_matrix.n_cols != train.n_cols) {
        throw ShapeError("evaluate: train and test pivots disagree on dimensions");
    }

    RngStream rng = RngStream(static_cast<std::uint64_t>(config.seed)).child("eval");
    RngStream no_rng(0);

    const std::size_t width = static_cast<std::size_t>(train.n_cols);
    const int chunk = 256;

    double sq = 0.0;
    std::int64_t count = 0;

    std::vector<int> chunk_rows;
    std::vector<std::vector<std::pair<int, double>>> chunk_targets;
    std::vector<std::vector<std::pair<int, double>>> chunk_retained;

    auto flush = [&]() {
        if (chunk_rows.empty()) return;
        RowBatch batch;
        batch.x = DenseMatrix(chunk_rows.size(), width);
        for (std::size_t s = 0; s < chunk_rows.size(); ++s) {
            const int r = chunk_rows[s];
            double* xr = batch.x.row(s);
            const double mu = means.row_mean[r];
            for (std::size_t i = train.offsets[r]; i < train.offsets[r + 1]; ++i) {
                xr[train.cols[i]] =
                    config.mean_normalization ? train.values[i] - mu : train.values[i];
            }
            // Retained held-out ratings augment the input.
            for (const auto& [c, v] : chunk_retained[s]) {
                xr[c] = config.mean_normalization ? v - mu : v;
            }
        }
        ForwardTrace trace = forward(model, batch, ForwardMode::Eval, no_rng);
        const DenseMatrix& q = trace.output();
        for (std::size_t s = 0; s < chunk_rows.size(); ++s) {
            const int r = chunk_rows[s];
            const double mu = means.row_mean[r];
            for (const auto& [c, v] : chunk_targets[s]) {
                double pred = q(s, static_cast<std::size_t>(c));
                if (config.mean_normalization) pred += mu;
                if (config.prediction_rounding) pred = round_to_grid(pred);
                const double d = pred - v;
                sq += d * d;
                ++count;
            }
        }
        chunk_rows.clear();
        chunk_targets.clear();
        chunk_retained.clear();
    };

    // Row-major pass; the per-row seeded draw is independent of chunking.
    for (int r = 0; r < test_matrix.n_rows; ++r) {
        std::vector<std::pair<int, double>> targets;
        std::vector<std::pair<int, double>> retained;
        for (std::size_t i = test_matrix.offsets[r]; i < test_matrix.offsets[r + 1]; ++i) {
            if (rng.uniform() < config.test_mask_rate) {
                targets.emplace_back(test_matrix.cols[i], test_matrix.values[i]);
            } else {
                retained.emplace_back(test_matrix.cols[i], test_matrix.values[i]);
            }
        }
        if (targets.empty()) continue;
        chunk_rows.push_back(r);
        chunk_targets.push_back(std::move(targets));
        chunk_retained.push_back(std::move(retained));
        if (static_cast<int>(chunk_rows.size()) >= chunk) flush();
    }
    flush();

    if (count == 0) {
        throw EmptyEvaluationError("evaluate: the seeded mask selected zero target ratings");
    }
    EvalReport report;
    report.rmse = std::sqrt(sq / static_cast<double>(count));
    report.evaluated_count = count;
    return report;
}

std::pair<FlexModel, EvalReport> train(const ModelConfig& config, const RatingTable& table,
                                       std::ostream* metrics) {
    const auto t0 = std::chrono::steady_clock::now();
    TrainedModel tm = run_training(config, table, metrics);
    EvalReport report = evaluate(tm.model, config, tm.train_matrix, tm.test_table, tm.means);
    report.epoch_train_rmse = std::move(tm.epoch_train_rmse);
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (metrics) {
        (*metrics) << "eval_rmse," << fmt(report.rmse, 6) << ",count," << report.evaluated_count
                   << ",seconds," << fmt(report.wall_seconds, 3) << '\n';
    }
    return {std::move(tm.model), std::move(report)};
}

std::vector<double> predict_row(const FlexModel& model, const ModelConfig& config,
                                const std::vector<std::pair<int, double>>& row_ratings,
                                const MeanTable& means, int row_index) {
    const std::size_t width = static_cast<std::size_t>(model.n);
    const double mu = (row_index >= 0 && row_index < static_cast<int>(means.row_mean.size()))
                          ? means.row_mean[row_index]
                          : means.global_mean;
    RowBatch batch;
    batch.x = DenseMatrix(1, width);
    for (const auto& [c, v] : row_ratings) {
        if (c < 0 || static_cast<std::size_t>(c) >= width) {
            throw ShapeError("predict_row: column " + std::to_string(c) + " out of range");
        }
        batch.x(0, static_cast<std::size_t>(c)) = config.mean_normalization ? v - mu : v;
    }
    RngStream no_rng(0);
    ForwardTrace trace = forward(model, batch, ForwardMode::Eval, no_rng);
    std::vector<double> out(width);
    for (std::size_t c = 0; c < width; ++c) {
        double pred = trace.output()(0, c);
        if (config.mean_normalization) pred += mu;
        if (config.prediction_rounding) pred = round_to_grid(pred);
        out[c] = pred;
    }
    return out;
}

std::vector<std::pair<int, double>> top_n(const std::vector<double>& predictions, int n) {
    std::vector<int> idx(predictions.size());
    for (std::size_t i = 0; i < predictions.size(); ++i) idx[i] = static_cast<int>(i);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        if (predictions[a] != predictions[b]) return predictions[a] > predictions[b];
        return a < b;
    });
    const int take = std::min<int>(n, static_cast<int>(idx.size()));
    std::vector<std::pair<int, double>> out;
    out.reserve(take);
    for (int i = 0; i < take; ++i) out.emplace_back(idx[i], predictions[idx[i]]);
    return out;
}

}  // namespace flexenc
