#pragma once

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "sanlab/phi.hpp"
#include "sanlab/san.hpp"

namespace sanlab {

struct EpochStats {
    std::size_t epoch = 0; // 1-based
    double train_loss = 0.0;
    PhiAggregate validation;
};

struct TrainResult {
    SanModel best_model;
    std::size_t best_epoch = 0; // 1-based
    std::vector<EpochStats> history;
};

inline PhiAggregate evaluate(const SanModel& model,
                             const std::vector<Tensor>& examples) {
    std::vector<PhiReport> reports;
    reports.reserve(examples.size());
    for (const Tensor& x : examples)
        reports.push_back(phi_report(model, x, forward(model, x)));
    return phi_bar(reports);
}

/// Minibatch training: per epoch, a seeded shuffle forms batches, per-example
/// gradients are averaged across each batch and applied with Adam; after each
/// epoch the validation phi-bar is computed and the kernels with the minimal
/// value over all epochs (ties to the earliest) are returned.
inline TrainResult train(const SanModel& init,
                         const std::vector<Tensor>& train_set,
                         const std::vector<Tensor>& validation_set,
                         const TrainConfig& cfg) {
    validate_model(init);
    if (train_set.empty()) throw std::invalid_argument("empty training set");
    if (validation_set.empty())
        throw std::invalid_argument("empty validation set");
    if (cfg.epochs < 1 || cfg.batch_size < 1)
        throw std::invalid_argument("epochs and batch size must be >= 1");
    for (const Tensor& x : train_set)
        if (!x.same_extents(train_set.front()))
            throw shape_error("heterogeneous extents within the training set");

    SanModel model = init;
    AdamState adam = adam_init(model.kernels, cfg.lr);
    std::mt19937_64 rng(cfg.seed);

    TrainResult result;
    result.best_model = model;
    double best_phi = std::numeric_limits<double>::infinity();

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        for (std::size_t b0 = 0; b0 < order.size(); b0 += cfg.batch_size) {
            const std::size_t b1 =
                std::min(order.size(), b0 + cfg.batch_size);
            std::vector<Tensor> grads;
            for (std::size_t idx = b0; idx < b1; ++idx) {
                const Tensor& x = train_set[order[idx]];
                ForwardTrace trace = forward(model, x);
                loss_sum += loss(trace, x);
                std::vector<Tensor> g = backward(model, x, trace);
                if (grads.empty()) {
                    grads = std::move(g);
                } else {
                    for (std::size_t i = 0; i < grads.size(); ++i)
                        for (std::size_t j = 0; j < grads[i].size(); ++j)
                            grads[i][j] += g[i][j];
                }
            }
            const double inv_batch = 1.0 / static_cast<double>(b1 - b0);
            for (Tensor& g : grads)
                for (std::size_t j = 0; j < g.size(); ++j) g[j] *= inv_batch;
            adam_step(adam, grads, model.kernels);
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = loss_sum / static_cast<double>(train_set.size());
        stats.validation = evaluate(model, validation_set);
        result.history.push_back(stats);

        if (stats.validation.phi_bar < best_phi) {
            best_phi = stats.validation.phi_bar;
            result.best_model = model;
            result.best_epoch = epoch;
        }
    }
    return result;
}

} // namespace sanlab
