#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <random>
#include <vector>

#include "sanlab/datasets.hpp"
#include "sanlab/san.hpp"
#include "sanlab/serialize.hpp"

namespace sanlab {

/// Single fully connected layer with log-softmax readout; trained on frozen
/// SAN reconstructions to measure how much class information they retain.
struct LinearProbe {
    std::size_t classes = 0;
    std::size_t inputs = 0;
    std::vector<double> weights; // classes x inputs, row-major
    std::vector<double> bias;    // classes
};

inline LinearProbe init_probe(std::size_t classes, std::size_t inputs,
                              std::uint64_t seed) {
    if (classes < 2) throw std::invalid_argument("need at least 2 classes");
    LinearProbe probe;
    probe.classes = classes;
    probe.inputs = inputs;
    probe.weights.resize(classes * inputs);
    probe.bias.assign(classes, 0.0);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 0.01);
    for (double& w : probe.weights) w = normal(rng);
    return probe;
}

/// Per-class log-probabilities: z = Wx + b, output z - logsumexp(z).
inline std::vector<double> probe_forward(const LinearProbe& probe,
                                         const std::vector<double>& x) {
    if (x.size() != probe.inputs)
        throw shape_error("probe input size mismatch: " +
                          std::to_string(x.size()) + " vs " +
                          std::to_string(probe.inputs));
    std::vector<double> z(probe.classes);
    for (std::size_t c = 0; c < probe.classes; ++c) {
        const double* row = probe.weights.data() + c * probe.inputs;
        double acc = probe.bias[c];
        for (std::size_t d = 0; d < probe.inputs; ++d) acc += row[d] * x[d];
        z[c] = acc;
    }
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - zmax);
    const double lse = zmax + std::log(sum);
    for (double& v : z) v -= lse;
    return z;
}

inline std::vector<double> probe_forward(const LinearProbe& probe,
                                         const Tensor& x) {
    return probe_forward(probe, x.values());
}

inline double nll_loss(const LinearProbe& probe, const std::vector<double>& x,
                       int label) {
    const std::vector<double> logp = probe_forward(probe, x);
    if (label < 0 || static_cast<std::size_t>(label) >= probe.classes)
        throw std::invalid_argument("label out of range");
    return -logp[static_cast<std::size_t>(label)];
}

/// Accumulates the NLL gradient for one example into (g_weights, g_bias):
/// dNLL/dz = softmax(z) - onehot(label).
inline void nll_grad_accumulate(const LinearProbe& probe,
                                const std::vector<double>& x, int label,
                                std::vector<double>& g_weights,
                                std::vector<double>& g_bias) {
    if (label < 0 || static_cast<std::size_t>(label) >= probe.classes)
        throw std::invalid_argument("label out of range");
    const std::vector<double> logp = probe_forward(probe, x);
    for (std::size_t c = 0; c < probe.classes; ++c) {
        double gz = std::exp(logp[c]);
        if (c == static_cast<std::size_t>(label)) gz -= 1.0;
        g_bias[c] += gz;
        double* grow = g_weights.data() + c * probe.inputs;
        for (std::size_t d = 0; d < probe.inputs; ++d) grow[d] += gz * x[d];
    }
}

inline int predict(const LinearProbe& probe, const std::vector<double>& x) {
    const std::vector<double> logp = probe_forward(probe, x);
    std::size_t best = 0;
    for (std::size_t c = 1; c < probe.classes; ++c)
        if (logp[c] > logp[best]) best = c;
    return static_cast<int>(best);
}

struct ProbeTrainConfig {
    std::size_t epochs = 5;
    std::size_t batch_size = 64;
    double lr = 0.01;
    std::uint64_t seed = 0;
};

struct ProbeResult {
    LinearProbe probe;
    std::size_t best_epoch = 0; // 1-based
    std::vector<double> validation_accuracy; // per epoch
    double test_accuracy = 0.0;
};

inline double accuracy(const LinearProbe& probe,
                       const std::vector<std::vector<double>>& xs,
                       const std::vector<int>& labels,
                       const std::vector<std::size_t>& indices) {
    if (indices.empty()) return 0.0;
    std::size_t correct = 0;
    for (std::size_t i : indices)
        if (predict(probe, xs[i]) == labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(indices.size());
}

/// Trains the probe with minibatch Adam on NLL over the frozen model's
/// reconstructions decode(encode(x)). Returns the epoch snapshot with the
/// best validation accuracy (ties to the earliest) plus its test accuracy.
inline ProbeResult train_probe(const SanModel& frozen,
                               const std::vector<Tensor>& examples,
                               const std::vector<int>& labels,
                               const std::vector<Split>& split,
                               std::size_t classes,
                               const ProbeTrainConfig& cfg) {
    if (examples.empty()) throw std::invalid_argument("empty corpus");
    if (examples.size() != labels.size() || examples.size() != split.size())
        throw std::invalid_argument("corpus fields disagree in length");

    // Reconstructions are fixed while the probe trains; compute them once.
    std::vector<std::vector<double>> xhat;
    xhat.reserve(examples.size());
    for (const Tensor& x : examples)
        xhat.push_back(decode(frozen, encode(frozen, x)).values());

    std::vector<std::size_t> train_idx, val_idx, test_idx;
    for (std::size_t i = 0; i < split.size(); ++i) {
        if (split[i] == Split::train) train_idx.push_back(i);
        else if (split[i] == Split::validation) val_idx.push_back(i);
        else test_idx.push_back(i);
    }
    if (train_idx.empty()) throw std::invalid_argument("empty training split");

    const std::size_t inputs = examples.front().size();
    LinearProbe probe = init_probe(classes, inputs, mix_seed(cfg.seed, 0x9e0b));

    std::vector<Tensor> params;
    params.push_back(Tensor({classes, inputs}, probe.weights));
    params.push_back(Tensor({classes}, probe.bias));
    AdamState adam = adam_init(params, cfg.lr);

    std::mt19937_64 rng(cfg.seed);
    ProbeResult result;
    result.probe = probe;
    double best_acc = -1.0;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(train_idx.begin(), train_idx.end(), rng);
        for (std::size_t b0 = 0; b0 < train_idx.size(); b0 += cfg.batch_size) {
            const std::size_t b1 =
                std::min(train_idx.size(), b0 + cfg.batch_size);
            std::vector<Tensor> grads;
            grads.push_back(Tensor::zeros({classes, inputs}));
            grads.push_back(Tensor::zeros({classes}));
            probe.weights = params[0].values();
            probe.bias = params[1].values();
            for (std::size_t i = b0; i < b1; ++i)
                nll_grad_accumulate(probe, xhat[train_idx[i]],
                                    labels[train_idx[i]], grads[0].data(),
                                    grads[1].data());
            const double inv_batch = 1.0 / static_cast<double>(b1 - b0);
            for (Tensor& g : grads)
                for (std::size_t j = 0; j < g.size(); ++j) g[j] *= inv_batch;
            adam_step(adam, grads, params);
        }
        probe.weights = params[0].values();
        probe.bias = params[1].values();
        const double val_acc =
            val_idx.empty() ? accuracy(probe, xhat, labels, train_idx)
                            : accuracy(probe, xhat, labels, val_idx);
        result.validation_accuracy.push_back(val_acc);
        if (val_acc > best_acc) {
            best_acc = val_acc;
            result.probe = probe;
            result.best_epoch = epoch;
        }
    }
    result.test_accuracy = accuracy(result.probe, xhat, labels, test_idx);
    return result;
}

inline ProbeResult train_probe(const SanModel& frozen,
                               const ImageCorpus& corpus, std::size_t classes,
                               const ProbeTrainConfig& cfg) {
    return train_probe(frozen, corpus.images, corpus.labels, corpus.split,
                       classes, cfg);
}

inline void save_probe(const LinearProbe& probe, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open probe file for writing: " + path);
    out << "sanlab-probe 1\n";
    out << "classes " << probe.classes << "\n";
    out << "inputs " << probe.inputs << "\n";
    out << "weights " << probe.weights.size() << "\n";
    for (double w : probe.weights) out << format_hex(w) << "\n";
    out << "bias " << probe.bias.size() << "\n";
    for (double b : probe.bias) out << format_hex(b) << "\n";
    if (!out) throw io_error("failed writing probe file: " + path);
}

inline LinearProbe load_probe(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open probe file: " + path);
    detail::TokenReader reader(in, path);
    reader.expect("sanlab-probe");
    reader.expect("1");
    LinearProbe probe;
    reader.expect("classes");
    probe.classes = reader.next_count();
    reader.expect("inputs");
    probe.inputs = reader.next_count();
    reader.expect("weights");
    const std::size_t wcount = reader.next_count();
    if (wcount != probe.classes * probe.inputs)
        throw parse_error(path + ": weight count mismatch");
    probe.weights.reserve(wcount);
    for (std::size_t i = 0; i < wcount; ++i)
        probe.weights.push_back(reader.next_double());
    reader.expect("bias");
    const std::size_t bcount = reader.next_count();
    if (bcount != probe.classes)
        throw parse_error(path + ": bias count mismatch");
    for (std::size_t i = 0; i < bcount; ++i)
        probe.bias.push_back(reader.next_double());
    return probe;
}

} // namespace sanlab
