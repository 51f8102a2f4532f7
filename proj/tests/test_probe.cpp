#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <random>
#include <unistd.h>

#include "sanlab/probe.hpp"
#include "sanlab/train.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using Catch::Approx;
using namespace sanlab;

namespace {

// two well-separated Gaussian blobs in 8 dimensions
void separable_corpus(std::vector<Tensor>& examples, std::vector<int>& labels,
                      std::vector<Split>& split, std::size_t per_class,
                      std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> jitter(0.0, 0.3);
    for (std::size_t i = 0; i < 2 * per_class; ++i) {
        const int label = static_cast<int>(i % 2);
        Tensor x = Tensor::zeros({8});
        for (std::size_t d = 0; d < 8; ++d)
            x[d] = (label ? 2.0 : -2.0) + jitter(rng);
        examples.push_back(std::move(x));
        labels.push_back(label);
        split.push_back(i % 10 == 8   ? Split::validation
                        : i % 10 == 9 ? Split::test
                                      : Split::train);
    }
}

SanModel unit_identity_san() {
    SanModel model;
    model.rank = 1;
    model.activation = ActivationKind::identity;
    model.kernels = {Tensor::vec({1.0})};
    model.sparsity = {NoParam{}};
    return model;
}

} // namespace

TEST_CASE("probe_forward") {
    SECTION("zero parameters give uniform log-probabilities") {
        LinearProbe probe;
        probe.classes = 4;
        probe.inputs = 3;
        probe.weights.assign(12, 0.0);
        probe.bias.assign(4, 0.0);
        const auto logp = probe_forward(probe, std::vector<double>{1, 2, 3});
        for (double v : logp) REQUIRE(v == Approx(std::log(0.25)).margin(1e-12));
    }
    SECTION("a favorable one-hot row wins the argmax") {
        LinearProbe probe;
        probe.classes = 3;
        probe.inputs = 2;
        probe.weights = {0, 0, 5, 0, 0, 0}; // class 1 keys on input 0
        probe.bias = {0, 0, 0};
        REQUIRE(predict(probe, {1.0, 0.0}) == 1);
    }
    SECTION("log-probabilities normalize") {
        std::mt19937_64 rng(8);
        for (int trial = 0; trial < 20; ++trial) {
            LinearProbe probe = init_probe(5, 7, trial);
            const Tensor x = testing::uniform_tensor(rng, {7}, -3.0, 3.0);
            const auto logp = probe_forward(probe, x);
            double sum = 0.0;
            for (double v : logp) sum += std::exp(v);
            REQUIRE(sum == Approx(1.0).margin(1e-10));
        }
    }
    SECTION("size mismatch") {
        LinearProbe probe = init_probe(3, 4, 0);
        REQUIRE_THROWS_AS(probe_forward(probe, std::vector<double>{1.0}),
                          shape_error);
    }
}

TEST_CASE("NLL gradient matches finite differences") {
    std::mt19937_64 rng(99);
    LinearProbe probe = init_probe(4, 6, 11);
    const Tensor x = testing::uniform_tensor(rng, {6}, -1.0, 1.0);
    const int label = 2;
    std::vector<double> gw(probe.weights.size(), 0.0), gb(4, 0.0);
    nll_grad_accumulate(probe, x.values(), label, gw, gb);
    const double step = 1e-6;
    for (std::size_t i = 0; i < probe.weights.size(); ++i) {
        const double saved = probe.weights[i];
        probe.weights[i] = saved + step;
        const double hi = nll_loss(probe, x.values(), label);
        probe.weights[i] = saved - step;
        const double lo = nll_loss(probe, x.values(), label);
        probe.weights[i] = saved;
        const double fd = (hi - lo) / (2.0 * step);
        REQUIRE(gw[i] == Approx(fd).epsilon(1e-5).margin(1e-9));
    }
    for (std::size_t c = 0; c < 4; ++c) {
        const double saved = probe.bias[c];
        probe.bias[c] = saved + step;
        const double hi = nll_loss(probe, x.values(), label);
        probe.bias[c] = saved - step;
        const double lo = nll_loss(probe, x.values(), label);
        probe.bias[c] = saved;
        REQUIRE(gb[c] ==
                Approx((hi - lo) / (2.0 * step)).epsilon(1e-5).margin(1e-9));
    }
}

TEST_CASE("train_probe") {
    std::vector<Tensor> examples;
    std::vector<int> labels;
    std::vector<Split> split;
    separable_corpus(examples, labels, split, 60, 17);
    const SanModel san = unit_identity_san();

    SECTION("a separable corpus reaches 100% within 5 epochs") {
        ProbeTrainConfig cfg;
        cfg.seed = 5;
        const ProbeResult r = train_probe(san, examples, labels, split, 2, cfg);
        REQUIRE(r.test_accuracy == 1.0);
    }
    SECTION("lr = 0 keeps the untrained probe's accuracy") {
        ProbeTrainConfig cfg;
        cfg.seed = 5;
        cfg.lr = 0.0;
        const ProbeResult r = train_probe(san, examples, labels, split, 2, cfg);
        // the probe equals its initialization, so recompute directly
        LinearProbe init = init_probe(2, 8, mix_seed(cfg.seed, 0x9e0b));
        REQUIRE(r.probe.weights == init.weights);
        std::vector<std::size_t> test_idx;
        for (std::size_t i = 0; i < split.size(); ++i)
            if (split[i] == Split::test) test_idx.push_back(i);
        std::vector<std::vector<double>> xs;
        for (const Tensor& x : examples) xs.push_back(x.values());
        REQUIRE(r.test_accuracy == accuracy(init, xs, labels, test_idx));
    }
    SECTION("probe training never mutates the SAN kernels") {
        SanModel frozen = make_san(2, 3, ActivationKind::extrema_pool_indices,
                                   {8}, 0, 0.0, 0.1, 77);
        const auto kernels_before = frozen.kernels;
        ProbeTrainConfig cfg;
        cfg.epochs = 2;
        train_probe(frozen, examples, labels, split, 2, cfg);
        for (std::size_t i = 0; i < kernels_before.size(); ++i)
            REQUIRE(frozen.kernels[i].values() == kernels_before[i].values());
    }
}

TEST_CASE("probe on reconstructions of an IDX image corpus") {
    // miniature end-to-end run of the MNIST-style pipeline: IDX files ->
    // protocol splits -> SAN training -> frozen reconstructions -> probe
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() /
                         ("sanlab_probe_idx_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    testing::write_idx_dir(dir.string(), 300, 60, 12, 4, 7);
    const ImageCorpus corpus = mnist_protocol(
        load_idx_images(dir.string() + "/train-images-idx3-ubyte",
                        dir.string() + "/train-labels-idx1-ubyte"),
        load_idx_images(dir.string() + "/t10k-images-idx3-ubyte",
                        dir.string() + "/t10k-labels-idx1-ubyte"),
        60);
    std::size_t n_train = 0, n_val = 0, n_test = 0;
    for (Split s : corpus.split) {
        if (s == Split::train) ++n_train;
        else if (s == Split::validation) ++n_val;
        else ++n_test;
    }
    REQUIRE(n_train == 240);
    REQUIRE(n_val == 60);
    REQUIRE(n_test == 60);

    TrainConfig scfg;
    scfg.epochs = 2;
    scfg.batch_size = 16;
    scfg.seed = 3;
    SanModel init = make_san(2, 2, ActivationKind::extrema_pool_indices,
                             {12, 12}, 0, 0.0, 0.1, 5);
    std::vector<Tensor> train_xs, val_xs;
    for (std::size_t i = 0; i < corpus.split.size(); ++i) {
        if (corpus.split[i] == Split::train) train_xs.push_back(corpus.images[i]);
        if (corpus.split[i] == Split::validation)
            val_xs.push_back(corpus.images[i]);
    }
    const TrainResult trained = train(init, train_xs, val_xs, scfg);

    ProbeTrainConfig pcfg;
    pcfg.epochs = 5;
    pcfg.batch_size = 16;
    pcfg.seed = 3;
    const ProbeResult r = train_probe(trained.best_model, corpus, 4, pcfg);
    REQUIRE(r.test_accuracy >= 0.9); // blobs at distinct positions separate
    fs::remove_all(dir);
}

TEST_CASE("probe files round-trip bitwise") {
    LinearProbe probe = init_probe(3, 5, 123);
    probe.bias = {0.1, -0.2, 0.3};
    const std::string path = "/tmp/sanlab_test_probe.txt";
    save_probe(probe, path);
    const LinearProbe loaded = load_probe(path);
    REQUIRE(loaded.classes == 3);
    REQUIRE(loaded.inputs == 5);
    REQUIRE(loaded.weights == probe.weights);
    REQUIRE(loaded.bias == probe.bias);
    std::remove(path.c_str());
}
