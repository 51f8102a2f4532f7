#pragma once

// Synthetic image corpora for exercising the IDX/MNIST code paths without
// the real dataset: each class is a bright blob at a class-specific position
// on a dark background, which a linear readout separates easily.

#include <random>
#include <vector>

#include "sanlab/datasets.hpp"
#include "sanlab/tensor.hpp"

namespace sanlab::testing {

inline void blob_image_corpus(std::size_t count, std::size_t side,
                              std::size_t classes, std::uint64_t seed,
                              std::vector<Tensor>& images,
                              std::vector<int>& labels) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> jitter(0.0, 0.04);
    for (std::size_t i = 0; i < count; ++i) {
        const int label = static_cast<int>(i % classes);
        const std::size_t cr =
            2 + (static_cast<std::size_t>(label) * 3) % (side - 4);
        const std::size_t cc =
            2 + (static_cast<std::size_t>(label) * 5) % (side - 4);
        Tensor img = Tensor::zeros({side, side});
        for (std::size_t r = 0; r < side; ++r) {
            for (std::size_t c = 0; c < side; ++c) {
                const double dr = double(r) - double(cr);
                const double dc = double(c) - double(cc);
                double v = std::exp(-(dr * dr + dc * dc) / 4.0) + jitter(rng);
                img.at(r, c) = std::min(1.0, std::max(0.0, v));
            }
        }
        images.push_back(std::move(img));
        labels.push_back(label);
    }
}

// Writes a miniature MNIST-shaped directory (the four standard filenames).
inline void write_idx_dir(const std::string& dir, std::size_t train_count,
                          std::size_t test_count, std::size_t side,
                          std::size_t classes, std::uint64_t seed) {
    std::vector<Tensor> train_images, test_images;
    std::vector<int> train_labels, test_labels;
    blob_image_corpus(train_count, side, classes, seed, train_images,
                      train_labels);
    blob_image_corpus(test_count, side, classes, seed + 1, test_images,
                      test_labels);
    save_idx_images(train_images, train_labels, dir + "/train-images-idx3-ubyte",
                    dir + "/train-labels-idx1-ubyte");
    save_idx_images(test_images, test_labels, dir + "/t10k-images-idx3-ubyte",
                    dir + "/t10k-labels-idx1-ubyte");
}

} // namespace sanlab::testing
