#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "sanlab/tensor.hpp"

namespace sanlab {

enum class Split { train, validation, test };

inline std::string to_string(Split split) {
    switch (split) {
        case Split::train: return "train";
        case Split::validation: return "validation";
        case Split::test: return "test";
    }
    throw std::invalid_argument("unknown split");
}

/// 1D signal corpus. `labels` is empty for unlabeled corpora, otherwise one
/// class id per example. `notes` records non-fatal ingestion events such as
/// dropped zero-variance segments.
struct SignalCorpus {
    std::vector<Tensor> examples;
    std::vector<Split> split;
    std::vector<int> labels;
    std::string provenance;
    std::vector<std::string> notes;

    std::vector<std::size_t> indices_of(Split s) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < split.size(); ++i)
            if (split[i] == s) out.push_back(i);
        return out;
    }

    std::vector<Tensor> examples_of(Split s) const {
        std::vector<Tensor> out;
        for (std::size_t i = 0; i < split.size(); ++i)
            if (split[i] == s) out.push_back(examples[i]);
        return out;
    }
};

/// 2D image corpus with class labels; pixel values lie in [0, 1].
struct ImageCorpus {
    std::vector<Tensor> images;
    std::vector<int> labels;
    std::vector<Split> split;
    std::string provenance;
};

inline double parse_token_as_double(const std::string& token) {
    const char* begin = token.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0') throw parse_error("bad token");
    return v;
}

/// Reads a signal stored as one number per line or as comma-separated values.
inline Tensor load_csv_signal(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open signal file: " + path);
    std::vector<double> values;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::size_t pos = 0;
        while (pos < line.size()) {
            std::size_t end = line.find(',', pos);
            if (end == std::string::npos) end = line.size();
            std::string token = line.substr(pos, end - pos);
            const std::size_t a = token.find_first_not_of(" \t\r");
            if (a == std::string::npos) {
                pos = end + 1;
                continue;
            }
            const std::size_t b = token.find_last_not_of(" \t\r");
            token = token.substr(a, b - a + 1);
            try {
                values.push_back(parse_token_as_double(token));
            } catch (const parse_error&) {
                throw parse_error(path + ":" + std::to_string(line_no) +
                                  ": not a number: '" + token + "'");
            }
            pos = end + 1;
        }
    }
    if (values.empty()) throw parse_error(path + ": empty signal file");
    return Tensor::vec(std::move(values));
}

namespace detail {

inline void zscore_inplace(Tensor& t, double& mean_out, double& std_out) {
    const double n = static_cast<double>(t.size());
    double mean = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) mean += t[i];
    mean /= n;
    double var = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double d = t[i] - mean;
        var += d * d;
    }
    var /= n; // population variance
    mean_out = mean;
    std_out = std::sqrt(var);
    if (std_out > 0.0)
        for (std::size_t i = 0; i < t.size(); ++i)
            t[i] = (t[i] - mean) / std_out;
}

} // namespace detail

/// Cuts the first 12000 samples into 12 consecutive segments of 1000
/// (segments 1-6 train, 7-8 validation, 9-12 test) and z-scores each segment
/// independently with its population statistics. Zero-variance segments are
/// dropped and noted.
inline SignalCorpus physionet_protocol(const Tensor& signal,
                                       const std::string& label = "signal") {
    if (signal.rank() != 1) throw shape_error("expected a 1D signal");
    constexpr std::size_t segment_len = 1000;
    constexpr std::size_t segment_count = 12;
    if (signal.size() < segment_len * segment_count)
        throw std::invalid_argument(
            "signal too short: need >= 12000 samples, have " +
            std::to_string(signal.size()));
    SignalCorpus corpus;
    corpus.provenance = label;
    for (std::size_t seg = 0; seg < segment_count; ++seg) {
        std::vector<double> values(
            signal.values().begin() + static_cast<std::ptrdiff_t>(seg * segment_len),
            signal.values().begin() +
                static_cast<std::ptrdiff_t>((seg + 1) * segment_len));
        Tensor t = Tensor::vec(std::move(values));
        double mean = 0.0, stdev = 0.0;
        detail::zscore_inplace(t, mean, stdev);
        if (stdev == 0.0) {
            corpus.notes.push_back("segment " + std::to_string(seg + 1) +
                                   " has zero variance; dropped");
            continue;
        }
        corpus.examples.push_back(std::move(t));
        corpus.split.push_back(seg < 6 ? Split::train
                               : seg < 8 ? Split::validation
                                         : Split::test);
    }
    return corpus;
}

namespace detail {

inline std::uint32_t read_be32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw parse_error(path + ": truncated file");
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

inline void write_be32(std::ostream& out, std::uint32_t v) {
    const unsigned char b[4] = {
        static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
        static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

} // namespace detail

/// Loads an IDX image/label pair (the public MNIST layout): image magic
/// 0x00000803 with count/rows/cols, label magic 0x00000801; pixels are
/// unsigned bytes scaled to [0, 1] by dividing by 255.
inline ImageCorpus load_idx_images(const std::string& images_path,
                                   const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw io_error("cannot open image file: " + images_path);
    if (detail::read_be32(img, images_path) != 0x00000803u)
        throw parse_error(images_path + ": wrong magic for an IDX image file");
    const std::uint32_t count = detail::read_be32(img, images_path);
    const std::uint32_t rows = detail::read_be32(img, images_path);
    const std::uint32_t cols = detail::read_be32(img, images_path);

    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw io_error("cannot open label file: " + labels_path);
    if (detail::read_be32(lab, labels_path) != 0x00000801u)
        throw parse_error(labels_path + ": wrong magic for an IDX label file");
    const std::uint32_t label_count = detail::read_be32(lab, labels_path);
    if (label_count != count)
        throw parse_error("image/label count mismatch: " +
                          std::to_string(count) + " vs " +
                          std::to_string(label_count));

    ImageCorpus corpus;
    corpus.provenance = images_path;
    corpus.images.reserve(count);
    corpus.labels.reserve(count);
    std::vector<unsigned char> pixels(std::size_t(rows) * cols);
    for (std::uint32_t i = 0; i < count; ++i) {
        if (!img.read(reinterpret_cast<char*>(pixels.data()),
                      static_cast<std::streamsize>(pixels.size())))
            throw parse_error(images_path + ": truncated file");
        std::vector<double> values(pixels.size());
        for (std::size_t p = 0; p < pixels.size(); ++p)
            values[p] = pixels[p] / 255.0;
        corpus.images.emplace_back(
            std::vector<std::size_t>{rows, cols}, std::move(values));
        char byte = 0;
        if (!lab.read(&byte, 1))
            throw parse_error(labels_path + ": truncated file");
        corpus.labels.push_back(static_cast<unsigned char>(byte));
    }
    corpus.split.assign(count, Split::train);
    return corpus;
}

/// Writes images (values in [0, 1], rounded to bytes) and labels as an IDX
/// pair; the inverse of load_idx_images for byte-valued data.
inline void save_idx_images(const std::vector<Tensor>& images,
                            const std::vector<int>& labels,
                            const std::string& images_path,
                            const std::string& labels_path) {
    if (images.size() != labels.size())
        throw std::invalid_argument("image/label count mismatch");
    if (images.empty()) throw std::invalid_argument("no images to write");
    const std::size_t rows = images.front().extent(0);
    const std::size_t cols = images.front().extent(1);
    std::ofstream img(images_path, std::ios::binary);
    if (!img) throw io_error("cannot open image file for writing: " + images_path);
    detail::write_be32(img, 0x00000803u);
    detail::write_be32(img, static_cast<std::uint32_t>(images.size()));
    detail::write_be32(img, static_cast<std::uint32_t>(rows));
    detail::write_be32(img, static_cast<std::uint32_t>(cols));
    for (const Tensor& t : images) {
        if (t.extent(0) != rows || t.extent(1) != cols)
            throw shape_error("heterogeneous image extents");
        for (std::size_t p = 0; p < t.size(); ++p) {
            const double clamped = std::min(1.0, std::max(0.0, t[p]));
            const unsigned char byte =
                static_cast<unsigned char>(std::lround(clamped * 255.0));
            img.write(reinterpret_cast<const char*>(&byte), 1);
        }
    }
    std::ofstream lab(labels_path, std::ios::binary);
    if (!lab) throw io_error("cannot open label file for writing: " + labels_path);
    detail::write_be32(lab, 0x00000801u);
    detail::write_be32(lab, static_cast<std::uint32_t>(labels.size()));
    for (int label : labels) {
        const unsigned char byte = static_cast<unsigned char>(label);
        lab.write(reinterpret_cast<const char*>(&byte), 1);
    }
    if (!img || !lab) throw io_error("failed writing IDX files");
}

/// Combines the standard train/test IDX pairs into one corpus: the last
/// `validation_count` training images become the validation split.
inline ImageCorpus mnist_protocol(ImageCorpus train_part,
                                  const ImageCorpus& test_part,
                                  std::size_t validation_count = 10000) {
    if (validation_count >= train_part.images.size())
        throw std::invalid_argument("validation split larger than train file");
    const std::size_t train_count =
        train_part.images.size() - validation_count;
    for (std::size_t i = 0; i < train_part.images.size(); ++i)
        train_part.split[i] =
            i < train_count ? Split::train : Split::validation;
    for (std::size_t i = 0; i < test_part.images.size(); ++i) {
        train_part.images.push_back(test_part.images[i]);
        train_part.labels.push_back(test_part.labels[i]);
        train_part.split.push_back(Split::test);
    }
    return train_part;
}

/// Epilepsy-recognition preprocessing: merges the five raw classes into
/// three (1 -> 0 epilepsy, {2,3} -> 1 tumor, {4,5} -> 2 eyes), min-max scales
/// by the global extrema of the whole corpus, and splits 76/12/12 with a
/// seeded shuffle.
inline SignalCorpus uci_protocol(const std::vector<std::vector<double>>& rows,
                                 const std::vector<int>& raw_labels,
                                 std::uint64_t seed,
                                 std::size_t row_length = 178) {
    if (rows.size() != raw_labels.size())
        throw std::invalid_argument("row/label count mismatch");
    if (rows.empty()) throw std::invalid_argument("empty corpus");
    SignalCorpus corpus;
    corpus.provenance = "uci-epilepsy";
    double lo = rows[0][0], hi = rows[0][0];
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != row_length)
            throw shape_error("row " + std::to_string(i) + " has length " +
                              std::to_string(rows[i].size()) + ", expected " +
                              std::to_string(row_length));
        for (double v : rows[i]) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        int merged;
        switch (raw_labels[i]) {
            case 1: merged = 0; break;          // epilepsy
            case 2: case 3: merged = 1; break;  // tumor
            case 4: case 5: merged = 2; break;  // eyes
            default:
                throw std::invalid_argument("unknown label " +
                                            std::to_string(raw_labels[i]));
        }
        corpus.labels.push_back(merged);
    }
    if (hi == lo)
        throw std::invalid_argument("degenerate corpus: global min == max");
    const double scale = 1.0 / (hi - lo);
    for (const auto& row : rows) {
        std::vector<double> values(row.size());
        for (std::size_t j = 0; j < row.size(); ++j)
            values[j] = (row[j] - lo) * scale;
        corpus.examples.push_back(Tensor::vec(std::move(values)));
    }
    const std::size_t n = rows.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t n_train = n * 76 / 100;
    const std::size_t n_val = n * 12 / 100;
    corpus.split.assign(n, Split::test);
    for (std::size_t i = 0; i < n_train; ++i)
        corpus.split[order[i]] = Split::train;
    for (std::size_t i = n_train; i < n_train + n_val; ++i)
        corpus.split[order[i]] = Split::validation;
    return corpus;
}

struct SynthSpec {
    std::size_t length = 1000;
    std::size_t num_examples = 24;
    std::size_t bump_width = 15;
    std::size_t spikes_per_example = 20;
    std::size_t min_separation = 40;
    double noise_sigma = 0.05;
    double amp_min = 1.5;
    double amp_max = 2.5;
    // Fraction of the peak kept at the bump edges. A nonzero pedestal makes
    // a shifted kernel pay a truncation cost, so the sample-aligned solution
    // is the unique optimum rather than one point on a translation orbit.
    double pedestal = 0.5;
    std::uint64_t seed = 0;
};

struct SynthResult {
    SignalCorpus corpus;
    Tensor bump;
    std::vector<std::vector<std::size_t>> stamp_starts; // per example
    std::vector<std::vector<double>> stamp_amps;
};

/// Smooth unimodal bump (Hann window), peak 1 at the center.
inline Tensor hann_bump(std::size_t width) {
    if (width == 1) return Tensor::vec({1.0});
    std::vector<double> values(width);
    for (std::size_t j = 0; j < width; ++j)
        values[j] =
            0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(j) /
                                  static_cast<double>(width - 1)));
    return Tensor::vec(std::move(values));
}

/// Hann bump raised onto a pedestal: edges sit at `pedestal`, peak stays 1.
inline Tensor raised_bump(std::size_t width, double pedestal) {
    Tensor b = hann_bump(width);
    for (std::size_t j = 0; j < b.size(); ++j)
        b[j] = pedestal + (1.0 - pedestal) * b[j];
    return b;
}

/// Seeded spike-train corpus: each example is a sum of amplitude-scaled bump
/// copies stamped at random positions at least min_separation apart, plus
/// Gaussian noise. Ground truth (bump, stamps) is returned for oracles.
inline SynthResult synth_spike_train(const SynthSpec& spec) {
    if (spec.bump_width < 1 || spec.bump_width > spec.length)
        throw std::invalid_argument("bump width out of range");
    if (spec.min_separation < spec.bump_width)
        throw std::invalid_argument("separation must be >= bump width");
    const std::size_t count = spec.spikes_per_example;
    const std::size_t max_start = spec.length - spec.bump_width;
    if (count > 0 && (count - 1) * spec.min_separation > max_start)
        throw std::invalid_argument(
            "impossible packing: spikes do not fit at the given separation");

    SynthResult result;
    result.bump = raised_bump(spec.bump_width, spec.pedestal);
    result.corpus.provenance = "synthetic-spike-train";
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> amp(spec.amp_min, spec.amp_max);
    std::normal_distribution<double> noise(0.0, 1.0);

    const std::size_t slack =
        count > 0 ? max_start - (count - 1) * spec.min_separation : 0;
    std::uniform_int_distribution<std::size_t> offset(0, slack);

    for (std::size_t e = 0; e < spec.num_examples; ++e) {
        Tensor x = Tensor::zeros({spec.length});
        std::vector<std::size_t> starts;
        std::vector<double> amps;
        if (count > 0) {
            std::vector<std::size_t> offsets(count);
            for (std::size_t i = 0; i < count; ++i) offsets[i] = offset(rng);
            std::sort(offsets.begin(), offsets.end());
            for (std::size_t i = 0; i < count; ++i) {
                const std::size_t start =
                    i * spec.min_separation + offsets[i];
                const double a = amp(rng);
                for (std::size_t j = 0; j < spec.bump_width; ++j)
                    x[start + j] += a * result.bump[j];
                starts.push_back(start);
                amps.push_back(a);
            }
        }
        if (spec.noise_sigma > 0.0)
            for (std::size_t t = 0; t < x.size(); ++t)
                x[t] += spec.noise_sigma * noise(rng);
        result.corpus.examples.push_back(std::move(x));
        result.stamp_starts.push_back(std::move(starts));
        result.stamp_amps.push_back(std::move(amps));
    }
    // Contiguous split blocks: roughly 2/3 train and 1/6 each for
    // validation and test, with at least one example per split when possible.
    const std::size_t n = spec.num_examples;
    for (std::size_t e = 0; e < n; ++e) {
        Split s = Split::train;
        if (n >= 3) {
            const std::size_t n_test = std::max<std::size_t>(1, n / 6);
            const std::size_t n_val = std::max<std::size_t>(1, n / 6);
            if (e >= n - n_test) s = Split::test;
            else if (e >= n - n_test - n_val) s = Split::validation;
        }
        result.corpus.split.push_back(s);
    }
    return result;
}

/// Writes one line per example: index,split,label (-1 when unlabeled).
inline void write_manifest(const SignalCorpus& corpus, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open manifest for writing: " + path);
    out << "index,split,label\n";
    for (std::size_t i = 0; i < corpus.examples.size(); ++i) {
        const int label = corpus.labels.empty() ? -1 : corpus.labels[i];
        out << i << "," << to_string(corpus.split[i]) << "," << label << "\n";
    }
}

} // namespace sanlab
