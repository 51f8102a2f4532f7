#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "sanlab/activations.hpp"
#include "sanlab/tensor.hpp"

namespace sanlab {

/// A SAN: q shared-weight kernels, one sparse activation applied to every
/// similarity map, and the per-kernel sparsity parameters.
struct SanModel {
    std::vector<Tensor> kernels;
    ActivationKind activation = ActivationKind::identity;
    std::vector<SparsityParam> sparsity;
    std::size_t rank = 1;
};

inline void validate_model(const SanModel& model) {
    if (model.kernels.empty()) throw shape_error("model needs q >= 1 kernels");
    if (model.sparsity.size() != model.kernels.size())
        throw shape_error("sparsity parameter count does not match q");
    for (const Tensor& w : model.kernels)
        if (w.rank() != model.rank)
            throw shape_error("kernel rank does not match model rank");
}

/// Intermediate representations of one forward pass: similarity maps s,
/// activation maps alpha, per-kernel reconstructions r, and their sum xhat.
struct ForwardTrace {
    std::vector<Tensor> s;
    std::vector<Tensor> alpha;
    std::vector<Tensor> r;
    Tensor xhat;
};

struct AdamState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    std::size_t step = 0;
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct TrainConfig {
    std::size_t epochs = 30;
    std::size_t batch_size = 2;
    double lr = 0.01;
    double init_mean = 0.0;
    double init_std = 0.1;
    std::uint64_t seed = 0;
    std::size_t border_tol = 0;
};

/// Draws q kernels with i.i.d. normal(mean, stddev) entries from a single
/// seeded generator. stddev == 0 degenerates to constant kernels.
inline std::vector<Tensor> init_kernels(std::size_t q,
                                        const std::vector<std::size_t>& sizes,
                                        std::size_t rank, double mean,
                                        double stddev, std::uint64_t seed) {
    if (q < 1) throw std::invalid_argument("q must be >= 1");
    if (sizes.size() != q)
        throw std::invalid_argument("need one kernel size per kernel");
    if (stddev < 0.0) throw std::invalid_argument("stddev must be >= 0");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(mean, stddev > 0.0 ? stddev : 1.0);
    std::vector<Tensor> kernels;
    kernels.reserve(q);
    for (std::size_t i = 0; i < q; ++i) {
        std::vector<std::size_t> extents(rank, sizes[i]);
        Tensor w = Tensor::zeros(extents);
        for (std::size_t j = 0; j < w.size(); ++j)
            w[j] = stddev > 0.0 ? normal(rng) : mean;
        kernels.push_back(std::move(w));
    }
    return kernels;
}

/// Builds a model with uniform kernel size, derived sparsity parameters and
/// seeded kernel initialization for inputs of the given extents.
inline SanModel make_san(std::size_t q, std::size_t kernel_size,
                         ActivationKind kind,
                         const std::vector<std::size_t>& input_extents,
                         std::size_t border_tol, double init_mean,
                         double init_std, std::uint64_t seed) {
    SanModel model;
    model.rank = input_extents.size();
    model.activation = kind;
    model.kernels = init_kernels(
        q, std::vector<std::size_t>(q, kernel_size), model.rank, init_mean,
        init_std, seed);
    model.sparsity.reserve(q);
    for (std::size_t i = 0; i < q; ++i)
        model.sparsity.push_back(
            derive_sparsity_param(kind, kernel_size, input_extents, border_tol));
    validate_model(model);
    return model;
}

inline ForwardTrace forward(const SanModel& model, const Tensor& x) {
    validate_model(model);
    if (x.rank() != model.rank)
        throw shape_error("input rank does not match model rank");
    ForwardTrace trace;
    const std::size_t q = model.kernels.size();
    trace.s.reserve(q);
    trace.alpha.reserve(q);
    trace.r.reserve(q);
    trace.xhat = Tensor::zeros(x.extents());
    for (std::size_t i = 0; i < q; ++i) {
        trace.s.push_back(xcorr_same(x, model.kernels[i]));
        trace.alpha.push_back(
            apply_activation(model.activation, model.sparsity[i], trace.s[i]));
        trace.r.push_back(adjoint_xcorr_same(trace.alpha[i], model.kernels[i]));
        for (std::size_t t = 0; t < trace.xhat.size(); ++t)
            trace.xhat[t] += trace.r[i][t];
    }
    return trace;
}

inline double loss(const ForwardTrace& trace, const Tensor& x) {
    return mae(trace.xhat, x);
}

/// Manual reverse-mode gradient of the MAE loss with respect to each kernel.
/// The hard selections route gradient only through their kept indices
/// (selection sets treated as constant for the step); sign(0) = 0.
inline std::vector<Tensor> backward(const SanModel& model, const Tensor& x,
                                    const ForwardTrace& trace) {
    validate_model(model);
    const std::size_t q = model.kernels.size();
    if (trace.alpha.size() != q || trace.s.size() != q ||
        !trace.xhat.same_extents(x))
        throw shape_error("trace does not match model and input");
    const double inv_n = 1.0 / static_cast<double>(x.size());
    Tensor g_xhat = Tensor::zeros(x.extents());
    for (std::size_t t = 0; t < x.size(); ++t) {
        const double d = trace.xhat[t] - x[t];
        g_xhat[t] = d > 0.0 ? inv_n : (d < 0.0 ? -inv_n : 0.0);
    }
    std::vector<Tensor> grads;
    grads.reserve(q);
    for (std::size_t i = 0; i < q; ++i) {
        const Tensor& w = model.kernels[i];
        // Decode path: xhat depends on w through adjoint_xcorr_same(alpha, w).
        Tensor grad = xcorr_kernel_grad(g_xhat, trace.alpha[i], w.extents());
        // Encode path: gradient reaches s through the selected indices only.
        Tensor g_alpha = xcorr_same(g_xhat, w);
        switch (model.activation) {
            case ActivationKind::identity:
                break;
            case ActivationKind::relu:
                for (std::size_t t = 0; t < g_alpha.size(); ++t)
                    if (!(trace.s[i][t] > 0.0)) g_alpha[t] = 0.0;
                break;
            default:
                for (std::size_t t = 0; t < g_alpha.size(); ++t)
                    if (trace.alpha[i][t] == 0.0) g_alpha[t] = 0.0;
                break;
        }
        Tensor encode_term = xcorr_kernel_grad(x, g_alpha, w.extents());
        for (std::size_t j = 0; j < grad.size(); ++j)
            grad[j] += encode_term[j];
        grads.push_back(std::move(grad));
    }
    return grads;
}

inline AdamState adam_init(const std::vector<Tensor>& kernels, double lr) {
    AdamState state;
    state.lr = lr;
    for (const Tensor& w : kernels) {
        state.m.push_back(Tensor::zeros(w.extents()));
        state.v.push_back(Tensor::zeros(w.extents()));
    }
    return state;
}

/// Bias-corrected Adam update applied in place of the plain gradient rule.
inline void adam_step(AdamState& state, const std::vector<Tensor>& grads,
                      std::vector<Tensor>& kernels) {
    if (grads.size() != kernels.size() || state.m.size() != kernels.size())
        throw shape_error("adam state does not match kernels");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, double(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, double(state.step));
    for (std::size_t i = 0; i < kernels.size(); ++i) {
        Tensor& w = kernels[i];
        Tensor& m = state.m[i];
        Tensor& v = state.v[i];
        const Tensor& g = grads[i];
        for (std::size_t j = 0; j < w.size(); ++j) {
            m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
            v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
            const double m_hat = m[j] / bc1;
            const double v_hat = v[j] / bc2;
            w[j] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
        }
    }
}

/// Index/value encoding of a sparse activation map.
struct SparseMap {
    std::vector<std::size_t> extents;
    std::vector<std::pair<std::size_t, double>> entries; // sorted by index
};

inline SparseMap sparse_from_tensor(const Tensor& a) {
    SparseMap map;
    map.extents = a.extents();
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != 0.0) map.entries.emplace_back(i, a[i]);
    return map;
}

inline Tensor tensor_from_sparse(const SparseMap& map) {
    Tensor a = Tensor::zeros(map.extents);
    std::size_t prev = 0;
    bool first = true;
    for (const auto& [idx, value] : map.entries) {
        if (idx >= a.size())
            throw std::out_of_range("sparse map index " + std::to_string(idx) +
                                    " out of range");
        if (!first && idx <= prev)
            throw std::invalid_argument("sparse map indices must increase");
        if (value == 0.0)
            throw std::invalid_argument("sparse map values must be nonzero");
        a[idx] = value;
        prev = idx;
        first = false;
    }
    return a;
}

/// Compressed representation of x: one sparse activation map per kernel.
inline std::vector<SparseMap> encode(const SanModel& model, const Tensor& x) {
    ForwardTrace trace = forward(model, x);
    std::vector<SparseMap> maps;
    maps.reserve(trace.alpha.size());
    for (const Tensor& a : trace.alpha) maps.push_back(sparse_from_tensor(a));
    return maps;
}

/// Reconstruction from sparse maps; runs the same arithmetic as forward's
/// decode half, so decode(encode(x)) is bitwise equal to forward(x).xhat.
inline Tensor decode(const SanModel& model, const std::vector<SparseMap>& maps) {
    validate_model(model);
    if (maps.size() != model.kernels.size())
        throw shape_error("map count does not match q");
    Tensor xhat = Tensor::zeros(maps.at(0).extents);
    for (std::size_t i = 0; i < maps.size(); ++i) {
        Tensor alpha = tensor_from_sparse(maps[i]);
        Tensor r = adjoint_xcorr_same(alpha, model.kernels[i]);
        for (std::size_t t = 0; t < xhat.size(); ++t) xhat[t] += r[t];
    }
    return xhat;
}

} // namespace sanlab
