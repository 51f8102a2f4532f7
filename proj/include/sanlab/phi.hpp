#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "sanlab/san.hpp"

namespace sanlab {

/// Per-example record of the compression/fidelity trade-off:
/// cr_inv = (W + (rank+1) * A) / n and phi = ||(cr_inv, l_tilde)||_2.
struct PhiReport {
    std::size_t weights = 0;      // W
    std::size_t activations = 0;  // A
    double cr_inv = 0.0;
    double l_tilde = 0.0;
    double phi = 0.0;
};

struct PhiAggregate {
    double phi_bar = 0.0;
    double mean_cr_inv = 0.0;
    double mean_l_tilde = 0.0;
    double mean_activations = 0.0;
    std::size_t count = 0;
};

/// Total scalar parameter count: sum over kernels of all kernel entries.
inline std::size_t weights_count(const SanModel& model) {
    std::size_t w = 0;
    for (const Tensor& k : model.kernels) w += k.size();
    return w;
}

inline PhiReport phi_report(const SanModel& model, const Tensor& x,
                            const ForwardTrace& trace) {
    PhiReport report;
    report.weights = weights_count(model);
    for (const Tensor& a : trace.alpha) report.activations += nnz(a);
    const double n = static_cast<double>(x.size());
    report.cr_inv =
        (static_cast<double>(report.weights) +
         static_cast<double>(model.rank + 1) *
             static_cast<double>(report.activations)) /
        n;
    const double loss_zero = mae(Tensor::zeros(x.extents()), x);
    const double loss_hat = mae(trace.xhat, x);
    if (loss_zero == 0.0)
        report.l_tilde =
            loss_hat == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    else
        report.l_tilde = loss_hat / loss_zero;
    report.phi = std::hypot(report.cr_inv, report.l_tilde);
    return report;
}

inline PhiAggregate phi_bar(const std::vector<PhiReport>& reports) {
    if (reports.empty())
        throw std::invalid_argument("phi_bar over an empty report list");
    PhiAggregate agg;
    agg.count = reports.size();
    for (const PhiReport& r : reports) {
        agg.phi_bar += r.phi;
        agg.mean_cr_inv += r.cr_inv;
        agg.mean_l_tilde += r.l_tilde;
        agg.mean_activations += static_cast<double>(r.activations);
    }
    const double l = static_cast<double>(agg.count);
    agg.phi_bar /= l;
    agg.mean_cr_inv /= l;
    agg.mean_l_tilde /= l;
    agg.mean_activations /= l;
    return agg;
}

/// One trained configuration competing in model selection.
struct ModelCandidate {
    std::size_t kernel_size = 0;
    std::size_t epoch = 0; // 1-based epoch of the snapshot
    SanModel model;
    PhiAggregate validation;
};

/// Minimal validation phi-bar wins; ties prefer the smaller kernel size, then
/// the earlier epoch.
inline const ModelCandidate& select_model(
    const std::vector<ModelCandidate>& candidates) {
    if (candidates.empty())
        throw std::invalid_argument("select_model over an empty candidate list");
    const ModelCandidate* best = &candidates.front();
    for (const ModelCandidate& c : candidates) {
        if (c.validation.phi_bar < best->validation.phi_bar ||
            (c.validation.phi_bar == best->validation.phi_bar &&
             (c.kernel_size < best->kernel_size ||
              (c.kernel_size == best->kernel_size && c.epoch < best->epoch))))
            best = &c;
    }
    return *best;
}

} // namespace sanlab
