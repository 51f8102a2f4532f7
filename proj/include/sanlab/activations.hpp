#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sanlab/tensor.hpp"

namespace sanlab {

enum class ActivationKind {
    identity,
    relu,
    topk_absolutes,
    extrema_pool_indices,
    extrema,
};

inline constexpr std::array<ActivationKind, 5> all_activation_kinds = {
    ActivationKind::identity, ActivationKind::relu,
    ActivationKind::topk_absolutes, ActivationKind::extrema_pool_indices,
    ActivationKind::extrema};

inline std::string to_string(ActivationKind kind) {
    switch (kind) {
        case ActivationKind::identity: return "Identity";
        case ActivationKind::relu: return "Relu";
        case ActivationKind::topk_absolutes: return "TopKAbsolutes";
        case ActivationKind::extrema_pool_indices: return "ExtremaPoolIndices";
        case ActivationKind::extrema: return "Extrema";
    }
    throw std::invalid_argument("unknown activation kind");
}

inline std::optional<ActivationKind> parse_activation(const std::string& name) {
    for (ActivationKind kind : all_activation_kinds)
        if (to_string(kind) == name) return kind;
    return std::nullopt;
}

struct NoParam {};
struct TopK {
    std::size_t k;
};
struct PoolSize {
    std::size_t m;
};
struct MinDistance {
    std::size_t med;
    std::size_t border_tol;
};

/// Per-kernel sparsity parameter d; the active alternative is fixed by the
/// activation kind.
using SparsityParam = std::variant<NoParam, TopK, PoolSize, MinDistance>;

/// Derives d from the kernel size and input extents: k = prod(floor(n/m))
/// for top-k, the pool size m for Extrema-Pool, med = m for Extrema.
inline SparsityParam derive_sparsity_param(
    ActivationKind kind, std::size_t kernel_size,
    const std::vector<std::size_t>& input_extents,
    std::size_t border_tol = 0) {
    if (kernel_size < 1)
        throw std::invalid_argument("kernel size must be >= 1");
    switch (kind) {
        case ActivationKind::identity:
        case ActivationKind::relu:
            return NoParam{};
        case ActivationKind::topk_absolutes: {
            std::size_t k = 1;
            for (std::size_t n : input_extents) k *= n / kernel_size;
            if (k == 0)
                throw std::invalid_argument(
                    "top-k count is 0: kernel size " +
                    std::to_string(kernel_size) + " exceeds an input extent");
            return TopK{k};
        }
        case ActivationKind::extrema_pool_indices:
            for (std::size_t n : input_extents)
                if (kernel_size > n)
                    throw std::invalid_argument(
                        "pool size exceeds an input extent");
            return PoolSize{kernel_size};
        case ActivationKind::extrema:
            for (std::size_t n : input_extents)
                if (kernel_size > n)
                    throw std::invalid_argument(
                        "extrema distance exceeds an input extent");
            return MinDistance{kernel_size, border_tol};
    }
    throw std::invalid_argument("unknown activation kind");
}

inline Tensor identity(const Tensor& s) { return s; }

inline Tensor relu(const Tensor& s) {
    Tensor a = s;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] < 0.0) a[i] = 0.0;
    return a;
}

/// Keeps the k entries of largest |s| (ties to the lowest flat index) with
/// their signed values; everything else becomes an exact zero.
inline Tensor topk_absolutes(const Tensor& s, std::size_t k) {
    const std::size_t n = s.size();
    if (k < 1 || k > n)
        throw std::invalid_argument("top-k count " + std::to_string(k) +
                                    " out of range [1, " + std::to_string(n) +
                                    "]");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        const double ai = std::abs(s[i]), aj = std::abs(s[j]);
        if (ai != aj) return ai > aj;
        return i < j;
    });
    Tensor a = Tensor::zeros(s.extents());
    for (std::size_t i = 0; i < k; ++i) a[order[i]] = s[order[i]];
    return a;
}

/// Max-pool on |s| with non-overlapping windows of extent m per axis followed
/// by max-unpool of the signed survivors. A trailing remainder smaller than m
/// is discarded, so the survivor count is prod(floor(n_axis / m)).
inline Tensor extrema_pool_indices(const Tensor& s, std::size_t m) {
    if (m < 1) throw std::invalid_argument("pool size must be >= 1");
    for (std::size_t a = 0; a < s.rank(); ++a)
        if (m > s.extent(a))
            throw std::invalid_argument("pool size exceeds input extent");
    Tensor a = Tensor::zeros(s.extents());
    if (s.rank() == 1) {
        const std::size_t n = s.extent(0);
        for (std::size_t start = 0; start + m <= n; start += m) {
            std::size_t best = start;
            for (std::size_t i = start + 1; i < start + m; ++i)
                if (std::abs(s[i]) > std::abs(s[best])) best = i;
            a[best] = s[best];
        }
        return a;
    }
    const std::size_t nr = s.extent(0), nc = s.extent(1);
    for (std::size_t r0 = 0; r0 + m <= nr; r0 += m) {
        for (std::size_t c0 = 0; c0 + m <= nc; c0 += m) {
            std::size_t best_r = r0, best_c = c0;
            double best = std::abs(s.at(r0, c0));
            for (std::size_t r = r0; r < r0 + m; ++r) {
                for (std::size_t c = c0; c < c0 + m; ++c) {
                    const double v = std::abs(s.at(r, c));
                    if (v > best) {
                        best = v;
                        best_r = r;
                        best_c = c;
                    }
                }
            }
            a.at(best_r, best_c) = s.at(best_r, best_c);
        }
    }
    return a;
}

namespace detail {

// Interior extrema of a 1D signal: the discrete derivative strictly changes
// sign. Edge padding replicates the boundary sample, so edges never qualify
// here; the border-tolerance rule below re-admits them.
inline std::vector<std::size_t> extrema_candidates_1d(const Tensor& s,
                                                      std::size_t border_tol) {
    const std::size_t n = s.extent(0);
    std::vector<char> is_candidate(n, 0);
    for (std::size_t t = 0; t < n; ++t) {
        const double d_minus = (t == 0) ? 0.0 : s[t] - s[t - 1];
        const double d_plus = (t + 1 == n) ? 0.0 : s[t + 1] - s[t];
        const bool peak = d_minus > 0.0 && d_plus < 0.0;
        const bool valley = d_minus < 0.0 && d_plus > 0.0;
        if (peak || valley) is_candidate[t] = 1;
    }
    if (border_tol >= 1) {
        for (std::size_t t = 0; t < n; ++t) {
            const std::size_t from_left = t;
            const std::size_t from_right = n - 1 - t;
            if (from_left >= border_tol && from_right >= border_tol) continue;
            const std::size_t lo = t >= border_tol ? t - border_tol : 0;
            const std::size_t hi = std::min(n - 1, t + border_tol);
            bool strict_max = true, strict_min = true;
            for (std::size_t u = lo; u <= hi; ++u) {
                if (u == t) continue;
                if (s[t] <= s[u]) strict_max = false;
                if (s[t] >= s[u]) strict_min = false;
            }
            if (strict_max || strict_min) is_candidate[t] = 1;
        }
    }
    std::vector<std::size_t> candidates;
    for (std::size_t t = 0; t < n; ++t)
        if (is_candidate[t]) candidates.push_back(t);
    return candidates;
}

// 2D lift of the rule above: interior pixels must be strict extrema over the
// full 8-neighborhood; pixels within border_tol of an image edge may instead
// be strict extrema of their clipped Chebyshev window of radius border_tol.
inline std::vector<std::size_t> extrema_candidates_2d(const Tensor& s,
                                                      std::size_t border_tol) {
    const std::size_t nr = s.extent(0), nc = s.extent(1);
    std::vector<char> is_candidate(nr * nc, 0);
    auto strict_extremum = [&](std::size_t r, std::size_t c, std::size_t rad) {
        const std::size_t rlo = r >= rad ? r - rad : 0;
        const std::size_t rhi = std::min(nr - 1, r + rad);
        const std::size_t clo = c >= rad ? c - rad : 0;
        const std::size_t chi = std::min(nc - 1, c + rad);
        bool strict_max = true, strict_min = true;
        for (std::size_t u = rlo; u <= rhi; ++u) {
            for (std::size_t v = clo; v <= chi; ++v) {
                if (u == r && v == c) continue;
                if (s.at(r, c) <= s.at(u, v)) strict_max = false;
                if (s.at(r, c) >= s.at(u, v)) strict_min = false;
            }
        }
        return strict_max || strict_min;
    };
    for (std::size_t r = 1; r + 1 < nr; ++r)
        for (std::size_t c = 1; c + 1 < nc; ++c)
            if (strict_extremum(r, c, 1)) is_candidate[r * nc + c] = 1;
    if (border_tol >= 1) {
        for (std::size_t r = 0; r < nr; ++r) {
            for (std::size_t c = 0; c < nc; ++c) {
                const std::size_t edge_dist = std::min(
                    std::min(r, nr - 1 - r), std::min(c, nc - 1 - c));
                if (edge_dist >= border_tol) continue;
                if (strict_extremum(r, c, border_tol))
                    is_candidate[r * nc + c] = 1;
            }
        }
    }
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < nr * nc; ++i)
        if (is_candidate[i]) candidates.push_back(i);
    return candidates;
}

inline void sort_by_magnitude(std::vector<std::size_t>& candidates,
                              const Tensor& s) {
    std::sort(candidates.begin(), candidates.end(),
              [&](std::size_t i, std::size_t j) {
                  const double ai = std::abs(s[i]), aj = std::abs(s[j]);
                  if (ai != aj) return ai > aj;
                  return i < j;
              });
}

} // namespace detail

/// Extrema detection with minimum-distance suppression. Candidates are local
/// extrema (plus border-tolerance admissions near the edges), visited in
/// descending |s| with ties to the lowest flat index; a candidate is accepted
/// iff every previously accepted one is farther than med away (Chebyshev
/// distance in 2D). Accepted indices keep their signed values.
inline Tensor extrema(const Tensor& s, std::size_t med,
                      std::size_t border_tol = 0) {
    if (med < 1) throw std::invalid_argument("extrema distance must be >= 1");
    std::vector<std::size_t> candidates =
        s.rank() == 1 ? detail::extrema_candidates_1d(s, border_tol)
                      : detail::extrema_candidates_2d(s, border_tol);
    detail::sort_by_magnitude(candidates, s);

    const std::size_t nc = s.rank() == 2 ? s.extent(1) : 0;
    auto distance = [&](std::size_t i, std::size_t j) {
        if (s.rank() == 1) return i > j ? i - j : j - i;
        const std::size_t ri = i / nc, ci = i % nc;
        const std::size_t rj = j / nc, cj = j % nc;
        const std::size_t dr = ri > rj ? ri - rj : rj - ri;
        const std::size_t dc = ci > cj ? ci - cj : cj - ci;
        return std::max(dr, dc);
    };

    std::vector<std::size_t> accepted;
    for (std::size_t cand : candidates) {
        bool suppressed = false;
        for (std::size_t acc : accepted) {
            if (distance(cand, acc) <= med) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) accepted.push_back(cand);
    }

    Tensor a = Tensor::zeros(s.extents());
    for (std::size_t idx : accepted) a[idx] = s[idx];
    return a;
}

/// Applies the activation named by `kind` using its sparsity parameter.
inline Tensor apply_activation(ActivationKind kind, const SparsityParam& param,
                               const Tensor& s) {
    switch (kind) {
        case ActivationKind::identity: return identity(s);
        case ActivationKind::relu: return relu(s);
        case ActivationKind::topk_absolutes:
            if (const auto* p = std::get_if<TopK>(&param))
                return topk_absolutes(s, p->k);
            break;
        case ActivationKind::extrema_pool_indices:
            if (const auto* p = std::get_if<PoolSize>(&param))
                return extrema_pool_indices(s, p->m);
            break;
        case ActivationKind::extrema:
            if (const auto* p = std::get_if<MinDistance>(&param))
                return extrema(s, p->med, p->border_tol);
            break;
    }
    throw std::invalid_argument(
        "sparsity parameter inconsistent with activation kind " +
        to_string(kind));
}

} // namespace sanlab
