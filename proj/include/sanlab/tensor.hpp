#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "sanlab/common.hpp"

namespace sanlab {

/// Dense 1D/2D array of doubles in row-major order. Values are immutable for
/// every operator in this header; mutation (data()) is reserved for owners
/// such as the optimizer updating kernels.
class Tensor {
public:
    Tensor() = default;

    Tensor(std::vector<std::size_t> extents, std::vector<double> values)
        : extents_(std::move(extents)), values_(std::move(values)) {
        if (extents_.empty() || extents_.size() > 2)
            throw shape_error("tensor rank must be 1 or 2");
        std::size_t n = 1;
        for (std::size_t e : extents_) {
            if (e < 1) throw shape_error("tensor extents must be >= 1");
            n *= e;
        }
        if (n != values_.size())
            throw shape_error("tensor value count does not match extents");
    }

    static Tensor zeros(std::vector<std::size_t> extents) {
        std::size_t n = 1;
        for (std::size_t e : extents) n *= e;
        return Tensor(std::move(extents), std::vector<double>(n, 0.0));
    }

    static Tensor vec(std::vector<double> values) {
        const std::size_t n = values.size();
        return Tensor({n}, std::move(values));
    }

    std::size_t rank() const { return extents_.size(); }
    std::size_t extent(std::size_t axis) const { return extents_.at(axis); }
    const std::vector<std::size_t>& extents() const { return extents_; }
    std::size_t size() const { return values_.size(); }

    double operator[](std::size_t flat) const { return values_[flat]; }
    double& operator[](std::size_t flat) { return values_[flat]; }

    double at(std::size_t r, std::size_t c) const {
        return values_[r * extents_[1] + c];
    }
    double& at(std::size_t r, std::size_t c) {
        return values_[r * extents_[1] + c];
    }

    const std::vector<double>& values() const { return values_; }
    std::vector<double>& data() { return values_; }

    bool same_extents(const Tensor& other) const {
        return extents_ == other.extents_;
    }

private:
    std::vector<std::size_t> extents_;
    std::vector<double> values_;
};

inline std::string extents_str(const Tensor& t) {
    std::string s;
    for (std::size_t a = 0; a < t.rank(); ++a) {
        if (a) s += "x";
        s += std::to_string(t.extent(a));
    }
    return s;
}

inline void check_kernel_fits(const Tensor& x, const Tensor& w) {
    if (x.rank() != w.rank())
        throw shape_error("rank mismatch: input is rank " +
                          std::to_string(x.rank()) + ", kernel is rank " +
                          std::to_string(w.rank()));
    for (std::size_t a = 0; a < x.rank(); ++a)
        if (w.extent(a) > x.extent(a))
            throw shape_error("kernel " + extents_str(w) +
                              " larger than input " + extents_str(x));
}

/// Cross-correlation with "same" zero padding: output extents equal input
/// extents. Per axis the total pad is m-1, split floor/ceil left/right, so
/// even kernel sizes pad one extra sample on the right.
inline Tensor xcorr_same(const Tensor& x, const Tensor& w) {
    check_kernel_fits(x, w);
    if (x.rank() == 1) {
        const std::size_t n = x.extent(0), m = w.extent(0);
        const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>((m - 1) / 2);
        Tensor out = Tensor::zeros({n});
        for (std::size_t t = 0; t < n; ++t) {
            double acc = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                const std::ptrdiff_t src =
                    static_cast<std::ptrdiff_t>(t + j) - pad;
                if (src >= 0 && src < static_cast<std::ptrdiff_t>(n))
                    acc += x[static_cast<std::size_t>(src)] * w[j];
            }
            out[t] = acc;
        }
        return out;
    }
    const std::size_t nr = x.extent(0), nc = x.extent(1);
    const std::size_t mr = w.extent(0), mc = w.extent(1);
    const std::ptrdiff_t pr = static_cast<std::ptrdiff_t>((mr - 1) / 2);
    const std::ptrdiff_t pc = static_cast<std::ptrdiff_t>((mc - 1) / 2);
    Tensor out = Tensor::zeros({nr, nc});
    for (std::size_t r = 0; r < nr; ++r) {
        for (std::size_t c = 0; c < nc; ++c) {
            double acc = 0.0;
            for (std::size_t jr = 0; jr < mr; ++jr) {
                const std::ptrdiff_t sr =
                    static_cast<std::ptrdiff_t>(r + jr) - pr;
                if (sr < 0 || sr >= static_cast<std::ptrdiff_t>(nr)) continue;
                for (std::size_t jc = 0; jc < mc; ++jc) {
                    const std::ptrdiff_t sc =
                        static_cast<std::ptrdiff_t>(c + jc) - pc;
                    if (sc < 0 || sc >= static_cast<std::ptrdiff_t>(nc))
                        continue;
                    acc += x.at(static_cast<std::size_t>(sr),
                                static_cast<std::size_t>(sc)) *
                           w.at(jr, jc);
                }
            }
            out.at(r, c) = acc;
        }
    }
    return out;
}

/// Exact adjoint of xcorr_same in the kernel: a unit spike in `a` stamps an
/// un-reversed copy of `w` centered at the spike.
inline Tensor adjoint_xcorr_same(const Tensor& a, const Tensor& w) {
    check_kernel_fits(a, w);
    if (a.rank() == 1) {
        const std::size_t n = a.extent(0), m = w.extent(0);
        const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>((m - 1) / 2);
        Tensor out = Tensor::zeros({n});
        for (std::size_t u = 0; u < n; ++u) {
            double acc = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                const std::ptrdiff_t src =
                    static_cast<std::ptrdiff_t>(u) + pad -
                    static_cast<std::ptrdiff_t>(j);
                if (src >= 0 && src < static_cast<std::ptrdiff_t>(n))
                    acc += a[static_cast<std::size_t>(src)] * w[j];
            }
            out[u] = acc;
        }
        return out;
    }
    const std::size_t nr = a.extent(0), nc = a.extent(1);
    const std::size_t mr = w.extent(0), mc = w.extent(1);
    const std::ptrdiff_t pr = static_cast<std::ptrdiff_t>((mr - 1) / 2);
    const std::ptrdiff_t pc = static_cast<std::ptrdiff_t>((mc - 1) / 2);
    Tensor out = Tensor::zeros({nr, nc});
    for (std::size_t r = 0; r < nr; ++r) {
        for (std::size_t c = 0; c < nc; ++c) {
            double acc = 0.0;
            for (std::size_t jr = 0; jr < mr; ++jr) {
                const std::ptrdiff_t sr = static_cast<std::ptrdiff_t>(r) + pr -
                                          static_cast<std::ptrdiff_t>(jr);
                if (sr < 0 || sr >= static_cast<std::ptrdiff_t>(nr)) continue;
                for (std::size_t jc = 0; jc < mc; ++jc) {
                    const std::ptrdiff_t sc =
                        static_cast<std::ptrdiff_t>(c) + pc -
                        static_cast<std::ptrdiff_t>(jc);
                    if (sc < 0 || sc >= static_cast<std::ptrdiff_t>(nc))
                        continue;
                    acc += a.at(static_cast<std::size_t>(sr),
                                static_cast<std::size_t>(sc)) *
                           w.at(jr, jc);
                }
            }
            out.at(r, c) = acc;
        }
    }
    return out;
}

/// Gradient of <upstream, xcorr_same(input, w)> with respect to the kernel w.
inline Tensor xcorr_kernel_grad(const Tensor& input, const Tensor& upstream,
                                const std::vector<std::size_t>& kernel_extents) {
    if (!input.same_extents(upstream))
        throw shape_error("upstream extents " + extents_str(upstream) +
                          " do not match input " + extents_str(input));
    Tensor w_probe = Tensor::zeros(kernel_extents);
    check_kernel_fits(input, w_probe);
    if (input.rank() == 1) {
        const std::size_t n = input.extent(0), m = kernel_extents[0];
        const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>((m - 1) / 2);
        Tensor g = Tensor::zeros({m});
        for (std::size_t j = 0; j < m; ++j) {
            double acc = 0.0;
            for (std::size_t t = 0; t < n; ++t) {
                const std::ptrdiff_t src =
                    static_cast<std::ptrdiff_t>(t + j) - pad;
                if (src >= 0 && src < static_cast<std::ptrdiff_t>(n))
                    acc += upstream[t] * input[static_cast<std::size_t>(src)];
            }
            g[j] = acc;
        }
        return g;
    }
    const std::size_t nr = input.extent(0), nc = input.extent(1);
    const std::size_t mr = kernel_extents[0], mc = kernel_extents[1];
    const std::ptrdiff_t pr = static_cast<std::ptrdiff_t>((mr - 1) / 2);
    const std::ptrdiff_t pc = static_cast<std::ptrdiff_t>((mc - 1) / 2);
    Tensor g = Tensor::zeros({mr, mc});
    for (std::size_t jr = 0; jr < mr; ++jr) {
        for (std::size_t jc = 0; jc < mc; ++jc) {
            double acc = 0.0;
            for (std::size_t r = 0; r < nr; ++r) {
                const std::ptrdiff_t sr =
                    static_cast<std::ptrdiff_t>(r + jr) - pr;
                if (sr < 0 || sr >= static_cast<std::ptrdiff_t>(nr)) continue;
                for (std::size_t c = 0; c < nc; ++c) {
                    const std::ptrdiff_t sc =
                        static_cast<std::ptrdiff_t>(c + jc) - pc;
                    if (sc < 0 || sc >= static_cast<std::ptrdiff_t>(nc))
                        continue;
                    acc += upstream.at(r, c) *
                           input.at(static_cast<std::size_t>(sr),
                                    static_cast<std::size_t>(sc));
                }
            }
            g.at(jr, jc) = acc;
        }
    }
    return g;
}

/// Mean absolute error over all entries.
inline double mae(const Tensor& a, const Tensor& b) {
    if (!a.same_extents(b))
        throw shape_error("mae: extents " + extents_str(a) + " vs " +
                          extents_str(b));
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
    return acc / static_cast<double>(a.size());
}

/// Number of entries that are exactly nonzero. Sparse activations write exact
/// zeros, so no epsilon is involved.
inline std::size_t nnz(const Tensor& a) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != 0.0) ++count;
    return count;
}

inline double dot(const Tensor& a, const Tensor& b) {
    if (!a.same_extents(b))
        throw shape_error("dot: extents " + extents_str(a) + " vs " +
                          extents_str(b));
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

inline double norm2(const Tensor& a) { return std::sqrt(dot(a, a)); }

} // namespace sanlab
