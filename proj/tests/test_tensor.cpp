#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "sanlab/activations.hpp"
#include "sanlab/tensor.hpp"
#include "support/oracles.hpp"

using Catch::Approx;
using namespace sanlab;

TEST_CASE("xcorr_same matches hand-expanded values") {
    SECTION("identity kernel") {
        const Tensor out = xcorr_same(Tensor::vec({1, 2, 3}), Tensor::vec({1}));
        REQUIRE(out.values() == std::vector<double>{1, 2, 3});
    }
    SECTION("unit spike against a 3-tap kernel") {
        const Tensor out =
            xcorr_same(Tensor::vec({0, 1, 0}), Tensor::vec({1, 2, 3}));
        REQUIRE(out.values() == std::vector<double>{3, 2, 1});
    }
    SECTION("zero input stays zero") {
        const Tensor out = xcorr_same(Tensor::zeros({8}),
                                      Tensor::vec({0.3, -0.7, 1.1}));
        for (std::size_t t = 0; t < 8; ++t) REQUIRE(out[t] == 0.0);
    }
    SECTION("even kernel pads one extra sample on the right") {
        // out[t] = x[t]*w0 + x[t+1]*w1 with x[3] treated as zero
        const Tensor out =
            xcorr_same(Tensor::vec({1, 2, 3}), Tensor::vec({4, 5}));
        REQUIRE(out.values() == std::vector<double>{14, 23, 12});
    }
    SECTION("2D spike, even kernel") {
        Tensor x = Tensor::zeros({3, 3});
        x.at(1, 1) = 1.0;
        const Tensor w({2, 2}, {1, 2, 3, 4});
        const Tensor out = xcorr_same(x, w);
        REQUIRE(out.values() ==
                std::vector<double>{4, 3, 0, 2, 1, 0, 0, 0, 0});
    }
}

TEST_CASE("adjoint_xcorr_same stamps un-reversed kernels") {
    SECTION("unit spike stamps the kernel centered on it") {
        const Tensor out =
            adjoint_xcorr_same(Tensor::vec({0, 1, 0}), Tensor::vec({1, 2, 3}));
        REQUIRE(out.values() == std::vector<double>{1, 2, 3});
    }
    SECTION("zero map decodes to zero") {
        const Tensor out =
            adjoint_xcorr_same(Tensor::zeros({6}), Tensor::vec({1, 2, 3}));
        for (std::size_t t = 0; t < 6; ++t) REQUIRE(out[t] == 0.0);
    }
    SECTION("well-separated spikes superpose disjoint kernel copies") {
        const Tensor w = Tensor::vec({1, 2, 3});
        Tensor a = Tensor::zeros({10});
        a[1] = 2.0;
        a[7] = -1.0;
        // independent construction: stamp each copy directly
        Tensor expected = Tensor::zeros({10});
        for (const auto& [pos, amp] :
             {std::pair<std::size_t, double>{1, 2.0}, {7, -1.0}}) {
            for (std::size_t j = 0; j < 3; ++j)
                expected[pos - 1 + j] += amp * w[j];
        }
        const Tensor out = adjoint_xcorr_same(a, w);
        REQUIRE(out.values() == expected.values());
    }
}

TEST_CASE("xcorr_kernel_grad") {
    SECTION("single-term sum") {
        const Tensor g = xcorr_kernel_grad(Tensor::vec({0, 1, 0}),
                                           Tensor::vec({0, 1, 0}), {3});
        REQUIRE(g.values() == std::vector<double>{0, 1, 0});
    }
    SECTION("zero upstream gives zero gradient") {
        const Tensor g = xcorr_kernel_grad(Tensor::vec({1, 2, 3, 4}),
                                           Tensor::zeros({4}), {2});
        REQUIRE(g.values() == std::vector<double>{0, 0});
    }
    SECTION("matches central finite differences of <upstream, xcorr>") {
        std::mt19937_64 rng(42);
        const Tensor x = testing::uniform_tensor(rng, {16});
        const Tensor upstream = testing::uniform_tensor(rng, {16});
        Tensor w = testing::uniform_tensor(rng, {5});
        const Tensor analytic = xcorr_kernel_grad(x, upstream, {5});
        for (std::size_t j = 0; j < w.size(); ++j) {
            const double fd = testing::central_diff(
                [&] { return dot(upstream, xcorr_same(x, w)); }, w[j], 1e-6);
            REQUIRE(analytic[j] == Approx(fd).epsilon(1e-6).margin(1e-9));
        }
    }
}

TEST_CASE("mae") {
    REQUIRE(mae(Tensor::vec({1, 2, 3}), Tensor::vec({1, 2, 3})) == 0.0);
    REQUIRE(mae(Tensor::vec({1, -1}), Tensor::vec({0, 0})) == 1.0);
    REQUIRE(mae(Tensor::vec({2}), Tensor::vec({-1})) == 3.0);
    REQUIRE_THROWS_AS(mae(Tensor::vec({1, 2}), Tensor::vec({1})), shape_error);
}

TEST_CASE("nnz counts exact nonzeros") {
    REQUIRE(nnz(Tensor::zeros({5})) == 0);
    REQUIRE(nnz(Tensor::vec({0, 3.5, 0, -2})) == 2);
    // one survivor per complete pool window
    std::mt19937_64 rng(7);
    const Tensor s = testing::uniform_tensor(rng, {6}, 0.5, 1.5);
    REQUIRE(nnz(extrema_pool_indices(s, 2)) == 3);
}

TEST_CASE("adjointness holds to rounding accuracy") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> len(1, 40);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = std::max<std::size_t>(len(rng), 1);
        std::uniform_int_distribution<std::size_t> klen(1, n);
        const std::size_t m = klen(rng);
        const Tensor x = testing::uniform_tensor(rng, {n});
        const Tensor y = testing::uniform_tensor(rng, {n});
        const Tensor w = testing::uniform_tensor(rng, {m});
        const double lhs = dot(xcorr_same(x, w), y);
        const double rhs = dot(x, adjoint_xcorr_same(y, w));
        const double bound = 1e-10 * (norm2(x) * norm2(y) * norm2(w)) + 1e-300;
        REQUIRE(std::abs(lhs - rhs) <= bound);
    }
    for (int trial = 0; trial < 100; ++trial) {
        std::uniform_int_distribution<std::size_t> rows(1, 12), cols(1, 12);
        const std::size_t nr = rows(rng), nc = cols(rng);
        std::uniform_int_distribution<std::size_t> kr(1, nr), kc(1, nc);
        const Tensor x = testing::uniform_tensor(rng, {nr, nc});
        const Tensor y = testing::uniform_tensor(rng, {nr, nc});
        const Tensor w = testing::uniform_tensor(rng, {kr(rng), kc(rng)});
        const double lhs = dot(xcorr_same(x, w), y);
        const double rhs = dot(x, adjoint_xcorr_same(y, w));
        const double bound = 1e-10 * (norm2(x) * norm2(y) * norm2(w)) + 1e-300;
        REQUIRE(std::abs(lhs - rhs) <= bound);
    }
}

TEST_CASE("xcorr_same is linear") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        const Tensor x = testing::uniform_tensor(rng, {20});
        const Tensor y = testing::uniform_tensor(rng, {20});
        const Tensor w = testing::uniform_tensor(rng, {7});
        const double a = 1.7, b = -0.3;
        Tensor combo = Tensor::zeros({20});
        for (std::size_t t = 0; t < 20; ++t) combo[t] = a * x[t] + b * y[t];
        const Tensor lhs = xcorr_same(combo, w);
        const Tensor cx = xcorr_same(x, w), cy = xcorr_same(y, w);
        double worst = 0.0, scale = 0.0;
        for (std::size_t t = 0; t < 20; ++t) {
            const double rhs = a * cx[t] + b * cy[t];
            worst = std::max(worst, std::abs(lhs[t] - rhs));
            scale = std::max({scale, std::abs(lhs[t]), std::abs(rhs)});
        }
        REQUIRE(worst <= 1e-12 * std::max(scale, 1e-30));
    }
}

TEST_CASE("conv family preserves input extents") {
    std::mt19937_64 rng(5);
    const Tensor x = testing::uniform_tensor(rng, {9, 11});
    const Tensor w = testing::uniform_tensor(rng, {4, 3});
    REQUIRE(xcorr_same(x, w).extents() == x.extents());
    REQUIRE(adjoint_xcorr_same(x, w).extents() == x.extents());
    REQUIRE(xcorr_kernel_grad(x, x, {4, 3}).extents() ==
            std::vector<std::size_t>{4, 3});
}

TEST_CASE("shape errors") {
    REQUIRE_THROWS_AS(
        xcorr_same(Tensor::vec({1, 2, 3}), Tensor::zeros({2, 2})), shape_error);
    REQUIRE_THROWS_AS(xcorr_same(Tensor::vec({1, 2}), Tensor::vec({1, 2, 3})),
                      shape_error);
    REQUIRE_THROWS_AS(Tensor({2, 2}, {1, 2, 3}), shape_error);
    REQUIRE_THROWS_AS(Tensor({0}, {}), shape_error);
}
