#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "sanlab/activations.hpp"
#include "support/oracles.hpp"

using namespace sanlab;

TEST_CASE("derive_sparsity_param follows the kernel-size rules") {
    SECTION("top-k: k = floor(n/m)^dim") {
        const auto p = derive_sparsity_param(ActivationKind::topk_absolutes,
                                             15, {178});
        REQUIRE(std::get<TopK>(p).k == 11);
        const auto p2 = derive_sparsity_param(ActivationKind::topk_absolutes,
                                              3, {28, 28});
        REQUIRE(std::get<TopK>(p2).k == 81);
    }
    SECTION("extrema: med = m, border tolerance passthrough") {
        const auto p =
            derive_sparsity_param(ActivationKind::extrema, 51, {1000}, 3);
        REQUIRE(std::get<MinDistance>(p).med == 51);
        REQUIRE(std::get<MinDistance>(p).border_tol == 3);
    }
    SECTION("pool size") {
        const auto p = derive_sparsity_param(
            ActivationKind::extrema_pool_indices, 9, {178});
        REQUIRE(std::get<PoolSize>(p).m == 9);
    }
    SECTION("identity and relu take no parameter") {
        REQUIRE(std::holds_alternative<NoParam>(
            derive_sparsity_param(ActivationKind::identity, 7, {100})));
        REQUIRE(std::holds_alternative<NoParam>(
            derive_sparsity_param(ActivationKind::relu, 7, {100})));
    }
    SECTION("k of zero is an error") {
        REQUIRE_THROWS_AS(derive_sparsity_param(
                              ActivationKind::topk_absolutes, 200, {100}),
                          std::invalid_argument);
    }
}

TEST_CASE("identity and relu") {
    const Tensor s = Tensor::vec({1, -2, 0});
    REQUIRE(identity(s).values() == s.values());
    REQUIRE(relu(Tensor::vec({1, -2, 3})).values() ==
            std::vector<double>{1, 0, 3});
    REQUIRE(nnz(relu(Tensor::vec({-1, -2, -3}))) == 0);
    const Tensor pos = Tensor::vec({0.5, 1.5});
    REQUIRE(relu(pos).values() == pos.values());
}

TEST_CASE("topk_absolutes keeps the k largest magnitudes") {
    REQUIRE(topk_absolutes(Tensor::vec({3, -5, 2, 0, 1}), 2).values() ==
            std::vector<double>{3, -5, 0, 0, 0});
    const Tensor s = Tensor::vec({0.3, -0.1, 2.0});
    REQUIRE(topk_absolutes(s, 3).values() == s.values());
    SECTION("ties break to the lowest index") {
        REQUIRE(topk_absolutes(Tensor::vec({2, 2, 1}), 1).values() ==
                std::vector<double>{2, 0, 0});
    }
    SECTION("k out of range") {
        REQUIRE_THROWS_AS(topk_absolutes(Tensor::vec({1, 2}), 0),
                          std::invalid_argument);
        REQUIRE_THROWS_AS(topk_absolutes(Tensor::vec({1, 2}), 3),
                          std::invalid_argument);
    }
}

TEST_CASE("extrema_pool_indices") {
    SECTION("per-window argmax of |s| keeps the signed value") {
        REQUIRE(
            extrema_pool_indices(Tensor::vec({1, -4, 2, 3, 0, -1}), 3).values() ==
            std::vector<double>{0, -4, 0, 3, 0, 0});
    }
    SECTION("pool size 1 is the identity") {
        const Tensor s = Tensor::vec({1, -1, 0.5});
        REQUIRE(extrema_pool_indices(s, 1).values() == s.values());
    }
    SECTION("trailing remainder window is discarded") {
        std::mt19937_64 rng(11);
        const Tensor s = testing::uniform_tensor(rng, {7}, 0.1, 1.0);
        REQUIRE(nnz(extrema_pool_indices(s, 3)) == 2);
    }
    SECTION("2D grid of windows") {
        // 4x4 input, m=2: four windows, argmax of |s| per window
        const Tensor s({4, 4}, {1, 2, -1, 0,   //
                                0, -3, 0, 2,   //
                                5, 0, 0, 0,    //
                                0, -4, 1, -6});
        const Tensor a = extrema_pool_indices(s, 2);
        REQUIRE(a.values() == std::vector<double>{0, 0, 0, 0,   //
                                                  0, -3, 0, 2,  //
                                                  5, 0, 0, 0,   //
                                                  0, 0, 0, -6});
    }
}

TEST_CASE("extrema hand traces") {
    SECTION("suppression at med=2") {
        REQUIRE(extrema(Tensor::vec({0, 3, 0, 2, 0, -4, 0}), 2).values() ==
                std::vector<double>{0, 3, 0, 0, 0, -4, 0});
    }
    SECTION("all gaps exceed med=1") {
        REQUIRE(extrema(Tensor::vec({0, 3, 0, 2, 0, -4, 0}), 1).values() ==
                std::vector<double>{0, 3, 0, 2, 0, -4, 0});
    }
    SECTION("monotone input has no interior sign change") {
        REQUIRE(nnz(extrema(Tensor::vec({1, 2, 3, 4, 5}), 1)) == 0);
        REQUIRE(nnz(extrema(Tensor::vec({5, 4, 3, 2, 1}), 2)) == 0);
    }
    SECTION("border tolerance admits one-sided extrema near the edges") {
        // rising ramp truncated at the right edge: the last sample is the
        // strict max of its clipped radius-3 window, the first the strict min
        const Tensor s = Tensor::vec({1, 2, 3, 4, 5, 6, 7, 8});
        const Tensor a = extrema(s, 2, 3);
        REQUIRE(a[7] == 8.0);
        REQUIRE(a[0] == 1.0);
        REQUIRE(nnz(a) == 2);
        // med=7 lets the larger edge extremum suppress the smaller one
        const Tensor b = extrema(s, 7, 3);
        REQUIRE(b[7] == 8.0);
        REQUIRE(nnz(b) == 1);
        const Tensor c = extrema(s, 6, 3);
        REQUIRE(nnz(c) == 2); // distance 7 > med 6: both survive
    }
}

TEST_CASE("extrema equals the brute-force delete-ball oracle") {
    std::mt19937_64 rng(12345);
    std::uniform_int_distribution<int> value(-2, 2);
    for (int trial = 0; trial < 2000; ++trial) {
        Tensor s = Tensor::zeros({12});
        for (std::size_t t = 0; t < 12; ++t)
            s[t] = static_cast<double>(value(rng));
        for (std::size_t med : {1u, 2u, 3u}) {
            const Tensor got = extrema(s, med);
            const Tensor want = testing::brute_force_extrema_1d(s, med);
            INFO("med=" << med);
            REQUIRE(got.values() == want.values());
        }
    }
    SECTION("with border tolerance") {
        for (int trial = 0; trial < 500; ++trial) {
            Tensor s = Tensor::zeros({12});
            for (std::size_t t = 0; t < 12; ++t)
                s[t] = static_cast<double>(value(rng));
            const Tensor got = extrema(s, 2, 3);
            const Tensor want = testing::brute_force_extrema_1d(s, 2, 3);
            REQUIRE(got.values() == want.values());
        }
    }
}

TEST_CASE("2D extrema") {
    SECTION("strict interior extrema with Chebyshev suppression") {
        Tensor s = Tensor::zeros({5, 5});
        s.at(1, 1) = 4.0;
        s.at(3, 3) = -3.0;
        const Tensor a1 = extrema(s, 1);
        REQUIRE(a1.at(1, 1) == 4.0);
        REQUIRE(a1.at(3, 3) == -3.0);
        REQUIRE(nnz(a1) == 2);
        // Chebyshev distance between the two extrema is 2
        const Tensor a2 = extrema(s, 2);
        REQUIRE(a2.at(1, 1) == 4.0);
        REQUIRE(nnz(a2) == 1);
    }
    SECTION("flat regions produce no candidates") {
        REQUIRE(nnz(extrema(Tensor::zeros({6, 6}), 1)) == 0);
    }
    SECTION("pairwise Chebyshev separation exceeds med") {
        std::mt19937_64 rng(77);
        for (int trial = 0; trial < 50; ++trial) {
            const Tensor s = testing::uniform_tensor(rng, {9, 9});
            const Tensor a = extrema(s, 2);
            std::vector<std::pair<std::size_t, std::size_t>> hits;
            for (std::size_t r = 0; r < 9; ++r)
                for (std::size_t c = 0; c < 9; ++c)
                    if (a.at(r, c) != 0.0) hits.emplace_back(r, c);
            for (std::size_t i = 0; i < hits.size(); ++i) {
                for (std::size_t j = i + 1; j < hits.size(); ++j) {
                    const std::size_t dr =
                        hits[i].first > hits[j].first
                            ? hits[i].first - hits[j].first
                            : hits[j].first - hits[i].first;
                    const std::size_t dc =
                        hits[i].second > hits[j].second
                            ? hits[i].second - hits[j].second
                            : hits[j].second - hits[i].second;
                    REQUIRE(std::max(dr, dc) > 2);
                }
            }
        }
    }
}

TEST_CASE("activation properties") {
    std::mt19937_64 rng(321);
    SECTION("nonzero outputs preserve the input value at that index") {
        for (int trial = 0; trial < 100; ++trial) {
            const Tensor s = testing::uniform_tensor(rng, {30});
            for (ActivationKind kind : all_activation_kinds) {
                const SparsityParam p =
                    derive_sparsity_param(kind, 5, {30}, 2);
                const Tensor a = apply_activation(kind, p, s);
                for (std::size_t t = 0; t < s.size(); ++t)
                    if (a[t] != 0.0) REQUIRE(a[t] == s[t]);
            }
        }
    }
    SECTION("count laws") {
        for (int trial = 0; trial < 200; ++trial) {
            // dense support: no zeros, so every pool window has a nonzero
            Tensor s = testing::uniform_tensor(rng, {37}, 0.1, 1.0);
            std::uniform_int_distribution<int> sign(0, 1);
            for (std::size_t t = 0; t < s.size(); ++t)
                if (sign(rng)) s[t] = -s[t];
            REQUIRE(nnz(topk_absolutes(s, 9)) == 9);
            REQUIRE(nnz(extrema_pool_indices(s, 5)) == 7);
        }
    }
    SECTION("top-k magnitude dominance") {
        for (int trial = 0; trial < 100; ++trial) {
            const Tensor s = testing::uniform_tensor(rng, {25});
            const Tensor a = topk_absolutes(s, 6);
            double min_kept = 1e300, max_dropped = 0.0;
            for (std::size_t t = 0; t < s.size(); ++t) {
                if (a[t] != 0.0)
                    min_kept = std::min(min_kept, std::abs(s[t]));
                else
                    max_dropped = std::max(max_dropped, std::abs(s[t]));
            }
            REQUIRE(min_kept >= max_dropped);
        }
    }
    SECTION("extrema separation and packing bound") {
        for (int trial = 0; trial < 200; ++trial) {
            const Tensor s = testing::uniform_tensor(rng, {50});
            const std::size_t med = 1 + static_cast<std::size_t>(trial % 7);
            const Tensor a = extrema(s, med);
            std::vector<std::size_t> hits;
            for (std::size_t t = 0; t < s.size(); ++t)
                if (a[t] != 0.0) hits.push_back(t);
            for (std::size_t i = 1; i < hits.size(); ++i)
                REQUIRE(hits[i] - hits[i - 1] > med);
            const std::size_t bound = (50 + med) / (med + 1) + 1;
            REQUIRE(hits.size() <= bound);
        }
    }
}

TEST_CASE("activation names round-trip") {
    for (ActivationKind kind : all_activation_kinds) {
        const auto parsed = parse_activation(to_string(kind));
        REQUIRE(parsed.has_value());
        REQUIRE(*parsed == kind);
    }
    REQUIRE_FALSE(parse_activation("NotAKind").has_value());
}
