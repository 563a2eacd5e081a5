// Copyright (c) 2026 vlsim authors
// SPDX-License-Identifier: Apache-2.0

#include "vlsim/balance.hpp"

#include <algorithm>
#include <sstream>

#include "doctest.h"

using namespace vlsim;

namespace {

MicroBatch mb(std::uint64_t id, std::int64_t tokens) {
    MicroBatch m;
    m.id = id;
    m.items = {id};
    m.total_tokens = tokens;
    m.capacity = tokens;
    return m;
}

std::vector<MicroBatch> mbs_of(const std::vector<std::int64_t>& tokens) {
    std::vector<MicroBatch> out;
    for (std::size_t i = 0; i < tokens.size(); ++i) out.push_back(mb(i, tokens[i]));
    return out;
}

// identity LUT over a wide range: estimate(s) == s
RuntimeLut identity_lut() {
    RuntimeLut lut;
    lut.points = {{1, 1.0}, {1000000, 1000000.0}};
    return lut;
}

}  // namespace

TEST_CASE("fit_lut keeps monotone samples unchanged") {
    std::vector<std::pair<std::int64_t, double>> samples{{100, 10.0}, {200, 20.0}};
    RuntimeLut lut = fit_lut(samples);
    REQUIRE(lut.points.size() == 2);
    CHECK(lut.points[0] == std::pair<std::int64_t, double>{100, 10.0});
    CHECK(lut.points[1] == std::pair<std::int64_t, double>{200, 20.0});
}

TEST_CASE("fit_lut pools adjacent violators") {
    std::vector<std::pair<std::int64_t, double>> samples{{100, 10.0}, {200, 8.0}, {300, 30.0}};
    RuntimeLut lut = fit_lut(samples);
    REQUIRE(lut.points.size() == 3);
    CHECK(lut.points[0].second == doctest::Approx(9.0));
    CHECK(lut.points[1].second == doctest::Approx(9.0));
    CHECK(lut.points[2].second == doctest::Approx(30.0));
}

TEST_CASE("fit_lut averages duplicate sequence lengths") {
    std::vector<std::pair<std::int64_t, double>> samples{
        {100, 10.0}, {100, 14.0}, {200, 20.0}};
    RuntimeLut lut = fit_lut(samples);
    REQUIRE(lut.points.size() == 2);
    CHECK(lut.points[0] == std::pair<std::int64_t, double>{100, 12.0});
    CHECK(lut.points[1] == std::pair<std::int64_t, double>{200, 20.0});
}

TEST_CASE("fit_lut rejects degenerate inputs") {
    std::vector<std::pair<std::int64_t, double>> one{{100, 10.0}};
    CHECK_THROWS_AS(fit_lut(one), ValidationError);
    std::vector<std::pair<std::int64_t, double>> dup{{100, 10.0}, {100, 12.0}};
    CHECK_THROWS_AS(fit_lut(dup), ValidationError);
    std::vector<std::pair<std::int64_t, double>> bad{{100, 0.0}, {200, 12.0}};
    CHECK_THROWS_AS(fit_lut(bad), ValidationError);
}

TEST_CASE("fitted luts are monotone on noisy samples") {
    Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::pair<std::int64_t, double>> samples;
        std::size_t n = 2 + rng_index(rng, 30);
        std::int64_t s = 1;
        for (std::size_t i = 0; i < n; ++i) {
            s += static_cast<std::int64_t>(rng_index(rng, 50));
            double runtime = static_cast<double>(s) + 40.0 * (rng_unit(rng) - 0.5);
            samples.emplace_back(s, std::max(runtime, 0.5));
        }
        if (samples.size() < 2 || samples.front().first == samples.back().first) continue;
        RuntimeLut lut = fit_lut(samples);
        for (std::size_t i = 1; i < lut.points.size(); ++i) {
            CHECK(lut.points[i].second >= lut.points[i - 1].second);
        }
        // estimate inherits monotonicity
        for (std::int64_t q = 1; q < 200; q += 7) {
            CHECK(estimate(lut, q + 1) >= estimate(lut, q) - 1e-12);
        }
    }
}

TEST_CASE("estimate interpolates and extrapolates") {
    RuntimeLut lut;
    lut.points = {{100, 10.0}, {200, 20.0}};
    CHECK(estimate(lut, 100) == doctest::Approx(10.0));
    CHECK(estimate(lut, 150) == doctest::Approx(15.0));
    CHECK(estimate(lut, 300) == doctest::Approx(30.0));
    // below the first breakpoint the clamp takes over
    CHECK(estimate(lut, 50) == doctest::Approx(10.0));
    CHECK(estimate(lut, 1) == doctest::Approx(10.0));
}

TEST_CASE("lpt worked example: {5,4,3,3,3} on two ranks") {
    auto batch = mbs_of({5, 4, 3, 3, 3});
    RuntimeLut lut = identity_lut();
    RankAssignment a = balance_lpt(batch, 2, lut);
    CHECK(a.makespan_us() == doctest::Approx(10.0));
    std::vector<double> loads = a.rank_runtime_us;
    std::sort(loads.begin(), loads.end());
    CHECK(loads[0] == doctest::Approx(8.0));
    CHECK(loads[1] == doctest::Approx(10.0));
    CHECK(balance_oracle(batch, 2, lut) == doctest::Approx(9.0));
}

TEST_CASE("lpt trivial shapes") {
    RuntimeLut lut = identity_lut();
    auto four = mbs_of({7, 7, 7, 7});
    CHECK(balance_lpt(four, 2, lut).makespan_us() == doctest::Approx(14.0));
    auto single_rank = balance_lpt(mbs_of({3, 9, 2}), 1, lut);
    CHECK(single_rank.makespan_us() == doctest::Approx(14.0));
    CHECK(single_rank.rank_microbatches[0].size() == 3);
}

TEST_CASE("balance oracle trivial shapes") {
    RuntimeLut lut = identity_lut();
    CHECK(balance_oracle(mbs_of({6}), 3, lut) == doctest::Approx(6.0));
    CHECK(balance_oracle(mbs_of({2, 2, 2}), 3, lut) == doctest::Approx(2.0));
    CHECK_THROWS_AS(balance_oracle(mbs_of(std::vector<std::int64_t>(13, 1)), 2, lut),
                    ValidationError);
    CHECK_THROWS_AS(balance_oracle(mbs_of({1}), 5, lut), ValidationError);
}

TEST_CASE("lpt stays within the classical bound of the optimum") {
    Rng rng(77);
    for (int trial = 0; trial < 300; ++trial) {
        std::size_t n = 1 + rng_index(rng, 12);
        int ranks = 1 + static_cast<int>(rng_index(rng, 4));
        std::vector<std::int64_t> tokens;
        for (std::size_t i = 0; i < n; ++i) {
            tokens.push_back(1 + static_cast<std::int64_t>(rng_index(rng, 100)));
        }
        auto batch = mbs_of(tokens);
        RuntimeLut lut = identity_lut();
        double lpt = balance_lpt(batch, ranks, lut).makespan_us();
        double opt = balance_oracle(batch, ranks, lut);
        double bound = (4.0 / 3.0 - 1.0 / (3.0 * ranks)) * opt;
        CHECK(lpt <= bound + 1e-9);
        CHECK(lpt >= opt - 1e-9);
    }
}

TEST_CASE("per-rank runtime sums are conserved") {
    Rng rng(78);
    RuntimeLut lut = identity_lut();
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t n = 1 + rng_index(rng, 20);
        std::vector<std::int64_t> tokens;
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            tokens.push_back(1 + static_cast<std::int64_t>(rng_index(rng, 500)));
            total += static_cast<double>(tokens.back());
        }
        auto a = balance_lpt(mbs_of(tokens), 1 + static_cast<int>(rng_index(rng, 6)), lut);
        double assigned = 0.0;
        std::size_t count = 0;
        for (int r = 0; r < a.ranks; ++r) {
            assigned += a.rank_runtime_us[static_cast<std::size_t>(r)];
            count += a.rank_microbatches[static_cast<std::size_t>(r)].size();
        }
        CHECK(assigned == doctest::Approx(total));
        CHECK(count == n);  // every micro-batch appears exactly once
    }
}

TEST_CASE("lpt is invariant to input permutation") {
    Rng rng(79);
    RuntimeLut lut = identity_lut();
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t n = 2 + rng_index(rng, 10);
        std::vector<std::int64_t> tokens;
        for (std::size_t i = 0; i < n; ++i) {
            tokens.push_back(1 + static_cast<std::int64_t>(rng_index(rng, 50)));
        }
        auto batch = mbs_of(tokens);
        auto baseline = balance_lpt(batch, 3, lut);
        auto shuffled = batch;
        for (std::size_t i = shuffled.size(); i > 1; --i) {
            std::swap(shuffled[i - 1], shuffled[rng_index(rng, i)]);
        }
        CHECK(balance_lpt(shuffled, 3, lut) == baseline);
    }
}

TEST_CASE("scaling the lut scales estimates but not the assignment") {
    auto batch = mbs_of({9, 14, 3, 20, 7, 7});
    RuntimeLut lut = identity_lut();
    RuntimeLut scaled = lut;
    for (auto& [s, r] : scaled.points) r *= 5.0;

    auto a = balance_lpt(batch, 3, lut);
    auto b = balance_lpt(batch, 3, scaled);
    CHECK(a.rank_microbatches == b.rank_microbatches);
    for (std::size_t r = 0; r < a.rank_runtime_us.size(); ++r) {
        CHECK(b.rank_runtime_us[r] == doctest::Approx(5.0 * a.rank_runtime_us[r]));
    }
}

TEST_CASE("plan_next_batch matches direct balancing") {
    auto batch = mbs_of({11, 4, 9, 2, 2, 8});
    RuntimeLut lut = identity_lut();
    auto future = plan_next_batch(batch, 2, lut);
    RankAssignment planned = future.get();
    CHECK(planned == balance_lpt(batch, 2, lut));

    // consecutive batches are balanced independently
    auto batch2 = mbs_of({5, 5, 5, 5});
    auto f1 = plan_next_batch(batch, 2, lut);
    auto f2 = plan_next_batch(batch2, 2, lut);
    CHECK(f1.get() == balance_lpt(batch, 2, lut));
    CHECK(f2.get() == balance_lpt(batch2, 2, lut));
}

TEST_CASE("samples csv round-trips through fit") {
    std::istringstream in("seq_len,runtime_us\n100,10\n200,8\n300,30\n");
    auto samples = read_samples_csv(in);
    REQUIRE(samples.size() == 3);
    RuntimeLut lut = fit_lut(samples);
    std::ostringstream out;
    write_lut_csv(out, lut);
    CHECK(out.str() == "seq_len,runtime_us\n100,9\n200,9\n300,30\n");

    // a fitted LUT re-read and re-fitted is a fixed point
    std::istringstream again(out.str());
    RuntimeLut refit = fit_lut(read_samples_csv(again));
    std::ostringstream out2;
    write_lut_csv(out2, refit);
    CHECK(out.str() == out2.str());

    std::istringstream missing("100,10\n200,20\n");
    CHECK_THROWS_WITH_AS(read_samples_csv(missing), doctest::Contains("seq_len,runtime_us"),
                         ValidationError);
}
