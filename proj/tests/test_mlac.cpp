// Copyright (c) 2026 vlsim authors
// SPDX-License-Identifier: Apache-2.0

#include "vlsim/mlac.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "doctest.h"

using namespace vlsim;

namespace {

ActNode node(std::uint64_t id, double flops, std::int64_t bytes, bool compute_bound = false,
             bool is_module_input = false) {
    return {id, flops, bytes, compute_bound, is_module_input};
}

// bandwidths chosen so recompute time in us equals flops and transfer time
// in us equals bytes/10 (disk doubles that)
TierBandwidths unit_bw() {
    return {1e7, 1e7, 1e6};
}

// Step-by-step timeline: one auxiliary lane services transfers in reverse
// order, then recomputes, while the backward lane runs for backward_us.
// Exposed overhead is whatever finishes after the backward lane.
double overhead_timeline_oracle(const MlacPlan& plan, const ActGraph& graph,
                                const TierBandwidths& bw, double backward_us) {
    std::vector<double> aux_jobs;
    for (std::size_t i = graph.nodes.size(); i-- > 0;) {
        const ActNode& n = graph.nodes[i];
        double b = static_cast<double>(n.bytes);
        switch (plan.decisions[i]) {
            case Tier::OffloadCpu: aux_jobs.push_back(b / bw.gpu_cpu * 1e6); break;
            case Tier::OffloadDisk:
                aux_jobs.push_back(b / bw.gpu_cpu * 1e6 + b / bw.cpu_disk * 1e6);
                break;
            case Tier::Recompute: aux_jobs.push_back(n.flops / bw.compute * 1e6); break;
            case Tier::KeepGpu: break;
        }
    }
    double aux_clock = 0.0;
    for (double job : aux_jobs) aux_clock += job;
    double finish = std::max(aux_clock, backward_us);
    return finish - backward_us;
}

struct RandomInstance {
    ActGraph graph;
    TierBandwidths bw;
    std::int64_t budget;
};

RandomInstance random_chain(Rng& rng, std::size_t max_nodes) {
    RandomInstance inst;
    std::size_t n = 1 + rng_index(rng, max_nodes);
    std::int64_t total_bytes = 0;
    for (std::size_t i = 0; i < n; ++i) {
        bool compute_bound = rng_bernoulli(rng, 0.4);
        // compute-bound ops genuinely cost more to redo per byte
        double flops = compute_bound ? static_cast<double>(20 + rng_index(rng, 80))
                                     : static_cast<double>(rng_index(rng, 10));
        std::int64_t bytes = 1 + static_cast<std::int64_t>(rng_index(rng, 64));
        inst.graph.nodes.push_back(node(i, flops, bytes, compute_bound, i == 0));
        total_bytes += bytes;
    }
    inst.bw = {2e6 + 1e6 * static_cast<double>(rng_index(rng, 7)),
               1e6 + 1e6 * static_cast<double>(rng_index(rng, 4)), 1e6};
    inst.budget = static_cast<std::int64_t>(rng_index(
        rng, static_cast<std::size_t>(total_bytes + total_bytes / 4 + 1)));
    return inst;
}

}  // namespace

TEST_CASE("unconstrained budget keeps everything on gpu") {
    ActGraph g{{node(0, 5, 100), node(1, 50, 10, true), node(2, 5, 100, false, true)}};
    MlacPlan plan = plan_mlac(g, 1000, unit_bw());
    for (Tier t : plan.decisions) CHECK(t == Tier::KeepGpu);
    CHECK(plan.gpu_resident_bytes == 210);
    CHECK(plan.est_overhead_us == doctest::Approx(0.0));
}

TEST_CASE("zero budget keeps nothing and offloads module inputs") {
    ActGraph g{{node(0, 5, 100, false, true), node(1, 50, 10, true), node(2, 5, 100)}};
    MlacPlan plan = plan_mlac(g, 0, unit_bw());
    CHECK(plan.gpu_resident_bytes == 0);
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        CHECK(plan.decisions[i] != Tier::KeepGpu);
        if (g.nodes[i].is_module_input) {
            CHECK(plan.decisions[i] != Tier::Recompute);
        }
    }
    CHECK_THROWS_AS(plan_mlac(g, -1, unit_bw()), ValidationError);
}

TEST_CASE("three-node worked instance matches the enumeration oracle") {
    // bytes (100, 10, 100), recompute times (1, 100, 1) us, budget 110
    ActGraph g{{node(0, 1, 100), node(1, 100, 10, true), node(2, 1, 100)}};
    TierBandwidths bw = unit_bw();

    MlacPlan greedy = plan_mlac(g, 110, bw);
    CHECK(greedy.decisions[0] == Tier::KeepGpu);
    CHECK(greedy.decisions[1] == Tier::KeepGpu);
    CHECK(greedy.decisions[2] == Tier::Recompute);
    CHECK(greedy.gpu_resident_bytes == 110);
    CHECK(greedy.est_overhead_us == doctest::Approx(1.0));

    MlacOracleResult oracle = mlac_oracle(g, 110, bw, 0.0);
    CHECK(oracle.overhead_us == doctest::Approx(1.0));
    CHECK(oracle.plan.decisions == greedy.decisions);
}

TEST_CASE("oracle trivial cases") {
    TierBandwidths bw = unit_bw();
    ActGraph single{{node(0, 3, 50)}};
    MlacOracleResult keep = mlac_oracle(single, 1000, bw, 0.0);
    CHECK(keep.plan.decisions[0] == Tier::KeepGpu);
    CHECK(keep.overhead_us == doctest::Approx(0.0));

    // recompute (3 us) beats cpu transfer (5 us) at zero budget
    MlacOracleResult rec = mlac_oracle(single, 0, bw, 0.0);
    CHECK(rec.plan.decisions[0] == Tier::Recompute);
    CHECK(rec.overhead_us == doctest::Approx(3.0));

    ActGraph big;
    for (std::uint64_t i = 0; i < 11; ++i) big.nodes.push_back(node(i, 1, 1));
    CHECK_THROWS_AS(mlac_oracle(big, 0, bw, 0.0), ValidationError);
}

TEST_CASE("backward overhead under the overlap policy") {
    TierBandwidths bw = unit_bw();
    // all KeepGpu: nothing exposed
    ActGraph g{{node(0, 30, 500), node(1, 10, 300)}};
    MlacPlan all_keep{{Tier::KeepGpu, Tier::KeepGpu}, 800, 0.0};
    CHECK(backward_overhead(all_keep, g, bw, 100.0) == doctest::Approx(0.0));

    // transfers 50 us + recompute 30 us hide fully under backward 100 us
    MlacPlan hidden{{Tier::OffloadCpu, Tier::Recompute}, 0, 0.0};
    ActGraph g2{{node(0, 0, 500), node(1, 30, 0)}};
    CHECK(backward_overhead(hidden, g2, bw, 100.0) == doctest::Approx(0.0));
    CHECK(overhead_timeline_oracle(hidden, g2, bw, 100.0) == doctest::Approx(0.0));

    // transfers 300 us, recompute 50 us, backward 100 us -> 250 exposed
    ActGraph g3{{node(0, 0, 3000), node(1, 50, 0)}};
    MlacPlan exposed{{Tier::OffloadCpu, Tier::Recompute}, 0, 0.0};
    CHECK(backward_overhead(exposed, g3, bw, 100.0) == doctest::Approx(250.0));
    CHECK(overhead_timeline_oracle(exposed, g3, bw, 100.0) == doctest::Approx(250.0));
}

TEST_CASE("backward overhead matches the timeline oracle on random plans") {
    Rng rng(41);
    for (int trial = 0; trial < 300; ++trial) {
        RandomInstance inst = random_chain(rng, 10);
        MlacPlan plan = plan_mlac(inst.graph, inst.budget, inst.bw);
        double backward = static_cast<double>(rng_index(rng, 200));
        CHECK(backward_overhead(plan, inst.graph, inst.bw, backward) ==
              doctest::Approx(overhead_timeline_oracle(plan, inst.graph, inst.bw, backward)));
    }
}

TEST_CASE("plans respect the budget and zero-budget plans keep nothing") {
    Rng rng(42);
    for (int trial = 0; trial < 300; ++trial) {
        RandomInstance inst = random_chain(rng, 12);
        MlacPlan plan = plan_mlac(inst.graph, inst.budget, inst.bw);
        CHECK(plan.gpu_resident_bytes <= inst.budget);
        std::int64_t resident = 0;
        for (std::size_t i = 0; i < plan.decisions.size(); ++i) {
            if (plan.decisions[i] == Tier::KeepGpu) resident += inst.graph.nodes[i].bytes;
            if (inst.graph.nodes[i].is_module_input) {
                CHECK(plan.decisions[i] != Tier::Recompute);
            }
        }
        CHECK(resident == plan.gpu_resident_bytes);

        MlacPlan zero = plan_mlac(inst.graph, 0, inst.bw);
        CHECK(zero.gpu_resident_bytes == 0);
        for (Tier t : zero.decisions) CHECK(t != Tier::KeepGpu);
    }
}

TEST_CASE("greedy overhead never rises when the budget grows") {
    Rng rng(43);
    for (int trial = 0; trial < 300; ++trial) {
        RandomInstance inst = random_chain(rng, 12);
        std::int64_t lower = inst.budget / 2;
        MlacPlan small = plan_mlac(inst.graph, lower, inst.bw);
        MlacPlan large = plan_mlac(inst.graph, inst.budget, inst.bw);
        CHECK(large.est_overhead_us <= small.est_overhead_us + 1e-9);
    }
}

TEST_CASE("greedy tracks the oracle") {
    Rng rng(44);
    for (int trial = 0; trial < 300; ++trial) {
        RandomInstance inst = random_chain(rng, 8);
        MlacPlan greedy = plan_mlac(inst.graph, inst.budget, inst.bw);
        MlacOracleResult oracle = mlac_oracle(inst.graph, inst.budget, inst.bw, 0.0);
        if (oracle.overhead_us == 0.0) {
            CHECK(greedy.est_overhead_us == doctest::Approx(0.0));
        } else {
            CHECK(greedy.est_overhead_us <= 2.0 * oracle.overhead_us + 1e-9);
        }

        std::int64_t total_bytes = 0;
        for (const auto& n : inst.graph.nodes) total_bytes += n.bytes;
        MlacPlan zero = plan_mlac(inst.graph, 0, inst.bw);
        CHECK(zero.est_overhead_us ==
              doctest::Approx(mlac_oracle(inst.graph, 0, inst.bw, 0.0).overhead_us));
        MlacPlan unbounded = plan_mlac(inst.graph, total_bytes, inst.bw);
        CHECK(unbounded.est_overhead_us ==
              doctest::Approx(mlac_oracle(inst.graph, total_bytes, inst.bw, 0.0).overhead_us));
        CHECK(unbounded.est_overhead_us == doctest::Approx(0.0));
    }
}

TEST_CASE("activation graph csv surface") {
    std::istringstream in(
        "id,flops,bytes,compute_bound,is_module_input\n"
        "0,1000,4096,1,1\n"
        "1,250000,8192,true,false\n"
        "2,10,512,0,0\n");
    ActGraph g = read_actgraph_csv(in);
    REQUIRE(g.nodes.size() == 3);
    CHECK(g.nodes[0].is_module_input);
    CHECK(g.nodes[1].compute_bound);
    CHECK(g.nodes[2].bytes == 512);

    std::ostringstream plan_out;
    MlacPlan plan = plan_mlac(g, 0, unit_bw());
    write_plan_csv(plan_out, g, plan);
    CHECK(plan_out.str().starts_with("id,decision\n0,offload_cpu"));

    std::istringstream bad_header("id,flops\n");
    CHECK_THROWS_AS(read_actgraph_csv(bad_header), ValidationError);
    std::istringstream bad_bool(
        "id,flops,bytes,compute_bound,is_module_input\n0,1,1,yes,0\n");
    CHECK_THROWS_AS(read_actgraph_csv(bad_bool), ValidationError);
}
