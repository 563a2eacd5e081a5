// Copyright (c) 2026 vlsim authors
// SPDX-License-Identifier: Apache-2.0
//
// Multi-level activation checkpointing: per-activation placement across
// GPU / CPU / disk / recompute under a GPU activation-memory budget.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "vlsim/common.hpp"

namespace vlsim {

enum class Tier { KeepGpu, OffloadCpu, OffloadDisk, Recompute };

std::string to_string(Tier t);

struct ActNode {
    std::uint64_t id = 0;
    double flops = 0.0;           // forward recomputation cost
    std::int64_t bytes = 0;       // activation output size
    bool compute_bound = false;
    bool is_module_input = false;  // recomputation root; never Recompute
};

// Linear chain in topological order (one transformer layer's saved tensors).
struct ActGraph {
    std::vector<ActNode> nodes;

    void validate() const;
};

struct TierBandwidths {
    double gpu_cpu = 1.0;   // bytes/second, each direction
    double cpu_disk = 1.0;  // bytes/second, each direction
    double compute = 1.0;   // flops/second for recompute timing

    void validate() const;
};

struct MlacPlan {
    std::vector<Tier> decisions;          // one per graph node, in order
    std::int64_t gpu_resident_bytes = 0;  // sum of KeepGpu activation bytes
    double est_overhead_us = 0.0;         // transfer + recompute time, before overlap
};

// Greedy placement: rank nodes by recompute-time-per-byte (compute-bound
// nodes first), keep the top of the ranking on GPU until the budget is
// filled, then give each remaining node the cheapest of CPU offload, disk
// offload, or recompute. Module inputs are never recomputed.
MlacPlan plan_mlac(const ActGraph& graph, std::int64_t gpu_budget, const TierBandwidths& bw);

// Exposed backward time under the full-overlap policy: transfers (one
// channel per direction, disk staged serially through CPU) and recompute
// hide beneath backward compute up to its duration; only the excess shows.
double backward_overhead(const MlacPlan& plan,
                         const ActGraph& graph,
                         const TierBandwidths& bw,
                         double backward_compute_us);

struct MlacOracleResult {
    MlacPlan plan;
    double overhead_us = 0.0;
};

// Exhaustive enumeration of feasible decision vectors, minimal overhead,
// ties by lexicographic decision order. Rejects graphs above 10 nodes.
MlacOracleResult mlac_oracle(const ActGraph& graph,
                             std::int64_t gpu_budget,
                             const TierBandwidths& bw,
                             double backward_compute_us);

// Graph file surface: CSV with the exact header
//   id,flops,bytes,compute_bound,is_module_input
ActGraph read_actgraph_csv(std::istream& is);
void write_plan_csv(std::ostream& os, const ActGraph& graph, const MlacPlan& plan);

}  // namespace vlsim
