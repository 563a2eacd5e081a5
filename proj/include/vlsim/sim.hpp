// Copyright (c) 2026 vlsim authors
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic discrete-event simulation of training batches across ranks:
// per-micro-batch compute, Ulysses all-to-alls, FSDP collectives, and MLAC
// exposed overhead, producing per-rank timelines, makespan, and MFU.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "vlsim/balance.hpp"
#include "vlsim/costmodel.hpp"
#include "vlsim/mlac.hpp"
#include "vlsim/packing.hpp"
#include "vlsim/workload.hpp"

namespace vlsim {

// Micro-batch runtimes come from the measured lookup table. When the table
// was measured over full steps (forward+backward), the estimate is split
// across the two phases instead of multiplied.
struct TimeSourceLut {
    RuntimeLut lut;
    bool includes_backward = false;
};

// Micro-batch runtimes derived from modeled flops at peak * efficiency.
// Communication is modeled only in this mode; a measured LUT already
// contains it.
struct TimeSourceCostModel {
    ModelSpec model;
    double achieved_efficiency = 1.0;
    VaeConfig vae;
    PatchConfig patch;
};

using TimeSource = std::variant<TimeSourceLut, TimeSourceCostModel>;

struct MlacSimConfig {
    ActGraph graph;
    MlacPlan plan;
    TierBandwidths bandwidths;
};

struct SimConfig {
    TimeSource source;
    ClusterSpec cluster;
    std::optional<MlacSimConfig> mlac;
    bool fsdp = false;
    bool overlap_fsdp = true;
    double backward_multiplier = 2.0;

    void validate() const;
};

struct RankStats {
    double busy_us = 0.0;
    double idle_us = 0.0;
    double comm_us = 0.0;
    double compute_us = 0.0;
    double mlac_exposed_us = 0.0;
};

struct SimReport {
    double makespan_us = 0.0;
    std::vector<RankStats> per_rank;
    double imbalance = 1.0;  // makespan / mean per-rank busy
    double mfu = 0.0;        // 0 when the time source is a LUT
    std::map<std::string, std::int64_t> event_counts;
    double achieved_flops = 0.0;
};

struct TraceEvent {
    std::string name;
    std::string cat;  // compute | alltoall | fsdp | mlac_transfer | recompute
    int rank = 0;
    int tid = 0;
    double start_us = 0.0;
    double dur_us = 0.0;
};

// One batch: every rank processes its micro-batches in order (forward, then
// backward at the configured multiplier), context-parallel groups block
// together on all-to-alls, and all ranks barrier at the batch end.
std::pair<SimReport, std::vector<TraceEvent>> simulate_step(const RankAssignment& assignment,
                                                            std::span<const MicroBatch> batch,
                                                            std::span<const WorkItem> items,
                                                            const SimConfig& cfg);

using Balancer = std::function<RankAssignment(const std::vector<MicroBatch>&)>;

// Balances and simulates each batch independently, summing reports with a
// barrier between batches. With async_planning, batch k+1 is balanced on a
// worker thread while batch k simulates; the result is identical to the
// sequential mode.
std::pair<SimReport, std::vector<TraceEvent>> simulate_run(
    const std::vector<std::vector<MicroBatch>>& batches,
    std::span<const WorkItem> items,
    const SimConfig& cfg,
    const Balancer& balancer,
    bool async_planning = false);

// Report JSON with fixed keys: makespan_us, per_rank, imbalance, mfu,
// event_counts. Durations are integer microseconds; ratios carry six
// fractional digits. Byte-stable for identical reports.
std::string report_to_json(const SimReport& report);

// Chrome Trace Event Format: {"traceEvents": [{"name","cat","ph":"X","ts",
// "dur","pid","tid"}, ...]} with pid = rank and tid = stream.
std::string trace_to_json(std::span<const TraceEvent> events);

}  // namespace vlsim
