// Copyright (c) 2026 vlsim authors
// SPDX-License-Identifier: Apache-2.0
//
// Runtime balancing: a measured seqlen-to-runtime lookup table and
// assignment of micro-batches to ranks within one batch.

#pragma once

#include <cstdint>
#include <future>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "vlsim/packing.hpp"

namespace vlsim {

// Monotone piecewise-linear map from sequence length to step runtime.
struct RuntimeLut {
    // (seq_len, runtime_us), seq_len strictly increasing, runtime
    // non-decreasing (guaranteed by fit_lut).
    std::vector<std::pair<std::int64_t, double>> points;

    void validate() const;
};

// Averages duplicate seq_len samples, then enforces monotonicity with
// pool-adjacent-violators (weighted by sample multiplicity). Requires at
// least two distinct sequence lengths.
RuntimeLut fit_lut(std::span<const std::pair<std::int64_t, double>> samples);

// Exact at breakpoints, linear between them, linearly extrapolated beyond
// either end with the nearest segment's slope, clamped below at the smallest
// stored runtime so noisy short-sequence slopes cannot go negative.
double estimate(const RuntimeLut& lut, std::int64_t seq_len);

double microbatch_runtime(const RuntimeLut& lut, const MicroBatch& mb);

struct RankAssignment {
    int ranks = 0;
    std::vector<std::vector<std::uint64_t>> rank_microbatches;  // micro-batch ids per rank
    std::vector<double> rank_runtime_us;                        // sum of member estimates

    double makespan_us() const;
    bool operator==(const RankAssignment&) const = default;
};

// Longest-processing-time greedy: micro-batches in descending estimated
// runtime (ties by ascending id), each placed on the least-loaded rank
// (ties by lowest rank index).
RankAssignment balance_lpt(std::span<const MicroBatch> microbatches,
                           int ranks,
                           const RuntimeLut& lut);

// Same greedy over explicit per-micro-batch runtimes. `loads` lets callers
// balance by a proxy metric (e.g. token counts) while the returned
// rank_runtime_us still reports LUT-estimated time.
RankAssignment balance_lpt_by(std::span<const MicroBatch> microbatches,
                              int ranks,
                              std::span<const double> sort_keys,
                              std::span<const double> runtimes);

// Exact minimum makespan by branch-and-bound over all assignments.
// Rejects instances with more than 12 micro-batches or more than 4 ranks.
double balance_oracle(std::span<const MicroBatch> microbatches,
                      int ranks,
                      const RuntimeLut& lut);

// Plans the head batch of the queue off-thread. The result is identical to
// balance_lpt on that batch; inputs are copied so concurrent planner calls
// share no state. Callers must resolve the future no later than the start
// of that batch's simulation.
std::future<RankAssignment> plan_next_batch(std::vector<MicroBatch> batch,
                                            int ranks,
                                            RuntimeLut lut);

// Runtime sample surface: CSV with the exact header `seq_len,runtime_us`.
std::vector<std::pair<std::int64_t, double>> read_samples_csv(std::istream& is);
void write_lut_csv(std::ostream& os, const RuntimeLut& lut);

}  // namespace vlsim
