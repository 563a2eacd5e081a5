// Copyright (c) 2026 vlsim authors
// SPDX-License-Identifier: Apache-2.0
//
// Subcommand drivers behind the CLI: each chains the library stages and
// writes its outputs under a directory. All are idempotent — identical
// inputs rewrite identical bytes.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vlsim/config.hpp"

namespace vlsim {

struct PipelineResult {
    std::vector<WorkItem> items;
    std::vector<MicroBatch> microbatches;
    std::vector<std::vector<MicroBatch>> batches;
};

// gen_workload -> pack_ffd (global or per-stage scope) -> batch chunking.
PipelineResult build_pipeline(const RunConfig& cfg);

// Estimated runtime of each micro-batch under the configured time source.
std::vector<double> microbatch_runtimes(const RunConfig& cfg,
                                        const std::vector<MicroBatch>& microbatches,
                                        const std::vector<WorkItem>& items);

RankAssignment balance_batch(const RunConfig& cfg,
                             const std::vector<MicroBatch>& batch,
                             const std::vector<WorkItem>& items);

struct CompareRow {
    std::string strategy;
    double makespan_us = 0.0;
    double imbalance = 1.0;
};

// Balances the same packed micro-batches three ways: round-robin by
// arrival, greedy by sequence length, greedy by LUT runtime. Makespans are
// evaluated with LUT estimates, so a nonlinear table separates the last two.
std::vector<CompareRow> compare_strategies(const std::vector<MicroBatch>& microbatches,
                                           int ranks,
                                           const RuntimeLut& lut);

int cmd_lut_fit(const std::string& samples_path, const std::string& out_dir, std::ostream& log);
int cmd_workload_gen(const RunConfig& cfg, const std::string& out_dir, std::ostream& log);
int cmd_pack(const RunConfig& cfg, const std::string& out_dir, const std::string& format,
             std::ostream& log);
int cmd_balance(const RunConfig& cfg, const std::string& out_dir, const std::string& format,
                std::ostream& log);
int cmd_mlac_plan(const RunConfig& cfg, const std::string& out_dir, std::ostream& log);
int cmd_simulate(const RunConfig& cfg, const std::string& out_dir, bool write_trace,
                 std::ostream& log);
int cmd_compare(const RunConfig& cfg, const std::string& out_dir, const std::string& format,
                std::ostream& log);

// Full argv-level entry point (exit code 0 success, 1 validation error,
// 2 runtime error).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vlsim
