// Copyright (c) 2026 vlsim authors
// SPDX-License-Identifier: Apache-2.0
//
// Run configuration: a single versioned JSON document driving the
// workload -> pack -> balance -> plan -> simulate chain. Unknown keys are
// rejected, and validation runs before any computation.

#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "vlsim/sim.hpp"

namespace vlsim {

struct MlacInputs {
    std::string graph_path;
    std::int64_t gpu_budget_bytes = 0;
    TierBandwidths bandwidths;
};

struct RunConfig {
    VaeConfig vae = VaeConfig::preset("seaweed48x");
    PatchConfig patch{1, 2, 2};
    std::vector<StageRecipe> recipes = default_stage_recipes();
    GenOptions gen;
    std::int64_t item_count = 32;
    std::uint64_t seed = 0;
    // large enough for the longest default item (a 10 s 720p video packs
    // to 219,600 tokens under the 48x preset with patch (1,2,2))
    std::int64_t capacity_tokens = 262144;
    std::string pack_scope = "global";  // or "per-stage"
    std::int64_t microbatches_per_batch = 0;  // 0: one batch holds everything
    bool async_planning = false;

    // sim.source / sim.cluster / sim.mlac are filled during load; mlac_inputs
    // keeps the raw planner inputs for the `mlac plan` subcommand.
    SimConfig sim;
    std::optional<MlacInputs> mlac_inputs;
    std::string lut_path;  // empty when time_source is cost_model

    void validate() const;
};

// Parses and fully validates the file. Relative paths inside the config
// resolve against the config file's directory. Throws ValidationError with
// the offending key on any unknown or ill-typed field.
RunConfig load_run_config(const std::string& path);

}  // namespace vlsim
