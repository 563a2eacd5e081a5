// Copyright (c) 2026 vlsim authors
// SPDX-License-Identifier: Apache-2.0
//
// FLOPs, parameter, and communication accounting for the hybrid-stream
// transformer. Convention used throughout: one multiply-accumulate counts
// as 2 flops.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vlsim/common.hpp"

namespace vlsim {

enum class AttentionKind { Full, SpaceOnly, Window };

// Window parameters default to partition counts per axis: (a, b, c) splits
// the token grid into a*b*c equal windows. With window_is_size they are
// window extents instead, and the partition count is grid/extent per axis.
struct AttentionLayer {
    AttentionKind kind = AttentionKind::Full;
    int wt = 1;
    int wh = 1;
    int ww = 1;
    bool window_is_size = false;
};

struct ModelSpec {
    int layers = 1;
    std::int64_t hidden = 1;
    int heads = 1;
    double ffn_mult = 4.0;
    // Fraction of layers, taken from the deepest, whose two stream FFNs
    // collapse into one FFN shared across the streams. No effect when
    // streams == 1.
    double shared_ffn_fraction = 0.0;
    // Token streams with separate weights (2 for the hybrid-stream
    // image/video + text architecture). Cost accounting covers only the
    // media stream; text tokens carry no modeled cost.
    int streams = 1;
    std::vector<AttentionLayer> attention_schedule;  // one entry per layer

    void validate() const;
    // "seaweed7b": 32 layers, hidden 3584, 28 heads, ffn_mult 4,
    // two streams sharing FFNs in the deepest two-thirds of layers.
    static ModelSpec preset(const std::string& name);
};

// Alternating per-layer attention schedules. kind is one of "full",
// "space-full" (even layers full, odd layers space-only), or "window"
// (even layers 1x2x2, odd layers 4x1x1). window_is_size switches the window
// parameters from partition counts to window extents.
std::vector<AttentionLayer> make_schedule(const std::string& kind,
                                          int layers,
                                          bool window_is_size = false);

// Token grid after patchify; t*h*w is the sequence length.
struct LatentDims {
    std::int64_t t = 1;
    std::int64_t h = 1;
    std::int64_t w = 1;

    std::int64_t tokens() const { return t * h * w; }
};

struct ClusterSpec {
    int ranks = 1;
    int cp_degree = 1;           // context-parallel group size, divides ranks
    double peak_flops = 1.0;     // per rank, flops/second
    double link_bandwidth = 1.0; // bytes/second
    double link_latency_s = 0.0; // alpha of the alpha-beta model
    int element_bytes = 2;

    void validate() const;
};

// Score + context matmuls only (projections are in layer_flops):
//   Full       -> 4 s^2 hidden
//   SpaceOnly  -> t * 4 (h*w)^2 hidden
//   Window     -> 4 s^2 hidden / (a*b*c), windows must divide the grid
double attn_flops(const AttentionLayer& layer, const LatentDims& dims, const ModelSpec& model);

// Forward flops for one layer: attention + QKV/output projections
// (8 s hidden^2) + FFN (4 s hidden^2 ffn_mult). Callers apply the
// backward multiplier.
double layer_flops(const LatentDims& dims, const ModelSpec& model, const AttentionLayer& layer);

double model_forward_flops(const LatentDims& dims, const ModelSpec& model);

// Attention (4 hidden^2) and FFN (2 hidden^2 ffn_mult) weights per stream
// and layer; the deepest shared_ffn_fraction of layers carry one FFN shared
// across streams instead of one per stream. Embedding and modulation
// parameters are excluded.
std::int64_t param_count(const ModelSpec& model);

// Per-layer all-to-all bytes exchanged per rank under Ulysses sharding:
// four collectives per attention (Q, K, V scatter, output gather), each
// moving (s/P) * hidden * element_bytes * (P-1)/P.
double ulysses_comm(std::int64_t s, const ModelSpec& model, int cp_degree, int element_bytes);

// achieved / (elapsed * ranks * peak), clamped into [0, 1].
double mfu(double achieved_flops, double elapsed_seconds, int ranks, double peak_flops_per_rank);

}  // namespace vlsim
