// Copyright (c) 2026 vlsim authors
// SPDX-License-Identifier: Apache-2.0

#include "vlsim/costmodel.hpp"

#include <algorithm>
#include <cmath>

namespace vlsim {

void ModelSpec::validate() const {
    if (layers < 1) throw ValidationError("ModelSpec: layers must be >= 1");
    if (hidden < 1) throw ValidationError("ModelSpec: hidden must be >= 1");
    if (heads < 1 || hidden % heads != 0) {
        throw ValidationError("ModelSpec: hidden must be divisible by heads");
    }
    if (ffn_mult <= 0) throw ValidationError("ModelSpec: ffn_mult must be > 0");
    if (shared_ffn_fraction < 0.0 || shared_ffn_fraction > 1.0) {
        throw ValidationError("ModelSpec: shared_ffn_fraction must lie in [0, 1]");
    }
    if (streams != 1 && streams != 2) {
        throw ValidationError("ModelSpec: streams must be 1 or 2");
    }
    if (attention_schedule.size() != static_cast<std::size_t>(layers)) {
        throw ValidationError("ModelSpec: attention_schedule must have one entry per layer");
    }
    for (const auto& l : attention_schedule) {
        if (l.wt < 1 || l.wh < 1 || l.ww < 1) {
            throw ValidationError("ModelSpec: window partition counts must be >= 1");
        }
    }
}

ModelSpec ModelSpec::preset(const std::string& name) {
    if (name == "seaweed7b") {
        ModelSpec m;
        m.layers = 32;
        m.hidden = 3584;
        m.heads = 28;
        m.ffn_mult = 4.0;
        m.shared_ffn_fraction = 2.0 / 3.0;
        m.streams = 2;
        m.attention_schedule = make_schedule("full", m.layers);
        return m;
    }
    throw ValidationError("unknown model preset: " + name);
}

std::vector<AttentionLayer> make_schedule(const std::string& kind,
                                          int layers,
                                          bool window_is_size) {
    if (layers < 1) throw ValidationError("make_schedule: layers must be >= 1");
    std::vector<AttentionLayer> schedule(static_cast<std::size_t>(layers));
    if (kind == "full") {
        return schedule;
    }
    if (kind == "space-full") {
        for (int i = 0; i < layers; ++i) {
            schedule[static_cast<std::size_t>(i)].kind =
                (i % 2 == 0) ? AttentionKind::Full : AttentionKind::SpaceOnly;
        }
        return schedule;
    }
    if (kind == "window") {
        for (int i = 0; i < layers; ++i) {
            auto& l = schedule[static_cast<std::size_t>(i)];
            l.kind = AttentionKind::Window;
            l.window_is_size = window_is_size;
            if (i % 2 == 0) {
                l.wt = 1, l.wh = 2, l.ww = 2;
            } else {
                l.wt = 4, l.wh = 1, l.ww = 1;
            }
        }
        return schedule;
    }
    throw ValidationError("make_schedule: unknown attention schedule '" + kind + "'");
}

void ClusterSpec::validate() const {
    if (ranks < 1) throw ValidationError("ClusterSpec: ranks must be >= 1");
    if (cp_degree < 1 || ranks % cp_degree != 0) {
        throw ValidationError("ClusterSpec: context-parallel degree must divide ranks");
    }
    if (peak_flops <= 0) throw ValidationError("ClusterSpec: peak_flops must be > 0");
    if (link_bandwidth <= 0) throw ValidationError("ClusterSpec: link_bandwidth must be > 0");
    if (link_latency_s < 0) throw ValidationError("ClusterSpec: link_latency must be >= 0");
    if (element_bytes < 1) throw ValidationError("ClusterSpec: element_bytes must be >= 1");
}

double attn_flops(const AttentionLayer& layer, const LatentDims& dims, const ModelSpec& model) {
    if (dims.t < 1 || dims.h < 1 || dims.w < 1) {
        throw ValidationError("attn_flops: latent dims must be >= 1");
    }
    const double hidden = static_cast<double>(model.hidden);
    const double s = static_cast<double>(dims.tokens());
    switch (layer.kind) {
        case AttentionKind::Full:
            return 4.0 * s * s * hidden;
        case AttentionKind::SpaceOnly: {
            double hw = static_cast<double>(dims.h * dims.w);
            return static_cast<double>(dims.t) * 4.0 * hw * hw * hidden;
        }
        case AttentionKind::Window: {
            if (dims.t % layer.wt != 0 || dims.h % layer.wh != 0 || dims.w % layer.ww != 0) {
                throw ValidationError("attn_flops: window parameters must divide dims (" +
                                      std::to_string(layer.wt) + "x" + std::to_string(layer.wh) +
                                      "x" + std::to_string(layer.ww) + ")");
            }
            double windows = layer.window_is_size
                                 ? static_cast<double>((dims.t / layer.wt) * (dims.h / layer.wh) *
                                                       (dims.w / layer.ww))
                                 : static_cast<double>(layer.wt) * layer.wh * layer.ww;
            return 4.0 * s * s * hidden / windows;
        }
    }
    return 0.0;
}

double layer_flops(const LatentDims& dims, const ModelSpec& model, const AttentionLayer& layer) {
    const double hidden = static_cast<double>(model.hidden);
    const double s = static_cast<double>(dims.tokens());
    double projections = 8.0 * s * hidden * hidden;
    double ffn = 4.0 * s * hidden * hidden * model.ffn_mult;
    return attn_flops(layer, dims, model) + projections + ffn;
}

double model_forward_flops(const LatentDims& dims, const ModelSpec& model) {
    model.validate();
    double total = 0.0;
    for (const auto& layer : model.attention_schedule) {
        total += layer_flops(dims, model, layer);
    }
    return total;
}

std::int64_t param_count(const ModelSpec& model) {
    model.validate();
    const std::int64_t h2 = model.hidden * model.hidden;
    const std::int64_t layers = model.layers;
    const std::int64_t shared_layers =
        std::llround(model.shared_ffn_fraction * static_cast<double>(layers));
    const std::int64_t ffn_params = std::llround(2.0 * static_cast<double>(h2) * model.ffn_mult);

    std::int64_t attention = layers * model.streams * 4 * h2;
    // unshared layers carry one FFN per stream; shared layers carry one FFN
    std::int64_t ffn_instances = (layers - shared_layers) * model.streams + shared_layers;
    return attention + ffn_instances * ffn_params;
}

double ulysses_comm(std::int64_t s, const ModelSpec& model, int cp_degree, int element_bytes) {
    model.validate();
    if (cp_degree < 1) throw ValidationError("ulysses_comm: cp degree must be >= 1");
    if (element_bytes < 1) throw ValidationError("ulysses_comm: element_bytes must be >= 1");
    if (cp_degree == 1) return 0.0;
    if (model.heads % cp_degree != 0) {
        throw ValidationError("ulysses_comm: heads (" + std::to_string(model.heads) +
                              ") not divisible by cp degree " + std::to_string(cp_degree));
    }
    if (s % cp_degree != 0) {
        throw ValidationError("ulysses_comm: seq_len (" + std::to_string(s) +
                              ") not divisible by cp degree " + std::to_string(cp_degree));
    }
    double shard = static_cast<double>(s / cp_degree) * static_cast<double>(model.hidden) *
                   static_cast<double>(element_bytes);
    double per_collective = shard * static_cast<double>(cp_degree - 1) /
                            static_cast<double>(cp_degree);
    return 4.0 * per_collective;
}

double mfu(double achieved_flops, double elapsed_seconds, int ranks, double peak_flops_per_rank) {
    if (elapsed_seconds <= 0) throw ValidationError("mfu: elapsed time must be > 0");
    if (peak_flops_per_rank <= 0) throw ValidationError("mfu: peak flops must be > 0");
    if (ranks < 1) throw ValidationError("mfu: ranks must be >= 1");
    double raw = achieved_flops /
                 (elapsed_seconds * static_cast<double>(ranks) * peak_flops_per_rank);
    return std::clamp(raw, 0.0, 1.0);
}

}  // namespace vlsim
