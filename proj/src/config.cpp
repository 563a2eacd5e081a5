// Copyright (c) 2026 vlsim authors
// SPDX-License-Identifier: Apache-2.0

#include "vlsim/config.hpp"

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>

#include "nlohmann/json.hpp"

namespace vlsim {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj,
                         std::initializer_list<const char*> allowed,
                         const std::string& ctx) {
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : obj.items()) {
        if (!ok.count(key)) {
            throw ValidationError("config: unknown key '" + key + "' in " + ctx);
        }
    }
}

const json* find(const json& obj, const char* key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

template <typename T>
T get_number(const json& v, const std::string& ctx) {
    if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ValidationError("config: " + ctx + " must be a number");
    } else {
        if (!v.is_number_integer() && !v.is_number_unsigned()) {
            throw ValidationError("config: " + ctx + " must be an integer");
        }
    }
    return v.get<T>();
}

std::string get_string(const json& v, const std::string& ctx) {
    if (!v.is_string()) throw ValidationError("config: " + ctx + " must be a string");
    return v.get<std::string>();
}

bool get_bool(const json& v, const std::string& ctx) {
    if (!v.is_boolean()) throw ValidationError("config: " + ctx + " must be a boolean");
    return v.get<bool>();
}

VaeConfig parse_vae(const json& v) {
    if (v.is_string()) return VaeConfig::preset(v.get<std::string>());
    if (!v.is_object()) throw ValidationError("config: vae must be a preset name or object");
    reject_unknown_keys(v, {"d_t", "d_h", "d_w", "c_latent"}, "vae");
    VaeConfig vae;
    if (const json* f = find(v, "d_t")) vae.d_t = get_number<int>(*f, "vae.d_t");
    if (const json* f = find(v, "d_h")) vae.d_h = get_number<int>(*f, "vae.d_h");
    if (const json* f = find(v, "d_w")) vae.d_w = get_number<int>(*f, "vae.d_w");
    if (const json* f = find(v, "c_latent")) vae.c_latent = get_number<int>(*f, "vae.c_latent");
    return vae;
}

PatchConfig parse_patch(const json& v) {
    if (!v.is_object()) throw ValidationError("config: patch must be an object");
    reject_unknown_keys(v, {"p_t", "p_h", "p_w"}, "patch");
    PatchConfig patch{1, 1, 1};
    if (const json* f = find(v, "p_t")) patch.p_t = get_number<int>(*f, "patch.p_t");
    if (const json* f = find(v, "p_h")) patch.p_h = get_number<int>(*f, "patch.p_h");
    if (const json* f = find(v, "p_w")) patch.p_w = get_number<int>(*f, "patch.p_w");
    return patch;
}

std::vector<std::pair<int, int>> parse_areas(const json& v, const std::string& ctx) {
    if (!v.is_array()) throw ValidationError("config: " + ctx + " must be an array of [w, h]");
    std::vector<std::pair<int, int>> out;
    for (const auto& e : v) {
        if (!e.is_array() || e.size() != 2) {
            throw ValidationError("config: " + ctx + " entries must be [w, h] pairs");
        }
        out.emplace_back(get_number<int>(e[0], ctx), get_number<int>(e[1], ctx));
    }
    return out;
}

std::vector<StageRecipe> parse_recipes(const json& v) {
    if (!v.is_array() || v.empty()) {
        throw ValidationError("config: recipes must be a non-empty array");
    }
    std::vector<StageRecipe> recipes;
    for (const auto& e : v) {
        if (!e.is_object()) throw ValidationError("config: recipe entries must be objects");
        reject_unknown_keys(e,
                            {"stage", "image_areas", "video_areas", "step_fraction",
                             "image_fraction", "i2v_fraction"},
                            "recipes[]");
        StageRecipe r;
        if (const json* f = find(e, "stage")) r.stage = get_number<int>(*f, "recipes[].stage");
        if (const json* f = find(e, "image_areas")) {
            r.image_areas = parse_areas(*f, "recipes[].image_areas");
        }
        if (const json* f = find(e, "video_areas")) {
            r.video_areas = parse_areas(*f, "recipes[].video_areas");
        }
        if (const json* f = find(e, "step_fraction")) {
            r.step_fraction = get_number<double>(*f, "recipes[].step_fraction");
        }
        if (const json* f = find(e, "image_fraction")) {
            r.image_fraction = get_number<double>(*f, "recipes[].image_fraction");
        }
        if (const json* f = find(e, "i2v_fraction")) {
            r.i2v_fraction = get_number<double>(*f, "recipes[].i2v_fraction");
        }
        recipes.push_back(std::move(r));
    }
    return recipes;
}

ModelSpec parse_model(const json& v, const std::string& attention, bool window_is_size) {
    ModelSpec model;
    if (v.is_string()) {
        model = ModelSpec::preset(v.get<std::string>());
    } else if (v.is_object()) {
        reject_unknown_keys(
            v, {"layers", "hidden", "heads", "ffn_mult", "shared_ffn_fraction", "streams"},
            "time_source.model");
        if (const json* f = find(v, "layers")) model.layers = get_number<int>(*f, "model.layers");
        if (const json* f = find(v, "hidden")) {
            model.hidden = get_number<std::int64_t>(*f, "model.hidden");
        }
        if (const json* f = find(v, "heads")) model.heads = get_number<int>(*f, "model.heads");
        if (const json* f = find(v, "ffn_mult")) {
            model.ffn_mult = get_number<double>(*f, "model.ffn_mult");
        }
        if (const json* f = find(v, "shared_ffn_fraction")) {
            model.shared_ffn_fraction = get_number<double>(*f, "model.shared_ffn_fraction");
        }
        if (const json* f = find(v, "streams")) {
            model.streams = get_number<int>(*f, "model.streams");
        }
    } else {
        throw ValidationError("config: time_source.model must be a preset name or object");
    }
    model.attention_schedule = make_schedule(attention, model.layers, window_is_size);
    model.validate();
    return model;
}

TierBandwidths parse_bandwidths(const json& v) {
    if (!v.is_object()) throw ValidationError("config: mlac.bandwidths must be an object");
    reject_unknown_keys(
        v, {"gpu_cpu_bytes_per_s", "cpu_disk_bytes_per_s", "compute_flops_per_s"},
        "mlac.bandwidths");
    TierBandwidths bw;
    if (const json* f = find(v, "gpu_cpu_bytes_per_s")) {
        bw.gpu_cpu = get_number<double>(*f, "mlac.bandwidths.gpu_cpu_bytes_per_s");
    }
    if (const json* f = find(v, "cpu_disk_bytes_per_s")) {
        bw.cpu_disk = get_number<double>(*f, "mlac.bandwidths.cpu_disk_bytes_per_s");
    }
    if (const json* f = find(v, "compute_flops_per_s")) {
        bw.compute = get_number<double>(*f, "mlac.bandwidths.compute_flops_per_s");
    }
    bw.validate();
    return bw;
}

std::string resolve_path(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    if (path.is_absolute()) return path.string();
    return (base / path).string();
}

}  // namespace

void RunConfig::validate() const {
    vae.validate();
    patch.validate();
    validate_recipes(recipes);
    if (item_count < 1) throw ValidationError("config: item_count must be >= 1");
    if (capacity_tokens < 1) throw ValidationError("config: capacity_tokens must be >= 1");
    if (pack_scope != "global" && pack_scope != "per-stage") {
        throw ValidationError("config: pack_scope must be 'global' or 'per-stage'");
    }
    if (microbatches_per_batch < 0) {
        throw ValidationError("config: microbatches_per_batch must be >= 0");
    }
    sim.validate();
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("config: cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("config: " + path + " is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw ValidationError("config: top level must be an object");

    reject_unknown_keys(j,
                        {"spec_version", "vae", "patch", "recipes", "item_count", "seed",
                         "capacity_tokens", "pack_scope", "ranks", "context_parallel", "cluster",
                         "time_source", "backward_multiplier", "fsdp", "overlap_fsdp", "mlac",
                         "microbatches_per_batch", "async_planning", "workload"},
                        "top level");
    const json* ver = find(j, "spec_version");
    if (!ver || !ver->is_number_integer() || ver->get<int>() != 1) {
        throw ValidationError("config: spec_version must be present and equal to 1");
    }

    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    RunConfig cfg;

    if (const json* f = find(j, "vae")) cfg.vae = parse_vae(*f);
    if (const json* f = find(j, "patch")) cfg.patch = parse_patch(*f);
    if (const json* f = find(j, "recipes")) cfg.recipes = parse_recipes(*f);
    if (const json* f = find(j, "item_count")) {
        cfg.item_count = get_number<std::int64_t>(*f, "item_count");
    }
    if (const json* f = find(j, "seed")) cfg.seed = get_number<std::uint64_t>(*f, "seed");
    if (const json* f = find(j, "capacity_tokens")) {
        cfg.capacity_tokens = get_number<std::int64_t>(*f, "capacity_tokens");
    }
    if (const json* f = find(j, "pack_scope")) cfg.pack_scope = get_string(*f, "pack_scope");
    if (const json* f = find(j, "microbatches_per_batch")) {
        cfg.microbatches_per_batch = get_number<std::int64_t>(*f, "microbatches_per_batch");
    }
    if (const json* f = find(j, "async_planning")) {
        cfg.async_planning = get_bool(*f, "async_planning");
    }

    if (const json* f = find(j, "workload")) {
        if (!f->is_object()) throw ValidationError("config: workload must be an object");
        reject_unknown_keys(*f, {"aspect_ratios", "video_durations_s", "fps"}, "workload");
        if (const json* a = find(*f, "aspect_ratios")) {
            if (!a->is_array() || a->empty()) {
                throw ValidationError("config: workload.aspect_ratios must be non-empty");
            }
            cfg.gen.aspect_ratios.clear();
            for (const auto& e : *a) {
                cfg.gen.aspect_ratios.push_back(get_number<double>(e, "workload.aspect_ratios"));
            }
        }
        if (const json* a = find(*f, "video_durations_s")) {
            if (!a->is_array() || a->empty()) {
                throw ValidationError("config: workload.video_durations_s must be non-empty");
            }
            cfg.gen.video_durations_s.clear();
            for (const auto& e : *a) {
                cfg.gen.video_durations_s.push_back(
                    get_number<double>(e, "workload.video_durations_s"));
            }
        }
        if (const json* a = find(*f, "fps")) cfg.gen.fps = get_number<double>(*a, "workload.fps");
    }

    ClusterSpec cluster;
    if (const json* f = find(j, "ranks")) cluster.ranks = get_number<int>(*f, "ranks");
    if (const json* f = find(j, "context_parallel")) {
        cluster.cp_degree = get_number<int>(*f, "context_parallel");
    }
    if (const json* f = find(j, "cluster")) {
        if (!f->is_object()) throw ValidationError("config: cluster must be an object");
        reject_unknown_keys(*f,
                            {"peak_flops_per_rank", "link_bandwidth_bytes_per_s",
                             "link_latency_s", "element_bytes"},
                            "cluster");
        if (const json* g = find(*f, "peak_flops_per_rank")) {
            cluster.peak_flops = get_number<double>(*g, "cluster.peak_flops_per_rank");
        }
        if (const json* g = find(*f, "link_bandwidth_bytes_per_s")) {
            cluster.link_bandwidth = get_number<double>(*g, "cluster.link_bandwidth_bytes_per_s");
        }
        if (const json* g = find(*f, "link_latency_s")) {
            cluster.link_latency_s = get_number<double>(*g, "cluster.link_latency_s");
        }
        if (const json* g = find(*f, "element_bytes")) {
            cluster.element_bytes = get_number<int>(*g, "cluster.element_bytes");
        }
    }
    cfg.sim.cluster = cluster;

    const json* ts = find(j, "time_source");
    if (!ts) throw ValidationError("config: time_source is required");
    if (!ts->is_object()) throw ValidationError("config: time_source must be an object");
    const json* kind_field = find(*ts, "kind");
    if (!kind_field) throw ValidationError("config: time_source.kind is required");
    std::string kind = get_string(*kind_field, "time_source.kind");
    if (kind == "lut") {
        reject_unknown_keys(*ts, {"kind", "path", "measures"}, "time_source");
        const json* p = find(*ts, "path");
        if (!p) throw ValidationError("config: time_source.path is required for kind 'lut'");
        TimeSourceLut source;
        cfg.lut_path = resolve_path(base, get_string(*p, "time_source.path"));
        std::ifstream samples(cfg.lut_path);
        if (!samples) {
            throw ValidationError("config: time_source.path does not exist: " + cfg.lut_path);
        }
        source.lut = fit_lut(read_samples_csv(samples));
        if (const json* m = find(*ts, "measures")) {
            std::string measures = get_string(*m, "time_source.measures");
            if (measures == "forward+backward") {
                source.includes_backward = true;
            } else if (measures != "forward") {
                throw ValidationError(
                    "config: time_source.measures must be 'forward' or 'forward+backward'");
            }
        }
        cfg.sim.source = std::move(source);
    } else if (kind == "cost_model") {
        reject_unknown_keys(
            *ts, {"kind", "model", "attention", "window_semantics", "achieved_efficiency"},
            "time_source");
        std::string attention = "full";
        bool window_is_size = false;
        if (const json* a = find(*ts, "attention")) {
            attention = get_string(*a, "time_source.attention");
        }
        if (const json* w = find(*ts, "window_semantics")) {
            std::string sem = get_string(*w, "time_source.window_semantics");
            if (sem == "sizes") {
                window_is_size = true;
            } else if (sem != "counts") {
                throw ValidationError(
                    "config: time_source.window_semantics must be 'counts' or 'sizes'");
            }
        }
        TimeSourceCostModel source;
        const json* m = find(*ts, "model");
        source.model = parse_model(m ? *m : json("seaweed7b"), attention, window_is_size);
        if (const json* e = find(*ts, "achieved_efficiency")) {
            source.achieved_efficiency = get_number<double>(*e, "achieved_efficiency");
        }
        source.vae = cfg.vae;
        source.patch = cfg.patch;
        cfg.sim.source = std::move(source);
    } else {
        throw ValidationError("config: time_source.kind must be 'lut' or 'cost_model'");
    }

    if (const json* f = find(j, "backward_multiplier")) {
        cfg.sim.backward_multiplier = get_number<double>(*f, "backward_multiplier");
    }
    if (const json* f = find(j, "fsdp")) cfg.sim.fsdp = get_bool(*f, "fsdp");
    if (const json* f = find(j, "overlap_fsdp")) {
        cfg.sim.overlap_fsdp = get_bool(*f, "overlap_fsdp");
    }

    if (const json* f = find(j, "mlac")) {
        if (!f->is_object()) throw ValidationError("config: mlac must be an object");
        reject_unknown_keys(*f, {"graph_path", "gpu_budget_bytes", "bandwidths"}, "mlac");
        MlacInputs inputs;
        const json* g = find(*f, "graph_path");
        if (!g) throw ValidationError("config: mlac.graph_path is required");
        inputs.graph_path = resolve_path(base, get_string(*g, "mlac.graph_path"));
        if (const json* b = find(*f, "gpu_budget_bytes")) {
            inputs.gpu_budget_bytes = get_number<std::int64_t>(*b, "mlac.gpu_budget_bytes");
        }
        if (const json* b = find(*f, "bandwidths")) inputs.bandwidths = parse_bandwidths(*b);
        std::ifstream graph_file(inputs.graph_path);
        if (!graph_file) {
            throw ValidationError("config: mlac.graph_path does not exist: " + inputs.graph_path);
        }
        ActGraph graph = read_actgraph_csv(graph_file);
        MlacSimConfig mlac_sim;
        mlac_sim.plan = plan_mlac(graph, inputs.gpu_budget_bytes, inputs.bandwidths);
        mlac_sim.graph = std::move(graph);
        mlac_sim.bandwidths = inputs.bandwidths;
        cfg.sim.mlac = std::move(mlac_sim);
        cfg.mlac_inputs = std::move(inputs);
    }

    cfg.validate();
    return cfg;
}

}  // namespace vlsim
