// Copyright (c) 2026 vlsim authors
// SPDX-License-Identifier: Apache-2.0

#include "vlsim/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "nlohmann/json.hpp"

namespace vlsim {

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeError("cannot write " + path.string());
    out << content;
}

std::string microbatches_json(const std::vector<MicroBatch>& mbs) {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& mb : mbs) {
        nlohmann::ordered_json e;
        e["id"] = mb.id;
        e["items"] = mb.items;
        e["total_tokens"] = mb.total_tokens;
        e["capacity"] = mb.capacity;
        j.push_back(std::move(e));
    }
    return j.dump(2) + "\n";
}

std::string microbatches_csv(const std::vector<MicroBatch>& mbs) {
    std::ostringstream os;
    os << "id,total_tokens,capacity,items\n";
    for (const auto& mb : mbs) {
        os << mb.id << ',' << mb.total_tokens << ',' << mb.capacity << ',';
        for (std::size_t i = 0; i < mb.items.size(); ++i) {
            if (i) os << ';';
            os << mb.items[i];
        }
        os << "\n";
    }
    return os.str();
}

std::string assignment_json(const RankAssignment& a) {
    nlohmann::ordered_json j;
    j["ranks"] = a.ranks;
    j["makespan_us"] = std::llround(a.makespan_us());
    j["per_rank"] = nlohmann::ordered_json::array();
    for (int r = 0; r < a.ranks; ++r) {
        nlohmann::ordered_json e;
        e["rank"] = r;
        e["microbatches"] = a.rank_microbatches[static_cast<std::size_t>(r)];
        e["runtime_us"] = std::llround(a.rank_runtime_us[static_cast<std::size_t>(r)]);
        j["per_rank"].push_back(std::move(e));
    }
    return j.dump(2) + "\n";
}

std::string assignment_csv(const RankAssignment& a) {
    std::ostringstream os;
    os << "rank,runtime_us,microbatches\n";
    for (int r = 0; r < a.ranks; ++r) {
        os << r << ',' << std::llround(a.rank_runtime_us[static_cast<std::size_t>(r)]) << ',';
        const auto& mbs = a.rank_microbatches[static_cast<std::size_t>(r)];
        for (std::size_t i = 0; i < mbs.size(); ++i) {
            if (i) os << ';';
            os << mbs[i];
        }
        os << "\n";
    }
    return os.str();
}

std::string compare_json(const std::vector<CompareRow>& rows) {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& row : rows) {
        nlohmann::ordered_json e;
        e["strategy"] = row.strategy;
        e["makespan_us"] = std::llround(row.makespan_us);
        e["imbalance"] = std::round(row.imbalance * 1e6) / 1e6;
        j.push_back(std::move(e));
    }
    return j.dump(2) + "\n";
}

std::string compare_csv(const std::vector<CompareRow>& rows) {
    std::ostringstream os;
    os << "strategy,makespan_us,imbalance\n";
    for (const auto& row : rows) {
        os << row.strategy << ',' << std::llround(row.makespan_us) << ','
           << format_ratio6(row.imbalance) << "\n";
    }
    return os.str();
}

}  // namespace

PipelineResult build_pipeline(const RunConfig& cfg) {
    PipelineResult result;
    result.items = gen_workload(cfg.recipes, cfg.vae, cfg.patch, cfg.item_count, cfg.seed,
                                cfg.gen);

    if (cfg.pack_scope == "per-stage") {
        std::map<int, std::vector<WorkItem>> by_stage;
        for (const auto& it : result.items) by_stage[it.stage].push_back(it);
        for (auto& [stage, items] : by_stage) {
            auto bins = pack_ffd(items, cfg.capacity_tokens);
            for (auto& bin : bins) {
                bin.id = result.microbatches.size();
                result.microbatches.push_back(std::move(bin));
            }
        }
    } else {
        result.microbatches = pack_ffd(result.items, cfg.capacity_tokens);
    }

    std::int64_t chunk = cfg.microbatches_per_batch;
    if (chunk <= 0) chunk = static_cast<std::int64_t>(result.microbatches.size());
    for (std::size_t i = 0; i < result.microbatches.size();
         i += static_cast<std::size_t>(chunk)) {
        std::size_t end = std::min(result.microbatches.size(),
                                   i + static_cast<std::size_t>(chunk));
        result.batches.emplace_back(result.microbatches.begin() + static_cast<std::ptrdiff_t>(i),
                                    result.microbatches.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return result;
}

std::vector<double> microbatch_runtimes(const RunConfig& cfg,
                                        const std::vector<MicroBatch>& microbatches,
                                        const std::vector<WorkItem>& items) {
    std::vector<double> runtimes;
    runtimes.reserve(microbatches.size());
    if (const auto* lut_source = std::get_if<TimeSourceLut>(&cfg.sim.source)) {
        for (const auto& mb : microbatches) {
            runtimes.push_back(microbatch_runtime(lut_source->lut, mb));
        }
        return runtimes;
    }
    const auto& cm = std::get<TimeSourceCostModel>(cfg.sim.source);
    std::map<std::uint64_t, const WorkItem*> by_id;
    for (const auto& it : items) by_id[it.id] = &it;
    for (const auto& mb : microbatches) {
        double flops = 0.0;
        for (std::uint64_t id : mb.items) {
            auto it = by_id.find(id);
            if (it == by_id.end()) {
                throw ValidationError("balance: micro-batch references unknown item " +
                                      std::to_string(id));
            }
            LatentShape latent = latent_shape(it->second->media, cm.vae);
            LatentDims dims{ceil_div(latent.frames, cm.patch.p_t), latent.height / cm.patch.p_h,
                            latent.width / cm.patch.p_w};
            flops += model_forward_flops(dims, cm.model);
        }
        runtimes.push_back(flops / (cfg.sim.cluster.peak_flops * cm.achieved_efficiency) * 1e6);
    }
    return runtimes;
}

RankAssignment balance_batch(const RunConfig& cfg,
                             const std::vector<MicroBatch>& batch,
                             const std::vector<WorkItem>& items) {
    std::vector<double> runtimes = microbatch_runtimes(cfg, batch, items);
    return balance_lpt_by(batch, cfg.sim.cluster.ranks, runtimes, runtimes);
}

std::vector<CompareRow> compare_strategies(const std::vector<MicroBatch>& microbatches,
                                           int ranks,
                                           const RuntimeLut& lut) {
    if (microbatches.empty()) throw ValidationError("compare: at least one micro-batch");
    std::vector<double> runtime(microbatches.size());
    std::vector<double> tokens(microbatches.size());
    for (std::size_t i = 0; i < microbatches.size(); ++i) {
        runtime[i] = microbatch_runtime(lut, microbatches[i]);
        tokens[i] = static_cast<double>(microbatches[i].total_tokens);
    }

    std::vector<CompareRow> rows;
    auto evaluate = [&](const std::string& name, const RankAssignment& a) {
        double makespan = a.makespan_us();
        double total = 0.0;
        for (double t : a.rank_runtime_us) total += t;
        double mean = total / static_cast<double>(a.ranks);
        rows.push_back({name, makespan, mean > 0.0 ? makespan / mean : 1.0});
    };

    // round-robin by arrival order
    RankAssignment rr;
    rr.ranks = ranks;
    rr.rank_microbatches.resize(static_cast<std::size_t>(ranks));
    rr.rank_runtime_us.assign(static_cast<std::size_t>(ranks), 0.0);
    for (std::size_t i = 0; i < microbatches.size(); ++i) {
        std::size_t r = i % static_cast<std::size_t>(ranks);
        rr.rank_microbatches[r].push_back(microbatches[i].id);
        rr.rank_runtime_us[r] += runtime[i];
    }
    evaluate("round_robin", rr);
    // greedy on the seqlen proxy; loads accumulate in tokens, makespan is
    // still measured in LUT runtime
    evaluate("seqlen_greedy", balance_lpt_by(microbatches, ranks, tokens, runtime));
    evaluate("runtime_greedy", balance_lpt_by(microbatches, ranks, runtime, runtime));
    return rows;
}

int cmd_lut_fit(const std::string& samples_path, const std::string& out_dir, std::ostream& log) {
    std::ifstream in(samples_path);
    if (!in) throw ValidationError("lut fit: cannot open " + samples_path);
    auto samples = read_samples_csv(in);
    RuntimeLut lut = fit_lut(samples);

    // largest correction PAVA applied to a per-seqlen mean
    std::map<std::int64_t, std::pair<double, double>> grouped;
    for (const auto& [s, r] : samples) {
        grouped[s].first += r;
        grouped[s].second += 1.0;
    }
    double max_adjust = 0.0;
    std::size_t i = 0;
    for (const auto& [s, acc] : grouped) {
        max_adjust = std::max(max_adjust,
                              std::abs(lut.points[i++].second - acc.first / acc.second));
    }

    std::ostringstream os;
    write_lut_csv(os, lut);
    write_file(fs::path(out_dir) / "lut.csv", os.str());
    log << "breakpoints: " << lut.points.size() << "\n";
    log << "max pooling adjustment: " << format_double(max_adjust) << "\n";
    log << "wrote " << (fs::path(out_dir) / "lut.csv").string() << "\n";
    return 0;
}

int cmd_workload_gen(const RunConfig& cfg, const std::string& out_dir, std::ostream& log) {
    auto items = gen_workload(cfg.recipes, cfg.vae, cfg.patch, cfg.item_count, cfg.seed, cfg.gen);
    std::ostringstream os;
    write_workload_csv(os, items);
    write_file(fs::path(out_dir) / "workload.csv", os.str());
    log << "items: " << items.size() << "\n";
    log << "wrote " << (fs::path(out_dir) / "workload.csv").string() << "\n";
    return 0;
}

int cmd_pack(const RunConfig& cfg, const std::string& out_dir, const std::string& format,
             std::ostream& log) {
    PipelineResult p = build_pipeline(cfg);
    if (format == "csv") {
        write_file(fs::path(out_dir) / "microbatches.csv", microbatches_csv(p.microbatches));
        log << "wrote " << (fs::path(out_dir) / "microbatches.csv").string() << "\n";
    } else {
        write_file(fs::path(out_dir) / "microbatches.json", microbatches_json(p.microbatches));
        log << "wrote " << (fs::path(out_dir) / "microbatches.json").string() << "\n";
    }
    log << "micro-batches: " << p.microbatches.size() << "\n";
    return 0;
}

int cmd_balance(const RunConfig& cfg, const std::string& out_dir, const std::string& format,
                std::ostream& log) {
    PipelineResult p = build_pipeline(cfg);
    RankAssignment assignment = balance_batch(cfg, p.batches.front(), p.items);
    if (format == "csv") {
        write_file(fs::path(out_dir) / "assignment.csv", assignment_csv(assignment));
        log << "wrote " << (fs::path(out_dir) / "assignment.csv").string() << "\n";
    } else {
        write_file(fs::path(out_dir) / "assignment.json", assignment_json(assignment));
        log << "wrote " << (fs::path(out_dir) / "assignment.json").string() << "\n";
    }
    log << "estimated makespan_us: " << std::llround(assignment.makespan_us()) << "\n";
    return 0;
}

int cmd_mlac_plan(const RunConfig& cfg, const std::string& out_dir, std::ostream& log) {
    if (!cfg.mlac_inputs || !cfg.sim.mlac) {
        throw ValidationError("mlac plan: config has no mlac section");
    }
    const auto& mlac = *cfg.sim.mlac;
    std::ostringstream os;
    write_plan_csv(os, mlac.graph, mlac.plan);
    write_file(fs::path(out_dir) / "mlac_plan.csv", os.str());
    log << "gpu_resident_bytes: " << mlac.plan.gpu_resident_bytes << "\n";
    log << "est_overhead_us: " << format_double(mlac.plan.est_overhead_us) << "\n";
    log << "wrote " << (fs::path(out_dir) / "mlac_plan.csv").string() << "\n";
    return 0;
}

int cmd_simulate(const RunConfig& cfg, const std::string& out_dir, bool write_trace,
                 std::ostream& log) {
    PipelineResult p = build_pipeline(cfg);
    Balancer balancer = [&](const std::vector<MicroBatch>& batch) {
        return balance_batch(cfg, batch, p.items);
    };
    auto [report, trace] =
        simulate_run(p.batches, p.items, cfg.sim, balancer, cfg.async_planning);
    write_file(fs::path(out_dir) / "report.json", report_to_json(report));
    log << "wrote " << (fs::path(out_dir) / "report.json").string() << "\n";
    if (write_trace) {
        write_file(fs::path(out_dir) / "trace.json", trace_to_json(trace));
        log << "wrote " << (fs::path(out_dir) / "trace.json").string() << "\n";
    }
    log << "makespan_us: " << std::llround(report.makespan_us) << "\n";
    log << "imbalance: " << format_ratio6(report.imbalance) << "\n";
    log << "mfu: " << format_ratio6(report.mfu) << "\n";
    return 0;
}

int cmd_compare(const RunConfig& cfg, const std::string& out_dir, const std::string& format,
                std::ostream& log) {
    const auto* lut_source = std::get_if<TimeSourceLut>(&cfg.sim.source);
    if (!lut_source) {
        throw ValidationError("compare: requires a lut time source (strategies are "
                              "evaluated against measured runtimes)");
    }
    PipelineResult p = build_pipeline(cfg);
    auto rows = compare_strategies(p.microbatches, cfg.sim.cluster.ranks, lut_source->lut);
    if (format == "csv") {
        write_file(fs::path(out_dir) / "compare.csv", compare_csv(rows));
        log << "wrote " << (fs::path(out_dir) / "compare.csv").string() << "\n";
    } else {
        write_file(fs::path(out_dir) / "compare.json", compare_json(rows));
        log << "wrote " << (fs::path(out_dir) / "compare.json").string() << "\n";
    }
    for (const auto& row : rows) {
        log << row.strategy << ": makespan_us=" << std::llround(row.makespan_us)
            << " imbalance=" << format_ratio6(row.imbalance) << "\n";
    }
    return 0;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"planner and simulator for variable-length multimodal training workloads"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::string format = "json";
    std::optional<std::uint64_t> seed_override;
    bool trace = false;

    auto add_common = [&](CLI::App* cmd, bool needs_config) {
        auto* opt = cmd->add_option("--config", config_path, "run configuration (JSON)");
        if (needs_config) opt->required();
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--seed", seed_override, "override the config seed");
        cmd->add_option("--format", format, "tabular output format")
            ->check(CLI::IsMember({"json", "csv"}));
    };

    auto* lut = app.add_subcommand("lut", "lookup-table operations");
    auto* lut_fit = lut->add_subcommand("fit", "fit a monotone LUT from runtime samples");
    std::string samples_path;
    lut_fit->add_option("samples", samples_path, "runtime samples CSV")->required();
    lut_fit->add_option("--out", out_dir, "output directory");

    auto* workload = app.add_subcommand("workload", "workload operations");
    auto* workload_gen = workload->add_subcommand("gen", "generate a stage-mixed workload");
    add_common(workload_gen, true);

    auto* pack = app.add_subcommand("pack", "pack a workload into micro-batches");
    add_common(pack, true);

    auto* balance = app.add_subcommand("balance", "balance micro-batches across ranks");
    add_common(balance, true);

    auto* mlac = app.add_subcommand("mlac", "activation checkpointing operations");
    auto* mlac_plan = mlac->add_subcommand("plan", "plan activation placement");
    add_common(mlac_plan, true);

    auto* simulate = app.add_subcommand("simulate", "simulate the training run");
    add_common(simulate, true);
    simulate->add_flag("--trace", trace, "write a Chrome trace file");

    auto* compare = app.add_subcommand("compare", "compare balancing strategies");
    add_common(compare, true);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return 0;
        }
        err << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (lut_fit->parsed()) return cmd_lut_fit(samples_path, out_dir, out);
        RunConfig cfg = load_run_config(config_path);
        if (seed_override) cfg.seed = *seed_override;
        if (workload_gen->parsed()) return cmd_workload_gen(cfg, out_dir, out);
        if (pack->parsed()) return cmd_pack(cfg, out_dir, format, out);
        if (balance->parsed()) return cmd_balance(cfg, out_dir, format, out);
        if (mlac_plan->parsed()) return cmd_mlac_plan(cfg, out_dir, out);
        if (simulate->parsed()) return cmd_simulate(cfg, out_dir, trace, out);
        if (compare->parsed()) return cmd_compare(cfg, out_dir, format, out);
        err << "error: no subcommand\n";
        return 1;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace vlsim
