// Copyright (c) 2026 vlsim authors
// SPDX-License-Identifier: Apache-2.0

#include "vlsim/sim.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <unordered_map>

#include "nlohmann/json.hpp"

namespace vlsim {

void SimConfig::validate() const {
    cluster.validate();
    if (backward_multiplier < 0) {
        throw ValidationError("SimConfig: backward_multiplier must be >= 0");
    }
    if (const auto* cm = std::get_if<TimeSourceCostModel>(&source)) {
        cm->model.validate();
        cm->vae.validate();
        cm->patch.validate();
        if (cm->achieved_efficiency <= 0 || cm->achieved_efficiency > 1) {
            throw ValidationError("SimConfig: achieved_efficiency must lie in (0, 1]");
        }
    } else {
        std::get<TimeSourceLut>(source).lut.validate();
        if (fsdp) {
            throw ValidationError(
                "SimConfig: fsdp requires the cost_model time source; a measured "
                "LUT already includes communication");
        }
    }
    if (mlac) {
        mlac->graph.validate();
        mlac->bandwidths.validate();
        if (mlac->plan.decisions.size() != mlac->graph.nodes.size()) {
            throw ValidationError("SimConfig: MLAC plan does not match its graph");
        }
    }
}

namespace {

struct MicroBatchCost {
    double forward_us = 0.0;
    double forward_flops = 0.0;   // 0 in LUT mode
    double a2a_bytes_per_layer = 0.0;  // per rank, all four collectives
};

class Engine {
public:
    Engine(const RankAssignment& assignment,
           std::span<const MicroBatch> batch,
           std::span<const WorkItem> items,
           const SimConfig& cfg)
        : cfg_(cfg), assignment_(assignment) {
        cfg_.validate();
        ranks_ = cfg_.cluster.ranks;
        if (assignment.ranks > ranks_) {
            throw ValidationError("simulate_step: assignment uses more ranks than the cluster");
        }
        for (const auto& mb : batch) {
            if (!by_id_.emplace(mb.id, &mb).second) {
                throw ValidationError("simulate_step: duplicate micro-batch id " +
                                      std::to_string(mb.id));
            }
        }
        for (const auto& it : items) item_by_id_.emplace(it.id, &it);
        clock_.assign(static_cast<std::size_t>(ranks_), 0.0);
        stats_.assign(static_cast<std::size_t>(ranks_), RankStats{});
    }

    std::pair<SimReport, std::vector<TraceEvent>> run() {
        const auto* cm = std::get_if<TimeSourceCostModel>(&cfg_.source);
        const int group_size = cm ? cfg_.cluster.cp_degree : 1;
        const int layers = cm ? cm->model.layers : 0;

        for (int g = 0; g * group_size < ranks_; ++g) {
            run_group(g * group_size, group_size, layers, cm != nullptr);
        }

        double end = 0.0;
        for (double c : clock_) end = std::max(end, c);
        if (cfg_.fsdp) {
            // optimizer-step gradient reduce-scatter: world-synchronized and
            // never overlapped
            double dur = fsdp_collective_us() ;
            for (int r = 0; r < ranks_; ++r) {
                emit(r, "reduce_scatter", "fsdp", 1, end, dur);
                stats_[static_cast<std::size_t>(r)].comm_us += dur;
                clock_[static_cast<std::size_t>(r)] = end + dur;
            }
            end += dur;
        }
        return finalize(end);
    }

private:
    const MicroBatch& microbatch(std::uint64_t id) const {
        auto it = by_id_.find(id);
        if (it == by_id_.end()) {
            throw ValidationError("simulate_step: unknown micro-batch id " + std::to_string(id));
        }
        return *it->second;
    }

    const WorkItem& work_item(std::uint64_t id) const {
        auto it = item_by_id_.find(id);
        if (it == item_by_id_.end()) {
            throw ValidationError("simulate_step: micro-batch references unknown item " +
                                  std::to_string(id));
        }
        return *it->second;
    }

    MicroBatchCost cost_of(const MicroBatch& mb) const {
        MicroBatchCost cost;
        if (const auto* cm = std::get_if<TimeSourceCostModel>(&cfg_.source)) {
            for (std::uint64_t item_id : mb.items) {
                const WorkItem& item = work_item(item_id);
                // validates all divisibility preconditions for this item
                std::int64_t tokens = seq_len(item.media, cm->vae, cm->patch);
                LatentShape latent = latent_shape(item.media, cm->vae);
                LatentDims dims{ceil_div(latent.frames, cm->patch.p_t),
                                latent.height / cm->patch.p_h, latent.width / cm->patch.p_w};
                cost.forward_flops += model_forward_flops(dims, cm->model);
                if (cfg_.cluster.cp_degree > 1) {
                    cost.a2a_bytes_per_layer += ulysses_comm(tokens, cm->model,
                                                             cfg_.cluster.cp_degree,
                                                             cfg_.cluster.element_bytes);
                }
            }
            cost.forward_us =
                cost.forward_flops /
                (cfg_.cluster.peak_flops * cm->achieved_efficiency) * 1e6;
        } else {
            const auto& ts = std::get<TimeSourceLut>(cfg_.source);
            double est = estimate(ts.lut, mb.total_tokens);
            cost.forward_us =
                ts.includes_backward ? est / (1.0 + cfg_.backward_multiplier) : est;
        }
        return cost;
    }

    double fsdp_collective_us() const {
        const auto& cm = std::get<TimeSourceCostModel>(cfg_.source);
        double layer_param_bytes = static_cast<double>(param_count(cm.model)) /
                                   cm.model.layers * cfg_.cluster.element_bytes;
        double per_layer = cfg_.cluster.link_latency_s * 1e6 +
                           layer_param_bytes / cfg_.cluster.link_bandwidth * 1e6;
        return cm.model.layers * per_layer;
    }

    // All-to-all duration for one phase of one round: four collectives per
    // layer, beta term driven by the largest member volume.
    double a2a_phase_us(int layers, double max_bytes_per_layer) const {
        double alpha_us = cfg_.cluster.link_latency_s * 1e6;
        return 4.0 * layers * alpha_us +
               layers * max_bytes_per_layer / cfg_.cluster.link_bandwidth * 1e6;
    }

    void group_alltoall(int first_rank, int group_size, double dur, const char* name) {
        if (dur <= 0.0) return;
        double start = 0.0;
        for (int r = first_rank; r < first_rank + group_size; ++r) {
            start = std::max(start, clock_[static_cast<std::size_t>(r)]);
        }
        for (int r = first_rank; r < first_rank + group_size; ++r) {
            emit(r, name, "alltoall", 1, start, dur);
            stats_[static_cast<std::size_t>(r)].comm_us += dur;
            clock_[static_cast<std::size_t>(r)] = start + dur;
        }
    }

    void compute_phase(int rank, const char* name, double dur) {
        if (dur <= 0.0) return;
        emit(rank, name, "compute", 0, clock_[static_cast<std::size_t>(rank)], dur);
        stats_[static_cast<std::size_t>(rank)].compute_us += dur;
        clock_[static_cast<std::size_t>(rank)] += dur;
    }

    void fsdp_phase(int rank, const char* name) {
        if (!cfg_.fsdp || cfg_.overlap_fsdp) return;
        double dur = fsdp_collective_us();
        emit(rank, name, "fsdp", 1, clock_[static_cast<std::size_t>(rank)], dur);
        stats_[static_cast<std::size_t>(rank)].comm_us += dur;
        clock_[static_cast<std::size_t>(rank)] += dur;
    }

    void mlac_phase(int rank, double backward_us) {
        if (!cfg_.mlac) return;
        const auto& m = *cfg_.mlac;
        double exposed = backward_overhead(m.plan, m.graph, m.bandwidths, backward_us);
        if (exposed <= 0.0) return;
        double raw = backward_overhead(m.plan, m.graph, m.bandwidths, 0.0);
        double recompute_raw = 0.0;
        for (std::size_t i = 0; i < m.plan.decisions.size(); ++i) {
            if (m.plan.decisions[i] == Tier::Recompute) {
                recompute_raw += m.graph.nodes[i].flops / m.bandwidths.compute * 1e6;
            }
        }
        double rec_share = raw > 0.0 ? recompute_raw / raw : 0.0;
        double rec_us = exposed * rec_share;
        double xfer_us = exposed - rec_us;
        auto& st = stats_[static_cast<std::size_t>(rank)];
        if (xfer_us > 0.0) {
            emit(rank, "activation_fetch", "mlac_transfer", 2,
                 clock_[static_cast<std::size_t>(rank)], xfer_us);
            clock_[static_cast<std::size_t>(rank)] += xfer_us;
        }
        if (rec_us > 0.0) {
            emit(rank, "recompute", "recompute", 0, clock_[static_cast<std::size_t>(rank)],
                 rec_us);
            clock_[static_cast<std::size_t>(rank)] += rec_us;
        }
        st.mlac_exposed_us += exposed;
    }

    void run_group(int first_rank, int group_size, int layers, bool cost_model) {
        std::size_t rounds = 0;
        std::vector<std::vector<MicroBatchCost>> costs(static_cast<std::size_t>(group_size));
        for (int i = 0; i < group_size; ++i) {
            int rank = first_rank + i;
            if (rank < assignment_.ranks) {
                for (std::uint64_t id :
                     assignment_.rank_microbatches[static_cast<std::size_t>(rank)]) {
                    costs[static_cast<std::size_t>(i)].push_back(cost_of(microbatch(id)));
                }
            }
            rounds = std::max(rounds, costs[static_cast<std::size_t>(i)].size());
        }
        const bool comm = cost_model && group_size > 1;

        for (std::size_t k = 0; k < rounds; ++k) {
            double max_bytes = 0.0;
            for (int i = 0; i < group_size; ++i) {
                const auto& list = costs[static_cast<std::size_t>(i)];
                if (k < list.size()) max_bytes = std::max(max_bytes, list[k].a2a_bytes_per_layer);
            }
            if (comm) group_alltoall(first_rank, group_size, a2a_phase_us(layers, max_bytes),
                                     "ulysses_fwd");
            for (int i = 0; i < group_size; ++i) {
                const auto& list = costs[static_cast<std::size_t>(i)];
                if (k >= list.size()) continue;
                fsdp_phase(first_rank + i, "allgather_fwd");
                compute_phase(first_rank + i, "forward", list[k].forward_us);
            }
            if (comm) group_alltoall(first_rank, group_size, a2a_phase_us(layers, max_bytes),
                                     "ulysses_bwd");
            for (int i = 0; i < group_size; ++i) {
                const auto& list = costs[static_cast<std::size_t>(i)];
                if (k >= list.size()) continue;
                double backward_us = list[k].forward_us * cfg_.backward_multiplier;
                fsdp_phase(first_rank + i, "allgather_bwd");
                compute_phase(first_rank + i, "backward", backward_us);
                mlac_phase(first_rank + i, backward_us);
                achieved_flops_ += list[k].forward_flops * (1.0 + cfg_.backward_multiplier);
            }
        }
    }

    void emit(int rank, const char* name, const char* cat, int tid, double start, double dur) {
        events_.push_back({name, cat, rank, tid, start, dur});
    }

    std::pair<SimReport, std::vector<TraceEvent>> finalize(double makespan) {
        SimReport report;
        report.makespan_us = makespan;
        report.per_rank = stats_;
        double busy_total = 0.0;
        for (auto& st : report.per_rank) {
            st.busy_us = st.compute_us + st.comm_us + st.mlac_exposed_us;
            st.idle_us = makespan - st.busy_us;
            busy_total += st.busy_us;
        }
        double mean_busy = busy_total / static_cast<double>(ranks_);
        report.imbalance = mean_busy > 0.0 ? makespan / mean_busy : 1.0;
        report.achieved_flops = achieved_flops_;
        if (std::holds_alternative<TimeSourceCostModel>(cfg_.source) && makespan > 0.0) {
            report.mfu = mfu(achieved_flops_, makespan * 1e-6, ranks_,
                             cfg_.cluster.peak_flops);
        }
        for (const auto& ev : events_) report.event_counts[ev.cat] += 1;
        return {std::move(report), std::move(events_)};
    }

    SimConfig cfg_;
    const RankAssignment& assignment_;
    int ranks_ = 0;
    std::unordered_map<std::uint64_t, const MicroBatch*> by_id_;
    std::unordered_map<std::uint64_t, const WorkItem*> item_by_id_;
    std::vector<double> clock_;
    std::vector<RankStats> stats_;
    std::vector<TraceEvent> events_;
    double achieved_flops_ = 0.0;
};

}  // namespace

std::pair<SimReport, std::vector<TraceEvent>> simulate_step(const RankAssignment& assignment,
                                                            std::span<const MicroBatch> batch,
                                                            std::span<const WorkItem> items,
                                                            const SimConfig& cfg) {
    Engine engine(assignment, batch, items, cfg);
    return engine.run();
}

std::pair<SimReport, std::vector<TraceEvent>> simulate_run(
    const std::vector<std::vector<MicroBatch>>& batches,
    std::span<const WorkItem> items,
    const SimConfig& cfg,
    const Balancer& balancer,
    bool async_planning) {
    if (batches.empty()) throw ValidationError("simulate_run: at least one batch required");

    SimReport total;
    total.per_rank.assign(static_cast<std::size_t>(cfg.cluster.ranks), RankStats{});
    std::vector<TraceEvent> trace;
    double offset = 0.0;

    RankAssignment current = balancer(batches.front());
    std::future<RankAssignment> next;
    for (std::size_t b = 0; b < batches.size(); ++b) {
        if (async_planning && b + 1 < batches.size()) {
            next = std::async(std::launch::async, balancer, batches[b + 1]);
        }
        auto [report, events] = simulate_step(current, batches[b], items, cfg);
        for (auto& ev : events) {
            ev.start_us += offset;
            trace.push_back(std::move(ev));
        }
        offset += report.makespan_us;
        total.makespan_us += report.makespan_us;
        total.achieved_flops += report.achieved_flops;
        for (std::size_t r = 0; r < total.per_rank.size(); ++r) {
            auto& dst = total.per_rank[r];
            const auto& src = report.per_rank[r];
            dst.busy_us += src.busy_us;
            dst.idle_us += src.idle_us;
            dst.comm_us += src.comm_us;
            dst.compute_us += src.compute_us;
            dst.mlac_exposed_us += src.mlac_exposed_us;
        }
        for (const auto& [cat, n] : report.event_counts) total.event_counts[cat] += n;
        if (b + 1 < batches.size()) {
            current = async_planning ? next.get() : balancer(batches[b + 1]);
        }
    }

    double busy_total = 0.0;
    for (const auto& st : total.per_rank) busy_total += st.busy_us;
    double mean_busy = busy_total / static_cast<double>(cfg.cluster.ranks);
    total.imbalance = mean_busy > 0.0 ? total.makespan_us / mean_busy : 1.0;
    if (std::holds_alternative<TimeSourceCostModel>(cfg.source) && total.makespan_us > 0.0) {
        total.mfu = mfu(total.achieved_flops, total.makespan_us * 1e-6, cfg.cluster.ranks,
                        cfg.cluster.peak_flops);
    }
    return {std::move(total), std::move(trace)};
}

namespace {

std::int64_t as_us(double v) {
    return std::llround(v);
}

double round6(double v) {
    return std::round(v * 1e6) / 1e6;
}

}  // namespace

std::string report_to_json(const SimReport& report) {
    nlohmann::ordered_json j;
    j["makespan_us"] = as_us(report.makespan_us);
    j["per_rank"] = nlohmann::ordered_json::array();
    for (std::size_t r = 0; r < report.per_rank.size(); ++r) {
        const auto& st = report.per_rank[r];
        nlohmann::ordered_json rank;
        rank["rank"] = r;
        rank["busy_us"] = as_us(st.busy_us);
        rank["idle_us"] = as_us(report.makespan_us) - as_us(st.busy_us);
        rank["comm_us"] = as_us(st.comm_us);
        rank["compute_us"] = as_us(st.compute_us);
        rank["mlac_exposed_us"] = as_us(st.mlac_exposed_us);
        j["per_rank"].push_back(std::move(rank));
    }
    j["imbalance"] = round6(report.imbalance);
    j["mfu"] = round6(report.mfu);
    j["event_counts"] = nlohmann::ordered_json::object();
    for (const auto& [cat, n] : report.event_counts) j["event_counts"][cat] = n;
    return j.dump(2) + "\n";
}

std::string trace_to_json(std::span<const TraceEvent> events) {
    nlohmann::ordered_json j;
    j["traceEvents"] = nlohmann::ordered_json::array();
    for (const auto& ev : events) {
        nlohmann::ordered_json e;
        e["name"] = ev.name;
        e["cat"] = ev.cat;
        e["ph"] = "X";
        e["ts"] = as_us(ev.start_us);
        e["dur"] = as_us(ev.dur_us);
        e["pid"] = ev.rank;
        e["tid"] = ev.tid;
        j["traceEvents"].push_back(std::move(e));
    }
    return j.dump(2) + "\n";
}

}  // namespace vlsim
