// Copyright (c) 2026 vlsim authors
// SPDX-License-Identifier: Apache-2.0

#include "vlsim/mlac.hpp"

#include <algorithm>
#include <istream>
#include <limits>
#include <ostream>

namespace vlsim {

std::string to_string(Tier t) {
    switch (t) {
        case Tier::KeepGpu: return "keep_gpu";
        case Tier::OffloadCpu: return "offload_cpu";
        case Tier::OffloadDisk: return "offload_disk";
        case Tier::Recompute: return "recompute";
    }
    return "keep_gpu";
}

void ActGraph::validate() const {
    for (const auto& n : nodes) {
        if (n.flops < 0 || n.bytes < 0) {
            throw ValidationError("ActGraph: node " + std::to_string(n.id) +
                                  " has negative flops or bytes");
        }
    }
}

void TierBandwidths::validate() const {
    if (gpu_cpu <= 0 || cpu_disk <= 0 || compute <= 0) {
        throw ValidationError("TierBandwidths: all rates must be > 0");
    }
}

namespace {

double transfer_us(Tier t, const ActNode& n, const TierBandwidths& bw) {
    double b = static_cast<double>(n.bytes);
    switch (t) {
        case Tier::OffloadCpu: return b / bw.gpu_cpu * 1e6;
        case Tier::OffloadDisk: return b / bw.gpu_cpu * 1e6 + b / bw.cpu_disk * 1e6;
        default: return 0.0;
    }
}

double recompute_us(const ActNode& n, const TierBandwidths& bw) {
    return n.flops / bw.compute * 1e6;
}

// Cheapest off-GPU tier for one node; module inputs cannot be recomputed.
// Cost ties resolve in decision-enum order (Cpu before Disk before Recompute).
std::pair<Tier, double> cheapest_offchip(const ActNode& n, const TierBandwidths& bw) {
    Tier best = Tier::OffloadCpu;
    double best_cost = transfer_us(Tier::OffloadCpu, n, bw);
    double disk = transfer_us(Tier::OffloadDisk, n, bw);
    if (disk < best_cost) {
        best = Tier::OffloadDisk;
        best_cost = disk;
    }
    if (!n.is_module_input) {
        double rec = recompute_us(n, bw);
        if (rec < best_cost) {
            best = Tier::Recompute;
            best_cost = rec;
        }
    }
    return {best, best_cost};
}

}  // namespace

MlacPlan plan_mlac(const ActGraph& graph, std::int64_t gpu_budget, const TierBandwidths& bw) {
    if (gpu_budget < 0) throw ValidationError("plan_mlac: budget must be >= 0");
    graph.validate();
    bw.validate();

    const std::size_t n = graph.nodes.size();
    std::vector<double> offchip_cost(n, 0.0);
    std::vector<Tier> offchip_tier(n, Tier::OffloadCpu);
    for (std::size_t i = 0; i < n; ++i) {
        auto [tier, cost] = cheapest_offchip(graph.nodes[i], bw);
        offchip_tier[i] = tier;
        offchip_cost[i] = cost;
    }

    // rank candidates: compute-bound first, then recompute time per byte
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < n; ++i) {
        if (gpu_budget > 0 && graph.nodes[i].bytes <= gpu_budget) candidates.push_back(i);
    }
    auto score = [&](std::size_t i) {
        const ActNode& node = graph.nodes[i];
        if (node.bytes == 0) return std::numeric_limits<double>::infinity();
        return recompute_us(node, bw) / static_cast<double>(node.bytes);
    };
    std::sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
        const ActNode& na = graph.nodes[a];
        const ActNode& nb = graph.nodes[b];
        if (na.compute_bound != nb.compute_bound) return na.compute_bound;
        double sa = score(a), sb = score(b);
        if (sa != sb) return sa > sb;
        return na.id < nb.id;
    });

    // fill the budget along the ranking; stop at the first overflow so the
    // kept set grows monotonically with the budget
    std::vector<std::size_t> prefix;
    double prefix_saving = 0.0;
    std::int64_t used = 0;
    for (std::size_t i : candidates) {
        if (used + graph.nodes[i].bytes > gpu_budget) break;
        prefix.push_back(i);
        used += graph.nodes[i].bytes;
        prefix_saving += offchip_cost[i];
    }
    // a single node can beat the whole prefix when the ranking wastes budget
    std::size_t best_single = n;
    double single_saving = -1.0;
    for (std::size_t i : candidates) {
        if (offchip_cost[i] > single_saving) {
            best_single = i;
            single_saving = offchip_cost[i];
        }
    }
    std::vector<bool> keep(n, false);
    if (best_single < n && single_saving > prefix_saving) {
        keep[best_single] = true;
    } else {
        for (std::size_t i : prefix) keep[i] = true;
    }

    MlacPlan plan;
    plan.decisions.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (keep[i]) {
            plan.decisions[i] = Tier::KeepGpu;
            plan.gpu_resident_bytes += graph.nodes[i].bytes;
        } else {
            plan.decisions[i] = offchip_tier[i];
            plan.est_overhead_us += offchip_cost[i];
        }
    }
    return plan;
}

double backward_overhead(const MlacPlan& plan,
                         const ActGraph& graph,
                         const TierBandwidths& bw,
                         double backward_compute_us) {
    if (plan.decisions.size() != graph.nodes.size()) {
        throw ValidationError("backward_overhead: plan does not match graph");
    }
    bw.validate();
    double transfers = 0.0;
    double recompute = 0.0;
    for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
        switch (plan.decisions[i]) {
            case Tier::KeepGpu: break;
            case Tier::OffloadCpu:
            case Tier::OffloadDisk:
                transfers += transfer_us(plan.decisions[i], graph.nodes[i], bw);
                break;
            case Tier::Recompute:
                recompute += recompute_us(graph.nodes[i], bw);
                break;
        }
    }
    double total = transfers + recompute;
    double credit = std::min(total, std::max(backward_compute_us, 0.0));
    return std::max(0.0, total - credit);
}

MlacOracleResult mlac_oracle(const ActGraph& graph,
                             std::int64_t gpu_budget,
                             const TierBandwidths& bw,
                             double backward_compute_us) {
    if (graph.nodes.size() > 10) {
        throw ValidationError("mlac_oracle: instance too large (n <= 10)");
    }
    if (gpu_budget < 0) throw ValidationError("mlac_oracle: budget must be >= 0");
    graph.validate();
    bw.validate();

    const std::size_t n = graph.nodes.size();
    const Tier tiers[] = {Tier::KeepGpu, Tier::OffloadCpu, Tier::OffloadDisk, Tier::Recompute};
    std::vector<Tier> current(n, Tier::KeepGpu);
    MlacOracleResult best;
    bool found = false;

    // depth-first in lexicographic decision order; the first minimum found
    // is the lexicographically smallest one
    auto evaluate = [&]() {
        std::int64_t resident = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (current[i] == Tier::KeepGpu) resident += graph.nodes[i].bytes;
        }
        if (resident > gpu_budget) return;
        MlacPlan plan;
        plan.decisions = current;
        plan.gpu_resident_bytes = resident;
        plan.est_overhead_us = backward_overhead(plan, graph, bw, 0.0);
        double overhead = backward_overhead(plan, graph, bw, backward_compute_us);
        if (!found || overhead < best.overhead_us) {
            found = true;
            best.plan = plan;
            best.overhead_us = overhead;
        }
    };
    auto search = [&](auto&& self, std::size_t i) -> void {
        if (i == n) {
            evaluate();
            return;
        }
        for (Tier t : tiers) {
            if (t == Tier::Recompute && graph.nodes[i].is_module_input) continue;
            current[i] = t;
            self(self, i + 1);
        }
    };
    search(search, 0);
    if (!found) {
        // every vector exceeded the budget; cannot happen since the all-
        // offload vector is always feasible
        throw RuntimeError("mlac_oracle: no feasible plan");
    }
    return best;
}

namespace {
const char kGraphHeader[] = "id,flops,bytes,compute_bound,is_module_input";

bool parse_bool(const std::string& s, const std::string& context) {
    if (s == "1" || s == "true") return true;
    if (s == "0" || s == "false") return false;
    throw ValidationError(context + ": expected 0/1/true/false, got '" + s + "'");
}
}  // namespace

ActGraph read_actgraph_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != kGraphHeader) {
        throw ValidationError(std::string("activation graph: expected header '") + kGraphHeader +
                              "'");
    }
    ActGraph graph;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 5) {
            throw ValidationError("activation graph line " + std::to_string(lineno) +
                                  ": expected 5 fields");
        }
        const std::string ctx = "activation graph line " + std::to_string(lineno);
        try {
            ActNode node;
            node.id = std::stoull(fields[0]);
            node.flops = std::stod(fields[1]);
            node.bytes = std::stoll(fields[2]);
            node.compute_bound = parse_bool(fields[3], ctx);
            node.is_module_input = parse_bool(fields[4], ctx);
            graph.nodes.push_back(node);
        } catch (const ValidationError&) {
            throw;
        } catch (const std::exception&) {
            throw ValidationError(ctx + ": malformed number");
        }
    }
    graph.validate();
    return graph;
}

void write_plan_csv(std::ostream& os, const ActGraph& graph, const MlacPlan& plan) {
    os << "id,decision\n";
    for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
        os << graph.nodes[i].id << ',' << to_string(plan.decisions[i]) << "\n";
    }
}

}  // namespace vlsim
