// Copyright (c) 2026 vlsim authors
// SPDX-License-Identifier: Apache-2.0

#include "vlsim/balance.hpp"

#include <algorithm>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <string>

namespace vlsim {

void RuntimeLut::validate() const {
    if (points.size() < 2) throw ValidationError("RuntimeLut: at least 2 breakpoints required");
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].first < 1) throw ValidationError("RuntimeLut: seq_len must be >= 1");
        if (points[i].second <= 0) throw ValidationError("RuntimeLut: runtimes must be > 0");
        if (i > 0) {
            if (points[i].first <= points[i - 1].first) {
                throw ValidationError("RuntimeLut: seq_len must be strictly increasing");
            }
            if (points[i].second < points[i - 1].second) {
                throw ValidationError("RuntimeLut: runtimes must be non-decreasing");
            }
        }
    }
}

RuntimeLut fit_lut(std::span<const std::pair<std::int64_t, double>> samples) {
    if (samples.size() < 2) throw ValidationError("fit_lut: at least 2 samples required");
    for (const auto& [s, r] : samples) {
        if (s < 1) throw ValidationError("fit_lut: seq_len must be >= 1");
        if (r <= 0) throw ValidationError("fit_lut: runtimes must be > 0");
    }

    // average duplicates, keep multiplicity as the PAVA weight
    std::map<std::int64_t, std::pair<double, double>> grouped;  // seq -> (sum, count)
    for (const auto& [s, r] : samples) {
        auto& acc = grouped[s];
        acc.first += r;
        acc.second += 1.0;
    }
    if (grouped.size() < 2) {
        throw ValidationError("fit_lut: at least 2 distinct seq_len values required");
    }

    struct Block {
        double value;
        double weight;
        std::size_t count;  // breakpoints merged into this block
    };
    std::vector<std::int64_t> seqs;
    std::vector<Block> blocks;
    seqs.reserve(grouped.size());
    for (const auto& [s, acc] : grouped) {
        seqs.push_back(s);
        blocks.push_back({acc.first / acc.second, acc.second, 1});
        // pool while the tail violates monotonicity
        while (blocks.size() >= 2 && blocks[blocks.size() - 2].value > blocks.back().value) {
            Block b = blocks.back();
            blocks.pop_back();
            Block& a = blocks.back();
            a.value = (a.value * a.weight + b.value * b.weight) / (a.weight + b.weight);
            a.weight += b.weight;
            a.count += b.count;
        }
    }

    RuntimeLut lut;
    std::size_t i = 0;
    for (const Block& b : blocks) {
        for (std::size_t k = 0; k < b.count; ++k) {
            lut.points.emplace_back(seqs[i++], b.value);
        }
    }
    lut.validate();
    return lut;
}

double estimate(const RuntimeLut& lut, std::int64_t seq_len) {
    lut.validate();
    if (seq_len < 1) throw ValidationError("estimate: seq_len must be >= 1");
    const auto& pts = lut.points;
    const double min_runtime = pts.front().second;

    auto segment_value = [&](std::size_t i, std::int64_t s) {
        const auto& [s0, r0] = pts[i];
        const auto& [s1, r1] = pts[i + 1];
        double slope = (r1 - r0) / static_cast<double>(s1 - s0);
        return r0 + slope * static_cast<double>(s - s0);
    };

    double value;
    if (seq_len <= pts.front().first) {
        value = segment_value(0, seq_len);
    } else if (seq_len >= pts.back().first) {
        value = segment_value(pts.size() - 2, seq_len);
    } else {
        auto it = std::upper_bound(pts.begin(), pts.end(), seq_len,
                                   [](std::int64_t s, const auto& p) { return s < p.first; });
        value = segment_value(static_cast<std::size_t>(it - pts.begin()) - 1, seq_len);
    }
    return std::max(value, min_runtime);
}

double microbatch_runtime(const RuntimeLut& lut, const MicroBatch& mb) {
    return estimate(lut, mb.total_tokens);
}

double RankAssignment::makespan_us() const {
    double m = 0.0;
    for (double t : rank_runtime_us) m = std::max(m, t);
    return m;
}

RankAssignment balance_lpt_by(std::span<const MicroBatch> microbatches,
                              int ranks,
                              std::span<const double> sort_keys,
                              std::span<const double> runtimes) {
    if (ranks < 1) throw ValidationError("balance_lpt: rank count must be >= 1");
    if (microbatches.empty()) throw ValidationError("balance_lpt: at least one micro-batch");
    if (sort_keys.size() != microbatches.size() || runtimes.size() != microbatches.size()) {
        throw ValidationError("balance_lpt: key/runtime size mismatch");
    }

    std::vector<std::size_t> order(microbatches.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (sort_keys[a] != sort_keys[b]) return sort_keys[a] > sort_keys[b];
        return microbatches[a].id < microbatches[b].id;
    });

    RankAssignment out;
    out.ranks = ranks;
    out.rank_microbatches.resize(static_cast<std::size_t>(ranks));
    out.rank_runtime_us.assign(static_cast<std::size_t>(ranks), 0.0);
    std::vector<double> load(static_cast<std::size_t>(ranks), 0.0);
    for (std::size_t idx : order) {
        std::size_t target = 0;
        for (std::size_t r = 1; r < load.size(); ++r) {
            if (load[r] < load[target]) target = r;
        }
        load[target] += sort_keys[idx];
        out.rank_microbatches[target].push_back(microbatches[idx].id);
        out.rank_runtime_us[target] += runtimes[idx];
    }
    return out;
}

RankAssignment balance_lpt(std::span<const MicroBatch> microbatches,
                           int ranks,
                           const RuntimeLut& lut) {
    std::vector<double> runtimes;
    runtimes.reserve(microbatches.size());
    for (const auto& mb : microbatches) runtimes.push_back(microbatch_runtime(lut, mb));
    return balance_lpt_by(microbatches, ranks, runtimes, runtimes);
}

namespace {

void oracle_search(const std::vector<double>& runtimes,
                   std::size_t idx,
                   std::vector<double>& load,
                   double& best) {
    if (idx == runtimes.size()) {
        double m = 0.0;
        for (double t : load) m = std::max(m, t);
        best = std::min(best, m);
        return;
    }
    for (std::size_t r = 0; r < load.size(); ++r) {
        // identical loads make identical subtrees
        bool dup = false;
        for (std::size_t q = 0; q < r; ++q) {
            if (load[q] == load[r]) {
                dup = true;
                break;
            }
        }
        if (dup) continue;
        if (load[r] + runtimes[idx] >= best) continue;
        load[r] += runtimes[idx];
        oracle_search(runtimes, idx + 1, load, best);
        load[r] -= runtimes[idx];
    }
}

}  // namespace

double balance_oracle(std::span<const MicroBatch> microbatches,
                      int ranks,
                      const RuntimeLut& lut) {
    if (microbatches.size() > 12 || ranks > 4) {
        throw ValidationError("balance_oracle: instance too large (n <= 12, R <= 4)");
    }
    if (ranks < 1) throw ValidationError("balance_oracle: rank count must be >= 1");
    if (microbatches.empty()) return 0.0;

    std::vector<double> runtimes;
    runtimes.reserve(microbatches.size());
    for (const auto& mb : microbatches) runtimes.push_back(microbatch_runtime(lut, mb));
    std::sort(runtimes.begin(), runtimes.end(), std::greater<>());

    // LPT seeds the upper bound; the search can only improve on it
    double best = balance_lpt(microbatches, ranks, lut).makespan_us();
    std::vector<double> load(static_cast<std::size_t>(ranks), 0.0);
    oracle_search(runtimes, 0, load, best);
    return best;
}

std::future<RankAssignment> plan_next_batch(std::vector<MicroBatch> batch,
                                            int ranks,
                                            RuntimeLut lut) {
    return std::async(std::launch::async,
                      [batch = std::move(batch), ranks, lut = std::move(lut)]() {
                          return balance_lpt(batch, ranks, lut);
                      });
}

namespace {
const char kSamplesHeader[] = "seq_len,runtime_us";
}

std::vector<std::pair<std::int64_t, double>> read_samples_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != kSamplesHeader) {
        throw ValidationError(std::string("samples file: expected header '") + kSamplesHeader +
                              "'");
    }
    std::vector<std::pair<std::int64_t, double>> samples;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 2) {
            throw ValidationError("samples file line " + std::to_string(lineno) +
                                  ": expected 'seq_len,runtime_us'");
        }
        try {
            samples.emplace_back(std::stoll(fields[0]), std::stod(fields[1]));
        } catch (const std::exception&) {
            throw ValidationError("samples file line " + std::to_string(lineno) +
                                  ": malformed number");
        }
    }
    return samples;
}

void write_lut_csv(std::ostream& os, const RuntimeLut& lut) {
    os << kSamplesHeader << "\n";
    for (const auto& [s, r] : lut.points) {
        os << s << ',' << format_double(r) << "\n";
    }
}

}  // namespace vlsim
