// Copyright (c) 2026 vlsim authors
// SPDX-License-Identifier: Apache-2.0

#include "vlsim/packing.hpp"

#include <algorithm>
#include <string>

namespace vlsim {

std::vector<MicroBatch> pack_ffd(std::span<const WorkItem> items, std::int64_t capacity) {
    if (capacity < 1) throw ValidationError("pack_ffd: capacity must be >= 1");
    for (const auto& it : items) {
        if (it.seq_len > capacity) {
            throw ValidationError("pack_ffd: item " + std::to_string(it.id) + " has seq_len " +
                                  std::to_string(it.seq_len) + " exceeding capacity " +
                                  std::to_string(capacity));
        }
        if (it.seq_len < 1) {
            throw ValidationError("pack_ffd: item " + std::to_string(it.id) +
                                  " has seq_len < 1");
        }
    }

    std::vector<std::size_t> order(items.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (items[a].seq_len != items[b].seq_len) return items[a].seq_len > items[b].seq_len;
        return items[a].id < items[b].id;
    });

    std::vector<MicroBatch> bins;
    for (std::size_t idx : order) {
        const WorkItem& it = items[idx];
        bool placed = false;
        for (auto& bin : bins) {
            if (bin.total_tokens + it.seq_len <= capacity) {
                bin.items.push_back(it.id);
                bin.total_tokens += it.seq_len;
                placed = true;
                break;
            }
        }
        if (!placed) {
            MicroBatch bin;
            bin.id = bins.size();
            bin.capacity = capacity;
            bin.items.push_back(it.id);
            bin.total_tokens = it.seq_len;
            bins.push_back(std::move(bin));
        }
    }
    return bins;
}

int pack_oracle(std::span<const std::int64_t> lengths, std::int64_t capacity) {
    if (capacity < 1) throw ValidationError("pack_oracle: capacity must be >= 1");
    if (lengths.size() > 14) {
        throw ValidationError("pack_oracle: instance too large (n <= 14)");
    }
    for (std::int64_t len : lengths) {
        if (len < 1 || len > capacity) {
            throw ValidationError("pack_oracle: lengths must lie in [1, capacity]");
        }
    }
    const int n = static_cast<int>(lengths.size());
    if (n == 0) return 0;
    const std::uint32_t full = (1u << n) - 1u;

    // subset sums via low-bit recurrence
    std::vector<std::int64_t> sum(full + 1, 0);
    for (std::uint32_t mask = 1; mask <= full; ++mask) {
        std::uint32_t low = mask & (~mask + 1u);
        int bit = std::countr_zero(low);
        sum[mask] = sum[mask ^ low] + lengths[static_cast<std::size_t>(bit)];
    }

    // min_bins[mask] = fewest capacity-feasible bins covering mask exactly
    constexpr int kInf = 1 << 20;
    std::vector<int> min_bins(full + 1, kInf);
    min_bins[0] = 0;
    for (std::uint32_t mask = 1; mask <= full; ++mask) {
        std::uint32_t low = mask & (~mask + 1u);
        // enumerate submasks containing the lowest item to avoid permutations
        for (std::uint32_t sub = mask; sub != 0; sub = (sub - 1) & mask) {
            if (!(sub & low)) continue;
            if (sum[sub] > capacity) continue;
            min_bins[mask] = std::min(min_bins[mask], 1 + min_bins[mask ^ sub]);
        }
    }
    return min_bins[full];
}

}  // namespace vlsim
