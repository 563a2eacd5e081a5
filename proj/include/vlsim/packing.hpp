// Copyright (c) 2026 vlsim authors
// SPDX-License-Identifier: Apache-2.0
//
// Packing of variable-length sequences into capacity-bounded micro-batches.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vlsim/workload.hpp"

namespace vlsim {

struct MicroBatch {
    std::uint64_t id = 0;
    std::vector<std::uint64_t> items;  // member WorkItem ids, insertion order
    std::int64_t total_tokens = 0;
    std::int64_t capacity = 0;
};

// First-fit-decreasing: sort by descending seq_len (ties by ascending id),
// place each item into the lowest-indexed bin with room. Output is invariant
// to the input order. Rejects any item longer than the capacity.
std::vector<MicroBatch> pack_ffd(std::span<const WorkItem> items, std::int64_t capacity);

// Exact minimum bin count by subset-partition dynamic programming over
// bitmasks. Rejects instances with more than 14 items.
int pack_oracle(std::span<const std::int64_t> lengths, std::int64_t capacity);

}  // namespace vlsim
