#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "embkit/records.hpp"

namespace embkit::batching {

/// Training rows drawn from a single source dataset.
struct Batch {
    std::string source;
    std::vector<TrainTriplet> items;
};

/// Shuffles each dataset with the seed, cuts it into batches of batch_size
/// (the last one may be short) and interleaves datasets by drawing the next
/// batch from a dataset chosen with probability proportional to its remaining
/// batches. Batches of one dataset keep their relative order.
std::vector<Batch> task_homogeneous_batches(std::span<const TrainTriplet> triplets,
                                            std::size_t batch_size, std::uint64_t seed);

/// Drops every item that repeats any anchor, positive or negative text
/// already seen in an earlier item of the batch. First occurrence wins.
Batch dedup_within_batch(Batch batch);

/// True when all items share the batch source and no text is repeated
/// across items.
bool satisfies_batch_invariants(const Batch& batch);

}  // namespace embkit::batching
