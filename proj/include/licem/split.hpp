#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "licem/dataset.hpp"

namespace licem {

struct SplitSpec {
    std::uint64_t seed = 0;
    double validation_fraction = 1.0 / 8.0;
    // Only used when no explicit file assigns a test partition.
    double test_fraction = 0.0;
    // Optional JSON file {"train": [...], "val": [...], "test": [...]}; any
    // subset of keys. A listed test partition is honored verbatim and only
    // train/val are derived from the remainder.
    std::optional<std::string> split_file;
};

struct SplitResult {
    std::vector<int> train; // indices into dataset.samples
    std::vector<int> val;
    std::vector<int> test;
};

// Deterministic under (seed, fractions); partitions are disjoint and cover
// the dataset. Throws ConfigError when a required partition comes out empty.
SplitResult split(const Dataset& dataset, const SplitSpec& spec);

void save_split(const SplitResult& result, const Dataset& dataset, const std::string& path);

} // namespace licem
