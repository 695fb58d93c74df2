#pragma once

// Versioned binary snapshots of a ParameterStore, optionally bundled with
// Adam-style optimizer state so interrupted training can resume exactly.

#include <cstdint>
#include <string>
#include <vector>

#include "radsum/model.hpp"

namespace radsum::checkpoint {

// First-/second-moment buffers aligned one-to-one with ParameterStore
// iteration order, plus the shared step counter.
struct OptimizerState {
    std::int64_t step = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
};

struct Checkpoint {
    model::ParameterStore params;
    bool has_optimizer = false;
    OptimizerState optimizer;
};

// Atomic write. Pass optimizer = nullptr for a weights-only snapshot.
void save_checkpoint(const std::string& path, const model::ParameterStore& params,
                     const OptimizerState* optimizer = nullptr);

// Throws std::runtime_error on missing files, bad magic, version mismatch,
// or truncation.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace radsum::checkpoint
