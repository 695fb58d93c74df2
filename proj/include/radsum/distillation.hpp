#pragma once

// Teacher-to-student knowledge transfer. The student trains on a blend of
// hard-label cross-entropy and a temperature-softened divergence toward the
// teacher's output distribution; the temperature-squared factor keeps the
// soft-target gradient scale roughly independent of the temperature.

#include <cstdint>
#include <string>
#include <vector>

#include "radsum/model.hpp"
#include "radsum/tensor.hpp"
#include "radsum/training.hpp"

namespace radsum::distillation {

using model::ModelConfig;
using model::ParameterStore;
using tensor::Index;
using tensor::Tape;
using tensor::Tensor;

struct KDConfig {
    double alpha = 0.7;        // weight on the soft-target term, in [0,1]
    double temperature = 20.0; // softening temperature, > 0
    // Divergence direction. Default: KL(teacher || student), the standard
    // distillation convention (the student is penalized for assigning low
    // probability where the teacher assigns high). The alternative reverses
    // the arguments.
    bool reverse_kl = false;
};

// Throws std::invalid_argument naming the broken field.
void validate_kd_config(const KDConfig& config);

// softmax(logits / temperature) along the last axis; rows sum to 1.
// Throws on temperature <= 0.
Tensor soften(Tape& tape, const Tensor& logits, double temperature);

// Combined objective over one batch of positions:
//   L = (1-alpha) * CE(student, targets)
//     + alpha * T^2 * KL(soften(teacher,T) || soften(student,T))
// token-mean over positions where pad_mask is 0. Teacher logits are treated
// as constants: only their values are read, so no gradient can reach the
// teacher. alpha == 0 routes through cross_entropy exactly. Throws on shape
// mismatch.
Tensor kd_loss(Tape& tape, const Tensor& student_logits, const Tensor& teacher_logits,
               const std::vector<Index>& targets, const std::vector<std::uint8_t>& pad_mask,
               const KDConfig& config);

// Student architecture presets, named by the approximate parameter-count
// reduction versus the 6-layer/512-wide teacher. Vocabulary, sequence limits,
// and seed are copied from the teacher config. Supported factors: 8, 16, 32.
ModelConfig student_preset(const ModelConfig& teacher, int factor);

// Per-epoch mean loss components (means over batches, like TrainRun's
// train_loss).
struct KdEpoch {
    double ce = 0.0;
    double kl = 0.0;  // already scaled by T^2
    double combined = 0.0;
};

struct DistillResult {
    ParameterStore student;
    training::TrainRun run;
    std::vector<KdEpoch> components;  // one entry per epoch run
};

// Trains a freshly initialized student (init seeded by student_config.seed)
// against the frozen teacher. The teacher only ever runs forward, off the
// tape; its weights are untouched. When checkpoint_dir is set, per-epoch
// student checkpoints land there (resumable, like any training run) together
// with kd_manifest.json recording alpha, temperature, the teacher hash, and
// the per-epoch loss components. Throws when the two configs disagree on
// vocabulary or when the teacher's sequence limits are shorter than the
// student's.
DistillResult distill(const ParameterStore& teacher, const ModelConfig& teacher_config,
                      const ModelConfig& student_config,
                      const std::vector<training::SeqExample>& train,
                      const std::vector<training::SeqExample>& val, const KDConfig& kd,
                      const training::TrainConfig& tc, const std::string& checkpoint_dir = "");

// FNV-1a digest over parameter names, shapes, and raw values; identifies a
// set of weights in manifests.
std::string store_hash(const ParameterStore& params);

}  // namespace radsum::distillation
