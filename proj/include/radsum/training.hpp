#pragma once

// Training engine: token-level cross-entropy, AdamW with decoupled weight
// decay and global-norm clipping, diagonal curvature (squared-gradient)
// estimation, quadratic anchoring of parameters to a previous task's weights
// with a decaying coefficient, and a layer-unfreezing variant. One shared
// epoch loop drives pretraining and fine-tuning; every run is a pure function
// of (initial weights, config, data, seed) including across resume.

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "radsum/checkpoint.hpp"
#include "radsum/model.hpp"
#include "radsum/tensor.hpp"

namespace radsum::training {

using model::Batch;
using model::ModelConfig;
using model::ParameterStore;
using tensor::Index;
using tensor::Tape;
using tensor::Tensor;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct TrainConfig {
    int epochs = 20;
    int batch_size = 32;
    double lr = 0.003;
    std::string optimizer = "adamw";  // only supported value
    double weight_decay = 0.01;
    std::uint64_t seed = 0;

    // Conventional optimizer constants, kept visible for reproducibility.
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double clip_norm = 1.0;  // global-norm gradient clip; <= 0 disables
};

// Throws std::invalid_argument naming the broken field.
void validate_train_config(const TrainConfig& config);

// ---------------------------------------------------------------------------
// Loss
// ---------------------------------------------------------------------------

// Token-level cross-entropy: -mean over positions where pad_mask is 0 of the
// target token's log-probability. logits is [B,T,V]; targets and pad_mask
// have length B*T (pad_mask nonzero = ignore position). Throws when every
// position is masked or sizes disagree.
Tensor cross_entropy(Tape& tape, const Tensor& logits, const std::vector<Index>& targets,
                     const std::vector<std::uint8_t>& pad_mask);

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

class AdamW {
public:
    AdamW(std::vector<Tensor> params, const TrainConfig& config);

    // Which parameters receive updates; frozen entries keep their values and
    // moment buffers bit-for-bit and are excluded from the clip norm.
    void set_trainable(std::vector<bool> trainable);

    // Applies one update from the parameters' current gradients.
    void step();
    void zero_grad();

    std::int64_t step_count() const { return step_; }
    checkpoint::OptimizerState state() const;
    void load_state(const checkpoint::OptimizerState& state);

private:
    std::vector<Tensor> params_;
    std::vector<bool> trainable_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    std::int64_t step_ = 0;
    double lr_, beta1_, beta2_, eps_, weight_decay_, clip_norm_;
};

// ---------------------------------------------------------------------------
// Curvature and anchoring
// ---------------------------------------------------------------------------

// Per-parameter diagonal curvature estimates, aligned with ParameterStore
// iteration order. Every entry is a nonnegative mean squared gradient.
struct FisherDiag {
    std::vector<std::pair<std::string, std::vector<double>>> diag;

    const std::vector<double>* find(const std::string& name) const;
};

// Generic estimator: mean over samples of the squared gradient of that
// sample's scalar log-likelihood (gradients reset between samples).
using LogLikFn = std::function<Tensor(Tape& tape, std::size_t sample)>;
std::vector<std::vector<double>> estimate_fisher_diag(const std::vector<Tensor>& params,
                                                      std::size_t n_samples,
                                                      const LogLikFn& loglik);

struct SeqExample {
    std::vector<Index> src;  // encoder ids
    std::vector<Index> tgt;  // reference output ids, without the end token
};

struct FisherOptions {
    // Observed labels by default; when sample_labels is set, each position's
    // label is drawn from the model's own predictive distribution instead.
    bool sample_labels = false;
    std::uint64_t seed = 0;
};

// Sequence-model wrapper: one sample = one (src, tgt) pair, log-likelihood =
// sum of non-pad target-token log-probs under teacher forcing.
FisherDiag estimate_fisher(const ParameterStore& params, const ModelConfig& config,
                           const std::vector<SeqExample>& samples,
                           const FisherOptions& options = {});

enum class AnchorSchedule { linear_to_zero, constant, exp_decay };

struct EwcAnchor {
    ParameterStore theta_star;  // snapshot of the previous task's weights
    FisherDiag fisher;
    double lambda0 = 1.0;
    AnchorSchedule schedule = AnchorSchedule::linear_to_zero;
};

// Builds an anchor by deep-copying the live parameters.
EwcAnchor make_anchor(const ParameterStore& params, FisherDiag fisher, double lambda0,
                      AnchorSchedule schedule = AnchorSchedule::linear_to_zero);

// Quadratic penalty R = 1/2 sum_i F_i (theta_i - theta*_i)^2. When
// accumulate_grad is set, adds lambda * F_i * (theta_i - theta*_i) to each
// parameter's gradient buffer. Throws on name/shape mismatch.
double ewc_penalty(const ParameterStore& params, const EwcAnchor& anchor, double lambda,
                   bool accumulate_grad);

// Unhalved anchored drift sum_i F_i (theta_i - theta*_i)^2, the per-epoch
// forgetting diagnostic.
double fisher_drift(const ParameterStore& params, const EwcAnchor& anchor);

// Penalty coefficient for an epoch. linear_to_zero: lambda0*(1 - e/(E-1)),
// exactly 0 at the last epoch; constant: lambda0; exp_decay:
// lambda0*exp(-5*e/(E-1)). A single-epoch run sits at the schedule endpoint.
double lambda_schedule(int epoch, int total_epochs, const EwcAnchor& anchor);

// ---------------------------------------------------------------------------
// Batching helpers (exposed for tests and the distillation loop)
// ---------------------------------------------------------------------------

struct LabeledBatch {
    Batch batch;                         // src + shifted decoder inputs
    std::vector<Index> labels;           // [batch * tgt_len] target ids
    std::vector<std::uint8_t> pad_mask;  // nonzero where labels are filler
};

// Decoder inputs are the targets shifted right behind the start (pad) token;
// labels are the targets followed by eos. Sequences are truncated to the
// model's limits.
LabeledBatch make_labeled_batch(const std::vector<SeqExample>& examples,
                                const std::vector<std::size_t>& rows, const ModelConfig& config,
                                Index pad_id = 0, Index eos_id = 1);

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

// Trainable-prefix plan: at epoch e, every parameter whose name starts with a
// prefix activated at some epoch <= e is trainable; the set only grows.
using UnfreezePlan = std::map<int, std::vector<std::string>>;

// Full per-batch objective: runs the forward pass and returns the scalar loss
// recorded on the tape. The default (unset) objective is forward +
// cross_entropy; the distillation loop substitutes its combined loss here so
// both paths share one epoch loop.
using LossFn = std::function<Tensor(Tape& tape, const LabeledBatch& batch)>;

struct EpochRecord {
    double train_loss = 0.0;  // optimized objective (task loss + penalty)
    double val_loss = 0.0;
    double lambda = 0.0;
    double drift = 0.0;  // Fisher-weighted drift; 0 without an anchor
};

struct TrainOptions {
    TrainConfig config;
    std::string checkpoint_dir;  // empty: keep everything in memory
    bool resume = true;          // reuse finished epochs found on disk
    const EwcAnchor* anchor = nullptr;
    const UnfreezePlan* unfreeze = nullptr;
    LossFn loss_fn;              // unset: forward + cross_entropy
};

struct TrainRun {
    std::vector<EpochRecord> history;  // one entry per epoch
    int best_epoch = -1;               // lowest validation loss
    double best_val = 0.0;
};

// Mean cross-entropy of the model over a dataset (no gradient work).
double dataset_loss(const ParameterStore& params, const ModelConfig& config,
                    const std::vector<SeqExample>& examples, int batch_size);

// Shared epoch loop. Mutates params in place. Empty val falls back to the
// epoch's training loss for best-checkpoint tracking. Throws on a non-finite
// loss, naming the epoch and batch.
TrainRun train_model(ParameterStore& params, const ModelConfig& config,
                     const std::vector<SeqExample>& train, const std::vector<SeqExample>& val,
                     const TrainOptions& options);

// Pretraining on gap-sentence data: plain cross-entropy, no anchor.
TrainRun train_gsg(ParameterStore& params, const ModelConfig& config,
                   const std::vector<SeqExample>& train, const std::vector<SeqExample>& val,
                   const TrainConfig& tc, const std::string& checkpoint_dir = "");

// Fine-tuning anchored to the pretrained weights.
TrainRun finetune_summarization(ParameterStore& params, const ModelConfig& config,
                                const EwcAnchor& anchor, const std::vector<SeqExample>& train,
                                const std::vector<SeqExample>& val, const TrainConfig& tc,
                                const std::string& checkpoint_dir = "");

// Fine-tuning where the trainable set grows per the plan instead of using an
// anchor. Throws when a plan prefix matches no parameter.
TrainRun layer_unfreeze_finetune(ParameterStore& params, const ModelConfig& config,
                                 const UnfreezePlan& plan, const std::vector<SeqExample>& train,
                                 const std::vector<SeqExample>& val, const TrainConfig& tc,
                                 const std::string& checkpoint_dir = "");

}  // namespace radsum::training
