#pragma once

// Stage orchestration. One JSON config file drives every pipeline stage;
// each stage reads and writes declared artifacts under a shared output
// directory and records a manifest (config hash, seed, input hashes, output
// hashes) so reruns can detect drift. Stages are pure functions of
// (config, seed, input artifacts): running a stage twice with the same
// inputs produces byte-identical outputs.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "radsum/corpus.hpp"
#include "radsum/distillation.hpp"
#include "radsum/gsg.hpp"
#include "radsum/model.hpp"
#include "radsum/tagging.hpp"
#include "radsum/training.hpp"
#include "radsum/vocab.hpp"

namespace radsum::pipeline {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct DataConfig {
    std::string reports;   // source corpus, one JSON record per line
    std::string concepts;  // pipe-delimited concept table (tag stage only)
    std::size_t max_vocab = 2000;
    corpus::FilterRules filter;
};

struct AnchorConfig {
    double lambda0 = 1.0;
    training::AnchorSchedule schedule = training::AnchorSchedule::linear_to_zero;
    std::size_t max_samples = 0;  // cap on curvature-estimation samples; 0 = all
    bool sample_labels = false;   // sample labels from the model instead of data
};

struct TagConfig {
    std::size_t top_n = 500;  // keyword-list size
    tagging::TfidfOptions tfidf;
};

// Defaults mirror the published training setup (20 epochs, batch 32,
// lr 3e-3, soft-target weight 0.7 at temperature 20, 6/512/8 main model,
// 3/128/4 student); desk-scale configs override the sizes.
struct PipelineConfig {
    std::uint64_t seed = 0;
    DataConfig data;
    model::ModelConfig model;    // vocab_size is resolved from the saved vocabulary
    model::ModelConfig student;  // sequence limits default to the main model's
    training::TrainConfig train;
    AnchorConfig anchor;
    distillation::KDConfig kd;
    // Trainable-prefix plan for the unfreeze ablation. Default: decoder at
    // epoch 0, encoder and embeddings at epoch 1.
    training::UnfreezePlan unfreeze{{0, {"dec"}}, {1, {"enc", "embed"}}};
    TagConfig tag;
    std::vector<double> fractions{0.1, 0.25, 0.5, 1.0};  // data-fraction sweep
    std::string eval_stage = "finetune";  // finetune | unfreeze | distill
};

// Strict parse: every present field must have the declared type and every
// field must be known. Violations throw std::invalid_argument naming the
// field path and the expected type ("config: train.epochs expects an
// unsigned integer"). Missing fields keep their defaults.
PipelineConfig parse_config(const std::string& json_text);
PipelineConfig load_config(const std::filesystem::path& path);

// The parsed config re-serialized with sorted keys and every field explicit.
std::string config_json(const PipelineConfig& config);

// ---------------------------------------------------------------------------
// Stage context
// ---------------------------------------------------------------------------

struct StageContext {
    PipelineConfig config;
    std::string config_hash;  // digest of the canonical config serialization
    std::filesystem::path out_dir;
    std::int64_t limit_n = 0;  // > 0: cap training-example counts
};

// Loads the config, applies the optional seed override, and fixes the output
// directory. The config hash covers the canonical serialization (with the
// effective seed), so overriding the seed changes the hash.
StageContext make_context(const std::filesystem::path& config_path,
                          const std::filesystem::path& out_dir,
                          std::optional<std::uint64_t> seed_override = std::nullopt,
                          std::int64_t limit_n = 0);

// Per-stage seed fan-out: derived from the global seed and the stage name,
// so stages are decorrelated but individually reproducible.
std::uint64_t stage_seed(const StageContext& ctx, std::string_view label);

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

struct StageResult {
    std::string stage;
    // Artifact path -> content hash. Paths under the output directory are
    // recorded relative to it; external inputs keep the configured path.
    std::map<std::string, std::string> inputs;
    std::map<std::string, std::string> outputs;
    std::filesystem::path manifest_path;  // <out>/manifests/<stage>.json
};

// prepare: parse, filter, split; writes prepared/{train,val,test}.jsonl,
// prepared/rejected.jsonl, and prepared/vocab.json (vocabulary over the
// normalized training-split text).
StageResult run_prepare(const StageContext& ctx);

// gsg: builds gap-sentence rows for the train and val splits;
// writes gsg/train.tsv and gsg/val.tsv.
StageResult run_gsg(const StageContext& ctx);

// pretrain: trains the main model on masked-findings -> gap-target pairs;
// checkpoints under pretrain/.
StageResult run_pretrain(const StageContext& ctx);

// fisher: diagonal curvature of the pretrained model over the gap-sentence
// training set; writes fisher/fisher.json.
StageResult run_fisher(const StageContext& ctx);

// finetune: anchored fine-tuning (findings -> impression) from the
// pretrained weights; checkpoints under finetune/.
StageResult run_finetune(const StageContext& ctx);

// unfreeze-ablate: the gradual-unfreezing baseline, same data and warm
// start, trainable set grown per the plan; checkpoints under unfreeze/.
StageResult run_unfreeze(const StageContext& ctx);

// distill: trains the student against the fine-tuned model as teacher;
// checkpoints and kd_manifest.json under distill/.
StageResult run_distill(const StageContext& ctx);

// tag: TF-IDF keywords from training-split impressions, joined against the
// concept table; writes tag/keywords.txt, tag/warnings.txt, tag/tags.jsonl.
StageResult run_tag(const StageContext& ctx);

// evaluate: greedy-decodes the test split with the configured stage's
// best-validation checkpoint; writes evaluate/eval.csv, examples.csv,
// eval.json.
StageResult run_evaluate(const StageContext& ctx);

// sweep: data-fraction sweep over the summarization task; fresh init per
// fraction, best checkpoint evaluated on the test split; writes
// sweep/sweep.csv and sweep/sweep.json.
StageResult run_sweep(const StageContext& ctx);

// stats: corpus statistics over the filtered source corpus;
// writes stats/stats.csv.
StageResult run_stats(const StageContext& ctx);

// Canonical stage names, pipeline order.
const std::vector<std::string>& stage_names();

// Dispatch by name ("unfreeze-ablate" maps to run_unfreeze). Throws
// std::invalid_argument on an unknown stage.
StageResult run_stage(const StageContext& ctx, const std::string& stage);

// ---------------------------------------------------------------------------
// Shared helpers (exposed for tests)
// ---------------------------------------------------------------------------

// Whitespace-split then encode; gap-sentence rows map masked_findings ->
// gap_target, report pairs map normalized findings -> normalized impression.
std::vector<training::SeqExample> encode_gsg_rows(const std::vector<gsg::GsgRow>& rows,
                                                  const vocab::Vocab& vocab);
std::vector<training::SeqExample> encode_report_pairs(const std::vector<corpus::Report>& reports,
                                                      const vocab::Vocab& vocab);

// One report per line: {"id":...,"findings":...,"impression":...}.
void write_reports(const std::vector<corpus::Report>& reports,
                   const std::filesystem::path& path);

// Best-validation checkpoint path recorded by a training run's manifest.
// Throws std::runtime_error("missing checkpoint: ...") when the stage has
// not produced one.
std::filesystem::path best_checkpoint(const std::filesystem::path& train_dir);

// Fisher-diagonal JSON round-trip (entry order preserved).
void save_fisher(const training::FisherDiag& fisher, std::size_t samples,
                 const std::filesystem::path& path);
training::FisherDiag load_fisher(const std::filesystem::path& path);

}  // namespace radsum::pipeline
