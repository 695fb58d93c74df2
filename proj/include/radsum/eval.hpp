#pragma once

// Evaluation harness: decode a summary for every report in a split, score
// candidates against references (ROUGE-1/2/L, BLEU-1/2/3), and emit summary
// and per-example tables. Also hosts the data-fraction sweep, which retrains
// on deterministic subsamples and evaluates each point's best checkpoint.

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "radsum/corpus.hpp"
#include "radsum/metrics.hpp"
#include "radsum/model.hpp"
#include "radsum/training.hpp"
#include "radsum/vocab.hpp"

namespace radsum::eval {

// Produces candidate impression tokens for one report. Injectable so the
// harness itself can be verified with a copy model (candidate := reference).
using Generator = std::function<std::vector<std::string>(const corpus::Report&)>;

struct ExampleScore {
    std::string id;
    // R-1, R-2, R-L, B-1, B-2, B-3 for this pair, scaled by 100. ROUGE is
    // F1; BLEU is sentence-level smoothed, matching the summary table's
    // per-pair row.
    std::array<double, 6> scores{};
};

struct EvalResult {
    metrics::MetricTable table;
    std::vector<ExampleScore> examples;  // aligned with the input split
};

// Scores generator output against normalize_tokens(impression) for every
// report. Throws on an empty split.
EvalResult evaluate(const std::vector<corpus::Report>& split, const Generator& generate);

// Greedy-decoding generator: tokenize findings, encode through the
// vocabulary, decode up to max_len ids (0 means the model's target limit),
// and return the detokenized candidate with special tokens stripped. Throws
// when the weights do not match the config's parameter layout.
Generator model_generator(const model::ParameterStore& params, const model::ModelConfig& config,
                          const vocab::Vocab& vocab, tensor::Index max_len = 0);

// Summary table (per-pair and pooled rows) as CSV; identical inputs give
// identical bytes.
std::string eval_csv(const EvalResult& result);

// Per-example dump: id plus the six columns, four decimals.
std::string examples_csv(const EvalResult& result);

// Machine-readable form of both tables plus the per-example scores.
std::string eval_json(const EvalResult& result);

// ---------------------------------------------------------------------------
// Data-fraction sweep
// ---------------------------------------------------------------------------

struct SweepPoint {
    double fraction = 0.0;
    std::size_t examples_used = 0;
    training::TrainRun run;
    metrics::MetricTable table;  // best-validation checkpoint's scores
};

// Builds a Generator for freshly trained weights; the caller binds whatever
// vocabulary or decoding context it needs.
using GeneratorFactory = std::function<Generator(const model::ParameterStore& params)>;

// For each fraction f in (0, 1]: subsample round(f*N) training examples
// (same seeded permutation for every fraction, original order restored, so
// f = 1 reproduces the full run bitwise and smaller fractions nest), train
// from a fresh init, reload the best-validation epoch, and evaluate on the
// test split. Checkpoints land under work_dir/point_<i>. Throws on a
// fraction outside (0, 1] or one that yields no examples.
std::vector<SweepPoint> data_fraction_sweep(
    const std::vector<training::SeqExample>& train_set,
    const std::vector<training::SeqExample>& val_set,
    const std::vector<corpus::Report>& test_split, const std::vector<double>& fractions,
    const model::ModelConfig& model_config, const training::TrainConfig& train_config,
    const GeneratorFactory& make_generator, const std::string& work_dir,
    std::uint64_t subsample_seed = 0);

// fraction,examples,then the per-pair columns; four decimals.
std::string sweep_csv(const std::vector<SweepPoint>& points);
std::string sweep_json(const std::vector<SweepPoint>& points);

}  // namespace radsum::eval
