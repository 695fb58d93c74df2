#include "radsum/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "json.hpp"
#include "radsum/checkpoint.hpp"
#include "radsum/hash.hpp"
#include "radsum/rng.hpp"

namespace radsum::eval {

namespace fs = std::filesystem;
using metrics::Tokens;

namespace {

std::array<double, 6> pair_scores(const Tokens& candidate, const Tokens& reference) {
    std::array<double, 6> out{};
    out[0] = 100.0 * metrics::rouge_n(candidate, reference, 1).f1;
    out[1] = 100.0 * metrics::rouge_n(candidate, reference, 2).f1;
    out[2] = 100.0 * metrics::rouge_l(candidate, reference).f1;
    for (int n = 1; n <= 3; ++n) {
        out[static_cast<std::size_t>(2 + n)] =
            100.0 * metrics::bleu(candidate, {reference}, n, metrics::BleuSmoothing::add_eps).score;
    }
    return out;
}

std::string fmt4(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

nlohmann::json row_json(const std::array<double, 6>& row) {
    nlohmann::json j;
    for (std::size_t c = 0; c < metrics::kMetricColumns.size(); ++c) {
        j[metrics::kMetricColumns[c]] = row[c];
    }
    return j;
}

}  // namespace

EvalResult evaluate(const std::vector<corpus::Report>& split, const Generator& generate) {
    if (split.empty()) {
        throw std::invalid_argument("evaluate: test split is empty");
    }
    if (!generate) {
        throw std::invalid_argument("evaluate: no generator given");
    }
    EvalResult result;
    std::vector<std::pair<Tokens, Tokens>> pairs;
    pairs.reserve(split.size());
    for (const corpus::Report& report : split) {
        Tokens candidate = generate(report);
        Tokens reference = corpus::normalize_tokens(report.impression);
        ExampleScore ex;
        ex.id = report.id;
        ex.scores = pair_scores(candidate, reference);
        result.examples.push_back(std::move(ex));
        pairs.emplace_back(std::move(candidate), std::move(reference));
    }
    result.table = metrics::corpus_scores(pairs);
    return result;
}

Generator model_generator(const model::ParameterStore& params, const model::ModelConfig& config,
                          const vocab::Vocab& vocab, tensor::Index max_len) {
    if (model::count_params_and_flops(config).params !=
        static_cast<std::int64_t>(params.total_values())) {
        throw std::invalid_argument("weights do not match the model config");
    }
    if (max_len <= 0) max_len = config.max_tgt;
    // The store and vocab are captured as copies of their handles/values so
    // the generator stays valid independent of the caller's locals.
    model::ParameterStore snapshot = params;
    vocab::Vocab vocab_copy = vocab;
    const model::ModelConfig cfg = config;
    const tensor::Index cap = max_len;
    return [snapshot, vocab_copy, cfg, cap](const corpus::Report& report) {
        auto src = vocab::encode_tokens(vocab_copy, corpus::normalize_tokens(report.findings));
        if (static_cast<tensor::Index>(src.size()) > cfg.max_src) {
            src.resize(static_cast<std::size_t>(cfg.max_src));
        }
        const auto ids = model::greedy_decode(snapshot, cfg, src, cap);
        return vocab::decode_ids(vocab_copy, ids);
    };
}

std::string eval_csv(const EvalResult& result) { return metrics::metric_csv(result.table); }

std::string examples_csv(const EvalResult& result) {
    std::string out = "id";
    for (const char* col : metrics::kMetricColumns) {
        out += ',';
        out += col;
    }
    out += '\n';
    for (const ExampleScore& ex : result.examples) {
        out += ex.id;
        for (double v : ex.scores) {
            out += ',';
            out += fmt4(v);
        }
        out += '\n';
    }
    return out;
}

std::string eval_json(const EvalResult& result) {
    nlohmann::json j;
    j["per_pair"] = row_json(result.table.per_pair);
    j["pooled"] = row_json(result.table.pooled);
    auto examples = nlohmann::json::array();
    for (const ExampleScore& ex : result.examples) {
        nlohmann::json e = row_json(ex.scores);
        e["id"] = ex.id;
        examples.push_back(std::move(e));
    }
    j["examples"] = std::move(examples);
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Data-fraction sweep
// ---------------------------------------------------------------------------

std::vector<SweepPoint> data_fraction_sweep(
    const std::vector<training::SeqExample>& train_set,
    const std::vector<training::SeqExample>& val_set,
    const std::vector<corpus::Report>& test_split, const std::vector<double>& fractions,
    const model::ModelConfig& model_config, const training::TrainConfig& train_config,
    const GeneratorFactory& make_generator, const std::string& work_dir,
    std::uint64_t subsample_seed) {
    if (train_set.empty()) {
        throw std::invalid_argument("sweep: training set is empty");
    }
    if (fractions.empty()) {
        throw std::invalid_argument("sweep: no fractions given");
    }
    if (work_dir.empty()) {
        throw std::invalid_argument("sweep: work directory required for checkpoints");
    }
    for (double f : fractions) {
        if (!(f > 0.0 && f <= 1.0)) {
            throw std::invalid_argument("sweep: fraction must be in (0, 1], got " +
                                        std::to_string(f));
        }
    }

    // One seeded permutation shared by every fraction: taking the first
    // round(f*N) entries and restoring original order makes the subsets
    // nested and the f = 1 point identical to the full dataset.
    std::vector<std::size_t> permutation(train_set.size());
    std::iota(permutation.begin(), permutation.end(), std::size_t{0});
    rng::Rng shuffler(hash::derive_seed(subsample_seed, "data-fraction-sweep"));
    shuffler.shuffle(permutation);

    std::vector<SweepPoint> points;
    for (std::size_t i = 0; i < fractions.size(); ++i) {
        const double f = fractions[i];
        const auto want = std::llround(f * static_cast<double>(train_set.size()));
        if (want < 1) {
            throw std::invalid_argument("sweep: fraction " + std::to_string(f) +
                                        " yields no training examples");
        }
        std::vector<std::size_t> take(permutation.begin(), permutation.begin() + want);
        std::sort(take.begin(), take.end());
        std::vector<training::SeqExample> subset;
        subset.reserve(take.size());
        for (std::size_t idx : take) subset.push_back(train_set[idx]);

        SweepPoint point;
        point.fraction = f;
        point.examples_used = subset.size();

        const fs::path dir = fs::path(work_dir) / ("point_" + std::to_string(i));
        model::ParameterStore params = model::init_model(model_config);
        point.run = training::train_gsg(params, model_config, subset, val_set, train_config,
                                        dir.string());

        // Evaluate the best-validation epoch, not necessarily the last one.
        char name[32];
        std::snprintf(name, sizeof(name), "epoch_%04d.ckpt", point.run.best_epoch);
        const auto best = checkpoint::load_checkpoint((dir / name).string());
        model::copy_values(params, best.params);

        point.table = evaluate(test_split, make_generator(params)).table;
        points.push_back(std::move(point));
    }
    return points;
}

std::string sweep_csv(const std::vector<SweepPoint>& points) {
    std::string out = "fraction,examples";
    for (const char* col : metrics::kMetricColumns) {
        out += ',';
        out += col;
    }
    out += '\n';
    for (const SweepPoint& p : points) {
        out += fmt4(p.fraction);
        out += ',';
        out += std::to_string(p.examples_used);
        for (double v : p.table.per_pair) {
            out += ',';
            out += fmt4(v);
        }
        out += '\n';
    }
    return out;
}

std::string sweep_json(const std::vector<SweepPoint>& points) {
    auto arr = nlohmann::json::array();
    for (const SweepPoint& p : points) {
        nlohmann::json j;
        j["fraction"] = p.fraction;
        j["examples"] = p.examples_used;
        j["per_pair"] = row_json(p.table.per_pair);
        j["pooled"] = row_json(p.table.pooled);
        j["best_epoch"] = p.run.best_epoch;
        j["best_val"] = p.run.best_val;
        arr.push_back(std::move(j));
    }
    return arr.dump(2) + "\n";
}

}  // namespace radsum::eval
