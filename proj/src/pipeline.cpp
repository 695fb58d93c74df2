#include "radsum/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>
#include <unordered_map>
#include <utility>

#include "json.hpp"
#include "radsum/checkpoint.hpp"
#include "radsum/eval.hpp"
#include "radsum/hash.hpp"
#include "radsum/io.hpp"

namespace radsum::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

[[noreturn]] void type_error(const std::string& path, const std::string& expected) {
    throw std::invalid_argument("config: " + path + " expects " + expected);
}

std::uint64_t get_uint(const json& v, const std::string& path) {
    if (!v.is_number_unsigned()) type_error(path, "an unsigned integer");
    return v.get<std::uint64_t>();
}

int get_count(const json& v, const std::string& path) {
    return static_cast<int>(get_uint(v, path));
}

double get_number(const json& v, const std::string& path) {
    if (!v.is_number()) type_error(path, "a number");
    return v.get<double>();
}

bool get_bool(const json& v, const std::string& path) {
    if (!v.is_boolean()) type_error(path, "a boolean");
    return v.get<bool>();
}

std::string get_string(const json& v, const std::string& path) {
    if (!v.is_string()) type_error(path, "a string");
    return v.get<std::string>();
}

void parse_data(const json& section, DataConfig& out) {
    for (const auto& [key, value] : section.items()) {
        const std::string path = "data." + key;
        if (key == "reports") {
            out.reports = get_string(value, path);
        } else if (key == "concepts") {
            out.concepts = get_string(value, path);
        } else if (key == "max_vocab") {
            out.max_vocab = static_cast<std::size_t>(get_uint(value, path));
        } else if (key == "min_findings_words") {
            out.filter.min_findings_words = get_count(value, path);
        } else if (key == "min_impression_words") {
            out.filter.min_impression_words = get_count(value, path);
        } else if (key == "count_punctuation") {
            out.filter.count_punctuation = get_bool(value, path);
        } else {
            throw std::invalid_argument("config: unknown field " + path);
        }
    }
}

void parse_model(const json& section, const std::string& name, model::ModelConfig& out) {
    for (const auto& [key, value] : section.items()) {
        const std::string path = name + "." + key;
        if (key == "layers") {
            out.layers = get_count(value, path);
        } else if (key == "d_model") {
            out.d_model = get_count(value, path);
        } else if (key == "heads") {
            out.heads = get_count(value, path);
        } else if (key == "d_ff") {
            out.d_ff = get_count(value, path);
        } else if (key == "max_src") {
            out.max_src = get_count(value, path);
        } else if (key == "max_tgt") {
            out.max_tgt = get_count(value, path);
        } else if (key == "tie_output") {
            out.tie_output = get_bool(value, path);
        } else {
            throw std::invalid_argument("config: unknown field " + path);
        }
    }
}

void parse_train(const json& section, training::TrainConfig& out) {
    for (const auto& [key, value] : section.items()) {
        const std::string path = "train." + key;
        if (key == "epochs") {
            out.epochs = get_count(value, path);
        } else if (key == "batch_size") {
            out.batch_size = get_count(value, path);
        } else if (key == "lr") {
            out.lr = get_number(value, path);
        } else if (key == "weight_decay") {
            out.weight_decay = get_number(value, path);
        } else if (key == "beta1") {
            out.beta1 = get_number(value, path);
        } else if (key == "beta2") {
            out.beta2 = get_number(value, path);
        } else if (key == "eps") {
            out.eps = get_number(value, path);
        } else if (key == "clip_norm") {
            out.clip_norm = get_number(value, path);
        } else {
            throw std::invalid_argument("config: unknown field " + path);
        }
    }
}

training::AnchorSchedule schedule_from_name(const std::string& name, const std::string& path) {
    if (name == "linear_to_zero") return training::AnchorSchedule::linear_to_zero;
    if (name == "constant") return training::AnchorSchedule::constant;
    if (name == "exp_decay") return training::AnchorSchedule::exp_decay;
    type_error(path, "one of \"linear_to_zero\", \"constant\", \"exp_decay\"");
}

std::string schedule_name(training::AnchorSchedule schedule) {
    switch (schedule) {
        case training::AnchorSchedule::linear_to_zero: return "linear_to_zero";
        case training::AnchorSchedule::constant: return "constant";
        case training::AnchorSchedule::exp_decay: return "exp_decay";
    }
    return "linear_to_zero";
}

void parse_anchor(const json& section, AnchorConfig& out) {
    for (const auto& [key, value] : section.items()) {
        const std::string path = "anchor." + key;
        if (key == "lambda0") {
            out.lambda0 = get_number(value, path);
        } else if (key == "schedule") {
            out.schedule = schedule_from_name(get_string(value, path), path);
        } else if (key == "max_samples") {
            out.max_samples = static_cast<std::size_t>(get_uint(value, path));
        } else if (key == "sample_labels") {
            out.sample_labels = get_bool(value, path);
        } else {
            throw std::invalid_argument("config: unknown field " + path);
        }
    }
}

void parse_kd(const json& section, distillation::KDConfig& out) {
    for (const auto& [key, value] : section.items()) {
        const std::string path = "kd." + key;
        if (key == "alpha") {
            out.alpha = get_number(value, path);
        } else if (key == "temperature") {
            out.temperature = get_number(value, path);
        } else if (key == "reverse_kl") {
            out.reverse_kl = get_bool(value, path);
        } else {
            throw std::invalid_argument("config: unknown field " + path);
        }
    }
}

void parse_unfreeze(const json& section, training::UnfreezePlan& out) {
    out.clear();
    for (const auto& [key, value] : section.items()) {
        const std::string path = "unfreeze." + key;
        int epoch = 0;
        const auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), epoch);
        if (ec != std::errc() || ptr != key.data() + key.size() || epoch < 0) {
            type_error(path, "an unsigned-integer epoch key");
        }
        if (!value.is_array()) type_error(path, "an array of name prefixes");
        std::vector<std::string> prefixes;
        for (std::size_t i = 0; i < value.size(); ++i) {
            prefixes.push_back(get_string(value[i], path + "[" + std::to_string(i) + "]"));
        }
        out[epoch] = std::move(prefixes);
    }
}

void parse_tag(const json& section, TagConfig& out) {
    for (const auto& [key, value] : section.items()) {
        const std::string path = "tag." + key;
        if (key == "top_n") {
            out.top_n = static_cast<std::size_t>(get_uint(value, path));
        } else if (key == "bigrams") {
            out.tfidf.bigrams = get_bool(value, path);
        } else if (key == "smooth_idf") {
            out.tfidf.smooth_idf = get_bool(value, path);
        } else {
            throw std::invalid_argument("config: unknown field " + path);
        }
    }
}

void parse_sweep(const json& section, std::vector<double>& fractions) {
    for (const auto& [key, value] : section.items()) {
        const std::string path = "sweep." + key;
        if (key == "fractions") {
            if (!value.is_array()) type_error(path, "an array of numbers");
            fractions.clear();
            for (std::size_t i = 0; i < value.size(); ++i) {
                fractions.push_back(get_number(value[i], path + "[" + std::to_string(i) + "]"));
            }
        } else {
            throw std::invalid_argument("config: unknown field " + path);
        }
    }
}

void parse_evaluate(const json& section, std::string& eval_stage) {
    for (const auto& [key, value] : section.items()) {
        const std::string path = "evaluate." + key;
        if (key == "stage") {
            eval_stage = get_string(value, path);
            if (eval_stage != "finetune" && eval_stage != "unfreeze" && eval_stage != "distill") {
                type_error(path, "one of \"finetune\", \"unfreeze\", \"distill\"");
            }
        } else {
            throw std::invalid_argument("config: unknown field " + path);
        }
    }
}

PipelineConfig base_config() {
    PipelineConfig config;
    config.student.layers = 3;
    config.student.d_model = 128;
    config.student.heads = 4;
    config.student.d_ff = 512;
    config.student.max_src = config.model.max_src;
    config.student.max_tgt = config.model.max_tgt;
    return config;
}

// ---------------------------------------------------------------------------
// Artifact layout
// ---------------------------------------------------------------------------

fs::path prepared_path(const StageContext& ctx, const char* name) {
    return ctx.out_dir / "prepared" / name;
}

fs::path gsg_path(const StageContext& ctx, const char* name) {
    return ctx.out_dir / "gsg" / name;
}

void require_artifact(const fs::path& path, const std::string& producer) {
    if (!fs::exists(path)) {
        throw std::runtime_error("missing input: " + path.generic_string() + " (run the " +
                                 producer + " stage first)");
    }
}

void require_source(const std::string& path, const char* field) {
    if (path.empty()) {
        throw std::invalid_argument(std::string("config: data.") + field +
                                    " is required by this stage");
    }
    if (!fs::exists(path)) {
        throw std::runtime_error("missing input: " + path);
    }
}

// ---------------------------------------------------------------------------
// Manifest recording
// ---------------------------------------------------------------------------

class Manifest {
public:
    Manifest(const StageContext& ctx, std::string stage)
        : ctx_(&ctx), stage_(std::move(stage)) {}

    void input(const fs::path& path) { record(inputs_, path); }
    void output(const fs::path& path) { record(outputs_, path); }

    // Records every regular file under dir (sorted, recursive).
    void output_dir(const fs::path& dir) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::recursive_directory_iterator(dir)) {
            if (entry.is_regular_file()) files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) output(f);
    }

    StageResult write() const {
        json j;
        j["stage"] = stage_;
        j["config_hash"] = ctx_->config_hash;
        j["seed"] = ctx_->config.seed;
        j["inputs"] = json::object();
        for (const auto& [path, digest] : inputs_) j["inputs"][path] = digest;
        j["outputs"] = json::object();
        for (const auto& [path, digest] : outputs_) j["outputs"][path] = digest;

        const fs::path manifest_file = ctx_->out_dir / "manifests" / (stage_ + ".json");
        io::ensure_parent_dir(manifest_file.string());
        io::write_file_atomic(manifest_file.string(), j.dump(2) + "\n");
        return StageResult{stage_, inputs_, outputs_, manifest_file};
    }

private:
    // Artifacts under the output directory are keyed by their relative path
    // so manifests from different output directories stay comparable.
    std::string display_path(const fs::path& path) const {
        std::error_code ec;
        const fs::path rel = fs::relative(path, ctx_->out_dir, ec);
        if (!ec && !rel.empty() && rel.generic_string().rfind("..", 0) != 0) {
            return rel.generic_string();
        }
        return path.generic_string();
    }

    void record(std::map<std::string, std::string>& into, const fs::path& path) {
        into[display_path(path)] = hash::file_hash(path.string());
    }

    const StageContext* ctx_;
    std::string stage_;
    std::map<std::string, std::string> inputs_;
    std::map<std::string, std::string> outputs_;
};

// ---------------------------------------------------------------------------
// Shared stage plumbing
// ---------------------------------------------------------------------------

std::vector<corpus::Report> read_reports(const fs::path& path) {
    auto parsed = corpus::parse_reports(path, corpus::CorpusFormat::jsonl);
    if (!parsed.rejected.empty()) {
        throw std::runtime_error("corrupt artifact: " + path.generic_string() + " (" +
                                 parsed.rejected.front().reason + ")");
    }
    return std::move(parsed.reports);
}

std::string join_tokens(const std::vector<std::string>& tokens) {
    std::string joined;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) joined += ' ';
        joined += tokens[i];
    }
    return joined;
}

std::vector<std::string> split_ws(const std::string& text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && text[i] == ' ') ++i;
        std::size_t start = i;
        while (i < text.size() && text[i] != ' ') ++i;
        if (i > start) tokens.push_back(text.substr(start, i - start));
    }
    return tokens;
}

template <typename T>
void apply_limit(const StageContext& ctx, std::vector<T>& items) {
    if (ctx.limit_n > 0 && items.size() > static_cast<std::size_t>(ctx.limit_n)) {
        items.resize(static_cast<std::size_t>(ctx.limit_n));
    }
}

model::ModelConfig resolved_model(const StageContext& ctx, const vocab::Vocab& vocab,
                                  const char* init_label) {
    model::ModelConfig config = ctx.config.model;
    config.vocab_size = static_cast<int>(vocab.size());
    config.seed = stage_seed(ctx, init_label);
    return config;
}

model::ModelConfig resolved_student(const StageContext& ctx, const vocab::Vocab& vocab) {
    model::ModelConfig config = ctx.config.student;
    config.vocab_size = static_cast<int>(vocab.size());
    config.seed = stage_seed(ctx, "student-init");
    return config;
}

struct SummarizationData {
    vocab::Vocab vocab;
    std::vector<training::SeqExample> train;
    std::vector<training::SeqExample> val;
};

SummarizationData load_summarization_data(const StageContext& ctx, Manifest& manifest) {
    const fs::path train_path = prepared_path(ctx, "train.jsonl");
    const fs::path val_path = prepared_path(ctx, "val.jsonl");
    require_artifact(train_path, "prepare");
    require_artifact(val_path, "prepare");
    manifest.input(train_path);
    manifest.input(val_path);
    const fs::path vocab_path = prepared_path(ctx, "vocab.json");
    require_artifact(vocab_path, "prepare");
    manifest.input(vocab_path);

    SummarizationData data;
    data.vocab = vocab::load_vocab(vocab_path);
    data.train = encode_report_pairs(read_reports(train_path), data.vocab);
    data.val = encode_report_pairs(read_reports(val_path), data.vocab);
    apply_limit(ctx, data.train);
    return data;
}

model::ParameterStore load_weights(const fs::path& ckpt_path) {
    return std::move(checkpoint::load_checkpoint(ckpt_path.string()).params);
}

}  // namespace

// ---------------------------------------------------------------------------
// Config API
// ---------------------------------------------------------------------------

PipelineConfig parse_config(const std::string& json_text) {
    json root = json::parse(json_text, nullptr, false);
    if (root.is_discarded()) throw std::invalid_argument("config: not valid JSON");
    if (!root.is_object()) type_error("top level", "an object");

    PipelineConfig config = base_config();

    // The model section is applied first so the student's sequence limits
    // can default to the main model's regardless of key order.
    if (root.contains("model")) {
        if (!root["model"].is_object()) type_error("model", "an object");
        parse_model(root["model"], "model", config.model);
        config.student.max_src = config.model.max_src;
        config.student.max_tgt = config.model.max_tgt;
    }

    for (const auto& [key, value] : root.items()) {
        if (key == "seed") {
            config.seed = get_uint(value, "seed");
        } else if (key == "data") {
            if (!value.is_object()) type_error("data", "an object");
            parse_data(value, config.data);
        } else if (key == "model") {
            // handled above
        } else if (key == "student") {
            if (!value.is_object()) type_error("student", "an object");
            parse_model(value, "student", config.student);
        } else if (key == "train") {
            if (!value.is_object()) type_error("train", "an object");
            parse_train(value, config.train);
        } else if (key == "anchor") {
            if (!value.is_object()) type_error("anchor", "an object");
            parse_anchor(value, config.anchor);
        } else if (key == "kd") {
            if (!value.is_object()) type_error("kd", "an object");
            parse_kd(value, config.kd);
        } else if (key == "unfreeze") {
            if (!value.is_object()) type_error("unfreeze", "an object");
            parse_unfreeze(value, config.unfreeze);
        } else if (key == "tag") {
            if (!value.is_object()) type_error("tag", "an object");
            parse_tag(value, config.tag);
        } else if (key == "sweep") {
            if (!value.is_object()) type_error("sweep", "an object");
            parse_sweep(value, config.fractions);
        } else if (key == "evaluate") {
            if (!value.is_object()) type_error("evaluate", "an object");
            parse_evaluate(value, config.eval_stage);
        } else {
            throw std::invalid_argument("config: unknown field " + key);
        }
    }
    return config;
}

PipelineConfig load_config(const fs::path& path) {
    return parse_config(io::read_text_file(path.string()));
}

std::string config_json(const PipelineConfig& config) {
    json j;
    j["seed"] = config.seed;
    j["data"] = {{"reports", config.data.reports},
                 {"concepts", config.data.concepts},
                 {"max_vocab", config.data.max_vocab},
                 {"min_findings_words", config.data.filter.min_findings_words},
                 {"min_impression_words", config.data.filter.min_impression_words},
                 {"count_punctuation", config.data.filter.count_punctuation}};
    auto model_json = [](const model::ModelConfig& m) {
        return json{{"layers", m.layers},   {"d_model", m.d_model}, {"heads", m.heads},
                    {"d_ff", m.d_ff},       {"max_src", m.max_src}, {"max_tgt", m.max_tgt},
                    {"tie_output", m.tie_output}};
    };
    j["model"] = model_json(config.model);
    j["student"] = model_json(config.student);
    j["train"] = {{"epochs", config.train.epochs},
                  {"batch_size", config.train.batch_size},
                  {"lr", config.train.lr},
                  {"weight_decay", config.train.weight_decay},
                  {"beta1", config.train.beta1},
                  {"beta2", config.train.beta2},
                  {"eps", config.train.eps},
                  {"clip_norm", config.train.clip_norm}};
    j["anchor"] = {{"lambda0", config.anchor.lambda0},
                   {"schedule", schedule_name(config.anchor.schedule)},
                   {"max_samples", config.anchor.max_samples},
                   {"sample_labels", config.anchor.sample_labels}};
    j["kd"] = {{"alpha", config.kd.alpha},
               {"temperature", config.kd.temperature},
               {"reverse_kl", config.kd.reverse_kl}};
    j["unfreeze"] = json::object();
    for (const auto& [epoch, prefixes] : config.unfreeze) {
        j["unfreeze"][std::to_string(epoch)] = prefixes;
    }
    j["tag"] = {{"top_n", config.tag.top_n},
                {"bigrams", config.tag.tfidf.bigrams},
                {"smooth_idf", config.tag.tfidf.smooth_idf}};
    j["sweep"] = {{"fractions", config.fractions}};
    j["evaluate"] = {{"stage", config.eval_stage}};
    return j.dump(2) + "\n";
}

StageContext make_context(const fs::path& config_path, const fs::path& out_dir,
                          std::optional<std::uint64_t> seed_override, std::int64_t limit_n) {
    StageContext ctx;
    ctx.config = load_config(config_path);
    if (seed_override) ctx.config.seed = *seed_override;
    ctx.config_hash = hash::to_hex(hash::fnv1a64(config_json(ctx.config)));
    ctx.out_dir = out_dir;
    ctx.limit_n = limit_n;
    return ctx;
}

std::uint64_t stage_seed(const StageContext& ctx, std::string_view label) {
    return hash::derive_seed(ctx.config.seed, label);
}

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

std::vector<training::SeqExample> encode_gsg_rows(const std::vector<gsg::GsgRow>& rows,
                                                  const vocab::Vocab& vocab) {
    std::vector<training::SeqExample> examples;
    examples.reserve(rows.size());
    for (const auto& row : rows) {
        examples.push_back({vocab::encode_tokens(vocab, split_ws(row.masked_findings)),
                            vocab::encode_tokens(vocab, split_ws(row.gap_target))});
    }
    return examples;
}

std::vector<training::SeqExample> encode_report_pairs(const std::vector<corpus::Report>& reports,
                                                      const vocab::Vocab& vocab) {
    std::vector<training::SeqExample> examples;
    examples.reserve(reports.size());
    for (const auto& report : reports) {
        examples.push_back(
            {vocab::encode_tokens(vocab, corpus::normalize_tokens(report.findings)),
             vocab::encode_tokens(vocab, corpus::normalize_tokens(report.impression))});
    }
    return examples;
}

void write_reports(const std::vector<corpus::Report>& reports, const fs::path& path) {
    std::string body;
    for (const auto& report : reports) {
        json j;
        j["id"] = report.id;
        j["findings"] = report.findings;
        j["impression"] = report.impression;
        body += j.dump();
        body += '\n';
    }
    io::ensure_parent_dir(path.string());
    io::write_file_atomic(path.string(), body);
}

fs::path best_checkpoint(const fs::path& train_dir) {
    const fs::path manifest_file = train_dir / "manifest.json";
    const std::string where = train_dir.generic_string();
    if (!fs::exists(manifest_file)) {
        throw std::runtime_error("missing checkpoint: no training manifest under " + where);
    }
    json j = json::parse(io::read_text_file(manifest_file.string()), nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("best_epoch") ||
        !j["best_epoch"].is_number_integer()) {
        throw std::runtime_error("missing checkpoint: unreadable training manifest under " +
                                 where);
    }
    const int best_epoch = j["best_epoch"].get<int>();
    char name[32];
    std::snprintf(name, sizeof(name), "epoch_%04d.ckpt", best_epoch);
    const fs::path ckpt = train_dir / name;
    if (best_epoch < 0 || !fs::exists(ckpt)) {
        throw std::runtime_error("missing checkpoint: " + ckpt.generic_string());
    }
    return ckpt;
}

void save_fisher(const training::FisherDiag& fisher, std::size_t samples, const fs::path& path) {
    json j;
    j["version"] = 1;
    j["samples"] = samples;
    json entries = json::array();
    for (const auto& [name, values] : fisher.diag) {
        entries.push_back({{"name", name}, {"values", values}});
    }
    j["entries"] = std::move(entries);
    io::ensure_parent_dir(path.string());
    io::write_file_atomic(path.string(), j.dump() + "\n");
}

training::FisherDiag load_fisher(const fs::path& path) {
    json j = json::parse(io::read_text_file(path.string()), nullptr, false);
    if (j.is_discarded() || !j.is_object() || j.value("version", 0) != 1 ||
        !j.contains("entries") || !j["entries"].is_array()) {
        throw std::runtime_error("unreadable curvature file: " + path.generic_string());
    }
    training::FisherDiag fisher;
    for (const auto& entry : j["entries"]) {
        if (!entry.is_object() || !entry.contains("name") || !entry.contains("values")) {
            throw std::runtime_error("unreadable curvature file: " + path.generic_string());
        }
        fisher.diag.emplace_back(entry["name"].get<std::string>(),
                                 entry["values"].get<std::vector<double>>());
    }
    return fisher;
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

StageResult run_prepare(const StageContext& ctx) {
    Manifest manifest(ctx, "prepare");
    require_source(ctx.config.data.reports, "reports");
    manifest.input(ctx.config.data.reports);

    auto parsed = corpus::parse_reports(ctx.config.data.reports, corpus::CorpusFormat::jsonl);
    auto filtered = corpus::filter_reports(parsed.reports, ctx.config.data.filter);
    auto split = corpus::split_corpus(filtered.kept, stage_seed(ctx, "split"));

    std::unordered_map<std::string, const corpus::Report*> by_id;
    for (const auto& report : filtered.kept) by_id[report.id] = &report;
    auto materialize = [&](const std::vector<std::string>& ids) {
        std::vector<corpus::Report> reports;
        reports.reserve(ids.size());
        for (const auto& id : ids) reports.push_back(*by_id.at(id));
        return reports;
    };
    const auto train = materialize(split.train);
    const auto val = materialize(split.val);
    const auto test = materialize(split.test);

    write_reports(train, prepared_path(ctx, "train.jsonl"));
    write_reports(val, prepared_path(ctx, "val.jsonl"));
    write_reports(test, prepared_path(ctx, "test.jsonl"));

    std::string rejected;
    auto reject_line = [&rejected](const std::string& id, const std::string& reason) {
        json j;
        j["id"] = id;
        j["reason"] = reason;
        rejected += j.dump();
        rejected += '\n';
    };
    for (const auto& record : parsed.rejected) reject_line(record.id, record.reason);
    for (const auto& [id, reason] : filtered.dropped) reject_line(id, reason);
    const fs::path rejected_path = prepared_path(ctx, "rejected.jsonl");
    io::ensure_parent_dir(rejected_path.string());
    io::write_file_atomic(rejected_path.string(), rejected);

    std::vector<std::string> texts;
    texts.reserve(train.size() * 2);
    for (const auto& report : train) {
        texts.push_back(join_tokens(corpus::normalize_tokens(report.findings)));
        texts.push_back(join_tokens(corpus::normalize_tokens(report.impression)));
    }
    const auto vocabulary = vocab::build_vocab(texts, ctx.config.data.max_vocab);
    const fs::path vocab_path = prepared_path(ctx, "vocab.json");
    vocab::save_vocab(vocabulary, vocab_path);

    manifest.output(prepared_path(ctx, "train.jsonl"));
    manifest.output(prepared_path(ctx, "val.jsonl"));
    manifest.output(prepared_path(ctx, "test.jsonl"));
    manifest.output(rejected_path);
    manifest.output(vocab_path);
    return manifest.write();
}

StageResult run_gsg(const StageContext& ctx) {
    Manifest manifest(ctx, "gsg");
    const fs::path train_path = prepared_path(ctx, "train.jsonl");
    const fs::path val_path = prepared_path(ctx, "val.jsonl");
    require_artifact(train_path, "prepare");
    require_artifact(val_path, "prepare");
    manifest.input(train_path);
    manifest.input(val_path);

    const fs::path gsg_train = gsg_path(ctx, "train.tsv");
    const fs::path gsg_val = gsg_path(ctx, "val.tsv");
    io::ensure_parent_dir(gsg_train.string());
    gsg::build_gsg_dataset(read_reports(train_path), gsg_train);
    gsg::build_gsg_dataset(read_reports(val_path), gsg_val);

    manifest.output(gsg_train);
    manifest.output(gsg_val);
    return manifest.write();
}

StageResult run_pretrain(const StageContext& ctx) {
    Manifest manifest(ctx, "pretrain");
    const fs::path gsg_train = gsg_path(ctx, "train.tsv");
    const fs::path gsg_val = gsg_path(ctx, "val.tsv");
    require_artifact(gsg_train, "gsg");
    require_artifact(gsg_val, "gsg");
    manifest.input(gsg_train);
    manifest.input(gsg_val);
    const fs::path vocab_path = prepared_path(ctx, "vocab.json");
    require_artifact(vocab_path, "prepare");
    manifest.input(vocab_path);

    const auto vocabulary = vocab::load_vocab(vocab_path);
    auto train = encode_gsg_rows(gsg::read_gsg_dataset(gsg_train), vocabulary);
    const auto val = encode_gsg_rows(gsg::read_gsg_dataset(gsg_val), vocabulary);
    apply_limit(ctx, train);

    const auto config = resolved_model(ctx, vocabulary, "model-init");
    auto params = model::init_model(config);
    training::TrainConfig tc = ctx.config.train;
    tc.seed = stage_seed(ctx, "pretrain");

    const fs::path train_dir = ctx.out_dir / "pretrain";
    training::train_gsg(params, config, train, val, tc, train_dir.string());

    manifest.output_dir(train_dir);
    return manifest.write();
}

StageResult run_fisher(const StageContext& ctx) {
    Manifest manifest(ctx, "fisher");
    const fs::path ckpt = best_checkpoint(ctx.out_dir / "pretrain");
    manifest.input(ckpt);
    const fs::path gsg_train = gsg_path(ctx, "train.tsv");
    require_artifact(gsg_train, "gsg");
    manifest.input(gsg_train);
    const fs::path vocab_path = prepared_path(ctx, "vocab.json");
    require_artifact(vocab_path, "prepare");
    manifest.input(vocab_path);

    const auto vocabulary = vocab::load_vocab(vocab_path);
    auto samples = encode_gsg_rows(gsg::read_gsg_dataset(gsg_train), vocabulary);
    if (ctx.config.anchor.max_samples > 0 && samples.size() > ctx.config.anchor.max_samples) {
        samples.resize(ctx.config.anchor.max_samples);
    }
    apply_limit(ctx, samples);

    const auto config = resolved_model(ctx, vocabulary, "model-init");
    const auto params = load_weights(ckpt);
    training::FisherOptions options;
    options.sample_labels = ctx.config.anchor.sample_labels;
    options.seed = stage_seed(ctx, "fisher");
    const auto fisher = training::estimate_fisher(params, config, samples, options);

    const fs::path fisher_path = ctx.out_dir / "fisher" / "fisher.json";
    save_fisher(fisher, samples.size(), fisher_path);
    manifest.output(fisher_path);
    return manifest.write();
}

StageResult run_finetune(const StageContext& ctx) {
    Manifest manifest(ctx, "finetune");
    const fs::path ckpt = best_checkpoint(ctx.out_dir / "pretrain");
    manifest.input(ckpt);
    const fs::path fisher_path = ctx.out_dir / "fisher" / "fisher.json";
    require_artifact(fisher_path, "fisher");
    manifest.input(fisher_path);
    auto data = load_summarization_data(ctx, manifest);

    const auto config = resolved_model(ctx, data.vocab, "model-init");
    auto params = load_weights(ckpt);
    const auto anchor = training::make_anchor(params, load_fisher(fisher_path),
                                              ctx.config.anchor.lambda0,
                                              ctx.config.anchor.schedule);
    training::TrainConfig tc = ctx.config.train;
    tc.seed = stage_seed(ctx, "finetune");

    const fs::path train_dir = ctx.out_dir / "finetune";
    training::finetune_summarization(params, config, anchor, data.train, data.val, tc,
                                     train_dir.string());

    manifest.output_dir(train_dir);
    return manifest.write();
}

StageResult run_unfreeze(const StageContext& ctx) {
    Manifest manifest(ctx, "unfreeze-ablate");
    const fs::path ckpt = best_checkpoint(ctx.out_dir / "pretrain");
    manifest.input(ckpt);
    auto data = load_summarization_data(ctx, manifest);

    const auto config = resolved_model(ctx, data.vocab, "model-init");
    auto params = load_weights(ckpt);
    training::TrainConfig tc = ctx.config.train;
    tc.seed = stage_seed(ctx, "unfreeze");

    const fs::path train_dir = ctx.out_dir / "unfreeze";
    training::layer_unfreeze_finetune(params, config, ctx.config.unfreeze, data.train, data.val,
                                      tc, train_dir.string());

    manifest.output_dir(train_dir);
    return manifest.write();
}

StageResult run_distill(const StageContext& ctx) {
    Manifest manifest(ctx, "distill");
    const fs::path teacher_ckpt = best_checkpoint(ctx.out_dir / "finetune");
    manifest.input(teacher_ckpt);
    auto data = load_summarization_data(ctx, manifest);

    const auto teacher_config = resolved_model(ctx, data.vocab, "model-init");
    const auto student_config = resolved_student(ctx, data.vocab);
    const auto teacher = load_weights(teacher_ckpt);
    training::TrainConfig tc = ctx.config.train;
    tc.seed = stage_seed(ctx, "distill");

    const fs::path train_dir = ctx.out_dir / "distill";
    distillation::distill(teacher, teacher_config, student_config, data.train, data.val,
                          ctx.config.kd, tc, train_dir.string());

    manifest.output_dir(train_dir);
    return manifest.write();
}

StageResult run_tag(const StageContext& ctx) {
    Manifest manifest(ctx, "tag");
    const fs::path train_path = prepared_path(ctx, "train.jsonl");
    require_artifact(train_path, "prepare");
    manifest.input(train_path);
    require_source(ctx.config.data.concepts, "concepts");
    manifest.input(ctx.config.data.concepts);

    const auto reports = read_reports(train_path);
    std::vector<std::vector<std::string>> documents;
    documents.reserve(reports.size());
    for (const auto& report : reports) {
        documents.push_back(corpus::normalize_tokens(report.impression));
    }
    const auto tfidf = tagging::fit_tfidf(documents, ctx.config.tag.tfidf);
    const auto keywords = tagging::top_keywords(tfidf, documents, ctx.config.tag.top_n);

    std::vector<std::string> warnings;
    const auto concepts = tagging::load_concepts(ctx.config.data.concepts, &warnings);
    const auto assignments = tagging::assign_tags(keywords, concepts, reports);

    const fs::path keywords_path = ctx.out_dir / "tag" / "keywords.txt";
    std::string keyword_lines;
    for (const auto& keyword : keywords) {
        keyword_lines += keyword;
        keyword_lines += '\n';
    }
    io::ensure_parent_dir(keywords_path.string());
    io::write_file_atomic(keywords_path.string(), keyword_lines);

    const fs::path warnings_path = ctx.out_dir / "tag" / "warnings.txt";
    std::string warning_lines;
    for (const auto& warning : warnings) {
        warning_lines += warning;
        warning_lines += '\n';
    }
    io::write_file_atomic(warnings_path.string(), warning_lines);

    const fs::path tags_path = ctx.out_dir / "tag" / "tags.jsonl";
    tagging::build_tag_dataset(reports, assignments, tags_path);

    manifest.output(keywords_path);
    manifest.output(warnings_path);
    manifest.output(tags_path);
    return manifest.write();
}

StageResult run_evaluate(const StageContext& ctx) {
    Manifest manifest(ctx, "evaluate");
    const std::string stage = ctx.config.eval_stage;
    const fs::path ckpt = best_checkpoint(ctx.out_dir / stage);
    manifest.input(ckpt);
    const fs::path test_path = prepared_path(ctx, "test.jsonl");
    require_artifact(test_path, "prepare");
    manifest.input(test_path);
    const fs::path vocab_path = prepared_path(ctx, "vocab.json");
    require_artifact(vocab_path, "prepare");
    manifest.input(vocab_path);

    const auto vocabulary = vocab::load_vocab(vocab_path);
    const auto config = stage == "distill" ? resolved_student(ctx, vocabulary)
                                           : resolved_model(ctx, vocabulary, "model-init");
    const auto params = load_weights(ckpt);
    const auto generate = eval::model_generator(params, config, vocabulary);
    const auto result = eval::evaluate(read_reports(test_path), generate);

    const fs::path eval_dir = ctx.out_dir / "evaluate";
    const fs::path csv_path = eval_dir / "eval.csv";
    const fs::path examples_path = eval_dir / "examples.csv";
    const fs::path json_path = eval_dir / "eval.json";
    io::ensure_parent_dir(csv_path.string());
    io::write_file_atomic(csv_path.string(), eval::eval_csv(result));
    io::write_file_atomic(examples_path.string(), eval::examples_csv(result));
    io::write_file_atomic(json_path.string(), eval::eval_json(result));

    manifest.output(csv_path);
    manifest.output(examples_path);
    manifest.output(json_path);
    return manifest.write();
}

StageResult run_sweep(const StageContext& ctx) {
    Manifest manifest(ctx, "sweep");
    auto data = load_summarization_data(ctx, manifest);
    const fs::path test_path = prepared_path(ctx, "test.jsonl");
    require_artifact(test_path, "prepare");
    manifest.input(test_path);
    const auto test_reports = read_reports(test_path);

    const auto config = resolved_model(ctx, data.vocab, "sweep-init");
    training::TrainConfig tc = ctx.config.train;
    tc.seed = stage_seed(ctx, "sweep-train");
    const auto vocabulary = data.vocab;
    const auto factory = [config, vocabulary](const model::ParameterStore& params) {
        return eval::model_generator(params, config, vocabulary);
    };

    const fs::path points_dir = ctx.out_dir / "sweep" / "points";
    const auto points =
        eval::data_fraction_sweep(data.train, data.val, test_reports, ctx.config.fractions,
                                  config, tc, factory, points_dir.string(),
                                  stage_seed(ctx, "sweep"));

    const fs::path csv_path = ctx.out_dir / "sweep" / "sweep.csv";
    const fs::path json_path = ctx.out_dir / "sweep" / "sweep.json";
    io::write_file_atomic(csv_path.string(), eval::sweep_csv(points));
    io::write_file_atomic(json_path.string(), eval::sweep_json(points));

    manifest.output(csv_path);
    manifest.output(json_path);
    manifest.output_dir(points_dir);
    return manifest.write();
}

StageResult run_stats(const StageContext& ctx) {
    Manifest manifest(ctx, "stats");
    require_source(ctx.config.data.reports, "reports");
    manifest.input(ctx.config.data.reports);

    const auto parsed = corpus::parse_reports(ctx.config.data.reports, corpus::CorpusFormat::jsonl);
    const auto filtered = corpus::filter_reports(parsed.reports, ctx.config.data.filter);
    const auto stats = corpus::corpus_stats(filtered.kept);
    const std::string dataset = fs::path(ctx.config.data.reports).stem().string();

    const fs::path csv_path = ctx.out_dir / "stats" / "stats.csv";
    io::ensure_parent_dir(csv_path.string());
    io::write_file_atomic(csv_path.string(), corpus::stats_csv(dataset, stats));

    manifest.output(csv_path);
    return manifest.write();
}

const std::vector<std::string>& stage_names() {
    static const std::vector<std::string> names = {
        "prepare", "gsg",     "pretrain", "fisher",   "finetune", "unfreeze-ablate",
        "distill", "tag",     "evaluate", "sweep",    "stats"};
    return names;
}

StageResult run_stage(const StageContext& ctx, const std::string& stage) {
    if (stage == "prepare") return run_prepare(ctx);
    if (stage == "gsg") return run_gsg(ctx);
    if (stage == "pretrain") return run_pretrain(ctx);
    if (stage == "fisher") return run_fisher(ctx);
    if (stage == "finetune") return run_finetune(ctx);
    if (stage == "unfreeze-ablate") return run_unfreeze(ctx);
    if (stage == "distill") return run_distill(ctx);
    if (stage == "tag") return run_tag(ctx);
    if (stage == "evaluate") return run_evaluate(ctx);
    if (stage == "sweep") return run_sweep(ctx);
    if (stage == "stats") return run_stats(ctx);
    throw std::invalid_argument("unknown stage: " + stage);
}

}  // namespace radsum::pipeline
