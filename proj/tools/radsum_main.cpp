// Subcommand front end: one stage per invocation, a single JSON config, and
// a global seed. Failures print a one-line JSON error record to stderr and
// exit nonzero so callers can script against the pipeline.

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "radsum/pipeline.hpp"

namespace {

const char* stage_blurb(const std::string& name) {
    if (name == "prepare") return "parse, filter, and split the corpus; build the vocabulary";
    if (name == "gsg") return "build gap-sentence rows for the train and val splits";
    if (name == "pretrain") return "train the main model on the gap-sentence task";
    if (name == "fisher") return "estimate parameter curvature of the pretrained model";
    if (name == "finetune") return "anchored fine-tuning on findings -> impression";
    if (name == "unfreeze-ablate") return "gradual-unfreezing fine-tuning baseline";
    if (name == "distill") return "train the student against the fine-tuned teacher";
    if (name == "tag") return "extract keywords and join them against the concept table";
    if (name == "evaluate") return "score the configured checkpoint on the test split";
    if (name == "sweep") return "data-fraction sweep with per-fraction retraining";
    if (name == "stats") return "corpus statistics table";
    return "";
}

int fail(const std::string& stage, const std::string& message, int code) {
    nlohmann::json record;
    record["error"] = message;
    if (!stage.empty()) record["stage"] = stage;
    std::fprintf(stderr, "%s\n", record.dump().c_str());
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"radiology report summarization pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "runs";
    std::int64_t seed_flag = 0;
    std::int64_t limit_n = 0;

    app.add_option("--config", config_path, "pipeline config file (JSON)")->required();
    app.add_option("--seed", seed_flag, "override the config's global seed")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--limit-n", limit_n, "cap training-example counts")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--out", out_dir, "artifact directory (default: runs)");

    for (const auto& name : radsum::pipeline::stage_names()) {
        app.add_subcommand(name, stage_blurb(name))->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        return fail("", e.what(), e.get_exit_code());
    }

    const std::string stage = app.get_subcommands().front()->get_name();
    std::optional<std::uint64_t> seed_override;
    if (app.count("--seed") > 0) seed_override = static_cast<std::uint64_t>(seed_flag);

    try {
        const auto ctx = radsum::pipeline::make_context(config_path, out_dir, seed_override,
                                                        limit_n);
        const auto result = radsum::pipeline::run_stage(ctx, stage);
        std::printf("%s: ok, %zu output file(s), manifest %s\n", stage.c_str(),
                    result.outputs.size(), result.manifest_path.generic_string().c_str());
        return 0;
    } catch (const std::exception& e) {
        return fail(stage, e.what(), 1);
    }
}
