#pragma once

// Gap-sentence dataset construction: score each sentence against the rest of
// its document, pick the most pivotal ones, replace them with sentinel
// tokens, and emit (masked findings -> gap sentences) training pairs.

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "radsum/corpus.hpp"

namespace radsum::gsg {

struct PriorityScore {
    std::size_t sentence_index = 0;
    double w = 0.0;  // >= 0; exactly 0 for a single-sentence document
};

// How the ROUGE and BLEU components combine into one priority value.
enum class ScoreRule {
    sum,            // w = rouge1_f1 + bleu3 (default reading)
    harmonic_mean,  // w = 2ab/(a+b), the F1-style fold of the two components
};

struct ScoreConfig {
    ScoreRule rule = ScoreRule::sum;
    // false: the rest of the document is concatenated into one reference.
    // true: score against each other sentence separately and take the max
    // of each component.
    bool per_sentence_max = false;
};

// Scores sentence i of doc against the rest of the document: ROUGE-1 F1 plus
// smoothed BLEU-3, combined per config. Throws std::out_of_range for a bad
// index.
PriorityScore priority_score(std::size_t i, const corpus::SentenceSeq& doc,
                             const ScoreConfig& config = {});

struct MaskSet {
    std::vector<std::size_t> indices;  // ascending sentence positions
};

// Pure selection step: the k highest-scoring positions, ties broken toward
// the earlier position, returned in ascending order. Exposed separately so
// the ordering-only dependence (scale invariance) is directly testable.
MaskSet select_top_k(const std::vector<double>& w, std::size_t k);

// Number of masks for a document of the given sentence count:
// 3 when >= 5 sentences, 2 at exactly 4, 1 at 3 or fewer.
std::size_t mask_count_for(std::size_t sentence_count);

// Scores every sentence and applies the mask-count rule. Throws
// std::invalid_argument on an empty document.
MaskSet select_mask_set(const corpus::SentenceSeq& doc, const ScoreConfig& config = {});

// "<extra_id_k>"; k must be < 100 (the sentinel vocabulary is fixed).
std::string sentinel(std::size_t k);

struct MaskedExample {
    std::string masked_source;  // document with masked sentences replaced by sentinels
    std::string target;         // "<extra_id_0> <sentence> <extra_id_1> <sentence> ..."
    std::string original_id;
};

// Replaces each masked sentence (in document order) by the next sentinel and
// pairs the sentinels with the removed sentences in the target. All strings
// are space-joined normalized tokens, so splitting on whitespace recovers
// the exact token stream with sentinels atomic.
MaskedExample emit_masked_example(const corpus::SentenceSeq& doc, const MaskSet& mask_set,
                                  const std::string& report_id);

struct GsgRow {
    std::string id;
    std::string findings;         // normalized, space-joined
    std::string masked_findings;  // sentinels in place of gap sentences
    std::string gap_target;       // sentinel-tagged gap sentences
    std::string impression;       // normalized, space-joined
};

// One row per report, in corpus order.
std::vector<GsgRow> build_gsg_rows(const std::vector<corpus::Report>& reports,
                                   const ScoreConfig& config = {});

// Tab-separated file: header id/findings/masked_findings/gap_target/impression,
// then one row per report. An empty corpus writes the header only.
void write_gsg_dataset(const std::vector<GsgRow>& rows, const std::filesystem::path& path);

// Parses a file written by write_gsg_dataset. Throws on a malformed header
// or row.
std::vector<GsgRow> read_gsg_dataset(const std::filesystem::path& path);

// build_gsg_rows + write_gsg_dataset; returns the number of rows written.
std::size_t build_gsg_dataset(const std::vector<corpus::Report>& reports,
                              const std::filesystem::path& path,
                              const ScoreConfig& config = {});

}  // namespace radsum::gsg
