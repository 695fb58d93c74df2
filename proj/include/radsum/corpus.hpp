#pragma once

// Report corpus handling: JSONL parsing with a rejected-record sidecar,
// quality filtering, rule-based sentence segmentation, seeded 8:1:1
// splitting, and dataset statistics.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace radsum::corpus {

struct Report {
    std::string id;
    std::string findings;
    std::string impression;
};

// Ordered sentences, each a list of normalized tokens. Concatenating the
// sentences reproduces the normalized token stream of the source text.
struct SentenceSeq {
    std::vector<std::vector<std::string>> sentences;

    std::vector<std::string> flat() const;
    std::size_t size() const { return sentences.size(); }
    bool empty() const { return sentences.empty(); }
};

enum class CorpusFormat { jsonl };

struct RejectedRecord {
    std::string id;  // record id when present, else "line:<N>"
    std::string reason;
};

struct ParseResult {
    std::vector<Report> reports;
    std::vector<RejectedRecord> rejected;
};

// One JSON object per line with string keys id/findings/impression. Records
// that fail to parse, lack a required key, or reuse an id are diverted to
// the rejected sidecar and parsing continues. Throws on an unreadable file.
ParseResult parse_reports(const std::filesystem::path& path, CorpusFormat format);

struct FilterRules {
    int min_findings_words = 10;
    int min_impression_words = 2;
    // When false (default), only tokens containing an alphanumeric character
    // count toward the word minimums.
    bool count_punctuation = false;
};

struct FilterResult {
    std::vector<Report> kept;
    std::vector<std::pair<std::string, std::string>> dropped;  // (id, reason)
};

// Drop reasons, in the order the rules are checked: "missing-section"
// (either section empty after normalization), "short-findings",
// "short-impression". Input order is preserved in both outputs.
FilterResult filter_reports(const std::vector<Report>& reports, const FilterRules& rules = {});

// Lexical word count under the same normalization segment() uses.
int word_count(const std::string& text, bool count_punctuation = false);

// Abbreviations whose trailing period must neither detach nor end a
// sentence. Matching is case-insensitive (the text is lowercased first).
const std::vector<std::string>& default_guards();

// Lowercases, detaches leading/trailing ASCII punctuation from each
// whitespace token (guarded abbreviations stay atomic, as do interior
// characters such as the dot in "1.5"), and returns the flat token stream.
std::vector<std::string> normalize_tokens(const std::string& text,
                                          const std::vector<std::string>& guards =
                                              default_guards());

// normalize_tokens plus sentence boundaries: a sentence ends after a
// whitespace-delimited chunk whose detached trailing punctuation contains
// one of . ? ! — i.e. terminators followed by whitespace or end of text.
SentenceSeq segment(const std::string& text,
                    const std::vector<std::string>& guards = default_guards());

struct CorpusSplit {
    std::vector<std::string> train, val, test;  // report ids
    std::uint64_t seed = 0;
};

// Seeded shuffle then contiguous assignment: train takes ceil(0.8 N),
// val floor(0.1 N), test the remainder. Throws when fewer than 10 reports.
CorpusSplit split_corpus(const std::vector<Report>& reports, std::uint64_t seed);

struct SectionStats {
    double avg_sentences = 0.0;        // sentences per report
    double avg_words_per_sentence = 0.0;  // total words / total sentences
    double avg_source_words = 0.0;     // words per report
};

struct CorpusStats {
    std::size_t report_count = 0;
    // Absent (not zero) for an empty corpus.
    std::optional<SectionStats> findings;
    std::optional<SectionStats> impressions;
};

CorpusStats corpus_stats(const std::vector<Report>& reports);

// Single data row under a header naming the same columns as the stats
// table: sentences, words/sentence, and source words for each section.
std::string stats_csv(const std::string& dataset, const CorpusStats& stats);

// Optional pre-step for raw reports that carry section headers inline:
// case-insensitive "FINDINGS:" / "IMPRESSION:" markers, text up to the next
// header or end. Absent headers yield absent fields.
struct RawSections {
    std::optional<std::string> findings;
    std::optional<std::string> impression;
};

RawSections extract_sections(const std::string& raw_text);

}  // namespace radsum::corpus
