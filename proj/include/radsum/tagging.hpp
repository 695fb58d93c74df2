#pragma once

// Contextual tagging: TF-IDF keyword extraction over impression sections,
// concept-table loading (pipe-delimited, MRCONSO-style layout) with an
// English-only filter, keyword-to-concept tag assignment, and emission of a
// findings -> tags dataset usable as a seq2seq task.

#include <cstddef>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "radsum/corpus.hpp"

namespace radsum::tagging {

// ---------------------------------------------------------------------------
// TF-IDF
// ---------------------------------------------------------------------------

struct TfidfOptions {
    // Default weighting: raw term counts times ln(N/df). The smooth variant
    // uses ln((1+N)/(1+df)) + 1, which never reaches zero.
    bool smooth_idf = false;
    // Also index adjacent-token pairs ("pleural effusion") so multi-word
    // concept strings can fire under exact matching.
    bool bigrams = false;
};

struct TfidfModel {
    std::vector<std::string> terms;  // column -> term, lexicographic
    std::unordered_map<std::string, std::size_t> vocabulary;  // term -> column
    std::vector<double> idf;         // per column
    std::size_t doc_count = 0;
    TfidfOptions options;
};

// Fits document frequencies over tokenized documents. Throws on an empty
// corpus.
TfidfModel fit_tfidf(const std::vector<std::vector<std::string>>& documents,
                     const TfidfOptions& options = {});

// Raw-count tf * idf of one term within one document; 0 for unknown terms.
double tfidf_score(const TfidfModel& model, const std::vector<std::string>& document,
                   const std::string& term);

// Corpus-level keyword ranking: each term scored by its maximum per-document
// tf-idf, zero-score terms dropped, ties broken lexicographically, truncated
// to n. Throws when n < 1.
std::vector<std::string> top_keywords(const TfidfModel& model,
                                      const std::vector<std::vector<std::string>>& documents,
                                      std::size_t n);

// ---------------------------------------------------------------------------
// Concept table
// ---------------------------------------------------------------------------

struct ConceptRow {
    std::string cui;       // C + 7 digits
    std::string lat;       // language; only "ENG" survives loading
    std::string sab;       // source vocabulary
    std::string tty;       // term type
    std::string str;       // concept string as written
    std::string str_norm;  // lowercased/whitespace-collapsed, for matching
};

// Reads a pipe-delimited concept table: 18 fields per row (a trailing
// delimiter is tolerated), 1-indexed positions CUI=1, LAT=2, SAB=12, TTY=13,
// STR=15. Non-English rows are filtered out. Rows with the wrong field count
// or a malformed concept id are skipped, with a note appended to *warnings
// when given. Throws on an unreadable file.
std::vector<ConceptRow> load_concepts(const std::filesystem::path& path,
                                      std::vector<std::string>* warnings = nullptr);

// ---------------------------------------------------------------------------
// Tag assignment
// ---------------------------------------------------------------------------

struct Tag {
    std::string keyword;
    std::string cui;
    std::string str;  // the concept string the keyword matched
};

struct TagAssignment {
    std::string report_id;
    std::vector<Tag> tags;
};

// For each report: keywords that (a) match some concept row exactly after
// normalization and (b) occur in the report's impression, ordered by first
// occurrence position, one tag per keyword. When several concept rows share
// a normalized string, the first row in table order wins. Output is aligned
// with the input reports.
std::vector<TagAssignment> assign_tags(const std::vector<std::string>& keywords,
                                       const std::vector<ConceptRow>& concepts,
                                       const std::vector<corpus::Report>& reports);

// ---------------------------------------------------------------------------
// Tag dataset
// ---------------------------------------------------------------------------

struct TagRow {
    std::string id;
    std::string findings;
    std::string tags;  // space-joined keywords, or "none"
};

// Writes one JSON object per line: {id, findings, tags}. Reports with no
// tags get the literal target "none". Assignments are looked up by report
// id; reports without one are treated as untagged.
void build_tag_dataset(const std::vector<corpus::Report>& reports,
                       const std::vector<TagAssignment>& assignments,
                       const std::filesystem::path& out_path);

// Parses a file written by build_tag_dataset. Throws on unreadable input or
// a malformed row.
std::vector<TagRow> load_tag_dataset(const std::filesystem::path& path);

}  // namespace radsum::tagging
