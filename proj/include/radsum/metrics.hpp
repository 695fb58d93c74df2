#pragma once

// N-gram overlap metrics used both for sentence scoring during dataset
// construction and for final evaluation: ROUGE-1/2/L F1 and BLEU-1/2/3.
// All functions are pure and operate on pre-tokenized lowercase token lists.

#include <array>
#include <string>
#include <utility>
#include <vector>

namespace radsum::metrics {

using Tokens = std::vector<std::string>;

struct PRF {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

enum class BleuSmoothing {
    none,     // zero clipped counts make the score collapse to 0
    add_eps,  // zero clipped-count numerators replaced by 1e-9
};

struct BleuScore {
    // Modified (clipped) n-gram precisions p_1..p_N.
    std::vector<double> per_n;
    // 1 if candidate longer than the closest-length reference, else exp(1-r/c).
    double brevity_penalty = 0.0;
    // brevity_penalty * exp(mean of ln p_n), 0 when any p_n is 0.
    double score = 0.0;
    // True when the candidate is empty (no length for the brevity penalty).
    bool degenerate = false;
};

// Multiset n-gram overlap: precision against candidate n-grams, recall
// against reference n-grams. Either side having no n-grams gives all zeros.
// Throws std::invalid_argument when n < 1.
PRF rouge_n(const Tokens& candidate, const Tokens& reference, int n);

// Longest-common-subsequence variant: P = LCS/|candidate|, R = LCS/|reference|.
PRF rouge_l(const Tokens& candidate, const Tokens& reference);

// Clipped-precision BLEU with uniform weights 1/max_n. Clipping is against
// the maximum per-reference count; the brevity penalty uses the reference
// whose length is closest to the candidate's (ties -> shorter). A candidate
// with no n-grams of some order contributes p_n = 0 (none) or p_n = 1e-9
// (add_eps). Throws std::invalid_argument unless max_n is in {1,2,3,4} and
// at least one reference is given.
BleuScore bleu(const Tokens& candidate, const std::vector<Tokens>& references,
               int max_n, BleuSmoothing smoothing);

// Column order used in every report: R-1, R-2, R-L, B-1, B-2, B-3.
inline constexpr std::array<const char*, 6> kMetricColumns = {"R-1", "R-2", "R-L",
                                                              "B-1", "B-2", "B-3"};

struct MetricTable {
    // Mean over pairs of the per-pair value: ROUGE F1 per pair, and
    // sentence-level smoothed BLEU per pair. Scaled by 100.
    std::array<double, 6> per_pair{};
    // Micro-averaged: ROUGE from summed overlap/ngram counts; BLEU from
    // pooled clipped counts and pooled lengths (unsmoothed). Scaled by 100.
    std::array<double, 6> pooled{};
};

// Scores a corpus of (candidate, reference) pairs under both aggregation
// conventions. Throws std::invalid_argument on an empty pair list.
MetricTable corpus_scores(const std::vector<std::pair<Tokens, Tokens>>& pairs);

// Two labeled rows ("per_pair", "pooled") under a header row, one decimal
// place, matching the column order above.
std::string metric_csv(const MetricTable& table);

}  // namespace radsum::metrics
