#include "radsum/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <unordered_map>

namespace radsum::metrics {

namespace {

constexpr double kEps = 1e-9;

using CountMap = std::unordered_map<std::string, int>;

// N-grams keyed by their tokens joined with an unprintable separator, so the
// map never confuses ["ab","c"] with ["a","bc"].
CountMap ngram_counts(const Tokens& toks, int n) {
    CountMap counts;
    const auto un = static_cast<std::size_t>(n);
    if (toks.size() < un) return counts;
    for (std::size_t i = 0; i + un <= toks.size(); ++i) {
        std::string key = toks[i];
        for (std::size_t j = 1; j < un; ++j) {
            key += '\x1f';
            key += toks[i + j];
        }
        counts[key] += 1;
    }
    return counts;
}

std::int64_t ngram_total(const Tokens& toks, int n) {
    const auto len = static_cast<std::int64_t>(toks.size());
    return len >= n ? len - n + 1 : 0;
}

std::int64_t overlap_count(const CountMap& a, const CountMap& b) {
    std::int64_t total = 0;
    for (const auto& [gram, count] : a) {
        auto it = b.find(gram);
        if (it != b.end()) total += std::min(count, it->second);
    }
    return total;
}

double ratio(std::int64_t num, std::int64_t den) {
    return den > 0 ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
}

double f1_of(double p, double r) {
    return (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

std::int64_t lcs_length(const Tokens& a, const Tokens& b) {
    if (a.empty() || b.empty()) return 0;
    // Two rolling rows keep the quadratic DP at linear memory.
    std::vector<std::int64_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            if (a[i - 1] == b[j - 1]) {
                cur[j] = prev[j - 1] + 1;
            } else {
                cur[j] = std::max(prev[j], cur[j - 1]);
            }
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

double smoothed_precision(std::int64_t num, std::int64_t den, BleuSmoothing smoothing) {
    if (den > 0) {
        if (num > 0) return static_cast<double>(num) / static_cast<double>(den);
        return smoothing == BleuSmoothing::add_eps ? kEps / static_cast<double>(den) : 0.0;
    }
    return smoothing == BleuSmoothing::add_eps ? kEps : 0.0;
}

double brevity_penalty_of(std::int64_t c, std::int64_t r) {
    return c > r ? 1.0 : std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c));
}

double fold_bleu(const std::vector<double>& per_n, double bp) {
    double log_sum = 0.0;
    for (double p : per_n) {
        if (p <= 0.0) return 0.0;
        log_sum += std::log(p);
    }
    return bp * std::exp(log_sum / static_cast<double>(per_n.size()));
}

}  // namespace

PRF rouge_n(const Tokens& candidate, const Tokens& reference, int n) {
    if (n < 1) {
        throw std::invalid_argument("rouge_n: n must be >= 1, got " + std::to_string(n));
    }
    const std::int64_t overlap = overlap_count(ngram_counts(candidate, n),
                                               ngram_counts(reference, n));
    PRF out;
    out.precision = ratio(overlap, ngram_total(candidate, n));
    out.recall = ratio(overlap, ngram_total(reference, n));
    out.f1 = f1_of(out.precision, out.recall);
    return out;
}

PRF rouge_l(const Tokens& candidate, const Tokens& reference) {
    const std::int64_t lcs = lcs_length(candidate, reference);
    PRF out;
    out.precision = ratio(lcs, static_cast<std::int64_t>(candidate.size()));
    out.recall = ratio(lcs, static_cast<std::int64_t>(reference.size()));
    out.f1 = f1_of(out.precision, out.recall);
    return out;
}

BleuScore bleu(const Tokens& candidate, const std::vector<Tokens>& references, int max_n,
               BleuSmoothing smoothing) {
    if (max_n < 1 || max_n > 4) {
        throw std::invalid_argument("bleu: max_n must be in {1,2,3,4}, got " +
                                    std::to_string(max_n));
    }
    if (references.empty()) {
        throw std::invalid_argument("bleu: at least one reference required");
    }

    BleuScore out;
    out.per_n.assign(static_cast<std::size_t>(max_n), 0.0);
    if (candidate.empty()) {
        out.degenerate = true;
        return out;  // no candidate length, so no defined brevity penalty
    }

    for (int n = 1; n <= max_n; ++n) {
        const CountMap cand_counts = ngram_counts(candidate, n);
        std::vector<CountMap> ref_counts;
        ref_counts.reserve(references.size());
        for (const auto& ref : references) ref_counts.push_back(ngram_counts(ref, n));
        std::int64_t num = 0;
        for (const auto& [gram, count] : cand_counts) {
            int best = 0;
            for (const auto& rc : ref_counts) {
                auto it = rc.find(gram);
                if (it != rc.end()) best = std::max(best, it->second);
            }
            num += std::min(count, best);
        }
        out.per_n[static_cast<std::size_t>(n - 1)] =
            smoothed_precision(num, ngram_total(candidate, n), smoothing);
    }

    const auto c = static_cast<std::int64_t>(candidate.size());
    std::int64_t r = static_cast<std::int64_t>(references[0].size());
    for (const auto& ref : references) {
        const auto len = static_cast<std::int64_t>(ref.size());
        const std::int64_t best_gap = std::llabs(r - c);
        const std::int64_t gap = std::llabs(len - c);
        if (gap < best_gap || (gap == best_gap && len < r)) r = len;
    }
    out.brevity_penalty = brevity_penalty_of(c, r);
    out.score = fold_bleu(out.per_n, out.brevity_penalty);
    return out;
}

MetricTable corpus_scores(const std::vector<std::pair<Tokens, Tokens>>& pairs) {
    if (pairs.empty()) {
        throw std::invalid_argument("corpus_scores: empty pair list");
    }

    MetricTable table;
    std::array<double, 6> sums{};

    // Pooled tallies: overlap/candidate/reference n-gram counts for the two
    // ROUGE orders, LCS and lengths for ROUGE-L, clipped counts per BLEU
    // order plus total lengths for the pooled brevity penalty.
    std::array<std::int64_t, 2> r_overlap{}, r_cand{}, r_ref{};
    std::int64_t lcs_sum = 0, cand_len_sum = 0, ref_len_sum = 0;
    std::array<std::int64_t, 3> b_num{}, b_den{};

    for (const auto& [cand, ref] : pairs) {
        const PRF r1 = rouge_n(cand, ref, 1);
        const PRF r2 = rouge_n(cand, ref, 2);
        const PRF rl = rouge_l(cand, ref);
        sums[0] += r1.f1;
        sums[1] += r2.f1;
        sums[2] += rl.f1;
        for (int max_n = 1; max_n <= 3; ++max_n) {
            sums[static_cast<std::size_t>(2 + max_n)] +=
                bleu(cand, {ref}, max_n, BleuSmoothing::add_eps).score;
        }

        for (int n = 1; n <= 2; ++n) {
            const auto i = static_cast<std::size_t>(n - 1);
            r_overlap[i] += overlap_count(ngram_counts(cand, n), ngram_counts(ref, n));
            r_cand[i] += ngram_total(cand, n);
            r_ref[i] += ngram_total(ref, n);
        }
        lcs_sum += lcs_length(cand, ref);
        cand_len_sum += static_cast<std::int64_t>(cand.size());
        ref_len_sum += static_cast<std::int64_t>(ref.size());
        for (int n = 1; n <= 3; ++n) {
            const CountMap cc = ngram_counts(cand, n);
            const CountMap rc = ngram_counts(ref, n);
            const auto i = static_cast<std::size_t>(n - 1);
            b_num[i] += overlap_count(cc, rc);  // single reference: clip == min
            b_den[i] += ngram_total(cand, n);
        }
    }

    const auto count = static_cast<double>(pairs.size());
    for (std::size_t i = 0; i < 6; ++i) table.per_pair[i] = sums[i] / count * 100.0;

    for (int n = 1; n <= 2; ++n) {
        const auto i = static_cast<std::size_t>(n - 1);
        const double p = ratio(r_overlap[i], r_cand[i]);
        const double r = ratio(r_overlap[i], r_ref[i]);
        table.pooled[i] = f1_of(p, r) * 100.0;
    }
    {
        const double p = ratio(lcs_sum, cand_len_sum);
        const double r = ratio(lcs_sum, ref_len_sum);
        table.pooled[2] = f1_of(p, r) * 100.0;
    }
    const double pooled_bp = cand_len_sum > 0 ? brevity_penalty_of(cand_len_sum, ref_len_sum) : 0.0;
    for (int max_n = 1; max_n <= 3; ++max_n) {
        std::vector<double> per_n;
        for (int n = 1; n <= max_n; ++n) {
            const auto i = static_cast<std::size_t>(n - 1);
            per_n.push_back(ratio(b_num[i], b_den[i]));
        }
        table.pooled[static_cast<std::size_t>(2 + max_n)] = fold_bleu(per_n, pooled_bp) * 100.0;
    }
    return table;
}

std::string metric_csv(const MetricTable& table) {
    std::string out = "mode";
    for (const char* col : kMetricColumns) {
        out += ',';
        out += col;
    }
    out += '\n';
    const auto row = [&out](const char* label, const std::array<double, 6>& values) {
        out += label;
        char buf[32];
        for (double v : values) {
            std::snprintf(buf, sizeof(buf), ",%.1f", v);
            out += buf;
        }
        out += '\n';
    };
    row("per_pair", table.per_pair);
    row("pooled", table.pooled);
    return out;
}

}  // namespace radsum::metrics
