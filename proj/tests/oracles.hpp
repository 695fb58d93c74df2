// Independent reference implementations used to check the real code. Everything
// here is written for obviousness rather than speed: positional scans, naive
// loops, central finite differences. Tests freeze these as the ground truth.
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "radsum/tensor.hpp"

namespace oracles {

// Relative error with a floor of 1 in the denominator so tiny values are
// compared absolutely.
inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

struct FdReport {
    double max_rel_err = 0.0;
    std::size_t entries_checked = 0;
};

// Central-difference check of reverse-mode gradients. `fn` must rebuild the
// whole graph from the current parameter values each time it is called and
// return a scalar loss. Analytic gradients are taken from one recorded
// backward pass; each parameter entry is then wiggled by ±h with the tape off.
inline FdReport fd_check(std::vector<radsum::tensor::Tensor> params,
                         const std::function<radsum::tensor::Tensor(radsum::tensor::Tape&)>& fn,
                         double h = 1e-5) {
    using radsum::tensor::Tape;

    Tape tape(true);
    radsum::tensor::Tensor loss = fn(tape);
    tape.backward(loss);

    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (auto& p : params) analytic.push_back(p.grad());

    FdReport report;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        auto& values = params[pi].value();
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double saved = values[i];
            values[i] = saved + h;
            Tape off_p(false);
            const double f_plus = fn(off_p).item();
            values[i] = saved - h;
            Tape off_m(false);
            const double f_minus = fn(off_m).item();
            values[i] = saved;
            const double fd = (f_plus - f_minus) / (2.0 * h);
            report.max_rel_err = std::max(report.max_rel_err, rel_err(fd, analytic[pi][i]));
            ++report.entries_checked;
        }
    }
    return report;
}

// --- n-gram / sequence-overlap references (positional scans, no hash maps
// beyond counting) -----------------------------------------------------------

using Tokens = std::vector<std::string>;

inline std::map<Tokens, int> ngram_counts_ref(const Tokens& toks, std::size_t n) {
    std::map<Tokens, int> counts;
    if (toks.size() < n) return counts;
    for (std::size_t i = 0; i + n <= toks.size(); ++i) {
        counts[Tokens(toks.begin() + static_cast<std::ptrdiff_t>(i),
                      toks.begin() + static_cast<std::ptrdiff_t>(i + n))] += 1;
    }
    return counts;
}

// Multiset n-gram overlap: sum over distinct n-grams of min(count_a, count_b).
inline int ngram_overlap_ref(const Tokens& a, const Tokens& b, std::size_t n) {
    const auto ca = ngram_counts_ref(a, n);
    const auto cb = ngram_counts_ref(b, n);
    int total = 0;
    for (const auto& [gram, count] : ca) {
        auto it = cb.find(gram);
        if (it != cb.end()) total += std::min(count, it->second);
    }
    return total;
}

// Longest common subsequence by the quadratic dynamic program.
inline int lcs_ref(const Tokens& a, const Tokens& b) {
    std::vector<std::vector<int>> dp(a.size() + 1, std::vector<int>(b.size() + 1, 0));
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            if (a[i - 1] == b[j - 1]) {
                dp[i][j] = dp[i - 1][j - 1] + 1;
            } else {
                dp[i][j] = std::max(dp[i - 1][j], dp[i][j - 1]);
            }
        }
    }
    return dp[a.size()][b.size()];
}

// --- metric references. Counting is fully independent of the library
// (ordered maps over token-vector keys, positional scans); the final
// arithmetic uses the same expression shapes so agreement is exact, not
// approximate. ---------------------------------------------------------------

struct PrfRef {
    double precision = 0.0, recall = 0.0, f1 = 0.0;
};

inline double ratio_ref(long long num, long long den) {
    return den > 0 ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
}

inline double f1_ref(double p, double r) {
    return (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

inline PrfRef rouge_n_ref(const Tokens& cand, const Tokens& ref, std::size_t n) {
    const long long overlap = ngram_overlap_ref(cand, ref, n);
    const long long nc = cand.size() >= n ? static_cast<long long>(cand.size() - n + 1) : 0;
    const long long nr = ref.size() >= n ? static_cast<long long>(ref.size() - n + 1) : 0;
    PrfRef out;
    out.precision = ratio_ref(overlap, nc);
    out.recall = ratio_ref(overlap, nr);
    out.f1 = f1_ref(out.precision, out.recall);
    return out;
}

inline PrfRef rouge_l_ref(const Tokens& cand, const Tokens& ref) {
    const long long lcs = lcs_ref(cand, ref);
    PrfRef out;
    out.precision = ratio_ref(lcs, static_cast<long long>(cand.size()));
    out.recall = ratio_ref(lcs, static_cast<long long>(ref.size()));
    out.f1 = f1_ref(out.precision, out.recall);
    return out;
}

struct BleuRef {
    std::vector<double> per_n;
    double brevity_penalty = 0.0;
    double score = 0.0;
    bool degenerate = false;
};

inline BleuRef bleu_ref(const Tokens& cand, const std::vector<Tokens>& refs, int max_n,
                        bool add_eps) {
    constexpr double kEps = 1e-9;
    BleuRef out;
    out.per_n.assign(static_cast<std::size_t>(max_n), 0.0);
    if (cand.empty()) {
        out.degenerate = true;
        return out;
    }
    for (int n = 1; n <= max_n; ++n) {
        const auto cc = ngram_counts_ref(cand, static_cast<std::size_t>(n));
        long long num = 0;
        for (const auto& [gram, count] : cc) {
            int best = 0;
            for (const auto& ref : refs) {
                const auto rc = ngram_counts_ref(ref, static_cast<std::size_t>(n));
                auto it = rc.find(gram);
                if (it != rc.end()) best = std::max(best, it->second);
            }
            num += std::min(count, best);
        }
        const long long den =
            cand.size() >= static_cast<std::size_t>(n)
                ? static_cast<long long>(cand.size() - static_cast<std::size_t>(n) + 1)
                : 0;
        double p;
        if (den > 0) {
            if (num > 0) {
                p = static_cast<double>(num) / static_cast<double>(den);
            } else {
                p = add_eps ? kEps / static_cast<double>(den) : 0.0;
            }
        } else {
            p = add_eps ? kEps : 0.0;
        }
        out.per_n[static_cast<std::size_t>(n - 1)] = p;
    }
    const auto c = static_cast<long long>(cand.size());
    long long r = static_cast<long long>(refs.at(0).size());
    for (const auto& ref : refs) {
        const auto len = static_cast<long long>(ref.size());
        if (std::llabs(len - c) < std::llabs(r - c) ||
            (std::llabs(len - c) == std::llabs(r - c) && len < r)) {
            r = len;
        }
    }
    out.brevity_penalty =
        c > r ? 1.0 : std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c));
    double log_sum = 0.0;
    bool any_zero = false;
    for (double p : out.per_n) {
        if (p <= 0.0) {
            any_zero = true;
            break;
        }
        log_sum += std::log(p);
    }
    out.score = any_zero
                    ? 0.0
                    : out.brevity_penalty *
                          std::exp(log_sum / static_cast<double>(out.per_n.size()));
    return out;
}

// --- gap-sentence references -------------------------------------------------

inline std::vector<std::string> split_ws_ref(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ' ' || c == '\t' || c == '\n') {
            if (!cur.empty()) {
                out.push_back(cur);
                cur.clear();
            }
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

inline bool is_sentinel_tok_ref(const std::string& t) {
    return t.size() > 11 && t.rfind("<extra_id_", 0) == 0 && t.back() == '>';
}

// Substitutes each sentinel's span from the target back into the masked
// source and returns the reconstructed token stream.
inline std::vector<std::string> reconstruct_ref(const std::string& masked_source,
                                                const std::string& target) {
    const auto src = split_ws_ref(masked_source);
    const auto tgt = split_ws_ref(target);
    // map sentinel token -> its span in the target (tokens up to next sentinel)
    std::map<std::string, std::vector<std::string>> spans;
    std::string current;
    for (const auto& tok : tgt) {
        if (is_sentinel_tok_ref(tok)) {
            current = tok;
            spans[current];  // may legitimately be empty
        } else if (!current.empty()) {
            spans[current].push_back(tok);
        }
    }
    std::vector<std::string> out;
    for (const auto& tok : src) {
        if (is_sentinel_tok_ref(tok)) {
            const auto it = spans.find(tok);
            if (it != spans.end()) {
                out.insert(out.end(), it->second.begin(), it->second.end());
            }
        } else {
            out.push_back(tok);
        }
    }
    return out;
}

inline void all_k_subsets_rec(std::size_t n, std::size_t k, std::size_t start,
                              std::vector<std::size_t>& cur,
                              std::vector<std::vector<std::size_t>>& out) {
    if (cur.size() == k) {
        out.push_back(cur);
        return;
    }
    for (std::size_t i = start; i < n; ++i) {
        cur.push_back(i);
        all_k_subsets_rec(n, k, i + 1, cur, out);
        cur.pop_back();
    }
}

// Exhaustive argmax-k: enumerates every k-subset of positions (lexicographic
// order) and returns the one with the largest total weight; strict
// improvement keeps the lexicographically smallest subset on ties.
inline std::vector<std::size_t> argmax_k_subset_ref(const std::vector<double>& w,
                                                    std::size_t k) {
    k = std::min(k, w.size());
    std::vector<std::vector<std::size_t>> subsets;
    std::vector<std::size_t> cur;
    all_k_subsets_rec(w.size(), k, 0, cur, subsets);
    std::vector<std::size_t> best;
    double best_sum = -std::numeric_limits<double>::infinity();
    for (const auto& subset : subsets) {
        double sum = 0.0;
        for (std::size_t i : subset) sum += w[i];
        if (sum > best_sum) {
            best_sum = sum;
            best = subset;
        }
    }
    return best;
}

// Enumerates every token list of length 0..max_len over the given alphabet,
// in lexicographic order by length then symbol index.
inline std::vector<Tokens> all_token_lists(const std::vector<std::string>& alphabet,
                                           std::size_t max_len) {
    std::vector<Tokens> out;
    out.push_back({});
    std::size_t begin = 0;
    for (std::size_t len = 1; len <= max_len; ++len) {
        const std::size_t end = out.size();
        for (std::size_t i = begin; i < end; ++i) {
            for (const auto& sym : alphabet) {
                Tokens next = out[i];
                next.push_back(sym);
                out.push_back(std::move(next));
            }
        }
        begin = end;
    }
    return out;
}

}  // namespace oracles
