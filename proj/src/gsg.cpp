#include "radsum/gsg.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "radsum/io.hpp"
#include "radsum/metrics.hpp"

namespace radsum::gsg {

namespace {

double combine(double rouge, double bleu, ScoreRule rule) {
    switch (rule) {
        case ScoreRule::sum:
            return rouge + bleu;
        case ScoreRule::harmonic_mean:
            return (rouge + bleu) > 0.0 ? 2.0 * rouge * bleu / (rouge + bleu) : 0.0;
    }
    return 0.0;
}

std::string join(const std::vector<std::string>& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += ' ';
        out += tokens[i];
    }
    return out;
}

std::string sanitize_id(std::string id) {
    for (char& c : id) {
        if (c == '\t' || c == '\n' || c == '\r') c = '_';
    }
    return id;
}

}  // namespace

PriorityScore priority_score(std::size_t i, const corpus::SentenceSeq& doc,
                             const ScoreConfig& config) {
    if (i >= doc.size()) {
        throw std::out_of_range("priority_score: sentence " + std::to_string(i) +
                                " out of range for document of " + std::to_string(doc.size()));
    }
    PriorityScore score;
    score.sentence_index = i;
    if (doc.size() == 1) return score;  // no rest-of-document to compare against

    const auto& self = doc.sentences[i];
    double rouge = 0.0, bleu_part = 0.0;
    if (config.per_sentence_max) {
        for (std::size_t j = 0; j < doc.size(); ++j) {
            if (j == i) continue;
            rouge = std::max(rouge, metrics::rouge_n(self, doc.sentences[j], 1).f1);
            bleu_part = std::max(
                bleu_part,
                metrics::bleu(self, {doc.sentences[j]}, 3, metrics::BleuSmoothing::add_eps)
                    .score);
        }
    } else {
        std::vector<std::string> rest;
        for (std::size_t j = 0; j < doc.size(); ++j) {
            if (j == i) continue;
            rest.insert(rest.end(), doc.sentences[j].begin(), doc.sentences[j].end());
        }
        rouge = metrics::rouge_n(self, rest, 1).f1;
        bleu_part =
            metrics::bleu(self, {rest}, 3, metrics::BleuSmoothing::add_eps).score;
    }
    score.w = combine(rouge, bleu_part, config.rule);
    return score;
}

std::size_t mask_count_for(std::size_t sentence_count) {
    if (sentence_count >= 5) return 3;
    if (sentence_count == 4) return 2;
    return 1;
}

MaskSet select_top_k(const std::vector<double>& w, std::size_t k) {
    std::vector<std::size_t> order(w.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&w](std::size_t a, std::size_t b) {
        return w[a] > w[b];  // stability keeps earlier positions first on ties
    });
    MaskSet out;
    out.indices.assign(order.begin(),
                       order.begin() + static_cast<std::ptrdiff_t>(std::min(k, w.size())));
    std::sort(out.indices.begin(), out.indices.end());
    return out;
}

MaskSet select_mask_set(const corpus::SentenceSeq& doc, const ScoreConfig& config) {
    if (doc.empty()) {
        throw std::invalid_argument("select_mask_set: empty document");
    }
    std::vector<double> w(doc.size());
    for (std::size_t i = 0; i < doc.size(); ++i) {
        w[i] = priority_score(i, doc, config).w;
    }
    return select_top_k(w, mask_count_for(doc.size()));
}

std::string sentinel(std::size_t k) {
    if (k >= 100) {
        throw std::out_of_range("sentinel: index " + std::to_string(k) +
                                " exceeds the fixed sentinel vocabulary (0..99)");
    }
    return "<extra_id_" + std::to_string(k) + ">";
}

MaskedExample emit_masked_example(const corpus::SentenceSeq& doc, const MaskSet& mask_set,
                                  const std::string& report_id) {
    for (std::size_t idx : mask_set.indices) {
        if (idx >= doc.size()) {
            throw std::out_of_range("emit_masked_example: mask index " + std::to_string(idx) +
                                    " out of range");
        }
    }
    MaskedExample out;
    out.original_id = report_id;
    std::vector<std::string> source_parts, target_parts;
    std::size_t next_sentinel = 0;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const bool masked = std::binary_search(mask_set.indices.begin(),
                                               mask_set.indices.end(), i);
        if (masked) {
            const std::string tag = sentinel(next_sentinel++);
            source_parts.push_back(tag);
            target_parts.push_back(tag + ' ' + join(doc.sentences[i]));
        } else {
            source_parts.push_back(join(doc.sentences[i]));
        }
    }
    out.masked_source = join(source_parts);
    out.target = join(target_parts);
    return out;
}

std::vector<GsgRow> build_gsg_rows(const std::vector<corpus::Report>& reports,
                                   const ScoreConfig& config) {
    std::vector<GsgRow> rows;
    rows.reserve(reports.size());
    for (const auto& report : reports) {
        const corpus::SentenceSeq doc = corpus::segment(report.findings);
        const MaskSet mask_set = select_mask_set(doc, config);
        const MaskedExample example = emit_masked_example(doc, mask_set, report.id);
        GsgRow row;
        row.id = sanitize_id(report.id);
        row.findings = join(doc.flat());
        row.masked_findings = example.masked_source;
        row.gap_target = example.target;
        row.impression = join(corpus::segment(report.impression).flat());
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {
constexpr const char* kHeader = "id\tfindings\tmasked_findings\tgap_target\timpression";
}

void write_gsg_dataset(const std::vector<GsgRow>& rows, const std::filesystem::path& path) {
    std::string out = kHeader;
    out += '\n';
    for (const auto& row : rows) {
        out += row.id;
        out += '\t';
        out += row.findings;
        out += '\t';
        out += row.masked_findings;
        out += '\t';
        out += row.gap_target;
        out += '\t';
        out += row.impression;
        out += '\n';
    }
    io::write_file_atomic(path.string(), out);
}

std::vector<GsgRow> read_gsg_dataset(const std::filesystem::path& path) {
    const auto lines = io::split_lines(io::read_text_file(path.string()));
    if (lines.empty() || lines[0] != kHeader) {
        throw std::runtime_error("gsg dataset " + path.string() + ": missing or wrong header");
    }
    std::vector<GsgRow> rows;
    for (std::size_t n = 1; n < lines.size(); ++n) {
        if (lines[n].empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t tab = lines[n].find('\t', start);
            if (tab == std::string::npos) {
                fields.push_back(lines[n].substr(start));
                break;
            }
            fields.push_back(lines[n].substr(start, tab - start));
            start = tab + 1;
        }
        if (fields.size() != 5) {
            throw std::runtime_error("gsg dataset " + path.string() + " line " +
                                     std::to_string(n + 1) + ": expected 5 fields, got " +
                                     std::to_string(fields.size()));
        }
        rows.push_back({fields[0], fields[1], fields[2], fields[3], fields[4]});
    }
    return rows;
}

std::size_t build_gsg_dataset(const std::vector<corpus::Report>& reports,
                              const std::filesystem::path& path, const ScoreConfig& config) {
    const auto rows = build_gsg_rows(reports, config);
    write_gsg_dataset(rows, path);
    return rows.size();
}

}  // namespace radsum::gsg
