#include "radsum/tagging.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <stdexcept>
#include <unordered_set>
#include <utility>

#include "json.hpp"
#include "radsum/io.hpp"

namespace radsum::tagging {

namespace {

// Lowercase, trim, and collapse internal whitespace runs to single spaces.
std::string normalize_term(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

// Terms of one document under the model options: tokens, plus adjacent
// pairs when bigrams are enabled.
std::vector<std::string> document_terms(const std::vector<std::string>& tokens,
                                        const TfidfOptions& options) {
    std::vector<std::string> terms = tokens;
    if (options.bigrams) {
        for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
            terms.push_back(tokens[i] + " " + tokens[i + 1]);
        }
    }
    return terms;
}

double idf_value(std::size_t df, std::size_t n_docs, const TfidfOptions& options) {
    if (options.smooth_idf) {
        return std::log((1.0 + static_cast<double>(n_docs)) / (1.0 + static_cast<double>(df))) +
               1.0;
    }
    return std::log(static_cast<double>(n_docs) / static_cast<double>(df));
}

bool valid_cui(const std::string& s) {
    if (s.size() != 8 || s[0] != 'C') return false;
    return std::all_of(s.begin() + 1, s.end(),
                       [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; });
}

// Split on '|'; a single trailing delimiter contributes no field.
std::vector<std::string> split_rrf(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == '|') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty() || line.empty() || line.back() != '|') {
        fields.push_back(std::move(cur));
    }
    return fields;
}

}  // namespace

// ---------------------------------------------------------------------------
// TF-IDF
// ---------------------------------------------------------------------------

TfidfModel fit_tfidf(const std::vector<std::vector<std::string>>& documents,
                     const TfidfOptions& options) {
    if (documents.empty()) {
        throw std::invalid_argument("tfidf: corpus is empty");
    }
    std::map<std::string, std::size_t> df;  // ordered: columns come out sorted
    for (const auto& doc : documents) {
        std::unordered_set<std::string> seen;
        for (const auto& term : document_terms(doc, options)) {
            if (seen.insert(term).second) ++df[term];
        }
    }
    TfidfModel model;
    model.doc_count = documents.size();
    model.options = options;
    model.terms.reserve(df.size());
    model.idf.reserve(df.size());
    for (const auto& [term, count] : df) {
        model.vocabulary.emplace(term, model.terms.size());
        model.terms.push_back(term);
        model.idf.push_back(idf_value(count, model.doc_count, options));
    }
    return model;
}

double tfidf_score(const TfidfModel& model, const std::vector<std::string>& document,
                   const std::string& term) {
    const auto it = model.vocabulary.find(term);
    if (it == model.vocabulary.end()) return 0.0;
    std::size_t tf = 0;
    for (const auto& t : document_terms(document, model.options)) {
        if (t == term) ++tf;
    }
    return static_cast<double>(tf) * model.idf[it->second];
}

std::vector<std::string> top_keywords(const TfidfModel& model,
                                      const std::vector<std::vector<std::string>>& documents,
                                      std::size_t n) {
    if (n < 1) {
        throw std::invalid_argument("top keywords: n must be at least 1");
    }
    std::vector<double> best(model.terms.size(), 0.0);
    for (const auto& doc : documents) {
        std::unordered_map<std::size_t, std::size_t> counts;
        for (const auto& term : document_terms(doc, model.options)) {
            const auto it = model.vocabulary.find(term);
            if (it != model.vocabulary.end()) ++counts[it->second];
        }
        for (const auto& [col, tf] : counts) {
            best[col] = std::max(best[col], static_cast<double>(tf) * model.idf[col]);
        }
    }
    std::vector<std::size_t> order;
    for (std::size_t col = 0; col < best.size(); ++col) {
        if (best[col] > 0.0) order.push_back(col);
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (best[a] != best[b]) return best[a] > best[b];
        return model.terms[a] < model.terms[b];
    });
    if (order.size() > n) order.resize(n);
    std::vector<std::string> keywords;
    keywords.reserve(order.size());
    for (std::size_t col : order) keywords.push_back(model.terms[col]);
    return keywords;
}

// ---------------------------------------------------------------------------
// Concept table
// ---------------------------------------------------------------------------

std::vector<ConceptRow> load_concepts(const std::filesystem::path& path,
                                      std::vector<std::string>* warnings) {
    const std::string text = io::read_text_file(path.string());
    const auto lines = io::split_lines(text);
    std::vector<ConceptRow> rows;
    const auto warn = [&](std::size_t line_no, const std::string& msg) {
        if (warnings != nullptr) {
            warnings->push_back("line " + std::to_string(line_no) + ": " + msg);
        }
    };
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        if (line.empty()) continue;
        const auto fields = split_rrf(line);
        if (fields.size() != 18) {
            warn(i + 1, "expected 18 fields, found " + std::to_string(fields.size()) +
                            " -- row skipped");
            continue;
        }
        ConceptRow row;
        row.cui = fields[0];
        row.lat = fields[1];
        row.sab = fields[11];
        row.tty = fields[12];
        row.str = fields[14];
        if (!valid_cui(row.cui)) {
            warn(i + 1, "malformed concept id \"" + row.cui + "\" -- row skipped");
            continue;
        }
        if (row.lat != "ENG") continue;  // language filter, not an error
        row.str_norm = normalize_term(row.str);
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Tag assignment
// ---------------------------------------------------------------------------

std::vector<TagAssignment> assign_tags(const std::vector<std::string>& keywords,
                                       const std::vector<ConceptRow>& concepts,
                                       const std::vector<corpus::Report>& reports) {
    // Normalized concept string -> first row in table order.
    std::unordered_map<std::string, const ConceptRow*> by_string;
    for (const ConceptRow& row : concepts) {
        by_string.emplace(row.str_norm, &row);
    }
    // Keywords that actually name a concept; everything else can never tag.
    std::unordered_map<std::string, std::pair<std::string, const ConceptRow*>> matchable;
    bool any_bigram = false;
    for (const std::string& kw : keywords) {
        const std::string norm = normalize_term(kw);
        const auto it = by_string.find(norm);
        if (it == by_string.end()) continue;
        matchable.emplace(norm, std::make_pair(kw, it->second));
        any_bigram = any_bigram || norm.find(' ') != std::string::npos;
    }

    std::vector<TagAssignment> out;
    out.reserve(reports.size());
    for (const corpus::Report& report : reports) {
        TagAssignment assignment;
        assignment.report_id = report.id;
        const auto tokens = corpus::normalize_tokens(report.impression);
        std::unordered_set<std::string> emitted;
        const auto try_emit = [&](const std::string& candidate) {
            const auto it = matchable.find(candidate);
            if (it == matchable.end()) return;
            if (!emitted.insert(candidate).second) return;
            assignment.tags.push_back(
                {it->second.first, it->second.second->cui, it->second.second->str});
        };
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            try_emit(normalize_term(tokens[i]));
            if (any_bigram && i + 1 < tokens.size()) {
                try_emit(normalize_term(tokens[i] + " " + tokens[i + 1]));
            }
        }
        out.push_back(std::move(assignment));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Tag dataset
// ---------------------------------------------------------------------------

void build_tag_dataset(const std::vector<corpus::Report>& reports,
                       const std::vector<TagAssignment>& assignments,
                       const std::filesystem::path& out_path) {
    std::unordered_map<std::string, const TagAssignment*> by_id;
    for (const TagAssignment& a : assignments) by_id.emplace(a.report_id, &a);

    std::string out;
    for (const corpus::Report& report : reports) {
        std::string target;
        const auto it = by_id.find(report.id);
        if (it != by_id.end()) {
            for (const Tag& tag : it->second->tags) {
                if (!target.empty()) target.push_back(' ');
                target += tag.keyword;
            }
        }
        if (target.empty()) target = "none";
        nlohmann::json row;
        row["id"] = report.id;
        row["findings"] = report.findings;
        row["tags"] = target;
        out += row.dump();
        out.push_back('\n');
    }
    io::write_file_atomic(out_path.string(), out);
}

std::vector<TagRow> load_tag_dataset(const std::filesystem::path& path) {
    const std::string text = io::read_text_file(path.string());
    std::vector<TagRow> rows;
    for (const std::string& line : io::split_lines(text)) {
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("tag dataset: unparseable row: " + std::string(e.what()));
        }
        if (!j.contains("id") || !j.contains("findings") || !j.contains("tags") ||
            !j["id"].is_string() || !j["findings"].is_string() || !j["tags"].is_string()) {
            throw std::runtime_error("tag dataset: row missing id/findings/tags strings");
        }
        rows.push_back({j["id"].get<std::string>(), j["findings"].get<std::string>(),
                        j["tags"].get<std::string>()});
    }
    return rows;
}

}  // namespace radsum::tagging
