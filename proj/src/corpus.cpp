#include "radsum/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <unordered_set>

#include "json.hpp"
#include "radsum/io.hpp"
#include "radsum/rng.hpp"

namespace radsum::corpus {

namespace {

bool is_ascii_punct(char c) {
    const auto u = static_cast<unsigned char>(c);
    return u < 0x80 && std::ispunct(u) != 0;
}

bool is_terminator(char c) { return c == '.' || c == '?' || c == '!'; }

std::string lowercase_ascii(std::string s) {
    for (char& c : s) {
        const auto u = static_cast<unsigned char>(c);
        if (u < 0x80) c = static_cast<char>(std::tolower(u));
    }
    return s;
}

bool has_alnum(const std::string& tok) {
    for (char c : tok) {
        const auto u = static_cast<unsigned char>(c);
        if (u >= 0x80 || std::isalnum(u)) return true;  // non-ASCII counts as lexical
    }
    return false;
}

std::vector<std::string> whitespace_chunks(const std::string& text) {
    std::vector<std::string> chunks;
    std::string cur;
    for (char c : text) {
        const auto u = static_cast<unsigned char>(c);
        if (u < 0x80 && std::isspace(u)) {
            if (!cur.empty()) {
                chunks.push_back(std::move(cur));
                cur.clear();
            }
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) chunks.push_back(std::move(cur));
    return chunks;
}

bool is_guard(const std::string& s, const std::vector<std::string>& guards) {
    return std::find(guards.begin(), guards.end(), s) != guards.end();
}

// Splits one whitespace-delimited chunk into detached tokens and reports
// whether its trailing punctuation run contains a sentence terminator.
void detach_chunk(const std::string& chunk, const std::vector<std::string>& guards,
                  std::vector<std::string>& out, bool& ends_sentence) {
    ends_sentence = false;
    std::size_t begin = 0, end = chunk.size();
    while (end - begin > 1 && is_ascii_punct(chunk[begin]) &&
           !is_guard(chunk.substr(begin, end - begin), guards)) {
        out.push_back(std::string(1, chunk[begin]));
        ++begin;
    }
    std::vector<std::string> tail;
    while (end - begin > 1 && is_ascii_punct(chunk[end - 1]) &&
           !is_guard(chunk.substr(begin, end - begin), guards)) {
        tail.push_back(std::string(1, chunk[end - 1]));
        if (is_terminator(chunk[end - 1])) ends_sentence = true;
        --end;
    }
    const std::string core = chunk.substr(begin, end - begin);
    if (core.size() == 1 && is_terminator(core[0])) ends_sentence = true;
    out.push_back(core);
    out.insert(out.end(), tail.rbegin(), tail.rend());
}

}  // namespace

std::vector<std::string> SentenceSeq::flat() const {
    std::vector<std::string> out;
    for (const auto& s : sentences) out.insert(out.end(), s.begin(), s.end());
    return out;
}

ParseResult parse_reports(const std::filesystem::path& path, CorpusFormat format) {
    (void)format;  // jsonl is the only format
    const std::string text = io::read_text_file(path.string());
    ParseResult result;
    std::unordered_set<std::string> seen_ids;
    std::size_t line_no = 0;
    for (const std::string& line : io::split_lines(text)) {
        ++line_no;
        if (line.empty()) continue;
        const auto record = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
        const std::string line_id = "line:" + std::to_string(line_no);
        if (record.is_discarded() || !record.is_object()) {
            result.rejected.push_back({line_id, "malformed json"});
            continue;
        }
        const bool has_id = record.contains("id") && record["id"].is_string() &&
                            !record["id"].get<std::string>().empty();
        const std::string id = has_id ? record["id"].get<std::string>() : line_id;
        if (!has_id) {
            result.rejected.push_back({id, "missing id"});
            continue;
        }
        const bool has_findings = record.contains("findings") && record["findings"].is_string();
        const bool has_impression =
            record.contains("impression") && record["impression"].is_string();
        if (!has_findings || !has_impression) {
            result.rejected.push_back({id, "missing section"});
            continue;
        }
        if (!seen_ids.insert(id).second) {
            result.rejected.push_back({id, "duplicate id"});
            continue;
        }
        result.reports.push_back(
            {id, record["findings"].get<std::string>(), record["impression"].get<std::string>()});
    }
    return result;
}

int word_count(const std::string& text, bool count_punctuation) {
    int count = 0;
    for (const auto& tok : normalize_tokens(text)) {
        if (count_punctuation || has_alnum(tok)) ++count;
    }
    return count;
}

FilterResult filter_reports(const std::vector<Report>& reports, const FilterRules& rules) {
    FilterResult result;
    for (const auto& report : reports) {
        const int findings_words = word_count(report.findings, rules.count_punctuation);
        const int impression_words = word_count(report.impression, rules.count_punctuation);
        if (findings_words == 0 || impression_words == 0) {
            result.dropped.emplace_back(report.id, "missing-section");
        } else if (findings_words < rules.min_findings_words) {
            result.dropped.emplace_back(report.id, "short-findings");
        } else if (impression_words < rules.min_impression_words) {
            result.dropped.emplace_back(report.id, "short-impression");
        } else {
            result.kept.push_back(report);
        }
    }
    return result;
}

const std::vector<std::string>& default_guards() {
    static const std::vector<std::string> guards = {
        "e.g.", "i.e.", "etc.", "vs.", "dr.", "mr.", "mrs.", "ms.",
        "st.",  "no.",  "approx.", "cf.", "a.m.", "p.m.",
    };
    return guards;
}

std::vector<std::string> normalize_tokens(const std::string& text,
                                          const std::vector<std::string>& guards) {
    std::vector<std::string> out;
    bool ends_sentence = false;
    for (const auto& chunk : whitespace_chunks(lowercase_ascii(text))) {
        detach_chunk(chunk, guards, out, ends_sentence);
    }
    return out;
}

SentenceSeq segment(const std::string& text, const std::vector<std::string>& guards) {
    SentenceSeq seq;
    std::vector<std::string> current;
    for (const auto& chunk : whitespace_chunks(lowercase_ascii(text))) {
        bool ends_sentence = false;
        detach_chunk(chunk, guards, current, ends_sentence);
        if (ends_sentence) {
            seq.sentences.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) seq.sentences.push_back(std::move(current));
    return seq;
}

CorpusSplit split_corpus(const std::vector<Report>& reports, std::uint64_t seed) {
    if (reports.size() < 10) {
        throw std::invalid_argument("split_corpus: need at least 10 reports, got " +
                                    std::to_string(reports.size()));
    }
    std::vector<std::string> ids;
    ids.reserve(reports.size());
    for (const auto& r : reports) ids.push_back(r.id);
    Rng rng(seed);
    rng.shuffle(ids);

    const auto n = ids.size();
    const auto train_n = static_cast<std::size_t>(
        std::ceil(0.8 * static_cast<double>(n)));
    const auto val_n = static_cast<std::size_t>(
        std::floor(0.1 * static_cast<double>(n)));
    CorpusSplit split;
    split.seed = seed;
    split.train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(train_n));
    split.val.assign(ids.begin() + static_cast<std::ptrdiff_t>(train_n),
                     ids.begin() + static_cast<std::ptrdiff_t>(train_n + val_n));
    split.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(train_n + val_n), ids.end());
    return split;
}

namespace {

struct SectionTally {
    std::size_t sentences = 0;
    std::size_t words = 0;
};

SectionTally tally(const std::string& text) {
    SectionTally t;
    const SentenceSeq seq = segment(text);
    t.sentences = seq.size();
    for (const auto& sentence : seq.sentences) {
        for (const auto& tok : sentence) {
            if (has_alnum(tok)) ++t.words;
        }
    }
    return t;
}

}  // namespace

CorpusStats corpus_stats(const std::vector<Report>& reports) {
    CorpusStats stats;
    stats.report_count = reports.size();
    if (reports.empty()) return stats;

    SectionTally findings_total, impression_total;
    for (const auto& report : reports) {
        const SectionTally f = tally(report.findings);
        const SectionTally i = tally(report.impression);
        findings_total.sentences += f.sentences;
        findings_total.words += f.words;
        impression_total.sentences += i.sentences;
        impression_total.words += i.words;
    }
    const auto n = static_cast<double>(reports.size());
    const auto section = [n](const SectionTally& t) {
        SectionStats s;
        s.avg_sentences = static_cast<double>(t.sentences) / n;
        s.avg_words_per_sentence =
            t.sentences > 0
                ? static_cast<double>(t.words) / static_cast<double>(t.sentences)
                : 0.0;
        s.avg_source_words = static_cast<double>(t.words) / n;
        return s;
    };
    stats.findings = section(findings_total);
    stats.impressions = section(impression_total);
    return stats;
}

std::string stats_csv(const std::string& dataset, const CorpusStats& stats) {
    std::string out =
        "dataset,reports,findings_avg_s,findings_avg_w_per_s,findings_avg_source_w,"
        "impressions_avg_s,impressions_avg_w_per_s,impressions_avg_source_w\n";
    out += dataset + ',' + std::to_string(stats.report_count);
    if (!stats.findings.has_value()) {
        out += ",,,,,,\n";  // absent, not zero
        return out;
    }
    char buf[32];
    for (double v : {stats.findings->avg_sentences, stats.findings->avg_words_per_sentence,
                     stats.findings->avg_source_words, stats.impressions->avg_sentences,
                     stats.impressions->avg_words_per_sentence,
                     stats.impressions->avg_source_words}) {
        std::snprintf(buf, sizeof(buf), ",%.2f", v);
        out += buf;
    }
    out += '\n';
    return out;
}

RawSections extract_sections(const std::string& raw_text) {
    const std::string lower = lowercase_ascii(raw_text);
    const auto find_header = [&lower](const std::string& name) {
        return lower.find(name + ":");
    };
    const std::size_t f_pos = find_header("findings");
    const std::size_t i_pos = find_header("impression");

    RawSections sections;
    const auto trim = [](std::string s) {
        const auto first = s.find_first_not_of(" \t\r\n");
        const auto last = s.find_last_not_of(" \t\r\n");
        return first == std::string::npos ? std::string() : s.substr(first, last - first + 1);
    };
    if (f_pos != std::string::npos) {
        const std::size_t body = f_pos + std::string("findings:").size();
        const std::size_t end =
            (i_pos != std::string::npos && i_pos > f_pos) ? i_pos : raw_text.size();
        sections.findings = trim(raw_text.substr(body, end - body));
    }
    if (i_pos != std::string::npos) {
        const std::size_t body = i_pos + std::string("impression:").size();
        const std::size_t end =
            (f_pos != std::string::npos && f_pos > i_pos) ? f_pos : raw_text.size();
        sections.impression = trim(raw_text.substr(body, end - body));
    }
    return sections;
}

}  // namespace radsum::corpus
