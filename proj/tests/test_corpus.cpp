#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "radsum/corpus.hpp"

using namespace radsum::corpus;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& content) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    return path;
}

std::vector<Report> numbered_reports(std::size_t n) {
    std::vector<Report> reports;
    for (std::size_t i = 0; i < n; ++i) {
        reports.push_back({"r" + std::to_string(i),
                           "one two three four five six seven eight nine ten.",
                           "stable exam."});
    }
    return reports;
}

}  // namespace

TEST_CASE("parse_reports maps well-formed lines and diverts bad ones") {
    const auto path = write_temp(
        "corpus_parse.jsonl",
        R"({"id":"r1","findings":"lungs are clear","impression":"no acute disease"})"
        "\n"
        R"({"id":"r2","findings":"stable"})"
        "\n"
        "not json at all\n"
        "\n"
        R"({"findings":"a","impression":"b"})"
        "\n"
        R"({"id":"r1","findings":"dup","impression":"dup"})"
        "\n"
        R"({"id":"r3","findings":"effusion present","impression":"effusion","extra":1})"
        "\n");
    const ParseResult got = parse_reports(path, CorpusFormat::jsonl);

    REQUIRE(got.reports.size() == 2);
    CHECK(got.reports[0].id == "r1");
    CHECK(got.reports[0].findings == "lungs are clear");
    CHECK(got.reports[0].impression == "no acute disease");
    CHECK(got.reports[1].id == "r3");  // unknown keys are ignored

    REQUIRE(got.rejected.size() == 4);
    CHECK(got.rejected[0].id == "r2");
    CHECK(got.rejected[0].reason == "missing section");
    CHECK(got.rejected[1].id == "line:3");
    CHECK(got.rejected[1].reason == "malformed json");
    CHECK(got.rejected[2].id == "line:5");
    CHECK(got.rejected[2].reason == "missing id");
    CHECK(got.rejected[3].id == "r1");
    CHECK(got.rejected[3].reason == "duplicate id");
}

TEST_CASE("parse_reports on an empty file") {
    const auto path = write_temp("corpus_empty.jsonl", "");
    const ParseResult got = parse_reports(path, CorpusFormat::jsonl);
    CHECK(got.reports.empty());
    CHECK(got.rejected.empty());
    CHECK_THROWS(parse_reports("/nonexistent/nowhere.jsonl", CorpusFormat::jsonl));
}

TEST_CASE("word_count ignores punctuation by default") {
    CHECK(word_count("No acute disease.") == 3);
    CHECK(word_count("No acute disease.", true) == 4);
    CHECK(word_count("1.5 cm nodule (stable)") == 4);
    CHECK(word_count("...") == 0);
    CHECK(word_count("") == 0);
}

TEST_CASE("filter_reports applies the three rules in order") {
    std::vector<Report> reports = {
        // exactly at both boundaries: kept
        {"keep", "one two three four five six seven eight nine ten", "two words"},
        {"shortf", "one two three four five six seven eight nine", "two words"},
        {"shorti", "one two three four five six seven eight nine ten", "single"},
        {"nof", "", "two words"},
        {"noi", "one two three four five six seven eight nine ten", "   "},
        // punctuation does not rescue a short section
        {"punct", "a b c d e f g h i . ! ?", "ok fine"},
    };
    const FilterResult got = filter_reports(reports);
    REQUIRE(got.kept.size() == 1);
    CHECK(got.kept[0].id == "keep");
    REQUIRE(got.dropped.size() == 5);
    CHECK(got.dropped[0] == std::pair<std::string, std::string>{"shortf", "short-findings"});
    CHECK(got.dropped[1] == std::pair<std::string, std::string>{"shorti", "short-impression"});
    CHECK(got.dropped[2] == std::pair<std::string, std::string>{"nof", "missing-section"});
    CHECK(got.dropped[3] == std::pair<std::string, std::string>{"noi", "missing-section"});
    CHECK(got.dropped[4] == std::pair<std::string, std::string>{"punct", "short-findings"});
}

TEST_CASE("filter_reports is idempotent") {
    const auto reports = numbered_reports(25);
    const FilterResult once = filter_reports(reports);
    const FilterResult twice = filter_reports(once.kept);
    CHECK(twice.kept.size() == once.kept.size());
    CHECK(twice.dropped.empty());
}

TEST_CASE("segment splits on terminators and detaches punctuation") {
    const SentenceSeq got = segment("No effusion. Heart normal.");
    REQUIRE(got.size() == 2);
    CHECK(got.sentences[0] == std::vector<std::string>{"no", "effusion", "."});
    CHECK(got.sentences[1] == std::vector<std::string>{"heart", "normal", "."});
}

TEST_CASE("segment handles empty text, guards, and decimals") {
    CHECK(segment("").size() == 0);
    CHECK(segment("   \n\t ").size() == 0);

    const SentenceSeq guarded = segment("e.g. stable");
    REQUIRE(guarded.size() == 1);
    CHECK(guarded.sentences[0] == std::vector<std::string>{"e.g.", "stable"});

    const SentenceSeq decimal = segment("nodule measures 1.5 cm today");
    REQUIRE(decimal.size() == 1);
    CHECK(decimal.sentences[0] ==
          std::vector<std::string>{"nodule", "measures", "1.5", "cm", "today"});
}

TEST_CASE("segment keeps a guard atomic even when more punctuation follows") {
    const SentenceSeq got = segment("stable, e.g., no change? good!");
    REQUIRE(got.size() == 2);
    CHECK(got.sentences[0] ==
          std::vector<std::string>{"stable", ",", "e.g.", ",", "no", "change", "?"});
    CHECK(got.sentences[1] == std::vector<std::string>{"good", "!"});
}

TEST_CASE("segment detaches brackets and question/exclamation marks") {
    const SentenceSeq got = segment("Normal (unchanged). Why? Done!");
    REQUIRE(got.size() == 3);
    CHECK(got.sentences[0] ==
          std::vector<std::string>{"normal", "(", "unchanged", ")", "."});
    CHECK(got.sentences[1] == std::vector<std::string>{"why", "?"});
    CHECK(got.sentences[2] == std::vector<std::string>{"done", "!"});
}

TEST_CASE("segment round-trips the normalized token stream") {
    const std::string texts[] = {
        "No effusion. Heart normal.",
        "Lines and tubes: unchanged, e.g. the NG tube. 1.5 cm nodule!",
        "Multiple... trailing dots?! (and more)",
        "UPPER case Mixed WITH lower",
    };
    for (const auto& text : texts) {
        CHECK(segment(text).flat() == normalize_tokens(text));
    }
}

TEST_CASE("split_corpus produces a seeded disjoint 8:1:1 partition") {
    const auto reports = numbered_reports(100);
    const CorpusSplit split = split_corpus(reports, 7);
    CHECK(split.train.size() == 80);
    CHECK(split.val.size() == 10);
    CHECK(split.test.size() == 10);

    std::set<std::string> all;
    for (const auto* part : {&split.train, &split.val, &split.test}) {
        for (const auto& id : *part) all.insert(id);
    }
    CHECK(all.size() == 100);

    const CorpusSplit again = split_corpus(reports, 7);
    CHECK(again.train == split.train);
    CHECK(again.val == split.val);
    CHECK(again.test == split.test);

    const CorpusSplit other = split_corpus(reports, 8);
    CHECK(other.train != split.train);
}

TEST_CASE("split_corpus rounding matches the documented policy") {
    // ceil(0.8 N) / floor(0.1 N) / remainder
    const auto r10 = numbered_reports(10);
    const CorpusSplit s10 = split_corpus(r10, 7);
    CHECK(s10.train.size() == 8);
    CHECK(s10.val.size() == 1);
    CHECK(s10.test.size() == 1);

    const auto r37 = numbered_reports(37);
    const CorpusSplit s37 = split_corpus(r37, 1);
    CHECK(s37.train.size() == 30);  // ceil(29.6)
    CHECK(s37.val.size() == 3);     // floor(3.7)
    CHECK(s37.test.size() == 4);    // remainder

    CHECK_THROWS_AS(split_corpus(numbered_reports(9), 1), std::invalid_argument);
}

TEST_CASE("split_corpus reproduces the documented large-corpus sizes") {
    // 125287 -> 100230 / 12528 / 12529 under ceil/floor/remainder
    const std::size_t n = 125287;
    const auto train_n = static_cast<std::size_t>(std::ceil(0.8 * static_cast<double>(n)));
    const auto val_n = static_cast<std::size_t>(std::floor(0.1 * static_cast<double>(n)));
    CHECK(train_n == 100230);
    CHECK(val_n == 12528);
    CHECK(n - train_n - val_n == 12529);
}

TEST_CASE("corpus_stats averages match a hand count") {
    std::vector<Report> reports = {
        {"r1", "alpha beta gamma delta one. alpha beta gamma delta two.", "stable exam."},
    };
    const CorpusStats stats = corpus_stats(reports);
    CHECK(stats.report_count == 1);
    REQUIRE(stats.findings.has_value());
    CHECK(stats.findings->avg_sentences == doctest::Approx(2.0));
    CHECK(stats.findings->avg_words_per_sentence == doctest::Approx(5.0));
    CHECK(stats.findings->avg_source_words == doctest::Approx(10.0));
    REQUIRE(stats.impressions.has_value());
    CHECK(stats.impressions->avg_sentences == doctest::Approx(1.0));
    CHECK(stats.impressions->avg_words_per_sentence == doctest::Approx(2.0));
}

TEST_CASE("corpus_stats reports absence for an empty corpus") {
    const CorpusStats stats = corpus_stats({});
    CHECK(stats.report_count == 0);
    CHECK_FALSE(stats.findings.has_value());
    CHECK_FALSE(stats.impressions.has_value());
    const std::string csv = stats_csv("empty", stats);
    CHECK(csv ==
          "dataset,reports,findings_avg_s,findings_avg_w_per_s,findings_avg_source_w,"
          "impressions_avg_s,impressions_avg_w_per_s,impressions_avg_source_w\n"
          "empty,0,,,,,,\n");
}

TEST_CASE("stats_csv formats a populated row") {
    std::vector<Report> reports = {
        {"r1", "alpha beta gamma delta one. alpha beta gamma delta two.", "stable exam."},
    };
    const std::string csv = stats_csv("toy", corpus_stats(reports));
    CHECK(csv.find("toy,1,2.00,5.00,10.00,1.00,2.00,2.00") != std::string::npos);
}

TEST_CASE("extract_sections finds case-insensitive headers in either order") {
    const RawSections both =
        extract_sections("FINDINGS: Lungs clear.  IMPRESSION: No disease.");
    REQUIRE(both.findings.has_value());
    REQUIRE(both.impression.has_value());
    CHECK(*both.findings == "Lungs clear.");
    CHECK(*both.impression == "No disease.");

    const RawSections reversed =
        extract_sections("impression: stable. findings: heart normal.");
    CHECK(*reversed.impression == "stable.");
    CHECK(*reversed.findings == "heart normal.");

    const RawSections neither = extract_sections("just narrative text");
    CHECK_FALSE(neither.findings.has_value());
    CHECK_FALSE(neither.impression.has_value());

    const RawSections one = extract_sections("Findings: something");
    CHECK(*one.findings == "something");
    CHECK_FALSE(one.impression.has_value());
}
