#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "radsum/corpus.hpp"
#include "radsum/io.hpp"
#include "radsum/tagging.hpp"

namespace fs = std::filesystem;
using radsum::corpus::Report;
using radsum::tagging::ConceptRow;
using radsum::tagging::TagAssignment;
using radsum::tagging::TfidfModel;
using radsum::tagging::TfidfOptions;
namespace tagging = radsum::tagging;

namespace {

using Docs = std::vector<std::vector<std::string>>;

fs::path temp_file(const std::string& name, const std::string& content) {
    const fs::path p = fs::temp_directory_path() / name;
    radsum::io::write_file_atomic(p.string(), content);
    return p;
}

// An 18-field pipe-delimited row with the tested positions filled in.
std::string rrf_row(const std::string& cui, const std::string& lat, const std::string& sab,
                    const std::string& tty, const std::string& str) {
    std::vector<std::string> fields(18, "x");
    fields[0] = cui;
    fields[1] = lat;
    fields[11] = sab;
    fields[12] = tty;
    fields[14] = str;
    std::string row;
    for (const auto& f : fields) {
        row += f;
        row += '|';
    }
    return row;
}

}  // namespace

// ---------------------------------------------------------------------------
// TF-IDF fitting and scoring
// ---------------------------------------------------------------------------

TEST_CASE("document frequencies produce the textbook scores") {
    const Docs docs = {{"cough", "fever"}, {"cough"}};
    const TfidfModel model = tagging::fit_tfidf(docs);
    CHECK(model.doc_count == 2);
    CHECK(tagging::tfidf_score(model, docs[0], "fever") == std::log(2.0));
    CHECK(tagging::tfidf_score(model, docs[0], "cough") == 0.0);
    CHECK(tagging::tfidf_score(model, docs[1], "cough") == 0.0);
    CHECK(tagging::tfidf_score(model, docs[1], "fever") == 0.0);  // absent
    CHECK(tagging::tfidf_score(model, docs[0], "unknown") == 0.0);
}

TEST_CASE("a term in every document scores zero everywhere") {
    const Docs docs = {{"clear", "lungs"}, {"clear"}, {"clear", "heart"}};
    const TfidfModel model = tagging::fit_tfidf(docs);
    for (const auto& doc : docs) {
        CHECK(tagging::tfidf_score(model, doc, "clear") == 0.0);
    }
    CHECK(tagging::tfidf_score(model, docs[0], "lungs") == std::log(3.0));
}

TEST_CASE("a single-document corpus has all-zero idf") {
    const Docs docs = {{"a", "b", "c"}};
    const TfidfModel model = tagging::fit_tfidf(docs);
    for (double v : model.idf) CHECK(v == 0.0);
    CHECK_THROWS_AS(tagging::fit_tfidf({}), std::invalid_argument);
}

TEST_CASE("inverse document frequency is never negative") {
    const Docs docs = {{"a", "b"}, {"b", "c"}, {"c", "a"}, {"a"}};
    const TfidfModel model = tagging::fit_tfidf(docs);
    for (double v : model.idf) CHECK(v >= 0.0);

    TfidfOptions smooth;
    smooth.smooth_idf = true;
    const TfidfModel sm = tagging::fit_tfidf({{"x"}, {"x"}}, smooth);
    // Ubiquitous term under smoothing: ln(3/3) + 1 = 1, still positive.
    CHECK(sm.idf[sm.vocabulary.at("x")] == 1.0);
}

TEST_CASE("repeated terms scale the score linearly") {
    const Docs docs = {{"p", "p", "q"}, {"q"}};
    const TfidfModel model = tagging::fit_tfidf(docs);
    CHECK(tagging::tfidf_score(model, docs[0], "p") == 2.0 * std::log(2.0));
}

TEST_CASE("adjacent pairs become terms when enabled") {
    TfidfOptions opts;
    opts.bigrams = true;
    const Docs docs = {{"pleural", "effusion"}, {"clear"}};
    const TfidfModel model = tagging::fit_tfidf(docs, opts);
    CHECK(model.vocabulary.count("pleural effusion") == 1);
    CHECK(tagging::tfidf_score(model, docs[0], "pleural effusion") == std::log(2.0));
    const auto kws = tagging::top_keywords(model, docs, 10);
    CHECK(std::find(kws.begin(), kws.end(), "pleural effusion") != kws.end());
}

// ---------------------------------------------------------------------------
// Keyword ranking
// ---------------------------------------------------------------------------

TEST_CASE("the strongest term wins the ranking") {
    const Docs docs = {{"cough", "fever"}, {"cough"}};
    const TfidfModel model = tagging::fit_tfidf(docs);
    CHECK(tagging::top_keywords(model, docs, 1) == std::vector<std::string>{"fever"});
    // Large n returns only nonzero-score terms.
    CHECK(tagging::top_keywords(model, docs, 50) == std::vector<std::string>{"fever"});
}

TEST_CASE("identical documents yield no keywords") {
    const Docs docs = {{"no", "change"}, {"no", "change"}};
    const TfidfModel model = tagging::fit_tfidf(docs);
    CHECK(tagging::top_keywords(model, docs, 5).empty());
}

TEST_CASE("score ties break lexicographically") {
    const Docs docs = {{"b", "a"}, {"c"}};
    const TfidfModel model = tagging::fit_tfidf(docs);
    CHECK(tagging::top_keywords(model, docs, 5) == std::vector<std::string>{"a", "b", "c"});
    CHECK(tagging::top_keywords(model, docs, 2) == std::vector<std::string>{"a", "b"});
    CHECK_THROWS_AS(tagging::top_keywords(model, docs, 0), std::invalid_argument);
}

TEST_CASE("higher counts outrank ties") {
    const Docs docs = {{"rare", "rare", "alpha"}, {"beta"}};
    const TfidfModel model = tagging::fit_tfidf(docs);
    const auto kws = tagging::top_keywords(model, docs, 3);
    REQUIRE(kws.size() == 3);
    CHECK(kws[0] == "rare");  // 2 ln 2 beats 1 ln 2
    CHECK(kws[1] == "alpha");
    CHECK(kws[2] == "beta");
}

// ---------------------------------------------------------------------------
// Concept table loading
// ---------------------------------------------------------------------------

TEST_CASE("loading keeps English rows and skips broken ones") {
    std::string content;
    content += rrf_row("C0032285", "ENG", "SNOMED", "PT", "Pneumonia") + "\n";
    content += rrf_row("C0032285", "SPA", "SNOMED", "PT", "Neumonia") + "\n";
    content += "C0000001|ENG|only|four|fields\n";
    content += rrf_row("BAD12345", "ENG", "SNOMED", "PT", "Broken id") + "\n";
    content += rrf_row("C0015967", "ENG", "ICD10", "AB", "  Fever  of unknown origin ") + "\n";
    content += rrf_row("C0013404", "FRE", "MSH", "MH", "Dyspnee") + "\n";
    const fs::path p = temp_file("radsum_concepts.rrf", content);

    std::vector<std::string> warnings;
    const auto rows = tagging::load_concepts(p, &warnings);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].cui == "C0032285");
    CHECK(rows[0].lat == "ENG");
    CHECK(rows[0].sab == "SNOMED");
    CHECK(rows[0].tty == "PT");
    CHECK(rows[0].str == "Pneumonia");
    CHECK(rows[0].str_norm == "pneumonia");
    CHECK(rows[1].cui == "C0015967");
    CHECK(rows[1].str_norm == "fever of unknown origin");

    REQUIRE(warnings.size() == 2);
    CHECK(warnings[0].find("line 3") != std::string::npos);
    CHECK(warnings[0].find("18 fields") != std::string::npos);
    CHECK(warnings[1].find("line 4") != std::string::npos);
    CHECK(warnings[1].find("BAD12345") != std::string::npos);
    fs::remove(p);
}

TEST_CASE("rows without the trailing delimiter also parse") {
    std::string row = rrf_row("C0011991", "ENG", "MSH", "MH", "Diarrhea");
    row.pop_back();  // strip the trailing '|'
    const fs::path p = temp_file("radsum_concepts2.rrf", row + "\n");
    const auto rows = tagging::load_concepts(p);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].str == "Diarrhea");
    fs::remove(p);
}

TEST_CASE("no non-English row ever survives") {
    std::string content;
    for (const std::string lat : {"SPA", "FRE", "GER", "JPN", "ENG", "POR"}) {
        content += rrf_row("C0000039", lat, "SRC", "PT", "term-" + lat) + "\n";
    }
    const fs::path p = temp_file("radsum_concepts3.rrf", content);
    const auto rows = tagging::load_concepts(p);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].lat == "ENG");
    fs::remove(p);
}

// ---------------------------------------------------------------------------
// Tag assignment
// ---------------------------------------------------------------------------

namespace {

std::vector<ConceptRow> fixture_concepts() {
    const fs::path p = temp_file(
        "radsum_concepts_fix.rrf",
        rrf_row("C0032285", "ENG", "SNOMED", "PT", "Pneumonia") + "\n" +
            rrf_row("C0015967", "ENG", "SNOMED", "PT", "Fever") + "\n" +
            rrf_row("C0013604", "ENG", "SNOMED", "PT", "Edema") + "\n");
    auto rows = tagging::load_concepts(p);
    fs::remove(p);
    return rows;
}

}  // namespace

TEST_CASE("keywords tag the reports whose impressions mention them") {
    const auto concepts = fixture_concepts();
    const std::vector<std::string> keywords = {"pneumonia", "fever"};
    const std::vector<Report> reports = {
        {"r1", "findings text", "Pneumonia suspected. Fever noted."},
        {"r2", "findings text", "Lungs are clear."},
        {"r3", "findings text", "fever fever fever."},
        {"r4", "findings text", "Edema present."},  // concept known, keyword not extracted
    };
    const auto assignments = tagging::assign_tags(keywords, concepts, reports);
    REQUIRE(assignments.size() == 4);

    REQUIRE(assignments[0].tags.size() == 2);
    CHECK(assignments[0].report_id == "r1");
    CHECK(assignments[0].tags[0].keyword == "pneumonia");
    CHECK(assignments[0].tags[0].cui == "C0032285");
    CHECK(assignments[0].tags[0].str == "Pneumonia");
    CHECK(assignments[0].tags[1].keyword == "fever");
    CHECK(assignments[0].tags[1].cui == "C0015967");

    CHECK(assignments[1].tags.empty());
    REQUIRE(assignments[2].tags.size() == 1);  // repeated mention tags once
    CHECK(assignments[2].tags[0].keyword == "fever");
    CHECK(assignments[3].tags.empty());  // "edema" was not in the keyword list
}

TEST_CASE("tag order follows impression position") {
    const auto concepts = fixture_concepts();
    const std::vector<std::string> keywords = {"pneumonia", "fever"};
    const std::vector<Report> reports = {
        {"a", "f", "fever then pneumonia"},
        {"b", "f", "pneumonia then fever"},
    };
    const auto assignments = tagging::assign_tags(keywords, concepts, reports);
    CHECK(assignments[0].tags[0].keyword == "fever");
    CHECK(assignments[0].tags[1].keyword == "pneumonia");
    CHECK(assignments[1].tags[0].keyword == "pneumonia");
    CHECK(assignments[1].tags[1].keyword == "fever");
}

TEST_CASE("duplicate concept strings resolve to the first table row") {
    const fs::path p = temp_file(
        "radsum_concepts_dup.rrf",
        rrf_row("C0000111", "ENG", "SRC1", "PT", "Fever") + "\n" +
            rrf_row("C0000222", "ENG", "SRC2", "SY", "FEVER") + "\n");
    const auto concepts = tagging::load_concepts(p);
    fs::remove(p);
    REQUIRE(concepts.size() == 2);

    const std::vector<Report> reports = {{"r", "f", "fever persists"}};
    const auto assignments = tagging::assign_tags({"fever"}, concepts, reports);
    REQUIRE(assignments[0].tags.size() == 1);
    CHECK(assignments[0].tags[0].cui == "C0000111");
}

TEST_CASE("every emitted tag is reconstructible from keywords and concepts") {
    const auto concepts = fixture_concepts();
    const std::vector<std::string> keywords = {"pneumonia", "fever", "nothing"};
    const std::vector<Report> reports = {
        {"r1", "f", "pneumonia with fever and edema."},
        {"r2", "f", "nothing to report."},  // keyword without a concept row
    };
    const auto assignments = tagging::assign_tags(keywords, concepts, reports);
    for (const TagAssignment& a : assignments) {
        for (const auto& tag : a.tags) {
            // Brute-force join over K x C.
            bool found = false;
            for (const auto& kw : keywords) {
                for (const auto& row : concepts) {
                    if (kw == tag.keyword && row.cui == tag.cui && row.str == tag.str) {
                        found = true;
                    }
                }
            }
            CHECK(found);
        }
    }
    CHECK(assignments[1].tags.empty());  // "nothing" matches no concept
}

// ---------------------------------------------------------------------------
// Tag dataset emission
// ---------------------------------------------------------------------------

TEST_CASE("the emitted dataset round-trips the assignments") {
    const auto concepts = fixture_concepts();
    const std::vector<std::string> keywords = {"pneumonia", "fever"};
    const std::vector<Report> reports = {
        {"r1", "lungs show consolidation", "Pneumonia and fever."},
        {"r2", "heart size normal", "No acute disease."},
    };
    const auto assignments = tagging::assign_tags(keywords, concepts, reports);
    const fs::path out = fs::temp_directory_path() / "radsum_tags.jsonl";
    tagging::build_tag_dataset(reports, assignments, out);

    const auto rows = tagging::load_tag_dataset(out);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].id == "r1");
    CHECK(rows[0].findings == "lungs show consolidation");
    CHECK(rows[0].tags == "pneumonia fever");
    CHECK(rows[1].tags == "none");

    // Reconstruct keyword lists from the emitted targets.
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::vector<std::string> parsed;
        if (rows[i].tags != "none") {
            std::string cur;
            for (char c : rows[i].tags + " ") {
                if (c == ' ') {
                    if (!cur.empty()) parsed.push_back(cur);
                    cur.clear();
                } else {
                    cur.push_back(c);
                }
            }
        }
        REQUIRE(parsed.size() == assignments[i].tags.size());
        for (std::size_t t = 0; t < parsed.size(); ++t) {
            CHECK(parsed[t] == assignments[i].tags[t].keyword);
        }
    }
    fs::remove(out);
}

TEST_CASE("malformed dataset rows are rejected on load") {
    const fs::path p = temp_file("radsum_tags_bad.jsonl", "{\"id\": \"x\"}\n");
    CHECK_THROWS_AS(tagging::load_tag_dataset(p), std::runtime_error);
    const fs::path p2 = temp_file("radsum_tags_bad2.jsonl", "not json at all\n");
    CHECK_THROWS_AS(tagging::load_tag_dataset(p2), std::runtime_error);
    fs::remove(p);
    fs::remove(p2);
}
