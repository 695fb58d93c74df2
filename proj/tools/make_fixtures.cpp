// Generates the committed synthetic fixtures: a desk-scale report corpus, a
// filter boundary-case corpus with expected labels, a 32-pair gap-sentence
// overfit set, a two-task interference corpus, and a mixed-language concept
// table. Every file is a deterministic function of the fixed seeds below, so
// rerunning the tool reproduces the committed bytes.

#include <cstdio>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "radsum/corpus.hpp"
#include "radsum/gsg.hpp"
#include "radsum/io.hpp"
#include "radsum/rng.hpp"

using nlohmann::json;
using radsum::Rng;
namespace corpus = radsum::corpus;
namespace gsg = radsum::gsg;
namespace io = radsum::io;

namespace {

const std::vector<std::string> kFindingsBank = {
    "lungs",       "clear",      "effusion",   "pneumothorax", "consolidation",
    "cardiac",     "silhouette", "normal",     "mild",         "moderate",
    "focal",       "opacity",    "right",      "left",         "lower",
    "upper",       "lobe",       "pleural",    "no",           "acute",
    "stable",      "unchanged",  "interval",   "fracture",     "edema",
    "atelectasis", "catheter",   "tube",       "device",       "degenerative",
    "bilateral",   "small",      "large",      "chronic",      "airspace",
    "nodule",      "granuloma",  "hilar",      "contour",      "within",
    "limits",      "midline",    "trachea",    "overlying",    "osseous"};

const std::vector<std::string> kImpressionBank = {
    "no",        "acute",        "disease",  "stable",   "exam",     "improving",
    "worsening", "followup",     "advised",  "clear",    "bilateral", "mild",
    "pneumonia", "effusion",     "edema",    "fracture", "opacity",  "atelectasis",
    "pneumothorax", "cardiomegaly"};

// Words the concept table can match, steered into impressions so the tag
// stage has material to work with.
const std::vector<std::string> kConceptWords = {
    "pneumonia", "effusion", "edema",       "fracture",
    "opacity",   "atelectasis", "pneumothorax", "cardiomegaly"};

std::string pick(Rng& rng, const std::vector<std::string>& bank) {
    return bank[static_cast<std::size_t>(rng.uniform_int(bank.size()))];
}

std::string sentence(Rng& rng, const std::vector<std::string>& bank, std::size_t words) {
    std::string out;
    for (std::size_t w = 0; w < words; ++w) {
        if (w > 0) out += ' ';
        out += pick(rng, bank);
    }
    out += '.';
    return out;
}

void write_jsonl_reports(const std::vector<corpus::Report>& reports, const std::string& path) {
    std::string body;
    for (const auto& r : reports) {
        json j;
        j["id"] = r.id;
        j["findings"] = r.findings;
        j["impression"] = r.impression;
        body += j.dump();
        body += '\n';
    }
    io::ensure_parent_dir(path);
    io::write_file_atomic(path, body);
}

// ---------------------------------------------------------------------------
// Main corpus: 120 reports, every one passing the default quality filter,
// 95% of findings at most 9 sentences (the long tail gets 10-11).
// ---------------------------------------------------------------------------

void make_corpus(const std::string& dir) {
    Rng rng(20260819);
    std::vector<corpus::Report> reports;
    std::size_t long_docs = 0;
    for (int i = 0; i < 120; ++i) {
        corpus::Report r;
        char id[16];
        std::snprintf(id, sizeof(id), "rpt-%04d", i);
        r.id = id;

        const bool long_doc = (i % 20) == 7;  // 6 of 120 = 5%
        const std::size_t n_sentences =
            long_doc ? 10 + rng.uniform_int(2) : 3 + rng.uniform_int(7);  // 3..9 or 10..11
        if (n_sentences > 9) ++long_docs;
        for (std::size_t s = 0; s < n_sentences; ++s) {
            if (s > 0) r.findings += ' ';
            r.findings += sentence(rng, kFindingsBank, 4 + rng.uniform_int(3));  // 4..6 words
        }

        const std::size_t n_impression = 2 + rng.uniform_int(4);  // 2..5 words
        std::string imp;
        for (std::size_t w = 0; w < n_impression; ++w) {
            if (w > 0) imp += ' ';
            // Two in three impressions carry a concept-table word.
            if (w == 0 && rng.uniform() < 0.66) {
                imp += pick(rng, kConceptWords);
            } else {
                imp += pick(rng, kImpressionBank);
            }
        }
        r.impression = imp + '.';
        reports.push_back(std::move(r));
    }

    // Invariants the tests rely on.
    const auto filtered = corpus::filter_reports(reports);
    if (!filtered.dropped.empty()) {
        throw std::logic_error("corpus fixture: report dropped by the default filter: " +
                               filtered.dropped.front().first);
    }
    std::size_t short_docs = 0;
    for (const auto& r : reports) {
        if (corpus::segment(r.findings).size() <= 9) ++short_docs;
    }
    if (short_docs * 100 < reports.size() * 95) {
        throw std::logic_error("corpus fixture: fewer than 95% short documents");
    }
    write_jsonl_reports(reports, dir + "/corpus.jsonl");
    std::printf("corpus.jsonl: %zu reports (%zu with more than 9 sentences)\n", reports.size(),
                long_docs);
}

// ---------------------------------------------------------------------------
// Filter boundary corpus: 50 reports pinned to the rule boundaries
// (9 vs 10 findings words, 1 vs 2 impression words, empty sections,
// punctuation-only tokens) with the expected outcome recorded per id.
// ---------------------------------------------------------------------------

std::string words(Rng& rng, std::size_t n) {
    std::string out;
    for (std::size_t w = 0; w < n; ++w) {
        if (w > 0) out += ' ';
        out += pick(rng, kFindingsBank);
    }
    return out;
}

void make_filter_boundary(const std::string& dir) {
    Rng rng(9115);
    std::vector<corpus::Report> reports;
    json expected = json::object();

    auto add = [&](const std::string& id, std::string findings, std::string impression,
                   const std::string& outcome) {
        reports.push_back({id, std::move(findings), std::move(impression)});
        expected[id] = outcome;
    };

    for (int i = 0; i < 50; ++i) {
        char id[16];
        std::snprintf(id, sizeof(id), "fb-%02d", i);
        switch (i % 10) {
            case 0:  // exactly at both minimums
                add(id, words(rng, 10), words(rng, 2), "kept");
                break;
            case 1:  // one findings word short
                add(id, words(rng, 9), words(rng, 2), "short-findings");
                break;
            case 2:  // one impression word short
                add(id, words(rng, 10), words(rng, 1), "short-impression");
                break;
            case 3:  // both short: findings rule is checked first
                add(id, words(rng, 9), words(rng, 1), "short-findings");
                break;
            case 4:  // empty findings
                add(id, "", words(rng, 2), "missing-section");
                break;
            case 5:  // whitespace-only impression
                add(id, words(rng, 10), "   ", "missing-section");
                break;
            case 6:  // punctuation tokens must not count as words
                add(id, words(rng, 9) + " . ,", words(rng, 2), "short-findings");
                break;
            case 7:  // interior punctuation keeps a token one word ("1.5")
                add(id, words(rng, 9) + " 1.5", words(rng, 2), "kept");
                break;
            case 8:  // trailing sentence punctuation does not add words
                add(id, words(rng, 10) + ".", words(rng, 1) + " .", "short-impression");
                break;
            default:  // comfortably above both minimums
                add(id, words(rng, 12) + ".", words(rng, 3) + ".", "kept");
                break;
        }
    }

    // The expectations must match the filter by construction.
    const auto filtered = corpus::filter_reports(reports);
    std::set<std::string> kept_ids;
    for (const auto& r : filtered.kept) kept_ids.insert(r.id);
    for (const auto& [id, reason] : filtered.dropped) {
        if (expected[id] != reason) {
            throw std::logic_error("filter fixture: " + id + " expected " +
                                   expected[id].get<std::string>() + " but filter said " + reason);
        }
    }
    for (const auto& r : reports) {
        const bool kept = kept_ids.count(r.id) != 0;
        if (kept != (expected[r.id] == "kept")) {
            throw std::logic_error("filter fixture: " + r.id + " kept/dropped mismatch");
        }
    }

    write_jsonl_reports(reports, dir + "/filter_boundary.jsonl");
    io::write_file_atomic(dir + "/filter_boundary_expected.json", expected.dump(2) + "\n");
    std::printf("filter_boundary.jsonl: %zu reports, %zu kept\n", reports.size(),
                filtered.kept.size());
}

// ---------------------------------------------------------------------------
// Gap-sentence overfit set: 32 two-sentence reports run through the real
// row builder, with all masked inputs pairwise distinct so the mapping from
// masked input to gap target is one-to-one.
// ---------------------------------------------------------------------------

void make_gsg_overfit(const std::string& dir) {
    Rng rng(417);
    const std::vector<std::string> bank = {
        "alpha", "bravo", "charlie", "delta",  "echo",  "foxtrot", "golf",   "hotel",
        "india", "juliet", "kilo",   "lima",   "mike",  "november", "oscar", "papa",
        "quebec", "romeo", "sierra", "tango",  "uniform", "victor", "whiskey", "xray"};

    std::vector<corpus::Report> reports;
    std::set<std::vector<std::size_t>> used;
    int next_id = 0;
    while (reports.size() < 32) {
        // Five distinct bank words per report; the sorted index tuple must be
        // globally unique so no two masked inputs can collide.
        std::set<std::size_t> chosen;
        while (chosen.size() < 5) chosen.insert(static_cast<std::size_t>(rng.uniform_int(bank.size())));
        std::vector<std::size_t> key(chosen.begin(), chosen.end());
        if (!used.insert(key).second) continue;

        std::vector<std::size_t> order(key);
        rng.shuffle(order);
        corpus::Report r;
        char id[16];
        std::snprintf(id, sizeof(id), "ov-%02d", next_id++);
        r.id = id;
        r.findings = bank[order[0]] + " " + bank[order[1]] + " " + bank[order[2]] + ". " +
                     bank[order[3]] + " " + bank[order[4]] + ".";
        r.impression = bank[order[0]] + " " + bank[order[3]] + ".";
        reports.push_back(std::move(r));
    }

    const auto rows = gsg::build_gsg_rows(reports);
    std::set<std::string> masked;
    for (const auto& row : rows) {
        if (!masked.insert(row.masked_findings).second) {
            throw std::logic_error("overfit fixture: duplicate masked input");
        }
    }
    gsg::write_gsg_dataset(rows, dir + "/gsg_overfit.tsv");
    std::printf("gsg_overfit.tsv: %zu rows\n", rows.size());
}

// ---------------------------------------------------------------------------
// Two-task interference corpus: the gap-sentence task must reconstruct
// findings sentences while the summarization task maps the same sources onto
// a disjoint target vocabulary, so plain fine-tuning overwrites what
// pretraining learned.
// ---------------------------------------------------------------------------

void make_forgetting(const std::string& dir) {
    const std::vector<std::string> p = {"arch", "beam", "crest", "dome",
                                        "eave", "frame", "gable", "hinge"};
    const std::vector<std::string> q = {"ivory", "jade", "khaki", "lilac",
                                        "mauve", "navy", "ochre", "pearl"};
    const std::vector<std::string> r = {"quartz", "rubble", "slate", "tuff",
                                        "umber", "vellum", "wicker", "yarrow"};
    std::vector<corpus::Report> reports;
    for (int i = 0; i < 20; ++i) {
        corpus::Report rep;
        char id[16];
        std::snprintf(id, sizeof(id), "fg-%02d", i);
        rep.id = id;
        const std::size_t k = static_cast<std::size_t>(i);
        rep.findings = p[k % 8] + " " + p[(k + 3) % 8] + " " + q[k % 8] + ". " + q[(k + 1) % 8] +
                       " " + p[(k + 5) % 8] + ".";
        rep.impression = r[k % 8] + " " + r[(k + 2) % 8] + ".";
        reports.push_back(std::move(rep));
    }
    write_jsonl_reports(reports, dir + "/forgetting.jsonl");
    std::printf("forgetting.jsonl: %zu reports\n", reports.size());
}

// ---------------------------------------------------------------------------
// Concept table: pipe-delimited rows, 18 fields, mixing English rows that
// match corpus impression words with non-English rows that the loader must
// drop.
// ---------------------------------------------------------------------------

std::string rrf_row(const std::string& cui, const std::string& lat, const std::string& sab,
                    const std::string& tty, const std::string& str) {
    std::vector<std::string> fields(18, "x");
    fields[0] = cui;
    fields[1] = lat;
    fields[11] = sab;
    fields[12] = tty;
    fields[14] = str;
    std::string line;
    for (const auto& f : fields) {
        line += f;
        line += '|';
    }
    return line;
}

void make_concepts(const std::string& dir) {
    std::vector<std::string> lines = {
        rrf_row("C0032285", "ENG", "SNOMEDCT_US", "PT", "Pneumonia"),
        rrf_row("C0013604", "ENG", "SNOMEDCT_US", "PT", "Edema"),
        rrf_row("C0016658", "ENG", "SNOMEDCT_US", "PT", "Fracture"),
        rrf_row("C0032326", "ENG", "SNOMEDCT_US", "PT", "Pneumothorax"),
        rrf_row("C0004144", "ENG", "SNOMEDCT_US", "PT", "Atelectasis"),
        rrf_row("C0018800", "ENG", "SNOMEDCT_US", "PT", "Cardiomegaly"),
        rrf_row("C0013687", "ENG", "SNOMEDCT_US", "PT", "Effusion"),
        rrf_row("C2073625", "ENG", "SNOMEDCT_US", "PT", "Opacity"),
        rrf_row("C0747651", "ENG", "SNOMEDCT_US", "PT", "Pleural effusion"),
        rrf_row("C0032285", "FRE", "MSHFRE", "PT", "Pneumonie"),
        rrf_row("C0032285", "SPA", "MSHSPA", "PT", "Neumonia"),
        rrf_row("C0013604", "GER", "MSHGER", "PT", "Oedem"),
        rrf_row("C0016658", "FRE", "MSHFRE", "PT", "Fracture osseuse"),
        rrf_row("C0013687", "ITA", "MSHITA", "PT", "Versamento"),
    };
    std::string body;
    for (const auto& line : lines) {
        body += line;
        body += '\n';
    }
    io::ensure_parent_dir(dir + "/concepts.rrf");
    io::write_file_atomic(dir + "/concepts.rrf", body);
    std::printf("concepts.rrf: %zu rows\n", lines.size());
}

}  // namespace

int main(int argc, char** argv) {
    const std::string dir = argc > 1 ? argv[1] : "fixtures";
    try {
        make_corpus(dir);
        make_filter_boundary(dir);
        make_gsg_overfit(dir);
        make_forgetting(dir);
        make_concepts(dir);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "make_fixtures: %s\n", e.what());
        return 1;
    }
    return 0;
}
