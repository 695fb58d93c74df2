#include "radsum/vocab.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "json.hpp"
#include "radsum/gsg.hpp"
#include "radsum/io.hpp"

namespace radsum::vocab {

namespace {

std::vector<std::string> special_tokens() {
    std::vector<std::string> specials = {"<pad>", "</s>", "<unk>"};
    for (std::size_t k = 0; k < static_cast<std::size_t>(Vocab::sentinel_count); ++k) {
        specials.push_back(gsg::sentinel(k));
    }
    return specials;
}

Vocab from_tokens(std::vector<std::string> tokens) {
    Vocab v;
    v.id_to_token = std::move(tokens);
    for (std::size_t i = 0; i < v.id_to_token.size(); ++i) {
        if (!v.token_to_id.emplace(v.id_to_token[i], static_cast<Index>(i)).second) {
            throw std::runtime_error("vocab: duplicate token '" + v.id_to_token[i] + "'");
        }
    }
    return v;
}

}  // namespace

Index Vocab::id_of(const std::string& token) const {
    const auto it = token_to_id.find(token);
    return it == token_to_id.end() ? unk_id : it->second;
}

const std::string& Vocab::token_of(Index id) const {
    if (id < 0 || id >= size()) {
        throw std::out_of_range("vocab: id " + std::to_string(id) + " outside [0," +
                                std::to_string(size()) + ")");
    }
    return id_to_token[static_cast<std::size_t>(id)];
}

Vocab build_vocab(const std::vector<std::string>& texts, std::size_t max_words) {
    std::vector<std::string> tokens = special_tokens();
    std::map<std::string, std::size_t> counts;  // ordered: lexicographic tie-break for free
    {
        Vocab specials_only = from_tokens(tokens);
        for (const auto& text : texts) {
            std::string cur;
            const auto flush = [&]() {
                if (!cur.empty()) {
                    if (specials_only.token_to_id.find(cur) ==
                        specials_only.token_to_id.end()) {
                        counts[cur] += 1;
                    }
                    cur.clear();
                }
            };
            for (char c : text) {
                if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
                    flush();
                } else {
                    cur += c;
                }
            }
            flush();
        }
    }
    std::vector<std::pair<std::string, std::size_t>> by_freq(counts.begin(), counts.end());
    std::stable_sort(by_freq.begin(), by_freq.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    const std::size_t keep = std::min(max_words, by_freq.size());
    for (std::size_t i = 0; i < keep; ++i) tokens.push_back(by_freq[i].first);
    return from_tokens(std::move(tokens));
}

void save_vocab(const Vocab& vocab, const std::filesystem::path& path) {
    nlohmann::json doc;
    doc["version"] = 1;
    doc["tokens"] = vocab.id_to_token;
    io::write_file_atomic(path.string(), doc.dump(2) + "\n");
}

Vocab load_vocab(const std::filesystem::path& path) {
    const auto doc = nlohmann::json::parse(io::read_text_file(path.string()));
    if (!doc.contains("version") || doc["version"].get<int>() != 1) {
        throw std::runtime_error("vocab file " + path.string() + ": unsupported version");
    }
    return from_tokens(doc["tokens"].get<std::vector<std::string>>());
}

std::vector<Index> encode_tokens(const Vocab& vocab, const std::vector<std::string>& tokens) {
    std::vector<Index> ids;
    ids.reserve(tokens.size());
    for (const auto& tok : tokens) ids.push_back(vocab.id_of(tok));
    return ids;
}

std::vector<std::string> decode_ids(const Vocab& vocab, const std::vector<Index>& ids,
                                    bool strip_specials) {
    std::vector<std::string> tokens;
    for (Index id : ids) {
        if (strip_specials &&
            (id == Vocab::pad_id || id == Vocab::eos_id || id == Vocab::unk_id)) {
            continue;
        }
        tokens.push_back(vocab.token_of(id));
    }
    return tokens;
}

}  // namespace radsum::vocab
