#pragma once

// Word-level vocabulary with fixed special tokens: ids 0/1/2 are pad, end of
// sequence, and unknown; ids 3..102 are the hundred sentinel tokens
// <extra_id_0>..<extra_id_99>; words follow, most frequent first, ties in
// lexicographic order.

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

namespace radsum::vocab {

using Index = std::int64_t;

struct Vocab {
    static constexpr Index pad_id = 0;
    static constexpr Index eos_id = 1;
    static constexpr Index unk_id = 2;
    static constexpr Index first_sentinel_id = 3;
    static constexpr Index sentinel_count = 100;

    std::vector<std::string> id_to_token;
    std::unordered_map<std::string, Index> token_to_id;

    Index size() const { return static_cast<Index>(id_to_token.size()); }

    // Unknown words map to unk_id.
    Index id_of(const std::string& token) const;
    // Throws std::out_of_range on a bad id.
    const std::string& token_of(Index id) const;
};

// Counts whitespace-separated tokens across the given texts and keeps at
// most max_words non-special entries. Special tokens never count as words.
Vocab build_vocab(const std::vector<std::string>& texts, std::size_t max_words = 2000);

// JSON file: {"version":1,"tokens":[...]} — order defines the ids.
void save_vocab(const Vocab& vocab, const std::filesystem::path& path);
Vocab load_vocab(const std::filesystem::path& path);

std::vector<Index> encode_tokens(const Vocab& vocab, const std::vector<std::string>& tokens);

// Ids back to tokens; when strip_specials is set, pad/eos/unk are dropped
// (sentinels are kept — they are meaningful output).
std::vector<std::string> decode_ids(const Vocab& vocab, const std::vector<Index>& ids,
                                    bool strip_specials = true);

}  // namespace radsum::vocab
