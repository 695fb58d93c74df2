#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace radsum::hash {

// 64-bit FNV-1a. Used for content hashes in run manifests and for deriving
// stage seeds from the global seed. Not cryptographic.
class Fnv1a64 {
public:
    void update(const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            state_ ^= static_cast<std::uint64_t>(p[i]);
            state_ *= 0x100000001b3ULL;
        }
    }
    void update(std::string_view s) { update(s.data(), s.size()); }
    std::uint64_t digest() const { return state_; }

private:
    std::uint64_t state_{0xcbf29ce484222325ULL};
};

std::uint64_t fnv1a64(std::string_view data);
std::string to_hex(std::uint64_t v);

// Hex digest of a file's bytes. Throws std::runtime_error if unreadable.
std::string file_hash(const std::string& path);

// Stage seed derivation: global seed combined with the stage name so that
// stages draw independent but reproducible random streams.
std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view stage);

}  // namespace radsum::hash
