#include "radsum/hash.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace radsum::hash {

std::uint64_t fnv1a64(std::string_view data) {
    Fnv1a64 h;
    h.update(data);
    return h.digest();
}

std::string to_hex(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

std::string file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open file for hashing: " + path);
    }
    Fnv1a64 h;
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    return to_hex(h.digest());
}

std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view stage) {
    Fnv1a64 h;
    std::uint64_t le = global_seed;
    std::array<unsigned char, 8> bytes{};
    for (auto& b : bytes) {
        b = static_cast<unsigned char>(le & 0xFF);
        le >>= 8;
    }
    h.update(bytes.data(), bytes.size());
    h.update(stage);
    return h.digest();
}

}  // namespace radsum::hash
