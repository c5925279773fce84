#pragma once

#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dgqa {

/// SHA-256 of `data`, lowercase hex.
inline std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx) throw std::runtime_error("sha256: EVP_MD_CTX_new failed");
    bool ok = EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1 &&
              EVP_DigestUpdate(ctx, data.data(), data.size()) == 1 &&
              EVP_DigestFinal_ex(ctx, digest.data(), &len) == 1;
    EVP_MD_CTX_free(ctx);
    if (!ok) throw std::runtime_error("sha256: digest failed");

    static const char* kHex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0xf]);
    }
    return out;
}

/// Short stable identifier: leading 16 hex chars of SHA-256.
inline std::string short_hash(std::string_view data) {
    return sha256_hex(data).substr(0, 16);
}

/// 64-bit value folded from SHA-256, for seeding deterministic streams.
inline std::uint64_t hash64(std::string_view data) {
    std::string hex = sha256_hex(data);
    std::uint64_t v = 0;
    for (int i = 0; i < 16; ++i) {
        char c = hex[static_cast<std::size_t>(i)];
        v = (v << 4) | static_cast<std::uint64_t>(c <= '9' ? c - '0' : c - 'a' + 10);
    }
    return v;
}

}  // namespace dgqa
