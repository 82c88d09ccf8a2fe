#include "medcap/core/digest.hpp"

#include <openssl/evp.h>

#include <array>
#include <stdexcept>

namespace medcap {

namespace {

std::string to_hex(const unsigned char* bytes, std::size_t n) {
    static const char* digits = "0123456789abcdef";
    std::string out(n * 2, '0');
    for (std::size_t i = 0; i < n; ++i) {
        out[2 * i] = digits[bytes[i] >> 4];
        out[2 * i + 1] = digits[bytes[i] & 0xf];
    }
    return out;
}

}  // namespace

Sha256::Sha256() {
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
        EVP_MD_CTX_free(ctx);
        throw std::runtime_error("sha256 init failed");
    }
    ctx_ = ctx;
}

Sha256::~Sha256() {
    if (ctx_ != nullptr) EVP_MD_CTX_free(static_cast<EVP_MD_CTX*>(ctx_));
}

void Sha256::update(std::span<const std::uint8_t> bytes) {
    if (EVP_DigestUpdate(static_cast<EVP_MD_CTX*>(ctx_), bytes.data(), bytes.size()) != 1) {
        throw std::runtime_error("sha256 update failed");
    }
}

void Sha256::update(const std::string& text) {
    update(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void Sha256::update_field(std::span<const std::uint8_t> bytes) {
    std::array<std::uint8_t, 8> len{};
    std::uint64_t n = bytes.size();
    for (int i = 0; i < 8; ++i) len[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>((n >> (8 * i)) & 0xff);
    update(std::span<const std::uint8_t>(len.data(), len.size()));
    update(bytes);
}

void Sha256::update_field(const std::string& text) {
    update_field(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string Sha256::hex() {
    unsigned char out[EVP_MAX_MD_SIZE];
    unsigned int out_len = 0;
    if (EVP_DigestFinal_ex(static_cast<EVP_MD_CTX*>(ctx_), out, &out_len) != 1) {
        throw std::runtime_error("sha256 final failed");
    }
    return to_hex(out, out_len);
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
    Sha256 h;
    h.update(bytes);
    return h.hex();
}

std::string sha256_hex(const std::string& text) {
    Sha256 h;
    h.update(text);
    return h.hex();
}

}  // namespace medcap
