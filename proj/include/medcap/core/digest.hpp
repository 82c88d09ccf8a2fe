#pragma once

#include <cstdint>
#include <span>
#include <string>

namespace medcap {

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(const std::string& text);

/// Incremental SHA-256. update_field() length-prefixes its input so that
/// field boundaries are unambiguous when several variable-length parts feed
/// one digest.
class Sha256 {
public:
    Sha256();
    ~Sha256();
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    void update(std::span<const std::uint8_t> bytes);
    void update(const std::string& text);
    void update_field(std::span<const std::uint8_t> bytes);
    void update_field(const std::string& text);

    /// Finalizes and returns lowercase hex; the object must not be reused.
    std::string hex();

private:
    void* ctx_ = nullptr;
};

}  // namespace medcap
