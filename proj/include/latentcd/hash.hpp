#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace latentcd {

// Incremental FNV-1a (64-bit). Used for checkpoint trailers, parameter hashes
// and sampler output fingerprints.
class Fnv1a64 {
public:
    void update(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            state_ ^= static_cast<std::uint64_t>(p[i]);
            state_ *= 0x100000001b3ull;
        }
    }
    std::uint64_t digest() const { return state_; }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ull;
};

std::uint64_t fnv1a64(const void* data, std::size_t n);
std::string hex_u64(std::uint64_t v);

}  // namespace latentcd
