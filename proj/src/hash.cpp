#include "latentcd/hash.hpp"

#include <array>
#include <cstdio>

namespace latentcd {

std::uint64_t fnv1a64(const void* data, std::size_t n) {
    Fnv1a64 h;
    h.update(data, n);
    return h.digest();
}

std::string hex_u64(std::uint64_t v) {
    std::array<char, 19> buf{};
    std::snprintf(buf.data(), buf.size(), "%016llx",
                  static_cast<unsigned long long>(v));
    return std::string(buf.data());
}

}  // namespace latentcd
