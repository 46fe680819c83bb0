// SPDX-License-Identifier: Apache-2.0
#include <atris/hash.hpp>

#include <array>

namespace atris
{

auto fnv1a64(std::string_view data, std::uint64_t seed) -> std::uint64_t
{
    auto h = seed;
    for (unsigned char c: data)
    {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

auto splitmix64(std::uint64_t x) -> std::uint64_t
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

auto to_hex(std::uint64_t value) -> std::string
{
    static constexpr std::array<char, 16> digits {'0', '1', '2', '3', '4', '5', '6', '7',
                                                  '8', '9', 'a', 'b', 'c', 'd', 'e', 'f'};
    auto out = std::string(16, '0');
    for (int i = 15; i >= 0; --i)
    {
        out[static_cast<std::size_t>(i)] = digits[value & 0xf];
        value >>= 4;
    }
    return out;
}

} // namespace atris
