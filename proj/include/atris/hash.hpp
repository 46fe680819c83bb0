// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace atris
{

constexpr std::uint64_t fnv_offset_basis = 0xcbf29ce484222325ULL;

/// 64-bit FNV-1a, optionally continuing from a previous hash value.
[[nodiscard]] auto fnv1a64(std::string_view data, std::uint64_t seed = fnv_offset_basis) -> std::uint64_t;

/// SplitMix64 finalizer; a good bijective mixer for deriving independent streams.
[[nodiscard]] auto splitmix64(std::uint64_t x) -> std::uint64_t;

/// Lower-case, zero-padded 16 digit hexadecimal rendering.
[[nodiscard]] auto to_hex(std::uint64_t value) -> std::string;

} // namespace atris
