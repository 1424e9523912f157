// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

namespace mcdok {

/// 128-bit content hash. Ordered by (hi, lo).
struct Digest {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;

  friend constexpr auto operator<=>(const Digest&, const Digest&) = default;

  /// 32 lowercase hex characters, hi word first.
  std::string hex() const;
  /// Inverse of hex(); throws ValidationError on malformed input.
  static Digest from_hex(std::string_view text);
};

struct DigestHash {
  std::size_t operator()(const Digest& d) const noexcept {
    return static_cast<std::size_t>(d.lo ^ (d.hi * 0x9e3779b97f4a7c15ULL));
  }
};

/// MurmurHash3 x64 128-bit variant over raw bytes.
Digest murmur3_128(std::string_view bytes, std::uint64_t seed = 0);

/// Line-ending and trailing-whitespace normalization applied before digesting.
/// CRLF and lone CR become LF; spaces/tabs/other trailing whitespace at the end
/// of every line are removed. Case, comments and indentation are untouched.
std::string normalize_code(std::string_view code);

/// murmur3_128(normalize_code(code)).
Digest content_digest(std::string_view code);

}  // namespace mcdok
