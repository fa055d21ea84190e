#ifndef PREFCON_UTF8_HPP
#define PREFCON_UTF8_HPP

#include "prefcon/error.hpp"

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace prefcon::utf8 {

PREFCON_DEFINE_ERROR(InvalidUtf8);

/// Decodes to Unicode scalar values. Throws InvalidUtf8 on malformed input
/// (overlongs, surrogates, truncated sequences).
[[nodiscard]] std::u32string decode(std::string_view bytes);

[[nodiscard]] std::string encode(std::u32string_view scalars);

/// Byte offset of every scalar boundary: result[i] is where scalar i starts,
/// result.back() == bytes.size().
[[nodiscard]] std::vector<std::size_t> boundaries(std::string_view bytes);

} // namespace prefcon::utf8

#endif // PREFCON_UTF8_HPP
