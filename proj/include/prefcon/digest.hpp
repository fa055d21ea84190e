#ifndef PREFCON_DIGEST_HPP
#define PREFCON_DIGEST_HPP

#include <filesystem>
#include <string>
#include <string_view>

namespace prefcon {

/// Lower-case hex SHA-256.
[[nodiscard]] std::string sha256_hex(std::string_view data);

[[nodiscard]] std::string sha256_file_hex(std::filesystem::path const & path);

[[nodiscard]] std::string read_file(std::filesystem::path const & path);

} // namespace prefcon

#endif // PREFCON_DIGEST_HPP
