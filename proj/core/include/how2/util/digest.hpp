#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace how2::util {

/// Lower-case hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// Lower-case hex SHA-256 of a file's bytes. Throws IoError if unreadable.
std::string file_sha256_hex(const std::filesystem::path& path);

}  // namespace how2::util
