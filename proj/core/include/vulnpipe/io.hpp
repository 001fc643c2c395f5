#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace vulnpipe::io {

/// Reads a whole file as raw bytes. Throws IoError.
std::string read_file(const std::filesystem::path& path);

/// Writes bytes, creating parent directories. Throws IoError.
void write_file(const std::filesystem::path& path, std::string_view bytes);

/// Reads standard input to EOF.
std::string read_stdin();

}  // namespace vulnpipe::io
