#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

namespace toporag {

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

// Pretty JSON with a trailing newline; key order is lexicographic so the
// bytes are stable for diffing.
std::string dump_json(const nlohmann::json& value);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& value);
nlohmann::json read_json_file(const std::filesystem::path& path);

std::string sha256_hex(std::string_view data);

}  // namespace toporag
