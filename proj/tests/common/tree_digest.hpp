#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "toporag/io.hpp"

namespace testutil {

// Relative path -> file content for every file under `root`. Wall-clock
// values under "timing" in state.json and report.json are dropped.
inline std::map<std::string, std::string> tree_digest(const std::filesystem::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = std::filesystem::relative(entry.path(), root).generic_string();
    const std::string name = entry.path().filename().string();
    if (name == "state.json" || name == "report.json") {
      auto j = toporag::read_json_file(entry.path());
      j.erase("timing");
      out[rel] = toporag::dump_json(j);
    } else {
      out[rel] = toporag::read_text_file(entry.path());
    }
  }
  return out;
}

}  // namespace testutil
