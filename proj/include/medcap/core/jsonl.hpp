#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace medcap {

using json = nlohmann::json;

/// Canonical serialization used by every file this tool writes: compact,
/// object keys sorted. Round-tripping a canonical file is byte-identical.
std::string canonical_dump(const json& j);

/// Blank lines are skipped; parse failures report origin:line.
std::vector<json> parse_jsonl(const std::string& text, const std::string& origin);
std::vector<json> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<json>& lines);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& j);

}  // namespace medcap
