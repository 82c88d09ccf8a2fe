#include "medcap/core/jsonl.hpp"

#include <fstream>
#include <sstream>

#include "medcap/core/error.hpp"

namespace medcap {

std::string canonical_dump(const json& j) {
    // nlohmann::json keeps object keys in sorted order already; dump() with
    // default separators is the canonical form.
    return j.dump();
}

std::vector<json> parse_jsonl(const std::string& text, const std::string& origin) {
    std::istringstream f(text);
    std::vector<json> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::exception& e) {
            throw_validation(origin + ":" + std::to_string(line_no) + ": bad record: " + e.what());
        }
    }
    return out;
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
    return parse_jsonl(read_text_file(path), path.string());
}

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& lines) {
    std::ostringstream body;
    for (const auto& j : lines) body << canonical_dump(j) << '\n';
    write_text_file(path, body.str());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw_validation("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw_validation("cannot open for write: " + tmp.string());
        f.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!f) throw_validation("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

json read_json_file(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw_validation(path.string() + ": bad json: " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

}  // namespace medcap
