#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dgqa/errors.hpp"
#include "dgqa/hash.hpp"

namespace dgqa {

using Json = nlohmann::json;

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Write via temp file + rename so readers never see partial content.
inline void write_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError("cannot write file: " + path.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
    }
    std::filesystem::rename(tmp, path);
}

inline std::string sha256_of_file(const std::filesystem::path& path) {
    return sha256_hex(read_file(path));
}

inline Json parse_json(std::string_view text, const std::string& what) {
    Json j = Json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ParseError("invalid JSON in " + what, std::string(text));
    return j;
}

inline Json load_json(const std::filesystem::path& path) {
    return parse_json(read_file(path), path.string());
}

/// One JSON object per line; blank lines are skipped.
inline std::vector<Json> load_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file: " + path.string());
    std::vector<Json> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        Json j = Json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw ParseError("invalid JSON on line " + std::to_string(lineno) + " of " +
                             path.string(), line);
        records.push_back(std::move(j));
    }
    return records;
}

inline void save_jsonl(const std::filesystem::path& path, const std::vector<Json>& records) {
    std::string out;
    for (const auto& r : records) {
        out += r.dump();
        out += '\n';
    }
    write_file(path, out);
}

}  // namespace dgqa
