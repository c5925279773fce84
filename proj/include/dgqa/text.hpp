#pragma once

#include <algorithm>
#include <cctype>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace dgqa {

inline std::string trim(std::string_view s) {
    auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    std::size_t b = 0, e = s.size();
    while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

/// Lowercase, keep only alphanumerics and single spaces. Used for
/// punctuation-insensitive label and path matching.
inline std::string normalize_loose(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char ch : s) {
        unsigned char c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) {
            if (pending_space && !out.empty()) out.push_back(' ');
            pending_space = false;
            out.push_back(static_cast<char>(std::tolower(c)));
        } else {
            pending_space = true;
        }
    }
    return out;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            parts.emplace_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return parts;
}

inline std::vector<std::string> split_lines(std::string_view s) {
    if (s.empty()) return {};
    std::vector<std::string> lines = split(s, '\n');
    if (!lines.empty() && lines.back().empty()) lines.pop_back();  // trailing newline
    for (auto& l : lines)
        if (!l.empty() && l.back() == '\r') l.pop_back();
    return lines;
}

inline bool starts_with_ci(std::string_view text, std::string_view prefix) {
    if (text.size() < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(text[i])) !=
            std::tolower(static_cast<unsigned char>(prefix[i])))
            return false;
    }
    return true;
}

inline std::string replace_all(std::string text, std::string_view from, std::string_view to) {
    if (from.empty()) return text;
    std::size_t pos = 0;
    while ((pos = text.find(from, pos)) != std::string::npos) {
        text.replace(pos, from.size(), to);
        pos += to.size();
    }
    return text;
}

/// Levenshtein distance over bytes.
inline std::size_t edit_distance(std::string_view a, std::string_view b) {
    const std::size_t n = a.size(), m = b.size();
    std::vector<std::size_t> prev(m + 1), cur(m + 1);
    for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= m; ++j) {
            std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

/// Named tokenizer. The name travels with every metric report so results
/// are labeled with the tokenization that produced them.
struct Tokenizer {
    std::string name;
    std::function<std::vector<std::string>(std::string_view)> run;

    std::vector<std::string> operator()(std::string_view s) const { return run(s); }
};

inline Tokenizer whitespace_tokenizer() {
    return Tokenizer{
        "whitespace",
        [](std::string_view s) {
            std::vector<std::string> toks;
            std::size_t i = 0;
            while (i < s.size()) {
                while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
                std::size_t start = i;
                while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
                if (i > start) toks.emplace_back(s.substr(start, i - start));
            }
            return toks;
        }};
}

/// Refusal stems shared by negative-example generation and response
/// evaluation, so both sides agree on what counts as a refusal.
inline const std::vector<std::string>& default_refusal_patterns() {
    static const std::vector<std::string> kPatterns = {
        "i'm sorry",
        "i am sorry",
        "i can't find",
        "i cannot find",
        "does not mention",
        "doesn't mention",
        "does not contain",
        "doesn't contain",
        "i don't know",
        "i do not know",
        "no information about",
        "not sure of the answer",
        "unable to find",
    };
    return kPatterns;
}

/// True when `response` reads as a refusal: one of the stems occurs as a
/// substring after loose normalization.
inline bool is_refusal(std::string_view response,
                       const std::vector<std::string>& patterns = default_refusal_patterns()) {
    const std::string norm = normalize_loose(response);
    for (const auto& p : patterns) {
        if (norm.find(normalize_loose(p)) != std::string::npos) return true;
    }
    return false;
}

}  // namespace dgqa
