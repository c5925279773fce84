#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dgqa/errors.hpp"
#include "dgqa/hash.hpp"
#include "dgqa/io.hpp"
#include "dgqa/random.hpp"
#include "dgqa/text.hpp"

namespace dgqa {

/// Hierarchy path: ordered section titles from the root down to the node.
using SectionPath = std::vector<std::string>;

inline constexpr char kPathSeparator = '>';

/// Display form: "English > Connections > Connecting an Antenna".
inline std::string join_path(const SectionPath& path) {
    std::string out;
    for (std::size_t i = 0; i < path.size(); ++i) {
        if (i) out += " > ";
        out += path[i];
    }
    return out;
}

/// Accepts both "A > B" and "A>B"; components are trimmed.
inline SectionPath parse_path(std::string_view joined) {
    SectionPath path;
    for (const auto& part : split(joined, kPathSeparator)) {
        std::string t = trim(part);
        if (!t.empty()) path.push_back(std::move(t));
    }
    return path;
}

/// Deterministic section identifier: hash of the display-form path.
inline std::string section_id(const SectionPath& path) {
    return short_hash(join_path(path));
}

/// One addressable passage of the structured manual. Bodies keep image
/// placeholders ([image_N.png]) and [NOTE] lines verbatim; the pipeline
/// treats them as opaque tokens.
struct ManualSection {
    SectionPath path;
    std::string title;  // last path component
    std::string body;
    std::string id;     // section_id(path)
};

namespace detail {

/// Every '['-token that looks like an image reference must be exactly
/// [image_<digits>.png].
inline void check_image_placeholders(const ManualSection& s) {
    const std::string& b = s.body;
    std::size_t pos = 0;
    while ((pos = b.find("[image", pos)) != std::string::npos) {
        const std::size_t close = b.find(']', pos);
        if (close == std::string::npos)
            throw ValidationError("unterminated image placeholder in section: " +
                                  join_path(s.path));
        const std::string token = b.substr(pos, close - pos + 1);
        bool ok = token.size() > std::string("[image_.png]").size() &&
                  token.rfind("[image_", 0) == 0 &&
                  token.compare(token.size() - 5, 5, ".png]") == 0;
        if (ok) {
            for (std::size_t i = 7; i + 5 < token.size(); ++i)
                if (!std::isdigit(static_cast<unsigned char>(token[i]))) ok = false;
        }
        if (!ok)
            throw ValidationError("malformed image placeholder '" + token +
                                  "' in section: " + join_path(s.path));
        pos = close + 1;
    }
}

}  // namespace detail

enum class CorpusForm { tree, flat };

/// Immutable after load; safe for concurrent readers.
class Corpus {
public:
    Corpus() = default;

    Corpus(std::vector<ManualSection> sections, std::string source_label)
        : sections_(std::move(sections)), source_label_(std::move(source_label)) {
        for (std::size_t i = 0; i < sections_.size(); ++i) {
            auto& s = sections_[i];
            if (s.path.empty())
                throw ValidationError("section with empty path in corpus '" + source_label_ + "'");
            for (const auto& title : s.path)
                if (title.find(kPathSeparator) != std::string::npos)
                    throw ValidationError("section title contains reserved '>' separator: " +
                                          title);
            s.title = s.path.back();
            s.id = section_id(s.path);
            detail::check_image_placeholders(s);
            auto [it, inserted] = index_.emplace(join_path(s.path), i);
            if (!inserted)
                throw ValidationError("duplicate section path: " + join_path(s.path));
        }
        if (sections_.empty()) throw ValidationError("empty corpus: " + source_label_);
    }

    const std::string& source_label() const { return source_label_; }
    const std::vector<ManualSection>& sections() const { return sections_; }
    std::size_t size() const { return sections_.size(); }

    bool contains(const SectionPath& path) const {
        return index_.count(join_path(path)) > 0;
    }

    /// Exact lookup only: no fuzzy matching, whitespace differences miss.
    const ManualSection& get(const SectionPath& path) const {
        auto it = index_.find(join_path(path));
        if (it == index_.end()) {
            // Report the nearest stored ancestor to orient the caller.
            SectionPath prefix = path;
            while (!prefix.empty()) {
                prefix.pop_back();
                auto anc = index_.find(join_path(prefix));
                if (anc != index_.end())
                    throw NotFoundError("unknown section path: " + join_path(path) +
                                            " (nearest existing ancestor: " +
                                            join_path(prefix) + ")",
                                        prefix);
            }
            throw NotFoundError("unknown section path: " + join_path(path));
        }
        return sections_[it->second];
    }

    /// Uniformly random section whose path differs from `exclude`.
    const ManualSection& sample_other(const SectionPath& exclude, Rng& rng) const {
        if (sections_.size() < 2)
            throw ValidationError("cannot sample a distinct passage from a corpus of size " +
                                  std::to_string(sections_.size()));
        const std::string excluded = join_path(exclude);
        std::vector<std::size_t> eligible;
        eligible.reserve(sections_.size());
        for (std::size_t i = 0; i < sections_.size(); ++i)
            if (join_path(sections_[i].path) != excluded) eligible.push_back(i);
        if (eligible.empty())
            throw ValidationError("no distinct passage exists besides: " + excluded);
        return sections_[eligible[static_cast<std::size_t>(rng.below(eligible.size()))]];
    }

private:
    std::vector<ManualSection> sections_;  // document order
    std::string source_label_;
    std::map<std::string, std::size_t> index_;  // joined path -> position
};

namespace detail {

inline void load_tree_node(const Json& node, SectionPath& path,
                           std::vector<ManualSection>& out) {
    if (!node.is_object() || !node.contains("title"))
        throw ParseError("tree section node must be an object with a 'title'", node.dump());
    path.push_back(node.at("title").get<std::string>());
    const std::string body = node.value("body", std::string{});
    const bool has_children = node.contains("children") && !node.at("children").empty();

    if (!has_children && body.empty())
        throw ValidationError("leaf section has empty body: " + join_path(path));
    if (!body.empty() || !has_children) {
        ManualSection s;
        s.path = path;
        s.body = body;
        out.push_back(std::move(s));
    }
    if (has_children) {
        for (const auto& child : node.at("children")) load_tree_node(child, path, out);
    }
    path.pop_back();
}

}  // namespace detail

/// Loads a corpus from either schema form:
///   tree: {"source_label", "sections": [{"title","body","children":[...]}]}
///   flat: {"source_label", "sections": [{"path": ["..."], "body"}]}
/// Nodes with a non-empty body are addressable sections; tree nodes with
/// children and no body are structural only. Leaves must carry text.
inline Corpus load_corpus(const std::filesystem::path& location) {
    const Json doc = load_json(location);
    if (!doc.is_object() || !doc.contains("sections") || !doc.at("sections").is_array())
        throw ParseError("corpus file must be an object with a 'sections' array",
                         location.string());
    const std::string label = doc.value("source_label", location.filename().string());

    std::vector<ManualSection> sections;
    const Json& list = doc.at("sections");
    if (!list.empty() && list.front().is_object() && list.front().contains("path")) {
        for (const auto& item : list) {
            ManualSection s;
            s.path = item.at("path").get<SectionPath>();
            s.body = item.value("body", std::string{});
            if (s.body.empty())
                throw ValidationError("leaf section has empty body: " + join_path(s.path));
            sections.push_back(std::move(s));
        }
    } else {
        SectionPath path;
        for (const auto& node : list) detail::load_tree_node(node, path, sections);
    }
    return Corpus(std::move(sections), label);
}

/// Deterministic serialization; load(save(c)) is a fixed point in both forms.
inline std::string serialize_corpus(const Corpus& corpus, CorpusForm form) {
    Json doc;
    doc["source_label"] = corpus.source_label();
    if (form == CorpusForm::flat) {
        Json list = Json::array();
        for (const auto& s : corpus.sections())
            list.push_back(Json{{"path", s.path}, {"body", s.body}});
        doc["sections"] = std::move(list);
    } else {
        // Rebuild the hierarchy; structural ancestors get empty bodies.
        struct Node {
            std::string title;
            std::string body;
            std::vector<std::size_t> children;
        };
        std::vector<Node> nodes;
        std::map<std::string, std::size_t> by_path;
        std::vector<std::size_t> roots;
        for (const auto& s : corpus.sections()) {
            SectionPath prefix;
            std::size_t parent = SIZE_MAX;
            for (const auto& title : s.path) {
                prefix.push_back(title);
                const std::string key = join_path(prefix);
                auto it = by_path.find(key);
                if (it == by_path.end()) {
                    nodes.push_back(Node{title, "", {}});
                    it = by_path.emplace(key, nodes.size() - 1).first;
                    if (parent == SIZE_MAX)
                        roots.push_back(it->second);
                    else
                        nodes[parent].children.push_back(it->second);
                }
                parent = it->second;
            }
            nodes[parent].body = s.body;
        }
        std::function<Json(std::size_t)> emit = [&](std::size_t i) {
            Json n;
            n["title"] = nodes[i].title;
            if (!nodes[i].body.empty()) n["body"] = nodes[i].body;
            if (!nodes[i].children.empty()) {
                Json kids = Json::array();
                for (std::size_t c : nodes[i].children) kids.push_back(emit(c));
                n["children"] = std::move(kids);
            }
            return n;
        };
        Json list = Json::array();
        for (std::size_t r : roots) list.push_back(emit(r));
        doc["sections"] = std::move(list);
    }
    return doc.dump(2) + "\n";
}

inline void save_corpus(const Corpus& corpus, const std::filesystem::path& location,
                        CorpusForm form = CorpusForm::flat) {
    write_file(location, serialize_corpus(corpus, form));
}

}  // namespace dgqa
