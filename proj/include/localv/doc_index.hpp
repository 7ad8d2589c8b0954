// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "localv/corpus.hpp"
#include "localv/providers.hpp"
#include "localv/text.hpp"

namespace localv {

// Dual-level index over specification paragraphs: a provider-written semantic
// summary plus lexically extracted hardware entities per paragraph.

struct LexicalEntities {
    std::set<std::string> signals;
    std::set<std::string> modules;
    std::set<std::string> macros;
    std::set<std::string> parameters;

    std::set<std::string> all() const {
        std::set<std::string> out(signals.begin(), signals.end());
        out.insert(modules.begin(), modules.end());
        out.insert(macros.begin(), macros.end());
        out.insert(parameters.begin(), parameters.end());
        return out;
    }
    bool empty() const {
        return signals.empty() && modules.empty() && macros.empty() && parameters.empty();
    }
};

struct SectionIndexEntry {
    size_t paragraph_index = 0;
    std::string semantic_summary;
    LexicalEntities lexical;
};

struct DocumentIndex {
    std::string doc_id;
    std::string built_with; // provider model id or "lexical-only"
    std::vector<SectionIndexEntry> entries;
    std::vector<std::string> paragraph_bodies; // retained for retrieval scoring

    static std::string section_key(size_t index) { return "section_" + std::to_string(index); }

    std::optional<size_t> resolve_key(const std::string& key) const {
        const std::string prefix = "section_";
        if (key.rfind(prefix, 0) != 0) return std::nullopt;
        size_t idx = 0;
        try {
            idx = static_cast<size_t>(std::stoul(key.substr(prefix.size())));
        } catch (...) {
            return std::nullopt;
        }
        if (idx >= entries.size()) return std::nullopt;
        return idx;
    }
};

namespace detail {

inline bool is_upper_snake(const std::string& t) {
    if (t.size() < 2) return false;
    bool underscore = false, alpha = false;
    for (char c : t) {
        if (c >= 'a' && c <= 'z') return false;
        if (c == '_') underscore = true;
        if (c >= 'A' && c <= 'Z') alpha = true;
    }
    return underscore && alpha;
}

inline std::vector<std::string> table_row_cells(const std::string& line) {
    std::vector<std::string> cells;
    std::string t = trim(line);
    if (t.empty() || t.front() != '|') return cells;
    size_t pos = 1;
    while (pos <= t.size()) {
        size_t next = t.find('|', pos);
        if (next == std::string::npos) {
            cells.push_back(trim(t.substr(pos)));
            break;
        }
        cells.push_back(trim(t.substr(pos, next - pos)));
        pos = next + 1;
    }
    return cells;
}

inline bool is_direction_word(const std::string& cell) {
    std::string lower;
    for (char c : cell) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return lower == "input" || lower == "output" || lower == "inout";
}

} // namespace detail

/// Deterministic recall-oriented extraction; all the pattern rules live here.
///  - macros: backtick-prefixed names plus bare UPPER_SNAKE tokens
///  - modules: "module X" / "the X module" phrases, instantiation pairs,
///    and underscore-bearing identifiers in headings
///  - signals: the name cell of interface-table rows with a direction column,
///    identifiers right after input/output/inout words, and underscore-bearing
///    lowercase identifiers anywhere in prose
///  - parameters: identifiers following the parameter/localparam keyword
inline LexicalEntities extract_lexical(const Paragraph& paragraph) {
    LexicalEntities ents;
    const std::string& text = paragraph.body;

    for (const auto& m : macro_tokens(text)) ents.macros.insert(m);

    auto words = identifier_tokens(text);
    for (const auto& w : words) {
        if (detail::is_upper_snake(w)) ents.macros.insert(w);
        else if (w.find('_') != std::string::npos && is_verilog_identifier(w))
            ents.signals.insert(w);
    }

    for (size_t i = 0; i + 1 < words.size(); ++i) {
        if (words[i] == "module" && is_verilog_identifier(words[i + 1]) &&
            words[i + 1] != "module")
            ents.modules.insert(words[i + 1]);
        if (words[i + 1] == "module" && is_verilog_identifier(words[i]) && words[i] != "The" &&
            words[i] != "the" && words[i] != "a" && words[i] != "this")
            ents.modules.insert(words[i]);
        if ((words[i] == "input" || words[i] == "output" || words[i] == "inout") &&
            is_verilog_identifier(words[i + 1]) && !detail::is_upper_snake(words[i + 1]) &&
            words[i + 1] != "wire" && words[i + 1] != "reg")
            ents.signals.insert(words[i + 1]);
        if ((words[i] == "parameter" || words[i] == "localparam") &&
            is_verilog_identifier(words[i + 1]))
            ents.parameters.insert(words[i + 1]);
    }

    // Instantiation-style pair "mod u_mod (" and heading identifiers.
    for (const auto& line : split_lines(text)) {
        auto lw = identifier_tokens(line);
        if (lw.size() >= 2 && line.find('(') != std::string::npos &&
            lw[1].rfind("u_", 0) == 0) {
            ents.modules.insert(lw[0]);
        }
        if (is_heading_line(trim(line))) {
            for (const auto& t : lw)
                if (t.find('_') != std::string::npos && is_verilog_identifier(t) &&
                    !detail::is_upper_snake(t))
                    ents.modules.insert(t);
        }
        auto cells = detail::table_row_cells(line);
        if (cells.size() >= 2) {
            bool has_direction = false;
            for (const auto& c : cells)
                if (detail::is_direction_word(c)) has_direction = true;
            if (has_direction) {
                // the name cell is the first single-identifier cell that is
                // neither a direction word nor a macro; covers both
                // name-first and direction-first table layouts
                for (const auto& c : cells) {
                    if (detail::is_direction_word(c)) continue;
                    auto toks = identifier_tokens(c);
                    if (toks.size() == 1 && trim(c) == toks[0] &&
                        is_verilog_identifier(toks[0]) && !detail::is_upper_snake(toks[0])) {
                        ents.signals.insert(toks[0]);
                        break;
                    }
                }
            }
        }
    }
    return ents;
}

inline constexpr const char* kSummaryPromptVersion = "v1";

inline std::vector<ChatMessage> summary_prompt(const Paragraph& paragraph) {
    return {
        {"system",
         "You index hardware design documents. Summarize the given paragraph's functional "
         "intent in one to three sentences. Reply with the summary only."},
        {"user", paragraph.body},
    };
}

/// Returns the provider's summary verbatim; empty paragraphs are skipped.
inline std::string summarize_semantic(const Paragraph& paragraph, CompletionProvider& provider) {
    if (trim(paragraph.body).empty()) return "";
    return provider.complete(summary_prompt(paragraph)).text;
}

struct IndexOptions {
    std::string cache_dir; // summaries cached by (doc hash, index, prompt version)
};

inline DocumentIndex build_index(const Specification& spec, CompletionProvider* provider = nullptr,
                                 const IndexOptions& options = {}) {
    DocumentIndex index;
    index.doc_id = spec.doc_id;
    index.built_with = provider ? provider->model_id() : "lexical-only";

    json cache = json::object();
    std::string cache_path;
    if (provider && !options.cache_dir.empty()) {
        cache_path = options.cache_dir + "/summaries_" + fnv1a_hex(spec.source_text) + ".json";
        try {
            cache = json::parse(read_file(cache_path));
        } catch (...) {
            cache = json::object();
        }
    }

    bool any_summary = false;
    for (const auto& p : spec.paragraphs) {
        SectionIndexEntry entry;
        entry.paragraph_index = p.index;
        entry.lexical = extract_lexical(p);
        if (provider) {
            const std::string key = std::to_string(p.index) + ":" + kSummaryPromptVersion;
            if (cache.contains(key)) {
                entry.semantic_summary = cache[key].get<std::string>();
            } else {
                try {
                    entry.semantic_summary = summarize_semantic(p, *provider);
                    if (!cache_path.empty()) cache[key] = entry.semantic_summary;
                } catch (const Error&) {
                    // entry stays lexical-only; the build continues
                }
            }
            if (!entry.semantic_summary.empty()) any_summary = true;
        }
        index.entries.push_back(std::move(entry));
        index.paragraph_bodies.push_back(p.body);
    }
    if (!any_summary) index.built_with = "lexical-only";
    if (!cache_path.empty()) write_file(cache_path, cache.dump(2) + "\n");
    return index;
}

inline json lexical_to_json(const LexicalEntities& e) {
    return json{{"signals", e.signals},
                {"modules", e.modules},
                {"macros", e.macros},
                {"parameters", e.parameters}};
}

inline LexicalEntities lexical_from_json(const json& j) {
    LexicalEntities e;
    auto load = [&](const char* key, std::set<std::string>& out) {
        if (j.contains(key))
            for (const auto& v : j[key]) out.insert(v.get<std::string>());
    };
    load("signals", e.signals);
    load("modules", e.modules);
    load("macros", e.macros);
    load("parameters", e.parameters);
    return e;
}

inline json index_to_json(const DocumentIndex& index) {
    json entries = json::array();
    for (const auto& e : index.entries) {
        entries.push_back({{"paragraph_index", e.paragraph_index},
                           {"semantic_summary", e.semantic_summary},
                           {"lexical", lexical_to_json(e.lexical)}});
    }
    return json{{"doc_id", index.doc_id},
                {"built_with", index.built_with},
                {"entries", std::move(entries)},
                {"paragraphs", index.paragraph_bodies}};
}

inline DocumentIndex index_from_json(const json& j) {
    DocumentIndex index;
    index.doc_id = j.value("doc_id", "");
    index.built_with = j.value("built_with", "lexical-only");
    for (const auto& je : j.at("entries")) {
        SectionIndexEntry e;
        e.paragraph_index = je.at("paragraph_index").get<size_t>();
        e.semantic_summary = je.value("semantic_summary", "");
        if (je.contains("lexical")) e.lexical = lexical_from_json(je["lexical"]);
        index.entries.push_back(std::move(e));
    }
    if (j.contains("paragraphs"))
        index.paragraph_bodies = j["paragraphs"].get<std::vector<std::string>>();
    return index;
}

} // namespace localv
