// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "localv/errors.hpp"
#include "localv/text.hpp"
#include "localv/verilog_ast.hpp"

namespace localv {

struct CharSpan {
    size_t start = 0;
    size_t end = 0; // exclusive
};

struct Paragraph {
    size_t index = 0;
    std::optional<std::string> heading; // heading text without the '#' markers
    std::string body;                   // raw slice, heading line included
    CharSpan char_span;
};

struct Specification {
    std::string doc_id;
    std::vector<Paragraph> paragraphs;
    std::string source_text; // normalized full text; paragraphs concatenate to it
};

enum class UnitKind {
    Declaration,
    ContinuousAssign,
    ProceduralBlock,
    Instantiation,
    Directive,
    Other,
};

inline const char* unit_kind_name(UnitKind k) {
    switch (k) {
        case UnitKind::Declaration: return "declaration";
        case UnitKind::ContinuousAssign: return "continuous_assign";
        case UnitKind::ProceduralBlock: return "procedural_block";
        case UnitKind::Instantiation: return "instantiation";
        case UnitKind::Directive: return "directive";
        case UnitKind::Other: return "other";
    }
    return "other";
}

struct LineSpan {
    int first = 1; // 1-based inclusive
    int last = 1;
};

struct CodeUnit {
    size_t index = 0;
    UnitKind kind = UnitKind::Other;
    std::string text;
    LineSpan line_span;
};

struct TargetModule {
    std::string module_name;
    std::string doc_id;
};

inline bool is_heading_line(std::string_view line) {
    size_t i = 0;
    while (i < line.size() && line[i] == '#') ++i;
    return i > 0;
}

/// Splits a document at Markdown heading lines (any '#' depth). Preamble text
/// before the first heading becomes paragraph 0. Paragraph spans are
/// contiguous, so concatenating bodies reproduces the normalized source.
inline Specification segment_document(std::string_view raw_text, std::string doc_id = "doc") {
    if (raw_text.empty()) throw Error(ErrorCode::EmptyDocument, "document is empty");
    Specification spec;
    spec.doc_id = std::move(doc_id);
    spec.source_text = normalize_line_endings(raw_text);
    const std::string& text = spec.source_text;

    // offsets where headings start (at beginning of a line)
    std::vector<size_t> starts;
    size_t line_start = 0;
    for (size_t i = 0; i <= text.size(); ++i) {
        if (i == text.size() || text[i] == '\n') {
            std::string_view line(text.data() + line_start, i - line_start);
            if (is_heading_line(line)) starts.push_back(line_start);
            line_start = i + 1;
        }
    }

    std::vector<CharSpan> spans;
    if (starts.empty() || starts.front() > 0) {
        spans.push_back({0, starts.empty() ? text.size() : starts.front()});
    }
    for (size_t k = 0; k < starts.size(); ++k) {
        size_t end = (k + 1 < starts.size()) ? starts[k + 1] : text.size();
        spans.push_back({starts[k], end});
    }

    for (const auto& sp : spans) {
        if (sp.end <= sp.start) continue;
        Paragraph p;
        p.index = spec.paragraphs.size();
        p.char_span = sp;
        p.body = text.substr(sp.start, sp.end - sp.start);
        // first line is the heading when present
        size_t eol = p.body.find('\n');
        std::string_view first(p.body.data(), eol == std::string::npos ? p.body.size() : eol);
        if (is_heading_line(first)) {
            size_t h = 0;
            while (h < first.size() && first[h] == '#') ++h;
            p.heading = trim(first.substr(h));
        }
        spec.paragraphs.push_back(std::move(p));
    }
    return spec;
}

namespace detail {

inline std::string slice_lines(const std::vector<std::string>& lines, int first, int last) {
    std::string out;
    for (int l = first; l <= last && l >= 1 && static_cast<size_t>(l) <= lines.size(); ++l) {
        if (!out.empty()) out += '\n';
        out += lines[static_cast<size_t>(l) - 1];
    }
    return out;
}

inline std::vector<CodeUnit> fallback_segment(const std::string& source) {
    std::vector<CodeUnit> units;
    auto lines = split_lines(source);
    size_t i = 0;
    while (i < lines.size()) {
        while (i < lines.size() && trim(lines[i]).empty()) ++i;
        if (i >= lines.size()) break;
        size_t j = i;
        while (j < lines.size() && !trim(lines[j]).empty()) ++j;
        CodeUnit u;
        u.index = units.size();
        u.kind = UnitKind::Other;
        u.line_span = {static_cast<int>(i) + 1, static_cast<int>(j)};
        u.text = slice_lines(lines, u.line_span.first, u.line_span.last);
        units.push_back(std::move(u));
        i = j;
    }
    return units;
}

} // namespace detail

/// One unit per top-level item: declaration statement, continuous assign,
/// whole always/initial block, instantiation, compiler directive. With
/// strict=false malformed sources fall back to blank-line segmentation.
inline std::vector<CodeUnit> segment_verilog(const std::string& source, bool strict = false) {
    VerilogAst ast;
    try {
        ast = parse_verilog(source);
    } catch (const Error&) {
        if (strict) throw Error(ErrorCode::SegmentationFailed, "no module envelope");
        return detail::fallback_segment(source);
    }
    if (!ast.balanced) {
        if (strict)
            throw Error(ErrorCode::SegmentationFailed,
                        "unbalanced begin/end or parentheses at line " +
                            std::to_string(ast.unbalanced_line));
        return detail::fallback_segment(source);
    }
    auto lines = split_lines(source);
    std::vector<CodeUnit> units;
    for (const auto& item : ast.items) {
        CodeUnit u;
        u.index = units.size();
        switch (item.kind) {
            case AstItemKind::Declaration: u.kind = UnitKind::Declaration; break;
            case AstItemKind::ContinuousAssign: u.kind = UnitKind::ContinuousAssign; break;
            case AstItemKind::ProceduralBlock: u.kind = UnitKind::ProceduralBlock; break;
            case AstItemKind::Instantiation: u.kind = UnitKind::Instantiation; break;
            case AstItemKind::Directive: u.kind = UnitKind::Directive; break;
            case AstItemKind::Opaque: u.kind = UnitKind::Other; break;
        }
        u.line_span = {item.first_line, item.last_line};
        u.text = detail::slice_lines(lines, item.first_line, item.last_line);
        if (trim(u.text).empty()) u.text = item.text; // lexer-derived fallback
        units.push_back(std::move(u));
    }
    return units;
}

} // namespace localv
