// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "localv/errors.hpp"
#include "localv/text.hpp"

namespace localv {

// Subset parser for structural/behavioral Verilog. Covers ANSI module
// headers, net/reg/parameter declarations, continuous assigns, always and
// initial blocks, named-connection instantiations, and compiler directives.
// Anything else becomes an opaque item; only a missing module envelope is a
// hard error.

namespace vl {

inline const std::set<std::string>& keywords() {
    static const std::set<std::string> kw = {
        "module", "endmodule", "input", "output", "inout", "wire", "reg",
        "integer", "real", "time", "genvar", "parameter", "localparam",
        "assign", "always", "initial", "begin", "end", "if", "else", "case",
        "casex", "casez", "endcase", "default", "for", "while", "repeat",
        "forever", "posedge", "negedge", "or", "and", "not", "generate",
        "endgenerate", "function", "endfunction", "task", "endtask",
        "signed", "unsigned", "deassign", "force", "release", "wait",
        "supply0", "supply1", "tri", "wand", "wor", "fork", "join",
    };
    return kw;
}

enum class TokKind { Ident, Number, String, Punct, Macro };

struct Token {
    TokKind kind;
    std::string text;
    int line;
};

// Comment-stripping lexer; never fails, unknown bytes become punctuation.
inline std::vector<Token> lex(std::string_view src) {
    std::vector<Token> toks;
    int line = 1;
    size_t i = 0;
    const size_t n = src.size();
    while (i < n) {
        char c = src[i];
        if (c == '\n') {
            ++line;
            ++i;
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (c == '/' && i + 1 < n && src[i + 1] == '/') {
            while (i < n && src[i] != '\n') ++i;
            continue;
        }
        if (c == '/' && i + 1 < n && src[i + 1] == '*') {
            i += 2;
            while (i + 1 < n && !(src[i] == '*' && src[i + 1] == '/')) {
                if (src[i] == '\n') ++line;
                ++i;
            }
            i = (i + 1 < n) ? i + 2 : n;
            continue;
        }
        if (c == '"') {
            size_t j = i + 1;
            while (j < n && src[j] != '"' && src[j] != '\n') {
                if (src[j] == '\\' && j + 1 < n) ++j;
                ++j;
            }
            size_t stop = (j < n && src[j] == '"') ? j + 1 : j;
            toks.push_back({TokKind::String, std::string(src.substr(i, stop - i)), line});
            i = stop;
            continue;
        }
        if (c == '`') {
            size_t j = i + 1;
            while (j < n && is_ident_char(src[j])) ++j;
            toks.push_back({TokKind::Macro, std::string(src.substr(i + 1, j - i - 1)), line});
            i = j;
            continue;
        }
        if (is_ident_start(c)) {
            size_t j = i + 1;
            while (j < n && is_ident_char(src[j])) ++j;
            toks.push_back({TokKind::Ident, std::string(src.substr(i, j - i)), line});
            i = j;
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            // Covers plain and based literals: 123, 8'hFF, 32'b0, 1'bx.
            size_t j = i;
            while (j < n && (is_ident_char(src[j]) || src[j] == '\'')) ++j;
            toks.push_back({TokKind::Number, std::string(src.substr(i, j - i)), line});
            i = j;
            continue;
        }
        if (c == '\'' && i + 1 < n && is_ident_char(src[i + 1])) {
            // Unsized based literal: 'b0, 'h3f.
            size_t j = i + 1;
            while (j < n && is_ident_char(src[j])) ++j;
            toks.push_back({TokKind::Number, std::string(src.substr(i, j - i)), line});
            i = j;
            continue;
        }
        static const char* two[] = {"<=", ">=", "==", "!=", "&&", "||", "<<", ">>", "**", "->"};
        bool matched = false;
        for (const char* op : two) {
            if (c == op[0] && i + 1 < n && src[i + 1] == op[1]) {
                toks.push_back({TokKind::Punct, std::string(op), line});
                i += 2;
                matched = true;
                break;
            }
        }
        if (matched) continue;
        toks.push_back({TokKind::Punct, std::string(1, c), line});
        ++i;
    }
    return toks;
}

struct BalanceResult {
    bool balanced = true;
    int first_open_line = 0;
};

// Global begin/end + paren balance over the token stream.
inline BalanceResult balance_scan(const std::vector<Token>& toks) {
    std::deque<int> opens;
    auto push = [&](int line) { opens.push_back(line); };
    auto pop = [&]() {
        if (!opens.empty()) opens.pop_back();
    };
    for (const auto& t : toks) {
        if (t.kind == TokKind::Punct) {
            if (t.text == "(") push(t.line);
            else if (t.text == ")") pop();
        } else if (t.kind == TokKind::Ident) {
            if (t.text == "begin" || t.text == "case" || t.text == "casex" ||
                t.text == "casez" || t.text == "fork" || t.text == "function" ||
                t.text == "task" || t.text == "generate")
                push(t.line);
            else if (t.text == "end" || t.text == "endcase" || t.text == "join" ||
                     t.text == "endfunction" || t.text == "endtask" || t.text == "endgenerate")
                pop();
        }
    }
    BalanceResult r;
    if (!opens.empty()) {
        r.balanced = false;
        r.first_open_line = opens.front();
    }
    return r;
}

} // namespace vl

struct AstPort {
    std::string name;
    std::string direction;  // "input" | "output" | "inout" | "" (non-ANSI, unknown here)
    std::string width_expr; // raw text of the [msb:lsb] range, empty for scalars
    bool conditional = false;
};

struct AstDecl {
    std::string name;
    std::string kind; // wire, reg, parameter, ...
    std::string width_expr;
    int line = 0;
    bool conditional = false;
};

enum class AstItemKind {
    Declaration,
    ContinuousAssign,
    ProceduralBlock,
    Instantiation,
    Directive,
    Opaque,
};

struct PortConnection {
    std::string formal; // empty for positional connections
    std::string actual_text;
    std::vector<std::string> actual_ids;
};

struct AstItem {
    AstItemKind kind = AstItemKind::Opaque;
    int first_line = 0;
    int last_line = 0;
    bool conditional = false;
    std::string text; // directive/opaque raw text
    // ContinuousAssign
    std::string lhs;
    std::vector<std::string> rhs_ids;
    // ProceduralBlock
    std::string block_kind; // "always" | "initial"
    std::vector<std::string> assigned_ids;
    std::vector<std::string> read_ids;
    // Instantiation
    std::string module_name;
    std::string instance_name;
    std::vector<PortConnection> port_connections;
    // Declaration
    std::vector<std::string> declared_names;
    std::string decl_kind;
};

struct VerilogAst {
    std::string module_name;
    std::vector<AstPort> ports;
    std::vector<AstDecl> decls;
    std::vector<AstItem> items;
    bool balanced = true;
    int unbalanced_line = 0;

    bool has_port(const std::string& name) const {
        for (const auto& p : ports)
            if (p.name == name) return true;
        return false;
    }
    std::optional<std::string> port_direction(const std::string& name) const {
        for (const auto& p : ports)
            if (p.name == name) return p.direction;
        return std::nullopt;
    }
};

namespace vl {

class Parser {
public:
    explicit Parser(std::string_view src) : toks_(lex(src)) {}

    VerilogAst parse() {
        VerilogAst ast;
        auto bal = balance_scan(toks_);
        ast.balanced = bal.balanced;
        ast.unbalanced_line = bal.first_open_line;

        // Pre-module region: record directives, skip everything else.
        while (!eof() && !(cur().kind == TokKind::Ident && cur().text == "module")) {
            if (cur().kind == TokKind::Macro) {
                ast.items.push_back(directive(/*emit=*/true));
            } else {
                ++i_;
            }
        }
        if (eof()) throw Error(ErrorCode::ParseError, "no module envelope found");
        parse_header(ast);
        parse_body(ast);
        std::stable_sort(ast.items.begin(), ast.items.end(),
                         [](const AstItem& a, const AstItem& b) { return a.first_line < b.first_line; });
        return ast;
    }

private:
    std::vector<Token> toks_;
    size_t i_ = 0;
    int cond_depth_ = 0; // `ifdef nesting

    bool eof() const { return i_ >= toks_.size(); }
    const Token& cur() const { return toks_[i_]; }
    const Token& peek(size_t k) const { return toks_[i_ + k]; }
    bool has(size_t k) const { return i_ + k < toks_.size(); }
    bool cur_is(const char* p) const {
        return !eof() && cur().kind == TokKind::Punct && cur().text == p;
    }
    bool cur_ident(const char* w) const {
        return !eof() && cur().kind == TokKind::Ident && cur().text == w;
    }

    static bool is_decl_keyword(const std::string& w) {
        return w == "wire" || w == "reg" || w == "integer" || w == "real" || w == "time" ||
               w == "genvar" || w == "parameter" || w == "localparam" || w == "supply0" ||
               w == "supply1" || w == "tri" || w == "wand" || w == "wor";
    }
    static bool is_direction(const std::string& w) {
        return w == "input" || w == "output" || w == "inout";
    }
    static bool is_conditional_directive(const std::string& w) {
        return w == "ifdef" || w == "ifndef" || w == "else" || w == "elsif" || w == "endif";
    }

    // Consume a directive at the cursor; returned item is only appended to the
    // AST by callers at non-nested positions so unit spans never overlap.
    AstItem directive(bool /*emit*/) {
        AstItem it;
        it.kind = AstItemKind::Directive;
        it.first_line = it.last_line = cur().line;
        const std::string name = cur().text;
        std::string text = "`" + name;
        int line = cur().line;
        ++i_;
        if (name == "ifdef" || name == "ifndef" || name == "elsif") {
            if (!eof() && cur().kind == TokKind::Ident && cur().line == line) {
                text += " " + cur().text;
                ++i_;
            }
            if (name != "elsif") ++cond_depth_;
        } else if (name == "endif") {
            if (cond_depth_ > 0) --cond_depth_;
        } else if (name == "else") {
            // branch flip, conditional depth unchanged
        } else {
            // `define/`include/`timescale and friends run to end of line.
            while (!eof() && cur().line == line) {
                text += " " + (cur().kind == TokKind::Macro ? "`" + cur().text : cur().text);
                it.last_line = cur().line;
                ++i_;
            }
        }
        it.text = text;
        it.conditional = cond_depth_ > 0 || name == "endif";
        return it;
    }

    void consume_nested_directive() { (void)directive(false); }

    std::string range_text() {
        if (!cur_is("[")) return "";
        std::string out;
        int depth = 0;
        while (!eof()) {
            if (cur_is("[")) ++depth;
            if (cur_is("]")) --depth;
            out += (cur().kind == TokKind::Macro) ? "`" + cur().text : cur().text;
            ++i_;
            if (depth == 0) break;
        }
        return out;
    }

    void skip_balanced_parens() {
        if (!cur_is("(")) return;
        int depth = 0;
        while (!eof()) {
            if (cur().kind == TokKind::Macro && is_conditional_directive(cur().text)) {
                consume_nested_directive();
                continue;
            }
            if (cur_is("(")) ++depth;
            if (cur_is(")")) --depth;
            ++i_;
            if (depth == 0) return;
        }
    }

    void parse_header(VerilogAst& ast) {
        ++i_; // 'module'
        if (!eof() && cur().kind == TokKind::Ident) {
            ast.module_name = cur().text;
            ++i_;
        }
        if (cur_is("#")) {
            ++i_;
            skip_balanced_parens();
        }
        if (cur_is("(")) {
            int depth = 0;
            std::string direction, width;
            while (!eof()) {
                if (cur().kind == TokKind::Macro) {
                    const std::string& m = cur().text;
                    if (is_conditional_directive(m)) {
                        ast.items.push_back(directive(true));
                        continue;
                    }
                    width += "`" + m; // macro in a width expression
                    ++i_;
                    continue;
                }
                if (cur_is("(")) {
                    ++depth;
                    ++i_;
                    continue;
                }
                if (cur_is(")")) {
                    --depth;
                    ++i_;
                    if (depth == 0) break;
                    continue;
                }
                if (cur_is(",")) {
                    ++i_;
                    continue;
                }
                if (cur_is("[")) {
                    width = range_text();
                    continue;
                }
                if (cur().kind == TokKind::Ident) {
                    const std::string w = cur().text;
                    if (is_direction(w)) {
                        direction = w;
                        width.clear();
                        ++i_;
                        continue;
                    }
                    if (w == "wire" || w == "reg" || w == "signed") {
                        ++i_;
                        continue;
                    }
                    AstPort p;
                    p.name = w;
                    p.direction = direction;
                    p.width_expr = width;
                    p.conditional = cond_depth_ > 0;
                    ast.ports.push_back(p);
                    width.clear();
                    ++i_;
                    continue;
                }
                ++i_;
            }
        }
        if (cur_is(";")) ++i_;
    }

    void parse_body(VerilogAst& ast) {
        while (!eof()) {
            if (cur_ident("endmodule")) {
                ++i_;
                break;
            }
            if (cur().kind == TokKind::Macro) {
                ast.items.push_back(directive(true));
                continue;
            }
            if (cur().kind == TokKind::Ident) {
                const std::string w = cur().text;
                if (is_direction(w) || is_decl_keyword(w)) {
                    declaration(ast);
                    continue;
                }
                if (w == "assign") {
                    continuous_assign(ast);
                    continue;
                }
                if (w == "always" || w == "initial") {
                    procedural_block(ast, w);
                    continue;
                }
                if (keywords().count(w) == 0 && has(1) &&
                    ((peek(1).kind == TokKind::Ident && keywords().count(peek(1).text) == 0 &&
                      has(2) && peek(2).kind == TokKind::Punct && peek(2).text == "(") ||
                     (peek(1).kind == TokKind::Punct && peek(1).text == "#"))) {
                    instantiation(ast);
                    continue;
                }
            }
            opaque_item(ast);
        }
    }

    void declaration(VerilogAst& ast) {
        AstItem it;
        it.kind = AstItemKind::Declaration;
        it.first_line = cur().line;
        it.conditional = cond_depth_ > 0;
        std::string direction, kind, width;
        if (is_direction(cur().text)) {
            direction = cur().text;
            ++i_;
        }
        if (!eof() && cur().kind == TokKind::Ident && is_decl_keyword(cur().text)) {
            kind = cur().text;
            ++i_;
        }
        if (!eof() && cur_ident("signed")) ++i_;
        if (cur_is("[")) width = range_text();
        it.decl_kind = kind.empty() ? direction : kind;
        bool expect_name = true;
        int last = it.first_line;
        int bracket = 0;
        while (!eof() && !cur_is(";")) {
            if (cur().kind == TokKind::Macro) {
                if (is_conditional_directive(cur().text)) {
                    consume_nested_directive();
                    continue;
                }
                last = cur().line;
                ++i_;
                continue;
            }
            last = cur().line;
            if (cur_is("[")) {
                ++bracket;
                ++i_;
                continue;
            }
            if (cur_is("]")) {
                if (bracket > 0) --bracket;
                ++i_;
                continue;
            }
            if (cur_is(",") && bracket == 0) {
                expect_name = true;
                ++i_;
                continue;
            }
            if (cur_is("=")) {
                expect_name = false;
                ++i_;
                continue;
            }
            if (expect_name && bracket == 0 && cur().kind == TokKind::Ident &&
                keywords().count(cur().text) == 0) {
                it.declared_names.push_back(cur().text);
                expect_name = false;
            }
            ++i_;
        }
        if (!eof()) {
            last = cur().line;
            ++i_; // ';'
        }
        it.last_line = last;
        for (const auto& n : it.declared_names) {
            AstDecl d;
            d.name = n;
            d.kind = it.decl_kind;
            d.width_expr = width;
            d.line = it.first_line;
            d.conditional = it.conditional;
            ast.decls.push_back(d);
        }
        if (!direction.empty()) {
            // Non-ANSI port direction declaration; upgrade matching header port.
            for (auto& p : ast.ports) {
                for (const auto& n : it.declared_names) {
                    if (p.name == n && p.direction.empty()) {
                        p.direction = direction;
                        p.width_expr = width;
                    }
                }
            }
        }
        ast.items.push_back(std::move(it));
    }

    void continuous_assign(VerilogAst& ast) {
        AstItem it;
        it.kind = AstItemKind::ContinuousAssign;
        it.first_line = cur().line;
        it.conditional = cond_depth_ > 0;
        ++i_; // 'assign'
        bool in_lhs = true;
        int brace = 0, bracket = 0;
        int last = it.first_line;
        while (!eof() && !cur_is(";")) {
            if (cur().kind == TokKind::Macro && is_conditional_directive(cur().text)) {
                consume_nested_directive();
                continue;
            }
            last = cur().line;
            if (cur_is("{")) ++brace;
            if (cur_is("}")) { if (brace > 0) --brace; }
            if (cur_is("[")) ++bracket;
            if (cur_is("]")) { if (bracket > 0) --bracket; }
            if (in_lhs && cur_is("=") && brace == 0 && bracket == 0) {
                in_lhs = false;
                ++i_;
                continue;
            }
            if (cur().kind == TokKind::Ident && keywords().count(cur().text) == 0) {
                if (in_lhs) {
                    if (bracket == 0 && it.lhs.empty()) it.lhs = cur().text;
                    else if (bracket == 0 && brace > 0) it.rhs_ids.push_back(cur().text);
                } else {
                    it.rhs_ids.push_back(cur().text);
                }
            }
            ++i_;
        }
        if (!eof()) {
            last = cur().line;
            ++i_;
        }
        it.last_line = last;
        ast.items.push_back(std::move(it));
    }

    void procedural_block(VerilogAst& ast, const std::string& kind) {
        AstItem it;
        it.kind = AstItemKind::ProceduralBlock;
        it.block_kind = kind;
        it.first_line = cur().line;
        it.conditional = cond_depth_ > 0;
        ++i_; // always/initial
        std::set<std::string> assigned, reads;
        int last = it.first_line;
        if (cur_is("@")) {
            ++i_;
            if (cur_is("*")) {
                ++i_;
            } else if (cur_is("(")) {
                int depth = 0;
                while (!eof()) {
                    if (cur_is("(")) ++depth;
                    if (cur_is(")")) --depth;
                    if (cur().kind == TokKind::Ident && keywords().count(cur().text) == 0)
                        reads.insert(cur().text);
                    last = cur().line;
                    ++i_;
                    if (depth == 0) break;
                }
            }
        }
        int depth = 0;
        bool saw_group = false;
        std::vector<std::string> pending;
        auto flush_reads = [&]() {
            for (auto& p : pending) reads.insert(p);
            pending.clear();
        };
        while (!eof()) {
            const Token& t = cur();
            if (t.kind == TokKind::Macro) {
                if (is_conditional_directive(t.text)) {
                    consume_nested_directive();
                    continue;
                }
                reads.insert(t.text);
                last = t.line;
                ++i_;
                continue;
            }
            last = t.line;
            if (t.kind == TokKind::Ident) {
                const std::string& w = t.text;
                if (w == "begin" || w == "case" || w == "casex" || w == "casez" || w == "fork") {
                    ++depth;
                    saw_group = true;
                    flush_reads();
                    ++i_;
                    continue;
                }
                if (w == "end" || w == "endcase" || w == "join") {
                    if (depth > 0) --depth;
                    flush_reads();
                    ++i_;
                    if (depth == 0 && saw_group) break;
                    continue;
                }
                if (keywords().count(w)) {
                    flush_reads();
                    ++i_;
                    continue;
                }
                pending.push_back(w);
                ++i_;
                continue;
            }
            if (t.kind == TokKind::Punct) {
                if (t.text == "=" || t.text == "<=") {
                    if (!pending.empty()) {
                        assigned.insert(pending.back());
                        pending.pop_back();
                    }
                    flush_reads();
                    ++i_;
                    continue;
                }
                if (t.text == "[") {
                    int b = 1;
                    ++i_;
                    while (!eof() && b > 0) {
                        if (cur_is("[")) ++b;
                        if (cur_is("]")) --b;
                        if (cur().kind == TokKind::Ident && keywords().count(cur().text) == 0)
                            reads.insert(cur().text);
                        last = cur().line;
                        ++i_;
                    }
                    continue;
                }
                if (t.text == ";") {
                    flush_reads();
                    ++i_;
                    if (depth == 0 && !saw_group) {
                        // single-statement body: continue through an else arm
                        if (cur_ident("else")) continue;
                        break;
                    }
                    continue;
                }
                if (t.text == ".") {
                    ++i_;
                    continue;
                }
                flush_reads();
                ++i_;
                continue;
            }
            ++i_;
        }
        it.last_line = last;
        it.assigned_ids.assign(assigned.begin(), assigned.end());
        for (const auto& a : assigned) reads.erase(a);
        it.read_ids.assign(reads.begin(), reads.end());
        ast.items.push_back(std::move(it));
    }

    void instantiation(VerilogAst& ast) {
        AstItem it;
        it.kind = AstItemKind::Instantiation;
        it.first_line = cur().line;
        it.conditional = cond_depth_ > 0;
        it.module_name = cur().text;
        ++i_;
        if (cur_is("#")) {
            ++i_;
            skip_balanced_parens();
        }
        if (!eof() && cur().kind == TokKind::Ident) {
            it.instance_name = cur().text;
            ++i_;
        }
        int last = it.first_line;
        if (cur_is("(")) {
            int depth = 1;
            ++i_;
            while (!eof() && depth > 0) {
                if (cur().kind == TokKind::Macro) {
                    if (is_conditional_directive(cur().text)) {
                        consume_nested_directive();
                        continue;
                    }
                    last = cur().line;
                    ++i_;
                    continue;
                }
                last = cur().line;
                if (cur_is(".") && has(1) && peek(1).kind == TokKind::Ident) {
                    PortConnection pc;
                    pc.formal = peek(1).text;
                    i_ += 2;
                    if (cur_is("(")) {
                        int d2 = 1;
                        ++i_;
                        while (!eof() && d2 > 0) {
                            if (cur().kind == TokKind::Macro &&
                                is_conditional_directive(cur().text)) {
                                consume_nested_directive();
                                continue;
                            }
                            if (cur_is("(")) ++d2;
                            if (cur_is(")")) --d2;
                            if (d2 > 0) {
                                if (!pc.actual_text.empty()) pc.actual_text += " ";
                                pc.actual_text += (cur().kind == TokKind::Macro
                                                       ? "`" + cur().text
                                                       : cur().text);
                                if (cur().kind == TokKind::Ident &&
                                    keywords().count(cur().text) == 0)
                                    pc.actual_ids.push_back(cur().text);
                            }
                            last = cur().line;
                            ++i_;
                        }
                    }
                    it.port_connections.push_back(std::move(pc));
                    continue;
                }
                if (cur_is("(")) {
                    ++depth;
                    ++i_;
                    continue;
                }
                if (cur_is(")")) {
                    --depth;
                    ++i_;
                    continue;
                }
                if (cur().kind == TokKind::Ident && keywords().count(cur().text) == 0) {
                    PortConnection pc; // positional connection
                    pc.actual_text = cur().text;
                    pc.actual_ids.push_back(cur().text);
                    it.port_connections.push_back(std::move(pc));
                    ++i_;
                    continue;
                }
                ++i_;
            }
        }
        if (cur_is(";")) {
            last = cur().line;
            ++i_;
        }
        it.last_line = last;
        ast.items.push_back(std::move(it));
    }

    void opaque_item(VerilogAst& ast) {
        AstItem it;
        it.kind = AstItemKind::Opaque;
        it.first_line = cur().line;
        it.conditional = cond_depth_ > 0;
        int last = it.first_line;
        std::string text;
        int paren = 0;
        bool first = true;
        while (!eof()) {
            if (cur_ident("endmodule") && paren == 0) break;
            if (cur().kind == TokKind::Macro && paren == 0) break;
            if (!first && paren == 0 && cur().kind == TokKind::Ident) {
                const std::string& w = cur().text;
                if (w == "assign" || w == "always" || w == "initial" || is_direction(w) ||
                    is_decl_keyword(w))
                    break;
            }
            first = false;
            last = cur().line;
            if (cur_is("(")) ++paren;
            if (cur_is(")")) { if (paren > 0) --paren; }
            if (!text.empty()) text += " ";
            text += (cur().kind == TokKind::Macro) ? "`" + cur().text : cur().text;
            bool end = cur_is(";") && paren == 0;
            ++i_;
            if (end) break;
        }
        it.last_line = last;
        it.text = text;
        ast.items.push_back(std::move(it));
    }
};

} // namespace vl

inline VerilogAst parse_verilog(std::string_view source) {
    vl::Parser p(source);
    return p.parse();
}

// ---------------------------------------------------------------------------
// Driver graph

struct DriverEdge {
    std::string driver;
    int line = 0;
    std::string via; // "assign" | "always" | "initial" | "instance <name>"
};

struct DriverGraph {
    std::map<std::string, std::vector<DriverEdge>> edges;   // signal -> drivers
    std::set<std::string> signals;                          // every signal seen
    std::map<int, std::set<std::string>> line_identifiers;  // ids+macros per item line

    const std::vector<DriverEdge>* drivers_of(const std::string& s) const {
        auto it = edges.find(s);
        return it == edges.end() ? nullptr : &it->second;
    }
};

inline DriverGraph build_driver_graph(const VerilogAst& ast) {
    DriverGraph g;
    auto note_line_ids = [&](int first, int last, const std::vector<std::string>& ids) {
        for (int l = first; l <= last; ++l)
            for (const auto& id : ids) g.line_identifiers[l].insert(id);
    };
    for (const auto& p : ast.ports) g.signals.insert(p.name);
    for (const auto& d : ast.decls) g.signals.insert(d.name);

    // Signals with a driver in this module (or driven externally via inputs);
    // instantiation connections outside this set are presumed instance outputs.
    std::set<std::string> driven;
    for (const auto& p : ast.ports)
        if (p.direction == "input" || p.direction == "inout") driven.insert(p.name);
    for (const auto& it : ast.items) {
        if (it.kind == AstItemKind::ContinuousAssign && !it.lhs.empty()) driven.insert(it.lhs);
        if (it.kind == AstItemKind::ProceduralBlock)
            for (const auto& a : it.assigned_ids) driven.insert(a);
    }

    for (const auto& it : ast.items) {
        switch (it.kind) {
            case AstItemKind::ContinuousAssign: {
                if (it.lhs.empty()) break;
                g.signals.insert(it.lhs);
                std::vector<std::string> ids{it.lhs};
                auto& ev = g.edges[it.lhs];
                for (const auto& r : it.rhs_ids) {
                    g.signals.insert(r);
                    ev.push_back({r, it.first_line, "assign"});
                    ids.push_back(r);
                }
                note_line_ids(it.first_line, it.last_line, ids);
                break;
            }
            case AstItemKind::ProceduralBlock: {
                std::vector<std::string> ids;
                for (const auto& a : it.assigned_ids) {
                    g.signals.insert(a);
                    ids.push_back(a);
                    auto& ev = g.edges[a];
                    for (const auto& r : it.read_ids)
                        ev.push_back({r, it.first_line, it.block_kind});
                }
                for (const auto& r : it.read_ids) {
                    g.signals.insert(r);
                    ids.push_back(r);
                }
                note_line_ids(it.first_line, it.last_line, ids);
                break;
            }
            case AstItemKind::Instantiation: {
                std::vector<std::string> ids;
                std::vector<const PortConnection*> outs, ins;
                for (const auto& pc : it.port_connections) {
                    for (const auto& id : pc.actual_ids) {
                        g.signals.insert(id);
                        ids.push_back(id);
                    }
                    if (pc.actual_ids.size() == 1 && !driven.count(pc.actual_ids[0]))
                        outs.push_back(&pc);
                    else
                        ins.push_back(&pc);
                }
                const std::string via = "instance " + it.instance_name;
                for (const auto* opc : outs) {
                    const std::string& out = opc->actual_ids[0];
                    auto& ev = g.edges[out];
                    for (const auto* ipc : ins)
                        for (const auto& dep : ipc->actual_ids)
                            ev.push_back({dep, it.first_line, via});
                }
                note_line_ids(it.first_line, it.last_line, ids);
                break;
            }
            case AstItemKind::Declaration: {
                note_line_ids(it.first_line, it.last_line, it.declared_names);
                break;
            }
            case AstItemKind::Directive:
            case AstItemKind::Opaque: {
                std::vector<std::string> ids = identifier_tokens(it.text);
                auto macros = macro_tokens(it.text);
                ids.insert(ids.end(), macros.begin(), macros.end());
                note_line_ids(it.first_line, it.last_line, ids);
                break;
            }
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Tracing

struct TraceReport {
    std::vector<std::string> root_signals;
    std::map<std::string, std::set<std::string>> direct_drivers; // per root
    std::map<std::string, int> closure;                          // signal -> BFS depth
    std::vector<int> implicated_lines;
    std::set<std::string> implicated_identifiers;
    bool has_cycle = false;
    int max_depth = 0;
};

inline TraceReport trace(const DriverGraph& graph, const std::vector<std::string>& roots,
                         int max_depth = 3) {
    if (roots.empty()) throw Error(ErrorCode::UnknownSignal, "no root signals given");
    for (const auto& r : roots) {
        if (!graph.signals.count(r))
            throw Error(ErrorCode::UnknownSignal, "unknown root signal '" + r + "'");
    }
    TraceReport rep;
    rep.root_signals = roots;
    rep.max_depth = max_depth;

    std::set<int> lines;
    std::map<std::string, int> depth;
    std::deque<std::string> queue;
    for (const auto& r : roots) {
        if (!depth.count(r)) {
            depth[r] = 0;
            queue.push_back(r);
        }
        const auto* dv = graph.drivers_of(r);
        auto& dd = rep.direct_drivers[r];
        if (dv)
            for (const auto& e : *dv) dd.insert(e.driver);
    }
    while (!queue.empty()) {
        std::string s = queue.front();
        queue.pop_front();
        int d = depth[s];
        if (d >= max_depth) continue;
        const auto* dv = graph.drivers_of(s);
        if (!dv) continue;
        for (const auto& e : *dv) {
            lines.insert(e.line);
            if (!depth.count(e.driver)) {
                depth[e.driver] = d + 1;
                queue.push_back(e.driver);
            }
        }
    }
    for (const auto& [sig, d] : depth)
        if (d > 0) rep.closure[sig] = d;
    rep.implicated_lines.assign(lines.begin(), lines.end());
    for (int l : rep.implicated_lines) {
        auto it = graph.line_identifiers.find(l);
        if (it != graph.line_identifiers.end())
            rep.implicated_identifiers.insert(it->second.begin(), it->second.end());
    }

    // Cycle check restricted to the visited subgraph (roots + closure).
    std::map<std::string, int> color; // 0 white, 1 grey, 2 black
    std::vector<std::pair<std::string, size_t>> stack;
    for (const auto& [start, d0] : depth) {
        (void)d0;
        if (color[start]) continue;
        stack.push_back({start, 0});
        color[start] = 1;
        while (!stack.empty()) {
            auto& [node, idx] = stack.back();
            const auto* dv = graph.drivers_of(node);
            bool advanced = false;
            if (dv) {
                while (idx < dv->size()) {
                    const std::string& next = (*dv)[idx].driver;
                    ++idx;
                    if (!depth.count(next)) continue; // outside traced subgraph
                    if (color[next] == 1) {
                        rep.has_cycle = true;
                        continue;
                    }
                    if (color[next] == 0) {
                        color[next] = 1;
                        stack.push_back({next, 0});
                        advanced = true;
                        break;
                    }
                }
            }
            if (!advanced) {
                color[node] = 2;
                stack.pop_back();
            }
        }
    }
    return rep;
}

} // namespace localv
