// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "localv/errors.hpp"

namespace localv {

inline bool is_ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}

inline bool is_ident_char(char c) {
    return is_ident_start(c) || (c >= '0' && c <= '9') || c == '$';
}

inline bool is_verilog_identifier(std::string_view s) {
    if (s.empty() || !is_ident_start(s[0])) return false;
    return std::all_of(s.begin(), s.end(), [](char c) { return is_ident_char(c); });
}

/// Maximal [A-Za-z0-9_$] runs that start with a letter or underscore.
/// Runs starting with a digit (numeric literals) are skipped.
inline std::vector<std::string> identifier_tokens(std::string_view text) {
    std::vector<std::string> out;
    size_t i = 0;
    while (i < text.size()) {
        if (is_ident_start(text[i])) {
            size_t j = i + 1;
            while (j < text.size() && is_ident_char(text[j])) ++j;
            out.emplace_back(text.substr(i, j - i));
            i = j;
        } else if (is_ident_char(text[i])) {
            size_t j = i + 1;
            while (j < text.size() && is_ident_char(text[j])) ++j;
            i = j;
        } else {
            ++i;
        }
    }
    return out;
}

/// Identifiers immediately following a backtick (`NAME).
inline std::vector<std::string> macro_tokens(std::string_view text) {
    std::vector<std::string> out;
    for (size_t i = 0; i + 1 < text.size(); ++i) {
        if (text[i] == '`' && is_ident_start(text[i + 1])) {
            size_t j = i + 1;
            while (j < text.size() && is_ident_char(text[j])) ++j;
            out.emplace_back(text.substr(i + 1, j - i - 1));
            i = j - 1;
        }
    }
    return out;
}

/// Approximate tokenizer used for budget accounting: one token per
/// identifier/number run plus one per non-space punctuation character.
inline long approx_token_count(std::string_view text) {
    long n = 0;
    size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        if (is_ident_char(c)) {
            ++n;
            while (i < text.size() && is_ident_char(text[i])) ++i;
        } else {
            if (!std::isspace(static_cast<unsigned char>(c))) ++n;
            ++i;
        }
    }
    return n;
}

/// Splits on '\n'. "a\nb\n" -> ["a","b"] with trailing flag reported separately.
inline std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    size_t start = 0;
    for (size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '\n') {
            lines.emplace_back(text.substr(start, i - start));
            start = i + 1;
        }
    }
    if (start < text.size()) lines.emplace_back(text.substr(start));
    return lines;
}

inline bool ends_with_newline(std::string_view text) {
    return !text.empty() && text.back() == '\n';
}

inline std::string join_lines(const std::vector<std::string>& lines, bool trailing_newline) {
    std::string out;
    for (size_t i = 0; i < lines.size(); ++i) {
        out += lines[i];
        if (i + 1 < lines.size()) out += '\n';
    }
    if (trailing_newline && !lines.empty()) out += '\n';
    return out;
}

/// Lone CR (not part of CRLF) becomes LF; CRLF is left untouched.
inline std::string normalize_line_endings(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '\r' && (i + 1 >= text.size() || text[i + 1] != '\n')) {
            out += '\n';
        } else {
            out += text[i];
        }
    }
    return out;
}

inline std::string trim(std::string_view s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

// FNV-1a, 64-bit. Stable across platforms, used for replay request matching.
inline std::uint64_t fnv1a(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string fnv1a_hex(std::string_view data) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(data)));
    return std::string(buf);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Write-then-rename so readers never observe a truncated file.
inline void write_file(const std::string& path, std::string_view content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    if (target.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(target.parent_path(), ec);
    }
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error(ErrorCode::IoError, "short write to " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) throw Error(ErrorCode::IoError, "rename failed for " + path + ": " + ec.message());
}

} // namespace localv
