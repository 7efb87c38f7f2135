#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "spurlex/error.hpp"

namespace spurlex {

enum class TokenKind {
    Identifier,
    Keyword,
    Number,
    String,
    Char,
    Comment,
    Punct,
    Whitespace,
};

struct Token {
    TokenKind kind;
    std::string text;
    size_t begin = 0;  // byte offset of first char
    size_t end = 0;    // one past last char

    bool is(TokenKind k) const { return kind == k; }
};

inline const char* token_kind_name(TokenKind k) {
    switch (k) {
        case TokenKind::Identifier: return "identifier";
        case TokenKind::Keyword: return "keyword";
        case TokenKind::Number: return "number";
        case TokenKind::String: return "string";
        case TokenKind::Char: return "char";
        case TokenKind::Comment: return "comment";
        case TokenKind::Punct: return "punct";
        case TokenKind::Whitespace: return "whitespace";
    }
    return "?";
}

/// The C99 keyword set. Identifiers outside this set keep kind Identifier
/// even when they name types (size_t etc.); see is_builtin_type_name.
inline bool is_keyword(std::string_view s) {
    static const std::unordered_set<std::string_view> kw = {
        "auto", "break", "case", "char", "const", "continue", "default",
        "do", "double", "else", "enum", "extern", "float", "for", "goto",
        "if", "inline", "int", "long", "register", "restrict", "return",
        "short", "signed", "sizeof", "static", "struct", "switch",
        "typedef", "union", "unsigned", "void", "volatile", "while",
        "_Bool", "_Complex", "_Imaginary",
    };
    return kw.count(s) > 0;
}

/// Common typedef names that should never be classified as variables.
inline bool is_builtin_type_name(std::string_view s) {
    static const std::unordered_set<std::string_view> types = {
        "int8_t", "int16_t", "int32_t", "int64_t",
        "uint8_t", "uint16_t", "uint32_t", "uint64_t",
        "intptr_t", "uintptr_t", "size_t", "ssize_t", "ptrdiff_t",
        "wchar_t", "bool", "FILE", "va_list", "NULL", "true", "false",
    };
    return types.count(s) > 0;
}

namespace detail {

inline bool is_ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}

inline bool is_ident_char(char c) {
    return is_ident_start(c) || (c >= '0' && c <= '9');
}

inline bool is_digit(char c) { return c >= '0' && c <= '9'; }

inline bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
           c == '\f';
}

// Multi-character operators, longest first within each leading char.
inline size_t punct_len(std::string_view s) {
    static const std::array<std::string_view, 3> three = {
        "<<=", ">>=", "...",
    };
    static const std::array<std::string_view, 19> two = {
        "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&",
        "||", "+=", "-=", "*=", "/=", "%=", "&=", "^=", "|=",
    };
    for (auto op : three)
        if (s.substr(0, op.size()) == op) return op.size();
    for (auto op : two)
        if (s.substr(0, op.size()) == op) return op.size();
    return 1;
}

}  // namespace detail

/// Splits C source into a lossless token stream: concatenating the token
/// texts reproduces the input byte for byte.
///
/// Preprocessor directives (lines whose first non-blank char is '#') become
/// one opaque Punct token spanning the whole logical line, including
/// backslash-newline continuations. Throws Error with a byte offset on
/// unterminated strings, chars, or block comments.
inline std::vector<Token> tokenize(std::string_view src) {
    std::vector<Token> out;
    size_t i = 0;
    const size_t n = src.size();
    bool at_line_start = true;  // only blanks seen since last newline

    auto push = [&](TokenKind kind, size_t begin, size_t end) {
        out.push_back(Token{kind, std::string(src.substr(begin, end - begin)),
                            begin, end});
    };

    while (i < n) {
        const char c = src[i];
        const size_t start = i;

        if (detail::is_space(c)) {
            while (i < n && detail::is_space(src[i])) {
                if (src[i] == '\n') at_line_start = true;
                ++i;
            }
            push(TokenKind::Whitespace, start, i);
            continue;
        }

        if (c == '/' && i + 1 < n && src[i + 1] == '/') {
            while (i < n && src[i] != '\n') ++i;
            push(TokenKind::Comment, start, i);
            at_line_start = false;
            continue;
        }

        if (c == '/' && i + 1 < n && src[i + 1] == '*') {
            i += 2;
            while (i + 1 < n && !(src[i] == '*' && src[i + 1] == '/')) ++i;
            if (i + 1 >= n)
                throw Error("unterminated block comment at byte " +
                            std::to_string(start));
            i += 2;
            push(TokenKind::Comment, start, i);
            at_line_start = false;
            continue;
        }

        if (c == '#' && at_line_start) {
            // Opaque directive token up to the unescaped end of line.
            while (i < n) {
                if (src[i] == '\\' && i + 1 < n && src[i + 1] == '\n') {
                    i += 2;
                    continue;
                }
                if (src[i] == '\n') break;
                ++i;
            }
            push(TokenKind::Punct, start, i);
            at_line_start = false;
            continue;
        }

        if (c == '"' || c == '\'') {
            const char quote = c;
            ++i;
            bool closed = false;
            while (i < n) {
                if (src[i] == '\\' && i + 1 < n) {
                    i += 2;
                    continue;
                }
                if (src[i] == quote) {
                    ++i;
                    closed = true;
                    break;
                }
                ++i;
            }
            if (!closed)
                throw Error(std::string("unterminated ") +
                            (quote == '"' ? "string" : "char") +
                            " literal at byte " + std::to_string(start));
            push(quote == '"' ? TokenKind::String : TokenKind::Char, start, i);
            at_line_start = false;
            continue;
        }

        if (detail::is_ident_start(c)) {
            while (i < n && detail::is_ident_char(src[i])) ++i;
            std::string_view text = src.substr(start, i - start);
            // Encoding prefix glued to a literal (L"...", u8"...").
            if (i < n && (src[i] == '"' || src[i] == '\'')) {
                const char quote = src[i];
                size_t j = i + 1;
                bool closed = false;
                while (j < n) {
                    if (src[j] == '\\' && j + 1 < n) {
                        j += 2;
                        continue;
                    }
                    if (src[j] == quote) {
                        ++j;
                        closed = true;
                        break;
                    }
                    ++j;
                }
                if (!closed)
                    throw Error(std::string("unterminated ") +
                                (quote == '"' ? "string" : "char") +
                                " literal at byte " + std::to_string(start));
                i = j;
                push(quote == '"' ? TokenKind::String : TokenKind::Char,
                     start, i);
                at_line_start = false;
                continue;
            }
            push(is_keyword(text) ? TokenKind::Keyword : TokenKind::Identifier,
                 start, i);
            at_line_start = false;
            continue;
        }

        if (detail::is_digit(c) ||
            (c == '.' && i + 1 < n && detail::is_digit(src[i + 1]))) {
            // pp-number: digits, idents, dots, and sign after an exponent.
            ++i;
            while (i < n) {
                char d = src[i];
                if (detail::is_ident_char(d) || d == '.') {
                    ++i;
                    continue;
                }
                if ((d == '+' || d == '-') && i > start) {
                    char prev = src[i - 1];
                    if (prev == 'e' || prev == 'E' || prev == 'p' ||
                        prev == 'P') {
                        ++i;
                        continue;
                    }
                }
                break;
            }
            push(TokenKind::Number, start, i);
            at_line_start = false;
            continue;
        }

        i += detail::punct_len(src.substr(i));
        push(TokenKind::Punct, start, i);
        at_line_start = false;
    }

    return out;
}

/// Reassembles source text from a token stream.
inline std::string detokenize(const std::vector<Token>& tokens) {
    std::string out;
    for (const Token& t : tokens) out += t.text;
    return out;
}

}  // namespace spurlex
