#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "spurlex/error.hpp"
#include "spurlex/lexer.hpp"

namespace spurlex {

/// One call site: the callee identifier plus the full call-expression text
/// (callee through the matching close paren, verbatim).
struct CallSite {
    std::string callee;
    std::string snippet;
    size_t begin = 0;
};

/// Lexical facts about a single C function.
struct CodeFacts {
    std::vector<Token> tokens;
    std::string function_name;
    std::set<std::string> parameters;
    /// Parameters plus body identifiers classified as variables.
    std::set<std::string> variables;
    /// Call sites in source order, one entry per occurrence.
    std::vector<CallSite> callees;
    /// Byte offsets where a statement can be spliced in: right after the
    /// body's '{', after each top-level ';', and after each '}' that closes
    /// a nested block. Sorted ascending.
    std::vector<size_t> insertion_points;
};

namespace detail {

inline bool is_sig(const Token& t) {
    return t.kind != TokenKind::Whitespace && t.kind != TokenKind::Comment;
}

inline bool is_punct(const Token& t, std::string_view text) {
    return t.kind == TokenKind::Punct && t.text == text;
}

}  // namespace detail

/// Extracts CodeFacts from one C function definition.
///
/// Classification is purely lexical. A body identifier is a callee when the
/// next significant token is '('; it is a variable unless it is a keyword, a
/// known type name, the function's own name, a member access (preceded by
/// '.' or '->'), or it sits in declaration position (immediately before
/// another identifier, possibly through '*'s). Throws Error when no function
/// body is found or when braces, parens, or brackets are unbalanced.
inline CodeFacts analyze(std::string_view source) {
    CodeFacts facts;
    facts.tokens = tokenize(source);

    // Indices of significant tokens (everything but whitespace/comments).
    std::vector<size_t> sig;
    sig.reserve(facts.tokens.size());
    for (size_t i = 0; i < facts.tokens.size(); ++i)
        if (detail::is_sig(facts.tokens[i])) sig.push_back(i);

    auto tok = [&](size_t s) -> const Token& { return facts.tokens[sig[s]]; };

    // Global balance check for (), {}, [].
    {
        long paren = 0, brace = 0, bracket = 0;
        for (size_t s = 0; s < sig.size(); ++s) {
            const Token& t = tok(s);
            if (t.kind != TokenKind::Punct) continue;
            if (t.text == "(") ++paren;
            else if (t.text == ")") --paren;
            else if (t.text == "{") ++brace;
            else if (t.text == "}") --brace;
            else if (t.text == "[") ++bracket;
            else if (t.text == "]") --bracket;
            if (paren < 0 || brace < 0 || bracket < 0)
                throw Error("unbalanced delimiters near byte " +
                            std::to_string(t.begin));
        }
        if (paren != 0 || brace != 0 || bracket != 0)
            throw Error("unbalanced delimiters at end of input");
    }

    // Body open: first '{' at paren depth 0; it must follow the ')' of a
    // parameter list that is itself preceded by the function name.
    size_t body_open = sig.size();
    {
        long paren = 0;
        for (size_t s = 0; s < sig.size(); ++s) {
            const Token& t = tok(s);
            if (detail::is_punct(t, "(")) ++paren;
            else if (detail::is_punct(t, ")")) --paren;
            else if (detail::is_punct(t, "{") && paren == 0) {
                body_open = s;
                break;
            }
        }
    }
    if (body_open == sig.size() || body_open == 0 ||
        !detail::is_punct(tok(body_open - 1), ")"))
        throw Error("no function body found");

    // Match the parameter list backwards.
    size_t param_close = body_open - 1;
    size_t param_open = param_close;
    {
        long depth = 0;
        bool found = false;
        for (size_t s = param_close + 1; s-- > 0;) {
            const Token& t = tok(s);
            if (detail::is_punct(t, ")")) ++depth;
            else if (detail::is_punct(t, "(")) {
                --depth;
                if (depth == 0) {
                    param_open = s;
                    found = true;
                    break;
                }
            }
        }
        if (!found || param_open == 0)
            throw Error("no function body found");
    }
    if (tok(param_open - 1).kind != TokenKind::Identifier)
        throw Error("function name not found");
    facts.function_name = tok(param_open - 1).text;

    // Parameter names: split the list on top-level commas; within each
    // segment take the last identifier outside brackets, or the last
    // identifier of a (*name) declarator group for function pointers.
    {
        std::vector<std::vector<size_t>> segments(1);
        long paren = 0, bracket = 0;
        for (size_t s = param_open + 1; s < param_close; ++s) {
            const Token& t = tok(s);
            if (detail::is_punct(t, "(")) ++paren;
            else if (detail::is_punct(t, ")")) --paren;
            else if (detail::is_punct(t, "[")) ++bracket;
            else if (detail::is_punct(t, "]")) --bracket;
            if (detail::is_punct(t, ",") && paren == 0 && bracket == 0) {
                segments.emplace_back();
                continue;
            }
            segments.back().push_back(s);
        }
        for (const auto& seg : segments) {
            std::string name;
            // Function-pointer declarator: name inside the first '(' group
            // whose first significant member is '*'.
            bool fptr = false;
            for (size_t k = 0; k < seg.size() && !fptr; ++k) {
                if (!detail::is_punct(tok(seg[k]), "(")) continue;
                if (k + 1 < seg.size() && detail::is_punct(tok(seg[k + 1]), "*")) {
                    long depth = 0;
                    for (size_t j = k; j < seg.size(); ++j) {
                        const Token& t = tok(seg[j]);
                        if (detail::is_punct(t, "(")) ++depth;
                        else if (detail::is_punct(t, ")")) {
                            if (--depth == 0) break;
                        } else if (t.kind == TokenKind::Identifier) {
                            name = t.text;
                        }
                    }
                    fptr = true;
                }
            }
            if (!fptr) {
                long bdepth = 0;
                for (size_t k : seg) {
                    const Token& t = tok(k);
                    if (detail::is_punct(t, "[")) ++bdepth;
                    else if (detail::is_punct(t, "]")) --bdepth;
                    else if (t.kind == TokenKind::Identifier && bdepth == 0)
                        name = t.text;
                }
            }
            if (!name.empty() && !is_builtin_type_name(name))
                facts.parameters.insert(name);
        }
    }

    // Body walk: collect insertion points, variables, and call sites.
    const Token& open_tok = tok(body_open);
    facts.insertion_points.push_back(open_tok.end);

    long brace = 1, paren = 0;
    size_t body_close = sig.size();
    for (size_t s = body_open + 1; s < sig.size(); ++s) {
        const Token& t = tok(s);

        if (detail::is_punct(t, "{")) {
            ++brace;
            continue;
        }
        if (detail::is_punct(t, "}")) {
            --brace;
            if (brace == 0) {
                body_close = s;
                break;
            }
            if (brace == 1) facts.insertion_points.push_back(t.end);
            continue;
        }
        if (detail::is_punct(t, "(")) {
            ++paren;
            continue;
        }
        if (detail::is_punct(t, ")")) {
            --paren;
            continue;
        }
        if (detail::is_punct(t, ";") && brace == 1 && paren == 0) {
            facts.insertion_points.push_back(t.end);
            continue;
        }
        if (t.kind != TokenKind::Identifier) continue;

        const Token* prev = (s > 0) ? &tok(s - 1) : nullptr;
        const Token* next = (s + 1 < sig.size()) ? &tok(s + 1) : nullptr;

        if (next && detail::is_punct(*next, "(")) {
            if (t.text == facts.function_name) continue;
            // Call site: snippet runs through the matching ')'.
            long depth = 0;
            size_t close = sig.size();
            for (size_t j = s + 1; j < sig.size(); ++j) {
                const Token& u = tok(j);
                if (detail::is_punct(u, "(")) ++depth;
                else if (detail::is_punct(u, ")")) {
                    if (--depth == 0) {
                        close = j;
                        break;
                    }
                }
            }
            if (close == sig.size())
                throw Error("unbalanced delimiters at end of input");
            const Token& ct = tok(close);
            facts.callees.push_back(CallSite{
                t.text,
                std::string(source.substr(t.begin, ct.end - t.begin)),
                t.begin});
            continue;
        }

        if (prev && (detail::is_punct(*prev, ".") ||
                     detail::is_punct(*prev, "->")))
            continue;
        if (is_builtin_type_name(t.text)) continue;
        if (t.text == facts.function_name) continue;

        // Declaration position: this identifier names a type when the next
        // significant token (skipping '*'s) is another identifier.
        if (next) {
            size_t k = s + 1;
            while (k < sig.size() && detail::is_punct(tok(k), "*")) ++k;
            if (k < sig.size() && k > s + 1 &&
                tok(k).kind == TokenKind::Identifier)
                continue;
            if (next->kind == TokenKind::Identifier) continue;
        }

        facts.variables.insert(t.text);
    }
    if (body_close == sig.size())
        throw Error("unbalanced delimiters at end of input");

    for (const std::string& p : facts.parameters) facts.variables.insert(p);

    return facts;
}

}  // namespace spurlex
