#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spurlex/analysis.hpp"
#include "spurlex/error.hpp"
#include "spurlex/lexer.hpp"

namespace spurlex {

/// Renames variables by rewriting identifier tokens. The mapping must be
/// injective, every key must be a variable of the function, and no value may
/// already occur in the source (capture) or collide with a keyword or known
/// type name. Non-identifier tokens, strings, and comments pass through
/// untouched, so the output is byte-identical except at renamed tokens.
inline std::string rename_variables(
    std::string_view source, const std::map<std::string, std::string>& mapping) {
    if (mapping.empty()) return std::string(source);

    CodeFacts facts = analyze(source);

    std::set<std::string> values;
    for (const auto& [from, to] : mapping) {
        if (!facts.variables.count(from))
            throw Error("rename_variables: '" + from +
                        "' is not a variable of this function");
        if (!values.insert(to).second)
            throw Error("rename_variables: mapping is not injective ('" + to +
                        "' used twice)");
        if (is_keyword(to) || is_builtin_type_name(to))
            throw Error("rename_variables: '" + to +
                        "' is a keyword or type name");
    }

    std::set<std::string> existing;
    for (const Token& t : facts.tokens)
        if (t.kind == TokenKind::Identifier) existing.insert(t.text);
    for (const std::string& v : values)
        if (existing.count(v))
            throw Error("rename_variables: '" + v +
                        "' already occurs in the source (capture)");

    std::string out;
    out.reserve(source.size());
    for (const Token& t : facts.tokens) {
        if (t.kind == TokenKind::Identifier) {
            auto it = mapping.find(t.text);
            if (it != mapping.end()) {
                out += it->second;
                continue;
            }
        }
        out += t.text;
    }
    return out;
}

/// Builds one never-executed block wrapping the given call snippets:
///   int _i_<id> = 0; while ( _i_<id> > _i_<id> ) { <call>; ... }
/// The guard compares the fresh variable against itself, so the loop body is
/// dead while every callee still appears lexically.
inline std::string make_dead_block(const std::vector<std::string>& calls,
                                   uint64_t guard_id) {
    if (calls.empty())
        throw Error("make_dead_block: need at least one call snippet");
    for (const std::string& c : calls) {
        long paren = 0;
        for (char ch : c) {
            if (ch == '(') ++paren;
            else if (ch == ')') --paren;
            if (paren < 0) break;
        }
        if (paren != 0)
            throw Error("make_dead_block: unbalanced call snippet '" + c + "'");
    }
    const std::string g = "_i_" + std::to_string(guard_id);
    std::string out = "int " + g + " = 0; while ( " + g + " > " + g + " ) { ";
    for (const std::string& c : calls) out += c + "; ";
    out += "}";
    return out;
}

/// Splices blocks into the source at the given byte offsets. Every offset
/// must be one of analyze(source).insertion_points. Blocks are applied so
/// that earlier offsets keep their meaning and blocks sharing an offset
/// appear in list order.
inline std::string insert_dead_code(
    std::string_view source,
    const std::vector<std::pair<size_t, std::string>>& blocks) {
    if (blocks.empty()) return std::string(source);

    CodeFacts facts = analyze(source);
    std::set<size_t> valid(facts.insertion_points.begin(),
                           facts.insertion_points.end());
    for (const auto& [offset, block] : blocks) {
        (void)block;
        if (!valid.count(offset))
            throw Error("insert_dead_code: offset " + std::to_string(offset) +
                        " is not an insertion point");
    }

    std::vector<std::pair<size_t, std::string>> ordered(blocks);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const auto& a, const auto& b) {
                         return a.first < b.first;
                     });

    std::string out(source);
    for (size_t i = ordered.size(); i-- > 0;)
        out.insert(ordered[i].first, ordered[i].second);
    return out;
}

}  // namespace spurlex
