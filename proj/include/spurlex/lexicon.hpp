#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "spurlex/analysis.hpp"
#include "spurlex/corpus.hpp"
#include "spurlex/error.hpp"

namespace spurlex {

enum class CountMode { Occurrences, Documents };

inline const char* count_mode_name(CountMode m) {
    return m == CountMode::Occurrences ? "occurrences" : "documents";
}

inline CountMode count_mode_from_name(std::string_view s) {
    if (s == "occurrences") return CountMode::Occurrences;
    if (s == "documents") return CountMode::Documents;
    throw Error("unknown count mode '" + std::string(s) + "'");
}

struct ApiStats {
    int64_t count = 0;
    /// Distinct snippet texts in first-seen order, capped at 50 per callee.
    std::vector<std::string> snippets;
};

/// Per-label lexical statistics over a training corpus, plus the derived
/// spurious rankings. A name is spurious for a label when it occurs under
/// that label and never under the other. Rankings sort by count descending,
/// ties broken lexicographically ascending.
struct SpuriousLexicon {
    CountMode count_mode = CountMode::Occurrences;
    int64_t skipped_samples = 0;

    std::map<std::string, int64_t> var_freq[2];
    std::map<std::string, ApiStats> api_freq[2];
    std::vector<std::string> spurious_vars[2];
    std::vector<std::string> spurious_apis[2];
    std::set<std::string> spurious_var_set[2];
    std::set<std::string> spurious_api_set[2];
};

namespace detail {

inline std::vector<std::string> rank_spurious(
    const std::map<std::string, int64_t>& own,
    const std::map<std::string, int64_t>& other) {
    std::vector<std::string> names;
    for (const auto& [name, count] : own) {
        (void)count;
        if (!other.count(name)) names.push_back(name);
    }
    std::sort(names.begin(), names.end(),
              [&](const std::string& a, const std::string& b) {
                  int64_t ca = own.at(a), cb = own.at(b);
                  if (ca != cb) return ca > cb;
                  return a < b;
              });
    return names;
}

}  // namespace detail

/// Scans the corpus and builds the lexicon. Samples that analyze() rejects
/// are skipped and counted in skipped_samples.
inline SpuriousLexicon build_lexicon(const Corpus& corpus,
                                     CountMode mode = CountMode::Occurrences) {
    SpuriousLexicon lex;
    lex.count_mode = mode;

    for (const FunctionSample& sample : corpus.samples) {
        CodeFacts facts;
        try {
            facts = analyze(sample.source);
        } catch (const Error&) {
            ++lex.skipped_samples;
            continue;
        }
        const int l = sample.label;

        if (mode == CountMode::Occurrences) {
            for (const Token& t : facts.tokens)
                if (t.kind == TokenKind::Identifier &&
                    facts.variables.count(t.text))
                    ++lex.var_freq[l][t.text];
        } else {
            for (const std::string& v : facts.variables)
                ++lex.var_freq[l][v];
        }

        std::set<std::string> seen_callees;
        for (const CallSite& cs : facts.callees) {
            ApiStats& st = lex.api_freq[l][cs.callee];
            if (mode == CountMode::Occurrences) ++st.count;
            else if (seen_callees.insert(cs.callee).second) ++st.count;
            if (st.snippets.size() < 50 &&
                std::find(st.snippets.begin(), st.snippets.end(),
                          cs.snippet) == st.snippets.end())
                st.snippets.push_back(cs.snippet);
        }
    }

    std::map<std::string, int64_t> api_counts[2];
    for (int l = 0; l < 2; ++l)
        for (const auto& [name, st] : lex.api_freq[l])
            api_counts[l][name] = st.count;

    for (int l = 0; l < 2; ++l) {
        lex.spurious_vars[l] =
            detail::rank_spurious(lex.var_freq[l], lex.var_freq[1 - l]);
        lex.spurious_apis[l] =
            detail::rank_spurious(api_counts[l], api_counts[1 - l]);
        lex.spurious_var_set[l].insert(lex.spurious_vars[l].begin(),
                                       lex.spurious_vars[l].end());
        lex.spurious_api_set[l].insert(lex.spurious_apis[l].begin(),
                                       lex.spurious_apis[l].end());
    }
    return lex;
}

/// First min(k, available) spurious variable names for the label.
inline std::vector<std::string> topk_spurious_vars(const SpuriousLexicon& lex,
                                                   int label, size_t k) {
    const auto& all = lex.spurious_vars[label];
    return {all.begin(), all.begin() + std::min(k, all.size())};
}

/// Number of entries in the top decile of `total`, rounded up.
inline size_t top_decile_count(size_t total) { return (total + 9) / 10; }

/// First min(n, available) spurious APIs for the label, each paired with its
/// first recorded snippet.
inline std::vector<CallSite> api_pool(const SpuriousLexicon& lex, int label,
                                      size_t n) {
    std::vector<CallSite> pool;
    const auto& ranked = lex.spurious_apis[label];
    const size_t take = std::min(n, ranked.size());
    pool.reserve(take);
    for (size_t i = 0; i < take; ++i) {
        const std::string& name = ranked[i];
        const ApiStats& st = lex.api_freq[label].at(name);
        pool.push_back(CallSite{name, st.snippets.at(0), 0});
    }
    return pool;
}

inline nlohmann::ordered_json lexicon_to_json(const SpuriousLexicon& lex) {
    nlohmann::ordered_json j;
    for (int l = 0; l < 2; ++l) {
        const std::string key = std::to_string(l);
        j["var_freq"][key] = nlohmann::ordered_json::object();
        for (const auto& [name, count] : lex.var_freq[l])
            j["var_freq"][key][name] = count;
        j["api_freq"][key] = nlohmann::ordered_json::object();
        for (const auto& [name, st] : lex.api_freq[l]) {
            nlohmann::ordered_json entry;
            entry["count"] = st.count;
            entry["snippets"] = st.snippets;
            j["api_freq"][key][name] = std::move(entry);
        }
        j["spurious_vars"][key] = lex.spurious_vars[l];
        j["spurious_apis"][key] = lex.spurious_apis[l];
    }
    j["count_mode"] = count_mode_name(lex.count_mode);
    j["skipped_samples"] = lex.skipped_samples;
    return j;
}

inline SpuriousLexicon lexicon_from_json(const nlohmann::json& j) {
    SpuriousLexicon lex;
    if (j.contains("count_mode"))
        lex.count_mode = count_mode_from_name(j["count_mode"].get<std::string>());
    if (j.contains("skipped_samples"))
        lex.skipped_samples = j["skipped_samples"].get<int64_t>();
    for (int l = 0; l < 2; ++l) {
        const std::string key = std::to_string(l);
        for (const auto& [name, count] : j.at("var_freq").at(key).items())
            lex.var_freq[l][name] = count.get<int64_t>();
        for (const auto& [name, entry] : j.at("api_freq").at(key).items()) {
            ApiStats st;
            st.count = entry.at("count").get<int64_t>();
            st.snippets = entry.at("snippets").get<std::vector<std::string>>();
            lex.api_freq[l][name] = std::move(st);
        }
        lex.spurious_vars[l] =
            j.at("spurious_vars").at(key).get<std::vector<std::string>>();
        lex.spurious_apis[l] =
            j.at("spurious_apis").at(key).get<std::vector<std::string>>();
        lex.spurious_var_set[l].insert(lex.spurious_vars[l].begin(),
                                       lex.spurious_vars[l].end());
        lex.spurious_api_set[l].insert(lex.spurious_apis[l].begin(),
                                       lex.spurious_apis[l].end());
    }
    return lex;
}

inline void save_lexicon(const SpuriousLexicon& lex, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << lexicon_to_json(lex).dump(2) << '\n';
    if (!out) throw Error("write failed for '" + path + "'");
}

inline SpuriousLexicon load_lexicon(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception&) {
        throw Error("malformed lexicon JSON in '" + path + "'");
    }
    return lexicon_from_json(j);
}

}  // namespace spurlex
