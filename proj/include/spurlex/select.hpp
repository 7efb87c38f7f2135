#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "spurlex/analysis.hpp"
#include "spurlex/corpus.hpp"
#include "spurlex/error.hpp"
#include "spurlex/lexicon.hpp"
#include "spurlex/perturb.hpp"
#include "spurlex/rng.hpp"
#include "spurlex/transform.hpp"

namespace spurlex {

enum class SelectProcedure { Var1, Var2, Api1, Api2, Api3, VarApi };

inline const char* select_procedure_name(SelectProcedure p) {
    switch (p) {
        case SelectProcedure::Var1: return "var1";
        case SelectProcedure::Var2: return "var2";
        case SelectProcedure::Api1: return "api1";
        case SelectProcedure::Api2: return "api2";
        case SelectProcedure::Api3: return "api3";
        case SelectProcedure::VarApi: return "var_api";
    }
    return "?";
}

inline SelectProcedure select_procedure_from_name(std::string_view s) {
    if (s == "var1") return SelectProcedure::Var1;
    if (s == "var2") return SelectProcedure::Var2;
    if (s == "api1") return SelectProcedure::Api1;
    if (s == "api2") return SelectProcedure::Api2;
    if (s == "api3") return SelectProcedure::Api3;
    if (s == "var_api") return SelectProcedure::VarApi;
    throw Error("unknown selection procedure '" + std::string(s) + "'");
}

/// Default block size per procedure when the caller passes k = 0.
inline size_t select_default_k(SelectProcedure p) {
    switch (p) {
        case SelectProcedure::Var2: return 3;
        case SelectProcedure::Api2: return 5;
        case SelectProcedure::Api3: return 5;
        case SelectProcedure::VarApi: return 5;
        default: return 0;
    }
}

/// Cached lexical facts for one training sample.
struct SampleFeatures {
    int64_t id = 0;
    int label = 0;
    std::set<std::string> identifiers;
    std::set<std::string> variables;
    std::vector<CallSite> callees;
    std::vector<size_t> insertion_points;
    std::set<std::string> spurious_vars;  // variables ∩ own-label spurious set
    std::set<std::string> spurious_apis;  // callees ∩ own-label spurious set
};

/// Precomputed per-corpus structures for x' selection. Holds pointers to the
/// corpus and lexicon, which must outlive the index. Samples that analyze()
/// rejects are skipped and can never be selected.
struct SelectionIndex {
    const Corpus* corpus = nullptr;
    const SpuriousLexicon* lex = nullptr;
    std::map<int64_t, size_t> pos_by_id;
    std::map<int64_t, SampleFeatures> feats;
    std::vector<int64_t> ids_by_label[2];
    std::map<std::string, std::vector<int64_t>> var_postings[2];
    std::map<std::string, std::vector<int64_t>> api_postings[2];
    int64_t skipped = 0;
};

inline SelectionIndex build_selection_index(const Corpus& train,
                                            const SpuriousLexicon& lex) {
    SelectionIndex idx;
    idx.corpus = &train;
    idx.lex = &lex;

    for (size_t pos = 0; pos < train.samples.size(); ++pos) {
        const FunctionSample& s = train.samples[pos];
        CodeFacts facts;
        try {
            facts = analyze(s.source);
        } catch (const Error&) {
            ++idx.skipped;
            continue;
        }
        SampleFeatures f;
        f.id = s.id;
        f.label = s.label;
        f.identifiers = detail::identifier_texts(facts.tokens);
        f.variables = facts.variables;
        f.callees = facts.callees;
        f.insertion_points = facts.insertion_points;
        for (const std::string& v : f.variables)
            if (lex.spurious_var_set[s.label].count(v))
                f.spurious_vars.insert(v);
        for (const CallSite& cs : f.callees)
            if (lex.spurious_api_set[s.label].count(cs.callee))
                f.spurious_apis.insert(cs.callee);

        idx.pos_by_id[s.id] = pos;
        idx.ids_by_label[s.label].push_back(s.id);
        for (const std::string& v : f.spurious_vars)
            idx.var_postings[s.label][v].push_back(s.id);
        for (const std::string& a : f.spurious_apis)
            idx.api_postings[s.label][a].push_back(s.id);
        idx.feats[s.id] = std::move(f);
    }
    for (int l = 0; l < 2; ++l) {
        std::sort(idx.ids_by_label[l].begin(), idx.ids_by_label[l].end());
        for (auto& [name, ids] : idx.var_postings[l]) {
            (void)name;
            std::sort(ids.begin(), ids.end());
        }
        for (auto& [name, ids] : idx.api_postings[l]) {
            (void)name;
            std::sort(ids.begin(), ids.end());
        }
    }
    return idx;
}

/// Result of one x' selection.
struct Selected {
    FunctionSample sample;
    int64_t source_id = 0;
    SelectProcedure procedure = SelectProcedure::Var1;
    bool fallback_random = false;  // argmax had an empty feature set
    bool unmodified = false;       // api2 found no callees to copy
    std::map<std::string, std::string> var_mapping;
    std::vector<std::pair<size_t, std::string>> inserted_blocks;
};

namespace detail {

inline SampleFeatures features_for(const FunctionSample& x,
                                   const SelectionIndex& idx) {
    auto it = idx.feats.find(x.id);
    if (it != idx.feats.end() && it->second.label == x.label)
        return it->second;
    CodeFacts facts = analyze(x.source);
    SampleFeatures f;
    f.id = x.id;
    f.label = x.label;
    f.identifiers = identifier_texts(facts.tokens);
    f.variables = facts.variables;
    f.callees = facts.callees;
    f.insertion_points = facts.insertion_points;
    for (const std::string& v : f.variables)
        if (idx.lex->spurious_var_set[x.label].count(v))
            f.spurious_vars.insert(v);
    for (const CallSite& cs : f.callees)
        if (idx.lex->spurious_api_set[x.label].count(cs.callee))
            f.spurious_apis.insert(cs.callee);
    return f;
}

inline std::vector<int64_t> candidates_for(const FunctionSample& x,
                                           const SelectionIndex& idx) {
    std::vector<int64_t> out;
    for (int64_t id : idx.ids_by_label[x.label])
        if (id != x.id) out.push_back(id);
    if (out.empty())
        throw Error("select: no same-label candidates for sample " +
                    std::to_string(x.id));
    return out;
}

/// Argmax of shared feature count over candidates, smallest id on ties
/// (zero-share candidates included). Returns -1 when `own` is empty.
inline int64_t argmax_shared(
    const std::set<std::string>& own,
    const std::map<std::string, std::vector<int64_t>>& postings,
    const std::vector<int64_t>& candidates, int64_t self_id) {
    if (own.empty()) return -1;
    std::map<int64_t, size_t> shared;
    for (const std::string& name : own) {
        auto it = postings.find(name);
        if (it == postings.end()) continue;
        for (int64_t id : it->second)
            if (id != self_id) ++shared[id];
    }
    if (shared.empty()) return candidates.front();
    int64_t best = 0;
    size_t best_count = 0;
    for (const auto& [id, count] : shared) {
        if (count > best_count) {
            best = id;
            best_count = count;
        }
    }
    return best;
}

inline const FunctionSample& sample_by_id(const SelectionIndex& idx,
                                          int64_t id) {
    return idx.corpus->samples[idx.pos_by_id.at(id)];
}

inline std::vector<size_t> draw_subset(size_t pool_size, size_t take,
                                       Rng& rng) {
    std::vector<size_t> order(pool_size);
    for (size_t i = 0; i < pool_size; ++i) order[i] = i;
    for (size_t i = 0; i < take; ++i)
        std::swap(order[i], order[i + rng.uniform_index(pool_size - i)]);
    order.resize(take);
    return order;
}

/// One dead block of up to k pool snippets at a random insertion point of
/// sel.sample (api3-style; also the API half of var_api).
inline void insert_pool_block(const std::vector<CallSite>& pool, size_t k,
                              Rng& rng, Selected& sel) {
    CodeFacts facts = analyze(sel.sample.source);
    std::set<std::string> forbidden = identifier_texts(facts.tokens);
    std::set<std::string> pool_ids = snippet_identifiers(pool);
    forbidden.insert(pool_ids.begin(), pool_ids.end());

    const size_t take = std::min(k, pool.size());
    size_t pos =
        facts.insertion_points[rng.uniform_index(facts.insertion_points.size())];
    std::vector<std::string> calls;
    for (size_t i : draw_subset(pool.size(), take, rng))
        calls.push_back(pool[i].snippet);

    uint64_t gid = 0;
    while (forbidden.count("_i_" + std::to_string(gid))) ++gid;

    sel.inserted_blocks.emplace_back(pos, make_dead_block(calls, gid));
    sel.sample.source =
        insert_dead_code(sel.sample.source, sel.inserted_blocks);
}

}  // namespace detail

/// Var1: the same-label sample sharing the most spurious variable names with
/// x; ties go to the smallest id; an empty feature set falls back to a
/// uniform random same-label sample.
inline Selected select_var1(const FunctionSample& x, const SelectionIndex& idx,
                            Rng& rng) {
    SampleFeatures fx = detail::features_for(x, idx);
    std::vector<int64_t> candidates = detail::candidates_for(x, idx);

    Selected sel;
    sel.procedure = SelectProcedure::Var1;
    int64_t best = detail::argmax_shared(
        fx.spurious_vars, idx.var_postings[x.label], candidates, x.id);
    if (best < 0) {
        best = candidates[rng.uniform_index(candidates.size())];
        sel.fallback_random = true;
    }
    sel.source_id = best;
    sel.sample = detail::sample_by_id(idx, best);
    return sel;
}

/// Api1: same as Var1 over shared spurious APIs.
inline Selected select_api1(const FunctionSample& x, const SelectionIndex& idx,
                            Rng& rng) {
    SampleFeatures fx = detail::features_for(x, idx);
    std::vector<int64_t> candidates = detail::candidates_for(x, idx);

    Selected sel;
    sel.procedure = SelectProcedure::Api1;
    int64_t best = detail::argmax_shared(
        fx.spurious_apis, idx.api_postings[x.label], candidates, x.id);
    if (best < 0) {
        best = candidates[rng.uniform_index(candidates.size())];
        sel.fallback_random = true;
    }
    sel.source_id = best;
    sel.sample = detail::sample_by_id(idx, best);
    return sel;
}

/// Var2: a uniform random same-label sample with min(k, |vars(x')|,
/// |vars(x)|) of its variables renamed to variable names of x, capture-free.
inline Selected construct_var2(const FunctionSample& x,
                               const SelectionIndex& idx, size_t k, Rng& rng) {
    SampleFeatures fx = detail::features_for(x, idx);
    std::vector<int64_t> candidates = detail::candidates_for(x, idx);

    Selected sel;
    sel.procedure = SelectProcedure::Var2;
    sel.source_id = candidates[rng.uniform_index(candidates.size())];
    sel.sample = detail::sample_by_id(idx, sel.source_id);

    const SampleFeatures& fp = idx.feats.at(sel.source_id);
    std::vector<std::string> old_names(fp.variables.begin(),
                                       fp.variables.end());
    std::vector<std::string> new_pool;
    for (const std::string& v : fx.variables)
        if (!fp.identifiers.count(v)) new_pool.push_back(v);

    size_t count = std::min({k, old_names.size(), fx.variables.size()});
    count = std::min(count, new_pool.size());
    if (count == 0) return sel;

    std::vector<size_t> old_pick =
        detail::draw_subset(old_names.size(), count, rng);
    std::vector<size_t> new_pick =
        detail::draw_subset(new_pool.size(), count, rng);
    for (size_t i = 0; i < count; ++i)
        sel.var_mapping[old_names[old_pick[i]]] = new_pool[new_pick[i]];

    sel.sample.source = rename_variables(sel.sample.source, sel.var_mapping);
    return sel;
}

/// Api2: a uniform random same-label sample with one dead block holding
/// min(k, distinct call snippets of x) of x's calls. When x has no callees
/// the sample is returned unmodified with the flag set.
inline Selected construct_api2(const FunctionSample& x,
                               const SelectionIndex& idx, size_t k, Rng& rng) {
    SampleFeatures fx = detail::features_for(x, idx);
    std::vector<int64_t> candidates = detail::candidates_for(x, idx);

    Selected sel;
    sel.procedure = SelectProcedure::Api2;
    sel.source_id = candidates[rng.uniform_index(candidates.size())];
    sel.sample = detail::sample_by_id(idx, sel.source_id);

    std::vector<CallSite> distinct;
    std::set<std::string> seen;
    for (const CallSite& cs : fx.callees)
        if (seen.insert(cs.snippet).second) distinct.push_back(cs);
    if (distinct.empty()) {
        sel.unmodified = true;
        return sel;
    }

    detail::insert_pool_block(distinct, k, rng, sel);
    return sel;
}

/// Api3: a uniform random same-label sample with one dead block of up to k
/// calls from the top decile of the same-label spurious API ranking.
inline Selected construct_api3(const FunctionSample& x,
                               const SelectionIndex& idx, size_t k, Rng& rng) {
    std::vector<int64_t> candidates = detail::candidates_for(x, idx);

    const auto& ranked = idx.lex->spurious_apis[x.label];
    std::vector<CallSite> pool =
        api_pool(*idx.lex, x.label, top_decile_count(ranked.size()));
    if (pool.empty())
        throw Error("construct_api3: no spurious APIs for label " +
                    std::to_string(x.label));

    Selected sel;
    sel.procedure = SelectProcedure::Api3;
    sel.source_id = candidates[rng.uniform_index(candidates.size())];
    sel.sample = detail::sample_by_id(idx, sel.source_id);

    detail::insert_pool_block(pool, k, rng, sel);
    return sel;
}

/// Var+API: the Var1 choice with an api3-style block added on top.
inline Selected construct_var_api(const FunctionSample& x,
                                  const SelectionIndex& idx, size_t k,
                                  Rng& rng) {
    Selected sel = select_var1(x, idx, rng);
    sel.procedure = SelectProcedure::VarApi;

    const auto& ranked = idx.lex->spurious_apis[x.label];
    std::vector<CallSite> pool =
        api_pool(*idx.lex, x.label, top_decile_count(ranked.size()));
    if (pool.empty())
        throw Error("construct_var_api: no spurious APIs for label " +
                    std::to_string(x.label));

    detail::insert_pool_block(pool, k, rng, sel);
    return sel;
}

/// Dispatch by procedure; k = 0 selects the per-procedure default.
inline Selected select_xprime(SelectProcedure proc, const FunctionSample& x,
                              const SelectionIndex& idx, Rng& rng,
                              size_t k = 0) {
    if (k == 0) k = select_default_k(proc);
    switch (proc) {
        case SelectProcedure::Var1: return select_var1(x, idx, rng);
        case SelectProcedure::Var2: return construct_var2(x, idx, k, rng);
        case SelectProcedure::Api1: return select_api1(x, idx, rng);
        case SelectProcedure::Api2: return construct_api2(x, idx, k, rng);
        case SelectProcedure::Api3: return construct_api3(x, idx, k, rng);
        case SelectProcedure::VarApi: return construct_var_api(x, idx, k, rng);
    }
    throw Error("select_xprime: bad procedure");
}

}  // namespace spurlex
