#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "spurlex/analysis.hpp"
#include "spurlex/corpus.hpp"
#include "spurlex/error.hpp"
#include "spurlex/lexicon.hpp"
#include "spurlex/rng.hpp"
#include "spurlex/transform.hpp"

namespace spurlex {

enum class PerturbKind { Var, Api, Joint, RandomVar, RandomApi };

inline const char* perturb_kind_name(PerturbKind k) {
    switch (k) {
        case PerturbKind::Var: return "var";
        case PerturbKind::Api: return "api";
        case PerturbKind::Joint: return "joint";
        case PerturbKind::RandomVar: return "random_var";
        case PerturbKind::RandomApi: return "random_api";
    }
    return "?";
}

inline PerturbKind perturb_kind_from_name(std::string_view s) {
    if (s == "var") return PerturbKind::Var;
    if (s == "api") return PerturbKind::Api;
    if (s == "joint") return PerturbKind::Joint;
    if (s == "random_var") return PerturbKind::RandomVar;
    if (s == "random_api") return PerturbKind::RandomApi;
    throw Error("unknown perturbation kind '" + std::string(s) + "'");
}

/// Everything needed to replay one perturbation.
struct PerturbationRecord {
    int64_t sample_id = 0;
    PerturbKind kind = PerturbKind::Var;
    uint64_t seed = 0;
    size_t topk = 0;
    size_t m = 0;
    size_t n = 0;
    std::map<std::string, std::string> var_mapping;
    std::vector<std::pair<size_t, std::string>> inserted_blocks;
    bool pool_exhausted = false;
    std::vector<std::string> kept_variables;
};

struct PerturbResult {
    FunctionSample sample;
    PerturbationRecord record;
};

namespace detail {

inline std::set<std::string> identifier_texts(const std::vector<Token>& toks) {
    std::set<std::string> out;
    for (const Token& t : toks)
        if (t.kind == TokenKind::Identifier) out.insert(t.text);
    return out;
}

/// Assigns pool names to variables, drawing without replacement. When the
/// pool runs dry the remaining variables keep their names and the record
/// notes the exhaustion.
inline void draw_var_mapping(const std::set<std::string>& vars,
                             std::vector<std::string> pool, Rng& rng,
                             PerturbationRecord& rec) {
    for (const std::string& var : vars) {
        if (pool.empty()) {
            rec.pool_exhausted = true;
            rec.kept_variables.push_back(var);
            continue;
        }
        size_t i = rng.uniform_index(pool.size());
        rec.var_mapping[var] = pool[i];
        pool.erase(pool.begin() + static_cast<long>(i));
    }
}

/// Injects n dead blocks into the source. Per block: one insertion point
/// drawn uniformly (with replacement across blocks), then min(m, pool size)
/// distinct pool entries drawn without replacement. Guard variables count up
/// from _i_0, skipping names in `forbidden`.
inline std::string inject_blocks(const std::string& source,
                                 const CodeFacts& facts,
                                 const std::vector<CallSite>& pool, size_t m,
                                 size_t n, std::set<std::string> forbidden,
                                 Rng& rng, PerturbationRecord& rec) {
    if (pool.empty()) throw Error("inject_blocks: empty call pool");
    uint64_t gid = 0;
    for (size_t b = 0; b < n; ++b) {
        size_t pos = facts.insertion_points[rng.uniform_index(
            facts.insertion_points.size())];

        const size_t take = std::min(m, pool.size());
        std::vector<size_t> idx(pool.size());
        for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        for (size_t i = 0; i < take; ++i)
            std::swap(idx[i],
                      idx[i + rng.uniform_index(idx.size() - i)]);
        std::vector<std::string> calls;
        calls.reserve(take);
        for (size_t i = 0; i < take; ++i)
            calls.push_back(pool[idx[i]].snippet);

        std::string guard = "_i_" + std::to_string(gid);
        while (forbidden.count(guard)) guard = "_i_" + std::to_string(++gid);
        rec.inserted_blocks.emplace_back(pos, make_dead_block(calls, gid));
        forbidden.insert(guard);
        ++gid;
    }
    return insert_dead_code(source, rec.inserted_blocks);
}

inline std::set<std::string> snippet_identifiers(
    const std::vector<CallSite>& pool) {
    std::set<std::string> out;
    for (const CallSite& cs : pool)
        for (const Token& t : tokenize(cs.snippet))
            if (t.kind == TokenKind::Identifier) out.insert(t.text);
    return out;
}

}  // namespace detail

/// Renames every variable of the sample to names drawn without replacement
/// from the top-k spurious variables of the opposite label, skipping pool
/// names that already occur in the sample.
inline PerturbResult perturb_var(const FunctionSample& sample,
                                 const SpuriousLexicon& lex, size_t topk,
                                 Rng& rng) {
    CodeFacts facts = analyze(sample.source);

    PerturbResult res{sample, {}};
    res.record.sample_id = sample.id;
    res.record.kind = PerturbKind::Var;
    res.record.seed = rng.seed();
    res.record.topk = topk;

    const std::set<std::string> present =
        detail::identifier_texts(facts.tokens);
    std::vector<std::string> pool;
    for (const std::string& name :
         topk_spurious_vars(lex, 1 - sample.label, topk))
        if (!present.count(name)) pool.push_back(name);

    detail::draw_var_mapping(facts.variables, std::move(pool), rng,
                             res.record);
    if (!res.record.var_mapping.empty())
        res.sample.source = rename_variables(sample.source,
                                             res.record.var_mapping);
    return res;
}

/// Inserts n dead blocks, each holding up to m distinct call snippets drawn
/// from the top-100 spurious APIs of the opposite label.
inline PerturbResult perturb_api(const FunctionSample& sample,
                                 const SpuriousLexicon& lex, size_t m,
                                 size_t n, Rng& rng) {
    CodeFacts facts = analyze(sample.source);

    PerturbResult res{sample, {}};
    res.record.sample_id = sample.id;
    res.record.kind = PerturbKind::Api;
    res.record.seed = rng.seed();
    res.record.m = m;
    res.record.n = n;

    std::vector<CallSite> pool = api_pool(lex, 1 - sample.label, 100);
    if (pool.empty())
        throw Error("perturb_api: no spurious APIs for label " +
                    std::to_string(1 - sample.label));

    std::set<std::string> forbidden = detail::identifier_texts(facts.tokens);
    std::set<std::string> pool_ids = detail::snippet_identifiers(pool);
    forbidden.insert(pool_ids.begin(), pool_ids.end());

    res.sample.source = detail::inject_blocks(
        sample.source, facts, pool, m, n, std::move(forbidden), rng,
        res.record);
    return res;
}

/// Applies the variable renaming to the original variables and then injects
/// dead blocks, so both lexical channels shift at once. Identifiers that
/// arrive with the injected blocks are never renamed.
inline PerturbResult perturb_joint(const FunctionSample& sample,
                                   const SpuriousLexicon& lex, size_t topk,
                                   size_t m, size_t n, Rng& rng) {
    CodeFacts facts = analyze(sample.source);

    PerturbResult res{sample, {}};
    res.record.sample_id = sample.id;
    res.record.kind = PerturbKind::Joint;
    res.record.seed = rng.seed();
    res.record.topk = topk;
    res.record.m = m;
    res.record.n = n;

    std::vector<CallSite> api = api_pool(lex, 1 - sample.label, 100);
    if (api.empty())
        throw Error("perturb_joint: no spurious APIs for label " +
                    std::to_string(1 - sample.label));

    // Variable pool is filtered against injected identifiers too, so a new
    // name can never collide with a block that lands later.
    std::set<std::string> present = detail::identifier_texts(facts.tokens);
    std::set<std::string> injected = detail::snippet_identifiers(api);
    std::vector<std::string> vpool;
    for (const std::string& name :
         topk_spurious_vars(lex, 1 - sample.label, topk))
        if (!present.count(name) && !injected.count(name))
            vpool.push_back(name);

    detail::draw_var_mapping(facts.variables, std::move(vpool), rng,
                             res.record);
    std::string renamed =
        res.record.var_mapping.empty()
            ? sample.source
            : rename_variables(sample.source, res.record.var_mapping);

    CodeFacts renamed_facts = analyze(renamed);
    std::set<std::string> forbidden =
        detail::identifier_texts(renamed_facts.tokens);
    forbidden.insert(injected.begin(), injected.end());

    res.sample.source = detail::inject_blocks(
        renamed, renamed_facts, api, m, n, std::move(forbidden), rng,
        res.record);
    return res;
}

/// Lexicon-free baselines: RandomVar renames variables to fresh synthetic
/// names (v0, v1, ...), RandomApi injects blocks of fresh synthetic calls
/// (fn0(0), fn1(0), ...). Neither draws from the corpus lexicon.
inline PerturbResult perturb_random(const FunctionSample& sample,
                                    PerturbKind kind, Rng& rng, size_t m = 5,
                                    size_t n = 5) {
    if (kind != PerturbKind::RandomVar && kind != PerturbKind::RandomApi)
        throw Error("perturb_random: kind must be random_var or random_api");

    CodeFacts facts = analyze(sample.source);

    PerturbResult res{sample, {}};
    res.record.sample_id = sample.id;
    res.record.kind = kind;
    res.record.seed = rng.seed();

    std::set<std::string> present = detail::identifier_texts(facts.tokens);

    if (kind == PerturbKind::RandomVar) {
        uint64_t k = 0;
        for (const std::string& var : facts.variables) {
            std::string name = "v" + std::to_string(k);
            while (present.count(name)) name = "v" + std::to_string(++k);
            res.record.var_mapping[var] = name;
            present.insert(name);
            ++k;
        }
        if (!res.record.var_mapping.empty())
            res.sample.source =
                rename_variables(sample.source, res.record.var_mapping);
        return res;
    }

    res.record.m = m;
    res.record.n = n;
    std::vector<CallSite> pool;
    uint64_t k = 0;
    for (size_t i = 0; i < m; ++i) {
        std::string name = "fn" + std::to_string(k);
        while (present.count(name)) name = "fn" + std::to_string(++k);
        present.insert(name);
        pool.push_back(CallSite{name, name + "(0)", 0});
        ++k;
    }
    res.sample.source = detail::inject_blocks(
        sample.source, facts, pool, m, n, std::move(present), rng,
        res.record);
    return res;
}

inline nlohmann::ordered_json record_to_json(const PerturbationRecord& r) {
    nlohmann::ordered_json j;
    j["idx"] = r.sample_id;
    j["kind"] = perturb_kind_name(r.kind);
    j["seed"] = r.seed;
    j["topk"] = r.topk;
    j["m"] = r.m;
    j["n"] = r.n;
    j["var_mapping"] = nlohmann::ordered_json::object();
    for (const auto& [from, to] : r.var_mapping) j["var_mapping"][from] = to;
    j["inserted_blocks"] = nlohmann::ordered_json::array();
    for (const auto& [offset, block] : r.inserted_blocks) {
        nlohmann::ordered_json b;
        b["offset"] = offset;
        b["block"] = block;
        j["inserted_blocks"].push_back(std::move(b));
    }
    j["pool_exhausted"] = r.pool_exhausted;
    j["kept_variables"] = r.kept_variables;
    return j;
}

}  // namespace spurlex
