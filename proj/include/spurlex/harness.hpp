#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "spurlex/corpus.hpp"
#include "spurlex/error.hpp"
#include "spurlex/learner.hpp"
#include "spurlex/lexicon.hpp"
#include "spurlex/perturb.hpp"
#include "spurlex/stats.hpp"

namespace spurlex {

struct PerExample {
    int64_t id = 0;
    int label = 0;
    double p_vul = 0.0;
    int predicted = 0;
};

struct EvalReport {
    F1Result f1;
    std::vector<PerExample> per_example;  // ordered by sample id
    Histogram histogram;
    size_t skipped = 0;
};

namespace detail {

constexpr uint64_t kTagEval = 0x6576616cull;
constexpr uint64_t kTagPerturb = 0x70657274ull;
constexpr uint64_t kTagSens = 0x73656e73ull;

}  // namespace detail

/// Evaluates the model on a corpus. Causal models marginalize over k draws
/// from the pool with a per-sample generator derived from (seed, id), so the
/// result is independent of sample order. Samples whose source cannot be
/// tokenized are skipped and counted.
inline EvalReport evaluate_model(const Model& mod, const Corpus& test,
                                 const InferencePool* pool, size_t k,
                                 uint64_t seed, bool xprime_self = false) {
    if (test.samples.empty()) throw Error("evaluate_model: empty corpus");

    EvalReport rep;
    std::map<int64_t, std::vector<double>> m_cache;
    for (const FunctionSample& s : test.samples) {
        if (!mod.cfg.import_mode) {
            bool ok = true;
            try {
                (void)tokenize(s.source);
            } catch (const Error&) {
                ok = false;
            }
            if (!ok) {
                ++rep.skipped;
                continue;
            }
        }
        Rng rng(mix_seed(mix_seed(seed, detail::kTagEval),
                         static_cast<uint64_t>(s.id)));
        Inference inf = infer_sample(mod, s, pool, k, rng, xprime_self,
                                     &m_cache);
        rep.per_example.push_back(
            PerExample{s.id, s.label, inf.p_vul, inf.label});
    }
    if (rep.per_example.empty())
        throw Error("evaluate_model: no usable samples");

    std::sort(rep.per_example.begin(), rep.per_example.end(),
              [](const PerExample& a, const PerExample& b) {
                  return a.id < b.id;
              });

    std::vector<int> preds, labels;
    std::vector<double> probs;
    for (const PerExample& e : rep.per_example) {
        preds.push_back(e.predicted);
        labels.push_back(e.label);
        probs.push_back(e.p_vul);
    }
    rep.f1 = f1_score(preds, labels);
    rep.histogram = make_histogram(probs, labels);
    return rep;
}

/// Count of examples the vanilla report got wrong and the causal report got
/// right, matched by sample id.
inline int64_t count_flips(const EvalReport& vanilla,
                           const EvalReport& causal) {
    std::map<int64_t, const PerExample*> by_id;
    for (const PerExample& e : causal.per_example) by_id[e.id] = &e;
    int64_t flips = 0;
    for (const PerExample& v : vanilla.per_example) {
        auto it = by_id.find(v.id);
        if (it == by_id.end()) continue;
        if (v.predicted != v.label &&
            it->second->predicted == it->second->label)
            ++flips;
    }
    return flips;
}

/// P(vulnerable) values restricted to truly vulnerable examples.
inline std::vector<double> vulnerable_probs(const EvalReport& rep) {
    std::vector<double> out;
    for (const PerExample& e : rep.per_example)
        if (e.label == 1) out.push_back(e.p_vul);
    return out;
}

inline nlohmann::ordered_json report_to_json(const EvalReport& rep) {
    nlohmann::ordered_json j;
    j["precision"] = rep.f1.precision;
    j["recall"] = rep.f1.recall;
    j["f1"] = rep.f1.f1;
    j["count"] = rep.per_example.size();
    j["skipped"] = rep.skipped;
    j["per_example"] = nlohmann::ordered_json::array();
    for (const PerExample& e : rep.per_example) {
        nlohmann::ordered_json row;
        row["idx"] = e.id;
        row["label"] = e.label;
        row["p_vul"] = e.p_vul;
        row["predicted"] = e.predicted;
        j["per_example"].push_back(std::move(row));
    }
    return j;
}

/// Applies one perturbation family to a whole corpus with per-sample seeds.
/// Samples that cannot be perturbed pass through unchanged and are counted.
/// For family var, `value` is the top-k pool size; for api it is the block
/// count n (with m = 5 calls per block); for joint it is the top-k with
/// m = n = 5.
struct PerturbedCorpus {
    Corpus corpus;
    std::vector<PerturbationRecord> records;
    size_t unperturbed = 0;
};

inline PerturbedCorpus perturb_corpus(const Corpus& in,
                                      const SpuriousLexicon& lex,
                                      PerturbKind family, size_t value,
                                      uint64_t seed, size_t m = 5,
                                      size_t n = 5) {
    PerturbedCorpus out;
    out.corpus.name = in.name + "." + perturb_kind_name(family);
    for (const FunctionSample& s : in.samples) {
        Rng rng(mix_seed(mix_seed(mix_seed(seed, detail::kTagPerturb), value),
                         static_cast<uint64_t>(s.id)));
        try {
            PerturbResult res = [&] {
                switch (family) {
                    case PerturbKind::Var:
                        return perturb_var(s, lex, value, rng);
                    case PerturbKind::Api:
                        return perturb_api(s, lex, m, value, rng);
                    case PerturbKind::Joint:
                        return perturb_joint(s, lex, value, m, n, rng);
                    default:
                        return perturb_random(s, family, rng, m, n);
                }
            }();
            out.corpus.samples.push_back(std::move(res.sample));
            out.records.push_back(std::move(res.record));
        } catch (const Error&) {
            out.corpus.samples.push_back(s);
            ++out.unperturbed;
        }
    }
    return out;
}

struct RobustnessRow {
    size_t value = 0;
    double vanilla_f1 = 0.0;
};

struct RobustnessResult {
    PerturbKind family = PerturbKind::Var;
    std::vector<RobustnessRow> rows;
    size_t worst_value = 0;
    EvalReport vanilla_report;  // at the worst grid point
    EvalReport causal_report;   // at the worst grid point
    int64_t flips = 0;
    double mwu_p = 1.0;
    CohenResult effect;
};

/// Sweeps the grid, evaluates the vanilla model on each perturbed test set,
/// picks the grid point where vanilla is weakest (first argmin), and
/// evaluates the causal model there. The density comparison and flip count
/// contrast the two models on that worst perturbed set.
inline RobustnessResult run_robustness(
    const Model& vanilla, const Model& causal, const SpuriousLexicon& lex,
    const Corpus& test, const InferencePool& pool, PerturbKind family,
    const std::vector<size_t>& grid, size_t k, uint64_t seed) {
    if (grid.empty()) throw Error("run_robustness: empty grid");

    RobustnessResult res;
    res.family = family;

    size_t worst_i = 0;
    double worst_f1 = 2.0;
    for (size_t i = 0; i < grid.size(); ++i) {
        PerturbedCorpus pc = perturb_corpus(test, lex, family, grid[i], seed);
        EvalReport rep = evaluate_model(vanilla, pc.corpus, nullptr, 1, seed);
        res.rows.push_back(RobustnessRow{grid[i], rep.f1.f1});
        if (rep.f1.f1 < worst_f1) {
            worst_f1 = rep.f1.f1;
            worst_i = i;
        }
    }
    res.worst_value = grid[worst_i];

    PerturbedCorpus worst =
        perturb_corpus(test, lex, family, res.worst_value, seed);
    res.vanilla_report =
        evaluate_model(vanilla, worst.corpus, nullptr, 1, seed);
    res.causal_report =
        evaluate_model(causal, worst.corpus, &pool, k, seed);
    res.flips = count_flips(res.vanilla_report, res.causal_report);

    std::vector<double> pv = vulnerable_probs(res.vanilla_report);
    std::vector<double> pc = vulnerable_probs(res.causal_report);
    if (!pv.empty() && !pc.empty()) {
        res.mwu_p = mann_whitney_p(pv, pc);
        res.effect = cohens_d(pv, pc);
    }
    return res;
}

inline nlohmann::ordered_json robustness_to_json(const RobustnessResult& r) {
    nlohmann::ordered_json j;
    j["family"] = perturb_kind_name(r.family);
    j["grid"] = nlohmann::ordered_json::array();
    for (const RobustnessRow& row : r.rows) {
        nlohmann::ordered_json rj;
        rj["value"] = row.value;
        rj["vanilla_f1"] = row.vanilla_f1;
        j["grid"].push_back(std::move(rj));
    }
    j["worst_value"] = r.worst_value;
    j["vanilla"] = report_to_json(r.vanilla_report);
    j["causal"] = report_to_json(r.causal_report);
    j["flips"] = r.flips;
    j["mwu_p"] = r.mwu_p;
    j["cohens_d"] = r.effect.d;
    j["effect_magnitude"] = r.effect.magnitude;
    return j;
}

/// Out-of-distribution evaluation: optionally drops one project from the
/// corpus, then evaluates. An empty remainder is an error.
inline EvalReport run_generalization(const Model& mod, const Corpus& other,
                                     const std::string& exclude,
                                     const InferencePool* pool, size_t k,
                                     uint64_t seed) {
    Corpus kept = exclude.empty() ? other : exclude_project(other, exclude);
    if (kept.samples.empty())
        throw Error("run_generalization: no samples left after excluding '" +
                    exclude + "'");
    return evaluate_model(mod, kept, pool, k, seed);
}

struct SensitivityResult {
    size_t total = 0;         // samples with both variances defined
    size_t causal_lower = 0;  // causal variance strictly below vanilla
    size_t skipped = 0;
};

namespace detail {

inline double variance_of(const std::vector<double>& v) {
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size());
}

}  // namespace detail

/// For each test sample, rewrites its variable names `rewrites` times with
/// the var perturbation and measures the variance of each model's P(y=1)
/// across the rewrites. Counts how often the causal model's variance is
/// strictly lower. Rewrites alternate between the two spurious name pools:
/// a model keyed on names swings across the rewrites while one that ignores
/// them stays put, which a one-directional rename cannot distinguish once
/// the predictions saturate.
inline SensitivityResult run_sensitivity(const Model& vanilla,
                                         const Model& causal,
                                         const SpuriousLexicon& lex,
                                         const Corpus& test,
                                         const InferencePool& pool, size_t k,
                                         size_t rewrites, size_t topk,
                                         uint64_t seed) {
    SensitivityResult res;
    std::map<int64_t, std::vector<double>> m_cache;
    for (const FunctionSample& s : test.samples) {
        std::vector<double> pv, pc;
        try {
            for (size_t i = 0; i < rewrites; ++i) {
                Rng rng(mix_seed(mix_seed(mix_seed(seed, detail::kTagSens), i),
                                 static_cast<uint64_t>(s.id)));
                FunctionSample probe = s;
                probe.label = static_cast<int>(i % 2);
                PerturbResult pr = perturb_var(probe, lex, topk, rng);
                pr.sample.label = s.label;
                Rng eval_rng(mix_seed(
                    mix_seed(mix_seed(seed, detail::kTagSens + 1), i),
                    static_cast<uint64_t>(s.id)));
                pv.push_back(
                    infer_sample(vanilla, pr.sample, nullptr, 1, eval_rng)
                        .p_vul);
                pc.push_back(infer_sample(causal, pr.sample, &pool, k,
                                          eval_rng, false, &m_cache)
                                 .p_vul);
            }
        } catch (const Error&) {
            ++res.skipped;
            continue;
        }
        ++res.total;
        if (detail::variance_of(pc) < detail::variance_of(pv))
            ++res.causal_lower;
    }
    return res;
}

}  // namespace spurlex
