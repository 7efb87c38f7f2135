#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "spurlex/corpus.hpp"
#include "spurlex/error.hpp"
#include "spurlex/lexer.hpp"
#include "spurlex/lexicon.hpp"
#include "spurlex/nn.hpp"
#include "spurlex/rng.hpp"
#include "spurlex/select.hpp"
#include "spurlex/stats.hpp"

namespace spurlex {

enum class ModelMode { Vanilla, Causal };

inline const char* model_mode_name(ModelMode m) {
    return m == ModelMode::Vanilla ? "vanilla" : "causal";
}

inline ModelMode model_mode_from_name(std::string_view s) {
    if (s == "vanilla") return ModelMode::Vanilla;
    if (s == "causal") return ModelMode::Causal;
    throw Error("unknown model mode '" + std::string(s) + "'");
}

struct ModelConfig {
    ModelMode mode = ModelMode::Vanilla;
    SelectProcedure select = SelectProcedure::Var1;
    size_t select_k = 0;  // 0 = per-procedure default
    size_t epochs = 10;
    size_t batch = 32;
    double lr = 1e-3;
    uint64_t seed = 0;
    size_t k = 40;  // marginalization draws at inference
    size_t v_r = 1 << 16;
    size_t d_r = 64;
    size_t v_m = 1 << 14;
    size_t d_m = 32;
    size_t m_depth = 2;
    size_t d_h = 32;
    bool import_mode = false;
};

/// The desk-scale model. The main encoder embeds every token of the sample
/// (hashed into v_r buckets) and mean-pools; the auxiliary encoder embeds
/// only identifier tokens of x' and runs them through m_depth tanh layers,
/// which keeps that branch lexically biased by construction. The head is two
/// affine layers with one tanh between. Vanilla mode drops the auxiliary
/// branch. Import mode replaces the token encoder with fixed per-sample
/// vectors keyed by id.
struct Model {
    ModelConfig cfg;
    Mat encoder_r;  // v_r × d_r, unused in import mode
    Mat encoder_m;  // v_m × d_m, causal only
    std::vector<LinearLayer> m_layers;
    LinearLayer head1;  // (d_r [+ d_m]) × d_h
    LinearLayer head2;  // d_h × 2
    std::map<int64_t, std::vector<double>> imported;
};

inline uint32_t hash_bucket(std::string_view text, size_t v) {
    return static_cast<uint32_t>(fnv1a64(text) % v);
}

/// Bucket sequence over every token of the source.
inline std::vector<uint32_t> r_token_rows(std::string_view source, size_t v) {
    std::vector<uint32_t> rows;
    for (const Token& t : tokenize(source))
        rows.push_back(hash_bucket(t.text, v));
    return rows;
}

/// Bucket sequence over identifier tokens only.
inline std::vector<uint32_t> m_token_rows(std::string_view source, size_t v) {
    std::vector<uint32_t> rows;
    for (const Token& t : tokenize(source))
        if (t.kind == TokenKind::Identifier)
            rows.push_back(hash_bucket(t.text, v));
    return rows;
}

/// Mean of the table rows; empty input gives the zero vector.
inline std::vector<double> mean_rows(const Mat& table,
                                     const std::vector<uint32_t>& rows,
                                     size_t dim) {
    std::vector<double> out(dim, 0.0);
    if (rows.empty()) return out;
    for (uint32_t r : rows) {
        const double* row = &table.a[static_cast<size_t>(r) * table.cols];
        for (size_t j = 0; j < dim; ++j) out[j] += row[j];
    }
    const double inv = 1.0 / static_cast<double>(rows.size());
    for (double& x : out) x *= inv;
    return out;
}

inline Model init_model(
    const ModelConfig& cfg,
    const std::map<int64_t, std::vector<double>>* imported = nullptr) {
    ModelConfig c = cfg;
    if (c.import_mode) {
        if (!imported || imported->empty())
            throw Error("init_model: import mode needs representations");
        c.d_r = imported->begin()->second.size();
    }

    Model m;
    Rng rng(mix_seed(c.seed, 0x6d6f64656cull));
    if (!c.import_mode) m.encoder_r = make_embedding(c.v_r, c.d_r, rng);
    if (c.mode == ModelMode::Causal) {
        m.encoder_m = make_embedding(c.v_m, c.d_m, rng);
        for (size_t i = 0; i < c.m_depth; ++i)
            m.m_layers.push_back(make_linear(c.d_m, c.d_m, rng));
    }
    const size_t d_in =
        c.d_r + (c.mode == ModelMode::Causal ? c.d_m : 0);
    m.head1 = make_linear(d_in, c.d_h, rng);
    m.head2 = make_linear(c.d_h, 2, rng);
    if (c.import_mode) m.imported = *imported;
    m.cfg = c;
    return m;
}

inline const std::vector<double>& imported_rep(const Model& m, int64_t id) {
    auto it = m.imported.find(id);
    if (it == m.imported.end())
        throw Error("no imported representation for sample " +
                    std::to_string(id));
    return it->second;
}

/// Auxiliary branch: identifier-embedding mean through the tanh stack.
inline std::vector<double> m_forward(const Model& mod,
                                     const std::vector<uint32_t>& m_rows) {
    std::vector<double> h = mean_rows(mod.encoder_m, m_rows, mod.cfg.d_m);
    for (const LinearLayer& l : mod.m_layers)
        h = tanh_vec(linear_forward(l, h));
    return h;
}

/// Head probability of class 1 given the two branch outputs.
inline double joint_p1(const Model& mod, const std::vector<double>& r,
                       const std::vector<double>& m_out) {
    std::vector<double> z = r;
    if (mod.cfg.mode == ModelMode::Causal)
        z.insert(z.end(), m_out.begin(), m_out.end());
    std::vector<double> a1 = tanh_vec(linear_forward(mod.head1, z));
    return softmax(linear_forward(mod.head2, a1))[1];
}

/// All intermediate activations of one forward pass, kept for backprop.
struct Trace {
    std::vector<uint32_t> r_rows, m_rows;
    bool imported_r = false;
    std::vector<double> r;
    std::vector<double> m0;
    std::vector<std::vector<double>> m_h;
    std::vector<double> z, a1, p;
    int label = 0;
    double loss = 0.0;
};

inline Trace forward_trace(const Model& mod, std::vector<uint32_t> r_rows,
                           const std::vector<double>* imported_r,
                           std::vector<uint32_t> m_rows, int label) {
    Trace tr;
    tr.label = label;
    tr.m_rows = std::move(m_rows);
    if (imported_r) {
        tr.imported_r = true;
        tr.r = *imported_r;
    } else {
        tr.r_rows = std::move(r_rows);
        tr.r = mean_rows(mod.encoder_r, tr.r_rows, mod.cfg.d_r);
    }

    tr.z = tr.r;
    if (mod.cfg.mode == ModelMode::Causal) {
        tr.m0 = mean_rows(mod.encoder_m, tr.m_rows, mod.cfg.d_m);
        std::vector<double> h = tr.m0;
        for (const LinearLayer& l : mod.m_layers) {
            h = tanh_vec(linear_forward(l, h));
            tr.m_h.push_back(h);
        }
        tr.z.insert(tr.z.end(), h.begin(), h.end());
    }
    tr.a1 = tanh_vec(linear_forward(mod.head1, tr.z));
    tr.p = softmax(linear_forward(mod.head2, tr.a1));
    tr.loss = -std::log(std::max(tr.p[label], 1e-12));
    return tr;
}

/// Forward pass over raw samples; xp may be null in vanilla mode.
inline Trace forward_sample(const Model& mod, const FunctionSample& x,
                            const FunctionSample* xp) {
    const std::vector<double>* imp = nullptr;
    std::vector<uint32_t> r_rows;
    if (mod.cfg.import_mode) imp = &imported_rep(mod, x.id);
    else r_rows = r_token_rows(x.source, mod.cfg.v_r);

    std::vector<uint32_t> m_rows;
    if (mod.cfg.mode == ModelMode::Causal) {
        if (!xp) throw Error("forward_sample: causal mode needs x'");
        m_rows = m_token_rows(xp->source, mod.cfg.v_m);
    }
    return forward_trace(mod, std::move(r_rows), imp, std::move(m_rows),
                         x.label);
}

/// Gradient accumulator shaped like the model.
struct Grads {
    std::map<uint32_t, std::vector<double>> er, em;
    std::vector<Mat> mw;
    std::vector<std::vector<double>> mb;
    Mat h1w;
    std::vector<double> h1b;
    Mat h2w;
    std::vector<double> h2b;
    size_t count = 0;

    void init(const Model& m) {
        er.clear();
        em.clear();
        mw.clear();
        mb.clear();
        for (const LinearLayer& l : m.m_layers) {
            mw.emplace_back(l.w.rows, l.w.cols);
            mb.emplace_back(l.b.size(), 0.0);
        }
        h1w = Mat(m.head1.w.rows, m.head1.w.cols);
        h1b.assign(m.head1.b.size(), 0.0);
        h2w = Mat(m.head2.w.rows, m.head2.w.cols);
        h2b.assign(m.head2.b.size(), 0.0);
        count = 0;
    }
};

inline void backward_accum(const Model& mod, const Trace& tr, Grads& g) {
    const size_t d_r = mod.cfg.d_r;
    const size_t d_h = mod.cfg.d_h;

    std::vector<double> dlog = tr.p;
    dlog[tr.label] -= 1.0;

    std::vector<double> da1(d_h, 0.0);
    for (size_t i = 0; i < d_h; ++i) {
        for (size_t j = 0; j < 2; ++j) {
            g.h2w.at(i, j) += tr.a1[i] * dlog[j];
            da1[i] += mod.head2.w.at(i, j) * dlog[j];
        }
    }
    for (size_t j = 0; j < 2; ++j) g.h2b[j] += dlog[j];

    std::vector<double> dpre1(d_h);
    for (size_t i = 0; i < d_h; ++i)
        dpre1[i] = da1[i] * (1.0 - tr.a1[i] * tr.a1[i]);

    const size_t d_in = mod.head1.w.rows;
    std::vector<double> dz(d_in, 0.0);
    for (size_t i = 0; i < d_in; ++i) {
        const double zi = tr.z[i];
        for (size_t j = 0; j < d_h; ++j) {
            g.h1w.at(i, j) += zi * dpre1[j];
            dz[i] += mod.head1.w.at(i, j) * dpre1[j];
        }
    }
    for (size_t j = 0; j < d_h; ++j) g.h1b[j] += dpre1[j];

    if (!tr.imported_r && !tr.r_rows.empty()) {
        const double inv = 1.0 / static_cast<double>(tr.r_rows.size());
        for (uint32_t row : tr.r_rows) {
            auto& acc = g.er[row];
            if (acc.empty()) acc.assign(d_r, 0.0);
            for (size_t j = 0; j < d_r; ++j) acc[j] += dz[j] * inv;
        }
    }

    if (mod.cfg.mode == ModelMode::Causal) {
        const size_t d_m = mod.cfg.d_m;
        std::vector<double> dm(dz.begin() + static_cast<long>(d_r), dz.end());
        for (size_t li = mod.m_layers.size(); li-- > 0;) {
            const std::vector<double>& h_out = tr.m_h[li];
            const std::vector<double>& h_in = (li == 0) ? tr.m0
                                                        : tr.m_h[li - 1];
            std::vector<double> dpre(d_m);
            for (size_t j = 0; j < d_m; ++j)
                dpre[j] = dm[j] * (1.0 - h_out[j] * h_out[j]);
            std::vector<double> dnext(d_m, 0.0);
            for (size_t i = 0; i < d_m; ++i) {
                for (size_t j = 0; j < d_m; ++j) {
                    g.mw[li].at(i, j) += h_in[i] * dpre[j];
                    dnext[i] += mod.m_layers[li].w.at(i, j) * dpre[j];
                }
            }
            for (size_t j = 0; j < d_m; ++j) g.mb[li][j] += dpre[j];
            dm = std::move(dnext);
        }
        if (!tr.m_rows.empty()) {
            const double inv = 1.0 / static_cast<double>(tr.m_rows.size());
            for (uint32_t row : tr.m_rows) {
                auto& acc = g.em[row];
                if (acc.empty()) acc.assign(d_m, 0.0);
                for (size_t j = 0; j < d_m; ++j) acc[j] += dm[j] * inv;
            }
        }
    }
    ++g.count;
}

/// Optimizer state for one model.
struct OptState {
    AdamOpt opt;
    AdamOpt::Moments er, em, h1w, h1b, h2w, h2b;
    std::vector<AdamOpt::Moments> mw, mb;

    explicit OptState(const Model& m, double lr) : opt(lr) {
        mw.resize(m.m_layers.size());
        mb.resize(m.m_layers.size());
    }
};

inline void apply_grads(Model& mod, const Grads& g, OptState& st) {
    if (g.count == 0) return;
    const double scale = 1.0 / static_cast<double>(g.count);
    st.opt.begin_step();
    if (!mod.cfg.import_mode)
        st.opt.update_rows(mod.encoder_r, g.er, scale, st.er);
    if (mod.cfg.mode == ModelMode::Causal) {
        st.opt.update_rows(mod.encoder_m, g.em, scale, st.em);
        for (size_t li = 0; li < mod.m_layers.size(); ++li) {
            st.opt.update(mod.m_layers[li].w.a, g.mw[li].a, scale, st.mw[li]);
            st.opt.update(mod.m_layers[li].b, g.mb[li], scale, st.mb[li]);
        }
    }
    st.opt.update(mod.head1.w.a, g.h1w.a, scale, st.h1w);
    st.opt.update(mod.head1.b, g.h1b, scale, st.h1b);
    st.opt.update(mod.head2.w.a, g.h2w.a, scale, st.h2w);
    st.opt.update(mod.head2.b, g.h2b, scale, st.h2b);
}

/// Samples a model can draw x' from at inference time: every training
/// sample whose source tokenizes, with cached identifier buckets.
struct InferencePool {
    std::vector<int64_t> ids;
    std::vector<std::vector<uint32_t>> m_rows;

    bool empty() const { return ids.empty(); }
};

inline InferencePool build_inference_pool(const Corpus& train, size_t v_m) {
    InferencePool pool;
    for (const FunctionSample& s : train.samples) {
        try {
            pool.m_rows.push_back(m_token_rows(s.source, v_m));
        } catch (const Error&) {
            continue;
        }
        pool.ids.push_back(s.id);
    }
    return pool;
}

struct Inference {
    double p_vul = 0.0;
    int label = 0;
    std::vector<double> draws;       // per-draw P(y=1)
    std::vector<int64_t> draw_ids;   // x' ids, empty when x' = x
};

/// Backdoor-adjusted prediction: average P(y=1 | r(x), M(x')) over k
/// uniform draws of x' from the pool, each draw weighted equally. With
/// xprime_self the sample itself is the only x' (the K=1 ablation shape).
/// Vanilla models ignore the pool and k.
inline Inference infer_sample(
    const Model& mod, const FunctionSample& x, const InferencePool* pool,
    size_t k, Rng& rng, bool xprime_self = false,
    std::map<int64_t, std::vector<double>>* m_cache = nullptr) {
    Inference inf;

    std::vector<double> r;
    if (mod.cfg.import_mode) r = imported_rep(mod, x.id);
    else r = mean_rows(mod.encoder_r, r_token_rows(x.source, mod.cfg.v_r),
                       mod.cfg.d_r);

    if (mod.cfg.mode == ModelMode::Vanilla) {
        inf.draws.push_back(joint_p1(mod, r, {}));
    } else {
        if (k == 0) throw Error("infer_sample: k must be at least 1");
        if (xprime_self) {
            const double p =
                joint_p1(mod, r, m_forward(mod, m_token_rows(x.source,
                                                             mod.cfg.v_m)));
            inf.draws.assign(k, p);
        } else {
            if (!pool || pool->empty())
                throw Error("infer_sample: empty inference pool");
            for (size_t i = 0; i < k; ++i) {
                const size_t j = rng.uniform_index(pool->ids.size());
                const int64_t id = pool->ids[j];
                std::vector<double> m_out;
                if (m_cache) {
                    auto it = m_cache->find(id);
                    if (it != m_cache->end()) m_out = it->second;
                }
                if (m_out.empty()) {
                    m_out = m_forward(mod, pool->m_rows[j]);
                    if (m_cache) (*m_cache)[id] = m_out;
                }
                inf.draws.push_back(joint_p1(mod, r, m_out));
                inf.draw_ids.push_back(id);
            }
        }
    }

    double sum = 0.0;
    for (double p : inf.draws) sum += p;
    inf.p_vul = sum / static_cast<double>(inf.draws.size());
    inf.label = inf.p_vul >= 0.5 ? 1 : 0;
    return inf;
}

struct EpochLog {
    size_t epoch = 0;
    double train_loss = 0.0;
    double valid_f1 = 0.0;
    size_t selection_failures = 0;
};

struct TrainResult {
    Model model;
    std::vector<EpochLog> log;
    double initial_loss = 0.0;
    double best_f1 = -1.0;
    size_t best_epoch = 0;
    size_t unusable_train = 0;
    size_t unusable_valid = 0;
};

namespace detail {

constexpr uint64_t kTagModel = 0x6d6f64656cull;
constexpr uint64_t kTagShuffle = 0x73687566ull;
constexpr uint64_t kTagSelect = 0x73656c65ull;
constexpr uint64_t kTagValid = 0x76616c69ull;

struct TrainItem {
    const FunctionSample* sample = nullptr;
    std::vector<uint32_t> r_rows;
    std::vector<uint32_t> m_rows_self;
};

}  // namespace detail

/// Trains per config: minibatch Adam on cross-entropy, x' re-selected per
/// epoch in causal mode, the checkpoint with the best validation F1 kept
/// (first best on ties). Samples whose source cannot be processed are
/// dropped up front and counted.
inline TrainResult train_model(
    const ModelConfig& cfg, const Corpus& train, const Corpus& valid,
    const SpuriousLexicon* lex,
    const std::map<int64_t, std::vector<double>>* imported = nullptr) {
    if (cfg.import_mode && !imported)
        throw Error("train_model: import mode needs representations");
    if (cfg.mode == ModelMode::Causal && !lex)
        throw Error("train_model: causal mode needs a lexicon");

    TrainResult res;
    res.model = init_model(cfg, imported);
    Model& mod = res.model;
    const ModelConfig& c = mod.cfg;

    SelectionIndex sidx;
    if (c.mode == ModelMode::Causal)
        sidx = build_selection_index(train, *lex);

    // Cache token buckets; drop samples that cannot be processed.
    std::vector<detail::TrainItem> items;
    for (const FunctionSample& s : train.samples) {
        detail::TrainItem it;
        it.sample = &s;
        try {
            if (c.import_mode) (void)imported_rep(mod, s.id);
            else it.r_rows = r_token_rows(s.source, c.v_r);
            if (c.mode == ModelMode::Causal) {
                if (!sidx.feats.count(s.id)) throw Error("not analyzable");
                it.m_rows_self = m_token_rows(s.source, c.v_m);
            }
        } catch (const Error&) {
            ++res.unusable_train;
            continue;
        }
        items.push_back(std::move(it));
    }
    if (items.empty()) throw Error("train_model: no usable training samples");

    std::vector<const FunctionSample*> valid_usable;
    std::vector<std::vector<uint32_t>> valid_rows;
    for (const FunctionSample& s : valid.samples) {
        try {
            if (c.import_mode) (void)imported_rep(mod, s.id);
            std::vector<uint32_t> rows;
            if (!c.import_mode) rows = r_token_rows(s.source, c.v_r);
            valid_rows.push_back(std::move(rows));
        } catch (const Error&) {
            ++res.unusable_valid;
            continue;
        }
        valid_usable.push_back(&s);
    }

    InferencePool pool;
    if (c.mode == ModelMode::Causal)
        pool = build_inference_pool(train, c.v_m);

    std::map<int64_t, size_t> item_by_id;
    for (size_t i = 0; i < items.size(); ++i)
        item_by_id[items[i].sample->id] = i;

    // x' for one sample in one epoch; epoch 0 is the pre-training pass.
    auto select_for = [&](const FunctionSample& x, size_t epoch,
                          Selected& out) {
        Rng rng(mix_seed(mix_seed(c.seed, detail::kTagSelect, epoch),
                         static_cast<uint64_t>(x.id)));
        out = select_xprime(c.select, x, sidx, rng, c.select_k);
        return true;
    };

    auto trace_for = [&](const detail::TrainItem& it, size_t epoch) {
        const FunctionSample& x = *it.sample;
        const std::vector<double>* imp =
            c.import_mode ? &imported_rep(mod, x.id) : nullptr;
        std::vector<uint32_t> m_rows;
        if (c.mode == ModelMode::Causal) {
            Selected sel;
            select_for(x, epoch, sel);
            if (sel.var_mapping.empty() && sel.inserted_blocks.empty()) {
                auto ii = item_by_id.find(sel.source_id);
                m_rows = (ii != item_by_id.end())
                             ? items[ii->second].m_rows_self
                             : m_token_rows(sel.sample.source, c.v_m);
            } else {
                m_rows = m_token_rows(sel.sample.source, c.v_m);
            }
        }
        return forward_trace(mod, it.r_rows, imp, std::move(m_rows), x.label);
    };

    // Pre-training loss over the usable training set.
    {
        double sum = 0.0;
        size_t cnt = 0;
        for (const auto& it : items) {
            try {
                sum += trace_for(it, 0).loss;
                ++cnt;
            } catch (const Error&) {
            }
        }
        res.initial_loss = cnt ? sum / static_cast<double>(cnt) : 0.0;
    }

    OptState opt(mod, c.lr);
    Model best;
    bool have_best = false;

    for (size_t epoch = 1; epoch <= c.epochs; ++epoch) {
        std::vector<size_t> order(items.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng shuffle_rng(mix_seed(c.seed, detail::kTagShuffle, epoch));
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.uniform_index(i)]);

        double loss_sum = 0.0;
        size_t loss_cnt = 0;
        size_t failures = 0;

        Grads g;
        for (size_t pos = 0; pos < order.size();) {
            g.init(mod);
            const size_t end = std::min(pos + c.batch, order.size());
            for (; pos < end; ++pos) {
                const detail::TrainItem& it = items[order[pos]];
                try {
                    Trace tr = trace_for(it, epoch);
                    loss_sum += tr.loss;
                    ++loss_cnt;
                    backward_accum(mod, tr, g);
                } catch (const Error&) {
                    ++failures;
                }
            }
            apply_grads(mod, g, opt);
        }

        EpochLog log;
        log.epoch = epoch;
        log.train_loss = loss_cnt ? loss_sum / static_cast<double>(loss_cnt)
                                  : 0.0;
        log.selection_failures = failures;

        if (!valid_usable.empty()) {
            std::map<int64_t, std::vector<double>> m_cache;
            std::vector<int> preds, labels;
            for (size_t i = 0; i < valid_usable.size(); ++i) {
                const FunctionSample& s = *valid_usable[i];
                Rng rng(mix_seed(mix_seed(c.seed, detail::kTagValid, epoch),
                                 static_cast<uint64_t>(s.id)));
                std::vector<double> r;
                if (c.import_mode) r = imported_rep(mod, s.id);
                else r = mean_rows(mod.encoder_r, valid_rows[i], c.d_r);

                double p;
                if (c.mode == ModelMode::Vanilla) {
                    p = joint_p1(mod, r, {});
                } else {
                    if (pool.empty())
                        throw Error("train_model: empty inference pool");
                    double sum = 0.0;
                    for (size_t d = 0; d < c.k; ++d) {
                        const size_t j = rng.uniform_index(pool.ids.size());
                        const int64_t id = pool.ids[j];
                        auto mit = m_cache.find(id);
                        if (mit == m_cache.end())
                            mit = m_cache
                                      .emplace(id,
                                               m_forward(mod, pool.m_rows[j]))
                                      .first;
                        sum += joint_p1(mod, r, mit->second);
                    }
                    p = sum / static_cast<double>(c.k);
                }
                preds.push_back(p >= 0.5 ? 1 : 0);
                labels.push_back(s.label);
            }
            log.valid_f1 = f1_score(preds, labels).f1;
            if (log.valid_f1 > res.best_f1) {
                res.best_f1 = log.valid_f1;
                res.best_epoch = epoch;
                best = mod;
                have_best = true;
            }
        }

        res.log.push_back(log);
    }

    if (have_best) res.model = std::move(best);
    else res.best_epoch = c.epochs;
    return res;
}

inline nlohmann::ordered_json mat_to_json(const Mat& m) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (size_t i = 0; i < m.rows; ++i) {
        nlohmann::ordered_json row = nlohmann::ordered_json::array();
        for (size_t j = 0; j < m.cols; ++j) row.push_back(m.at(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Mat mat_from_json(const nlohmann::json& j, size_t rows, size_t cols) {
    if (!j.is_array() || j.size() != rows)
        throw Error("checkpoint: matrix row count mismatch");
    Mat m(rows, cols);
    for (size_t i = 0; i < rows; ++i) {
        const auto& row = j[i];
        if (!row.is_array() || row.size() != cols)
            throw Error("checkpoint: matrix column count mismatch");
        for (size_t jj = 0; jj < cols; ++jj)
            m.at(i, jj) = row[jj].get<double>();
    }
    return m;
}

inline nlohmann::ordered_json model_to_json(const Model& m) {
    const ModelConfig& c = m.cfg;
    nlohmann::ordered_json j;
    j["version"] = 1;
    j["config"] = {
        {"mode", model_mode_name(c.mode)},
        {"select", select_procedure_name(c.select)},
        {"select_k", c.select_k},
        {"epochs", c.epochs},
        {"batch", c.batch},
        {"lr", c.lr},
        {"seed", c.seed},
        {"k", c.k},
        {"v_r", c.v_r},
        {"d_r", c.d_r},
        {"v_m", c.v_m},
        {"d_m", c.d_m},
        {"m_depth", c.m_depth},
        {"d_h", c.d_h},
        {"import_mode", c.import_mode},
    };
    j["encoder_r"] =
        c.import_mode ? nlohmann::ordered_json() : mat_to_json(m.encoder_r);
    if (c.mode == ModelMode::Causal) {
        nlohmann::ordered_json em;
        em["embedding"] = mat_to_json(m.encoder_m);
        em["layers"] = nlohmann::ordered_json::array();
        for (const LinearLayer& l : m.m_layers) {
            nlohmann::ordered_json lj;
            lj["w"] = mat_to_json(l.w);
            lj["b"] = l.b;
            em["layers"].push_back(std::move(lj));
        }
        j["encoder_m"] = std::move(em);
    } else {
        j["encoder_m"] = nlohmann::ordered_json();
    }
    nlohmann::ordered_json head;
    head["w1"] = mat_to_json(m.head1.w);
    head["b1"] = m.head1.b;
    head["w2"] = mat_to_json(m.head2.w);
    head["b2"] = m.head2.b;
    j["head"] = std::move(head);
    if (c.import_mode) {
        nlohmann::ordered_json reps = nlohmann::ordered_json::object();
        for (const auto& [id, vec] : m.imported)
            reps[std::to_string(id)] = vec;
        j["imported_reps"] = std::move(reps);
    }
    return j;
}

inline void save_model(const Model& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << model_to_json(m).dump() << '\n';
    if (!out) throw Error("write failed for '" + path + "'");
}

inline Model model_from_json(const nlohmann::json& j) {
    if (!j.contains("version") || j["version"].get<int>() != 1)
        throw Error("checkpoint: unsupported version");
    const auto& cj = j.at("config");
    ModelConfig c;
    c.mode = model_mode_from_name(cj.at("mode").get<std::string>());
    c.select = select_procedure_from_name(cj.at("select").get<std::string>());
    c.select_k = cj.at("select_k").get<size_t>();
    c.epochs = cj.at("epochs").get<size_t>();
    c.batch = cj.at("batch").get<size_t>();
    c.lr = cj.at("lr").get<double>();
    c.seed = cj.at("seed").get<uint64_t>();
    c.k = cj.at("k").get<size_t>();
    c.v_r = cj.at("v_r").get<size_t>();
    c.d_r = cj.at("d_r").get<size_t>();
    c.v_m = cj.at("v_m").get<size_t>();
    c.d_m = cj.at("d_m").get<size_t>();
    c.m_depth = cj.at("m_depth").get<size_t>();
    c.d_h = cj.at("d_h").get<size_t>();
    c.import_mode = cj.at("import_mode").get<bool>();

    Model m;
    m.cfg = c;
    if (!c.import_mode)
        m.encoder_r = mat_from_json(j.at("encoder_r"), c.v_r, c.d_r);
    if (c.mode == ModelMode::Causal) {
        const auto& em = j.at("encoder_m");
        m.encoder_m = mat_from_json(em.at("embedding"), c.v_m, c.d_m);
        const auto& layers = em.at("layers");
        if (layers.size() != c.m_depth)
            throw Error("checkpoint: layer count mismatch");
        for (size_t i = 0; i < c.m_depth; ++i) {
            LinearLayer l;
            l.w = mat_from_json(layers[i].at("w"), c.d_m, c.d_m);
            l.b = layers[i].at("b").get<std::vector<double>>();
            if (l.b.size() != c.d_m)
                throw Error("checkpoint: bias size mismatch");
            m.m_layers.push_back(std::move(l));
        }
    }
    const size_t d_in = c.d_r + (c.mode == ModelMode::Causal ? c.d_m : 0);
    const auto& head = j.at("head");
    m.head1.w = mat_from_json(head.at("w1"), d_in, c.d_h);
    m.head1.b = head.at("b1").get<std::vector<double>>();
    m.head2.w = mat_from_json(head.at("w2"), c.d_h, 2);
    m.head2.b = head.at("b2").get<std::vector<double>>();
    if (m.head1.b.size() != c.d_h || m.head2.b.size() != 2)
        throw Error("checkpoint: bias size mismatch");
    if (c.import_mode) {
        for (const auto& [key, vec] : j.at("imported_reps").items())
            m.imported[std::stoll(key)] = vec.get<std::vector<double>>();
    }
    return m;
}

inline Model load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception&) {
        throw Error("malformed checkpoint JSON in '" + path + "'");
    }
    return model_from_json(j);
}

/// Reads per-sample representation vectors from JSONL rows of the form
/// {"idx": <id>, "vec": [..]}. All vectors must share one length and be
/// finite; duplicate ids are an error.
inline std::map<int64_t, std::vector<double>> import_representations(
    const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");

    std::map<int64_t, std::vector<double>> reps;
    std::string line;
    size_t line_no = 0;
    size_t dim = 0;
    while (std::getline(in, line)) {
        if (line.empty()) {
            ++line_no;
            continue;
        }
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception&) {
            throw Error("line " + std::to_string(line_no) +
                        ": malformed JSON");
        }
        if (!obj.is_object() || !obj.contains("idx") || !obj.contains("vec"))
            throw Error("line " + std::to_string(line_no) +
                        ": expected keys 'idx' and 'vec'");
        if (!obj["idx"].is_number_integer())
            throw Error("line " + std::to_string(line_no) +
                        ": 'idx' must be an integer");
        if (!obj["vec"].is_array() || obj["vec"].empty())
            throw Error("line " + std::to_string(line_no) +
                        ": 'vec' must be a non-empty array");
        std::vector<double> vec;
        for (const auto& v : obj["vec"]) {
            if (!v.is_number())
                throw Error("line " + std::to_string(line_no) +
                            ": 'vec' must hold numbers");
            const double x = v.get<double>();
            if (!std::isfinite(x))
                throw Error("line " + std::to_string(line_no) +
                            ": 'vec' holds a non-finite value");
            vec.push_back(x);
        }
        if (dim == 0) dim = vec.size();
        else if (vec.size() != dim)
            throw Error("line " + std::to_string(line_no) +
                        ": vector length " + std::to_string(vec.size()) +
                        " does not match " + std::to_string(dim));
        const int64_t id = obj["idx"].get<int64_t>();
        if (!reps.emplace(id, std::move(vec)).second)
            throw Error("line " + std::to_string(line_no) + ": duplicate id " +
                        std::to_string(id));
        ++line_no;
    }
    return reps;
}

}  // namespace spurlex
