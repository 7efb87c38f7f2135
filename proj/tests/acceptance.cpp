// End-to-end acceptance gate. Each criterion prints one [PASS]/[FAIL] line;
// the exit code is the number of failed criteria.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <spurlex/harness.hpp>
#include <spurlex/learner.hpp>
#include <spurlex/lexicon.hpp>
#include <spurlex/perturb.hpp>
#include <spurlex/select.hpp>
#include <spurlex/stats.hpp>
#include <spurlex/synth.hpp>

#include "support/oracles.hpp"

using namespace spurlex;
using testsupport::compare_lexicons;
using testsupport::FnPlan;
using testsupport::gen_plan_corpus;
using testsupport::oracle_argmax;
using testsupport::oracle_lexicon;
using testsupport::OracleSelect;
using testsupport::verify_perturbation;

namespace {

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point from) {
    return std::chrono::duration<double>(Clock::now() - from).count();
}

// Twenty hand-written C functions, ten per label, with label-exclusive
// variable names and callees so both rename and injection pools exist.
struct HandSample {
    int label;
    const char* source;
};

const HandSample kHandWritten[] = {
    {1, R"c(int read_packet(char *dst, const char *src, int len) {
    char tmp[64];
    int i = 0;
    /* copy without any bounds check */
    while (i < len) { tmp[i] = src[i]; i++; }
    memcpy(dst, tmp, len);
    return i;
})c"},
    {1, R"c(char *dup_name(const char *name) {
    char *out = (char *)malloc(strlen(name));
    strcpy(out, name);
    return out;
})c"},
    {1, R"c(int parse_header(char *line) {
    char field[32];
    sscanf(line, "%s", field);
    int off = atoi(line);
    return off;
})c"},
    {1, R"c(void log_user(const char *user) {
    char msg[128];
    sprintf(msg, "login: %s", user);
    puts_raw(msg);
})c"},
    {1, R"c(int pop_frame(struct stack *st) {
    int top = st->depth - 1;
    int val = st->slots[top];
    st->depth = top;
    return val;
})c"},
    {1, R"c(void grow_vec(struct vec *v, int extra) {
    v->cap = v->cap + extra;
    v->data = realloc(v->data, v->cap);
})c"},
    {1, R"c(int recv_chunk(int fd, char *buf) {
    int got = net_read(fd, buf, 4096);
    buf[got] = 0;
    return got;
})c"},
    {1, R"c(int fetch_record(int fd, struct rec *r) {
    char raw[16];
    net_read(fd, raw, sizeof raw);
    memcpy(r, raw, sizeof *r);
    return r->kind;
})c"},
    {1, R"c(void drop_slot(char *p) {
    free_slot(p);
    if (!p) return;
    free_slot(p);
})c"},
    {1, R"c(unsigned hash_pw(const char *pw) {
    unsigned h = 5381;
    int c;
    while ((c = *pw++)) { h = mix_step(h, c); }
    return h;
})c"},
    {0, R"c(int format_report(char *report, int limit, int count) {
    return snprintf(report, limit, "count=%d", count);
})c"},
    {0, R"c(void copy_label(char *dest, const char *source, int cap) {
    if (cap <= 0) return;
    strncpy(dest, source, cap - 1);
    dest[cap - 1] = 0;
})c"},
    {0, R"c(long *make_table(int rows, int cols) {
    if (rows <= 0 || cols <= 0) return 0;
    long *table = calloc(rows, cols * sizeof(long));
    return table;
})c"},
    {0, R"c(void clear_grid(char *grid, int width, int height) {
    int area = width * height;
    if (area > 0) memset_zero(grid, area);
})c"},
    {0, R"c(int read_entry(const int *entries, int pos, int bound) {
    if (pos < 0 || pos >= bound) return -1;
    return entries[pos];
})c"},
    {0, R"c(void report_status(int status, int code) {
    if (status != 0) audit_log(status, code);
})c"},
    {0, R"c(int close_handle(int handle) {
    int rc = 0;
    if (handle >= 0) rc = close_file(handle);
    return rc;
})c"},
    {0, R"c(double mean_value(double total, int count) {
    if (count == 0) return 0.0;
    return safe_div(total, count);
})c"},
    {0, R"c(int check_opts(const struct options *opts, int flag) {
    if (!validate_input(opts)) return 0;
    return flag & 1;
})c"},
    {0, R"c(int sum_steps(int step, int ceiling) {
    int acc = 0;
    for (int idx = 0; idx < ceiling; idx++) { acc = clamp(acc + step, ceiling); }
    return acc;
})c"},
};

Corpus hand_corpus() {
    Corpus corpus;
    corpus.name = "hand";
    int64_t id = 0;
    for (const HandSample& h : kHandWritten) {
        FunctionSample s;
        s.id = id++;
        s.label = h.label;
        s.source = h.source;
        s.split = Split::Train;
        corpus.samples.push_back(std::move(s));
    }
    return corpus;
}

std::string check_all_kinds(const Corpus& corpus, const SpuriousLexicon& lex,
                            uint64_t seed, size_t* checked) {
    for (const FunctionSample& s : corpus.samples) {
        const uint64_t base = mix_seed(seed, static_cast<uint64_t>(s.id));
        Rng rv(mix_seed(base, 1));
        Rng ra(mix_seed(base, 2));
        Rng rj(mix_seed(base, 3));
        const PerturbResult results[] = {
            perturb_var(s, lex, 25, rv),
            perturb_api(s, lex, 5, 3, ra),
            perturb_joint(s, lex, 10, 3, 2, rj),
        };
        for (const PerturbResult& res : results) {
            std::string err = verify_perturbation(s, res, lex);
            if (!err.empty())
                return "sample " + std::to_string(s.id) + " (" +
                       corpus.name + ", " +
                       perturb_kind_name(res.record.kind) + "): " + err;
            ++*checked;
        }
    }
    return "";
}

bool crit1_soundness(std::string& detail) {
    const auto t0 = Clock::now();
    Rng gen(101);
    auto [corpus, plans] = gen_plan_corpus(200, gen);
    (void)plans;
    SpuriousLexicon lex = build_lexicon(corpus);
    size_t checked = 0;
    std::string err = check_all_kinds(corpus, lex, 1000, &checked);
    if (err.empty()) {
        Corpus hand = hand_corpus();
        SpuriousLexicon hand_lex = build_lexicon(hand);
        err = check_all_kinds(hand, hand_lex, 2000, &checked);
    }
    const double secs = elapsed(t0);
    if (!err.empty()) {
        detail = err;
        return false;
    }
    detail = std::to_string(checked) + " perturbations verified";
    if (secs >= 10.0) {
        detail += "; over the 10s budget";
        return false;
    }
    return true;
}

bool crit2_lexicon(std::string& detail) {
    size_t corpora = 0;
    for (size_t i = 0; i < 100; ++i) {
        Rng gen(mix_seed(201, i));
        const size_t n = 1 + gen.uniform_index(50);
        auto [corpus, plans] = gen_plan_corpus(n, gen);
        const CountMode mode =
            i % 2 == 0 ? CountMode::Occurrences : CountMode::Documents;
        std::string err = compare_lexicons(oracle_lexicon(plans, mode),
                                           build_lexicon(corpus, mode));
        if (!err.empty()) {
            detail = "corpus " + std::to_string(i) + " (n=" +
                     std::to_string(n) + "): " + err;
            return false;
        }
        ++corpora;
    }
    detail = std::to_string(corpora) + " corpora matched in both count modes";
    return true;
}

bool crit3_selection(std::string& detail) {
    size_t compared = 0;
    for (size_t i = 0; i < 100; ++i) {
        Rng gen(mix_seed(301, i));
        const size_t n = 2 + gen.uniform_index(99);
        auto [corpus, plans] = gen_plan_corpus(n, gen);
        SpuriousLexicon lex = build_lexicon(corpus);
        SelectionIndex idx = build_selection_index(corpus, lex);
        auto olex = oracle_lexicon(plans, CountMode::Occurrences);

        size_t per_label[2] = {0, 0};
        for (const FnPlan& p : plans) ++per_label[p.label];

        Rng sel_rng(mix_seed(311, i));
        for (size_t xi = 0; xi < plans.size(); ++xi) {
            const FunctionSample& x = corpus.samples[xi];
            if (per_label[x.label] < 2) continue;
            for (bool vars : {true, false}) {
                Selected sel = select_xprime(
                    vars ? SelectProcedure::Var1 : SelectProcedure::Api1, x,
                    idx, sel_rng);
                OracleSelect want = oracle_argmax(plans, olex, xi, vars);
                if (sel.fallback_random != want.fallback) {
                    detail = "corpus " + std::to_string(i) + " sample " +
                             std::to_string(x.id) + ": fallback flag " +
                             (sel.fallback_random ? "set" : "clear") +
                             ", oracle disagrees";
                    return false;
                }
                if (!want.fallback && sel.source_id != want.best) {
                    detail = "corpus " + std::to_string(i) + " sample " +
                             std::to_string(x.id) + ": picked " +
                             std::to_string(sel.source_id) + ", oracle " +
                             std::to_string(want.best);
                    return false;
                }
                ++compared;
            }
        }
    }

    Rng gen(303);
    auto [corpus, plans] = gen_plan_corpus(100, gen);
    SpuriousLexicon lex = build_lexicon(corpus);
    SelectionIndex idx = build_selection_index(corpus, lex);
    size_t per_label[2] = {0, 0};
    for (const FnPlan& p : plans) ++per_label[p.label];
    Rng sweep_rng(304);
    size_t swept = 0;
    for (const FunctionSample& x : corpus.samples) {
        if (per_label[x.label] < 2) continue;
        for (SelectProcedure proc :
             {SelectProcedure::Var1, SelectProcedure::Var2,
              SelectProcedure::Api1, SelectProcedure::Api2,
              SelectProcedure::Api3, SelectProcedure::VarApi}) {
            Selected sel = select_xprime(proc, x, idx, sweep_rng);
            if (sel.sample.label != x.label) {
                detail = std::string(select_procedure_name(proc)) +
                         " returned a cross-label sample for " +
                         std::to_string(x.id);
                return false;
            }
            if (sel.sample.id == x.id) {
                detail = std::string(select_procedure_name(proc)) +
                         " returned the anchor itself for " +
                         std::to_string(x.id);
                return false;
            }
            ++swept;
        }
    }
    detail = std::to_string(compared) + " argmax comparisons, " +
             std::to_string(swept) + " procedure sweeps";
    return true;
}

struct GradCheck {
    double max_rel = 0.0;
    size_t points = 0;
};

void check_gradients(Model& mod, const std::vector<uint32_t>& r_rows,
                     const std::vector<uint32_t>& m_rows, int label,
                     GradCheck* out) {
    auto loss = [&]() {
        return forward_trace(mod, r_rows, nullptr, m_rows, label).loss;
    };
    Trace tr = forward_trace(mod, r_rows, nullptr, m_rows, label);
    Grads g;
    g.init(mod);
    backward_accum(mod, tr, g);

    std::vector<std::pair<double*, double>> points;
    for (size_t i = 0; i < mod.head2.w.a.size(); ++i)
        points.push_back({&mod.head2.w.a[i], g.h2w.a[i]});
    for (size_t i = 0; i < mod.head2.b.size(); ++i)
        points.push_back({&mod.head2.b[i], g.h2b[i]});
    for (size_t i = 0; i < mod.head1.w.a.size(); ++i)
        points.push_back({&mod.head1.w.a[i], g.h1w.a[i]});
    for (size_t i = 0; i < mod.head1.b.size(); ++i)
        points.push_back({&mod.head1.b[i], g.h1b[i]});
    for (size_t li = 0; li < mod.m_layers.size(); ++li) {
        for (size_t i = 0; i < mod.m_layers[li].w.a.size(); ++i)
            points.push_back({&mod.m_layers[li].w.a[i], g.mw[li].a[i]});
        for (size_t i = 0; i < mod.m_layers[li].b.size(); ++i)
            points.push_back({&mod.m_layers[li].b[i], g.mb[li][i]});
    }
    for (const auto& [row, vec] : g.er)
        for (size_t j = 0; j < vec.size(); ++j)
            points.push_back(
                {&mod.encoder_r.a[size_t(row) * mod.cfg.d_r + j], vec[j]});
    for (const auto& [row, vec] : g.em)
        for (size_t j = 0; j < vec.size(); ++j)
            points.push_back(
                {&mod.encoder_m.a[size_t(row) * mod.cfg.d_m + j], vec[j]});

    // Step sized so central-difference roundoff (eps*loss/2h) stays well
    // below the 1e-5 bound even for near-zero gradient components.
    for (const auto& [w, analytic] : points) {
        const double w0 = *w;
        const double h = 1e-4 * std::max(1.0, std::fabs(w0));
        *w = w0 + h;
        const double lp = loss();
        *w = w0 - h;
        const double lm = loss();
        *w = w0;
        const double numeric = (lp - lm) / (2.0 * h);
        const double denom =
            std::max(std::fabs(analytic) + std::fabs(numeric), 1e-8);
        out->max_rel =
            std::max(out->max_rel, std::fabs(analytic - numeric) / denom);
        ++out->points;
    }
}

bool crit4_gradients(std::string& detail) {
    const auto t0 = Clock::now();
    GradCheck check;
    for (size_t i = 0; i < 20; ++i) {
        Rng gen(mix_seed(401, i));
        ModelConfig cfg;
        cfg.mode = i % 2 == 0 ? ModelMode::Vanilla : ModelMode::Causal;
        cfg.seed = 500 + i;
        cfg.m_depth = 1 + gen.uniform_index(3);
        cfg.d_r = 3 + gen.uniform_index(4);
        cfg.d_m = 2 + gen.uniform_index(3);
        cfg.d_h = 3 + gen.uniform_index(4);
        cfg.v_r = 64 << gen.uniform_index(3);
        cfg.v_m = 32 << gen.uniform_index(3);
        Model mod = init_model(cfg);

        auto [corpus, plans] = gen_plan_corpus(4, gen);
        (void)plans;
        for (size_t si = 0; si < 3; ++si) {
            std::vector<uint32_t> r_rows =
                r_token_rows(corpus.samples[si].source, cfg.v_r);
            std::vector<uint32_t> m_rows;
            if (cfg.mode == ModelMode::Causal)
                m_rows =
                    m_token_rows(corpus.samples[si + 1].source, cfg.v_m);
            check_gradients(mod, r_rows, m_rows, int(si % 2), &check);
        }
    }
    const double secs = elapsed(t0);
    char buf[160];
    std::snprintf(buf, sizeof buf, "%zu parameters, max relative error %.3g",
                  check.points, check.max_rel);
    detail = buf;
    if (check.max_rel >= 1e-5) return false;
    if (secs >= 30.0) {
        detail += "; over the 30s budget";
        return false;
    }
    return true;
}

bool crit5_marginalization(std::string& detail) {
    double worst = 0.0;
    for (size_t i = 0; i < 10; ++i) {
        Rng gen(mix_seed(601, i));
        auto [corpus, plans] = gen_plan_corpus(10 + i, gen);
        (void)plans;
        ModelConfig cfg;
        cfg.mode = ModelMode::Causal;
        cfg.seed = 600 + i;
        cfg.v_r = 128;
        cfg.d_r = 5;
        cfg.v_m = 64;
        cfg.d_m = 4;
        cfg.m_depth = 1 + i % 3;
        cfg.d_h = 6;
        Model mod = init_model(cfg);
        InferencePool pool = build_inference_pool(corpus, cfg.v_m);

        const FunctionSample& x = corpus.samples[i % corpus.samples.size()];
        Rng rng(mix_seed(701, i));
        Inference inf = infer_sample(mod, x, &pool, 7, rng);
        if (inf.draws.size() != 7) {
            detail = "round " + std::to_string(i) + ": expected 7 draws";
            return false;
        }
        double sum = 0.0;
        for (double p : inf.draws) sum += p;
        worst = std::max(worst, std::fabs(inf.p_vul - sum / 7.0));

        Rng self_rng(mix_seed(702, i));
        Inference self = infer_sample(mod, x, nullptr, 1, self_rng, true);
        std::vector<double> r =
            mean_rows(mod.encoder_r, r_token_rows(x.source, cfg.v_r),
                      cfg.d_r);
        const double direct =
            joint_p1(mod, r, m_forward(mod, m_token_rows(x.source, cfg.v_m)));
        if (self.p_vul != direct) {
            detail = "round " + std::to_string(i) +
                     ": single self-draw differs from the direct forward";
            return false;
        }
    }
    char buf[96];
    std::snprintf(buf, sizeof buf,
                  "10 rounds, worst mean deviation %.3g (bound 1e-12)",
                  worst);
    detail = buf;
    return worst <= 1e-12;
}

constexpr uint64_t kBenchSeed = 1;
constexpr double kCleanMin = 0.85;
constexpr double kDropMin = 0.15;
constexpr double kGainMin = 0.05;
constexpr double kPMax = 0.05;

struct BenchRun {
    double van_clean = 0, van_pert = 0, caus_clean = 0, caus_pert = 0;
    double mwu = 1.0;
    int64_t flips = 0;
    double secs = 0;
    std::vector<std::string> artifacts;
};

BenchRun run_benchmark(uint64_t seed) {
    const auto t0 = Clock::now();
    SynthSpec spec;
    spec.n_train = 2000;
    spec.n_test = 500;
    spec.rho = 0.9;
    spec.seed = seed;
    SynthData data = gen_synthetic(spec);
    SpuriousLexicon lex = build_lexicon(data.train);

    ModelConfig vc;
    vc.mode = ModelMode::Vanilla;
    vc.seed = seed;
    TrainResult van = train_model(vc, data.train, data.valid, nullptr);

    ModelConfig cc;
    cc.mode = ModelMode::Causal;
    cc.select = SelectProcedure::Var1;
    cc.seed = seed;
    TrainResult caus = train_model(cc, data.train, data.valid, &lex);

    InferencePool pool = build_inference_pool(data.train, cc.v_m);
    EvalReport van_clean =
        evaluate_model(van.model, data.test, nullptr, 1, seed);
    EvalReport van_pert =
        evaluate_model(van.model, data.perturbed_test, nullptr, 1, seed);
    EvalReport caus_clean =
        evaluate_model(caus.model, data.test, &pool, cc.k, seed);
    EvalReport caus_pert =
        evaluate_model(caus.model, data.perturbed_test, &pool, cc.k, seed);

    BenchRun out;
    out.van_clean = van_clean.f1.f1;
    out.van_pert = van_pert.f1.f1;
    out.caus_clean = caus_clean.f1.f1;
    out.caus_pert = caus_pert.f1.f1;
    out.mwu = mann_whitney_p(vulnerable_probs(van_pert),
                             vulnerable_probs(caus_pert));
    out.flips = count_flips(van_pert, caus_pert);
    out.artifacts = {
        to_jsonl(data.train),
        to_jsonl(data.valid),
        to_jsonl(data.test),
        to_jsonl(data.perturbed_test),
        lexicon_to_json(lex).dump(),
        model_to_json(van.model).dump(),
        model_to_json(caus.model).dump(),
        report_to_json(van_clean).dump(),
        report_to_json(van_pert).dump(),
        report_to_json(caus_clean).dump(),
        report_to_json(caus_pert).dump(),
        histogram_to_csv(van_pert.histogram),
        histogram_to_csv(caus_pert.histogram),
    };
    out.secs = elapsed(t0);
    return out;
}

BenchRun g_bench;

bool crit6_benchmark(std::string& detail) {
    g_bench = run_benchmark(kBenchSeed);
    const BenchRun& b = g_bench;
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "vanilla %.3f -> %.3f, causal %.3f -> %.3f, p %.2e, "
                  "flips %lld",
                  b.van_clean, b.van_pert, b.caus_clean, b.caus_pert, b.mwu,
                  static_cast<long long>(b.flips));
    detail = buf;
    if (b.van_clean < kCleanMin) {
        detail += "; clean baseline under " + fmt_double(kCleanMin);
        return false;
    }
    if (b.van_clean - b.van_pert < kDropMin) {
        detail += "; rename shift drop under " + fmt_double(kDropMin);
        return false;
    }
    if (b.caus_pert - b.van_pert < kGainMin) {
        detail += "; marginalization gain under " + fmt_double(kGainMin);
        return false;
    }
    if (b.mwu >= kPMax) {
        detail += "; probability shift not significant";
        return false;
    }
    if (b.flips <= 0) {
        detail += "; no corrected predictions";
        return false;
    }
    if (b.secs >= 300.0) {
        detail += "; over the 5min budget";
        return false;
    }
    return true;
}

std::string perturb_surface(uint64_t seed) {
    Rng gen(101);
    auto [corpus, plans] = gen_plan_corpus(50, gen);
    (void)plans;
    SpuriousLexicon lex = build_lexicon(corpus);
    std::string out;
    for (const FunctionSample& s : corpus.samples) {
        const uint64_t base = mix_seed(seed, static_cast<uint64_t>(s.id));
        Rng rv(mix_seed(base, 1));
        Rng ra(mix_seed(base, 2));
        Rng rj(mix_seed(base, 3));
        out += sample_to_jsonl(perturb_var(s, lex, 25, rv).sample);
        out += sample_to_jsonl(perturb_api(s, lex, 5, 3, ra).sample);
        out += sample_to_jsonl(perturb_joint(s, lex, 10, 3, 2, rj).sample);
    }
    return out;
}

std::string selection_surface() {
    Rng gen(303);
    auto [corpus, plans] = gen_plan_corpus(60, gen);
    SpuriousLexicon lex = build_lexicon(corpus);
    SelectionIndex idx = build_selection_index(corpus, lex);
    size_t per_label[2] = {0, 0};
    for (const FnPlan& p : plans) ++per_label[p.label];
    Rng rng(304);
    std::string out;
    for (const FunctionSample& x : corpus.samples) {
        if (per_label[x.label] < 2) continue;
        for (SelectProcedure proc :
             {SelectProcedure::Var1, SelectProcedure::Var2,
              SelectProcedure::Api1, SelectProcedure::Api2,
              SelectProcedure::Api3, SelectProcedure::VarApi}) {
            Selected sel = select_xprime(proc, x, idx, rng);
            out += std::to_string(x.id) + ":" +
                   select_procedure_name(proc) + ":" +
                   std::to_string(sel.source_id) +
                   (sel.fallback_random ? ":f" : "") +
                   (sel.unmodified ? ":u" : "") + ";";
        }
    }
    return out;
}

bool crit7_determinism(std::string& detail) {
    if (perturb_surface(9000) != perturb_surface(9000)) {
        detail = "perturbation output changed between reruns";
        return false;
    }
    if (selection_surface() != selection_surface()) {
        detail = "selection output changed between reruns";
        return false;
    }
    BenchRun again = run_benchmark(kBenchSeed);
    if (again.artifacts.size() != g_bench.artifacts.size()) {
        detail = "artifact list size changed between reruns";
        return false;
    }
    static const char* kNames[] = {
        "train jsonl",          "valid jsonl",
        "test jsonl",           "perturbed test jsonl",
        "lexicon json",         "vanilla checkpoint",
        "causal checkpoint",    "vanilla clean report",
        "vanilla shift report", "causal clean report",
        "causal shift report",  "vanilla shift histogram",
        "causal shift histogram"};
    for (size_t i = 0; i < again.artifacts.size(); ++i) {
        if (again.artifacts[i] != g_bench.artifacts[i]) {
            detail = std::string(kNames[i]) + " differs between reruns";
            return false;
        }
    }
    detail = std::to_string(again.artifacts.size() + 2) +
             " output surfaces byte-identical";
    return true;
}

bool report(int number, const char* name,
            const std::function<bool(std::string&)>& fn, int* failures) {
    const auto t0 = Clock::now();
    std::string detail;
    bool pass = false;
    try {
        pass = fn(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    std::printf("[%s] criterion %d: %s%s%s (%.2fs)\n",
                pass ? "PASS" : "FAIL", number, name,
                detail.empty() ? "" : " - ", detail.c_str(), elapsed(t0));
    std::fflush(stdout);
    if (!pass) ++*failures;
    return pass;
}

}  // namespace

int main() {
    int failures = 0;
    report(1, "perturbation soundness", crit1_soundness, &failures);
    report(2, "lexicon matches a brute-force scanner", crit2_lexicon,
           &failures);
    report(3, "selection matches a brute-force argmax", crit3_selection,
           &failures);
    report(4, "analytic gradients match finite differences", crit4_gradients,
           &failures);
    report(5, "marginalized inference identities", crit5_marginalization,
           &failures);
    report(6, "synthetic benchmark survives the rename shift",
           crit6_benchmark, &failures);
    report(7, "byte-identical reruns", crit7_determinism, &failures);
    if (failures == 0) std::printf("all criteria passed\n");
    else
        std::printf("%d criteria failed\n", failures);
    return failures;
}
