#include <CLI11.hpp>
#include <json.hpp>

#include <spurlex/corpus.hpp>
#include <spurlex/error.hpp>
#include <spurlex/harness.hpp>
#include <spurlex/learner.hpp>
#include <spurlex/lexicon.hpp>
#include <spurlex/perturb.hpp>
#include <spurlex/rng.hpp>
#include <spurlex/select.hpp>
#include <spurlex/stats.hpp>
#include <spurlex/synth.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace spurlex;

namespace {

std::string stem_of(const std::string& path) {
    return fs::path(path).stem().string();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + path);
    out << text;
    if (!out) throw Error("write failed: " + path);
}

// The lexicon step accepts either an ingest output directory (expects
// train.jsonl inside) or a JSONL file directly.
std::string resolve_train_path(const std::string& arg) {
    if (fs::is_directory(arg)) return (fs::path(arg) / "train.jsonl").string();
    return arg;
}

void write_report_json(const nlohmann::ordered_json& j,
                       const std::string& path) {
    write_text(path, j.dump(2) + "\n");
}

struct IngestArgs {
    std::string in, split, out;
};

struct LexiconArgs {
    std::string train, out;
    std::string count_mode = "occurrences";
};

struct PerturbArgs {
    std::string in, lex, out = ".";
    std::string kind;
    size_t topk = 25;
    size_t m = 5;
    size_t n = 5;
    uint64_t seed = 0;
};

struct TrainArgs {
    std::string mode, train, valid, lex, out, log, import_reps;
    std::string select = "var1";
    size_t select_k = 0;
    size_t epochs = 10;
    size_t batch = 32;
    double lr = 1e-3;
    uint64_t seed = 0;
    size_t k = 40;
    size_t v_r = 1 << 16;
    size_t d_r = 64;
    size_t v_m = 1 << 14;
    size_t d_m = 32;
    size_t m_depth = 2;
    size_t d_h = 32;
};

struct InferArgs {
    std::string model, in, train, out;
    size_t k = 0;  // 0 = checkpoint default
    uint64_t seed = 0;
    bool xprime_self = false;
};

struct EvaluateArgs {
    std::string model, test, train, report, hist;
    size_t k = 0;
    uint64_t seed = 0;
};

struct RobustnessArgs {
    std::string vanilla, causal, lex, test, train, out;
    std::string family = "var";
    std::vector<size_t> grid = {5, 10, 15, 20, 25, 50, 100};
    size_t k = 0;
    uint64_t seed = 0;
};

struct GeneralizeArgs {
    std::string model, in, train, report;
    std::string exclude_project;
    size_t k = 0;
    uint64_t seed = 0;
};

struct SynthArgs {
    std::string out;
    std::string motif = "alloc_page/commit_block";
    double rho = 0.9;
    size_t n_train = 2000;
    size_t n_test = 500;
    uint64_t seed = 0;
};

int run_ingest(const IngestArgs& a) {
    const Split split = split_from_name(a.split);
    Corpus corpus = load_jsonl(a.in, split);
    validate(corpus);
    fs::create_directories(a.out);
    const std::string path =
        (fs::path(a.out) / (std::string(split_name(split)) + ".jsonl"))
            .string();
    write_jsonl(corpus, path);
    std::cout << "ingested " << corpus.samples.size() << " samples -> " << path
              << "\n";
    return 0;
}

int run_lexicon(const LexiconArgs& a) {
    Corpus train = load_jsonl(resolve_train_path(a.train), Split::Train);
    SpuriousLexicon lex =
        build_lexicon(train, count_mode_from_name(a.count_mode));
    save_lexicon(lex, a.out);
    std::cout << "lexicon -> " << a.out << " (spurious vars "
              << lex.spurious_vars[0].size() << "/"
              << lex.spurious_vars[1].size() << ", spurious apis "
              << lex.spurious_apis[0].size() << "/"
              << lex.spurious_apis[1].size() << ", skipped "
              << lex.skipped_samples << ")\n";
    return 0;
}

int run_perturb(const PerturbArgs& a) {
    const PerturbKind kind = perturb_kind_from_name(a.kind);
    const bool needs_lexicon =
        kind == PerturbKind::Var || kind == PerturbKind::Api ||
        kind == PerturbKind::Joint;
    if (needs_lexicon && a.lex.empty())
        throw Error("perturb: --lex is required for kind " + a.kind);

    Corpus in = load_jsonl(a.in, Split::Test);
    SpuriousLexicon lex;
    if (needs_lexicon) lex = load_lexicon(a.lex);

    Corpus out_corpus;
    std::string records;
    size_t unperturbed = 0;
    for (const FunctionSample& s : in.samples) {
        Rng rng(mix_seed(a.seed, static_cast<uint64_t>(s.id)));
        try {
            PerturbResult res = [&] {
                switch (kind) {
                    case PerturbKind::Var:
                        return perturb_var(s, lex, a.topk, rng);
                    case PerturbKind::Api:
                        return perturb_api(s, lex, a.m, a.n, rng);
                    case PerturbKind::Joint:
                        return perturb_joint(s, lex, a.topk, a.m, a.n, rng);
                    default:
                        return perturb_random(s, kind, rng, a.m, a.n);
                }
            }();
            out_corpus.samples.push_back(res.sample);
            records += record_to_json(res.record).dump() + "\n";
        } catch (const Error&) {
            out_corpus.samples.push_back(s);
            ++unperturbed;
        }
    }

    // File pair named by the size knob that drives the kind: the name pool
    // size for renames, the per-block call count for injections.
    const size_t k_suffix =
        (kind == PerturbKind::Api || kind == PerturbKind::RandomApi) ? a.n
                                                                     : a.topk;
    const std::string base =
        stem_of(a.in) + "." + perturb_kind_name(kind) + ".K" +
        std::to_string(k_suffix);
    out_corpus.name = base;
    fs::create_directories(a.out);
    const std::string corpus_path =
        (fs::path(a.out) / (base + ".jsonl")).string();
    const std::string records_path =
        (fs::path(a.out) / (base + ".records.jsonl")).string();
    write_jsonl(out_corpus, corpus_path);
    write_text(records_path, records);
    std::cout << "perturbed " << (in.samples.size() - unperturbed) << "/"
              << in.samples.size() << " samples -> " << corpus_path << "\n";
    if (unperturbed > 0)
        std::cout << "passed through unchanged: " << unperturbed << "\n";
    return 0;
}

int run_train(const TrainArgs& a) {
    ModelConfig cfg;
    cfg.mode = model_mode_from_name(a.mode);
    cfg.select = select_procedure_from_name(a.select);
    cfg.select_k = a.select_k;
    cfg.epochs = a.epochs;
    cfg.batch = a.batch;
    cfg.lr = a.lr;
    cfg.seed = a.seed;
    cfg.k = a.k;
    cfg.v_r = a.v_r;
    cfg.d_r = a.d_r;
    cfg.v_m = a.v_m;
    cfg.d_m = a.d_m;
    cfg.m_depth = a.m_depth;
    cfg.d_h = a.d_h;
    cfg.import_mode = !a.import_reps.empty();

    Corpus train = load_jsonl(a.train, Split::Train);
    Corpus valid = load_jsonl(a.valid, Split::Valid);

    SpuriousLexicon lex;
    const SpuriousLexicon* lex_ptr = nullptr;
    if (cfg.mode == ModelMode::Causal) {
        if (a.lex.empty()) throw Error("train: --lex is required for causal");
        lex = load_lexicon(a.lex);
        lex_ptr = &lex;
    }

    std::map<int64_t, std::vector<double>> reps;
    const std::map<int64_t, std::vector<double>>* reps_ptr = nullptr;
    if (cfg.import_mode) {
        reps = import_representations(a.import_reps);
        reps_ptr = &reps;
    }

    TrainResult res = train_model(cfg, train, valid, lex_ptr, reps_ptr);
    save_model(res.model, a.out);

    std::cout << "initial loss " << fmt_double(res.initial_loss) << "\n";
    for (const EpochLog& e : res.log) {
        std::cout << "epoch " << e.epoch << " loss "
                  << fmt_double(e.train_loss) << " valid_f1 "
                  << fmt_double(e.valid_f1);
        if (e.selection_failures > 0)
            std::cout << " selection_failures " << e.selection_failures;
        std::cout << "\n";
    }
    std::cout << "best epoch " << res.best_epoch << " valid_f1 "
              << fmt_double(res.best_f1) << " -> " << a.out << "\n";

    if (!a.log.empty()) {
        nlohmann::ordered_json j;
        j["initial_loss"] = res.initial_loss;
        j["best_epoch"] = res.best_epoch;
        j["best_f1"] = res.best_f1;
        j["unusable_train"] = res.unusable_train;
        j["unusable_valid"] = res.unusable_valid;
        j["epochs"] = nlohmann::ordered_json::array();
        for (const EpochLog& e : res.log) {
            nlohmann::ordered_json row;
            row["epoch"] = e.epoch;
            row["train_loss"] = e.train_loss;
            row["valid_f1"] = e.valid_f1;
            row["selection_failures"] = e.selection_failures;
            j["epochs"].push_back(row);
        }
        write_report_json(j, a.log);
    }
    return 0;
}

// Builds the pool of training-set spurious encodings a causal checkpoint
// marginalizes over. Vanilla checkpoints and self-draw mode skip it.
struct PoolHolder {
    InferencePool pool;
    const InferencePool* ptr = nullptr;
};

PoolHolder make_pool(const Model& mod, const std::string& train_path,
                     bool xprime_self, const char* cmd) {
    PoolHolder h;
    if (mod.cfg.mode != ModelMode::Causal || xprime_self) return h;
    if (train_path.empty())
        throw Error(std::string(cmd) +
                    ": --train is required for a causal checkpoint");
    Corpus train = load_jsonl(train_path, Split::Train);
    h.pool = build_inference_pool(train, mod.cfg.v_m);
    h.ptr = &h.pool;
    return h;
}

int run_infer(const InferArgs& a) {
    Model mod = load_model(a.model);
    const size_t k = a.k > 0 ? a.k : mod.cfg.k;
    Corpus in = load_jsonl(a.in, Split::Test);
    PoolHolder pool = make_pool(mod, a.train, a.xprime_self, "infer");

    EvalReport rep =
        evaluate_model(mod, in, pool.ptr, k, a.seed, a.xprime_self);
    std::string lines;
    for (const PerExample& e : rep.per_example) {
        nlohmann::ordered_json row;
        row["idx"] = e.id;
        row["label"] = e.label;
        row["p_vul"] = e.p_vul;
        row["predicted"] = e.predicted;
        lines += row.dump() + "\n";
    }
    write_text(a.out, lines);
    std::cout << "inferred " << rep.per_example.size() << " samples (f1 "
              << fmt_double(rep.f1.f1) << ") -> " << a.out << "\n";
    if (rep.skipped > 0) std::cout << "skipped " << rep.skipped << "\n";
    return 0;
}

int run_evaluate(const EvaluateArgs& a) {
    Model mod = load_model(a.model);
    const size_t k = a.k > 0 ? a.k : mod.cfg.k;
    Corpus test = load_jsonl(a.test, Split::Test);
    PoolHolder pool = make_pool(mod, a.train, false, "evaluate");

    EvalReport rep = evaluate_model(mod, test, pool.ptr, k, a.seed);
    write_report_json(report_to_json(rep), a.report);
    write_text(a.hist, histogram_to_csv(rep.histogram));
    std::cout << "f1 " << fmt_double(rep.f1.f1) << " precision "
              << fmt_double(rep.f1.precision) << " recall "
              << fmt_double(rep.f1.recall) << " on "
              << rep.per_example.size() << " samples\n";
    std::cout << "report -> " << a.report << ", histogram -> " << a.hist
              << "\n";
    return 0;
}

int run_robustness_cmd(const RobustnessArgs& a) {
    Model vanilla = load_model(a.vanilla);
    Model causal = load_model(a.causal);
    if (causal.cfg.mode != ModelMode::Causal)
        throw Error("robustness: --causal checkpoint is not a causal model");
    SpuriousLexicon lex = load_lexicon(a.lex);
    Corpus test = load_jsonl(a.test, Split::Test);
    Corpus train = load_jsonl(a.train, Split::Train);
    InferencePool pool = build_inference_pool(train, causal.cfg.v_m);
    const size_t k = a.k > 0 ? a.k : causal.cfg.k;

    RobustnessResult res =
        run_robustness(vanilla, causal, lex, test, pool,
                       perturb_kind_from_name(a.family), a.grid, k, a.seed);
    write_report_json(robustness_to_json(res), a.out);
    std::cout << "family " << a.family << " worst grid point "
              << res.worst_value << " (vanilla f1 "
              << fmt_double(res.vanilla_report.f1.f1) << ", causal f1 "
              << fmt_double(res.causal_report.f1.f1) << ")\n";
    std::cout << "flips " << res.flips << " mwu_p " << fmt_double(res.mwu_p)
              << " cohens_d " << fmt_double(res.effect.d) << " ("
              << res.effect.magnitude << ") -> " << a.out << "\n";
    return 0;
}

int run_generalize(const GeneralizeArgs& a) {
    Model mod = load_model(a.model);
    const size_t k = a.k > 0 ? a.k : mod.cfg.k;
    Corpus other = load_jsonl(a.in, Split::Test);
    PoolHolder pool = make_pool(mod, a.train, false, "generalize");

    EvalReport rep = run_generalization(mod, other, a.exclude_project,
                                        pool.ptr, k, a.seed);
    write_report_json(report_to_json(rep), a.report);
    std::cout << "excluded '" << a.exclude_project << "', evaluated "
              << rep.per_example.size() << " samples, f1 "
              << fmt_double(rep.f1.f1) << " -> " << a.report << "\n";
    return 0;
}

int run_synth(const SynthArgs& a) {
    SynthSpec spec;
    spec.n_train = a.n_train;
    spec.n_test = a.n_test;
    spec.rho = a.rho;
    spec.seed = a.seed;
    spec.causal_motif = a.motif;

    SynthData data = gen_synthetic(spec);
    fs::create_directories(a.out);
    const fs::path dir(a.out);
    write_jsonl(data.train, (dir / "train.jsonl").string());
    write_jsonl(data.valid, (dir / "valid.jsonl").string());
    write_jsonl(data.test, (dir / "test.jsonl").string());
    write_jsonl(data.perturbed_test, (dir / "perturbed_test.jsonl").string());
    std::cout << "synthetic corpus -> " << a.out << " (train "
              << data.train.samples.size() << ", valid "
              << data.valid.samples.size() << ", test "
              << data.test.samples.size() << ", perturbed_test "
              << data.perturbed_test.samples.size() << ")\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Spurious lexical feature discovery and removal for C vulnerability "
        "corpora"};
    app.require_subcommand(1);

    IngestArgs ingest;
    auto* c_ingest =
        app.add_subcommand("ingest", "Validate a JSONL corpus into a split");
    c_ingest->add_option("--in", ingest.in, "Input JSONL file")
        ->required()
        ->check(CLI::ExistingFile);
    c_ingest->add_option("--split", ingest.split, "Split name")
        ->required()
        ->check(CLI::IsMember({"train", "valid", "test"}));
    c_ingest->add_option("--out", ingest.out, "Output directory")->required();

    LexiconArgs lexicon;
    auto* c_lexicon = app.add_subcommand(
        "lexicon", "Build the spurious variable/API lexicon from a train set");
    c_lexicon
        ->add_option("--train", lexicon.train,
                     "Train directory (train.jsonl inside) or JSONL file")
        ->required();
    c_lexicon->add_option("--out", lexicon.out, "Output lexicon JSON")
        ->required();
    c_lexicon
        ->add_option("--count-mode", lexicon.count_mode, "Frequency counting")
        ->check(CLI::IsMember({"occurrences", "documents"}));

    PerturbArgs perturb;
    auto* c_perturb = app.add_subcommand(
        "perturb", "Apply semantic-preserving perturbations to a corpus");
    c_perturb->add_option("--kind", perturb.kind, "Perturbation kind")
        ->required()
        ->check(
            CLI::IsMember({"var", "api", "joint", "random_var", "random_api"}));
    c_perturb->add_option("--topk", perturb.topk,
                          "Opposite-label name pool size");
    c_perturb->add_option("--m", perturb.m, "Calls per injected block");
    c_perturb->add_option("--n", perturb.n, "Injected block count");
    c_perturb->add_option("--seed", perturb.seed, "Global seed");
    c_perturb->add_option("--in", perturb.in, "Input corpus JSONL")
        ->required()
        ->check(CLI::ExistingFile);
    c_perturb->add_option("--lex", perturb.lex, "Lexicon JSON");
    c_perturb->add_option("--out", perturb.out, "Output directory");

    TrainArgs train;
    auto* c_train = app.add_subcommand("train", "Train a checkpoint");
    c_train->add_option("--mode", train.mode, "vanilla or causal")
        ->required()
        ->check(CLI::IsMember({"vanilla", "causal"}));
    c_train->add_option("--select", train.select, "x' selection procedure")
        ->check(CLI::IsMember(
            {"var1", "var2", "api1", "api2", "api3", "var_api"}));
    c_train->add_option("--select-k", train.select_k,
                        "Edit size for var2/api2/api3/var_api (0 = default)");
    c_train->add_option("--epochs", train.epochs, "Training epochs");
    c_train->add_option("--batch", train.batch, "Minibatch size");
    c_train->add_option("--lr", train.lr, "Learning rate");
    c_train->add_option("--seed", train.seed, "Global seed");
    c_train->add_option("--import-reps", train.import_reps,
                        "JSONL of fixed per-sample representations")
        ->check(CLI::ExistingFile);
    c_train->add_option("--k", train.k, "Marginalization draws at inference");
    c_train->add_option("--v-r", train.v_r, "Token hash buckets");
    c_train->add_option("--d-r", train.d_r, "Token embedding width");
    c_train->add_option("--v-m", train.v_m, "Identifier hash buckets");
    c_train->add_option("--d-m", train.d_m, "Identifier embedding width");
    c_train->add_option("--m-depth", train.m_depth,
                        "Identifier branch depth");
    c_train->add_option("--d-h", train.d_h, "Head hidden width");
    c_train->add_option("--train", train.train, "Train corpus JSONL")
        ->required()
        ->check(CLI::ExistingFile);
    c_train->add_option("--valid", train.valid, "Validation corpus JSONL")
        ->required()
        ->check(CLI::ExistingFile);
    c_train->add_option("--lex", train.lex, "Lexicon JSON (causal mode)");
    c_train->add_option("--out", train.out, "Output checkpoint path")
        ->required();
    c_train->add_option("--log", train.log, "Optional training log JSON");

    InferArgs infer;
    auto* c_infer =
        app.add_subcommand("infer", "Per-sample predictions to JSONL");
    c_infer->add_option("--model", infer.model, "Checkpoint path")
        ->required()
        ->check(CLI::ExistingFile);
    c_infer->add_option("--k", infer.k,
                        "Marginalization draws (0 = checkpoint default)");
    c_infer->add_flag("--xprime-self", infer.xprime_self,
                      "Use the sample itself as x' (ablation)");
    c_infer->add_option("--in", infer.in, "Input corpus JSONL")
        ->required()
        ->check(CLI::ExistingFile);
    c_infer->add_option("--train", infer.train,
                        "Train corpus JSONL (causal pool)");
    c_infer->add_option("--seed", infer.seed, "Draw seed");
    c_infer->add_option("--out", infer.out, "Output predictions JSONL")
        ->required();

    EvaluateArgs evaluate;
    auto* c_evaluate =
        app.add_subcommand("evaluate", "Score a checkpoint on a test set");
    c_evaluate->add_option("--model", evaluate.model, "Checkpoint path")
        ->required()
        ->check(CLI::ExistingFile);
    c_evaluate->add_option("--test", evaluate.test, "Test corpus JSONL")
        ->required()
        ->check(CLI::ExistingFile);
    c_evaluate->add_option("--report", evaluate.report, "Output report JSON")
        ->required();
    c_evaluate->add_option("--hist", evaluate.hist, "Output histogram CSV")
        ->required();
    c_evaluate->add_option("--train", evaluate.train,
                           "Train corpus JSONL (causal pool)");
    c_evaluate->add_option("--k", evaluate.k,
                           "Marginalization draws (0 = checkpoint default)");
    c_evaluate->add_option("--seed", evaluate.seed, "Draw seed");

    RobustnessArgs robustness;
    auto* c_robustness = app.add_subcommand(
        "robustness", "Sweep perturbation strength, compare both models");
    c_robustness->add_option("--grid", robustness.grid, "Grid of strengths")
        ->delimiter(',');
    c_robustness->add_option("--vanilla", robustness.vanilla,
                             "Vanilla checkpoint")
        ->required()
        ->check(CLI::ExistingFile);
    c_robustness->add_option("--causal", robustness.causal,
                             "Causal checkpoint")
        ->required()
        ->check(CLI::ExistingFile);
    c_robustness->add_option("--lex", robustness.lex, "Lexicon JSON")
        ->required()
        ->check(CLI::ExistingFile);
    c_robustness->add_option("--test", robustness.test, "Test corpus JSONL")
        ->required()
        ->check(CLI::ExistingFile);
    c_robustness->add_option("--train", robustness.train,
                             "Train corpus JSONL (causal pool)")
        ->required()
        ->check(CLI::ExistingFile);
    c_robustness->add_option("--family", robustness.family,
                             "Perturbation family")
        ->check(CLI::IsMember({"var", "api", "joint"}));
    c_robustness->add_option("--k", robustness.k,
                             "Marginalization draws (0 = checkpoint default)");
    c_robustness->add_option("--seed", robustness.seed, "Global seed");
    c_robustness->add_option("--out", robustness.out, "Output report JSON")
        ->required();

    GeneralizeArgs generalize;
    auto* c_generalize = app.add_subcommand(
        "generalize", "Evaluate on another corpus with a project held out");
    c_generalize
        ->add_option("--exclude-project", generalize.exclude_project,
                     "Project name to drop (case-insensitive)")
        ->required();
    c_generalize->add_option("--model", generalize.model, "Checkpoint path")
        ->required()
        ->check(CLI::ExistingFile);
    c_generalize->add_option("--in", generalize.in, "Evaluation corpus JSONL")
        ->required()
        ->check(CLI::ExistingFile);
    c_generalize->add_option("--train", generalize.train,
                             "Train corpus JSONL (causal pool)");
    c_generalize->add_option("--k", generalize.k,
                             "Marginalization draws (0 = checkpoint default)");
    c_generalize->add_option("--seed", generalize.seed, "Draw seed");
    c_generalize->add_option("--report", generalize.report,
                             "Output report JSON")
        ->required();

    SynthArgs synth;
    auto* c_synth = app.add_subcommand(
        "synth", "Generate the synthetic benchmark corpora");
    c_synth->add_option("--rho", synth.rho, "Planting probability");
    c_synth->add_option("--n-train", synth.n_train, "Train size");
    c_synth->add_option("--n-test", synth.n_test, "Test size");
    c_synth->add_option("--seed", synth.seed, "Generator seed");
    c_synth->add_option("--motif", synth.motif,
                        "Causal motif as alloc/use call pair");
    c_synth->add_option("--out", synth.out, "Output directory")->required();

    try {
        app.parse(argc, argv);
        if (*c_ingest) return run_ingest(ingest);
        if (*c_lexicon) return run_lexicon(lexicon);
        if (*c_perturb) return run_perturb(perturb);
        if (*c_train) return run_train(train);
        if (*c_infer) return run_infer(infer);
        if (*c_evaluate) return run_evaluate(evaluate);
        if (*c_robustness) return run_robustness_cmd(robustness);
        if (*c_generalize) return run_generalize(generalize);
        if (*c_synth) return run_synth(synth);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
