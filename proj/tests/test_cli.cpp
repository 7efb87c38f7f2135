#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct CmdResult {
    int code = -1;
    std::string output;
};

CmdResult run_cli(const std::string& args) {
    const char* bin = std::getenv("SPURLEX_BIN");
    CmdResult res;
    const std::string cmd = "\"" + std::string(bin) + "\" " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return res;
    char buf[4096];
    while (size_t got = fread(buf, 1, sizeof buf, pipe))
        res.output.append(buf, got);
    const int status = pclose(pipe);
    res.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return res;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

nlohmann::json parse_file(const fs::path& path) {
    return nlohmann::json::parse(slurp(path));
}

struct Pipeline {
    bool available = false;
    fs::path wd;
    CmdResult synth, ingest, lexicon_file, lexicon_dir;
    CmdResult perturb1, perturb2, perturb_api, perturb_random;
    CmdResult train_vanilla, train_causal;
    CmdResult eval_vanilla, eval_causal;
    CmdResult infer1, infer2, generalize, robustness;
};

const Pipeline& pipe() {
    static Pipeline p = [] {
        Pipeline x;
        if (!std::getenv("SPURLEX_BIN")) return x;
        x.available = true;
        x.wd = fs::path(::testing::TempDir()) / "spurlex_cli_pipeline";
        fs::remove_all(x.wd);
        fs::create_directories(x.wd);
        const std::string wd = x.wd.string();

        x.synth = run_cli("synth --rho 0.9 --n-train 60 --n-test 24 --seed 5"
                          " --out " + wd + "/data");
        x.ingest = run_cli("ingest --in " + wd + "/data/train.jsonl"
                           " --split train --out " + wd + "/ing");
        x.lexicon_file = run_cli("lexicon --train " + wd + "/data/train.jsonl"
                                 " --out " + wd + "/lex.json");
        x.lexicon_dir = run_cli("lexicon --train " + wd + "/ing --out " + wd +
                                "/lex2.json");

        const std::string pbase = " --in " + wd + "/data/test.jsonl --lex " +
                                  wd + "/lex.json";
        x.perturb1 = run_cli("perturb --kind var --topk 10 --seed 3" + pbase +
                             " --out " + wd + "/p1");
        x.perturb2 = run_cli("perturb --kind var --topk 10 --seed 3" + pbase +
                             " --out " + wd + "/p2");
        x.perturb_api = run_cli("perturb --kind api --seed 3" + pbase +
                                " --out " + wd + "/papi");
        x.perturb_random = run_cli("perturb --kind random_var --topk 10"
                                   " --seed 3 --in " + wd +
                                   "/data/test.jsonl --out " + wd + "/prand");

        const std::string dims = " --epochs 2 --batch 8 --lr 0.01 --seed 21"
                                 " --k 3 --v-r 256 --d-r 6 --v-m 128 --d-m 4"
                                 " --m-depth 1 --d-h 6";
        const std::string corpora = " --train " + wd + "/data/train.jsonl" +
                                    " --valid " + wd + "/data/valid.jsonl";
        x.train_vanilla = run_cli("train --mode vanilla" + dims + corpora +
                                  " --out " + wd + "/van.ckpt --log " + wd +
                                  "/van.log.json");
        x.train_causal = run_cli("train --mode causal --select var1" + dims +
                                 corpora + " --lex " + wd + "/lex.json" +
                                 " --out " + wd + "/caus.ckpt");

        x.eval_vanilla = run_cli("evaluate --model " + wd + "/van.ckpt"
                                 " --test " + wd + "/data/test.jsonl"
                                 " --report " + wd + "/van_rep.json"
                                 " --hist " + wd + "/van_hist.csv --seed 7");
        x.eval_causal = run_cli("evaluate --model " + wd + "/caus.ckpt"
                                " --test " + wd + "/data/test.jsonl"
                                " --train " + wd + "/data/train.jsonl"
                                " --report " + wd + "/caus_rep.json"
                                " --hist " + wd + "/caus_hist.csv --seed 7");

        const std::string infer_args =
            "infer --model " + wd + "/caus.ckpt --k 2 --seed 7"
            " --in " + wd + "/data/test.jsonl"
            " --train " + wd + "/data/train.jsonl --out ";
        x.infer1 = run_cli(infer_args + wd + "/inf1.jsonl");
        x.infer2 = run_cli(infer_args + wd + "/inf2.jsonl");

        x.generalize = run_cli("generalize --model " + wd + "/van.ckpt"
                               " --in " + wd + "/data/test.jsonl"
                               " --exclude-project alpha --seed 7"
                               " --report " + wd + "/gen.json");
        x.robustness = run_cli("robustness --vanilla " + wd + "/van.ckpt"
                               " --causal " + wd + "/caus.ckpt"
                               " --lex " + wd + "/lex.json"
                               " --test " + wd + "/data/test.jsonl"
                               " --train " + wd + "/data/train.jsonl"
                               " --family var --grid 5,10 --k 2 --seed 7"
                               " --out " + wd + "/rob.json");
        return x;
    }();
    return p;
}

#define REQUIRE_PIPELINE() \
    if (!pipe().available) GTEST_SKIP() << "SPURLEX_BIN not set"

}  // namespace

TEST(Cli, SynthWritesTheFourSplits) {
    REQUIRE_PIPELINE();
    const Pipeline& p = pipe();
    ASSERT_EQ(p.synth.code, 0) << p.synth.output;
    for (const char* name :
         {"train.jsonl", "valid.jsonl", "test.jsonl", "perturbed_test.jsonl"})
        EXPECT_TRUE(fs::exists(p.wd / "data" / name)) << name;
    EXPECT_NE(p.synth.output.find("train 60"), std::string::npos);
    EXPECT_NE(p.synth.output.find("test 24"), std::string::npos);

    CmdResult again = run_cli("synth --rho 0.9 --n-train 60 --n-test 24"
                              " --seed 5 --out " + p.wd.string() + "/data2");
    ASSERT_EQ(again.code, 0);
    EXPECT_EQ(slurp(p.wd / "data/train.jsonl"),
              slurp(p.wd / "data2/train.jsonl"));
}

TEST(Cli, IngestNormalizesTheCorpus) {
    REQUIRE_PIPELINE();
    const Pipeline& p = pipe();
    ASSERT_EQ(p.ingest.code, 0) << p.ingest.output;
    EXPECT_EQ(slurp(p.wd / "ing/train.jsonl"),
              slurp(p.wd / "data/train.jsonl"));
    EXPECT_NE(p.ingest.output.find("ingested 60"), std::string::npos);

    CmdResult bad = run_cli("ingest --in " + p.wd.string() +
                            "/data/train.jsonl --split weird --out " +
                            p.wd.string() + "/ing2");
    EXPECT_NE(bad.code, 0);
}

TEST(Cli, LexiconAcceptsFileOrDirectory) {
    REQUIRE_PIPELINE();
    const Pipeline& p = pipe();
    ASSERT_EQ(p.lexicon_file.code, 0) << p.lexicon_file.output;
    ASSERT_EQ(p.lexicon_dir.code, 0) << p.lexicon_dir.output;
    EXPECT_EQ(slurp(p.wd / "lex.json"), slurp(p.wd / "lex2.json"));
    nlohmann::json lex = parse_file(p.wd / "lex.json");
    EXPECT_TRUE(lex.contains("spurious_vars"));
}

TEST(Cli, PerturbIsSeedDeterministicWithNamedOutputs) {
    REQUIRE_PIPELINE();
    const Pipeline& p = pipe();
    ASSERT_EQ(p.perturb1.code, 0) << p.perturb1.output;
    ASSERT_EQ(p.perturb2.code, 0) << p.perturb2.output;
    EXPECT_TRUE(fs::exists(p.wd / "p1/test.var.K10.jsonl"));
    EXPECT_TRUE(fs::exists(p.wd / "p1/test.var.K10.records.jsonl"));
    EXPECT_EQ(slurp(p.wd / "p1/test.var.K10.jsonl"),
              slurp(p.wd / "p2/test.var.K10.jsonl"));
    EXPECT_EQ(slurp(p.wd / "p1/test.var.K10.records.jsonl"),
              slurp(p.wd / "p2/test.var.K10.records.jsonl"));
    EXPECT_NE(slurp(p.wd / "p1/test.var.K10.jsonl"),
              slurp(p.wd / "data/test.jsonl"));
}

TEST(Cli, PerturbApiPassesThroughWithoutExclusiveCallees) {
    REQUIRE_PIPELINE();
    const Pipeline& p = pipe();
    ASSERT_EQ(p.perturb_api.code, 0) << p.perturb_api.output;
    EXPECT_EQ(slurp(p.wd / "papi/test.api.K5.jsonl"),
              slurp(p.wd / "data/test.jsonl"));
    EXPECT_EQ(slurp(p.wd / "papi/test.api.K5.records.jsonl"), "");
    EXPECT_NE(p.perturb_api.output.find("passed through unchanged: 24"),
              std::string::npos);
}

TEST(Cli, PerturbRandomNeedsNoLexiconButVarDoes) {
    REQUIRE_PIPELINE();
    const Pipeline& p = pipe();
    ASSERT_EQ(p.perturb_random.code, 0) << p.perturb_random.output;
    EXPECT_TRUE(fs::exists(p.wd / "prand/test.random_var.K10.jsonl"));

    CmdResult bad = run_cli("perturb --kind var --in " + p.wd.string() +
                            "/data/test.jsonl --out " + p.wd.string() +
                            "/pbad");
    EXPECT_NE(bad.code, 0);
    EXPECT_NE(bad.output.find("--lex"), std::string::npos);
}

TEST(Cli, TrainWritesCheckpointAndLog) {
    REQUIRE_PIPELINE();
    const Pipeline& p = pipe();
    ASSERT_EQ(p.train_vanilla.code, 0) << p.train_vanilla.output;
    ASSERT_EQ(p.train_causal.code, 0) << p.train_causal.output;
    EXPECT_TRUE(fs::exists(p.wd / "van.ckpt"));
    EXPECT_TRUE(fs::exists(p.wd / "caus.ckpt"));
    EXPECT_NE(p.train_vanilla.output.find("initial loss"), std::string::npos);
    EXPECT_NE(p.train_vanilla.output.find("best epoch"), std::string::npos);

    nlohmann::json log = parse_file(p.wd / "van.log.json");
    EXPECT_EQ(log["epochs"].size(), 2u);
    EXPECT_TRUE(log.contains("best_epoch"));

    CmdResult bad = run_cli("train --mode causal --train " + p.wd.string() +
                            "/data/train.jsonl --valid " + p.wd.string() +
                            "/data/valid.jsonl --out " + p.wd.string() +
                            "/x.ckpt");
    EXPECT_NE(bad.code, 0);
    EXPECT_NE(bad.output.find("--lex"), std::string::npos);
}

TEST(Cli, EvaluateEmitsReportAndHistogram) {
    REQUIRE_PIPELINE();
    const Pipeline& p = pipe();
    ASSERT_EQ(p.eval_vanilla.code, 0) << p.eval_vanilla.output;
    ASSERT_EQ(p.eval_causal.code, 0) << p.eval_causal.output;

    nlohmann::json rep = parse_file(p.wd / "van_rep.json");
    EXPECT_EQ(rep["count"].get<size_t>(), 24u);
    EXPECT_EQ(rep["per_example"].size(), 24u);
    const std::string hist = slurp(p.wd / "van_hist.csv");
    EXPECT_EQ(hist.substr(0, hist.find('\n')),
              "bin_lo,bin_hi,count_label0,count_label1");

    CmdResult bad = run_cli("evaluate --model " + p.wd.string() +
                            "/caus.ckpt --test " + p.wd.string() +
                            "/data/test.jsonl --report " + p.wd.string() +
                            "/x.json --hist " + p.wd.string() + "/x.csv");
    EXPECT_NE(bad.code, 0);
    EXPECT_NE(bad.output.find("--train"), std::string::npos);
}

TEST(Cli, InferIsDeterministic) {
    REQUIRE_PIPELINE();
    const Pipeline& p = pipe();
    ASSERT_EQ(p.infer1.code, 0) << p.infer1.output;
    ASSERT_EQ(p.infer2.code, 0) << p.infer2.output;
    const std::string lines = slurp(p.wd / "inf1.jsonl");
    EXPECT_EQ(lines, slurp(p.wd / "inf2.jsonl"));

    std::istringstream in(lines);
    std::string line;
    size_t count = 0;
    while (std::getline(in, line)) {
        nlohmann::json row = nlohmann::json::parse(line);
        EXPECT_TRUE(row.contains("idx"));
        EXPECT_TRUE(row.contains("label"));
        EXPECT_TRUE(row.contains("p_vul"));
        EXPECT_TRUE(row.contains("predicted"));
        ++count;
    }
    EXPECT_EQ(count, 24u);

    CmdResult self = run_cli("infer --model " + p.wd.string() +
                             "/caus.ckpt --xprime-self --in " +
                             p.wd.string() + "/data/test.jsonl --out " +
                             p.wd.string() + "/inf_self.jsonl");
    EXPECT_EQ(self.code, 0) << self.output;
}

TEST(Cli, GeneralizeDropsAProject) {
    REQUIRE_PIPELINE();
    const Pipeline& p = pipe();
    ASSERT_EQ(p.generalize.code, 0) << p.generalize.output;
    nlohmann::json rep = parse_file(p.wd / "gen.json");

    size_t alpha = 0;
    std::istringstream in(slurp(p.wd / "data/test.jsonl"));
    std::string line;
    while (std::getline(in, line))
        if (nlohmann::json::parse(line)["project"] == "alpha") ++alpha;
    ASSERT_GT(alpha, 0u);
    EXPECT_EQ(rep["count"].get<size_t>(), 24u - alpha);
}

TEST(Cli, RobustnessSweepsTheGrid) {
    REQUIRE_PIPELINE();
    const Pipeline& p = pipe();
    ASSERT_EQ(p.robustness.code, 0) << p.robustness.output;
    nlohmann::json rep = parse_file(p.wd / "rob.json");
    ASSERT_EQ(rep["grid"].size(), 2u);
    EXPECT_EQ(rep["grid"][0]["value"].get<size_t>(), 5u);
    EXPECT_EQ(rep["grid"][1]["value"].get<size_t>(), 10u);
    const size_t worst = rep["worst_value"].get<size_t>();
    EXPECT_TRUE(worst == 5 || worst == 10);
    EXPECT_EQ(rep["family"], "var");

    CmdResult bad = run_cli("robustness --vanilla " + p.wd.string() +
                            "/van.ckpt --causal " + p.wd.string() +
                            "/van.ckpt --lex " + p.wd.string() +
                            "/lex.json --test " + p.wd.string() +
                            "/data/test.jsonl --train " + p.wd.string() +
                            "/data/train.jsonl --out " + p.wd.string() +
                            "/rob_bad.json");
    EXPECT_NE(bad.code, 0);
    EXPECT_NE(bad.output.find("not a causal model"), std::string::npos);
}

TEST(Cli, RejectsBadInvocations) {
    REQUIRE_PIPELINE();
    EXPECT_NE(run_cli("").code, 0);
    EXPECT_NE(run_cli("perturb --kind bogus --in /dev/null").code, 0);
    EXPECT_NE(run_cli("train --mode vanilla").code, 0);
    EXPECT_NE(run_cli("nonsense").code, 0);
}
