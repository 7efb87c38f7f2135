#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "spurlex/analysis.hpp"
#include "spurlex/corpus.hpp"
#include "spurlex/error.hpp"
#include "spurlex/rng.hpp"
#include "spurlex/transform.hpp"

namespace spurlex {

/// Parameters of the synthetic benchmark. The label is determined purely by
/// structure: label 1 uses the allocation result with no check in between
/// (the unchecked-allocation call pair named by causal_motif, "alloc/use"),
/// label 0 guards it first. With probability rho a sample's identifiers are
/// planted from a label-exclusive name pool; otherwise they come from a
/// shared neutral pool. Both labels call the same functions, so the label
/// never leaks through identifier choice alone unless planted.
struct SynthSpec {
    size_t n_train = 2000;
    size_t n_test = 500;
    double rho = 0.9;
    uint64_t seed = 0;
    std::string causal_motif = "alloc_page/commit_block";
};

struct SynthData {
    Corpus train, valid, test, perturbed_test;
};

namespace detail {

inline const std::array<const char*, 20>& synth_pool(int which) {
    static const std::array<const char*, 20> vul = {
        "raw_len", "src_off", "dst_off", "pkt_sz", "hdr_len",
        "buf_end", "copy_sz", "in_ptr", "frame_sz", "net_cnt",
        "seg_idx", "mem_top", "ring_pos", "io_span", "tmp_sz",
        "blk_cnt", "wr_mark", "rx_len", "tx_len", "map_gap",
    };
    static const std::array<const char*, 20> non = {
        "cfg_val", "ui_mode", "log_lvl", "opt_idx", "env_cnt",
        "fmt_sel", "tab_pos", "key_id", "lbl_num", "win_wd",
        "doc_rev", "ses_tok", "mnu_sel", "thm_hue", "usr_rank",
        "loc_code", "pg_step", "vw_zoom", "ic_size", "tip_ms",
    };
    static const std::array<const char*, 20> neutral = {
        "count", "index", "offset", "length", "size",
        "pos", "total", "limit", "step", "width",
        "depth", "span", "base", "extent", "bound",
        "range", "mark", "level", "slot", "gap",
    };
    if (which == 2) return neutral;
    return which == 1 ? vul : non;
}

inline std::pair<std::string, std::string> motif_pair(
    const std::string& motif) {
    const size_t slash = motif.find('/');
    if (slash == std::string::npos || slash == 0 ||
        slash + 1 >= motif.size())
        throw Error("causal_motif must look like 'alloc/use'");
    return {motif.substr(0, slash), motif.substr(slash + 1)};
}

inline std::array<std::string, 5> draw_names(int which, Rng& rng) {
    const auto& pool = synth_pool(which);
    std::array<size_t, 20> order;
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (size_t i = 0; i < 5; ++i)
        std::swap(order[i], order[i + rng.uniform_index(order.size() - i)]);
    std::array<std::string, 5> out;
    for (size_t i = 0; i < 5; ++i) out[i] = pool[order[i]];
    return out;
}

inline std::string synth_filler(size_t kind, const std::string& v1,
                                const std::string& v2) {
    switch (kind) {
        case 0: return "    " + v1 + " = " + v1 + " + " + v2 + ";\n";
        case 1: return "    " + v2 + " = " + v2 + " * 2;\n";
        case 2: return "    log_msg(" + v1 + ");\n";
        case 3: return "    update_state(" + v2 + ", " + v1 + ");\n";
        default:
            return "    if (" + v1 + " > 8) { " + v1 + " = 8; }\n";
    }
}

inline FunctionSample synth_sample(const SynthSpec& spec, uint64_t tag,
                                   size_t i, int64_t id, Split split) {
    Rng rng(mix_seed(mix_seed(spec.seed, tag), i));
    const int label = static_cast<int>(rng.uniform_index(2));
    const bool planted = rng.uniform_real() < spec.rho;
    const auto [alloc, use] = motif_pair(spec.causal_motif);

    const auto names = draw_names(planted ? label : 2, rng);
    const std::string& p1 = names[0];
    const std::string& p2 = names[1];
    const std::string& v1 = names[2];
    const std::string& v2 = names[3];
    const std::string& v3 = names[4];

    const uint64_t c1 = 1 + rng.uniform_index(9);
    const uint64_t c2 = 2 + rng.uniform_index(8);
    const size_t pre = rng.uniform_index(3);
    std::vector<size_t> pre_kinds;
    for (size_t f = 0; f < pre; ++f) pre_kinds.push_back(rng.uniform_index(5));
    const size_t post = rng.uniform_index(2);
    std::vector<size_t> post_kinds;
    for (size_t f = 0; f < post; ++f)
        post_kinds.push_back(rng.uniform_index(5));

    std::string src;
    src += "static int fn_" + std::to_string(id) + "(int " + p1 + ", int " +
           p2 + ") {\n";
    src += "    int " + v1 + " = " + p1 + " + " + std::to_string(c1) + ";\n";
    src += "    int " + v2 + " = " + p2 + " * " + std::to_string(c2) + ";\n";
    src += "    char *" + v3 + ";\n";
    for (size_t kind : pre_kinds) src += synth_filler(kind, v1, v2);
    src += "    " + v3 + " = (char *)" + alloc + "(" + v1 + ");\n";
    if (label == 0) src += "    if (!" + v3 + ") { return -1; }\n";
    src += "    " + use + "(" + v3 + ", " + v2 + ");\n";
    for (size_t kind : post_kinds) src += synth_filler(kind, v1, v2);
    src += "    return " + v1 + " - " + v2 + ";\n";
    src += "}\n";

    FunctionSample s;
    s.id = id;
    s.source = std::move(src);
    s.label = label;
    static const char* projects[3] = {"alpha", "beta", "gamma"};
    s.project = projects[id % 3];
    s.split = split;
    return s;
}

}  // namespace detail

/// True when the allocation call's next statement starts with the use call,
/// i.e. the result is consumed with nothing checked in between.
inline bool has_motif(std::string_view source, const std::string& motif) {
    const auto [alloc, use] = detail::motif_pair(motif);
    std::vector<Token> toks = tokenize(source);
    std::vector<const Token*> sig;
    for (const Token& t : toks)
        if (detail::is_sig(t)) sig.push_back(&t);
    for (size_t i = 0; i < sig.size(); ++i) {
        if (sig[i]->kind != TokenKind::Identifier || sig[i]->text != alloc)
            continue;
        size_t j = i + 1;
        while (j < sig.size() &&
               !(sig[j]->kind == TokenKind::Punct && sig[j]->text == ";"))
            ++j;
        ++j;
        return j < sig.size() && sig[j]->kind == TokenKind::Identifier &&
               sig[j]->text == use;
    }
    return false;
}

/// Seed-deterministic synthetic corpus quadruple. The validation split holds
/// max(50, n_train/10) extra samples; perturbed_test is the test split with
/// every variable renamed to opposite-label pool names (consistent and
/// capture-free by pool disjointness), ids and labels unchanged.
inline SynthData gen_synthetic(const SynthSpec& spec) {
    if (spec.rho < 0.0 || spec.rho > 1.0)
        throw Error("gen_synthetic: rho must be in [0, 1]");
    if (spec.n_train == 0 || spec.n_test == 0)
        throw Error("gen_synthetic: empty split");

    const size_t n_valid = std::max<size_t>(50, spec.n_train / 10);

    SynthData data;
    data.train.name = "synth_train";
    data.valid.name = "synth_valid";
    data.test.name = "synth_test";
    data.perturbed_test.name = "synth_test_perturbed";

    int64_t id = 0;
    for (size_t i = 0; i < spec.n_train; ++i, ++id)
        data.train.samples.push_back(
            detail::synth_sample(spec, 1, i, id, Split::Train));
    for (size_t i = 0; i < n_valid; ++i, ++id)
        data.valid.samples.push_back(
            detail::synth_sample(spec, 2, i, id, Split::Valid));
    for (size_t i = 0; i < spec.n_test; ++i, ++id)
        data.test.samples.push_back(
            detail::synth_sample(spec, 3, i, id, Split::Test));

    for (size_t i = 0; i < data.test.samples.size(); ++i) {
        const FunctionSample& t = data.test.samples[i];
        Rng rng(mix_seed(mix_seed(spec.seed, 4), i));
        const auto names = detail::draw_names(1 - t.label, rng);
        CodeFacts facts = analyze(t.source);
        if (facts.variables.size() > names.size())
            throw Error("gen_synthetic: unexpected variable count");
        std::map<std::string, std::string> mapping;
        size_t j = 0;
        for (const std::string& var : facts.variables)
            mapping[var] = names[j++];
        FunctionSample p = t;
        p.source = rename_variables(t.source, mapping);
        data.perturbed_test.samples.push_back(std::move(p));
    }
    return data;
}

}  // namespace spurlex
