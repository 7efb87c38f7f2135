#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "spurlex/error.hpp"

namespace spurlex {

enum class Split { Train, Valid, Test };

inline const char* split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Valid: return "valid";
        case Split::Test: return "test";
    }
    return "?";
}

inline Split split_from_name(std::string_view s) {
    if (s == "train") return Split::Train;
    if (s == "valid") return Split::Valid;
    if (s == "test") return Split::Test;
    throw Error("unknown split '" + std::string(s) + "'");
}

/// One C function with its vulnerability label.
struct FunctionSample {
    int64_t id = 0;
    std::string source;
    int label = 0;  // 1 = vulnerable
    std::string project;
    Split split = Split::Train;
};

struct Corpus {
    std::string name;
    std::vector<FunctionSample> samples;

    const FunctionSample* find(int64_t id) const {
        for (const auto& s : samples)
            if (s.id == id) return &s;
        return nullptr;
    }
};

/// Checks corpus invariants: unique ids and plausible function sources.
inline void validate(const Corpus& corpus) {
    std::set<int64_t> ids;
    for (const FunctionSample& s : corpus.samples) {
        if (!ids.insert(s.id).second)
            throw Error("corpus '" + corpus.name + "': duplicate id " +
                        std::to_string(s.id));
        if (s.source.empty())
            throw Error("corpus '" + corpus.name + "': sample " +
                        std::to_string(s.id) + " has empty source");
        if (s.source.find('(') == std::string::npos ||
            s.source.find('{') == std::string::npos)
            throw Error("corpus '" + corpus.name + "': sample " +
                        std::to_string(s.id) +
                        " does not look like a function definition");
        if (s.label != 0 && s.label != 1)
            throw Error("corpus '" + corpus.name + "': sample " +
                        std::to_string(s.id) + " has label " +
                        std::to_string(s.label));
    }
}

namespace detail {

inline int parse_label(const nlohmann::json& v, size_t line_no) {
    int64_t label = -1;
    if (v.is_number_integer()) label = v.get<int64_t>();
    else if (v.is_boolean()) label = v.get<bool>() ? 1 : 0;
    else
        throw Error("line " + std::to_string(line_no) +
                    ": 'target' must be 0 or 1");
    if (label != 0 && label != 1)
        throw Error("line " + std::to_string(line_no) +
                    ": 'target' must be 0 or 1");
    return static_cast<int>(label);
}

}  // namespace detail

/// Parses a JSONL corpus: one object per line with required keys "func"
/// (source text) and "target" (0/1), optional "idx" (sample id; defaults to
/// the 0-based line number) and "project". Unknown keys are ignored.
inline Corpus parse_jsonl(std::istream& in, std::string name, Split split) {
    Corpus corpus;
    corpus.name = std::move(name);

    std::string line;
    size_t line_no = 0;
    std::set<int64_t> seen;
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
        if (!obj.is_object())
            throw Error("line " + std::to_string(line_no) +
                        ": expected a JSON object");
        if (!obj.contains("func") || !obj["func"].is_string())
            throw Error("line " + std::to_string(line_no) +
                        ": missing string key 'func'");
        if (!obj.contains("target"))
            throw Error("line " + std::to_string(line_no) +
                        ": missing key 'target'");

        FunctionSample s;
        s.source = obj["func"].get<std::string>();
        s.label = detail::parse_label(obj["target"], line_no);
        if (obj.contains("idx")) {
            if (!obj["idx"].is_number_integer())
                throw Error("line " + std::to_string(line_no) +
                            ": 'idx' must be an integer");
            s.id = obj["idx"].get<int64_t>();
        } else {
            s.id = static_cast<int64_t>(line_no);
        }
        if (obj.contains("project")) {
            if (!obj["project"].is_string())
                throw Error("line " + std::to_string(line_no) +
                            ": 'project' must be a string");
            s.project = obj["project"].get<std::string>();
        }
        s.split = split;
        if (!seen.insert(s.id).second)
            throw Error("line " + std::to_string(line_no) + ": duplicate id " +
                        std::to_string(s.id));
        corpus.samples.push_back(std::move(s));
        ++line_no;
    }
    return corpus;
}

inline Corpus load_jsonl(const std::string& path, Split split) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    std::string name = path;
    if (size_t slash = name.find_last_of('/'); slash != std::string::npos)
        name = name.substr(slash + 1);
    if (size_t dot = name.find_last_of('.'); dot != std::string::npos)
        name = name.substr(0, dot);
    return parse_jsonl(in, std::move(name), split);
}

/// Serializes one sample as a single JSON line with fixed key order.
inline std::string sample_to_jsonl(const FunctionSample& s) {
    nlohmann::ordered_json obj;
    obj["func"] = s.source;
    obj["target"] = s.label;
    obj["idx"] = s.id;
    if (!s.project.empty()) obj["project"] = s.project;
    return obj.dump();
}

inline std::string to_jsonl(const Corpus& corpus) {
    std::string out;
    for (const FunctionSample& s : corpus.samples) {
        out += sample_to_jsonl(s);
        out += '\n';
    }
    return out;
}

inline void write_jsonl(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << to_jsonl(corpus);
    if (!out) throw Error("write failed for '" + path + "'");
}

/// Returns a copy of the corpus without the named project
/// (ASCII case-insensitive match).
inline Corpus exclude_project(const Corpus& corpus, std::string_view project) {
    auto lower = [](std::string_view s) {
        std::string out(s);
        for (char& c : out)
            c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        return out;
    };
    const std::string needle = lower(project);
    Corpus out;
    out.name = corpus.name;
    for (const FunctionSample& s : corpus.samples)
        if (lower(s.project) != needle) out.samples.push_back(s);
    return out;
}

}  // namespace spurlex
