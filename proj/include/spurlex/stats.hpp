#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "spurlex/error.hpp"

namespace spurlex {

/// Shortest round-trip decimal form of a double ("0.05", "1", "2.5e-07").
inline std::string fmt_double(double v) {
    std::array<char, 32> buf;
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc()) throw Error("fmt_double: conversion failed");
    return std::string(buf.data(), ptr);
}

struct F1Result {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Binary F1 with class 1 as positive. Zero denominators yield zero rather
/// than NaN.
inline F1Result f1_score(const std::vector<int>& preds,
                         const std::vector<int>& labels) {
    if (preds.empty()) throw Error("f1_score: empty input");
    if (preds.size() != labels.size())
        throw Error("f1_score: size mismatch");
    int64_t tp = 0, fp = 0, fn = 0;
    for (size_t i = 0; i < preds.size(); ++i) {
        if (preds[i] == 1 && labels[i] == 1) ++tp;
        else if (preds[i] == 1 && labels[i] == 0) ++fp;
        else if (preds[i] == 0 && labels[i] == 1) ++fn;
    }
    F1Result r;
    if (tp + fp > 0) r.precision = static_cast<double>(tp) / (tp + fp);
    if (tp + fn > 0) r.recall = static_cast<double>(tp) / (tp + fn);
    if (r.precision + r.recall > 0.0)
        r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
    return r;
}

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

struct CohenResult {
    double d = 0.0;
    std::string magnitude;  // trivial | small | medium | large
};

/// Cohen's d with the pooled standard deviation weighted by n-1. A zero
/// pooled deviation is an error unless the means agree, in which case d = 0.
inline CohenResult cohens_d(const std::vector<double>& a,
                            const std::vector<double>& b) {
    if (a.empty() || b.empty()) throw Error("cohens_d: empty input");
    const size_t n1 = a.size(), n2 = b.size();
    if (n1 + n2 < 3) throw Error("cohens_d: need at least 3 values in total");
    const double m1 = mean_of(a), m2 = mean_of(b);
    double ssd = 0.0;
    for (double x : a) ssd += (x - m1) * (x - m1);
    for (double x : b) ssd += (x - m2) * (x - m2);
    const double pooled =
        std::sqrt(ssd / static_cast<double>(n1 + n2 - 2));

    CohenResult r;
    if (pooled == 0.0) {
        if (m1 != m2)
            throw Error("cohens_d: zero pooled deviation with unequal means");
        r.d = 0.0;
    } else {
        r.d = (m1 - m2) / pooled;
    }
    const double ad = std::fabs(r.d);
    if (ad < 0.2) r.magnitude = "trivial";
    else if (ad < 0.5) r.magnitude = "small";
    else if (ad < 0.8) r.magnitude = "medium";
    else r.magnitude = "large";
    return r;
}

/// Two-sided Mann-Whitney U p-value via the normal approximation with the
/// tie-corrected variance (no continuity correction). Zero variance (all
/// values identical) returns p = 1.
inline double mann_whitney_p(const std::vector<double>& a,
                             const std::vector<double>& b) {
    if (a.empty() || b.empty()) throw Error("mann_whitney_p: empty input");
    const size_t n1 = a.size(), n2 = b.size();
    const size_t n = n1 + n2;

    std::vector<std::pair<double, int>> all;
    all.reserve(n);
    for (double x : a) all.emplace_back(x, 0);
    for (double x : b) all.emplace_back(x, 1);
    std::sort(all.begin(), all.end(),
              [](const auto& p, const auto& q) { return p.first < q.first; });

    double r1 = 0.0;
    double tie_sum = 0.0;
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j < n && all[j].first == all[i].first) ++j;
        const double t = static_cast<double>(j - i);
        // average rank of the tie run (ranks are 1-based)
        const double rank = (static_cast<double>(i + 1) +
                             static_cast<double>(j)) / 2.0;
        for (size_t k = i; k < j; ++k)
            if (all[k].second == 0) r1 += rank;
        if (t > 1.0) tie_sum += t * t * t - t;
        i = j;
    }

    const double fn1 = static_cast<double>(n1), fn2 = static_cast<double>(n2);
    const double fn = static_cast<double>(n);
    const double u1 = r1 - fn1 * (fn1 + 1.0) / 2.0;
    const double mu = fn1 * fn2 / 2.0;
    const double sigma2 =
        (fn1 * fn2 / 12.0) * ((fn + 1.0) - tie_sum / (fn * (fn - 1.0)));
    if (sigma2 <= 0.0) return 1.0;
    const double z = (u1 - mu) / std::sqrt(sigma2);
    const double p = std::erfc(std::fabs(z) / std::sqrt(2.0));
    return std::min(1.0, std::max(0.0, p));
}

namespace detail {

/// Regularized upper incomplete gamma Q(a, x).
inline double gamma_q(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw Error("gamma_q: bad arguments");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) {
        // series for P(a, x)
        double ap = a;
        double sum = 1.0 / a;
        double del = sum;
        for (int it = 0; it < 500; ++it) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
        }
        const double p =
            sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
        return 1.0 - p;
    }
    // continued fraction for Q(a, x) (modified Lentz)
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int it = 1; it < 500; ++it) {
        const double an = -static_cast<double>(it) *
                          (static_cast<double>(it) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-15) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace detail

/// Upper-tail p-value of the chi-square distribution.
inline double chi_square_p(double stat, double df) {
    if (stat < 0.0) throw Error("chi_square_p: negative statistic");
    if (df <= 0.0) throw Error("chi_square_p: bad degrees of freedom");
    return detail::gamma_q(df / 2.0, stat / 2.0);
}

/// 20 equal-width probability bins over [0, 1], split by true label. The
/// last bin is closed so p = 1 lands in bin 19.
struct Histogram {
    static constexpr size_t kBins = 20;
    std::array<std::array<int64_t, 2>, kBins> counts{};
};

inline Histogram make_histogram(const std::vector<double>& probs,
                                const std::vector<int>& labels) {
    if (probs.size() != labels.size())
        throw Error("make_histogram: size mismatch");
    Histogram h;
    for (size_t i = 0; i < probs.size(); ++i) {
        const double p = probs[i];
        if (p < 0.0 || p > 1.0)
            throw Error("make_histogram: probability out of range");
        size_t bin = static_cast<size_t>(p * Histogram::kBins);
        if (bin >= Histogram::kBins) bin = Histogram::kBins - 1;
        ++h.counts[bin][labels[i] == 1 ? 1 : 0];
    }
    return h;
}

inline std::string histogram_to_csv(const Histogram& h) {
    std::string out = "bin_lo,bin_hi,count_label0,count_label1\n";
    for (size_t i = 0; i < Histogram::kBins; ++i) {
        out += fmt_double(static_cast<double>(i) / Histogram::kBins);
        out += ',';
        out += fmt_double(static_cast<double>(i + 1) / Histogram::kBins);
        out += ',';
        out += std::to_string(h.counts[i][0]);
        out += ',';
        out += std::to_string(h.counts[i][1]);
        out += '\n';
    }
    return out;
}

}  // namespace spurlex
