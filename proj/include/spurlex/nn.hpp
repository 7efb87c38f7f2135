#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "spurlex/error.hpp"
#include "spurlex/rng.hpp"

namespace spurlex {

/// Row-major dense matrix of doubles.
struct Mat {
    size_t rows = 0, cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(size_t r, size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

    double& at(size_t i, size_t j) { return a[i * cols + j]; }
    double at(size_t i, size_t j) const { return a[i * cols + j]; }
    bool empty() const { return a.empty(); }
};

struct LinearLayer {
    Mat w;                  // in × out
    std::vector<double> b;  // out
};

inline LinearLayer make_linear(size_t in, size_t out, Rng& rng) {
    LinearLayer l;
    l.w = Mat(in, out);
    l.b.assign(out, 0.0);
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    for (double& x : l.w.a) x = rng.normal(0.0, scale);
    return l;
}

inline Mat make_embedding(size_t rows, size_t cols, Rng& rng) {
    Mat m(rows, cols);
    for (double& x : m.a) x = rng.normal(0.0, 0.1);
    return m;
}

/// y = W^T x + b
inline std::vector<double> linear_forward(const LinearLayer& l,
                                          const std::vector<double>& x) {
    std::vector<double> y(l.b);
    for (size_t i = 0; i < l.w.rows; ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        const double* row = &l.w.a[i * l.w.cols];
        for (size_t j = 0; j < l.w.cols; ++j) y[j] += xi * row[j];
    }
    return y;
}

inline std::vector<double> tanh_vec(const std::vector<double>& x) {
    std::vector<double> y(x.size());
    for (size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
    return y;
}

inline std::vector<double> softmax(const std::vector<double>& logits) {
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

/// Adam with one shared step counter. Embedding tables use the row-sparse
/// update: only rows with a gradient move, with bias correction taken from
/// the global step (the lazy variant common for large embeddings).
class AdamOpt {
public:
    AdamOpt(double lr, double beta1 = 0.9, double beta2 = 0.999,
            double eps = 1e-8)
        : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}

    void begin_step() { ++t_; }
    int64_t step_count() const { return t_; }

    struct Moments {
        std::vector<double> m, v;
        void ensure(size_t n) {
            if (m.size() != n) {
                m.assign(n, 0.0);
                v.assign(n, 0.0);
            }
        }
    };

    void update(std::vector<double>& w, const std::vector<double>& g,
                double scale, Moments& mom) {
        mom.ensure(w.size());
        const double corr =
            std::sqrt(1.0 - std::pow(b2_, static_cast<double>(t_))) /
            (1.0 - std::pow(b1_, static_cast<double>(t_)));
        for (size_t i = 0; i < w.size(); ++i) {
            const double gi = g[i] * scale;
            mom.m[i] = b1_ * mom.m[i] + (1.0 - b1_) * gi;
            mom.v[i] = b2_ * mom.v[i] + (1.0 - b2_) * gi * gi;
            w[i] -= lr_ * corr * mom.m[i] / (std::sqrt(mom.v[i]) + eps_);
        }
    }

    void update_rows(Mat& table,
                     const std::map<uint32_t, std::vector<double>>& row_grads,
                     double scale, Moments& mom) {
        mom.ensure(table.a.size());
        const double corr =
            std::sqrt(1.0 - std::pow(b2_, static_cast<double>(t_))) /
            (1.0 - std::pow(b1_, static_cast<double>(t_)));
        for (const auto& [row, g] : row_grads) {
            double* w = &table.a[static_cast<size_t>(row) * table.cols];
            double* m = &mom.m[static_cast<size_t>(row) * table.cols];
            double* v = &mom.v[static_cast<size_t>(row) * table.cols];
            for (size_t j = 0; j < table.cols; ++j) {
                const double gj = g[j] * scale;
                m[j] = b1_ * m[j] + (1.0 - b1_) * gj;
                v[j] = b2_ * v[j] + (1.0 - b2_) * gj * gj;
                w[j] -= lr_ * corr * m[j] / (std::sqrt(v[j]) + eps_);
            }
        }
    }

private:
    double lr_, b1_, b2_, eps_;
    int64_t t_ = 0;
};

}  // namespace spurlex
