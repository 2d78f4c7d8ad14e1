#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "grace/kernels.hpp"
#include "grace/rng.hpp"

namespace grace::nn {

using kernels::Matrix;

enum class Activation { Linear, ReLU, Sigmoid };

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct DenseLayer {
    Matrix w;                 // in x out
    std::vector<double> b;    // out

    DenseLayer() = default;
    DenseLayer(std::size_t in, std::size_t out) : w(in, out), b(out, 0.0) {}

    std::size_t in_dim() const { return w.rows; }
    std::size_t out_dim() const { return w.cols; }

    // He-style fan-in scaled uniform init.
    void init(Rng& rng) {
        const double bound = std::sqrt(6.0 / static_cast<double>(w.rows));
        for (auto& v : w.data) v = rng.uniform(-bound, bound);
        for (auto& v : b) v = 0.0;
    }
};

struct DenseCache {
    Matrix input;
    Matrix pre;   // pre-activation
    Matrix out;
};

inline void apply_activation(Matrix& m, Activation a) {
    switch (a) {
        case Activation::Linear: break;
        case Activation::ReLU:
            for (auto& v : m.data) v = v > 0.0 ? v : 0.0;
            break;
        case Activation::Sigmoid:
            for (auto& v : m.data) v = sigmoid(v);
            break;
    }
}

inline Matrix dense_forward(const DenseLayer& layer, const Matrix& x, Activation act,
                            DenseCache* cache = nullptr) {
    Matrix y;
    kernels::matmul(x, layer.w, y);
    kernels::add_row_bias(y, layer.b);
    if (cache) {
        cache->input = x;
        cache->pre = y;
    }
    apply_activation(y, act);
    if (cache) cache->out = y;
    return y;
}

struct DenseGrad {
    Matrix dw;
    std::vector<double> db;
};

// d_out is dLoss/d(activation output). Returns dLoss/d(input).
inline Matrix dense_backward(const DenseLayer& layer, Activation act, const DenseCache& cache,
                             Matrix d_out, DenseGrad& grad) {
    switch (act) {
        case Activation::Linear: break;
        case Activation::ReLU:
            for (std::size_t i = 0; i < d_out.data.size(); ++i)
                if (cache.pre.data[i] <= 0.0) d_out.data[i] = 0.0;
            break;
        case Activation::Sigmoid:
            for (std::size_t i = 0; i < d_out.data.size(); ++i) {
                const double s = cache.out.data[i];
                d_out.data[i] *= s * (1.0 - s);
            }
            break;
    }
    kernels::matmul_tn(cache.input, d_out, grad.dw);
    kernels::col_sums(d_out, grad.db);
    Matrix d_in;
    kernels::matmul_nt(d_out, layer.w, d_in);
    return d_in;
}

// Adam over a flat view of parameters. weight_decay is classic L2 added to
// the gradient before the moment updates.
struct Adam {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-8;

    std::vector<double> m, v;
    std::int64_t t = 0;

    void step(std::vector<double>& params, const std::vector<double>& grads) {
        const std::size_t n = params.size();
        if (m.size() != n) {
            m.assign(n, 0.0);
            v.assign(n, 0.0);
        }
        ++t;
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (std::size_t i = 0; i < n; ++i) {
            const double g = grads[i] + weight_decay * params[i];
            m[i] = beta1 * m[i] + (1.0 - beta1) * g;
            v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
            params[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
        }
    }
};

}  // namespace grace::nn
