#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "bdris/rng.hpp"
#include "bdris/tensor.hpp"

namespace testutil {

using bdris::Rng;
using bdris::ad::Tape;
using bdris::ad::Tensor;

struct GradCheck {
    double max_abs = 0.0;
    double worst_analytic = 0.0;
    double worst_fd = 0.0;
    bool ok = true;
};

/// Central finite-difference check of reverse-mode gradients. `f` must build
/// a scalar from the tracked inputs and be a pure function of their values.
inline GradCheck gradcheck(const std::function<Tensor(Tape&, std::vector<Tensor>&)>& f,
                           std::vector<Tensor> inputs, double rtol = 1e-4, double atol = 1e-7,
                           double step = 1e-6) {
    Tape tape;
    std::vector<Tensor> tracked;
    tracked.reserve(inputs.size());
    for (auto& in : inputs) tracked.push_back(tape.var(in));
    Tensor loss = f(tape, tracked);
    auto grads = tape.backward(loss);

    GradCheck res;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const Tensor* g = grads.find(tracked[i]);
        for (std::size_t k = 0; k < inputs[i].size(); ++k) {
            double analytic = g ? (*g)[k] : 0.0;
            auto eval = [&](double delta) {
                std::vector<Tensor> pert = inputs;
                pert[i][k] += delta;
                Tape t2;
                std::vector<Tensor> tr2;
                tr2.reserve(pert.size());
                for (auto& in : pert) tr2.push_back(t2.var(in));
                return f(t2, tr2).value();
            };
            double fd = (eval(step) - eval(-step)) / (2.0 * step);
            double err = std::fabs(analytic - fd);
            double tol = atol + rtol * std::max(std::fabs(analytic), std::fabs(fd));
            if (err > res.max_abs) {
                res.max_abs = err;
                res.worst_analytic = analytic;
                res.worst_fd = fd;
            }
            if (err > tol) res.ok = false;
        }
    }
    return res;
}

inline Tensor random_tensor(Rng& rng, std::size_t rows, std::size_t cols, double lo = -1.0,
                            double hi = 1.0) {
    Tensor t = Tensor::zeros(rows, cols);
    for (double& v : t.data()) v = rng.uniform(lo, hi);
    return t;
}

/// Random values bounded away from zero (for kinked ops like relu/abs).
inline Tensor random_away_from_zero(Rng& rng, std::size_t rows, std::size_t cols,
                                    double margin = 0.05) {
    Tensor t = Tensor::zeros(rows, cols);
    for (double& v : t.data()) {
        double x = rng.uniform(margin, 1.0);
        v = rng.uniform() < 0.5 ? -x : x;
    }
    return t;
}

inline Tensor random_symmetric(Rng& rng, std::size_t n, double scale = 1.0) {
    Tensor t = Tensor::zeros(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        t.at(i, i) = scale * rng.uniform(-1.0, 1.0);
        for (std::size_t j = 0; j < i; ++j) {
            double v = scale * rng.uniform(-1.0, 1.0);
            t.at(i, j) = v;
            t.at(j, i) = v;
        }
    }
    return t;
}

/// Random symmetric diagonally-dominant PD matrix.
inline Tensor random_spd(Rng& rng, std::size_t n, double scale = 1.0) {
    Tensor t = random_symmetric(rng, n, scale);
    for (std::size_t i = 0; i < n; ++i) t.at(i, i) += scale * (static_cast<double>(n) + 1.0);
    return t;
}

/// Cyclic-Jacobi eigenvalues of a real symmetric matrix. Test-only oracle,
/// independent of the Cholesky/LU paths used by the library.
inline std::vector<double> jacobi_eigenvalues(Tensor a, std::size_t sweeps = 64) {
    const std::size_t n = a.rows();
    for (std::size_t sweep = 0; sweep < sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a.at(p, q) * a.at(p, q);
        if (off < 1e-30) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = a.at(p, q);
                if (apq == 0.0) continue;
                double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    double akp = a.at(k, p), akq = a.at(k, q);
                    a.at(k, p) = c * akp - s * akq;
                    a.at(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double apk = a.at(p, k), aqk = a.at(q, k);
                    a.at(p, k) = c * apk - s * aqk;
                    a.at(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> eig(n);
    for (std::size_t i = 0; i < n; ++i) eig[i] = a.at(i, i);
    return eig;
}

}  // namespace testutil
