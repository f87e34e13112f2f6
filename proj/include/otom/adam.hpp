#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace otom {

// Adaptive moment estimation with bias correction. Moments are
// zero-initialized; one step() per minibatch.
struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    std::vector<double> m;  // first moment
    std::vector<double> v;  // second moment
    long long t = 0;

    explicit AdamState(std::size_t n_params) : m(n_params, 0.0), v(n_params, 0.0) {}

    void step(std::vector<double>& params, const std::vector<double>& grads, double lr) {
        if (params.size() != m.size() || grads.size() != m.size()) {
            throw std::domain_error("adam: parameter/gradient size mismatch");
        }
        ++t;
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (std::size_t i = 0; i < params.size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * grads[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * grads[i] * grads[i];
            const double mhat = m[i] / c1;
            const double vhat = v[i] / c2;
            params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
};

}  // namespace otom
