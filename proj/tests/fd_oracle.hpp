#pragma once

// Central finite differences, independent of the tape. Tests compare these
// against autodiff gradients.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "semcomm/ops.hpp"
#include "semcomm/random.hpp"
#include "semcomm/tensor.hpp"

namespace fd {

using semcomm::ad::Tensor;

inline Tensor random_tensor(semcomm::ad::Shape shape, semcomm::Rng& rng, double lo = -2.0, double hi = 2.0,
                            bool requires_grad = true) {
    Tensor t = Tensor::zeros(std::move(shape), requires_grad);
    for (double& v : t.data()) v = rng.uniform(lo, hi);
    return t;
}

/// Numeric d(f)/d(input) for every element of every input. `f` must be a
/// scalar-valued function of the current input data.
inline std::vector<std::vector<double>> numeric_grads(const std::function<double()>& f,
                                                      std::vector<Tensor> inputs, double h = 1e-5) {
    std::vector<std::vector<double>> out;
    for (auto& t : inputs) {
        std::vector<double> g(t.size());
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double saved = t[i];
            t[i] = saved + h;
            const double up = f();
            t[i] = saved - h;
            const double down = f();
            t[i] = saved;
            g[i] = (up - down) / (2.0 * h);
        }
        out.push_back(std::move(g));
    }
    return out;
}

struct Report {
    double worst_rel = 0.0;
    std::size_t failures = 0;
    std::size_t checked = 0;
    std::string first_failure;
    bool ok() const { return failures == 0; }
};

/// Relative error with an absolute floor: passes when |a-n| <= abs_floor or
/// |a-n| / max(|a|,|n|) < rel_tol.
inline void compare(Report& r, const std::string& what, std::span<const double> analytic,
                    std::span<const double> numeric, double rel_tol, double abs_floor) {
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double a = analytic[i], n = numeric[i];
        const double diff = std::abs(a - n);
        ++r.checked;
        if (diff <= abs_floor) continue;
        const double rel = diff / std::max(std::abs(a), std::abs(n));
        r.worst_rel = std::max(r.worst_rel, rel);
        if (rel >= rel_tol) {
            if (r.failures == 0) {
                r.first_failure = what + "[" + std::to_string(i) + "]: autodiff " + std::to_string(a) +
                                  " vs numeric " + std::to_string(n);
            }
            ++r.failures;
        }
    }
}

/// Projects a tensor-valued forward onto a fixed random direction to get a
/// scalar, then checks every input gradient against central differences.
inline Report check(const std::function<Tensor()>& forward, std::vector<Tensor> inputs, semcomm::Rng& rng,
                    double rel_tol = 1e-4, double abs_floor = 1e-7, double h = 1e-5) {
    Tensor probe;
    {
        semcomm::ad::NoGradGuard ng;
        Tensor y = forward();
        probe = random_tensor(y.shape(), rng, -1.0, 1.0, false);
    }
    auto scalar = [&]() {
        semcomm::ad::NoGradGuard ng;
        Tensor y = forward();
        double s = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * probe[i];
        return s;
    };
    for (auto& t : inputs) t.zero_grad();
    semcomm::ad::tape().clear();
    Tensor loss = semcomm::ad::sum(semcomm::ad::mul(forward(), probe));
    semcomm::ad::backward(loss);
    auto numeric = numeric_grads(scalar, inputs, h);
    Report r;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        compare(r, "input" + std::to_string(k), inputs[k].grad(), numeric[k], rel_tol, abs_floor);
    }
    return r;
}

}  // namespace fd
