// Test-only reference computations, independent of the graph engine.
#pragma once

#include "pinn/net.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

// |a - b| within `abs_tol`, or within `rel_tol` of the larger magnitude.
inline bool close(double a, double b, double rel_tol, double abs_tol = 0.0) {
    const double diff = std::abs(a - b);
    return diff <= abs_tol || diff <= rel_tol * std::max(std::abs(a), std::abs(b));
}

inline double central_diff(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double act(pinn::net::Activation a, double v) {
    switch (a) {
    case pinn::net::Activation::tanh: return std::tanh(v);
    case pinn::net::Activation::relu: return v > 0.0 ? v : 0.0;
    case pinn::net::Activation::linear: return v;
    }
    return v;
}

// Straight-line h_i = act(sum_j W_ij h_{i-1,j} + b_i), one sample.
inline std::vector<double> mlp(const pinn::net::MlpSpec& spec, const pinn::net::MlpParams& p,
                               std::vector<double> h) {
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        const auto& layer = p.layers[l];
        const auto a = l + 1 == p.layers.size() ? spec.output : spec.hidden;
        std::vector<double> next(static_cast<std::size_t>(layer.weight.rows()));
        for (std::size_t i = 0; i < next.size(); ++i) {
            double s = layer.bias(static_cast<Eigen::Index>(i));
            for (std::size_t j = 0; j < h.size(); ++j) {
                s += layer.weight(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * h[j];
            }
            next[i] = act(a, s);
        }
        h = std::move(next);
    }
    return h;
}

// Every scalar of a parameter set, in a fixed order, for perturbation.
inline std::vector<double*> scalars(pinn::net::MlpParams& p) {
    std::vector<double*> out;
    for (auto& l : p.layers) {
        for (Eigen::Index i = 0; i < l.weight.size(); ++i) out.push_back(l.weight.data() + i);
        for (Eigen::Index i = 0; i < l.bias.size(); ++i) out.push_back(l.bias.data() + i);
    }
    return out;
}

inline std::vector<const double*> scalars(const pinn::net::MlpParams& p) {
    std::vector<const double*> out;
    for (const auto& l : p.layers) {
        for (Eigen::Index i = 0; i < l.weight.size(); ++i) out.push_back(l.weight.data() + i);
        for (Eigen::Index i = 0; i < l.bias.size(); ++i) out.push_back(l.bias.data() + i);
    }
    return out;
}

}  // namespace oracle
