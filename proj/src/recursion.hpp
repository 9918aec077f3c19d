#pragma once

// Shared filtering kernel. Used by the public filter and by the likelihood
// evaluator, which must not allocate per call.

#include "mapvol/model.hpp"

#include <cmath>
#include <cstddef>
#include <span>

namespace mapvol::detail {

struct RecursionInputs {
    std::span<const double> rv;
    std::span<const double> neg;
    std::span<const double> xc;
    std::span<const double> dc;
    double init_level = 0.0;
};

inline RecursionInputs make_inputs(const Panel& panel, const CenteredCovariates& cov) {
    return {panel.rv(), panel.negative(), cov.xc, cov.dc, cov.init_level};
}

inline double logistic(double z) noexcept {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

template <ModelKind K>
inline double compose(double sigma, double xi) noexcept {
    if constexpr (K == ModelKind::LMAP) {
        return 2.0 * sigma * logistic(xi);
    } else if constexpr (K == ModelKind::PMAP) {
        return sigma * xi;
    } else {
        return sigma + xi;
    }
}

template <ModelKind K>
inline double initial_xi() noexcept {
    return K == ModelKind::PMAP ? 1.0 : 0.0;
}

/// Runs the recursion with already-effective parameters, calling
/// visit(t, sigma, xi, mu) per day. Returns the first invalid index, or n.
template <ModelKind K, class Visit>
std::size_t run_recursion(const ParamSet& p, const RecursionInputs& in, Visit&& visit) {
    const std::size_t n = in.rv.size();
    const double xi_const = K == ModelKind::PMAP ? 1.0 - p.psi : 0.0;
    double sigma = in.init_level;
    double xi = initial_xi<K>();
    double mu = compose<K>(sigma, xi);
    if (!(mu > 0.0) || !std::isfinite(mu)) return 0;
    visit(std::size_t{0}, sigma, xi, mu);
    for (std::size_t t = 1; t < n; ++t) {
        const double r = in.rv[t - 1];
        sigma = p.omega + p.alpha * r + p.beta * sigma + p.gamma * in.neg[t - 1] * r;
        if constexpr (K != ModelKind::AMEM) {
            xi = xi_const + p.delta * in.xc[t - 1] + p.phi * in.dc[t] + p.psi * xi;
        }
        mu = compose<K>(sigma, xi);
        if (!(mu > 0.0) || !std::isfinite(mu) || !std::isfinite(sigma)) return t;
        visit(t, sigma, xi, mu);
    }
    return n;
}

template <class Visit>
std::size_t dispatch_recursion(ModelKind kind, const ParamSet& effective, const RecursionInputs& in,
                               Visit&& visit) {
    switch (kind) {
        case ModelKind::AMEM:
            return run_recursion<ModelKind::AMEM>(effective, in, visit);
        case ModelKind::XMAP:
            return run_recursion<ModelKind::XMAP>(effective, in, visit);
        case ModelKind::MAP:
            return run_recursion<ModelKind::MAP>(effective, in, visit);
        case ModelKind::LMAP:
            return run_recursion<ModelKind::LMAP>(effective, in, visit);
        case ModelKind::PMAP:
            return run_recursion<ModelKind::PMAP>(effective, in, visit);
    }
    return 0;
}

}  // namespace mapvol::detail
