#include "mapvol/model.hpp"

#include "mapvol/error.hpp"
#include "recursion.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace mapvol {

std::string_view to_string(ModelKind kind) noexcept {
    switch (kind) {
        case ModelKind::AMEM: return "AMEM";
        case ModelKind::XMAP: return "XMAP";
        case ModelKind::MAP: return "MAP";
        case ModelKind::LMAP: return "LMAP";
        case ModelKind::PMAP: return "PMAP";
    }
    return "?";
}

ModelKind parse_model_kind(std::string_view name) {
    std::string key;
    for (char c : name) {
        if (c == '-' || c == '_' || c == ' ') continue;
        key.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
    for (ModelKind k : kAllModelKinds) {
        if (key == to_string(k)) return k;
    }
    throw UsageError("unknown model kind '" + std::string(name) + "'");
}

bool has_policy_terms(ModelKind kind) noexcept { return kind != ModelKind::AMEM; }

bool is_additive(ModelKind kind) noexcept {
    return kind == ModelKind::AMEM || kind == ModelKind::XMAP || kind == ModelKind::MAP;
}

std::size_t free_parameter_count(ModelKind kind) noexcept {
    switch (kind) {
        case ModelKind::AMEM: return 5;
        case ModelKind::XMAP: return 7;
        default: return 8;
    }
}

ParamSet effective_params(ModelKind kind, const ParamSet& p) noexcept {
    ParamSet e = p;
    if (kind == ModelKind::AMEM) {
        e.delta = 0.0;
        e.phi = 0.0;
        e.psi = 0.0;
    } else if (kind == ModelKind::XMAP) {
        e.psi = e.beta;
    }
    return e;
}

std::vector<std::string> parameter_names(ModelKind kind) {
    switch (kind) {
        case ModelKind::AMEM: return {"omega", "alpha", "beta", "gamma", "shape"};
        case ModelKind::XMAP: return {"omega", "alpha", "beta", "gamma", "delta", "phi", "shape"};
        default: return {"omega", "alpha", "beta", "gamma", "delta", "phi", "psi", "shape"};
    }
}

std::vector<double> free_parameters(ModelKind kind, const ParamSet& p) {
    switch (kind) {
        case ModelKind::AMEM: return {p.omega, p.alpha, p.beta, p.gamma, p.shape};
        case ModelKind::XMAP: return {p.omega, p.alpha, p.beta, p.gamma, p.delta, p.phi, p.shape};
        default: return {p.omega, p.alpha, p.beta, p.gamma, p.delta, p.phi, p.psi, p.shape};
    }
}

ParamSet from_free_parameters(ModelKind kind, std::span<const double> v) {
    if (v.size() != free_parameter_count(kind)) {
        throw PreconditionError("expected " + std::to_string(free_parameter_count(kind)) + " parameters for " +
                                std::string(to_string(kind)));
    }
    ParamSet p;
    p.omega = v[0];
    p.alpha = v[1];
    p.beta = v[2];
    p.gamma = v[3];
    switch (kind) {
        case ModelKind::AMEM:
            p.shape = v[4];
            break;
        case ModelKind::XMAP:
            p.delta = v[4];
            p.phi = v[5];
            p.shape = v[6];
            break;
        default:
            p.delta = v[4];
            p.phi = v[5];
            p.psi = v[6];
            p.shape = v[7];
            break;
    }
    return effective_params(kind, p);
}

ConstraintReport check_constraints(ModelKind kind, const ParamSet& raw) {
    const ParamSet p = effective_params(kind, raw);
    ConstraintReport r;
    r.positivity = p.omega >= 0.0 && p.alpha >= 0.0 && p.beta >= 0.0 && p.shape > 0.0;
    r.stationarity = p.persistence() < 1.0 && p.psi < 1.0;
    if (kind == ModelKind::MAP || kind == ModelKind::LMAP || kind == ModelKind::PMAP) {
        r.identification = p.psi > 0.0 && p.psi < p.beta && p.beta < 1.0;
    }
    r.gamma_negative = p.gamma < 0.0;
    return r;
}

FilterOutput filter(ModelKind kind, const ParamSet& params, const Panel& panel, const CenteredCovariates& cov) {
    if (cov.xc.size() != panel.size() || cov.dc.size() != panel.size()) {
        throw PreconditionError("covariates do not match the panel length");
    }
    if (!(params.omega >= 0.0 && params.alpha >= 0.0 && params.beta >= 0.0 && params.shape > 0.0)) {
        throw PreconditionError("filter needs omega, alpha, beta >= 0 and shape > 0");
    }
    const std::size_t n = panel.size();
    FilterOutput out;
    out.sigma.reserve(n);
    out.xi.reserve(n);
    out.mu.reserve(n);
    out.eps.reserve(n);
    const auto rv = panel.rv();
    const std::size_t stop = detail::dispatch_recursion(
        kind, effective_params(kind, params), detail::make_inputs(panel, cov),
        [&](std::size_t t, double sigma, double xi, double mu) {
            out.sigma.push_back(sigma);
            out.xi.push_back(xi);
            out.mu.push_back(mu);
            out.eps.push_back(rv[t] / mu);
        });
    if (stop < n) {
        out.valid = false;
        out.invalid_index = stop;
        out.diagnostic = "conditional mean not positive and finite at index " + std::to_string(stop);
    }
    return out;
}

double unconditional_mean(ModelKind kind, const ParamSet& params) {
    const ParamSet p = effective_params(kind, params);
    const double persistence = p.persistence();
    if (!(persistence < 1.0)) {
        throw PreconditionError("persistence alpha + beta + gamma/2 = " + std::to_string(persistence) +
                                " is not below one");
    }
    return p.omega / (1.0 - persistence);
}

PolicyShare policy_share(ModelKind kind, const FilterOutput& f, std::size_t first) {
    if (!is_additive(kind)) {
        throw PreconditionError("policy share is defined for the additive decomposition only, not " +
                                std::string(to_string(kind)));
    }
    if (!f.valid) throw PreconditionError("policy share needs a valid filter output");
    PolicyShare s;
    s.share.resize(f.mu.size());
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t t = 0; t < f.mu.size(); ++t) {
        s.share[t] = f.xi[t] / f.mu[t];
        if (t >= first) {
            sum += s.share[t];
            ++count;
        }
    }
    s.average = count > 0 ? sum / static_cast<double>(count) : 0.0;
    return s;
}

void write_components(std::ostream& out, const Panel& panel, const FilterOutput& f) {
    out << "date,sigma,xi,mu,eps\n";
    char buf[160];
    for (std::size_t t = 0; t < f.mu.size(); ++t) {
        std::snprintf(buf, sizeof buf, "%.15g,%.15g,%.15g,%.15g", f.sigma[t], f.xi[t], f.mu[t], f.eps[t]);
        out << format_date(panel.dates()[t]) << ',' << buf << '\n';
    }
}

}  // namespace mapvol
