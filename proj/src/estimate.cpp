#include "mapvol/estimate.hpp"

#include "mapvol/error.hpp"
#include "mapvol/optim.hpp"
#include "mapvol/parallel.hpp"
#include "recursion.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace mapvol {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_gamma(double x) { return boost::math::lgamma(x); }

double logit(double p) { return std::log(p / (1.0 - p)); }

bool has_psi(ModelKind kind) {
    return kind == ModelKind::MAP || kind == ModelKind::LMAP || kind == ModelKind::PMAP;
}

}  // namespace

double gamma_loglik(const FilterOutput& f, double shape, const Panel& panel) {
    if (!f.valid || !(shape > 0.0) || f.mu.size() != panel.size()) return kNegInf;
    const double c = shape * std::log(shape) - log_gamma(shape);
    const auto rv = panel.rv();
    double total = 0.0;
    for (std::size_t t = 1; t < f.mu.size(); ++t) {
        total += c + (shape - 1.0) * std::log(rv[t]) - shape * std::log(f.mu[t]) - shape * rv[t] / f.mu[t];
    }
    return total;
}

std::vector<double> gamma_loglik_contributions(const FilterOutput& f, double shape, const Panel& panel) {
    if (!f.valid || !(shape > 0.0) || f.mu.size() != panel.size()) {
        throw PreconditionError("log-likelihood contributions need a valid filter output and shape > 0");
    }
    const double c = shape * std::log(shape) - log_gamma(shape);
    const auto rv = panel.rv();
    std::vector<double> out(f.mu.size() - 1);
    for (std::size_t t = 1; t < f.mu.size(); ++t) {
        out[t - 1] = c + (shape - 1.0) * std::log(rv[t]) - shape * std::log(f.mu[t]) - shape * rv[t] / f.mu[t];
    }
    return out;
}

InformationCriteria information_criteria(double loglik, std::size_t nobs, std::size_t k) {
    if (nobs == 0) throw PreconditionError("information criteria need at least one observation");
    const double n = static_cast<double>(nobs);
    const double kk = static_cast<double>(k);
    return {(-2.0 * loglik + 2.0 * kk) / n, (-2.0 * loglik + kk * std::log(n)) / n};
}

LjungBoxResult ljung_box(std::span<const double> e, std::span<const int> lags) {
    LjungBoxResult r;
    if (lags.empty()) return r;
    const int max_lag = *std::max_element(lags.begin(), lags.end());
    if (*std::min_element(lags.begin(), lags.end()) < 1) throw PreconditionError("Ljung-Box lags must be >= 1");
    if (e.size() <= static_cast<std::size_t>(max_lag)) {
        throw PreconditionError("residual series too short for Ljung-Box lag " + std::to_string(max_lag));
    }
    const double n = static_cast<double>(e.size());
    const double mean = std::accumulate(e.begin(), e.end(), 0.0) / n;
    double denom = 0.0;
    for (double v : e) denom += (v - mean) * (v - mean);
    if (!(denom > 0.0)) throw PreconditionError("constant residual series: autocorrelation undefined");

    std::vector<double> rho(static_cast<std::size_t>(max_lag) + 1, 0.0);
    for (int j = 1; j <= max_lag; ++j) {
        double acc = 0.0;
        for (std::size_t t = static_cast<std::size_t>(j); t < e.size(); ++t) {
            acc += (e[t] - mean) * (e[t - static_cast<std::size_t>(j)] - mean);
        }
        rho[static_cast<std::size_t>(j)] = acc / denom;
    }
    for (int m : lags) {
        double q = 0.0;
        for (int j = 1; j <= m; ++j) q += rho[static_cast<std::size_t>(j)] * rho[static_cast<std::size_t>(j)] / (n - j);
        q *= n * (n + 2.0);
        r.lags.push_back(m);
        r.statistic.push_back(q);
        r.pvalue.push_back(q > 0.0 ? boost::math::gamma_q(0.5 * m, 0.5 * q) : 1.0);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Reparameterization

Reparameterization::Reparameterization(ModelKind kind, PsiConstraint psi) : kind_(kind), psi_(psi) {}

std::size_t Reparameterization::size() const noexcept { return free_parameter_count(kind_); }

ParamSet Reparameterization::to_params(std::span<const double> u) const {
    ParamSet p;
    p.omega = std::exp(u[0]);
    const double persistence = detail::logistic(u[1]);
    const double news = persistence * detail::logistic(u[2]);
    const double half_gamma = news * std::tanh(u[3]);
    p.beta = persistence - news;
    p.alpha = news - half_gamma;
    p.gamma = 2.0 * half_gamma;
    std::size_t i = 4;
    if (has_policy_terms(kind_)) {
        p.delta = u[i++];
        p.phi = u[i++];
    }
    if (has_psi(kind_)) {
        p.psi = psi_ == PsiConstraint::Identified ? p.beta * detail::logistic(u[i]) : std::tanh(u[i]);
        ++i;
    }
    p.shape = std::exp(u[i]);
    return effective_params(kind_, p);
}

bool Reparameterization::interior(const ParamSet& raw) const noexcept {
    const ParamSet p = effective_params(kind_, raw);
    const double persistence = p.persistence();
    const double news = p.alpha + 0.5 * p.gamma;
    bool ok = p.omega > 0.0 && p.shape > 0.0 && std::isfinite(p.omega) && std::isfinite(p.shape) &&
              persistence > 0.0 && persistence < 1.0 && news > 0.0 && news < persistence &&
              std::abs(0.5 * p.gamma) < news && std::isfinite(p.delta) && std::isfinite(p.phi);
    if (has_psi(kind_)) {
        ok = ok && (psi_ == PsiConstraint::Identified ? (p.psi > 0.0 && p.psi < p.beta) : std::abs(p.psi) < 1.0);
    }
    return ok;
}

std::vector<double> Reparameterization::to_unconstrained(const ParamSet& raw) const {
    if (!interior(raw)) {
        throw PreconditionError(std::string("parameters outside the open feasible region of ") +
                                std::string(to_string(kind_)));
    }
    const ParamSet p = effective_params(kind_, raw);
    const double persistence = p.persistence();
    const double news = p.alpha + 0.5 * p.gamma;
    std::vector<double> u;
    u.reserve(size());
    u.push_back(std::log(p.omega));
    u.push_back(logit(persistence));
    u.push_back(logit(news / persistence));
    u.push_back(std::atanh(0.5 * p.gamma / news));
    if (has_policy_terms(kind_)) {
        u.push_back(p.delta);
        u.push_back(p.phi);
    }
    if (has_psi(kind_)) {
        u.push_back(psi_ == PsiConstraint::Identified ? logit(p.psi / p.beta) : std::atanh(p.psi));
    }
    u.push_back(std::log(p.shape));
    return u;
}

// ---------------------------------------------------------------------------
// QuasiLikelihood

QuasiLikelihood::QuasiLikelihood(ModelKind kind, const Panel& panel, IndexRange window)
    : kind_(kind), panel_(panel.slice(window)), cov_(center_covariates(panel_, IndexRange{0, panel_.size()})) {
    const auto rv = panel_.rv();
    for (std::size_t t = 1; t < rv.size(); ++t) sum_log_rv_ += std::log(rv[t]);
}

double QuasiLikelihood::loglik(const ParamSet& params) const {
    if (!(params.shape > 0.0) || !std::isfinite(params.shape)) return kNegInf;
    const ParamSet p = effective_params(kind_, params);
    const auto rv = panel_.rv();
    double acc = 0.0;
    const std::size_t stop =
        detail::dispatch_recursion(kind_, p, detail::make_inputs(panel_, cov_), [&](std::size_t t, double, double, double mu) {
            if (t > 0) acc += std::log(mu) + rv[t] / mu;
        });
    if (stop < panel_.size()) return kNegInf;
    const double n = static_cast<double>(contribution_count());
    const double c = p.shape * std::log(p.shape) - log_gamma(p.shape);
    const double total = n * c + (p.shape - 1.0) * sum_log_rv_ - p.shape * acc;
    return std::isfinite(total) ? total : kNegInf;
}

bool QuasiLikelihood::contributions(const ParamSet& params, std::vector<double>& out) const {
    if (!(params.shape > 0.0) || !std::isfinite(params.shape)) return false;
    const ParamSet p = effective_params(kind_, params);
    const auto rv = panel_.rv();
    const double c = p.shape * std::log(p.shape) - log_gamma(p.shape);
    out.resize(contribution_count());
    const std::size_t stop =
        detail::dispatch_recursion(kind_, p, detail::make_inputs(panel_, cov_), [&](std::size_t t, double, double, double mu) {
            if (t > 0) out[t - 1] = c + (p.shape - 1.0) * std::log(rv[t]) - p.shape * std::log(mu) - p.shape * rv[t] / mu;
        });
    return stop == panel_.size();
}

FilterOutput QuasiLikelihood::filter(const ParamSet& p) const { return mapvol::filter(kind_, p, panel_, cov_); }

std::function<double(std::span<const double>)> make_objective(const QuasiLikelihood& lik,
                                                               const Reparameterization& rep) {
    const double n = static_cast<double>(lik.contribution_count());
    return [&lik, &rep, n](std::span<const double> u) {
        for (double v : u) {
            if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
        }
        const double ll = lik.loglik(rep.to_params(u));
        return std::isfinite(ll) ? -ll / n : std::numeric_limits<double>::infinity();
    };
}

// ---------------------------------------------------------------------------
// Estimation

namespace {

ParamSet starting_values(const QuasiLikelihood& lik) {
    const auto rv = lik.panel().rv();
    const double mean = std::accumulate(rv.begin(), rv.end(), 0.0) / static_cast<double>(rv.size());
    ParamSet p;
    p.omega = mean * (1.0 - 0.9);
    p.alpha = 0.15;
    p.beta = 0.7;
    p.gamma = 0.05;
    p.delta = 0.0;
    p.phi = 0.0;
    p.psi = 0.1 * p.beta;
    p.shape = 1.0;

    ParamSet base = p;
    base.delta = base.phi = base.psi = 0.0;
    const FilterOutput f = mapvol::filter(ModelKind::AMEM, base, lik.panel(), lik.covariates());
    if (f.valid && f.eps.size() > 2) {
        const double n = static_cast<double>(f.eps.size() - 1);
        const double m = std::accumulate(f.eps.begin() + 1, f.eps.end(), 0.0) / n;
        double var = 0.0;
        for (std::size_t t = 1; t < f.eps.size(); ++t) var += (f.eps[t] - m) * (f.eps[t] - m);
        var /= n;
        if (var > 0.0) p.shape = std::clamp(m * m / var, 0.05, 1e4);
    }
    return p;
}

ParamSet adapt_warm_start(ModelKind kind, ParamSet w) {
    if (has_psi(kind) && !(w.psi > 0.0 && w.psi < w.beta)) w.psi = 0.1 * w.beta;
    return effective_params(kind, w);
}

struct StartOutcome {
    optim::OptimResult result;
    std::string method;
    bool converged = false;
};

StartOutcome run_start(const optim::Objective& objective, std::vector<double> u0, const FitOptions& options) {
    optim::BfgsOptions bo;
    bo.max_iterations = options.max_iterations;
    bo.gradient_tolerance = options.gradient_tolerance;
    StartOutcome out;
    out.result = optim::minimize_bfgs(objective, std::move(u0), bo);
    out.method = "bfgs";
    out.converged = out.result.converged;
    if (out.converged || !std::isfinite(out.result.value)) return out;

    optim::NelderMeadOptions no;
    const optim::OptimResult nm = optim::minimize_nelder_mead(objective, out.result.x, no);
    const optim::OptimResult polish = optim::minimize_bfgs(objective, nm.x, bo);
    const int iterations = out.result.iterations + nm.iterations + polish.iterations;
    const int evaluations = out.result.evaluations + nm.evaluations + polish.evaluations;
    out.method = "bfgs+nelder-mead+bfgs";
    out.result = polish.value <= nm.value ? polish : nm;
    out.result.iterations = iterations;
    out.result.evaluations = evaluations;
    out.converged = polish.converged || (nm.converged && polish.gradient_norm <= 1e3 * options.gradient_tolerance);
    if (polish.value > nm.value) out.result.gradient_norm = polish.gradient_norm;
    return out;
}

optim::Contributions natural_contributions(const QuasiLikelihood& lik) {
    return [&lik](std::span<const double> theta, std::vector<double>& out) {
        return lik.contributions(from_free_parameters(lik.kind(), theta), out);
    };
}

optim::SandwichResult sandwich_or_throw(const QuasiLikelihood& lik, const ParamSet& estimate) {
    const std::vector<double> theta = free_parameters(lik.kind(), estimate);
    try {
        return optim::sandwich(natural_contributions(lik), theta);
    } catch (const optim::SingularCurvature& s) {
        const auto names = parameter_names(lik.kind());
        throw NumericalError("singular Hessian for " + std::string(to_string(lik.kind())) +
                             ": flat direction along '" + names.at(s.direction) +
                             "' (eigenvalue " + std::to_string(s.eigenvalue) + ")");
    }
}

}  // namespace

EstimationResult fit(ModelKind kind, const Panel& panel, IndexRange window, const FitOptions& options) {
    if (window.end > panel.size() || window.begin >= window.end) {
        throw PreconditionError("estimation window outside the panel");
    }
    if (window.size() < std::max<std::size_t>(options.min_window, 3)) {
        throw PreconditionError("estimation window of " + std::to_string(window.size()) +
                                " days is below the floor of " + std::to_string(options.min_window));
    }
    if (options.starts < 1 && options.warm_starts.empty()) throw PreconditionError("at least one start is required");

    const QuasiLikelihood lik(kind, panel, window);
    const Reparameterization rep(kind, options.psi_constraint);
    const optim::Objective objective = make_objective(lik, rep);

    std::vector<std::vector<double>> starts;
    const std::vector<double> u0 = rep.to_unconstrained(adapt_warm_start(kind, starting_values(lik)));
    for (int s = 0; s < options.starts; ++s) {
        std::vector<double> u = u0;
        if (s > 0) {
            std::seed_seq seq{static_cast<std::uint32_t>(options.seed), static_cast<std::uint32_t>(options.seed >> 32),
                              static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(kind)};
            std::mt19937_64 rng(seq);
            std::normal_distribution<double> noise(0.0, 0.3);
            for (double& v : u) v += noise(rng);
        }
        starts.push_back(std::move(u));
    }
    for (const ParamSet& w : options.warm_starts) {
        const ParamSet adapted = adapt_warm_start(kind, w);
        if (rep.interior(adapted)) starts.push_back(rep.to_unconstrained(adapted));
    }

    std::vector<StartOutcome> outcomes(starts.size());
    parallel_for(starts.size(), options.threads,
                 [&](std::size_t i) { outcomes[i] = run_start(objective, starts[i], options); });

    int best = -1;
    int converged = 0;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (!outcomes[i].converged) continue;
        ++converged;
        if (best < 0 || outcomes[i].result.value < outcomes[static_cast<std::size_t>(best)].result.value) {
            best = static_cast<int>(i);
        }
    }
    if (best < 0) {
        bool any_finite = false;
        std::string why;
        for (const auto& o : outcomes) {
            any_finite = any_finite || std::isfinite(o.result.value);
            if (why.empty()) why = o.result.message;
        }
        if (!any_finite) throw NumericalError("all starting points are invalid for " + std::string(to_string(kind)));
        throw NumericalError("optimizer did not converge for " + std::string(to_string(kind)) + " (" + why + ")");
    }
    const StartOutcome& winner = outcomes[static_cast<std::size_t>(best)];

    EstimationResult r;
    r.kind = kind;
    r.window = window;
    r.params = rep.to_params(winner.result.x);
    r.names = parameter_names(kind);
    r.estimates = free_parameters(kind, r.params);
    r.k = free_parameter_count(kind);
    r.nobs = window.size();
    r.loglik = lik.loglik(r.params);
    const InformationCriteria ic = information_criteria(r.loglik, r.nobs, r.k);
    r.aic = ic.aic;
    r.bic = ic.bic;

    const optim::SandwichResult sw = sandwich_or_throw(lik, r.params);
    r.robust_se = sw.robust_se;
    r.hessian_se = sw.hessian_se;

    const FilterOutput f = lik.filter(r.params);
    const std::vector<double> resid(f.eps.begin() + 1, f.eps.end());
    std::vector<int> lags;
    for (int m : options.lb_lags) {
        if (m >= 1 && static_cast<std::size_t>(m) < resid.size()) lags.push_back(m);
    }
    r.ljung_box = ljung_box(resid, lags);

    ConvergenceReport& c = r.convergence;
    c.converged = true;
    c.iterations = winner.result.iterations;
    c.evaluations = winner.result.evaluations;
    c.gradient_norm = winner.result.gradient_norm;
    double g = 0.0;
    for (double v : sw.gradient) g = std::max(g, std::abs(v));
    c.natural_gradient_norm = g;
    c.method = winner.method;
    c.best_start = best;
    c.starts_converged = converged;
    c.constraints = check_constraints(kind, r.params);
    if (c.constraints.gamma_negative) c.notes.emplace_back("gamma < 0");
    if (!c.constraints.ok()) c.notes.emplace_back("constraint violated at the optimum");
    return r;
}

std::vector<FitOutcome> fit_all(std::span<const ModelKind> kinds, const Panel& panel, IndexRange window,
                                const FitOptions& options) {
    std::vector<FitOutcome> out;
    std::optional<EstimationResult> nested;
    std::string nested_error;
    if (!kinds.empty()) {
        try {
            nested = fit(ModelKind::AMEM, panel, window, options);
        } catch (const std::exception& e) {
            nested_error = e.what();
        }
    }
    for (ModelKind kind : kinds) {
        FitOutcome o;
        o.kind = kind;
        if (kind == ModelKind::AMEM) {
            if (nested) {
                o.result = nested;
            } else {
                o.error = nested_error;
            }
            out.push_back(std::move(o));
            continue;
        }
        FitOptions opts = options;
        if (nested) opts.warm_starts.push_back(nested->params);
        try {
            o.result = fit(kind, panel, window, opts);
        } catch (const std::exception& e) {
            o.error = e.what();
        }
        out.push_back(std::move(o));
    }
    return out;
}

LoglikGradient loglik_gradient(ModelKind kind, const ParamSet& params, const Panel& panel, IndexRange window) {
    const QuasiLikelihood lik(kind, panel, window);
    const double n = static_cast<double>(lik.contribution_count());
    const optim::Objective mean_ll = [&](std::span<const double> theta) {
        return lik.loglik(from_free_parameters(kind, theta)) / n;
    };
    const std::vector<double> theta = free_parameters(kind, params);
    LoglikGradient g;
    g.mean_loglik = mean_ll(theta);
    g.gradient.resize(theta.size());
    if (!std::isfinite(g.mean_loglik) || !optim::central_gradient(mean_ll, theta, g.gradient)) {
        throw PreconditionError("log-likelihood is not finite around the supplied parameters");
    }
    return g;
}

std::vector<double> robust_se(ModelKind kind, const ParamSet& estimate, const Panel& panel, IndexRange window,
                              const RobustSeOptions& options) {
    const LoglikGradient g = loglik_gradient(kind, estimate, panel, window);
    double norm = 0.0;
    for (double v : g.gradient) norm = std::max(norm, std::abs(v));
    if (!(norm <= options.gradient_tolerance)) {
        throw PreconditionError("robust standard errors need an interior optimum; gradient sup-norm is " +
                                std::to_string(norm));
    }
    const QuasiLikelihood lik(kind, panel, window);
    return sandwich_or_throw(lik, estimate).robust_se;
}

}  // namespace mapvol
