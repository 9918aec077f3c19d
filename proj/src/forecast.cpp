#include "mapvol/forecast.hpp"

#include "mapvol/error.hpp"
#include "mapvol/parallel.hpp"
#include "recursion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace mapvol {

std::string_view to_string(XRule r) noexcept {
    switch (r) {
        case XRule::Hold: return "hold";
        case XRule::Mean: return "mean";
        case XRule::Path: return "path";
    }
    return "?";
}

std::string_view to_string(DeltaRule r) noexcept {
    return r == DeltaRule::Mean ? "mean" : "calendar";
}

std::string_view to_string(PolicyVariable v) noexcept { return v == PolicyVariable::Proxy ? "x" : "delta"; }

ForecastState make_state(const Panel& panel, const CenteredCovariates& cov, const FilterOutput& f, std::size_t origin) {
    if (!f.valid) throw PreconditionError("forecast origin needs a valid filter output");
    if (origin >= f.mu.size() || origin >= panel.size()) throw PreconditionError("forecast origin outside the filtered panel");
    ForecastState s;
    s.origin = origin;
    s.sigma = f.sigma[origin];
    s.xi = f.xi[origin];
    s.rv = panel.rv()[origin];
    s.negative = panel.negative()[origin];
    s.x = panel.x()[origin];
    s.x_bar = cov.x_bar;
    s.delta_bar = cov.delta_bar;
    return s;
}

namespace {

double compose(ModelKind kind, double sigma, double xi) {
    switch (kind) {
        case ModelKind::LMAP: return 2.0 * sigma * detail::logistic(xi);
        case ModelKind::PMAP: return sigma * xi;
        default: return sigma + xi;
    }
}

// Centered proxy entering step h (h >= 1 uses x_{t+h-1}).
double proxy_at(const ForecastState& s, const ForecastRules& r, std::size_t h) {
    double x = s.x;
    if (h >= 2) {
        switch (r.x_rule) {
            case XRule::Hold: x = s.x; break;
            case XRule::Mean: x = s.x_bar; break;
            case XRule::Path:
                if (!r.x_path.empty()) x = r.x_path[std::min(h - 2, r.x_path.size() - 1)];
                break;
        }
    }
    return x + r.x_shift - s.x_bar;
}

// Centered announcement flag entering step h (delta_{t+h}).
double announcement_at(const ForecastState& s, const ForecastRules& r, std::size_t h) {
    if (r.delta_rule == DeltaRule::Calendar && h - 1 < r.delta_calendar.size()) {
        return r.delta_calendar[h - 1] - s.delta_bar;
    }
    return 0.0;
}

void check_request(const ForecastState& s, const ForecastRules& r, std::size_t horizon, const ForecastOptions& o) {
    if (horizon < 1) throw PreconditionError("forecast horizon must be >= 1");
    if (horizon > o.max_horizon) {
        throw PreconditionError("forecast horizon " + std::to_string(horizon) + " exceeds the maximum " +
                                std::to_string(o.max_horizon));
    }
    if (!std::isfinite(s.sigma) || !std::isfinite(s.xi) || !(s.rv > 0.0)) {
        throw PreconditionError("forecast state is not finite");
    }
    if (r.x_rule == XRule::Path && r.x_path.empty()) throw PreconditionError("x rule 'path' needs future values");
    if (!(r.p_negative >= 0.0 && r.p_negative <= 1.0)) throw PreconditionError("p_negative must be in [0,1]");
}

}  // namespace

std::optional<std::size_t> convergence_horizon(std::span<const double> path, double tol) {
    if (path.size() < 2) throw PreconditionError("convergence horizon needs a path of length >= 2");
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        if (std::abs(path[i + 1] - path[i]) <= tol) return i + 1;
    }
    return std::nullopt;
}

ForecastPath multi_step_forecast(ModelKind kind, const ParamSet& params, const ForecastState& state,
                                 const ForecastRules& rules, std::size_t horizon, const ForecastOptions& options) {
    check_request(state, rules, horizon, options);
    const ParamSet p = effective_params(kind, params);
    const double xi_const = kind == ModelKind::PMAP ? 1.0 - p.psi : 0.0;

    ForecastPath path;
    path.kind = kind;
    path.origin = state.origin;
    path.horizon = horizon;
    path.rules = rules;
    path.tolerance = options.tolerance;
    path.mu.resize(horizon);
    path.sigma.resize(horizon);
    path.xi.resize(horizon);

    double sigma = p.omega + p.alpha * state.rv + p.beta * state.sigma + p.gamma * state.negative * state.rv;
    double xi = kind == ModelKind::AMEM ? 0.0 : state.xi;  // AMEM has no policy component
    const double news = p.alpha + p.gamma * rules.p_negative;
    for (std::size_t h = 1; h <= horizon; ++h) {
        if (h >= 2) sigma = p.omega + news * path.mu[h - 2] + p.beta * sigma;
        if (kind != ModelKind::AMEM) {
            xi = xi_const + p.delta * proxy_at(state, rules, h) + p.phi * announcement_at(state, rules, h) + p.psi * xi;
        }
        const double mu = compose(kind, sigma, xi);
        if (!(mu > 0.0) || !std::isfinite(mu)) {
            throw NumericalError("forecast of " + std::string(to_string(kind)) + " not positive at step " +
                                 std::to_string(h));
        }
        path.mu[h - 1] = mu;
        path.sigma[h - 1] = sigma;
        path.xi[h - 1] = xi;
    }
    if (horizon >= 2) path.convergence_horizon = convergence_horizon(path.mu, options.tolerance);
    return path;
}

ForecastPath monte_carlo_forecast(ModelKind kind, const ParamSet& params, const ForecastState& state,
                                  const ForecastRules& rules, std::size_t horizon, const MonteCarloOptions& mc,
                                  const ForecastOptions& options) {
    check_request(state, rules, horizon, options);
    if (mc.draws == 0) throw PreconditionError("Monte Carlo mode needs at least one draw");
    const ParamSet p = effective_params(kind, params);
    const double xi_const = kind == ModelKind::PMAP ? 1.0 - p.psi : 0.0;

    // Fixed chunking keeps the summation order independent of the thread count.
    constexpr std::size_t kChunks = 64;
    const std::size_t chunks = std::min(kChunks, mc.draws);
    std::vector<std::vector<double>> sums(chunks, std::vector<double>(horizon, 0.0));
    std::vector<std::vector<double>> sigma_sums(chunks, std::vector<double>(horizon, 0.0));
    std::vector<std::vector<double>> xi_sums(chunks, std::vector<double>(horizon, 0.0));

    parallel_for(chunks, mc.threads, [&](std::size_t c) {
        for (std::size_t d = c; d < mc.draws; d += chunks) {
            std::seed_seq seq{static_cast<std::uint32_t>(mc.seed), static_cast<std::uint32_t>(mc.seed >> 32),
                              static_cast<std::uint32_t>(d), static_cast<std::uint32_t>(d >> 32)};
            std::mt19937_64 rng(seq);
            std::gamma_distribution<double> innovation(p.shape, 1.0 / p.shape);
            std::bernoulli_distribution coin(rules.p_negative);
            std::normal_distribution<double> step(0.0, mc.x_step_sd > 0.0 ? mc.x_step_sd : 1.0);

            double sigma = 0.0;
            double xi = kind == ModelKind::AMEM ? 0.0 : state.xi;
            double prev_rv = state.rv;
            double prev_neg = state.negative;
            double prev_sigma = state.sigma;
            double x_walk = state.x;
            for (std::size_t h = 1; h <= horizon; ++h) {
                sigma = p.omega + p.alpha * prev_rv + p.beta * prev_sigma + p.gamma * prev_neg * prev_rv;
                double xc = proxy_at(state, rules, h);
                if (mc.x_step_sd > 0.0 && h >= 2) {
                    x_walk += step(rng);
                    if (x_walk < 0.0) x_walk = -x_walk;
                    if (x_walk > 1.0) x_walk = 2.0 - x_walk;
                    xc += x_walk - state.x;
                }
                if (kind != ModelKind::AMEM) {
                    xi = xi_const + p.delta * xc + p.phi * announcement_at(state, rules, h) + p.psi * xi;
                }
                const double mu = compose(kind, sigma, xi);
                if (!(mu > 0.0) || !std::isfinite(mu)) {
                    throw NumericalError("simulated forecast not positive at step " + std::to_string(h));
                }
                sums[c][h - 1] += mu;
                sigma_sums[c][h - 1] += sigma;
                xi_sums[c][h - 1] += xi;
                prev_rv = mu * innovation(rng);
                prev_neg = coin(rng) ? 1.0 : 0.0;
                prev_sigma = sigma;
            }
        }
    });

    ForecastPath path;
    path.kind = kind;
    path.origin = state.origin;
    path.horizon = horizon;
    path.rules = rules;
    path.tolerance = options.tolerance;
    path.mu.assign(horizon, 0.0);
    path.sigma.assign(horizon, 0.0);
    path.xi.assign(horizon, 0.0);
    const double n = static_cast<double>(mc.draws);
    for (std::size_t c = 0; c < chunks; ++c) {
        for (std::size_t h = 0; h < horizon; ++h) {
            path.mu[h] += sums[c][h];
            path.sigma[h] += sigma_sums[c][h];
            path.xi[h] += xi_sums[c][h];
        }
    }
    for (std::size_t h = 0; h < horizon; ++h) {
        path.mu[h] /= n;
        path.sigma[h] /= n;
        path.xi[h] /= n;
    }
    if (horizon >= 2) path.convergence_horizon = convergence_horizon(path.mu, options.tolerance);
    return path;
}

IrfPath impulse_response(ModelKind kind, const ParamSet& params, const ForecastState& state, const ForecastRules& rules,
                         std::size_t horizon, double shock, const ForecastOptions& options) {
    IrfPath irf;
    irf.shock = shock;
    irf.baseline = multi_step_forecast(kind, params, state, rules, horizon, options);
    ForecastRules shocked = rules;
    shocked.x_shift += shock;
    try {
        irf.shocked = multi_step_forecast(kind, params, state, shocked, horizon, options);
    } catch (const NumericalError& e) {
        throw NumericalError(std::string("shocked path invalid: ") + e.what());
    }
    irf.diff.resize(horizon);
    for (std::size_t h = 0; h < horizon; ++h) irf.diff[h] = irf.shocked.mu[h] - irf.baseline.mu[h];
    return irf;
}

double default_shock(const Panel& panel, IndexRange window) {
    if (window.size() < 2 || window.end > panel.size()) throw PreconditionError("shock window needs >= 2 days");
    const auto x = panel.x().subspan(window.begin, window.size());
    const double n = static_cast<double>(x.size());
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / (n - 1.0));
}

MarginalEffect marginal_effects(ModelKind kind, const ParamSet& params, const FilterOutput& f, const Panel& panel,
                                IndexRange window, PolicyVariable variable, int tau) {
    if (kind == ModelKind::AMEM) throw PreconditionError("AMEM has no policy variables");
    if (tau < 0) throw PreconditionError("marginal-effect horizon must be >= 0");
    const ParamSet p = effective_params(kind, params);
    MarginalEffect me;
    me.kind = kind;
    me.variable = variable;
    me.tau = tau;
    me.kappa = variable == PolicyVariable::Proxy ? p.delta : p.phi;
    const double decay = std::pow(p.psi, tau);

    if (kind == ModelKind::MAP || kind == ModelKind::XMAP) {
        me.value = me.kappa * decay;
        return me;
    }
    if (!f.valid || f.mu.size() != panel.size()) throw PreconditionError("marginal effects need a valid filter output");
    if (window.end > panel.size()) throw PreconditionError("marginal-effect window outside the panel");
    me.time_varying = true;
    const auto lag = static_cast<std::size_t>(tau);
    const std::size_t first = std::max<std::size_t>(window.begin, 1);
    for (std::size_t t = first; t + lag < window.end; ++t) {
        if (variable == PolicyVariable::Announcement && panel.delta()[t] == 0.0) continue;
        const std::size_t s = t + lag;
        double v = 0.0;
        if (kind == ModelKind::LMAP) {
            const double l = detail::logistic(f.xi[s]);
            v = 2.0 * f.sigma[s] * me.kappa * decay * l * (1.0 - l);
        } else {
            v = me.kappa * decay * f.sigma[s];
        }
        me.days.push_back(t);
        me.series.push_back(v);
    }
    if (me.series.empty()) {
        throw PreconditionError(variable == PolicyVariable::Announcement
                                    ? "no announcement days in the window: average undefined"
                                    : "marginal-effect window is empty");
    }
    me.value = std::accumulate(me.series.begin(), me.series.end(), 0.0) / static_cast<double>(me.series.size());
    return me;
}

}  // namespace mapvol
