#include "mapvol/simulate.hpp"

#include "mapvol/error.hpp"
#include "recursion.hpp"

#include <cmath>
#include <string>

namespace mapvol {

ParamSet reference_params(ModelKind kind) {
    switch (kind) {
        case ModelKind::AMEM: return {0.857, 0.171, 0.708, 0.113, 0.0, 0.0, 0.0, 7.559};
        case ModelKind::XMAP: return {1.136, 0.165, 0.689, 0.120, -0.636, 1.297, 0.0, 7.728};
        case ModelKind::MAP: return {1.056, 0.154, 0.707, 0.117, -1.836, 2.817, 0.111, 7.817};
        case ModelKind::LMAP: return {1.011, 0.151, 0.712, 0.119, -0.297, 0.464, 0.194, 7.827};
        case ModelKind::PMAP: return {1.025, 0.153, 0.709, 0.119, -0.161, 0.231, 0.134, 7.820};
    }
    return {};
}

double gamma_draw(double shape, std::mt19937_64& stream) {
    std::gamma_distribution<double> g(shape, 1.0 / shape);
    return g(stream);
}

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
}

std::vector<Date> business_days(Date start, std::size_t n) {
    std::vector<Date> out;
    out.reserve(n);
    Date d = start;
    while (out.size() < n) {
        const std::chrono::weekday wd{d};
        if (wd != std::chrono::Saturday && wd != std::chrono::Sunday) out.push_back(d);
        d += std::chrono::days{1};
    }
    return out;
}

namespace {

void validate(const SimScenario& s) {
    if (s.length < 2) throw PreconditionError("simulation length must be >= 2");
    if (!(s.params.shape > 0.0)) throw PreconditionError("shape must be positive");
    const ConstraintReport c = check_constraints(s.kind, s.params);
    if (!c.positivity || !c.stationarity) {
        throw PreconditionError("scenario parameters violate positivity or stationarity for " +
                                std::string(to_string(s.kind)));
    }
    if (s.x_rule == XPathRule::User && s.x_user.size() != s.length) {
        throw PreconditionError("user x path must have one value per day");
    }
    if (s.x_rule != XPathRule::User && !(s.x0 >= 0.0 && s.x0 <= 1.0)) throw PreconditionError("x0 must be in [0,1]");
    if (s.announcement_rule == AnnouncementRule::User && s.announcement_user.size() != s.length) {
        throw PreconditionError("user announcement calendar must have one value per day");
    }
    if (s.announcement_rule == AnnouncementRule::EveryK && s.announcement_every == 0) {
        throw PreconditionError("announcement spacing must be >= 1");
    }
}

double reflect(double x) {
    while (x < 0.0 || x > 1.0) {
        if (x < 0.0) x = -x;
        if (x > 1.0) x = 2.0 - x;
    }
    return x;
}

}  // namespace

SimResult simulate_panel(const SimScenario& s) {
    validate(s);
    const std::size_t n = s.length;
    // Separate streams so that the covariates do not depend on the model kind.
    auto eps_stream = make_stream(s.seed, 0);
    auto sign_stream = make_stream(s.seed, 1);
    auto x_stream = make_stream(s.seed, 2);

    std::vector<double> x(n), delta(n, 0.0), ret(n), neg(n);
    switch (s.x_rule) {
        case XPathRule::Constant: x.assign(n, s.x0); break;
        case XPathRule::User: x = s.x_user; break;
        case XPathRule::RandomWalk: {
            std::normal_distribution<double> step(s.x_drift, s.x_step_sd);
            x[0] = s.x0;
            for (std::size_t t = 1; t < n; ++t) x[t] = reflect(x[t - 1] + step(x_stream));
            break;
        }
    }
    switch (s.announcement_rule) {
        case AnnouncementRule::None: break;
        case AnnouncementRule::User: delta = s.announcement_user; break;
        case AnnouncementRule::EveryK:
            for (std::size_t t = s.announcement_every - 1; t < n; t += s.announcement_every) delta[t] = 1.0;
            break;
    }
    std::bernoulli_distribution coin(0.5);
    std::uniform_real_distribution<double> magnitude(0.001, 0.02);
    for (std::size_t t = 0; t < n; ++t) {
        const bool down = coin(sign_stream);
        neg[t] = down ? 1.0 : 0.0;
        const double m = magnitude(sign_stream);
        ret[t] = down ? -m : m;
    }

    // Centering over the whole sample, as an estimation window spanning it would use.
    CenteredCovariates cov;
    cov.window = {0, n};
    {
        double sx = 0.0, sd = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            sx += x[t];
            sd += delta[t];
        }
        cov.x_bar = sx / static_cast<double>(n);
        cov.delta_bar = sd / static_cast<double>(n);
        cov.xc.resize(n);
        cov.dc.resize(n);
        for (std::size_t t = 0; t < n; ++t) {
            cov.xc[t] = x[t] - cov.x_bar;
            cov.dc[t] = delta[t] - cov.delta_bar;
        }
    }
    cov.init_level = unconditional_mean(s.kind, s.params);

    // The recursion reads rv_{t-1}; the visitor writes rv_t before it is needed.
    std::vector<double> rv(n, 0.0), eps(n, 0.0);
    FilterOutput truth;
    truth.sigma.resize(n);
    truth.xi.resize(n);
    truth.mu.resize(n);
    const detail::RecursionInputs in{rv, neg, cov.xc, cov.dc, cov.init_level};
    const std::size_t stop =
        detail::dispatch_recursion(s.kind, effective_params(s.kind, s.params), in,
                                   [&](std::size_t t, double sigma, double xi, double mu) {
                                       truth.sigma[t] = sigma;
                                       truth.xi[t] = xi;
                                       truth.mu[t] = mu;
                                       eps[t] = gamma_draw(s.params.shape, eps_stream);
                                       rv[t] = mu * eps[t];
                                   });
    if (stop != n) {
        throw NumericalError("conditional mean not positive at simulated day " + std::to_string(stop) +
                             "; reduce the policy coefficients or the proxy range");
    }
    for (std::size_t t = 0; t < n; ++t) {
        // Guard against an underflowed draw at tiny shapes; the panel requires rv > 0.
        if (!(rv[t] > 0.0)) throw NumericalError("simulated rv underflowed at day " + std::to_string(t));
    }
    truth.eps = eps;

    SimResult out{Panel::create(business_days(s.start, n), rv, ret, x, delta), std::move(truth), std::move(cov),
                  std::move(eps)};
    return out;
}

}  // namespace mapvol
