#include "mapvol/error.hpp"
#include "mapvol/forecast.hpp"
#include "mapvol/simulate.hpp"

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace mapvol;

namespace {

ForecastState state_at(double sigma, double xi, double rv, double negative) {
    ForecastState s;
    s.sigma = sigma;
    s.xi = xi;
    s.rv = rv;
    s.negative = negative;
    s.x = 0.3;
    s.x_bar = 0.3;
    return s;
}

}  // namespace

TEST_CASE("AMEM at its fixed point stays flat") {
    const ParamSet p{0.1, 0.2, 0.5, 0.1, 0, 0, 0, 5};
    const double m = unconditional_mean(ModelKind::AMEM, p);
    // D at its mean keeps the first step on the fixed point too.
    ForecastRules r;
    const auto path = multi_step_forecast(ModelKind::AMEM, p, state_at(m, 0.0, m, 0.5), r, 50);
    for (double v : path.mu) CHECK(v == doctest::Approx(m).epsilon(1e-14));
    CHECK(path.convergence_horizon.value() == 1);
}

TEST_CASE("XMAP hand recursion") {
    const ParamSet p{0.1, 0.2, 0.5, 0.1, -0.5, 0.3, 0, 5};
    const auto path = multi_step_forecast(ModelKind::XMAP, p, state_at(0.4, 0.0, 1.0, 1.0), {}, 400);
    CHECK(path.mu[0] == doctest::Approx(0.6).epsilon(1e-14));
    CHECK(path.mu[1] == doctest::Approx(0.55).epsilon(1e-14));
    CHECK(path.mu.back() == doctest::Approx(0.4).epsilon(1e-12));
    REQUIRE(path.mu.size() == 400);
    CHECK(path.horizon == 400);
}

TEST_CASE("convergence horizon") {
    CHECK(convergence_horizon(std::vector<double>(10, 3.0), 0.01).value() == 1);
    std::vector<double> geo(200);
    for (std::size_t h = 1; h <= geo.size(); ++h) geo[h - 1] = 0.4 + 0.2 * std::pow(0.9, static_cast<double>(h));
    // |mu_{h+1} - mu_h| = 0.02 * 0.9^h
    CHECK(convergence_horizon(geo, 0.01).value() == 7);
    CHECK(convergence_horizon(geo, 0.001).value() ==
          static_cast<std::size_t>(std::ceil(std::log(0.05) / std::log(0.9))));
    CHECK(convergence_horizon(geo, 0.001).value() == 29);
    CHECK_FALSE(convergence_horizon(geo, 0.0).has_value());
    CHECK_THROWS_AS(convergence_horizon(std::vector<double>{1.0}, 0.01), PreconditionError);
}

TEST_CASE("horizon limits") {
    const ParamSet p = reference_params(ModelKind::MAP);
    const auto s = state_at(20.0, 0.0, 20.0, 0.0);
    CHECK_THROWS_AS(multi_step_forecast(ModelKind::MAP, p, s, {}, 0), PreconditionError);
    CHECK_THROWS_AS(multi_step_forecast(ModelKind::MAP, p, s, {}, 751), PreconditionError);
    const auto one = multi_step_forecast(ModelKind::MAP, p, s, {}, 1);
    CHECK(one.mu.size() == 1);
    CHECK_FALSE(one.convergence_horizon.has_value());
}

TEST_CASE("stationary draws converge to the unconditional mean") {
    std::mt19937_64 g(21);
    std::uniform_real_distribution<double> u(0.3, 3.0);
    ForecastOptions o;
    o.max_horizon = 2000;
    for (ModelKind k : kAllModelKinds) {
        for (int rep = 0; rep < 20; ++rep) {
            const ParamSet p = oracle::random_params(k, g);
            const double m = unconditional_mean(k, p);
            ForecastState s = state_at(m * u(g), k == ModelKind::PMAP ? 1.0 + 0.1 * (u(g) - 1) : 0.2 * (u(g) - 1.0),
                                       m * u(g), 1.0);
            for (XRule xr : {XRule::Hold, XRule::Mean}) {
                ForecastRules r;
                r.x_rule = xr;
                if (xr == XRule::Mean) s.x = 0.55;  // mean rule ignores the last proxy
                const auto path = multi_step_forecast(k, p, s, r, 2000, o);
                CAPTURE(to_string(k));
                CHECK(std::abs(path.mu.back() - m) < 1e-6);
                REQUIRE(path.convergence_horizon.has_value());
                CHECK(*path.convergence_horizon <= 2000);
            }
        }
    }
}

TEST_CASE("held proxy away from its mean shifts the long-run level") {
    const ParamSet p = reference_params(ModelKind::MAP);
    ForecastState s = state_at(20.0, 0.0, 20.0, 0.0);
    s.x = s.x_bar + 0.1;
    ForecastOptions o;
    o.max_horizon = 2000;
    const auto path = multi_step_forecast(ModelKind::MAP, p, s, {}, 2000, o);
    // xi -> delta * xc / (1 - psi), and sigma absorbs the feedback through mu.
    const double xi_inf = p.delta * 0.1 / (1.0 - p.psi);
    const double sigma_inf = (p.omega + (p.alpha + 0.5 * p.gamma) * xi_inf) / (1.0 - p.persistence());
    CHECK(path.mu.back() == doctest::Approx(sigma_inf + xi_inf).epsilon(1e-10));
}

TEST_CASE("a low start converges upward") {
    const ParamSet p = reference_params(ModelKind::AMEM);
    const double m = unconditional_mean(ModelKind::AMEM, p);
    const auto path = multi_step_forecast(ModelKind::AMEM, p, state_at(0.5 * m, 0.0, 0.4 * m, 0.0), {}, 300);
    REQUIRE(path.mu[0] < m);
    for (std::size_t h = 1; h < path.mu.size(); ++h) CHECK(path.mu[h] >= path.mu[h - 1]);
}

TEST_CASE("covariate rules") {
    const ParamSet p = reference_params(ModelKind::MAP);
    ForecastState s = state_at(20.0, 0.0, 20.0, 0.0);
    s.delta_bar = 0.05;
    ForecastRules cal;
    cal.delta_rule = DeltaRule::Calendar;
    cal.delta_calendar = {0.0, 1.0};
    const auto a = multi_step_forecast(ModelKind::MAP, p, s, cal, 5);
    const auto b = multi_step_forecast(ModelKind::MAP, p, s, {}, 5);
    // Step 1 sees delta = 0, centered -0.05, against the mean rule's zero.
    CHECK(a.xi[0] - b.xi[0] == doctest::Approx(-0.05 * p.phi));
    CHECK(a.xi[1] - b.xi[1] == doctest::Approx(-0.05 * p.phi * p.psi + 0.95 * p.phi));
    ForecastRules path;
    path.x_rule = XRule::Path;
    path.x_path = {0.4};
    const auto c = multi_step_forecast(ModelKind::MAP, p, s, path, 3);
    // The path starts at x_{t+1}, so step 1 still uses the observed x_t.
    CHECK(c.xi[0] == doctest::Approx(b.xi[0]));
    CHECK(c.xi[1] == doctest::Approx(b.xi[1] + p.delta * 0.1));
}

TEST_CASE("impulse responses") {
    const ParamSet p = reference_params(ModelKind::MAP);
    const auto s = state_at(20.0, 0.1, 22.0, 1.0);
    SUBCASE("no proxy coefficient, no response") {
        ParamSet z = p;
        z.delta = 0.0;
        const auto irf = impulse_response(ModelKind::MAP, z, s, {}, 100, 0.26);
        for (double d : irf.diff) CHECK(d == 0.0);
    }
    SUBCASE("MAP response follows the linear recursion") {
        const double shock = 0.26;
        const auto irf = impulse_response(ModelKind::MAP, p, s, {}, 200, shock);
        double cum = 0.0, dsigma = 0.0, prev = 0.0;
        for (std::size_t h = 0; h < irf.diff.size(); ++h) {
            cum = cum * p.psi + p.delta * shock;
            if (h > 0) dsigma = (p.alpha + 0.5 * p.gamma) * prev + p.beta * dsigma;
            CHECK(irf.shocked.xi[h] - irf.baseline.xi[h] == doctest::Approx(cum).epsilon(1e-9));
            CHECK(irf.diff[h] == doctest::Approx(cum + dsigma).epsilon(1e-9));
            CHECK(irf.diff[h] < 0.0);
            CHECK(irf.diff[h] == irf.shocked.mu[h] - irf.baseline.mu[h]);
            prev = irf.diff[h];
        }
        CHECK(irf.diff[0] == doctest::Approx(p.delta * shock));
    }
    SUBCASE("linear kinds scale with the shock") {
        for (ModelKind k : {ModelKind::MAP, ModelKind::XMAP}) {
            const ParamSet q = reference_params(k);
            const auto one = impulse_response(k, q, s, {}, 300, 0.2);
            const auto two = impulse_response(k, q, s, {}, 300, 0.4);
            for (std::size_t h = 0; h < one.diff.size(); ++h) CHECK(std::abs(two.diff[h] - 2.0 * one.diff[h]) < 1e-10);
        }
    }
    SUBCASE("finite difference of forecasts") {
        for (ModelKind k : {ModelKind::LMAP, ModelKind::PMAP}) {
            const ParamSet q = reference_params(k);
            const auto st = state_at(20.0, k == ModelKind::PMAP ? 1.0 : 0.0, 22.0, 1.0);
            const double eps = 1e-6;
            const auto irf = impulse_response(k, q, st, {}, 30, eps);
            ForecastRules r;
            r.x_shift = -eps;
            const auto down = multi_step_forecast(k, q, st, r, 30);
            r.x_shift = eps;
            const auto up = multi_step_forecast(k, q, st, r, 30);
            for (std::size_t h = 0; h < 30; ++h) {
                CHECK(irf.diff[h] / eps == doctest::Approx((up.mu[h] - down.mu[h]) / (2 * eps)).epsilon(1e-4));
            }
        }
    }
}

TEST_CASE("default shock is the sample standard deviation") {
    const Panel p = fixture::random_panel(100, 12);
    const auto x = p.x();
    double m = 0.0;
    for (double v : x) m += v;
    m /= 100.0;
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    CHECK(default_shock(p, {0, 100}) == doctest::Approx(std::sqrt(ss / 99.0)));
}

TEST_CASE("marginal effects") {
    const auto sim = fixture::simulate(ModelKind::MAP, 300, 5);
    const auto f = filter(ModelKind::MAP, reference_params(ModelKind::MAP), sim.panel, sim.covariates);
    const IndexRange w{0, 300};
    SUBCASE("MAP at tau 0 is delta") {
        const auto me = marginal_effects(ModelKind::MAP, reference_params(ModelKind::MAP), f, sim.panel, w,
                                         PolicyVariable::Proxy, 0);
        CHECK(me.value == -1.836);
        CHECK_FALSE(me.time_varying);
    }
    SUBCASE("XMAP one day ahead") {
        ParamSet p = reference_params(ModelKind::XMAP);
        const auto me = marginal_effects(ModelKind::XMAP, p, f, sim.panel, w, PolicyVariable::Proxy, 1);
        CHECK(me.value == doctest::Approx(-0.636 * 0.689));
        CHECK(me.value == doctest::Approx(-0.438).epsilon(0.001 / 0.438));
    }
    SUBCASE("decay in tau") {
        for (ModelKind k : {ModelKind::MAP, ModelKind::XMAP}) {
            for (PolicyVariable v : {PolicyVariable::Proxy, PolicyVariable::Announcement}) {
                double prev = std::numeric_limits<double>::infinity();
                for (int tau = 0; tau <= 10; ++tau) {
                    const double e = std::abs(marginal_effects(k, reference_params(k), f, sim.panel, w, v, tau).value);
                    CHECK(e <= prev);
                    prev = e;
                }
            }
        }
    }
    SUBCASE("LMAP at a zero policy component") {
        SimScenario sc;
        sc.kind = ModelKind::LMAP;
        sc.params = reference_params(ModelKind::LMAP);
        sc.length = 200;
        sc.x_rule = XPathRule::Constant;
        sc.announcement_rule = AnnouncementRule::None;
        const auto s2 = simulate_panel(sc);
        const auto fl = filter(ModelKind::LMAP, sc.params, s2.panel, s2.covariates);
        const auto me = marginal_effects(ModelKind::LMAP, sc.params, fl, s2.panel, {0, 200}, PolicyVariable::Proxy, 2);
        CHECK(me.time_varying);
        for (std::size_t i = 0; i < me.series.size(); ++i) {
            const double sig = fl.sigma[me.days[i] + 2];
            CHECK(me.series[i] == doctest::Approx(sig * sc.params.delta * sc.params.psi * sc.params.psi / 2.0));
        }
        CHECK_THROWS_AS(marginal_effects(ModelKind::LMAP, sc.params, fl, s2.panel, {0, 200},
                                         PolicyVariable::Announcement, 0),
                        PreconditionError);
    }
    SUBCASE("announcement averages use announcement days only") {
        const ParamSet p = reference_params(ModelKind::PMAP);
        const auto fp = filter(ModelKind::PMAP, p, sim.panel, sim.covariates);
        const auto me = marginal_effects(ModelKind::PMAP, p, fp, sim.panel, w, PolicyVariable::Announcement, 1);
        for (std::size_t t : me.days) CHECK(sim.panel.delta()[t] == 1.0);
        CHECK(me.days.size() == 14);  // days 19, 39, ..., 279; day 299 has no t + 1
    }
    SUBCASE("closed forms match finite differences of the filter") {
        std::mt19937_64 g(8);
        for (ModelKind k : {ModelKind::MAP, ModelKind::XMAP, ModelKind::LMAP, ModelKind::PMAP}) {
            const ParamSet p = oracle::random_params(k, g);
            const auto fk = filter(k, p, sim.panel, sim.covariates);
            REQUIRE(fk.valid);
            for (int tau : {0, 1, 5}) {
                for (PolicyVariable v : {PolicyVariable::Proxy, PolicyVariable::Announcement}) {
                    const auto me = marginal_effects(k, p, fk, sim.panel, w, v, tau);
                    for (std::size_t t : {19ul, 59ul, 139ul}) {
                        double cf = me.value;
                        if (me.time_varying) {
                            const auto it = std::find(me.days.begin(), me.days.end(), t);
                            REQUIRE(it != me.days.end());
                            cf = me.series[static_cast<std::size_t>(it - me.days.begin())];
                        }
                        const double fd = oracle::fd_marginal(k, p, sim.panel, sim.covariates, t, tau,
                                                              v == PolicyVariable::Proxy, 1e-4);
                        CHECK(std::abs(fd - cf) <= 1e-4 * std::abs(cf));
                    }
                }
            }
        }
    }
    CHECK_THROWS_AS(marginal_effects(ModelKind::AMEM, reference_params(ModelKind::AMEM), f, sim.panel, w,
                                     PolicyVariable::Proxy, 0),
                    PreconditionError);
}

TEST_CASE("Monte Carlo refinement") {
    const ParamSet p = reference_params(ModelKind::AMEM);
    const auto s = state_at(18.0, 0.0, 21.0, 1.0);
    MonteCarloOptions mc;
    mc.draws = 4000;
    const auto plug = multi_step_forecast(ModelKind::AMEM, p, s, {}, 20);
    const auto sim = monte_carlo_forecast(ModelKind::AMEM, p, s, {}, 20, mc);
    // Linear recursion: the plug-in path is the exact expectation.
    CHECK(sim.mu[0] == doctest::Approx(plug.mu[0]).epsilon(1e-12));
    for (std::size_t h = 1; h < 20; ++h) CHECK(std::abs(sim.mu[h] / plug.mu[h] - 1.0) < 0.02);
    mc.threads = 3;
    const auto again = monte_carlo_forecast(ModelKind::AMEM, p, s, {}, 20, mc);
    CHECK(again.mu == sim.mu);
    const ParamSet q = reference_params(ModelKind::LMAP);
    const auto lp = multi_step_forecast(ModelKind::LMAP, q, s, {}, 20);
    const auto lm = monte_carlo_forecast(ModelKind::LMAP, q, s, {}, 20, mc);
    for (std::size_t h = 0; h < 20; ++h) CHECK(std::abs(lm.mu[h] / lp.mu[h] - 1.0) < 0.03);
}
