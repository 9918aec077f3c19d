#include "mapvol/error.hpp"
#include "mapvol/model.hpp"

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace mapvol;

namespace {

std::vector<double> to_vec(std::span<const double> s) { return {s.begin(), s.end()}; }

}  // namespace

TEST_CASE("kind metadata") {
    CHECK(free_parameter_count(ModelKind::AMEM) == 5);
    CHECK(free_parameter_count(ModelKind::XMAP) == 7);
    CHECK(free_parameter_count(ModelKind::MAP) == 8);
    CHECK(free_parameter_count(ModelKind::LMAP) == 8);
    CHECK(free_parameter_count(ModelKind::PMAP) == 8);
    CHECK(parse_model_kind("l-map") == ModelKind::LMAP);
    CHECK(parse_model_kind("X-MAP") == ModelKind::XMAP);
    CHECK_THROWS_AS(parse_model_kind("GARCH"), UsageError);
    for (ModelKind k : kAllModelKinds) {
        CHECK(parse_model_kind(to_string(k)) == k);
        ParamSet p = reference_params(k);
        const auto v = free_parameters(k, p);
        CHECK(v.size() == parameter_names(k).size());
        const ParamSet q = from_free_parameters(k, v);
        CHECK(free_parameters(k, q) == v);
    }
}

TEST_CASE("hand recursion for XMAP without policy terms") {
    const Panel p = Panel::create(fixture::days(3), {1.0, 1.0, 1.0}, {-0.01, 0.01, 0.01}, {0.3, 0.3, 0.3},
                                  {0, 0, 0});
    CenteredCovariates c = center_covariates(p, {0, 3});
    const ParamSet q{0.1, 0.2, 0.5, 0.1, 0.0, 0.0, 0.0, 5.0};
    c.init_level = unconditional_mean(ModelKind::XMAP, q);
    CHECK(c.init_level == doctest::Approx(0.4));
    const FilterOutput f = filter(ModelKind::XMAP, q, p, c);
    CHECK(f.mu[0] == doctest::Approx(0.4));
    CHECK(f.mu[1] == doctest::Approx(0.6).epsilon(1e-14));
}

TEST_CASE("unconditional mean") {
    CHECK(unconditional_mean(ModelKind::MAP, {0.1, 0.2, 0.5, 0.1, 0, 0, 0, 1}) == doctest::Approx(0.4));
    CHECK(unconditional_mean(ModelKind::AMEM, {0.7, 0, 0, 0, 0, 0, 0, 1}) == doctest::Approx(0.7));
    CHECK_THROWS_AS(unconditional_mean(ModelKind::AMEM, {0.1, 0.25, 0.5, 0.5, 0, 0, 0, 1}), PreconditionError);
}

TEST_CASE("filter matches the naive recursion for every kind") {
    const Panel p = fixture::random_panel(400, 17);
    const auto c = center_covariates(p, {0, 300});
    std::mt19937_64 g(99);
    for (ModelKind k : kAllModelKinds) {
        for (int rep = 0; rep < 5; ++rep) {
            const ParamSet q = oracle::random_params(k, g);
            const FilterOutput f = filter(k, q, p, c);
            REQUIRE(f.valid);
            const auto o = oracle::naive_filter(k, q, to_vec(p.rv()), to_vec(p.ret()), c.xc, c.dc, c.init_level);
            for (std::size_t t = 0; t < p.size(); ++t) {
                CHECK(f.mu[t] == doctest::Approx(o.mu[t]).epsilon(1e-12));
                CHECK(f.eps[t] == doctest::Approx(p.rv()[t] / o.mu[t]).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("nesting and composition identities") {
    const Panel p = fixture::random_panel(500, 3);
    const auto c = center_covariates(p, {0, 500});
    std::mt19937_64 g(7);
    for (int rep = 0; rep < 10; ++rep) {
        ParamSet q = oracle::random_params(ModelKind::MAP, g);
        const FilterOutput amem = filter(ModelKind::AMEM, q, p, c);
        ParamSet z = q;
        z.delta = z.phi = 0.0;
        const FilterOutput xmap = filter(ModelKind::XMAP, z, p, c);
        z.psi = 0.0;
        const FilterOutput map = filter(ModelKind::MAP, z, p, c);
        for (std::size_t t = 0; t < p.size(); ++t) {
            CHECK(std::abs(xmap.mu[t] - amem.mu[t]) <= 1e-12);
            CHECK(map.xi[t] == 0.0);
            CHECK(std::abs(map.mu[t] - amem.mu[t]) <= 1e-12);
        }
        const FilterOutput full = filter(ModelKind::MAP, q, p, c);
        REQUIRE(full.valid);
        for (std::size_t t = 0; t < p.size(); ++t) CHECK(full.mu[t] == full.sigma[t] + full.xi[t]);

        // Doubling the policy coefficients doubles the centered-input component.
        ParamSet d = q;
        d.delta *= 2.0;
        d.phi *= 2.0;
        const FilterOutput twice = filter(ModelKind::MAP, d, p, c);
        const ParamSet ql = oracle::random_params(ModelKind::LMAP, g);
        ParamSet dl = ql;
        dl.delta *= 2.0;
        dl.phi *= 2.0;
        const FilterOutput l1 = filter(ModelKind::LMAP, ql, p, c), l2 = filter(ModelKind::LMAP, dl, p, c);
        for (std::size_t t = 0; t < p.size(); ++t) {
            CHECK(twice.xi[t] == doctest::Approx(2.0 * full.xi[t]).epsilon(1e-12).scale(1e-12));
            CHECK(l2.xi[t] == doctest::Approx(2.0 * l1.xi[t]).epsilon(1e-12).scale(1e-12));
            CHECK(l1.mu[t] > 0.0);
            CHECK(l1.mu[t] < 2.0 * l1.sigma[t]);
        }
    }
}

TEST_CASE("LMAP with a zero policy component equals the base component") {
    const Panel p = fixture::random_panel(200, 8);
    const auto c = center_covariates(p, {0, 200});
    const ParamSet q{0.8, 0.15, 0.7, 0.1, 0.0, 0.0, 0.3, 6.0};
    const FilterOutput f = filter(ModelKind::LMAP, q, p, c);
    for (std::size_t t = 0; t < p.size(); ++t) CHECK(f.mu[t] == doctest::Approx(f.sigma[t]).epsilon(1e-15));
}

TEST_CASE("positivity failures invalidate the output") {
    const Panel p = fixture::random_panel(300, 4);
    const auto c = center_covariates(p, {0, 300});
    const ParamSet q{0.01, 0.01, 0.5, 0.0, -2000.0, 0.0, 0.4, 6.0};
    const FilterOutput f = filter(ModelKind::MAP, q, p, c);
    CHECK_FALSE(f.valid);
    REQUIRE(f.invalid_index.has_value());
    CHECK(*f.invalid_index >= 1);
    CHECK_FALSE(f.diagnostic.empty());
}

TEST_CASE("constraint report") {
    CHECK(check_constraints(ModelKind::MAP, reference_params(ModelKind::MAP)).ok());
    ParamSet q = reference_params(ModelKind::MAP);
    q.psi = 0.9;
    CHECK_FALSE(check_constraints(ModelKind::MAP, q).identification);
    q = reference_params(ModelKind::AMEM);
    q.beta = 0.95;
    CHECK_FALSE(check_constraints(ModelKind::AMEM, q).stationarity);
    q = reference_params(ModelKind::AMEM);
    q.gamma = -0.05;
    const auto r = check_constraints(ModelKind::AMEM, q);
    CHECK(r.gamma_negative);
    CHECK(r.ok());
}

TEST_CASE("policy share") {
    FilterOutput f;
    f.sigma = {9.0, 9.0};
    f.xi = {1.0, 1.0};
    f.mu = {10.0, 10.0};
    f.eps = {1.0, 1.0};
    const auto s = policy_share(ModelKind::MAP, f);
    CHECK(s.share[1] == doctest::Approx(0.1));
    CHECK(s.average == doctest::Approx(0.1));
    f.xi = {0.0, 0.0};
    CHECK(policy_share(ModelKind::AMEM, f).average == 0.0);
    CHECK_THROWS_AS(policy_share(ModelKind::PMAP, f), PreconditionError);
}

TEST_CASE("components serialize with a header") {
    const Panel p = fixture::random_panel(5, 1);
    const auto c = center_covariates(p, {0, 5});
    const FilterOutput f = filter(ModelKind::AMEM, reference_params(ModelKind::AMEM), p, c);
    std::ostringstream out;
    write_components(out, p, f);
    const std::string s = out.str();
    CHECK(s.rfind("date,sigma,xi,mu,eps\n", 0) == 0);
    CHECK(std::count(s.begin(), s.end(), '\n') == 6);
}
