#include "mapvol/error.hpp"
#include "mapvol/evaluate.hpp"
#include "mapvol/simulate.hpp"

#include "../support/fixtures.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace mapvol;

namespace {

LossMatrix random_matrix(std::size_t models, std::size_t days, std::mt19937_64& g, std::vector<double> shift) {
    std::gamma_distribution<double> gam(2.0, 0.5);
    std::vector<std::vector<double>> cols(models, std::vector<double>(days));
    std::vector<std::string> names;
    for (std::size_t m = 0; m < models; ++m) {
        names.push_back("m" + std::to_string(m));
        for (auto& v : cols[m]) v = gam(g) + shift[m];
    }
    return make_loss_matrix(LossType::QLike, names, cols);
}

}  // namespace

TEST_CASE("loss functions") {
    CHECK(loss(3.0, 3.0, LossType::MSE) == 0.0);
    CHECK(loss(3.0, 3.0, LossType::QLike) == 0.0);
    CHECK(loss(1.0, 2.0, LossType::MSE) == 1.0);
    CHECK(loss(1.0, 2.0, LossType::QLike) == doctest::Approx(2.0 - std::log(2.0) - 1.0));
    CHECK(loss(1.0, 2.0, LossType::QLike) == doctest::Approx(0.3069).epsilon(1e-4));
    // QLike has its unique minimum at the realized value.
    for (double f = 0.5; f < 4.0; f += 0.01) {
        if (std::abs(f - 2.0) > 1e-9) CHECK(loss(f, 2.0, LossType::QLike) > 0.0);
    }
    CHECK_THROWS_AS(loss(0.0, 1.0, LossType::QLike), PreconditionError);
    CHECK_THROWS_AS(loss(1.0, -1.0, LossType::MSE), PreconditionError);
    CHECK(parse_loss_type("qlike") == LossType::QLike);
    CHECK_THROWS_AS(parse_loss_type("mae"), UsageError);
    const std::vector<double> c(50, 4.0);
    for (double v : losses(c, c, LossType::QLike)) CHECK(v == 0.0);
    for (double v : losses(c, c, LossType::MSE)) CHECK(v == 0.0);
}

TEST_CASE("loss matrix validation") {
    CHECK_THROWS_AS(make_loss_matrix(LossType::MSE, {"a", "b"}, {{1, 2}, {1}}), PreconditionError);
    CHECK_THROWS_AS(make_loss_matrix(LossType::MSE, {"a"}, {{1, std::nan("")}}), PreconditionError);
    const auto m = make_loss_matrix(LossType::MSE, {"a", "b"}, {{1, 3}, {2, 2}});
    CHECK(m.days() == 2);
    CHECK(m.mean_losses() == std::vector<double>{2.0, 2.0});
}

TEST_CASE("stationary bootstrap indices") {
    std::mt19937_64 g(1);
    const auto idx = stationary_bootstrap_indices(1000, 22.0, g);
    CHECK(idx.size() == 1000);
    std::size_t breaks = 0;
    for (std::size_t i = 1; i < idx.size(); ++i) {
        CHECK(idx[i] < 1000);
        if (idx[i] != (idx[i - 1] + 1) % 1000) ++breaks;
    }
    // Roughly n / block_length restarts.
    CHECK(breaks > 20);
    CHECK(breaks < 80);
}

TEST_CASE("model confidence set") {
    std::mt19937_64 g(2);
    McsOptions o;
    o.replications = 1000;
    SUBCASE("identical columns all survive") {
        std::gamma_distribution<double> gam(2.0, 0.5);
        std::vector<double> c(300);
        for (auto& v : c) v = gam(g);
        const auto m = make_loss_matrix(LossType::MSE, {"a", "b", "c"}, {c, c, c});
        const auto r = model_confidence_set(m, o);
        for (double p : r.pvalue) CHECK(p == 1.0);
        CHECK(r.survivors().size() == 3);
    }
    SUBCASE("a shifted column is eliminated") {
        o.replications = 2000;
        const auto m = random_matrix(4, 500, g, {0.0, 0.0, 1.0, 0.0});
        const auto r = model_confidence_set(m, o);
        CHECK(r.elimination.front() == 2);
        CHECK(r.pvalue[2] < 0.01);
        CHECK_FALSE(r.member[2]);
        CHECK(r.pvalue[r.best] == 1.0);
    }
    SUBCASE("p-values rise along the elimination order") {
        const auto m = random_matrix(5, 400, g, {0.0, 0.05, 0.1, 0.2, 0.3});
        const auto r = model_confidence_set(m, o);
        REQUIRE(r.elimination.size() == 5);
        for (std::size_t i = 1; i < r.elimination.size(); ++i) {
            CHECK(r.pvalue[r.elimination[i]] >= r.pvalue[r.elimination[i - 1]]);
        }
        CHECK(r.elimination.back() == r.best);
        for (std::size_t i = 0; i < 5; ++i) CHECK(r.member[i] == (r.pvalue[i] > o.level));
    }
    SUBCASE("permuting columns permutes the result") {
        const auto m = random_matrix(4, 300, g, {0.3, 0.0, 0.15, 0.05});
        LossMatrix perm = m;
        const std::vector<std::size_t> order{2, 0, 3, 1};
        for (std::size_t i = 0; i < 4; ++i) {
            perm.columns[i] = m.columns[order[i]];
            perm.models[i] = m.models[order[i]];
        }
        const auto a = model_confidence_set(m, o);
        const auto b = model_confidence_set(perm, o);
        for (std::size_t i = 0; i < 4; ++i) CHECK(b.pvalue[i] == doctest::Approx(a.pvalue[order[i]]).epsilon(1e-12));
        for (std::size_t i = 0; i < 4; ++i) CHECK(order[b.elimination[i]] == a.elimination[i]);
    }
    SUBCASE("sets are nested across levels") {
        for (int rep = 0; rep < 10; ++rep) {
            std::uniform_real_distribution<double> u(0.0, 0.2);
            const auto m = random_matrix(5, 200, g, {u(g), u(g), u(g), u(g), u(g)});
            const auto r = model_confidence_set(m, o);
            const auto wide = mcs_members(r, 0.10), narrow = mcs_members(r, 0.25);
            CHECK_FALSE(narrow.empty());
            for (std::size_t i : narrow) CHECK(std::find(wide.begin(), wide.end(), i) != wide.end());
        }
    }
    SUBCASE("same seed, same result") {
        const auto m = random_matrix(3, 250, g, {0.0, 0.1, 0.2});
        const auto a = model_confidence_set(m, o);
        o.threads = 3;
        const auto b = model_confidence_set(m, o);
        CHECK(a.pvalue == b.pvalue);
        CHECK(a.elimination == b.elimination);
        CHECK(a.statistic == b.statistic);
    }
    CHECK_THROWS_AS(model_confidence_set(random_matrix(1, 200, g, {0.0}), o), PreconditionError);
    CHECK_THROWS_AS(model_confidence_set(random_matrix(2, 50, g, {0.0, 0.0}), o), PreconditionError);
}

TEST_CASE("out-of-sample run on simulated policy data") {
    const auto sim = fixture::simulate(ModelKind::MAP, 2500, 31);
    const Date split = sim.panel.dates()[1999];
    const auto run = oos_forecast_run(kAllModelKinds, sim.panel, split);
    CHECK(run.failed.empty());
    REQUIRE(run.columns.size() == 5);
    CHECK(run.estimation.begin == 0);
    CHECK(run.estimation.end == 2000);
    CHECK(run.evaluation.begin == 2000);
    CHECK(run.evaluation.end == 2500);
    CHECK(run.dates.front() > split);
    for (std::size_t i = 0; i < run.realized.size(); ++i) CHECK(run.realized[i] == sim.panel.rv()[2000 + i]);

    // One-step forecasts are the filter through the evaluation days with estimation-window centering.
    const auto& map = run.columns[2];
    REQUIRE(map.estimate);
    const auto cov = center_covariates(sim.panel, {0, 2000});
    const auto f = filter(ModelKind::MAP, map.estimate->params, sim.panel, cov);
    for (std::size_t i = 0; i < map.forecasts.size(); ++i) {
        CHECK(map.forecasts[i] == doctest::Approx(f.mu[2000 + i]).epsilon(1e-12));
    }

    const auto q = run.loss_matrix(LossType::QLike).mean_losses();
    for (std::size_t i = 1; i < 5; ++i) CHECK(q[i] < q[0]);
    const auto same = oos_forecast_run(std::vector<ModelKind>{ModelKind::AMEM, ModelKind::AMEM}, sim.panel, split);
    CHECK(same.columns[0].forecasts == same.columns[1].forecasts);

    OosOptions roll;
    roll.rolling = true;
    roll.refit_every = 100;
    const auto rolled = oos_forecast_run(std::vector<ModelKind>{ModelKind::AMEM}, sim.panel, split, roll);
    CHECK(rolled.columns[0].forecasts.size() == 500);
    CHECK(rolled.columns[0].forecasts.front() == doctest::Approx(run.columns[0].forecasts.front()).epsilon(1e-9));

    CHECK_THROWS_AS(oos_forecast_run(kAllModelKinds, sim.panel, sim.panel.dates()[2400]), PreconditionError);
}

TEST_CASE("in-sample losses") {
    const auto sim = fixture::simulate(ModelKind::AMEM, 500, 3);
    const auto f = filter(ModelKind::AMEM, reference_params(ModelKind::AMEM), sim.panel, sim.covariates);
    const auto m = in_sample_losses(f, sim.panel);
    double mse = 0.0, ql = 0.0;
    for (std::size_t t = 1; t < 500; ++t) {
        mse += loss(f.mu[t], sim.panel.rv()[t], LossType::MSE);
        ql += loss(f.mu[t], sim.panel.rv()[t], LossType::QLike);
    }
    CHECK(m.mse == doctest::Approx(mse / 499));
    CHECK(m.qlike == doctest::Approx(ql / 499));
}
