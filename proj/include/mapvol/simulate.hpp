#pragma once

#include "mapvol/data.hpp"
#include "mapvol/model.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace mapvol {

enum class XPathRule { Constant, RandomWalk, User };
enum class AnnouncementRule { None, EveryK, User };

struct SimScenario {
    ModelKind kind = ModelKind::AMEM;
    ParamSet params;
    std::size_t length = 1000;
    std::uint64_t seed = 1;

    XPathRule x_rule = XPathRule::RandomWalk;
    double x0 = 0.3;
    double x_drift = 0.0;
    double x_step_sd = 0.002;  // reflected into [0,1]
    std::vector<double> x_user;

    AnnouncementRule announcement_rule = AnnouncementRule::EveryK;
    std::size_t announcement_every = 20;
    std::vector<double> announcement_user;

    Date start = Date{std::chrono::year{2009} / 6 / 1};
};

struct SimResult {
    Panel panel;
    FilterOutput truth;
    /// Centering used by the generator; init_level is the unconditional mean.
    CenteredCovariates covariates;
    std::vector<double> eps;
};

/// Coefficients of the magnitude estimated on European index volatility, per kind.
ParamSet reference_params(ModelKind kind);

/// Unit-mean Gamma(shape, 1/shape) variate.
double gamma_draw(double shape, std::mt19937_64& stream);

/// One generator stream per (seed, stream id) pair.
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream = 0);

/// Weekday dates starting at start (moved forward to a weekday).
std::vector<Date> business_days(Date start, std::size_t n);

/**
 * @brief Generates rv_t = mu_t eps_t from the exact filtering recursion.
 *
 * The base component starts at the unconditional mean, D_t is a fair coin
 * independent of eps_t and ret carries only its sign. Throws PreconditionError
 * for an invalid scenario and NumericalError when mu_t turns non-positive.
 */
SimResult simulate_panel(const SimScenario& s);

}  // namespace mapvol
