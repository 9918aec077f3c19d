#pragma once

#include "mapvol/data.hpp"
#include "mapvol/model.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace mapvol {

enum class XRule {
    Hold,  // random-walk expectation: keep the last observed proxy
    Mean,  // proxy back at its centering mean
    Path,  // user-supplied future values
};

enum class DeltaRule {
    Mean,      // announcement flag at its mean, i.e. centered zero
    Calendar,  // known future announcement days
};

std::string_view to_string(XRule r) noexcept;
std::string_view to_string(DeltaRule r) noexcept;

/// Assumptions about the covariates over the forecast horizon.
struct ForecastRules {
    XRule x_rule = XRule::Hold;
    std::vector<double> x_path;          // x_{t+1}, x_{t+2}, ...; the last value is held past the end
    DeltaRule delta_rule = DeltaRule::Mean;
    std::vector<double> delta_calendar;  // delta_{t+1}, ...; treated as the mean past the end
    double x_shift = 0.0;                // added to every proxy value entering the forecast
    double p_negative = 0.5;             // P(D = 1) for future days
};

/// Filter state at the forecast origin t.
struct ForecastState {
    std::size_t origin = 0;
    double sigma = 0.0;
    double xi = 0.0;
    double rv = 0.0;
    double negative = 0.0;
    double x = 0.0;
    double x_bar = 0.0;
    double delta_bar = 0.0;
};

ForecastState make_state(const Panel& panel, const CenteredCovariates& cov, const FilterOutput& f, std::size_t origin);

struct ForecastOptions {
    std::size_t max_horizon = 750;
    double tolerance = 0.01;  // one basis point of annualized percentage volatility
};

struct ForecastPath {
    ModelKind kind = ModelKind::AMEM;
    std::size_t origin = 0;
    std::size_t horizon = 0;
    std::vector<double> mu;  // steps 1..H
    std::vector<double> sigma;
    std::vector<double> xi;
    ForecastRules rules;
    double tolerance = 0.0;
    std::optional<std::size_t> convergence_horizon;
};

/**
 * @brief Expected volatility for steps 1..H after the origin.
 *
 * Step 1 uses the observed rv_t and D_t. Later steps replace rv by its forecast
 * and the sign dummy by p_negative:
 *   sigma_{h} = omega + (alpha + gamma p_neg) mu_{h-1} + beta sigma_{h-1}.
 * The policy component follows its linear recursion under the covariate rules and
 * the composition is the model's own (plug-in for LMAP and PMAP).
 */
ForecastPath multi_step_forecast(ModelKind kind, const ParamSet& params, const ForecastState& state,
                                 const ForecastRules& rules, std::size_t horizon, const ForecastOptions& options = {});

/// Smallest h (1-based) with |mu_{h+1} - mu_h| <= tol; nullopt if never reached.
std::optional<std::size_t> convergence_horizon(std::span<const double> path, double tol);

struct MonteCarloOptions {
    std::size_t draws = 10000;
    std::uint64_t seed = 7;
    unsigned threads = 1;
    double x_step_sd = 0.0;  // random-walk proxy innovations (reflected into [0,1]) on top of the rule
};

/// Averages simulated paths (Gamma innovations, fair-coin sign dummies) to
/// measure the plug-in approximation. Deterministic given the seed.
ForecastPath monte_carlo_forecast(ModelKind kind, const ParamSet& params, const ForecastState& state,
                                  const ForecastRules& rules, std::size_t horizon, const MonteCarloOptions& mc,
                                  const ForecastOptions& options = {});

struct IrfPath {
    ForecastPath baseline;
    ForecastPath shocked;
    std::vector<double> diff;  // shocked - baseline
    double shock = 0.0;
};

/// Baseline and sustained-shock paths differing only by the proxy shift.
IrfPath impulse_response(ModelKind kind, const ParamSet& params, const ForecastState& state, const ForecastRules& rules,
                         std::size_t horizon, double shock, const ForecastOptions& options = {});

/// Sample standard deviation of the proxy over a window.
double default_shock(const Panel& panel, IndexRange window);

enum class PolicyVariable { Proxy, Announcement };
std::string_view to_string(PolicyVariable v) noexcept;

struct MarginalEffect {
    ModelKind kind = ModelKind::MAP;
    PolicyVariable variable = PolicyVariable::Proxy;
    double kappa = 0.0;  // delta for the proxy, phi for the announcement flag
    int tau = 0;
    double value = 0.0;  // constant effect, or the average of the series
    bool time_varying = false;
    std::vector<std::size_t> days;  // day t of each series entry (effect on mu_{t+tau})
    std::vector<double> series;
};

/**
 * @brief Effect of x_{t-1} (or delta_t) on mu_{t+tau}.
 *
 *   MAP   kappa psi^tau
 *   XMAP  kappa beta^tau
 *   LMAP  2 sigma_{t+tau} kappa psi^tau e^xi / (1 + e^xi)^2, xi = xi_{t+tau}
 *   PMAP  kappa psi^tau sigma_{t+tau}
 *
 * LMAP and PMAP return the per-day series over the window and its average;
 * for the announcement flag only announcement days enter.
 */
MarginalEffect marginal_effects(ModelKind kind, const ParamSet& params, const FilterOutput& f, const Panel& panel,
                                IndexRange window, PolicyVariable variable, int tau);

}  // namespace mapvol
