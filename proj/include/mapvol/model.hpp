#pragma once

#include "mapvol/data.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mapvol {

/**
 * @brief The five conditional-mean specifications.
 *
 * AMEM   mu = base component only (asymmetric MEM).
 * XMAP   AMEM plus policy regressors, i.e. the additive model with psi == beta.
 * MAP    mu = sigma + xi, with its own persistence psi for xi.
 * LMAP   mu = 2 sigma logistic(xi).
 * PMAP   mu = sigma xi, xi carrying a (1 - psi) intercept so that it averages one.
 */
enum class ModelKind { AMEM, XMAP, MAP, LMAP, PMAP };

inline constexpr std::array<ModelKind, 5> kAllModelKinds = {ModelKind::AMEM, ModelKind::XMAP, ModelKind::MAP,
                                                            ModelKind::LMAP, ModelKind::PMAP};

std::string_view to_string(ModelKind kind) noexcept;
/// Accepts "AMEM", "XMAP", "X-MAP", "MAP", "LMAP", "L-MAP", "PMAP", "P-MAP" (case-insensitive).
ModelKind parse_model_kind(std::string_view name);

[[nodiscard]] bool has_policy_terms(ModelKind kind) noexcept;
[[nodiscard]] bool is_additive(ModelKind kind) noexcept;
/// Free parameter count, shape included (5, 7, 8, 8, 8).
[[nodiscard]] std::size_t free_parameter_count(ModelKind kind) noexcept;

struct ParamSet {
    double omega = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    double delta = 0.0;  // implementation proxy
    double phi = 0.0;    // announcement flag
    double psi = 0.0;    // persistence of the policy component
    double shape = 1.0;  // Gamma shape (unit-mean errors, variance 1/shape)

    [[nodiscard]] double persistence() const noexcept { return alpha + beta + 0.5 * gamma; }
};

/// Parameters the recursion actually uses: AMEM drops the policy terms, XMAP ties psi to beta.
[[nodiscard]] ParamSet effective_params(ModelKind kind, const ParamSet& p) noexcept;

/// Names of the free parameters in reporting order.
std::vector<std::string> parameter_names(ModelKind kind);
std::vector<double> free_parameters(ModelKind kind, const ParamSet& p);
ParamSet from_free_parameters(ModelKind kind, std::span<const double> values);

struct ConstraintReport {
    bool positivity = true;      // omega, alpha, beta >= 0, shape > 0
    bool stationarity = true;    // alpha + beta + gamma/2 < 1 and psi < 1
    bool identification = true;  // 0 < psi < beta < 1 for the component models
    bool gamma_negative = false;

    [[nodiscard]] bool ok() const noexcept { return positivity && stationarity && identification; }
};

ConstraintReport check_constraints(ModelKind kind, const ParamSet& p);

struct FilterOutput {
    std::vector<double> sigma;  // base component
    std::vector<double> xi;     // policy component
    std::vector<double> mu;     // conditional mean
    std::vector<double> eps;    // rv / mu
    bool valid = true;
    std::optional<std::size_t> invalid_index;
    std::string diagnostic;
};

/**
 * @brief Runs the deterministic filtering recursion over the whole panel.
 *
 * Index 0 holds the initial state: sigma = init_level, xi = 0 (1 for PMAP).
 * From t = 1 on, sigma uses rv and the sign dummy at t-1, xi uses the centered
 * proxy at t-1 and the centered announcement flag at t. A non-positive or
 * non-finite mu marks the output invalid at that index; the series stop there.
 */
FilterOutput filter(ModelKind kind, const ParamSet& params, const Panel& panel, const CenteredCovariates& cov);

/// omega / (1 - alpha - beta - gamma/2). Throws PreconditionError when persistence >= 1.
double unconditional_mean(ModelKind kind, const ParamSet& params);

struct PolicyShare {
    std::vector<double> share;  // xi_t / mu_t
    double average = 0.0;
};

/// Defined for the additive kinds only (AMEM, XMAP, MAP).
PolicyShare policy_share(ModelKind kind, const FilterOutput& f, std::size_t first = 1);

/// Writes date,sigma,xi,mu,eps rows.
void write_components(std::ostream& out, const Panel& panel, const FilterOutput& f);

}  // namespace mapvol
