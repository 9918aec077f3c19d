#pragma once

#include "mapvol/data.hpp"
#include "mapvol/model.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mapvol {

/// Sum over t >= 1 of the Gamma(shape, 1/shape) log density of rv_t / mu_t, in rv units.
/// Returns -infinity for an invalid filter output.
double gamma_loglik(const FilterOutput& f, double shape, const Panel& panel);

/// Per-day contributions for t >= 1 (index 0 is the initial state and is skipped).
std::vector<double> gamma_loglik_contributions(const FilterOutput& f, double shape, const Panel& panel);

struct InformationCriteria {
    double aic = 0.0;
    double bic = 0.0;
};

/// Per-observation criteria: aic = (-2 ll + 2k) / T, bic = (-2 ll + k ln T) / T.
InformationCriteria information_criteria(double loglik, std::size_t nobs, std::size_t k);

struct LjungBoxResult {
    std::vector<int> lags;
    std::vector<double> statistic;
    std::vector<double> pvalue;
};

/// Q(m) = T(T+2) sum_j rho_j^2 / (T-j) with chi-square(m) p-values.
LjungBoxResult ljung_box(std::span<const double> residuals, std::span<const int> lags);

enum class PsiConstraint {
    Identified,  // 0 < psi < beta
    Stationary,  // |psi| < 1 only; diagnostic refits
};

/**
 * @brief Smooth bijection between the feasible parameter region and R^k.
 *
 * The persistence p = alpha + beta + gamma/2 and the average news impact
 * a = alpha + gamma/2 go through logistics (0 < a < p < 1), gamma/2 = a tanh(.)
 * keeps alpha >= 0 and alpha + gamma >= 0, psi = beta logistic(.), and
 * omega and the shape go through exp. delta and phi are left free.
 */
class Reparameterization {
 public:
    explicit Reparameterization(ModelKind kind, PsiConstraint psi = PsiConstraint::Identified);

    [[nodiscard]] std::size_t size() const noexcept;
    [[nodiscard]] ParamSet to_params(std::span<const double> u) const;
    /// Throws PreconditionError if p is outside the open feasible region.
    [[nodiscard]] std::vector<double> to_unconstrained(const ParamSet& p) const;
    [[nodiscard]] bool interior(const ParamSet& p) const noexcept;

 private:
    ModelKind kind_;
    PsiConstraint psi_;
};

/// Gamma quasi-likelihood of one kind over an estimation window. The window is
/// copied out of the panel and its covariates are centered on the window means.
class QuasiLikelihood {
 public:
    QuasiLikelihood(ModelKind kind, const Panel& panel, IndexRange window);

    [[nodiscard]] ModelKind kind() const noexcept { return kind_; }
    [[nodiscard]] const Panel& panel() const noexcept { return panel_; }
    [[nodiscard]] const CenteredCovariates& covariates() const noexcept { return cov_; }
    [[nodiscard]] std::size_t contribution_count() const noexcept { return panel_.size() - 1; }

    /// Total log-likelihood, -infinity when the filter is invalid or shape <= 0.
    [[nodiscard]] double loglik(const ParamSet& p) const;
    [[nodiscard]] bool contributions(const ParamSet& p, std::vector<double>& out) const;
    [[nodiscard]] FilterOutput filter(const ParamSet& p) const;

 private:
    ModelKind kind_;
    Panel panel_;
    CenteredCovariates cov_;
    double sum_log_rv_ = 0.0;  // over t >= 1
};

/// Negative mean log-likelihood as a function of the unconstrained vector; this is
/// exactly what the optimizer minimizes.
std::function<double(std::span<const double>)> make_objective(const QuasiLikelihood& lik,
                                                               const Reparameterization& rep);

struct FitOptions {
    int starts = 5;
    int max_iterations = 1000;
    double gradient_tolerance = 1e-6;
    std::size_t min_window = 50;
    std::vector<int> lb_lags{1, 5, 10};
    PsiConstraint psi_constraint = PsiConstraint::Identified;
    std::uint64_t seed = 20240101;
    unsigned threads = 1;
    /// Extra starting points, e.g. a nested AMEM optimum.
    std::vector<ParamSet> warm_starts;
};

struct ConvergenceReport {
    bool converged = false;
    int iterations = 0;
    int evaluations = 0;
    double gradient_norm = 0.0;          // transformed space, mean log-likelihood
    double natural_gradient_norm = 0.0;  // natural parameters, mean log-likelihood
    std::string method;
    int best_start = 0;
    int starts_converged = 0;
    ConstraintReport constraints;
    std::vector<std::string> notes;
};

struct EstimationResult {
    ModelKind kind = ModelKind::AMEM;
    IndexRange window;
    ParamSet params;
    std::vector<std::string> names;
    std::vector<double> estimates;
    std::vector<double> robust_se;
    std::vector<double> hessian_se;
    double loglik = 0.0;
    std::size_t nobs = 0;  // sample size of the window
    std::size_t k = 0;
    double aic = 0.0;
    double bic = 0.0;
    LjungBoxResult ljung_box;
    ConvergenceReport convergence;
};

/// Maximizes the Gamma quasi-likelihood over window. Throws PreconditionError on a
/// short window and NumericalError when no start converges or the Hessian is singular.
EstimationResult fit(ModelKind kind, const Panel& panel, IndexRange window, const FitOptions& options = {});

struct FitOutcome {
    ModelKind kind = ModelKind::AMEM;
    std::optional<EstimationResult> result;
    std::string error;
};

/// Fits AMEM first and passes its optimum as a warm start to every policy kind,
/// so that each policy kind's likelihood is at least the nested AMEM maximum.
std::vector<FitOutcome> fit_all(std::span<const ModelKind> kinds, const Panel& panel, IndexRange window,
                                const FitOptions& options = {});

struct RobustSeOptions {
    /// Sup-norm bound on the mean-log-likelihood gradient that qualifies an optimum.
    double gradient_tolerance = 1e-3;
};

/// Sandwich standard errors of the free parameters at an interior optimum.
std::vector<double> robust_se(ModelKind kind, const ParamSet& estimate, const Panel& panel, IndexRange window,
                              const RobustSeOptions& options = {});

/// Mean log-likelihood over the window and its central-difference gradient with
/// respect to the free natural parameters.
struct LoglikGradient {
    double mean_loglik = 0.0;
    std::vector<double> gradient;
};
LoglikGradient loglik_gradient(ModelKind kind, const ParamSet& params, const Panel& panel, IndexRange window);

}  // namespace mapvol
