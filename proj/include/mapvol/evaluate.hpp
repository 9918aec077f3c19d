#pragma once

#include "mapvol/data.hpp"
#include "mapvol/estimate.hpp"
#include "mapvol/model.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mapvol {

enum class LossType { MSE, QLike };

std::string_view to_string(LossType l) noexcept;
LossType parse_loss_type(std::string_view name);

/// MSE_t = (rv - f)^2, QLike_t = rv/f - ln(rv/f) - 1.
double loss(double forecast, double realized, LossType type);
std::vector<double> losses(std::span<const double> forecasts, std::span<const double> realized, LossType type);

struct MeanLosses {
    double mse = 0.0;
    double qlike = 0.0;
};

/// Mean in-sample losses of a filter output over t >= first.
MeanLosses in_sample_losses(const FilterOutput& f, const Panel& panel, std::size_t first = 1);

/// Per-day losses, one column per model, all on the same evaluation days.
struct LossMatrix {
    LossType loss = LossType::QLike;
    std::vector<std::string> models;
    std::vector<std::vector<double>> columns;  // columns[model][day]
    std::vector<Date> dates;
    std::optional<Date> split;

    [[nodiscard]] std::size_t days() const noexcept { return dates.size(); }
    [[nodiscard]] std::size_t model_count() const noexcept { return columns.size(); }
    [[nodiscard]] std::vector<double> mean_losses() const;
};

/// Builds a matrix from raw columns (dates may be left empty; they are then numbered days).
LossMatrix make_loss_matrix(LossType type, std::vector<std::string> models, std::vector<std::vector<double>> columns,
                            std::vector<Date> dates = {});

struct OosOptions {
    std::optional<Date> window_start;  // first estimation day; default: panel start
    std::optional<Date> evaluation_end;  // last evaluation day; default: panel end
    std::size_t min_evaluation_days = 250;
    bool rolling = false;         // re-estimate on a moving window
    std::size_t refit_every = 22;  // days between re-estimations when rolling
    FitOptions fit;
};

struct OosColumn {
    ModelKind kind = ModelKind::AMEM;
    std::vector<double> forecasts;
    std::optional<EstimationResult> estimate;  // fixed scheme, or the first rolling fit
};

struct OosRun {
    Date split;
    IndexRange estimation;  // in panel indices
    IndexRange evaluation;
    std::vector<Date> dates;
    std::vector<double> realized;
    std::vector<OosColumn> columns;  // successful models, in the requested order
    std::vector<std::pair<ModelKind, std::string>> failed;

    [[nodiscard]] LossMatrix loss_matrix(LossType type) const;
};

/**
 * @brief One-step-ahead out-of-sample forecasts after a split date.
 *
 * Each model is estimated on [window start, split] and the filter runs through
 * the evaluation days, so the forecast for day t uses realized data through t-1
 * and the announcement flag of day t. A model whose estimation fails is listed
 * in `failed` and the run continues.
 */
OosRun oos_forecast_run(std::span<const ModelKind> kinds, const Panel& panel, Date split, const OosOptions& options = {});

/// Stationary bootstrap resample of {0..n-1} with geometric blocks of the given mean length.
std::vector<std::size_t> stationary_bootstrap_indices(std::size_t n, double mean_block, std::mt19937_64& rng);

struct McsOptions {
    double level = 0.10;
    std::size_t replications = 5000;
    double block_length = 22.0;
    std::uint64_t seed = 20240101;
    unsigned threads = 1;
};

struct McsResult {
    std::vector<std::string> models;
    std::vector<double> pvalue;              // MCS p-value per model (input order)
    std::vector<std::size_t> elimination;    // model indices, first eliminated first; the last is the best
    std::vector<double> statistic;           // range statistic at each elimination step
    std::vector<bool> member;                // pvalue > level
    std::size_t best = 0;
    McsOptions options;
    std::string statistic_name = "range";
    std::string tie_rule = "ties broken by model order";

    [[nodiscard]] std::vector<std::size_t> survivors() const;
};

/**
 * @brief Sequential elimination with the range statistic max |t_ij| and a
 * stationary bootstrap. Each replication draws its own seeded index resample,
 * shared by all models. MCS p-values are running maxima of the elimination
 * p-values; the last model has p = 1.
 */
McsResult model_confidence_set(const LossMatrix& losses, const McsOptions& options = {});

/// Survivors recomputed at another level from the same p-values.
std::vector<std::size_t> mcs_members(const McsResult& r, double level);

}  // namespace mapvol
