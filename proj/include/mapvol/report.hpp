#pragma once

#include "mapvol/data.hpp"
#include "mapvol/estimate.hpp"
#include "mapvol/evaluate.hpp"
#include "mapvol/forecast.hpp"
#include "mapvol/model.hpp"

#include <json.hpp>

#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace mapvol {

using Json = nlohmann::ordered_json;

Json to_json(const ParamSet& p);
Json to_json(const EstimationResult& r);
Json to_json(const ForecastPath& p);
Json to_json(const IrfPath& p);
Json to_json(const MarginalEffect& m, bool with_series = false);
Json to_json(const McsResult& r);
Json to_json(const AnnouncementStats& s);
Json to_json(const LjungBoxResult& lb);

/// Coefficients with robust standard errors underneath, log-likelihood and
/// Ljung-Box p-values; one column per model.
void write_estimation_table(std::ostream& out, std::span<const EstimationResult> results);

struct ComparisonRow {
    ModelKind kind = ModelKind::AMEM;
    double aic = 0.0;
    double bic = 0.0;
    double mse = 0.0;
    double qlike = 0.0;
};

/// In-sample information criteria and mean losses; the best entry per row is starred.
void write_comparison_table(std::ostream& out, std::span<const ComparisonRow> rows);

/// Average marginal effects, x block then delta block, one column per model.
void write_marginal_effect_table(std::ostream& out, std::span<const MarginalEffect> effects);

struct McsGridColumn {
    std::string label;  // evaluation period, e.g. the year after the split
    std::optional<McsResult> mse;
    std::optional<McsResult> qlike;
};

/// Membership grid: 'm'/'q' mark the MSE/QLike sets, 'M'/'Q' the best model.
void write_mcs_grid(std::ostream& out, std::span<const std::string> models, std::span<const McsGridColumn> columns,
                    double level);

void write_stylized_table(std::ostream& out, const AnnouncementStats& stats);

void write_forecast_csv(std::ostream& out, const ForecastPath& path);
void write_irf_csv(std::ostream& out, const IrfPath& irf);
void write_marginal_series_csv(std::ostream& out, const MarginalEffect& m, const Panel& panel);

/// Fixed-precision number for text tables and CSV.
std::string fixed(double v, int digits = 3);

}  // namespace mapvol
