#pragma once

#include "mapvol/data.hpp"
#include "mapvol/estimate.hpp"
#include "mapvol/evaluate.hpp"
#include "mapvol/forecast.hpp"
#include "mapvol/simulate.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mapvol {

/**
 * @brief Everything a run needs. Each field has a default; parse_config fills
 * only what the file sets and rejects keys it does not know.
 */
struct RunConfig {
    std::string input;
    CsvFormat csv;
    std::vector<ModelKind> models{kAllModelKinds.begin(), kAllModelKinds.end()};
    std::optional<Date> window_start;
    std::optional<Date> window_end;

    FitOptions fit;

    std::optional<Date> origin;  // default: last day of the estimation window
    std::size_t horizon = 250;
    ForecastOptions forecast;
    ForecastRules rules;
    std::optional<double> shock;  // default: sd of x over the window
    bool monte_carlo = false;
    std::size_t mc_draws = 10000;
    double mc_x_step_sd = 0.0;
    std::vector<int> tau{0, 1, 5};

    std::vector<Date> splits;
    bool evaluate_next_year = true;  // false: evaluate through the panel end
    std::size_t min_evaluation_days = 250;
    bool rolling = false;
    std::size_t refit_every = 22;
    std::vector<LossType> losses{LossType::MSE, LossType::QLike};
    McsOptions mcs;

    SimScenario simulation;  // params are reference_params(kind) with simulation_params applied
    std::map<std::string, double> simulation_params;
    std::string simulation_output;  // default: <output_dir>/simulated.csv

    int stylized_window = 5;

    std::string output_dir = "mapvol_out";
    std::vector<std::string> formats{"json", "text", "csv", "svg"};
    std::uint64_t seed = 20240101;
    unsigned threads = 0;  // 0: MAPVOL_THREADS, else the hardware concurrency
};

/// Throws UsageError naming the offending key.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

/// Resolved configuration (thread count and output directory left out so outputs do not depend on them).
nlohmann::ordered_json config_to_json(const RunConfig& c);

/// Exit codes: 0 success, 1 usage, 2 data, 3 numerical.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumerical = 3 };

/// Entry point of the mapvol binary.
int run_cli(int argc, const char* const* argv);

}  // namespace mapvol
