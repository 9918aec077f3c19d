#include "mapvol/evaluate.hpp"

#include "mapvol/error.hpp"
#include "mapvol/parallel.hpp"
#include "mapvol/simulate.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>

namespace mapvol {

std::string_view to_string(LossType l) noexcept { return l == LossType::MSE ? "MSE" : "QLike"; }

LossType parse_loss_type(std::string_view name) {
    std::string s;
    for (char c : name) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (s == "mse") return LossType::MSE;
    if (s == "qlike") return LossType::QLike;
    throw UsageError("unknown loss '" + std::string(name) + "' (expected MSE or QLike)");
}

double loss(double forecast, double realized, LossType type) {
    if (!(realized > 0.0)) throw PreconditionError("realized values must be positive");
    if (type == LossType::MSE) {
        const double e = realized - forecast;
        return e * e;
    }
    if (!(forecast > 0.0)) throw PreconditionError("QLike needs positive forecasts");
    const double r = realized / forecast;
    return r - std::log(r) - 1.0;
}

std::vector<double> losses(std::span<const double> forecasts, std::span<const double> realized, LossType type) {
    if (forecasts.size() != realized.size()) throw PreconditionError("forecast and realized lengths differ");
    std::vector<double> out(forecasts.size());
    for (std::size_t t = 0; t < out.size(); ++t) out[t] = loss(forecasts[t], realized[t], type);
    return out;
}

MeanLosses in_sample_losses(const FilterOutput& f, const Panel& panel, std::size_t first) {
    if (!f.valid || f.mu.size() != panel.size()) throw PreconditionError("in-sample losses need a valid filter output");
    if (first >= panel.size()) throw PreconditionError("no days to evaluate");
    MeanLosses m;
    for (std::size_t t = first; t < panel.size(); ++t) {
        m.mse += loss(f.mu[t], panel.rv()[t], LossType::MSE);
        m.qlike += loss(f.mu[t], panel.rv()[t], LossType::QLike);
    }
    const auto n = static_cast<double>(panel.size() - first);
    m.mse /= n;
    m.qlike /= n;
    return m;
}

std::vector<double> LossMatrix::mean_losses() const {
    std::vector<double> m;
    m.reserve(columns.size());
    for (const auto& c : columns) {
        m.push_back(c.empty() ? 0.0 : std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(c.size()));
    }
    return m;
}

LossMatrix make_loss_matrix(LossType type, std::vector<std::string> models, std::vector<std::vector<double>> columns,
                            std::vector<Date> dates) {
    if (models.size() != columns.size()) throw PreconditionError("one name per loss column required");
    if (columns.empty()) throw PreconditionError("loss matrix needs at least one column");
    const std::size_t n = columns.front().size();
    for (const auto& c : columns) {
        if (c.size() != n) throw PreconditionError("loss columns have different lengths");
        for (double v : c) {
            if (!std::isfinite(v)) throw PreconditionError("loss matrix has a missing or non-finite entry");
        }
    }
    if (dates.empty()) {
        dates = business_days(Date{std::chrono::year{2000} / 1 / 3}, n);
    } else if (dates.size() != n) {
        throw PreconditionError("loss matrix dates do not match the column length");
    }
    LossMatrix m;
    m.loss = type;
    m.models = std::move(models);
    m.columns = std::move(columns);
    m.dates = std::move(dates);
    return m;
}

LossMatrix OosRun::loss_matrix(LossType type) const {
    std::vector<std::string> names;
    std::vector<std::vector<double>> cols;
    for (const auto& c : columns) {
        names.emplace_back(to_string(c.kind));
        cols.push_back(losses(c.forecasts, realized, type));
    }
    if (cols.empty()) throw NumericalError("every model failed; no loss columns");
    LossMatrix m = make_loss_matrix(type, std::move(names), std::move(cols), dates);
    m.split = split;
    return m;
}

namespace {

// One-step forecasts for [from, to) from parameters estimated on est (panel indices).
std::vector<double> one_step(ModelKind kind, const ParamSet& params, const Panel& panel, IndexRange est,
                             std::size_t from, std::size_t to) {
    const Panel sub = panel.slice({est.begin, to});
    const CenteredCovariates cov = center_covariates(sub, {0, est.size()});
    const FilterOutput f = filter(kind, params, sub, cov);
    if (!f.valid) {
        throw NumericalError("filter invalid at day " + std::to_string(*f.invalid_index + est.begin) + ": " +
                             f.diagnostic);
    }
    return {f.mu.begin() + static_cast<std::ptrdiff_t>(from - est.begin),
            f.mu.begin() + static_cast<std::ptrdiff_t>(to - est.begin)};
}

}  // namespace

OosRun oos_forecast_run(std::span<const ModelKind> kinds, const Panel& panel, Date split, const OosOptions& options) {
    if (kinds.empty()) throw PreconditionError("no models requested");
    const auto last_in = panel.last_index_on_or_before(split);
    if (!last_in) throw PreconditionError("split date " + format_date(split) + " precedes the panel");
    std::size_t begin = 0;
    if (options.window_start) {
        const auto b = panel.first_index_after(*options.window_start - std::chrono::days{1});
        if (!b) throw PreconditionError("estimation start is after the panel end");
        begin = *b;
    }
    std::size_t end = panel.size();
    if (options.evaluation_end) {
        const auto e = panel.last_index_on_or_before(*options.evaluation_end);
        if (!e) throw PreconditionError("evaluation end precedes the panel");
        end = *e + 1;
    }
    OosRun run;
    run.split = split;
    run.estimation = {begin, *last_in + 1};
    run.evaluation = {*last_in + 1, end};
    if (run.estimation.size() < options.fit.min_window) {
        throw PreconditionError("estimation window has " + std::to_string(run.estimation.size()) +
                                " days, fewer than " + std::to_string(options.fit.min_window));
    }
    if (run.evaluation.size() < options.min_evaluation_days) {
        throw PreconditionError("split leaves " + std::to_string(run.evaluation.size()) +
                                " evaluation days, fewer than " + std::to_string(options.min_evaluation_days));
    }
    for (std::size_t t = run.evaluation.begin; t < run.evaluation.end; ++t) {
        run.dates.push_back(panel.dates()[t]);
        run.realized.push_back(panel.rv()[t]);
    }

    const auto fits = fit_all(kinds, panel, run.estimation, options.fit);
    for (const auto& outcome : fits) {
        if (!outcome.result) {
            run.failed.emplace_back(outcome.kind, outcome.error);
            continue;
        }
        OosColumn col;
        col.kind = outcome.kind;
        col.estimate = outcome.result;
        try {
            if (!options.rolling) {
                col.forecasts = one_step(outcome.kind, outcome.result->params, panel, run.estimation,
                                         run.evaluation.begin, run.evaluation.end);
            } else {
                const std::size_t width = run.estimation.size();
                const std::size_t step = std::max<std::size_t>(options.refit_every, 1);
                ParamSet params = outcome.result->params;
                for (std::size_t r = run.evaluation.begin; r < run.evaluation.end; r += step) {
                    const IndexRange est{r - width, r};
                    if (r != run.evaluation.begin) {
                        FitOptions fo = options.fit;
                        fo.warm_starts.push_back(params);
                        params = fit(outcome.kind, panel, est, fo).params;
                    }
                    const auto block = one_step(outcome.kind, params, panel, est, r,
                                                std::min(r + step, run.evaluation.end));
                    col.forecasts.insert(col.forecasts.end(), block.begin(), block.end());
                }
            }
        } catch (const std::exception& e) {
            run.failed.emplace_back(outcome.kind, e.what());
            continue;
        }
        run.columns.push_back(std::move(col));
    }
    return run;
}

std::vector<std::size_t> stationary_bootstrap_indices(std::size_t n, double mean_block, std::mt19937_64& rng) {
    if (n == 0) return {};
    if (!(mean_block >= 1.0)) throw PreconditionError("mean block length must be >= 1");
    std::uniform_int_distribution<std::size_t> start(0, n - 1);
    std::bernoulli_distribution restart(1.0 / mean_block);
    std::vector<std::size_t> idx(n);
    idx[0] = start(rng);
    for (std::size_t t = 1; t < n; ++t) idx[t] = restart(rng) ? start(rng) : (idx[t - 1] + 1) % n;
    return idx;
}

std::vector<std::size_t> McsResult::survivors() const {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < member.size(); ++i) {
        if (member[i]) s.push_back(i);
    }
    return s;
}

std::vector<std::size_t> mcs_members(const McsResult& r, double level) {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < r.pvalue.size(); ++i) {
        if (r.pvalue[i] > level) s.push_back(i);
    }
    return s;
}

namespace {

double safe_ratio(double num, double sd) {
    if (sd > 0.0) return num / sd;
    if (num == 0.0) return 0.0;
    return num > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
}

}  // namespace

McsResult model_confidence_set(const LossMatrix& losses, const McsOptions& options) {
    const std::size_t m = losses.model_count();
    const std::size_t n = losses.days();
    if (m < 2) throw PreconditionError("the model confidence set needs at least two models");
    if (n < 100) throw PreconditionError("the model confidence set needs at least 100 evaluation days");
    if (options.replications < 1) throw PreconditionError("at least one bootstrap replication required");
    if (!(options.level > 0.0 && options.level < 1.0)) throw PreconditionError("level must be in (0,1)");

    const std::vector<double> mean = losses.mean_losses();

    // boot[b * m + i]: mean loss of model i in replication b.
    const std::size_t B = options.replications;
    std::vector<double> boot(B * m);
    parallel_for(B, options.threads, [&](std::size_t b) {
        auto rng = make_stream(options.seed, b);
        const auto idx = stationary_bootstrap_indices(n, options.block_length, rng);
        for (std::size_t i = 0; i < m; ++i) {
            const auto& col = losses.columns[i];
            double s = 0.0;
            for (std::size_t t : idx) s += col[t];
            boot[b * m + i] = s / static_cast<double>(n);
        }
    });

    // Bootstrap standard deviation of each pairwise mean differential.
    std::vector<double> sd(m * m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            const double dbar = mean[i] - mean[j];
            double ss = 0.0;
            for (std::size_t b = 0; b < B; ++b) {
                const double e = (boot[b * m + i] - boot[b * m + j]) - dbar;
                ss += e * e;
            }
            sd[i * m + j] = sd[j * m + i] = std::sqrt(ss / static_cast<double>(B));
        }
    }

    McsResult r;
    r.models = losses.models;
    r.options = options;
    r.pvalue.assign(m, 1.0);
    std::vector<std::size_t> alive(m);
    std::iota(alive.begin(), alive.end(), 0);
    double running = 0.0;
    while (alive.size() > 1) {
        double stat = 0.0;
        std::size_t worst = alive.front();
        double worst_score = -std::numeric_limits<double>::infinity();
        for (std::size_t i : alive) {
            double score = -std::numeric_limits<double>::infinity();
            for (std::size_t j : alive) {
                if (i == j) continue;
                const double t = safe_ratio(mean[i] - mean[j], sd[i * m + j]);
                stat = std::max(stat, std::abs(t));
                score = std::max(score, t);
            }
            if (score > worst_score) {
                worst_score = score;
                worst = i;
            }
        }
        std::size_t exceed = 0;
        for (std::size_t b = 0; b < B; ++b) {
            double tb = 0.0;
            for (std::size_t a = 0; a < alive.size(); ++a) {
                for (std::size_t c = a + 1; c < alive.size(); ++c) {
                    const std::size_t i = alive[a], j = alive[c];
                    const double centered = (boot[b * m + i] - boot[b * m + j]) - (mean[i] - mean[j]);
                    tb = std::max(tb, std::abs(safe_ratio(centered, sd[i * m + j])));
                }
            }
            if (tb >= stat) ++exceed;
        }
        const double p = static_cast<double>(exceed) / static_cast<double>(B);
        running = std::max(running, p);
        r.pvalue[worst] = running;
        r.elimination.push_back(worst);
        r.statistic.push_back(stat);
        alive.erase(std::find(alive.begin(), alive.end(), worst));
    }
    r.best = alive.front();
    r.elimination.push_back(r.best);
    r.pvalue[r.best] = 1.0;
    r.member.resize(m);
    for (std::size_t i = 0; i < m; ++i) r.member[i] = r.pvalue[i] > options.level;
    return r;
}

}  // namespace mapvol
