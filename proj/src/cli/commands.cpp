#include "mapvol/cli.hpp"

#include "mapvol/error.hpp"
#include "mapvol/parallel.hpp"
#include "mapvol/report.hpp"
#include "mapvol/svg.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace mapvol {

namespace {

namespace fs = std::filesystem;
using OJ = nlohmann::ordered_json;

double decimal_year(Date d) {
    const std::chrono::year_month_day ymd{d};
    const Date jan1{ymd.year() / 1 / 1};
    return static_cast<int>(ymd.year()) + (d - jan1).count() / 365.25;
}

int year_of(Date d) { return static_cast<int>(std::chrono::year_month_day{d}.year()); }

class Session {
 public:
    explicit Session(RunConfig cfg) : cfg_(std::move(cfg)), out_(cfg_.output_dir) {}

    const RunConfig& cfg() const { return cfg_; }

    bool want(const char* format) const {
        return std::find(cfg_.formats.begin(), cfg_.formats.end(), format) != cfg_.formats.end();
    }

    void write(const std::string& name, const std::string& content) {
        fs::create_directories(out_);
        const fs::path p = out_ / name;
        std::ofstream f(p, std::ios::binary);
        if (!f) throw DataError("cannot write '" + p.string() + "'");
        f << content;
        std::cout << "wrote " << p.string() << "\n";
    }

    void write_json(const std::string& name, const OJ& j) {
        if (want("json")) write(name, j.dump(2) + "\n");
    }

    const Panel& panel() {
        if (!panel_) {
            if (cfg_.input.empty()) throw UsageError("missing field 'input' (data file path)");
            LoadReport r = load_panel(cfg_.input, cfg_.csv);
            for (const auto& d : r.dropped) {
                std::cerr << "warning: " << cfg_.input << " line " << d.line << " dropped: " << d.reason << "\n";
            }
            dropped_ = r.dropped.size();
            panel_.emplace(std::move(r.panel));
        }
        return *panel_;
    }

    IndexRange window() {
        const Panel& p = panel();
        std::size_t b = 0, e = p.size();
        if (cfg_.window_start) {
            const auto i = p.first_index_after(*cfg_.window_start - std::chrono::days{1});
            if (!i) throw UsageError("window.start is after the last observation");
            b = *i;
        }
        if (cfg_.window_end) {
            const auto i = p.last_index_on_or_before(*cfg_.window_end);
            if (!i) throw UsageError("window.end is before the first observation");
            e = *i + 1;
        }
        if (e <= b) throw UsageError("estimation window is empty");
        return {b, e};
    }

    OJ data_json() {
        const Panel& p = panel();
        const IndexRange w = window();
        OJ j;
        j["observations"] = p.size();
        j["dropped_rows"] = dropped_;
        j["first"] = format_date(p.dates().front());
        j["last"] = format_date(p.dates().back());
        j["window"] = {{"start", format_date(p.dates()[w.begin])},
                       {"end", format_date(p.dates()[w.end - 1])},
                       {"days", w.size()}};
        return j;
    }

    FitOptions fit_options() const {
        FitOptions o = cfg_.fit;
        o.seed = cfg_.seed;
        o.threads = cfg_.threads;
        return o;
    }

    const std::vector<FitOutcome>& fits() {
        if (!fits_) fits_ = fit_all(cfg_.models, panel(), window(), fit_options());
        return *fits_;
    }

    bool any_fit_failed() {
        return std::any_of(fits().begin(), fits().end(), [](const FitOutcome& f) { return !f.result; });
    }

    std::vector<EstimationResult> fitted() {
        std::vector<EstimationResult> r;
        for (const auto& f : fits()) {
            if (f.result) r.push_back(*f.result);
        }
        return r;
    }

    // Filter over [window.begin, end) centered on the estimation window.
    std::pair<Panel, CenteredCovariates> filter_span(std::size_t end) {
        const IndexRange w = window();
        Panel sub = panel().slice({w.begin, end});
        CenteredCovariates cov = center_covariates(sub, {0, w.size()});
        return {std::move(sub), std::move(cov)};
    }

    std::size_t origin() {
        const IndexRange w = window();
        if (!cfg_.origin) return w.end - 1;
        const auto i = panel().last_index_on_or_before(*cfg_.origin);
        if (!i || *i < w.begin) throw UsageError("forecast.origin precedes the estimation window");
        return *i;
    }

    OJ failures_json() {
        OJ a = OJ::array();
        for (const auto& f : fits()) {
            if (!f.result) a.push_back({{"model", to_string(f.kind)}, {"error", f.error}});
        }
        return a;
    }

 private:
    RunConfig cfg_;
    fs::path out_;
    std::optional<Panel> panel_;
    std::size_t dropped_ = 0;
    std::optional<std::vector<FitOutcome>> fits_;
};

void report_fit_failures(Session& s) {
    for (const auto& f : s.fits()) {
        if (!f.result) std::cerr << "error: " << to_string(f.kind) << " estimation failed: " << f.error << "\n";
    }
}

OJ header(Session& s, const char* command) {
    OJ j;
    j["command"] = command;
    j["config"] = config_to_json(s.cfg());
    return j;
}

int cmd_estimate(Session& s) {
    const auto results = s.fitted();
    const IndexRange w = s.window();
    const auto [sub, cov] = s.filter_span(w.end);

    OJ j = header(s, "estimate");
    j["data"] = s.data_json();
    OJ models = OJ::array();
    std::vector<ComparisonRow> rows;
    std::vector<MarginalEffect> effects;
    for (const auto& r : results) {
        const FilterOutput f = filter(r.kind, r.params, sub, cov);
        const MeanLosses ml = in_sample_losses(f, sub);
        rows.push_back({r.kind, r.aic, r.bic, ml.mse, ml.qlike});
        OJ m = to_json(r);
        m["in_sample"] = {{"mse", ml.mse}, {"qlike", ml.qlike}};
        if (is_additive(r.kind) && has_policy_terms(r.kind)) {
            m["policy_share_pct"] = 100.0 * policy_share(r.kind, f).average;
        }
        if (has_policy_terms(r.kind)) {
            OJ me = OJ::array();
            for (PolicyVariable v : {PolicyVariable::Proxy, PolicyVariable::Announcement}) {
                for (int tau : s.cfg().tau) {
                    try {
                        MarginalEffect e = marginal_effects(r.kind, r.params, f, sub, {0, sub.size()}, v, tau);
                        me.push_back(to_json(e));
                        if (tau == 0 && e.time_varying && s.want("csv")) {
                            std::ostringstream csv;
                            write_marginal_series_csv(csv, e, sub);
                            s.write("marginal_" + std::string(to_string(r.kind)) + "_" +
                                        std::string(to_string(v)) + ".csv",
                                    csv.str());
                        }
                        effects.push_back(std::move(e));
                    } catch (const PreconditionError& e) {
                        me.push_back({{"variable", to_string(v)}, {"tau", tau}, {"error", e.what()}});
                    }
                }
            }
            m["marginal_effects"] = me;
        }
        models.push_back(m);

        if (s.want("csv")) {
            std::ostringstream csv;
            write_components(csv, sub, f);
            s.write("components_" + std::string(to_string(r.kind)) + ".csv", csv.str());
        }
        if (s.want("svg") && has_policy_terms(r.kind)) {
            Chart c;
            c.title = std::string(to_string(r.kind)) + " components";
            c.x_label = "year";
            c.y_label = "base component";
            c.y2_label = "policy component";
            ChartSeries base{"sigma", {}, {}, false, false}, pol{"xi", {}, {}, true, true};
            for (std::size_t t = 0; t < sub.size(); ++t) {
                const double x = decimal_year(sub.dates()[t]);
                base.x.push_back(x);
                base.y.push_back(f.sigma[t]);
                pol.x.push_back(x);
                pol.y.push_back(f.xi[t]);
            }
            c.series = {base, pol};
            s.write("components_" + std::string(to_string(r.kind)) + ".svg", render_svg(c));
        }
    }
    j["models"] = models;
    j["failures"] = s.failures_json();
    s.write_json("estimate.json", j);

    if (s.want("text")) {
        std::ostringstream t;
        write_estimation_table(t, results);
        t << "\n";
        write_comparison_table(t, rows);
        if (!effects.empty()) {
            t << "\n";
            write_marginal_effect_table(t, effects);
        }
        s.write("estimate.txt", t.str());
    }
    report_fit_failures(s);
    return s.any_fit_failed() ? kExitNumerical : kExitOk;
}

struct ForecastInputs {
    Panel sub;
    CenteredCovariates cov;
    std::size_t origin = 0;  // in sub
};

ForecastInputs forecast_inputs(Session& s) {
    const std::size_t origin = s.origin();
    auto [sub, cov] = s.filter_span(origin + 1);
    return {std::move(sub), std::move(cov), origin - s.window().begin};
}

int cmd_forecast(Session& s) {
    const auto results = s.fitted();
    const ForecastInputs in = forecast_inputs(s);
    OJ j = header(s, "forecast");
    j["origin"] = format_date(in.sub.dates()[in.origin]);
    OJ paths = OJ::array();
    Chart chart;
    chart.title = "Multi-step forecasts from " + format_date(in.sub.dates()[in.origin]);
    chart.x_label = "step";
    chart.y_label = "expected volatility";
    for (const auto& r : results) {
        const FilterOutput f = filter(r.kind, r.params, in.sub, in.cov);
        const ForecastState st = make_state(in.sub, in.cov, f, in.origin);
        OJ pj;
        try {
            const ForecastPath p = multi_step_forecast(r.kind, r.params, st, s.cfg().rules, s.cfg().horizon,
                                                       s.cfg().forecast);
            pj = to_json(p);
            try {
                pj["unconditional_mean"] = unconditional_mean(r.kind, r.params);
            } catch (const PreconditionError&) {
                pj["unconditional_mean"] = nullptr;
            }
            if (!p.convergence_horizon) {
                std::cerr << "note: " << to_string(r.kind) << " path not converged within " << p.horizon
                          << " steps\n";
            }
            if (s.cfg().monte_carlo) {
                MonteCarloOptions mc;
                mc.draws = s.cfg().mc_draws;
                mc.seed = s.cfg().seed;
                mc.threads = s.cfg().threads;
                mc.x_step_sd = s.cfg().mc_x_step_sd;
                const ForecastPath m =
                    monte_carlo_forecast(r.kind, r.params, st, s.cfg().rules, s.cfg().horizon, mc, s.cfg().forecast);
                double bias = 0.0;
                for (std::size_t h = 0; h < m.mu.size(); ++h) bias = std::max(bias, std::abs(m.mu[h] - p.mu[h]));
                pj["monte_carlo"] = {{"draws", mc.draws}, {"mu", m.mu}, {"max_abs_plugin_gap", bias}};
            }
            if (s.want("csv")) {
                std::ostringstream csv;
                write_forecast_csv(csv, p);
                s.write("forecast_" + std::string(to_string(r.kind)) + ".csv", csv.str());
            }
            ChartSeries cs{std::string(to_string(r.kind)), {}, p.mu, false, false};
            for (std::size_t h = 1; h <= p.mu.size(); ++h) cs.x.push_back(static_cast<double>(h));
            chart.series.push_back(std::move(cs));
        } catch (const NumericalError& e) {
            pj = {{"model", to_string(r.kind)}, {"error", e.what()}};
            std::cerr << "error: " << to_string(r.kind) << " forecast: " << e.what() << "\n";
        }
        paths.push_back(pj);
    }
    j["paths"] = paths;
    j["failures"] = s.failures_json();
    s.write_json("forecast.json", j);
    if (s.want("svg") && !chart.series.empty()) s.write("forecast.svg", render_svg(chart));
    report_fit_failures(s);
    return s.any_fit_failed() ? kExitNumerical : kExitOk;
}

int cmd_irf(Session& s) {
    const auto results = s.fitted();
    const ForecastInputs in = forecast_inputs(s);
    const double shock = s.cfg().shock ? *s.cfg().shock : default_shock(s.panel(), s.window());
    OJ j = header(s, "irf");
    j["origin"] = format_date(in.sub.dates()[in.origin]);
    j["shock"] = shock;
    j["shock_source"] = s.cfg().shock ? "config" : "sd of x over the estimation window";
    OJ paths = OJ::array();
    Chart chart;
    chart.title = "Response to a sustained proxy shock of " + fixed(shock, 3);
    chart.x_label = "step";
    chart.y_label = "shocked minus baseline";
    int status = kExitOk;
    // AMEM stays in as the zero-response reference.
    for (const auto& r : results) {
        const FilterOutput f = filter(r.kind, r.params, in.sub, in.cov);
        const ForecastState st = make_state(in.sub, in.cov, f, in.origin);
        try {
            const IrfPath irf = impulse_response(r.kind, r.params, st, s.cfg().rules, s.cfg().horizon, shock,
                                                 s.cfg().forecast);
            paths.push_back(to_json(irf));
            if (s.want("csv")) {
                std::ostringstream csv;
                write_irf_csv(csv, irf);
                s.write("irf_" + std::string(to_string(r.kind)) + ".csv", csv.str());
            }
            ChartSeries cs{std::string(to_string(r.kind)), {}, irf.diff, false, false};
            for (std::size_t h = 1; h <= irf.diff.size(); ++h) cs.x.push_back(static_cast<double>(h));
            chart.series.push_back(std::move(cs));
        } catch (const NumericalError& e) {
            paths.push_back({{"model", to_string(r.kind)}, {"error", e.what()}});
            std::cerr << "error: " << to_string(r.kind) << " impulse response: " << e.what() << "\n";
            status = kExitNumerical;
        }
    }
    j["paths"] = paths;
    j["failures"] = s.failures_json();
    s.write_json("irf.json", j);
    if (s.want("svg") && !chart.series.empty()) s.write("irf.svg", render_svg(chart));
    report_fit_failures(s);
    return s.any_fit_failed() ? kExitNumerical : status;
}

struct SplitRun {
    std::string label;
    OosRun run;
};

std::vector<SplitRun> run_splits(Session& s) {
    if (s.cfg().splits.empty()) throw UsageError("missing field 'evaluation.splits' (at least one split date)");
    std::vector<SplitRun> out;
    for (Date split : s.cfg().splits) {
        OosOptions o;
        o.window_start = s.cfg().window_start;
        if (s.cfg().evaluate_next_year) {
            o.evaluation_end = Date{std::chrono::year{year_of(split) + 1} / 12 / 31};
        }
        o.min_evaluation_days = s.cfg().min_evaluation_days;
        o.rolling = s.cfg().rolling;
        o.refit_every = s.cfg().refit_every;
        o.fit = s.fit_options();
        OosRun run = oos_forecast_run(s.cfg().models, s.panel(), split, o);
        for (const auto& [kind, err] : run.failed) {
            std::cerr << "error: split " << format_date(split) << ": " << to_string(kind) << " failed: " << err << "\n";
        }
        const std::string label = s.cfg().evaluate_next_year ? std::to_string(year_of(run.dates.front()))
                                                              : format_date(split);
        out.push_back({label, std::move(run)});
    }
    return out;
}

OJ split_json(const SplitRun& sr, const std::vector<LossType>& types) {
    const OosRun& run = sr.run;
    OJ j;
    j["label"] = sr.label;
    j["split"] = format_date(run.split);
    j["evaluation"] = {{"first", format_date(run.dates.front())},
                       {"last", format_date(run.dates.back())},
                       {"days", run.dates.size()}};
    OJ models = OJ::array();
    for (const auto& c : run.columns) {
        OJ m;
        m["model"] = to_string(c.kind);
        for (LossType t : types) {
            const auto l = losses(c.forecasts, run.realized, t);
            double sum = 0.0;
            for (double v : l) sum += v;
            m[std::string(to_string(t))] = sum / static_cast<double>(l.size());
        }
        models.push_back(m);
    }
    j["models"] = models;
    OJ failed = OJ::array();
    for (const auto& [kind, err] : run.failed) failed.push_back({{"model", to_string(kind)}, {"error", err}});
    j["failed"] = failed;
    return j;
}

void write_loss_csv(Session& s, const SplitRun& sr) {
    if (!s.want("csv") || sr.run.columns.empty()) return;
    std::vector<LossMatrix> mats;
    for (LossType t : s.cfg().losses) mats.push_back(sr.run.loss_matrix(t));
    std::ostringstream csv;
    csv << "date,rv";
    for (const auto& m : mats) {
        for (const auto& name : m.models) csv << ',' << name << '_' << to_string(m.loss);
    }
    csv << '\n';
    for (std::size_t t = 0; t < sr.run.dates.size(); ++t) {
        csv << format_date(sr.run.dates[t]) << ',' << sr.run.realized[t];
        for (const auto& m : mats) {
            for (const auto& col : m.columns) csv << ',' << col[t];
        }
        csv << '\n';
    }
    s.write("losses_" + sr.label + ".csv", csv.str());
}

int cmd_evaluate(Session& s) {
    const auto runs = run_splits(s);
    OJ j = header(s, "evaluate");
    OJ splits = OJ::array();
    bool failed = false;
    for (const auto& sr : runs) {
        splits.push_back(split_json(sr, s.cfg().losses));
        write_loss_csv(s, sr);
        failed = failed || !sr.run.failed.empty();
    }
    j["splits"] = splits;
    s.write_json("evaluate.json", j);
    return failed ? kExitNumerical : kExitOk;
}

int cmd_mcs(Session& s) {
    if (s.cfg().models.size() < 2) throw UsageError("the model confidence set needs at least two models");
    const auto runs = run_splits(s);
    McsOptions mo = s.cfg().mcs;
    mo.seed = s.cfg().seed;
    mo.threads = s.cfg().threads;

    OJ j = header(s, "mcs");
    OJ splits = OJ::array();
    std::vector<McsGridColumn> grid;
    bool failed = false;
    for (const auto& sr : runs) {
        OJ sj = split_json(sr, s.cfg().losses);
        McsGridColumn col;
        col.label = sr.label;
        OJ results;
        if (sr.run.columns.size() < 2) {
            sj["note"] = "fewer than two models estimated; set not computed";
            failed = true;
        } else {
            for (LossType t : s.cfg().losses) {
                McsResult r = model_confidence_set(sr.run.loss_matrix(t), mo);
                results[std::string(to_string(t))] = to_json(r);
                (t == LossType::MSE ? col.mse : col.qlike) = std::move(r);
            }
        }
        sj["mcs"] = results;
        failed = failed || !sr.run.failed.empty();
        splits.push_back(sj);
        write_loss_csv(s, sr);
        grid.push_back(std::move(col));
    }
    j["splits"] = splits;
    s.write_json("mcs.json", j);
    if (s.want("text")) {
        std::vector<std::string> names;
        for (ModelKind k : s.cfg().models) names.emplace_back(to_string(k));
        std::ostringstream t;
        write_mcs_grid(t, names, grid, mo.level);
        s.write("mcs.txt", t.str());
    }
    return failed ? kExitNumerical : kExitOk;
}

int cmd_simulate(Session& s) {
    SimScenario sc = s.cfg().simulation;
    sc.seed = s.cfg().seed;
    sc.params = reference_params(sc.kind);
    for (const auto& [name, value] : s.cfg().simulation_params) {
        double* slot = name == "omega"   ? &sc.params.omega
                       : name == "alpha" ? &sc.params.alpha
                       : name == "beta"  ? &sc.params.beta
                       : name == "gamma" ? &sc.params.gamma
                       : name == "delta" ? &sc.params.delta
                       : name == "phi"   ? &sc.params.phi
                       : name == "psi"   ? &sc.params.psi
                                         : &sc.params.shape;
        *slot = value;
    }
    const SimResult sim = simulate_panel(sc);
    const fs::path target = s.cfg().simulation_output.empty() ? fs::path(s.cfg().output_dir) / "simulated.csv"
                                                              : fs::path(s.cfg().simulation_output);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    save_panel(target, sim.panel);
    std::cout << "wrote " << target.string() << "\n";

    double m = 0.0, v = 0.0;
    for (double e : sim.eps) m += e;
    m /= static_cast<double>(sim.eps.size());
    for (double e : sim.eps) v += (e - m) * (e - m);
    v /= static_cast<double>(sim.eps.size() - 1);
    OJ j = header(s, "simulate");
    j["panel"] = target.string();
    j["model"] = to_string(sc.kind);
    j["params"] = to_json(sc.params);
    j["length"] = sc.length;
    j["seed"] = sc.seed;
    j["eps_mean"] = m;
    j["eps_variance"] = v;
    j["init_level"] = sim.covariates.init_level;
    s.write_json("simulate.json", j);
    if (s.want("csv")) {
        std::ostringstream csv;
        write_components(csv, sim.panel, sim.truth);
        s.write("simulated_truth.csv", csv.str());
    }
    return kExitOk;
}

int cmd_stylized(Session& s) {
    const Panel sub = s.panel().slice(s.window());
    const AnnouncementStats st = announcement_window_stats(sub, s.cfg().stylized_window);
    OJ j = header(s, "stylized");
    j["data"] = s.data_json();
    j["announcements"] = to_json(st);
    s.write_json("stylized.json", j);
    if (s.want("text")) {
        std::ostringstream t;
        write_stylized_table(t, st);
        s.write("stylized.txt", t.str());
    }
    return kExitOk;
}

int cmd_report(Session& s) {
    int status = cmd_estimate(s);
    status = std::max(status, cmd_forecast(s));
    status = std::max(status, cmd_irf(s));
    try {
        status = std::max(status, cmd_stylized(s));
    } catch (const PreconditionError& e) {
        std::cerr << "note: stylized facts skipped: " << e.what() << "\n";
    }
    if (!s.cfg().splits.empty()) status = std::max(status, cmd_mcs(s));
    return status;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (c != ' ') {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

struct Overrides {
    std::string config;
    std::optional<unsigned> threads;
    std::optional<std::string> input;
    std::optional<std::string> output_dir;
    std::optional<std::string> models;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> horizon;
    std::optional<std::string> origin;
    std::optional<double> shock;
    std::vector<std::string> splits;
    std::optional<std::size_t> replications;
    std::optional<double> level;
    std::optional<std::string> formats;
    std::optional<std::string> window_start;
    std::optional<std::string> window_end;
    std::optional<int> starts;
    std::optional<std::string> sim_model;
    std::optional<std::size_t> sim_length;
    std::optional<std::string> sim_output;
    bool monte_carlo = false;
};

Date flag_date(const std::string& flag, const std::string& text) {
    try {
        return parse_date(text);
    } catch (const DataError& e) {
        throw UsageError("--" + flag + ": " + e.what());
    }
}

RunConfig resolve(const Overrides& o) {
    RunConfig c = o.config.empty() ? parse_config(nlohmann::json::object()) : load_config(o.config);
    if (o.threads) c.threads = *o.threads;
    if (c.threads == 0) c.threads = default_thread_count();
    if (o.input) c.input = *o.input;
    if (o.output_dir) c.output_dir = *o.output_dir;
    if (o.models) {
        c.models.clear();
        for (const auto& m : split_list(*o.models)) c.models.push_back(parse_model_kind(m));
        if (c.models.empty()) throw UsageError("--models is empty");
    }
    if (o.seed) c.seed = *o.seed;
    if (o.horizon) c.horizon = *o.horizon;
    if (o.origin) c.origin = flag_date("origin", *o.origin);
    if (o.shock) c.shock = *o.shock;
    if (!o.splits.empty()) {
        c.splits.clear();
        for (const auto& d : o.splits) c.splits.push_back(flag_date("split", d));
    }
    if (o.replications) c.mcs.replications = *o.replications;
    if (o.level) c.mcs.level = *o.level;
    if (o.formats) c.formats = split_list(*o.formats);
    if (o.window_start) c.window_start = flag_date("window-start", *o.window_start);
    if (o.window_end) c.window_end = flag_date("window-end", *o.window_end);
    if (o.starts) c.fit.starts = *o.starts;
    if (o.sim_model) c.simulation.kind = parse_model_kind(*o.sim_model);
    if (o.sim_length) c.simulation.length = *o.sim_length;
    if (o.sim_output) c.simulation_output = *o.sim_output;
    if (o.monte_carlo) c.monte_carlo = true;
    return c;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Policy-augmented multiplicative error models for realized volatility"};
    app.require_subcommand(1);
    app.fallthrough();
    Overrides o;
    app.add_option("-c,--config", o.config, "JSON run configuration (comments allowed)");
    app.add_option("--threads", o.threads, "worker threads (default: MAPVOL_THREADS or the config)");
    app.add_option("-i,--input", o.input, "panel CSV");
    app.add_option("-o,--output-dir", o.output_dir, "output directory");
    app.add_option("-m,--models", o.models, "comma-separated model list, e.g. AMEM,MAP");
    app.add_option("--seed", o.seed, "master seed");
    app.add_option("--horizon", o.horizon, "forecast horizon in business days");
    app.add_option("--origin", o.origin, "forecast origin date");
    app.add_option("--shock", o.shock, "impulse-response shock in proxy units");
    app.add_option("--split", o.splits, "split date (repeatable)");
    app.add_option("--replications", o.replications, "bootstrap replications");
    app.add_option("--level", o.level, "model confidence set level");
    app.add_option("--formats", o.formats, "comma list of json,text,csv,svg");
    app.add_option("--window-start", o.window_start, "first estimation date");
    app.add_option("--window-end", o.window_end, "last estimation date");
    app.add_option("--starts", o.starts, "optimizer starting points");
    app.add_option("--sim-model", o.sim_model, "simulated model kind");
    app.add_option("--sim-length", o.sim_length, "simulated sample length");
    app.add_option("--sim-output", o.sim_output, "simulated panel path");
    app.add_flag("--monte-carlo", o.monte_carlo, "also average simulated forecast paths");

    std::map<std::string, int (*)(Session&)> commands = {
        {"estimate", cmd_estimate}, {"forecast", cmd_forecast}, {"irf", cmd_irf},
        {"evaluate", cmd_evaluate}, {"mcs", cmd_mcs},           {"simulate", cmd_simulate},
        {"stylized", cmd_stylized}, {"report", cmd_report},
    };
    const std::map<std::string, std::string> help = {
        {"estimate", "fit the models and write coefficient, comparison and marginal-effect tables"},
        {"forecast", "multi-step forecast paths and convergence horizons"},
        {"irf", "impulse responses to a sustained proxy shock"},
        {"evaluate", "out-of-sample one-step losses after each split"},
        {"mcs", "model confidence set per split and loss"},
        {"simulate", "write a simulated panel"},
        {"stylized", "volatility around announcement days"},
        {"report", "estimate, forecast, irf, stylized and (with splits) mcs"},
    };
    for (const auto& [name, fn] : commands) app.add_subcommand(name, help.at(name));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }
    const std::string name = app.get_subcommands().front()->get_name();
    try {
        Session session(resolve(o));
        return commands.at(name)(session);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const PreconditionError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    }
}

}  // namespace mapvol
