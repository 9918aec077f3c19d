#include "mapvol/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <limits>
#include <sstream>

namespace mapvol {

std::string fixed(double v, int digits) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

namespace {

std::string csv_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

Json optional_size(const std::optional<std::size_t>& v) { return v ? Json(*v) : Json(nullptr); }

Json rules_json(const ForecastRules& r) {
    Json j;
    j["x_rule"] = to_string(r.x_rule);
    if (r.x_rule == XRule::Path) j["x_path"] = r.x_path;
    j["delta_rule"] = to_string(r.delta_rule);
    if (r.delta_rule == DeltaRule::Calendar) j["delta_calendar"] = r.delta_calendar;
    j["x_shift"] = r.x_shift;
    j["p_negative"] = r.p_negative;
    return j;
}

constexpr int kLabel = 10;
constexpr int kCell = 11;

void cell(std::ostream& out, const std::string& s) { out << std::setw(kCell) << s; }

}  // namespace

Json to_json(const ParamSet& p) {
    Json j;
    j["omega"] = p.omega;
    j["alpha"] = p.alpha;
    j["beta"] = p.beta;
    j["gamma"] = p.gamma;
    j["delta"] = p.delta;
    j["phi"] = p.phi;
    j["psi"] = p.psi;
    j["shape"] = p.shape;
    return j;
}

Json to_json(const LjungBoxResult& lb) {
    Json j = Json::array();
    for (std::size_t i = 0; i < lb.lags.size(); ++i) {
        j.push_back({{"lag", lb.lags[i]}, {"statistic", lb.statistic[i]}, {"pvalue", lb.pvalue[i]}});
    }
    return j;
}

Json to_json(const EstimationResult& r) {
    Json j;
    j["model"] = to_string(r.kind);
    j["window"] = {{"begin", r.window.begin}, {"end", r.window.end}};
    Json coef = Json::array();
    for (std::size_t i = 0; i < r.names.size(); ++i) {
        coef.push_back({{"name", r.names[i]},
                        {"estimate", r.estimates[i]},
                        {"robust_se", r.robust_se[i]},
                        {"hessian_se", r.hessian_se[i]}});
    }
    j["coefficients"] = coef;
    j["persistence"] = r.params.persistence();
    j["loglik"] = r.loglik;
    j["nobs"] = r.nobs;
    j["k"] = r.k;
    j["aic"] = r.aic;
    j["bic"] = r.bic;
    j["ljung_box"] = to_json(r.ljung_box);
    const auto& c = r.convergence;
    j["convergence"] = {{"converged", c.converged},
                        {"method", c.method},
                        {"iterations", c.iterations},
                        {"evaluations", c.evaluations},
                        {"gradient_norm", c.gradient_norm},
                        {"natural_gradient_norm", c.natural_gradient_norm},
                        {"best_start", c.best_start},
                        {"starts_converged", c.starts_converged},
                        {"constraints",
                         {{"positivity", c.constraints.positivity},
                          {"stationarity", c.constraints.stationarity},
                          {"identification", c.constraints.identification},
                          {"gamma_negative", c.constraints.gamma_negative}}},
                        {"notes", c.notes}};
    return j;
}

Json to_json(const ForecastPath& p) {
    Json j;
    j["model"] = to_string(p.kind);
    j["origin"] = p.origin;
    j["horizon"] = p.horizon;
    j["assumptions"] = rules_json(p.rules);
    j["tolerance"] = p.tolerance;
    j["convergence_horizon"] = optional_size(p.convergence_horizon);
    j["converged"] = p.convergence_horizon.has_value();
    j["mu"] = p.mu;
    return j;
}

Json to_json(const IrfPath& p) {
    Json j;
    j["model"] = to_string(p.baseline.kind);
    j["origin"] = p.baseline.origin;
    j["horizon"] = p.baseline.horizon;
    j["shock"] = p.shock;
    j["assumptions"] = rules_json(p.baseline.rules);
    j["baseline"] = p.baseline.mu;
    j["shocked"] = p.shocked.mu;
    j["diff"] = p.diff;
    const auto trough = std::min_element(p.diff.begin(), p.diff.end());
    if (trough != p.diff.end()) {
        j["trough"] = {{"step", static_cast<std::size_t>(trough - p.diff.begin()) + 1}, {"diff", *trough}};
    }
    return j;
}

Json to_json(const MarginalEffect& m, bool with_series) {
    Json j;
    j["model"] = to_string(m.kind);
    j["variable"] = to_string(m.variable);
    j["kappa"] = m.kappa;
    j["tau"] = m.tau;
    j["value"] = m.value;
    j["time_varying"] = m.time_varying;
    if (m.time_varying) j["days"] = m.series.size();
    if (with_series && m.time_varying) j["series"] = m.series;
    return j;
}

Json to_json(const McsResult& r) {
    Json j;
    j["statistic"] = r.statistic_name;
    j["level"] = r.options.level;
    j["replications"] = r.options.replications;
    j["block_length"] = r.options.block_length;
    j["seed"] = r.options.seed;
    j["tie_rule"] = r.tie_rule;
    Json models = Json::array();
    for (std::size_t i = 0; i < r.models.size(); ++i) {
        models.push_back({{"model", r.models[i]}, {"pvalue", r.pvalue[i]}, {"member", static_cast<bool>(r.member[i])}});
    }
    j["models"] = models;
    Json order = Json::array();
    for (std::size_t i : r.elimination) order.push_back(r.models[i]);
    j["elimination_order"] = order;
    j["step_statistic"] = r.statistic;
    j["best"] = r.models[r.best];
    return j;
}

Json to_json(const AnnouncementStats& s) {
    Json j;
    j["window"] = s.window;
    j["announcements"] = s.events.size();
    j["skipped"] = s.skipped.size();
    j["before_pct"] = s.mean_before_pct;
    j["after_pct"] = s.mean_after_pct;
    Json ev = Json::array();
    for (const auto& e : s.events) {
        ev.push_back({{"date", format_date(e.date)},
                      {"rv", e.rv},
                      {"terms", e.terms},
                      {"before_mean", e.before_mean},
                      {"after_mean", e.after_mean},
                      {"before_pct", e.before_pct},
                      {"after_pct", e.after_pct}});
    }
    j["events"] = ev;
    return j;
}

void write_estimation_table(std::ostream& out, std::span<const EstimationResult> results) {
    static const char* kOrder[] = {"omega", "alpha", "beta", "gamma", "delta", "phi", "psi", "shape"};
    out << std::left << std::setw(kLabel) << "" << std::right;
    for (const auto& r : results) cell(out, std::string(to_string(r.kind)));
    out << "\n";
    out << std::string(kLabel + kCell * results.size(), '=') << "\n";
    out << "Coefficient estimates (robust s.e. in parentheses)\n";
    for (const char* name : kOrder) {
        bool any = false;
        std::ostringstream est, se;
        est << std::left << std::setw(kLabel) << name << std::right;
        se << std::setw(kLabel) << "";
        for (const auto& r : results) {
            const auto it = std::find(r.names.begin(), r.names.end(), name);
            if (it == r.names.end()) {
                est << std::setw(kCell) << "";
                se << std::setw(kCell) << "";
                continue;
            }
            any = true;
            const auto i = static_cast<std::size_t>(it - r.names.begin());
            est << std::setw(kCell) << fixed(r.estimates[i]);
            se << std::setw(kCell) << ("(" + fixed(r.robust_se[i]) + ")");
        }
        if (any) out << est.str() << "\n" << se.str() << "\n";
    }
    out << std::left << std::setw(kLabel) << "Loglik" << std::right;
    for (const auto& r : results) cell(out, fixed(r.loglik, 1));
    out << "\n";
    out << "p-values for Ljung-Box statistics\n";
    if (!results.empty()) {
        for (std::size_t l = 0; l < results.front().ljung_box.lags.size(); ++l) {
            out << std::left << std::setw(kLabel) << ("lag " + std::to_string(results.front().ljung_box.lags[l]))
                << std::right;
            for (const auto& r : results) {
                cell(out, l < r.ljung_box.pvalue.size() ? fixed(r.ljung_box.pvalue[l]) : "");
            }
            out << "\n";
        }
    }
}

void write_comparison_table(std::ostream& out, std::span<const ComparisonRow> rows) {
    out << std::left << std::setw(kLabel) << "" << std::right;
    for (const auto& r : rows) cell(out, std::string(to_string(r.kind)));
    out << "\n" << std::string(kLabel + kCell * rows.size(), '-') << "\n";
    const auto line = [&](const char* name, auto get, int digits) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& r : rows) best = std::min(best, std::stod(fixed(get(r), digits)));
        out << std::left << std::setw(kLabel) << name << std::right;
        for (const auto& r : rows) {
            const std::string v = fixed(get(r), digits);
            cell(out, std::stod(v) == best ? "*" + v : v);
        }
        out << "\n";
    };
    line("AIC", [](const ComparisonRow& r) { return r.aic; }, 3);
    line("BIC", [](const ComparisonRow& r) { return r.bic; }, 3);
    line("MSE", [](const ComparisonRow& r) { return r.mse; }, 3);
    line("QLike", [](const ComparisonRow& r) { return r.qlike; }, 3);
    out << "* best model\n";
}

void write_marginal_effect_table(std::ostream& out, std::span<const MarginalEffect> effects) {
    for (PolicyVariable v : {PolicyVariable::Proxy, PolicyVariable::Announcement}) {
        std::vector<const MarginalEffect*> row;
        for (const auto& m : effects) {
            if (m.variable == v) row.push_back(&m);
        }
        if (row.empty()) continue;
        out << (v == PolicyVariable::Proxy ? "Marginal effect of x_{t-1} on mu_{t+tau}\n"
                                           : "Marginal effect of delta_t on mu_{t+tau} (announcement days)\n");
        out << std::left << std::setw(kLabel) << "tau" << std::right;
        std::vector<ModelKind> kinds;
        std::vector<int> taus;
        for (const auto* m : row) {
            if (std::find(kinds.begin(), kinds.end(), m->kind) == kinds.end()) kinds.push_back(m->kind);
            if (std::find(taus.begin(), taus.end(), m->tau) == taus.end()) taus.push_back(m->tau);
        }
        for (ModelKind k : kinds) cell(out, std::string(to_string(k)));
        out << "\n";
        for (int tau : taus) {
            out << std::left << std::setw(kLabel) << tau << std::right;
            for (ModelKind k : kinds) {
                const auto it = std::find_if(row.begin(), row.end(),
                                             [&](const MarginalEffect* m) { return m->kind == k && m->tau == tau; });
                cell(out, it == row.end() ? "" : fixed((*it)->value));
            }
            out << "\n";
        }
        out << "\n";
    }
}

void write_mcs_grid(std::ostream& out, std::span<const std::string> models, std::span<const McsGridColumn> columns,
                    double level) {
    out << "Model confidence set, level " << fixed(100.0 * level, 0) << "%\n";
    out << std::left << std::setw(kLabel) << "" << std::right;
    for (const auto& c : columns) cell(out, c.label);
    out << "\n";
    const auto mark = [](const std::optional<McsResult>& r, const std::string& model, char member, char best) {
        if (!r) return ' ';
        for (std::size_t i = 0; i < r->models.size(); ++i) {
            if (r->models[i] != model) continue;
            if (i == r->best) return best;
            return r->member[i] ? member : ' ';
        }
        return ' ';
    };
    for (const auto& model : models) {
        out << std::left << std::setw(kLabel) << model << std::right;
        for (const auto& c : columns) {
            std::string s{mark(c.mse, model, 'm', 'M'), ' ', mark(c.qlike, model, 'q', 'Q')};
            cell(out, s);
        }
        out << "\n";
    }
    out << "m (q): in the set by MSE (QLike); M (Q): best model\n";
}

void write_stylized_table(std::ostream& out, const AnnouncementStats& stats) {
    out << "Average rv " << stats.window << " days around announcements, % change vs announcement day\n";
    out << std::left << std::setw(kLabel) << "before" << std::right << std::setw(kCell) << fixed(stats.mean_before_pct, 2)
        << "\n";
    out << std::left << std::setw(kLabel) << "after" << std::right << std::setw(kCell) << fixed(stats.mean_after_pct, 2)
        << "\n";
    out << "announcements: " << stats.events.size() << ", skipped at the sample edges: " << stats.skipped.size()
        << "\n";
}

void write_forecast_csv(std::ostream& out, const ForecastPath& path) {
    out << "step,mu,sigma,xi\n";
    for (std::size_t h = 0; h < path.mu.size(); ++h) {
        out << h + 1 << ',' << csv_num(path.mu[h]) << ',' << csv_num(path.sigma[h]) << ',' << csv_num(path.xi[h])
            << '\n';
    }
}

void write_irf_csv(std::ostream& out, const IrfPath& irf) {
    out << "step,baseline,shocked,diff\n";
    for (std::size_t h = 0; h < irf.diff.size(); ++h) {
        out << h + 1 << ',' << csv_num(irf.baseline.mu[h]) << ',' << csv_num(irf.shocked.mu[h]) << ','
            << csv_num(irf.diff[h]) << '\n';
    }
}

void write_marginal_series_csv(std::ostream& out, const MarginalEffect& m, const Panel& panel) {
    out << "date,effect\n";
    for (std::size_t i = 0; i < m.series.size(); ++i) {
        out << format_date(panel.dates()[m.days[i]]) << ',' << csv_num(m.series[i]) << '\n';
    }
}

}  // namespace mapvol
