#include "mapvol/cli.hpp"

#include "mapvol/error.hpp"
#include "mapvol/report.hpp"

#include <fstream>
#include <set>

namespace mapvol {

namespace {

using nlohmann::json;

// Walks one object, checking that every key is known.
class Section {
 public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw UsageError("config: '" + where() + "' must be an object");
    }
    ~Section() = default;

    void finish(std::initializer_list<const char*> extra = {}) const {
        std::set<std::string> known(seen_.begin(), seen_.end());
        for (const char* e : extra) known.insert(e);
        for (const auto& [key, value] : j_.items()) {
            if (!known.count(key)) throw UsageError("config: unknown key '" + prefixed(key) + "'");
        }
    }

    const json* find(const char* key) {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() || it->is_null() ? nullptr : &*it;
    }

    template <class T>
    void get(const char* key, T& out) {
        if (const json* v = find(key)) {
            try {
                out = v->get<T>();
            } catch (const json::exception&) {
                throw UsageError("config: '" + prefixed(key) + "' has the wrong type");
            }
        }
    }

    void date(const char* key, std::optional<Date>& out) {
        if (const json* v = find(key)) out = as_date(*v, key);
    }

    Date as_date(const json& v, const char* key) const {
        if (!v.is_string()) throw UsageError("config: '" + prefixed(key) + "' must be a YYYY-MM-DD string");
        try {
            return parse_date(v.get<std::string>());
        } catch (const DataError& e) {
            throw UsageError("config: '" + prefixed(key) + "': " + e.what());
        }
    }

    Section child(const char* key) {
        static const json kEmpty = json::object();
        const json* v = find(key);
        return Section(v ? *v : kEmpty, prefixed(key));
    }

    [[nodiscard]] std::string prefixed(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
    [[nodiscard]] std::string where() const { return path_.empty() ? "<root>" : path_; }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

XRule parse_x_rule(const std::string& s) {
    if (s == "hold") return XRule::Hold;
    if (s == "mean") return XRule::Mean;
    if (s == "path") return XRule::Path;
    throw UsageError("config: forecast.x_rule must be hold, mean or path");
}

DeltaRule parse_delta_rule(const std::string& s) {
    if (s == "mean") return DeltaRule::Mean;
    if (s == "calendar") return DeltaRule::Calendar;
    throw UsageError("config: forecast.delta_rule must be mean or calendar");
}

const char* x_path_rule_name(XPathRule r) {
    switch (r) {
        case XPathRule::Constant: return "constant";
        case XPathRule::RandomWalk: return "random_walk";
        case XPathRule::User: return "user";
    }
    return "?";
}

}  // namespace

RunConfig parse_config(const json& j) {
    RunConfig c;
    Section root(j, "");
    root.get("input", c.input);
    {
        Section cols = root.child("columns");
        cols.get("date", c.csv.columns.date);
        cols.get("rv", c.csv.columns.rv);
        cols.get("ret", c.csv.columns.ret);
        cols.get("x", c.csv.columns.x);
        cols.get("delta", c.csv.columns.delta);
        cols.finish();
    }
    std::string delim;
    root.get("delimiter", delim);
    if (!delim.empty()) {
        if (delim.size() != 1) throw UsageError("config: 'delimiter' must be a single character");
        c.csv.delimiter = delim[0];
    }
    if (const json* m = root.find("models")) {
        if (!m->is_array() || m->empty()) throw UsageError("config: 'models' must be a non-empty array");
        c.models.clear();
        for (const auto& v : *m) {
            if (!v.is_string()) throw UsageError("config: 'models' entries must be strings");
            c.models.push_back(parse_model_kind(v.get<std::string>()));
        }
    }
    {
        Section w = root.child("window");
        w.date("start", c.window_start);
        w.date("end", c.window_end);
        w.finish();
    }
    {
        Section e = root.child("estimation");
        e.get("starts", c.fit.starts);
        e.get("max_iterations", c.fit.max_iterations);
        e.get("gradient_tolerance", c.fit.gradient_tolerance);
        e.get("min_window", c.fit.min_window);
        e.get("ljung_box_lags", c.fit.lb_lags);
        std::string psi;
        e.get("psi_constraint", psi);
        if (psi == "stationary") {
            c.fit.psi_constraint = PsiConstraint::Stationary;
        } else if (!psi.empty() && psi != "identified") {
            throw UsageError("config: estimation.psi_constraint must be identified or stationary");
        }
        e.finish();
        if (c.fit.starts < 1) throw UsageError("config: estimation.starts must be >= 1");
    }
    {
        Section f = root.child("forecast");
        f.date("origin", c.origin);
        f.get("horizon", c.horizon);
        f.get("max_horizon", c.forecast.max_horizon);
        f.get("tolerance", c.forecast.tolerance);
        std::string s;
        f.get("x_rule", s);
        if (!s.empty()) c.rules.x_rule = parse_x_rule(s);
        f.get("x_path", c.rules.x_path);
        s.clear();
        f.get("delta_rule", s);
        if (!s.empty()) c.rules.delta_rule = parse_delta_rule(s);
        f.get("delta_calendar", c.rules.delta_calendar);
        f.get("p_negative", c.rules.p_negative);
        if (const json* v = f.find("shock")) {
            if (!v->is_number()) throw UsageError("config: forecast.shock must be a number");
            c.shock = v->get<double>();
        }
        f.get("monte_carlo", c.monte_carlo);
        f.get("draws", c.mc_draws);
        f.get("x_step_sd", c.mc_x_step_sd);
        f.get("tau", c.tau);
        f.finish();
    }
    {
        Section e = root.child("evaluation");
        if (const json* s = e.find("splits")) {
            if (!s->is_array()) throw UsageError("config: evaluation.splits must be an array of dates");
            for (const auto& v : *s) c.splits.push_back(e.as_date(v, "splits"));
        }
        std::string period;
        e.get("period", period);
        if (period == "to_end") {
            c.evaluate_next_year = false;
        } else if (!period.empty() && period != "next_year") {
            throw UsageError("config: evaluation.period must be next_year or to_end");
        }
        e.get("min_days", c.min_evaluation_days);
        e.get("rolling", c.rolling);
        e.get("refit_every", c.refit_every);
        if (const json* l = e.find("losses")) {
            if (!l->is_array() || l->empty()) throw UsageError("config: evaluation.losses must be a non-empty array");
            c.losses.clear();
            for (const auto& v : *l) c.losses.push_back(parse_loss_type(v.get<std::string>()));
        }
        e.finish();
    }
    {
        Section m = root.child("mcs");
        m.get("level", c.mcs.level);
        m.get("replications", c.mcs.replications);
        m.get("block_length", c.mcs.block_length);
        m.finish();
    }
    {
        Section s = root.child("simulate");
        std::string kind;
        s.get("model", kind);
        if (!kind.empty()) c.simulation.kind = parse_model_kind(kind);
        s.get("length", c.simulation.length);
        if (const json* p = s.find("params")) {
            if (!p->is_object()) throw UsageError("config: simulate.params must be an object");
            static const std::set<std::string> kNames{"omega", "alpha", "beta", "gamma", "delta", "phi", "psi", "shape"};
            for (const auto& [key, value] : p->items()) {
                if (!kNames.count(key)) throw UsageError("config: unknown key 'simulate.params." + key + "'");
                if (!value.is_number()) throw UsageError("config: 'simulate.params." + key + "' must be a number");
                c.simulation_params[key] = value.get<double>();
            }
        }
        std::string rule;
        s.get("x_rule", rule);
        if (rule == "constant") {
            c.simulation.x_rule = XPathRule::Constant;
        } else if (!rule.empty() && rule != "random_walk") {
            throw UsageError("config: simulate.x_rule must be constant or random_walk");
        }
        s.get("x0", c.simulation.x0);
        s.get("x_drift", c.simulation.x_drift);
        s.get("x_step_sd", c.simulation.x_step_sd);
        s.get("announce_every", c.simulation.announcement_every);
        if (c.simulation.announcement_every == 0) c.simulation.announcement_rule = AnnouncementRule::None;
        s.get("output", c.simulation_output);
        s.finish();
    }
    {
        Section s = root.child("stylized");
        s.get("window", c.stylized_window);
        s.finish();
    }
    root.get("output_dir", c.output_dir);
    root.get("formats", c.formats);
    for (const auto& f : c.formats) {
        if (f != "json" && f != "text" && f != "csv" && f != "svg") {
            throw UsageError("config: unknown format '" + f + "' (json, text, csv, svg)");
        }
    }
    root.get("seed", c.seed);
    root.get("threads", c.threads);
    root.finish();
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw UsageError("config '" + path.string() + "': " + e.what());
    }
    return parse_config(j);
}

nlohmann::ordered_json config_to_json(const RunConfig& c) {
    using OJ = nlohmann::ordered_json;
    const auto opt_date = [](const std::optional<Date>& d) { return d ? OJ(format_date(*d)) : OJ(nullptr); };
    OJ j;
    j["input"] = c.input;
    j["columns"] = {{"date", c.csv.columns.date},
                    {"rv", c.csv.columns.rv},
                    {"ret", c.csv.columns.ret},
                    {"x", c.csv.columns.x},
                    {"delta", c.csv.columns.delta}};
    j["delimiter"] = std::string(1, c.csv.delimiter);
    OJ models = OJ::array();
    for (ModelKind k : c.models) models.push_back(to_string(k));
    j["models"] = models;
    j["window"] = {{"start", opt_date(c.window_start)}, {"end", opt_date(c.window_end)}};
    j["estimation"] = {{"starts", c.fit.starts},
                       {"max_iterations", c.fit.max_iterations},
                       {"gradient_tolerance", c.fit.gradient_tolerance},
                       {"min_window", c.fit.min_window},
                       {"ljung_box_lags", c.fit.lb_lags},
                       {"psi_constraint",
                        c.fit.psi_constraint == PsiConstraint::Identified ? "identified" : "stationary"}};
    j["forecast"] = {{"origin", opt_date(c.origin)},
                     {"horizon", c.horizon},
                     {"max_horizon", c.forecast.max_horizon},
                     {"tolerance", c.forecast.tolerance},
                     {"x_rule", to_string(c.rules.x_rule)},
                     {"x_path", c.rules.x_path},
                     {"delta_rule", to_string(c.rules.delta_rule)},
                     {"delta_calendar", c.rules.delta_calendar},
                     {"p_negative", c.rules.p_negative},
                     {"shock", c.shock ? OJ(*c.shock) : OJ(nullptr)},
                     {"monte_carlo", c.monte_carlo},
                     {"draws", c.mc_draws},
                     {"x_step_sd", c.mc_x_step_sd},
                     {"tau", c.tau}};
    OJ splits = OJ::array();
    for (Date d : c.splits) splits.push_back(format_date(d));
    OJ losses = OJ::array();
    for (LossType l : c.losses) losses.push_back(to_string(l));
    j["evaluation"] = {{"splits", splits},
                       {"period", c.evaluate_next_year ? "next_year" : "to_end"},
                       {"min_days", c.min_evaluation_days},
                       {"rolling", c.rolling},
                       {"refit_every", c.refit_every},
                       {"losses", losses}};
    j["mcs"] = {{"level", c.mcs.level}, {"replications", c.mcs.replications}, {"block_length", c.mcs.block_length}};
    const auto& s = c.simulation;
    j["simulate"] = {{"model", to_string(s.kind)},
                     {"length", s.length},
                     {"params", c.simulation_params},
                     {"x_rule", x_path_rule_name(s.x_rule)},
                     {"x0", s.x0},
                     {"x_drift", s.x_drift},
                     {"x_step_sd", s.x_step_sd},
                     {"announce_every",
                      s.announcement_rule == AnnouncementRule::None ? std::size_t{0} : s.announcement_every},
                     {"output", c.simulation_output}};
    j["stylized"] = {{"window", c.stylized_window}};
    j["formats"] = c.formats;
    j["seed"] = c.seed;
    return j;
}

}  // namespace mapvol
