#include "mapvol/data.hpp"

#include "mapvol/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace mapvol {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line, char delim) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            return out;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
}

bool is_missing(std::string_view field) {
    return field.empty() || field == "NA" || field == "NaN" || field == "nan" || field == "null" ||
           field == ".";
}

std::optional<double> parse_real(std::string_view field) {
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    double v = 0.0;
    const auto* first = field.data();
    const auto* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) return std::nullopt;
    return v;
}

std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

}  // namespace

Date parse_date(std::string_view text) {
    text = trim(text);
    auto fail = [&]() -> DataError {
        return DataError("invalid ISO-8601 date '" + std::string(text) + "'");
    };
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw fail();
    int y = 0;
    unsigned m = 0;
    unsigned d = 0;
    auto parse_part = [&](std::size_t pos, std::size_t len, auto& out) {
        auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, out);
        if (ec != std::errc() || ptr != text.data() + pos + len) throw fail();
    };
    parse_part(0, 4, y);
    parse_part(5, 2, m);
    parse_part(8, 2, d);
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) throw fail();
    return std::chrono::sys_days{ymd};
}

std::string format_date(Date d) {
    const std::chrono::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

std::vector<double> sign_dummy(std::span<const double> ret) {
    std::vector<double> d(ret.size());
    std::transform(ret.begin(), ret.end(), d.begin(), [](double r) { return r < 0.0 ? 1.0 : 0.0; });
    return d;
}

Panel Panel::create(std::vector<Date> dates, std::vector<double> rv, std::vector<double> ret,
                    std::vector<double> x, std::vector<double> delta) {
    const std::size_t n = rv.size();
    if (dates.size() != n || ret.size() != n || x.size() != n || delta.size() != n) {
        throw DataError("panel series have different lengths");
    }
    if (n < 2) throw DataError("panel needs at least 2 observations, got " + std::to_string(n));
    for (std::size_t t = 0; t < n; ++t) {
        const std::string where = " at " + format_date(dates[t]);
        if (t > 0 && !(dates[t - 1] < dates[t])) {
            throw DataError("dates not strictly increasing" + where);
        }
        if (!std::isfinite(rv[t]) || rv[t] <= 0.0) throw DataError("non-positive rv" + where);
        if (!std::isfinite(ret[t])) throw DataError("non-finite return" + where);
        if (!(x[t] >= 0.0 && x[t] <= 1.0)) throw DataError("policy proxy outside [0,1]" + where);
        if (delta[t] != 0.0 && delta[t] != 1.0) throw DataError("non-binary announcement flag" + where);
    }
    Panel p;
    p.negative_ = sign_dummy(ret);
    p.dates_ = std::move(dates);
    p.rv_ = std::move(rv);
    p.ret_ = std::move(ret);
    p.x_ = std::move(x);
    p.delta_ = std::move(delta);
    return p;
}

Panel Panel::slice(IndexRange range) const {
    if (range.end > size() || range.size() < 2) {
        throw PreconditionError("slice [" + std::to_string(range.begin) + "," + std::to_string(range.end) +
                                ") invalid for panel of length " + std::to_string(size()));
    }
    auto cut = [&](const auto& v) {
        using T = typename std::decay_t<decltype(v)>::value_type;
        return std::vector<T>(v.begin() + static_cast<std::ptrdiff_t>(range.begin),
                              v.begin() + static_cast<std::ptrdiff_t>(range.end));
    };
    Panel p;
    p.dates_ = cut(dates_);
    p.rv_ = cut(rv_);
    p.ret_ = cut(ret_);
    p.x_ = cut(x_);
    p.delta_ = cut(delta_);
    p.negative_ = cut(negative_);
    return p;
}

std::optional<std::size_t> Panel::last_index_on_or_before(Date d) const {
    auto it = std::upper_bound(dates_.begin(), dates_.end(), d);
    if (it == dates_.begin()) return std::nullopt;
    return static_cast<std::size_t>(std::distance(dates_.begin(), it)) - 1;
}

std::optional<std::size_t> Panel::first_index_after(Date d) const {
    auto it = std::upper_bound(dates_.begin(), dates_.end(), d);
    if (it == dates_.end()) return std::nullopt;
    return static_cast<std::size_t>(std::distance(dates_.begin(), it));
}

LoadReport read_panel(std::istream& in, const CsvFormat& format) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty input: missing header row");
    const auto header = split(line, format.delimiter);
    std::unordered_map<std::string_view, std::size_t> position;
    for (std::size_t i = 0; i < header.size(); ++i) position.emplace(header[i], i);

    const ColumnMap& cm = format.columns;
    auto column = [&](const std::string& logical, const std::string& name) {
        auto it = position.find(name);
        if (it == position.end()) {
            throw DataError("missing column '" + name + "' (mapped from '" + logical + "')");
        }
        return it->second;
    };
    const std::size_t c_date = column("date", cm.date);
    const std::size_t c_rv = column("rv", cm.rv);
    const std::size_t c_ret = column("ret", cm.ret);
    const std::size_t c_x = column("x", cm.x);
    const std::size_t c_delta = column("delta", cm.delta);

    std::vector<Date> dates;
    std::vector<double> rv, ret, x, delta;
    std::vector<DroppedRow> dropped;

    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto fields = split(line, format.delimiter);
        if (fields.size() != header.size()) {
            throw DataError("line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                            " fields, found " + std::to_string(fields.size()));
        }
        const std::string_view f_date = fields[c_date];
        if (is_missing(f_date)) {
            dropped.push_back({lineno, "missing date"});
            continue;
        }
        const Date d = parse_date(f_date);

        double values[4] = {};
        const std::size_t cols[4] = {c_rv, c_ret, c_x, c_delta};
        const char* names[4] = {"rv", "ret", "x", "delta"};
        bool missing = false;
        for (int k = 0; k < 4; ++k) {
            const std::string_view f = fields[cols[k]];
            if (is_missing(f)) {
                dropped.push_back({lineno, std::string("missing ") + names[k]});
                missing = true;
                break;
            }
            const auto v = parse_real(f);
            if (!v) {
                throw DataError("line " + std::to_string(lineno) + ": cannot parse " + names[k] + " '" +
                                std::string(f) + "'");
            }
            if (!std::isfinite(*v)) {
                dropped.push_back({lineno, std::string("non-finite ") + names[k]});
                missing = true;
                break;
            }
            values[k] = *v;
        }
        if (missing) continue;
        if (values[0] <= 0.0) {
            dropped.push_back({lineno, "non-positive rv " + std::string(fields[c_rv])});
            continue;
        }
        if (values[3] != 0.0 && values[3] != 1.0) {
            throw DataError("line " + std::to_string(lineno) + ": non-binary delta '" +
                            std::string(fields[c_delta]) + "'");
        }
        if (values[2] < 0.0 || values[2] > 1.0) {
            throw DataError("line " + std::to_string(lineno) + ": policy proxy outside [0,1]");
        }
        if (!dates.empty() && !(dates.back() < d)) {
            throw DataError("line " + std::to_string(lineno) + ": date " + std::string(f_date) +
                            (dates.back() == d ? " duplicated" : " out of order"));
        }
        dates.push_back(d);
        rv.push_back(values[0]);
        ret.push_back(values[1]);
        x.push_back(values[2]);
        delta.push_back(values[3]);
    }
    return LoadReport{Panel::create(std::move(dates), std::move(rv), std::move(ret), std::move(x), std::move(delta)),
                      std::move(dropped)};
}

LoadReport load_panel(const std::filesystem::path& path, const CsvFormat& format) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    return read_panel(in, format);
}

void write_panel(std::ostream& out, const Panel& panel, char delimiter) {
    out << "date" << delimiter << "rv" << delimiter << "ret" << delimiter << "x" << delimiter << "delta\n";
    for (std::size_t t = 0; t < panel.size(); ++t) {
        out << format_date(panel.dates()[t]) << delimiter << format_real(panel.rv()[t]) << delimiter
            << format_real(panel.ret()[t]) << delimiter << format_real(panel.x()[t]) << delimiter
            << (panel.delta()[t] != 0.0 ? 1 : 0) << '\n';
    }
}

void save_panel(const std::filesystem::path& path, const Panel& panel, char delimiter) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    write_panel(out, panel, delimiter);
}

CenteredCovariates center_covariates(const Panel& panel, IndexRange window) {
    if (window.empty() || window.end > panel.size()) {
        throw PreconditionError("centering window is empty or exceeds the panel");
    }
    CenteredCovariates c;
    c.window = window;
    const double n = static_cast<double>(window.size());
    double sx = 0.0, sd = 0.0, sr = 0.0;
    for (std::size_t t = window.begin; t < window.end; ++t) {
        sx += panel.x()[t];
        sd += panel.delta()[t];
        sr += panel.rv()[t];
    }
    c.x_bar = sx / n;
    c.delta_bar = sd / n;
    c.init_level = sr / n;
    c.xc.resize(panel.size());
    c.dc.resize(panel.size());
    for (std::size_t t = 0; t < panel.size(); ++t) {
        c.xc[t] = panel.x()[t] - c.x_bar;
        c.dc[t] = panel.delta()[t] - c.delta_bar;
    }
    return c;
}

AnnouncementStats announcement_window_stats(const Panel& panel, int window) {
    if (window < 1) throw PreconditionError("announcement window must be >= 1 day");
    AnnouncementStats stats;
    stats.window = window;
    const std::size_t n = panel.size();
    const auto rv = panel.rv();
    bool any = false;
    for (std::size_t t = 0; t < n; ++t) {
        if (panel.delta()[t] == 0.0) continue;
        any = true;
        const std::size_t w = std::min({static_cast<std::size_t>(window), t, n - 1 - t});
        if (w == 0) {
            stats.skipped.push_back(t);
            continue;
        }
        AnnouncementWindow ev;
        ev.index = t;
        ev.date = panel.dates()[t];
        ev.rv = rv[t];
        ev.terms = w;
        double before = 0.0, after = 0.0;
        for (std::size_t j = 1; j <= w; ++j) {
            before += rv[t - j];
            after += rv[t + j];
        }
        ev.before_mean = before / static_cast<double>(w);
        ev.after_mean = after / static_cast<double>(w);
        ev.before_pct = 100.0 * (ev.before_mean - ev.rv) / ev.rv;
        ev.after_pct = 100.0 * (ev.after_mean - ev.rv) / ev.rv;
        stats.events.push_back(ev);
    }
    if (!any) throw PreconditionError("no announcement days in sample");
    if (stats.events.empty()) throw PreconditionError("every announcement sits on a sample edge");
    for (const auto& ev : stats.events) {
        stats.mean_before_pct += ev.before_pct;
        stats.mean_after_pct += ev.after_pct;
    }
    stats.mean_before_pct /= static_cast<double>(stats.events.size());
    stats.mean_after_pct /= static_cast<double>(stats.events.size());
    return stats;
}

}  // namespace mapvol
