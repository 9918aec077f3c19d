#include "mapvol/svg.hpp"

#include "mapvol/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace mapvol {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    [[nodiscard]] bool empty() const { return lo > hi; }
    void pad() {
        if (empty()) {
            lo = 0.0;
            hi = 1.0;
        } else if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
            const double d = std::max(std::abs(hi) * 0.05, 1e-6);
            lo -= d;
            hi += d;
        }
    }
};

// Roughly five round tick values covering [lo, hi].
std::vector<double> ticks(double lo, double hi) {
    const double raw = (hi - lo) / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        step = m * mag;
        if (step >= raw) break;
    }
    std::vector<double> t;
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step) t.push_back(v == 0.0 ? 0.0 : v);
    return t;
}

}  // namespace

std::string render_svg(const Chart& chart) {
    if (chart.series.empty()) throw PreconditionError("chart has no series");
    const double left = 70, right = 70, top = 40, bottom = 60;
    const double pw = chart.width - left - right, ph = chart.height - top - bottom;

    Range xr, yl, yr;
    bool has_right = false;
    for (const auto& s : chart.series) {
        if (s.x.size() != s.y.size()) throw PreconditionError("series '" + s.name + "' has mismatched x and y");
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.y[i])) continue;
            xr.add(s.x[i]);
            (s.right_axis ? yr : yl).add(s.y[i]);
        }
        has_right = has_right || s.right_axis;
    }
    xr.pad();
    yl.pad();
    yr.pad();
    const auto px = [&](double x) { return left + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
    const auto py = [&](double y, const Range& r) { return top + ph - (y - r.lo) / (r.hi - r.lo) * ph; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << chart.width << "\" height=\"" << chart.height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << num(chart.width / 2.0) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << escape(chart.title) << "</text>\n";
    o << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
      << "\" fill=\"none\" stroke=\"black\"/>\n";

    for (double t : ticks(xr.lo, xr.hi)) {
        o << "<line x1=\"" << num(px(t)) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(px(t)) << "\" y2=\""
          << num(top + ph + 5) << "\" stroke=\"black\"/>";
        o << "<text x=\"" << num(px(t)) << "\" y=\"" << num(top + ph + 18) << "\" text-anchor=\"middle\">" << label(t)
          << "</text>\n";
    }
    for (double t : ticks(yl.lo, yl.hi)) {
        o << "<line x1=\"" << num(left - 5) << "\" y1=\"" << num(py(t, yl)) << "\" x2=\"" << num(left) << "\" y2=\""
          << num(py(t, yl)) << "\" stroke=\"black\"/>";
        o << "<text x=\"" << num(left - 8) << "\" y=\"" << num(py(t, yl) + 4) << "\" text-anchor=\"end\">" << label(t)
          << "</text>\n";
    }
    if (has_right) {
        for (double t : ticks(yr.lo, yr.hi)) {
            o << "<line x1=\"" << num(left + pw) << "\" y1=\"" << num(py(t, yr)) << "\" x2=\"" << num(left + pw + 5)
              << "\" y2=\"" << num(py(t, yr)) << "\" stroke=\"black\"/>";
            o << "<text x=\"" << num(left + pw + 8) << "\" y=\"" << num(py(t, yr) + 4) << "\">" << label(t)
              << "</text>\n";
        }
        o << "<text transform=\"translate(" << num(chart.width - 15) << "," << num(top + ph / 2)
          << ") rotate(90)\" text-anchor=\"middle\">" << escape(chart.y2_label) << "</text>\n";
    }
    o << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(chart.height - 15) << "\" text-anchor=\"middle\">"
      << escape(chart.x_label) << "</text>\n";
    o << "<text transform=\"translate(18," << num(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(chart.y_label) << "</text>\n";

    for (std::size_t k = 0; k < chart.series.size(); ++k) {
        const auto& s = chart.series[k];
        const Range& r = s.right_axis ? yr : yl;
        const char* colour = kPalette[k % std::size(kPalette)];
        o << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\""
          << (s.dashed ? " stroke-dasharray=\"5,3\"" : "") << " points=\"";
        bool first = true;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.y[i]) || !std::isfinite(s.x[i])) continue;
            o << (first ? "" : " ") << num(px(s.x[i])) << ',' << num(py(s.y[i], r));
            first = false;
        }
        o << "\"/>\n";
        const double ly = top + 15 + 16.0 * static_cast<double>(k);
        o << "<line x1=\"" << num(left + 10) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(left + 30) << "\" y2=\""
          << num(ly) << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>";
        o << "<text x=\"" << num(left + 35) << "\" y=\"" << num(ly + 4) << "\">" << escape(s.name)
          << (s.right_axis ? " (right)" : "") << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

}  // namespace mapvol
