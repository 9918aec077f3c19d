#pragma once

#include <string>
#include <vector>

namespace mapvol {

struct ChartSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
    bool right_axis = false;
    bool dashed = false;
};

struct Chart {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::string y2_label;  // used when any series sits on the right axis
    std::vector<ChartSeries> series;
    int width = 800;
    int height = 450;
};

/// Minimal line chart with axes, ticks and a legend. Non-finite points are skipped.
std::string render_svg(const Chart& chart);

}  // namespace mapvol
