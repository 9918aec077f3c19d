#pragma once

#include "mapvol/data.hpp"
#include "mapvol/simulate.hpp"

#include <algorithm>
#include <random>
#include <vector>

namespace fixture {

inline std::vector<mapvol::Date> days(std::size_t n) {
    return mapvol::business_days(mapvol::Date{std::chrono::year{2010} / 1 / 4}, n);
}

// Noisy positive series with announcements roughly every 15 days and a drifting proxy.
inline mapvol::Panel random_panel(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 g(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> rv(n), ret(n), x(n), delta(n);
    double level = 15.0, xv = 0.3;
    for (std::size_t t = 0; t < n; ++t) {
        level = 0.9 * level + 1.5 + 3.0 * u(g);
        rv[t] = level * (0.5 + u(g));
        ret[t] = u(g) - 0.5;
        xv = std::clamp(xv + 0.01 * (u(g) - 0.5), 0.0, 1.0);
        x[t] = xv;
        delta[t] = u(g) < 1.0 / 15.0 ? 1.0 : 0.0;
    }
    delta[n / 2] = 1.0;
    return mapvol::Panel::create(days(n), rv, ret, x, delta);
}

inline mapvol::SimResult simulate(mapvol::ModelKind kind, std::size_t n, std::uint64_t seed) {
    mapvol::SimScenario s;
    s.kind = kind;
    s.params = mapvol::reference_params(kind);
    s.length = n;
    s.seed = seed;
    return mapvol::simulate_panel(s);
}

}  // namespace fixture
