#include "mapvol/optim.hpp"

#include "mapvol/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mapvol::optim {

namespace {

const double kStepScale = std::cbrt(std::numeric_limits<double>::epsilon());
const double kWideStepScale = std::sqrt(std::sqrt(std::numeric_limits<double>::epsilon()));

double step_for(double x) { return kStepScale * std::max(std::abs(x), 1.0); }

double sup_norm(std::span<const double> v) {
    double m = 0.0;
    for (double a : v) m = std::max(m, std::abs(a));
    return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

}  // namespace

bool central_gradient(const Objective& f, std::span<const double> x, std::span<double> grad) {
    std::vector<double> probe(x.begin(), x.end());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double h = step_for(x[i]);
        probe[i] = x[i] + h;
        const double up = f(probe);
        probe[i] = x[i] - h;
        const double down = f(probe);
        probe[i] = x[i];
        if (!std::isfinite(up) || !std::isfinite(down)) return false;
        // Use the realized step so that x +- h rounding does not bias the quotient.
        grad[i] = (up - down) / ((x[i] + h) - (x[i] - h));
    }
    return true;
}

OptimResult minimize_bfgs(const Objective& f, std::vector<double> x0, const BfgsOptions& options) {
    const std::size_t n = x0.size();
    OptimResult res;
    res.method = "bfgs";
    int evals = 0;
    auto eval = [&](std::span<const double> x) {
        ++evals;
        return f(x);
    };

    std::vector<double> x = std::move(x0);
    double fx = eval(x);
    if (!std::isfinite(fx)) {
        res.x = x;
        res.value = fx;
        res.message = "starting point rejected";
        res.evaluations = evals;
        return res;
    }
    std::vector<double> g(n), g_new(n), x_new(n), dir(n), s(n), y(n);
    const Objective counted = [&](std::span<const double> p) { return eval(p); };
    if (!central_gradient(counted, x, g)) {
        res.x = x;
        res.value = fx;
        res.message = "gradient probe rejected at start";
        res.evaluations = evals;
        return res;
    }

    // Inverse Hessian approximation, row-major.
    std::vector<double> hinv(n * n, 0.0);
    auto reset = [&]() {
        std::fill(hinv.begin(), hinv.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) hinv[i * n + i] = 1.0;
    };
    reset();
    bool fresh = true;

    int iter = 0;
    for (; iter < options.max_iterations; ++iter) {
        if (sup_norm(g) <= options.gradient_tolerance) {
            res.converged = true;
            break;
        }
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc -= hinv[i * n + j] * g[j];
            dir[i] = acc;
        }
        double slope = dot(dir, g);
        if (!(slope < 0.0)) {
            reset();
            fresh = true;
            for (std::size_t i = 0; i < n; ++i) dir[i] = -g[i];
            slope = dot(dir, g);
        }
        const double len = std::sqrt(dot(dir, dir));
        double step = len > options.max_step ? options.max_step / len : 1.0;

        bool accepted = false;
        double f_new = fx;
        for (int k = 0; k < 60; ++k) {
            for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + step * dir[i];
            f_new = eval(x_new);
            if (std::isfinite(f_new) && f_new <= fx + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            if (!fresh) {
                reset();
                fresh = true;
                continue;
            }
            res.message = "line search failed";
            break;
        }
        if (!central_gradient(counted, x_new, g_new)) {
            res.message = "gradient probe rejected";
            x = x_new;
            fx = f_new;
            break;
        }
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = x_new[i] - x[i];
            y[i] = g_new[i] - g[i];
        }
        const double sy = dot(s, y);
        if (sy > 1e-12 * std::sqrt(dot(s, s) * dot(y, y))) {
            if (fresh) {
                // Shanno scaling of the initial matrix.
                const double scale = sy / dot(y, y);
                for (std::size_t i = 0; i < n; ++i) hinv[i * n + i] = scale;
            }
            // H <- (I - rho s y') H (I - rho y s') + rho s s'
            const double rho = 1.0 / sy;
            std::vector<double> hy(n, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) hy[i] += hinv[i * n + j] * y[j];
            }
            const double yhy = dot(y, hy);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    hinv[i * n + j] += rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
                }
            }
            fresh = false;
        }
        x.swap(x_new);
        g.swap(g_new);
        const double f_old = fx;
        fx = f_new;
        if (std::abs(f_old - fx) <= 1e-15 * (1.0 + std::abs(fx)) && sup_norm(g) <= 100 * options.gradient_tolerance) {
            res.converged = true;
            ++iter;
            break;
        }
    }
    if (!res.converged && res.message.empty()) res.message = "iteration limit reached";
    res.x = std::move(x);
    res.value = fx;
    res.iterations = iter;
    res.evaluations = evals;
    res.gradient_norm = sup_norm(g);
    return res;
}

OptimResult minimize_nelder_mead(const Objective& f, std::vector<double> x0, const NelderMeadOptions& options) {
    const std::size_t n = x0.size();
    OptimResult res;
    res.method = "nelder-mead";
    int evals = 0;
    auto eval = [&](const std::vector<double>& x) {
        ++evals;
        const double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };

    std::vector<std::vector<double>> simplex(n + 1, x0);
    std::vector<double> values(n + 1);
    for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += options.initial_step * std::max(1.0, std::abs(x0[i]));
    for (std::size_t i = 0; i <= n; ++i) values[i] = eval(simplex[i]);

    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n), trial(n), trial2(n);
    int iter = 0;
    while (evals < options.max_evaluations) {
        ++iter;
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second = order[n - 1];

        double size = 0.0;
        for (std::size_t i = 0; i <= n; ++i) {
            for (std::size_t j = 0; j < n; ++j) size = std::max(size, std::abs(simplex[i][j] - simplex[best][j]));
        }
        if (std::isfinite(values[worst]) && values[worst] - values[best] <= options.value_tolerance * (1.0 + std::abs(values[best])) &&
            size <= options.size_tolerance * (1.0 + sup_norm(simplex[best]))) {
            res.converged = true;
            break;
        }

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == worst) continue;
            for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j] / static_cast<double>(n);
        }
        for (std::size_t j = 0; j < n; ++j) trial[j] = centroid[j] + (centroid[j] - simplex[worst][j]);
        const double fr = eval(trial);
        if (fr < values[best]) {
            for (std::size_t j = 0; j < n; ++j) trial2[j] = centroid[j] + 2.0 * (centroid[j] - simplex[worst][j]);
            const double fe = eval(trial2);
            if (fe < fr) {
                simplex[worst] = trial2;
                values[worst] = fe;
            } else {
                simplex[worst] = trial;
                values[worst] = fr;
            }
            continue;
        }
        if (fr < values[second]) {
            simplex[worst] = trial;
            values[worst] = fr;
            continue;
        }
        const bool outside = fr < values[worst];
        for (std::size_t j = 0; j < n; ++j) {
            trial2[j] = outside ? centroid[j] + 0.5 * (trial[j] - centroid[j])
                                : centroid[j] + 0.5 * (simplex[worst][j] - centroid[j]);
        }
        const double fc = eval(trial2);
        if (fc < std::min(fr, values[worst])) {
            simplex[worst] = trial2;
            values[worst] = fc;
            continue;
        }
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == best) continue;
            for (std::size_t j = 0; j < n; ++j) simplex[i][j] = simplex[best][j] + 0.5 * (simplex[i][j] - simplex[best][j]);
            values[i] = eval(simplex[i]);
        }
    }
    const auto best = static_cast<std::size_t>(std::distance(values.begin(), std::min_element(values.begin(), values.end())));
    res.x = simplex[best];
    res.value = values[best];
    res.iterations = iter;
    res.evaluations = evals;
    if (!res.converged) res.message = "evaluation limit reached";
    return res;
}

SandwichResult sandwich(const Contributions& contributions, std::span<const double> theta) {
    const std::size_t k = theta.size();
    std::vector<double> base;
    if (!contributions(theta, base) || base.empty()) {
        throw NumericalError("log-likelihood rejected at the sandwich centre");
    }
    const std::size_t n = base.size();
    const double nd = static_cast<double>(n);

    std::vector<double> probe(theta.begin(), theta.end());
    std::vector<double> h(k);
    for (std::size_t i = 0; i < k; ++i) h[i] = step_for(theta[i]);

    std::vector<double> up, down;
    auto mean_at = [&](std::vector<double>& p) {
        std::vector<double> c;
        if (!contributions(p, c)) {
            throw NumericalError("log-likelihood rejected at a finite-difference probe");
        }
        return std::accumulate(c.begin(), c.end(), 0.0) / nd;
    };

    // Per-observation scores.
    Eigen::MatrixXd scores(n, k);
    for (std::size_t i = 0; i < k; ++i) {
        probe[i] = theta[i] + h[i];
        if (!contributions(probe, up)) throw NumericalError("log-likelihood rejected at a score probe");
        probe[i] = theta[i] - h[i];
        if (!contributions(probe, down)) throw NumericalError("log-likelihood rejected at a score probe");
        probe[i] = theta[i];
        for (std::size_t t = 0; t < n; ++t) scores(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)) = (up[t] - down[t]) / (2.0 * h[i]);
    }

    SandwichResult r;
    const Eigen::VectorXd mean_score = scores.colwise().mean();
    r.gradient.assign(mean_score.data(), mean_score.data() + k);
    r.outer = scores.transpose() * scores / nd;

    const double f0 = std::accumulate(base.begin(), base.end(), 0.0) / nd;
    auto hessian_with = [&](const std::vector<double>& hs) {
        Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
        for (std::size_t i = 0; i < k; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            probe[i] = theta[i] + hs[i];
            const double fp = mean_at(probe);
            probe[i] = theta[i] - hs[i];
            const double fm = mean_at(probe);
            probe[i] = theta[i];
            hess(ii, ii) = (fp - 2.0 * f0 + fm) / (hs[i] * hs[i]);
            for (std::size_t j = 0; j < i; ++j) {
                const auto jj = static_cast<Eigen::Index>(j);
                double f[4];
                const int si[4] = {1, 1, -1, -1};
                const int sj[4] = {1, -1, 1, -1};
                for (int q = 0; q < 4; ++q) {
                    probe[i] = theta[i] + si[q] * hs[i];
                    probe[j] = theta[j] + sj[q] * hs[j];
                    f[q] = mean_at(probe);
                }
                probe[i] = theta[i];
                probe[j] = theta[j];
                const double v = (f[0] - f[1] - f[2] + f[3]) / (4.0 * hs[i] * hs[j]);
                hess(ii, jj) = v;
                hess(jj, ii) = v;
            }
        }
        return hess;
    };
    auto positive_definite = [](const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& e) {
        const Eigen::VectorXd v = e.eigenvalues();
        const double largest = std::max(std::abs(v.maxCoeff()), 1e-300);
        return v.minCoeff() > 1e-10 * largest;
    };

    r.hessian = hessian_with(h);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(-r.hessian);
    if (!positive_definite(eig)) {
        // Rounding in the second difference is ~eps/h^2, which can swamp the curvature of a
        // weakly identified parameter; retry once with the error-optimal step eps^(1/4).
        std::vector<double> wide(k);
        for (std::size_t i = 0; i < k; ++i) wide[i] = kWideStepScale * std::max(std::abs(theta[i]), 1.0);
        Eigen::MatrixXd retry = hessian_with(wide);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig2(-retry);
        if (positive_definite(eig2)) {
            r.hessian = std::move(retry);
            eig = std::move(eig2);
        }
    }
    const Eigen::VectorXd ev = eig.eigenvalues();
    if (!positive_definite(eig)) {
        Eigen::Index dir = 0;
        eig.eigenvectors().col(0).cwiseAbs().maxCoeff(&dir);
        throw SingularCurvature{static_cast<std::size_t>(dir), ev.minCoeff()};
    }
    const Eigen::MatrixXd info_inv = eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
    r.hessian_covariance = info_inv / nd;
    r.robust_covariance = info_inv * r.outer * info_inv / nd;
    r.robust_se.resize(k);
    r.hessian_se.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        r.robust_se[i] = std::sqrt(std::max(r.robust_covariance(ii, ii), 0.0));
        r.hessian_se[i] = std::sqrt(std::max(r.hessian_covariance(ii, ii), 0.0));
    }
    return r;
}

}  // namespace mapvol::optim
