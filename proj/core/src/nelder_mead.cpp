#include "clockopt/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "clockopt/error.hpp"

namespace clockopt {

namespace {

struct Vertex {
    std::vector<double> x;
    double f;
};

double sanitize(double v) { return std::isnan(v) ? std::numeric_limits<double>::infinity() : v; }

}  // namespace

NelderMeadResult nelder_mead(const Objective& f, std::vector<double> x0, const NelderMeadOptions& options)
{
    const std::size_t dim = x0.size();
    if (dim == 0) throw ValidationError("nelder_mead needs at least one dimension");
    if (options.initial_steps.empty() ||
        (options.initial_steps.size() != 1 && options.initial_steps.size() != dim)) {
        throw ValidationError("nelder_mead initial_steps must have 1 or dim entries");
    }

    NelderMeadResult result;
    auto evaluate = [&](const std::vector<double>& x) {
        ++result.evaluations;
        return sanitize(f(x));
    };
    auto budget_left = [&] {
        return options.max_evaluations == 0 || result.evaluations < options.max_evaluations;
    };

    std::vector<Vertex> simplex;
    simplex.reserve(dim + 1);
    simplex.push_back({x0, evaluate(x0)});
    for (std::size_t i = 0; i < dim; ++i) {
        auto x = x0;
        x[i] += options.initial_steps.size() == 1 ? options.initial_steps[0] : options.initial_steps[i];
        simplex.push_back({x, evaluate(x)});
    }

    // Stable order keeps the run deterministic when values tie.
    auto by_value = [](const Vertex& a, const Vertex& b) { return a.f < b.f; };
    std::vector<double> centroid(dim), trial(dim);

    auto point_along = [&](double coefficient, const std::vector<double>& worst) {
        std::vector<double> x(dim);
        for (std::size_t i = 0; i < dim; ++i) x[i] = centroid[i] + coefficient * (worst[i] - centroid[i]);
        return x;
    };

    auto simplex_size = [&] {
        std::vector<double> mean(dim, 0.0);
        for (const auto& v : simplex) {
            for (std::size_t i = 0; i < dim; ++i) mean[i] += v.x[i];
        }
        for (auto& m : mean) m /= static_cast<double>(dim + 1);
        double total = 0.0;
        for (const auto& v : simplex) {
            double d2 = 0.0;
            for (std::size_t i = 0; i < dim; ++i) d2 += (v.x[i] - mean[i]) * (v.x[i] - mean[i]);
            total += std::sqrt(d2);
        }
        return total / static_cast<double>(dim + 1);
    };

    std::stable_sort(simplex.begin(), simplex.end(), by_value);
    while (result.iterations < options.max_iterations && budget_left()) {
        if (simplex_size() < options.x_tolerance) {
            result.converged = true;
            break;
        }
        ++result.iterations;

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t v = 0; v < dim; ++v) {
            for (std::size_t i = 0; i < dim; ++i) centroid[i] += simplex[v].x[i];
        }
        for (auto& c : centroid) c /= static_cast<double>(dim);

        Vertex& worst = simplex.back();
        const double best_f = simplex.front().f;
        const double second_worst_f = simplex[dim - 1].f;

        auto reflected = point_along(-1.0, worst.x);
        const double f_reflected = evaluate(reflected);

        if (f_reflected < best_f) {
            auto expanded = point_along(-2.0, worst.x);
            const double f_expanded = evaluate(expanded);
            if (f_expanded < f_reflected) {
                worst = {std::move(expanded), f_expanded};
            } else {
                worst = {std::move(reflected), f_reflected};
            }
        } else if (f_reflected < second_worst_f) {
            worst = {std::move(reflected), f_reflected};
        } else {
            const bool outside = f_reflected < worst.f;
            auto contracted = outside ? point_along(-0.5, worst.x) : point_along(0.5, worst.x);
            const double f_contracted = evaluate(contracted);
            if (f_contracted < std::min(f_reflected, worst.f)) {
                worst = {std::move(contracted), f_contracted};
            } else {
                const auto best_x = simplex.front().x;
                for (std::size_t v = 1; v <= dim; ++v) {
                    for (std::size_t i = 0; i < dim; ++i) {
                        simplex[v].x[i] = best_x[i] + 0.5 * (simplex[v].x[i] - best_x[i]);
                    }
                    simplex[v].f = evaluate(simplex[v].x);
                }
            }
        }
        std::stable_sort(simplex.begin(), simplex.end(), by_value);
        result.best_history.push_back(simplex.front().f);
    }

    result.x = simplex.front().x;
    result.f = simplex.front().f;
    return result;
}

}  // namespace clockopt
