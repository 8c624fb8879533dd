#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace clockopt {

struct NelderMeadOptions {
    // Initial simplex edge along each coordinate; a single value applies to all.
    std::vector<double> initial_steps{0.1};
    // Stop when the mean vertex distance from the centroid drops below this.
    double x_tolerance = 1e-8;
    std::size_t max_iterations = 1000;
    std::size_t max_evaluations = 0;  // 0: no cap beyond max_iterations
};

struct NelderMeadResult {
    std::vector<double> x;
    double f = 0.0;
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    bool converged = false;
    std::vector<double> best_history;  // best value after each iteration
};

using Objective = std::function<double(std::span<const double>)>;

/// Downhill simplex with reflection 1, expansion 2, contraction 1/2 and shrink 1/2.
/// NaN objective values rank as +infinity. The returned value never exceeds f(x0).
NelderMeadResult nelder_mead(const Objective& f, std::vector<double> x0, const NelderMeadOptions& options = {});

}  // namespace clockopt
