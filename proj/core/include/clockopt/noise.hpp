#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace clockopt {

/// Per-cycle oscillator frequency errors in Hz. The values do not depend on the probe
/// period; `cycle_period` only records which T the trace is mapped to.
class NoiseTrace {
public:
    NoiseTrace(std::vector<double> samples, std::uint64_t seed, double cycle_period = 1.0);

    std::span<const double> samples() const noexcept { return samples_; }
    std::size_t size() const noexcept { return samples_.size(); }
    double operator[](std::size_t k) const { return samples_[k]; }
    std::uint64_t seed() const noexcept { return seed_; }
    double cycle_period() const noexcept { return cycle_period_; }

private:
    std::vector<double> samples_;
    std::uint64_t seed_;
    double cycle_period_;
};

struct FlickerOptions {
    // Sub-cycle samples averaged into each cycle value. The averaging makes the Allan
    // deviation flat down to tau = 1 cycle, which a once-per-cycle sampled filter is not.
    int oversampling = 8;
    // Target mean of (x[k+1] - x[k])^2, Hz^2. Allan variance at one cycle is half of it.
    double adjacent_difference_variance = 2.0;
};

/// Flicker-FM trace: white Gaussian noise passed through the half-order integrator
/// h[0] = 1, h[k] = h[k-1] (k - 1/2) / k, averaged per cycle and rescaled so the mean
/// squared adjacent difference is exactly the configured target.
NoiseTrace generate_flicker(std::size_t cycles, std::uint64_t seed, const FlickerOptions& options = {},
                            double cycle_period = 1.0);

/// I.i.d. zero-mean Gaussian samples with standard deviation `sigma` (Hz).
NoiseTrace generate_white(std::size_t cycles, double sigma, std::uint64_t seed,
                          double cycle_period = 1.0);

/// Overlapping Allan deviation for an averaging time of `tau_cycles` cycles.
double allan_deviation(std::span<const double> frequencies, std::size_t tau_cycles);
inline double allan_deviation(const NoiseTrace& trace, std::size_t tau_cycles)
{
    return allan_deviation(trace.samples(), tau_cycles);
}

/// Mean of (x[k+1] - x[k])^2.
double adjacent_difference_variance(std::span<const double> frequencies);

struct AllanReport {
    std::vector<std::size_t> taus;
    std::vector<double> adev;
};

AllanReport allan_report(std::span<const double> frequencies, std::vector<std::size_t> taus);

/// One Hz value per line.
void write_trace_csv(const NoiseTrace& trace, const std::filesystem::path& path);

}  // namespace clockopt
