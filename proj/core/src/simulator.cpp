#include "clockopt/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "clockopt/error.hpp"
#include "clockopt/rng.hpp"

namespace clockopt {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::size_t kMinBlocks = 10;

void require_trace_length(const NoiseTrace& trace, std::size_t cycles)
{
    if (trace.size() < cycles) {
        throw InsufficientData("noise trace has " + std::to_string(trace.size()) + " samples, run needs " +
                               std::to_string(cycles));
    }
}

// Drives the servo; `sink(cycle, f, phi, outcome, correction)` sees every cycle.
template <typename Sink>
void servo_loop(const ClockProtocol& protocol, const NoiseTrace& trace, std::size_t cycles, std::uint64_t seed,
                const RunOptions& options, Sink&& sink)
{
    require_trace_length(trace, cycles);
    const PhaseResponse response(protocol.initial_state(), protocol.basis());
    const auto corrections = protocol.corrections();
    const double period = protocol.probe_period();
    const auto noise = trace.samples();
    Rng rng(seed);

    double servo = options.initial_servo;
    for (std::size_t k = 0; k < cycles; ++k) {
        const double f = noise[k] - servo;
        const double phi = kTwoPi * f * period;
        const std::size_t j = response.sample(phi, rng.uniform());
        const double c = corrections[j];
        sink(k, f, phi, j, c);
        servo += c;
    }
}

}  // namespace

std::vector<CycleRecord> run_clock(const ClockProtocol& protocol, const NoiseTrace& trace, std::size_t cycles,
                                   std::uint64_t seed, const RunOptions& options)
{
    std::vector<CycleRecord> records;
    records.reserve(cycles);
    servo_loop(protocol, trace, cycles, seed, options,
               [&](std::size_t k, double f, double phi, std::size_t j, double c) {
                   records.push_back({k, f, phi, j, c});
               });
    return records;
}

InstabilityAccumulator::InstabilityAccumulator(double probe_period, const EstimatorOptions& options)
    : probe_period_(probe_period), options_(options)
{
    if (!(probe_period_ > 0.0)) throw ValidationError("estimator needs a positive probe period");
    if (options_.block_size < 1) throw ValidationError("estimator block size must be >= 1");
}

void InstabilityAccumulator::add(double frequency_error, double phase)
{
    ++cycles_;
    if (is_fringe_hop(frequency_error, probe_period_)) ++hops_;
    max_abs_phase_ = std::max(max_abs_phase_, std::abs(phase));
    block_sum_ += frequency_error;
    if (++in_block_ == options_.block_size) {
        block_means_.push_back(block_sum_ / static_cast<double>(options_.block_size));
        block_sum_ = 0.0;
        in_block_ = 0;
    }
    if (cycles_ > options_.burn_in_blocks * options_.block_size) {
        phase_square_sum_ += phase * phase;
        frequency_sum_ += frequency_error;
        ++measured_cycles_;
    }
}

InstabilityReport InstabilityAccumulator::finish() const
{
    const std::size_t blocks = block_means_.size();
    if (blocks < options_.burn_in_blocks + kMinBlocks) {
        throw InsufficientData("estimator needs " + std::to_string(options_.burn_in_blocks + kMinBlocks) +
                               " blocks of " + std::to_string(options_.block_size) + " cycles, have " +
                               std::to_string(blocks));
    }
    const std::size_t used = blocks - options_.burn_in_blocks;
    double mean = 0.0;
    for (std::size_t b = options_.burn_in_blocks; b < blocks; ++b) mean += block_means_[b];
    mean /= static_cast<double>(used);
    double ss = 0.0;
    for (std::size_t b = options_.burn_in_blocks; b < blocks; ++b) {
        const double d = block_means_[b] - mean;
        ss += d * d;
    }
    const double block_variance = ss / static_cast<double>(used - 1);

    InstabilityReport report;
    report.variance_at_1s = block_variance * static_cast<double>(options_.block_size) * probe_period_;
    report.block_size = options_.block_size;
    report.blocks_used = used;
    report.burn_in_blocks = options_.burn_in_blocks;
    report.cycles_run = cycles_;
    report.fringe_hops = hops_;
    report.phase_variance = phase_square_sum_ / static_cast<double>(measured_cycles_);
    report.mean_frequency = frequency_sum_ / static_cast<double>(measured_cycles_);
    report.max_abs_phase = max_abs_phase_;
    return report;
}

InstabilityReport estimate_instability(std::span<const CycleRecord> records, double probe_period,
                                       const EstimatorOptions& options)
{
    InstabilityAccumulator acc(probe_period, options);
    for (const auto& r : records) acc.add(r.frequency_error, r.phase);
    return acc.finish();
}

InstabilityReport simulate_instability(const ClockProtocol& protocol, const NoiseTrace& trace, std::size_t cycles,
                                       std::uint64_t seed, const EstimatorOptions& options,
                                       const RunOptions& run_options)
{
    InstabilityAccumulator acc(protocol.probe_period(), options);
    servo_loop(protocol, trace, cycles, seed, run_options,
               [&](std::size_t, double f, double phi, std::size_t, double) { acc.add(f, phi); });
    return acc.finish();
}

double sql_sigma(int n, double probe_period, double tau)
{
    if (n <= 0 || !(probe_period > 0.0) || !(tau > 0.0)) {
        throw ValidationError("sql_sigma needs positive n, T and tau");
    }
    return 1.0 / (kTwoPi * std::sqrt(static_cast<double>(n) * probe_period * tau));
}

bool is_fringe_hop(double frequency_error, double probe_period) noexcept
{
    return std::abs(frequency_error) * probe_period > 0.5;
}

std::size_t count_fringe_hops(std::span<const CycleRecord> records, double probe_period)
{
    std::size_t hops = 0;
    for (const auto& r : records) {
        if (is_fringe_hop(r.frequency_error, probe_period)) ++hops;
    }
    return hops;
}

ProbabilityTable probability_curves(const ClockProtocol& protocol, std::span<const double> phi_grid)
{
    if (phi_grid.empty()) throw ValidationError("probability_curves needs a nonempty phase grid");
    ProbabilityTable table;
    table.phi.assign(phi_grid.begin(), phi_grid.end());
    table.probabilities.reserve(phi_grid.size());
    for (const double phi : phi_grid) {
        table.probabilities.push_back(
            outcome_probabilities(evolve_phase(protocol.initial_state(), phi), protocol.basis()));
    }
    return table;
}

}  // namespace clockopt
