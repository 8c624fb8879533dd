#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "clockopt/noise.hpp"
#include "clockopt/protocols.hpp"

namespace clockopt {

struct CycleRecord {
    std::size_t cycle = 0;
    double frequency_error = 0.0;  // Hz, during the probe, before this cycle's correction
    double phase = 0.0;            // rad, 2 pi frequency_error T
    std::size_t outcome = 0;
    double correction = 0.0;       // Hz, applied after the measurement
};

struct RunOptions {
    // Servo accumulator before the first cycle; frequency error is noise[k] - servo.
    double initial_servo = 0.0;
};

/// Closed-loop servo over `cycles` cycles of `trace`. The measurement RNG is seeded by `seed`.
std::vector<CycleRecord> run_clock(const ClockProtocol& protocol, const NoiseTrace& trace, std::size_t cycles,
                                   std::uint64_t seed, const RunOptions& options = {});

struct EstimatorOptions {
    std::size_t block_size = 100;
    // Leading blocks dropped to remove the start-up transient of the servo.
    std::size_t burn_in_blocks = 10;
};

struct InstabilityReport {
    double variance_at_1s = 0.0;  // Hz^2; block-mean variance times block duration in seconds
    std::size_t block_size = 0;
    std::size_t blocks_used = 0;
    std::size_t burn_in_blocks = 0;
    std::size_t cycles_run = 0;
    std::size_t fringe_hops = 0;
    double phase_variance = 0.0;  // rad^2, mean phi^2 after burn-in
    double mean_frequency = 0.0;  // Hz, mean error after burn-in
    double max_abs_phase = 0.0;   // rad, over all cycles
};

/// Streaming form of the estimator, fed one cycle at a time.
class InstabilityAccumulator {
public:
    InstabilityAccumulator(double probe_period, const EstimatorOptions& options = {});

    void add(double frequency_error, double phase);
    InstabilityReport finish() const;

private:
    double probe_period_;
    EstimatorOptions options_;
    std::size_t cycles_ = 0;
    std::size_t hops_ = 0;
    std::size_t in_block_ = 0;
    double block_sum_ = 0.0;
    std::vector<double> block_means_;
    double phase_square_sum_ = 0.0;
    double frequency_sum_ = 0.0;
    std::size_t measured_cycles_ = 0;
    double max_abs_phase_ = 0.0;
};

/// Partitions the frequency errors into blocks, drops the burn-in blocks, and returns the
/// variance of the remaining block means scaled by block_size * T to 1 s.
/// Needs at least 10 blocks after burn-in.
InstabilityReport estimate_instability(std::span<const CycleRecord> records, double probe_period,
                                       const EstimatorOptions& options = {});

/// run_clock followed by estimate_instability without storing the records.
InstabilityReport simulate_instability(const ClockProtocol& protocol, const NoiseTrace& trace, std::size_t cycles,
                                       std::uint64_t seed, const EstimatorOptions& options = {},
                                       const RunOptions& run_options = {});

/// Projection-noise limit 1 / (2 pi sqrt(n T tau)), Hz.
double sql_sigma(int n, double probe_period, double tau);

/// Cycles whose true frequency error puts the phase outside (-pi, pi]: |f| T > 1/2.
bool is_fringe_hop(double frequency_error, double probe_period) noexcept;
std::size_t count_fringe_hops(std::span<const CycleRecord> records, double probe_period);

struct ProbabilityTable {
    std::vector<double> phi;
    std::vector<std::vector<double>> probabilities;  // [grid point][outcome]
};

ProbabilityTable probability_curves(const ClockProtocol& protocol, std::span<const double> phi_grid);

}  // namespace clockopt
