#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "clockopt/nelder_mead.hpp"
#include "clockopt/noise.hpp"
#include "clockopt/protocols.hpp"
#include "clockopt/simulator.hpp"

namespace clockopt {

struct SearchConfig {
    int n = 2;
    std::size_t cycles = 100000;         // per objective evaluation and seed
    std::size_t screen_cycles = 10000;   // cheap first look at random candidates
    std::size_t evaluation_seeds = 4;    // common random numbers shared by all candidates
    std::size_t heldout_seeds = 4;       // disjoint set for re-evaluation
    std::uint64_t master_seed = 1;
    std::size_t restarts = 200;
    // Screening threshold in Hz^2 at 1 s; 0 selects 1.05 x the refined Ramsey objective.
    double threshold = 0.0;
    // Screened candidates refined even when none beats the threshold (flagged in the result).
    std::size_t min_refine = 0;
    double x_tolerance = 1e-3;
    std::size_t max_iterations = 1500;
    std::size_t max_evaluations = 4000;
    // Nelder-Mead is restarted from its best vertex this many extra times.
    std::size_t polish_rounds = 1;
    // Optimizers reject candidates whose |phi| reaches this fraction of the unambiguous window,
    // and probe periods outside [min_probe_period, max_probe_period] seconds.
    double phase_margin = 0.85;
    double min_probe_period = 0.005;
    double max_probe_period = 10.0;
    std::size_t block_size = 100;
    std::size_t workers = 0;  // 0: hardware concurrency
};

nlohmann::json config_to_json(const SearchConfig& cfg);
SearchConfig config_from_json(const nlohmann::json& j);
/// FNV-1a over the canonical JSON of the fields that determine results (not workers).
std::uint64_t config_hash(const SearchConfig& cfg);

/// Feasible region of EvaluationSet::score.
struct ScoreLimits {
    double phase_margin = 1.0;
    double min_probe_period = 0.0;
    double max_probe_period = std::numeric_limits<double>::infinity();
};

ScoreLimits score_limits(const SearchConfig& cfg);

/// Noise traces and measurement seeds shared by every candidate of one search.
class EvaluationSet {
public:
    /// Stream ids [first_stream, first_stream + count) of the master seed.
    EvaluationSet(std::uint64_t master_seed, std::uint64_t first_stream, std::size_t count, std::size_t cycles,
                  std::size_t block_size, const ScoreLimits& limits = {});

    static EvaluationSet optimization(const SearchConfig& cfg);
    static EvaluationSet heldout(const SearchConfig& cfg);
    static EvaluationSet screening(const SearchConfig& cfg);

    std::size_t size() const noexcept { return traces_.size(); }
    std::size_t cycles() const noexcept { return cycles_; }
    const std::vector<std::uint64_t>& measurement_seeds() const noexcept { return measurement_seeds_; }
    std::vector<std::uint64_t> trace_seeds() const;

    /// Mean variance_at_1s over the set.
    double evaluate(const ClockProtocol& protocol) const;
    /// evaluate() when T is within the limits, on every seed |phi| stays below
    /// phase_margin * pi / phase_periodicity(state), and no seed exceeds 3x the median
    /// seed variance; +inf otherwise.
    double score(const ClockProtocol& protocol) const;
    std::vector<InstabilityReport> reports(const ClockProtocol& protocol) const;

private:
    std::vector<std::shared_ptr<const NoiseTrace>> traces_;
    std::vector<std::uint64_t> measurement_seeds_;
    std::size_t cycles_;
    ScoreLimits limits_;
    EstimatorOptions estimator_;
};

/// Hop-constrained score of the decoded protocol (EvaluationSet::score). Decode errors propagate.
double objective(const ParamVector& params, const EvaluationSet& set);

enum class ProtocolFamily { ramsey, ghz, squeezed, buzek, custom };

std::string to_string(ProtocolFamily family);
ProtocolFamily family_from_string(const std::string& name);

/// GHZ readout phase used for clock operation: p = (1 +- sin(n phi))/2 on the reachable outcomes.
double ghz_clock_readout_phase();

struct FamilyOptions {
    std::optional<bool> half_shift;  // Buzek; default: shifted when n is odd
};

struct SearchResult {
    ProtocolFamily family = ProtocolFamily::custom;
    ParamVector best;
    std::shared_ptr<const ClockProtocol> protocol;
    std::optional<double> kappa;
    double objective = 0.0;  // Hz^2 at 1 s on the optimization seeds
    double heldout = 0.0;    // same on the held-out seeds
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    bool refined = true;           // false: best screened candidate, never optimized
    bool beat_threshold = true;    // refined candidates that missed the screen are flagged
    std::uint64_t master_seed = 0;
    std::uint64_t config_hash = 0;
};

nlohmann::json result_to_json(const SearchResult& result);

/// Optimizes only corrections, T and (squeezed) kappa with the family's state and basis
/// fixed. Ramsey, squeezed and GHZ corrections are kept antisymmetric under outcome
/// reflection; Buzek corrections are free.
SearchResult refine_known(ProtocolFamily family, int n, const SearchConfig& cfg, const FamilyOptions& options = {});

/// Same refinement for an arbitrary fixed state and basis, with free corrections.
SearchResult refine_fixed(const ClockProtocol& protocol, const SearchConfig& cfg);

/// Nelder-Mead over the full parameter vector starting from encode_params(protocol).
SearchResult warm_start_search(const ClockProtocol& protocol, const SearchConfig& cfg);

/// Random candidates over the whole parameter space, screened on short runs; survivors
/// below the threshold are refined on the full objective and re-evaluated on held-out seeds.
/// Resumable through an append-only JSON-lines checkpoint when `checkpoint` is given.
SearchResult random_restart_search(const SearchConfig& cfg, const std::optional<std::filesystem::path>& checkpoint = {});

}  // namespace clockopt
