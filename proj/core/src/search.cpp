#include "clockopt/search.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <numbers>
#include <sstream>
#include <thread>

#include "clockopt/error.hpp"
#include "clockopt/protocol_json.hpp"
#include "clockopt/rng.hpp"

namespace clockopt {

namespace {

using nlohmann::json;

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kOutlierFactor = 3.0;
constexpr int kMaxHalvings = 8;

// Stream ids for EvaluationSet; the ranges never overlap.
constexpr std::uint64_t kOptimizationStreams = 0;
constexpr std::uint64_t kHeldoutStreams = 1'000'000;
constexpr std::uint64_t kScreeningStreams = 2'000'000;
constexpr std::uint64_t kCandidateStreams = 3'000'000;
constexpr std::uint64_t kRefineStreams = 4'000'000;

std::size_t worker_count(const SearchConfig& cfg)
{
    if (cfg.workers > 0) return cfg.workers;
    return std::max(1u, std::thread::hardware_concurrency());
}

// Runs fn(i) for i in [0, count) on up to `workers` threads; rethrows the first failure.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn&& fn)
{
    workers = std::min(workers, count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                        next = count;
                    }
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
}

// Plain mean for screening and reporting, hop-constrained score for optimizers.
double safe_evaluate(const EvaluationSet& set, const ParamVector& params, bool constrained)
{
    try {
        if (constrained) return objective(params, set);
        return set.evaluate(decode_params(params));
    } catch (const DegenerateError&) {
        return kInf;
    }
}

// ---- refinement of fixed state/basis families -------------------------------------------

enum class Symmetry { antisymmetric, ghz, none };

struct RefineSpace {
    int n = 1;
    bool has_kappa = false;
    Symmetry symmetry = Symmetry::none;
    // kappa is ignored unless has_kappa
    std::function<std::pair<SymmetricState, MeasurementBasis>(double kappa)> build;
};

std::size_t free_corrections(const RefineSpace& space)
{
    switch (space.symmetry) {
    case Symmetry::antisymmetric:
        return static_cast<std::size_t>((space.n + 1) / 2);
    case Symmetry::ghz:
        return 1;
    case Symmetry::none:
        break;
    }
    return static_cast<std::size_t>(space.n) + 1;
}

// Phase estimates (rad) of the free outcomes -> corrections (Hz) for every outcome.
std::vector<double> expand_corrections(const RefineSpace& space, std::span<const double> phases, double period)
{
    const auto dim = static_cast<std::size_t>(space.n) + 1;
    std::vector<double> c(dim, 0.0);
    const double to_hz = 1.0 / (kTwoPi * period);
    switch (space.symmetry) {
    case Symmetry::antisymmetric:
        for (std::size_t j = 0; j < phases.size(); ++j) {
            c[j] = phases[j] * to_hz;
            c[dim - 1 - j] = -phases[j] * to_hz;
        }
        break;
    case Symmetry::ghz:
        c.front() = phases[0] * to_hz;
        c.back() = -phases[0] * to_hz;
        break;
    case Symmetry::none:
        for (std::size_t j = 0; j < dim; ++j) c[j] = phases[j] * to_hz;
        break;
    }
    return c;
}

// Inverse of expand_corrections, averaging mirrored outcomes.
std::vector<double> project_corrections(const RefineSpace& space, std::span<const double> corrections, double period)
{
    const std::size_t dim = corrections.size();
    const double to_phase = kTwoPi * period;
    std::vector<double> phases(free_corrections(space));
    switch (space.symmetry) {
    case Symmetry::antisymmetric:
        for (std::size_t j = 0; j < phases.size(); ++j) {
            phases[j] = 0.5 * (corrections[j] - corrections[dim - 1 - j]) * to_phase;
        }
        break;
    case Symmetry::ghz:
        phases[0] = 0.5 * (corrections.front() - corrections.back()) * to_phase;
        break;
    case Symmetry::none:
        for (std::size_t j = 0; j < dim; ++j) phases[j] = corrections[j] * to_phase;
        break;
    }
    return phases;
}

// x = [log T, (log kappa), free phase estimates...]
struct RefinePoint {
    double period;
    double kappa;
    std::vector<double> phases;
};

RefinePoint unpack(const RefineSpace& space, std::span<const double> x)
{
    RefinePoint p;
    std::size_t i = 0;
    p.period = std::exp(x[i++]);
    p.kappa = space.has_kappa ? std::exp(x[i++]) : 0.0;
    p.phases.assign(x.begin() + static_cast<std::ptrdiff_t>(i), x.end());
    return p;
}

std::vector<double> pack(const RefineSpace& space, const RefinePoint& p)
{
    std::vector<double> x;
    x.push_back(std::log(p.period));
    if (space.has_kappa) x.push_back(std::log(p.kappa));
    x.insert(x.end(), p.phases.begin(), p.phases.end());
    return x;
}

class RefineObjective {
public:
    RefineObjective(const RefineSpace& space, const EvaluationSet& set) : space_(space), set_(set)
    {
        if (!space_.has_kappa) cached_.emplace(space_.build(0.0));
    }

    ClockProtocol protocol(const RefinePoint& p) const
    {
        auto [state, basis] = cached_ ? *cached_ : space_.build(p.kappa);
        return ClockProtocol(std::move(state), std::move(basis), expand_corrections(space_, p.phases, p.period),
                             p.period);
    }

    double operator()(std::span<const double> x) const
    {
        const auto p = unpack(space_, x);
        if (!(p.period > 0.0) || !std::isfinite(p.period)) return kInf;
        if (space_.has_kappa && !(p.kappa > 0.0 && std::isfinite(p.kappa))) return kInf;
        return set_.score(protocol(p));
    }

private:
    const RefineSpace& space_;
    const EvaluationSet& set_;
    std::optional<std::pair<SymmetricState, MeasurementBasis>> cached_;
};

std::vector<double> geometric_grid(double first, double ratio, int count)
{
    std::vector<double> g;
    for (int i = 0; i < count; ++i) g.push_back(first * std::pow(ratio, i));
    return g;
}

// x[log_period_index] is log T. A start rejected by the phase guard is moved to shorter
// probe periods, phase estimates unchanged, until it scores finite.
NelderMeadResult polish(const Objective& f, std::vector<double> x0, const std::vector<double>& steps,
                        const SearchConfig& cfg, std::size_t log_period_index)
{
    std::size_t rescue_evaluations = 0;
    for (int halving = 0; halving < kMaxHalvings; ++halving) {
        ++rescue_evaluations;
        if (std::isfinite(f(x0))) break;
        x0[log_period_index] -= std::numbers::ln2;
    }
    NelderMeadOptions options;
    options.initial_steps = steps;
    options.x_tolerance = cfg.x_tolerance;
    options.max_iterations = cfg.max_iterations;
    options.max_evaluations = cfg.max_evaluations;
    NelderMeadResult total = nelder_mead(f, std::move(x0), options);
    for (std::size_t round = 0; round < cfg.polish_rounds && cfg.max_iterations > 0; ++round) {
        auto again = nelder_mead(f, total.x, options);
        total.iterations += again.iterations;
        total.evaluations += again.evaluations;
        if (again.f <= total.f) {
            total.x = std::move(again.x);
            total.f = again.f;
            total.converged = again.converged;
        }
    }
    total.evaluations += rescue_evaluations;
    return total;
}

// Held-out value is left at 0 when `heldout_set` is null.
SearchResult refine_space(const RefineSpace& space, ProtocolFamily family, const SearchConfig& cfg,
                          std::uint64_t stream, const EvaluationSet& opt_set, const EvaluationSet* heldout_set)
{
    const RefineObjective f(space, opt_set);

    // Coarse scan: probe period x prior width (x kappa) with posterior-mean corrections.
    const auto periods = geometric_grid(0.005, 1.3, 16);
    const std::vector<double> prior_phase_widths{0.2, 0.35, 0.6, 1.0};
    std::vector<double> kappas{0.0};
    if (space.has_kappa) {
        kappas.clear();
        for (const double r : {0.7, 1.0, 1.4, 2.0, 2.8, 4.0}) kappas.push_back(r * std::sqrt(static_cast<double>(space.n)));
    }

    std::optional<RefinePoint> best_point;
    double best_value = kInf;
    std::size_t evaluations = 0;
    for (const double kappa : kappas) {
        const auto [state, basis] = space.build(kappa);
        for (const double period : periods) {
            for (const double width : prior_phase_widths) {
                const auto corrections = init_corrections(state, basis, period, width / (kTwoPi * period));
                RefinePoint p{period, kappa, project_corrections(space, corrections, period)};
                const double v = f(pack(space, p));
                ++evaluations;
                if (!best_point || v < best_value) {
                    best_value = v;
                    best_point = std::move(p);
                }
            }
        }
    }

    // Random offsets on the starting corrections, then the simplex.
    Rng rng(derive_seed(cfg.master_seed, stream));
    for (auto& phase : best_point->phases) phase += rng.uniform(-0.05, 0.05);
    const auto start = pack(space, *best_point);

    std::vector<double> steps(start.size(), 0.1);
    steps[0] = 0.2;
    if (space.has_kappa) steps[1] = 0.2;

    NelderMeadResult nm;
    if (cfg.max_iterations > 0) {
        nm = polish(std::cref(f), start, steps, cfg, 0);
    } else {
        nm.x = start;
        nm.f = f(start);
        nm.evaluations = 1;
    }

    const auto point = unpack(space, nm.x);
    auto protocol = std::make_shared<const ClockProtocol>(f.protocol(point));

    SearchResult result;
    result.family = family;
    result.best = encode_params(*protocol);
    result.protocol = protocol;
    if (space.has_kappa) result.kappa = point.kappa;
    result.objective = nm.f;
    if (heldout_set) result.heldout = heldout_set->evaluate(*protocol);
    result.iterations = nm.iterations;
    result.evaluations = evaluations + nm.evaluations;
    result.master_seed = cfg.master_seed;
    result.config_hash = config_hash(cfg);
    return result;
}

// ---- general search coordinates ---------------------------------------------------------
// Same layout as ParamVector except corrections are phase estimates 2 pi T c_j (rad) and
// the last entry is log T.

std::vector<double> to_search_coordinates(const ParamVector& p)
{
    std::vector<double> x = p.reals;
    const double period = std::abs(p.reals[ParamVector::period_offset(p.n)]);
    for (std::size_t i = ParamVector::corrections_offset(p.n); i < ParamVector::period_offset(p.n); ++i) {
        x[i] *= kTwoPi * period;
    }
    x[ParamVector::period_offset(p.n)] = std::log(period);
    return x;
}

ParamVector from_search_coordinates(int n, std::span<const double> x)
{
    ParamVector p{n, std::vector<double>(x.begin(), x.end())};
    const double period = std::exp(x[ParamVector::period_offset(n)]);
    for (std::size_t i = ParamVector::corrections_offset(n); i < ParamVector::period_offset(n); ++i) {
        p.reals[i] /= kTwoPi * period;
    }
    p.reals[ParamVector::period_offset(n)] = period;
    return p;
}

std::vector<double> search_steps(int n)
{
    std::vector<double> steps(ParamVector::size_for(n), 0.1);
    steps[ParamVector::period_offset(n)] = 0.2;
    return steps;
}

double coordinate_objective(int n, const EvaluationSet& set, std::span<const double> x)
{
    const double log_period = x[ParamVector::period_offset(n)];
    if (!std::isfinite(log_period) || log_period > 10.0 || log_period < -30.0) return kInf;
    return safe_evaluate(set, from_search_coordinates(n, x), true);
}

struct Candidate {
    ParamVector params;
    double screen = kInf;
};

Candidate random_candidate(const SearchConfig& cfg, std::size_t index)
{
    const int n = cfg.n;
    Rng rng(derive_seed(cfg.master_seed, kCandidateStreams + index));
    ParamVector p{n, std::vector<double>(ParamVector::size_for(n), 0.0)};
    for (std::size_t i = 0; i < ParamVector::basis_offset(n); ++i) p.reals[i] = rng.normal();
    for (std::size_t i = ParamVector::basis_offset(n); i < ParamVector::corrections_offset(n); ++i) {
        p.reals[i] = rng.uniform(0.0, kTwoPi);
    }
    const double period = std::pow(10.0, rng.uniform(-2.0, 1.0));
    p.reals[ParamVector::period_offset(n)] = period;

    // Posterior-mean corrections for a random prior width, plus random offsets.
    const auto draft = decode_params(p);
    const double width = rng.uniform(0.2, 1.0);
    auto corrections = init_corrections(draft, width / (kTwoPi * period));
    for (std::size_t j = 0; j < corrections.size(); ++j) {
        p.reals[ParamVector::corrections_offset(n) + j] = corrections[j] + rng.uniform(-0.1, 0.1) / (kTwoPi * period);
    }
    return {std::move(p), kInf};
}

// Scores the candidate as drawn and with posterior-mean corrections on a short probe-period
// grid, keeping the best point. The state and basis are never changed.
void screen_candidate(Candidate& c, const SearchConfig& cfg, const EvaluationSet& set)
{
    const int n = cfg.n;
    c.screen = safe_evaluate(set, c.params, true);
    const auto draft = decode_params(c.params);
    for (const double period : geometric_grid(0.01, 2.0, 5)) {
        for (const double width : {0.35, 0.7}) {
            ParamVector p = c.params;
            p.reals[ParamVector::period_offset(n)] = period;
            const auto corrections = init_corrections(draft.with_probe_period(period), width / (kTwoPi * period));
            std::copy(corrections.begin(), corrections.end(), p.reals.begin() + static_cast<std::ptrdiff_t>(ParamVector::corrections_offset(n)));
            const double value = safe_evaluate(set, p, true);
            if (value < c.screen) {
                c.screen = value;
                c.params = std::move(p);
            }
        }
    }
}

bool lexicographically_less(const std::vector<double>& a, const std::vector<double>& b)
{
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

// ---- checkpoint -------------------------------------------------------------------------

struct CheckpointState {
    std::optional<double> threshold;
    std::map<std::size_t, Candidate> screened;
    struct Refined {
        ParamVector params;
        double objective;
        std::size_t iterations;
        std::size_t evaluations;
    };
    std::map<std::size_t, Refined> refined;
};

ParamVector params_from_json(int n, const json& j)
{
    ParamVector p{n, j.get<std::vector<double>>()};
    if (p.reals.size() != ParamVector::size_for(n)) throw ValidationError("checkpoint vector has wrong length");
    return p;
}

double value_from_json(const json& j) { return j.is_null() ? kInf : j.get<double>(); }

json value_to_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

CheckpointState load_checkpoint(const std::filesystem::path& path, const SearchConfig& cfg)
{
    CheckpointState state;
    std::ifstream in(path, std::ios::binary);
    if (!in) return state;
    std::ostringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();

    const std::uint64_t expected_hash = config_hash(cfg);
    std::size_t offset = 0;
    bool saw_header = false;
    while (offset < text.size()) {
        const std::size_t end = text.find('\n', offset);
        if (end == std::string::npos) {
            throw ResumeConflict("checkpoint " + path.string() + " ends in a partial line", static_cast<long long>(offset));
        }
        const std::string line = text.substr(offset, end - offset);
        try {
            const json j = json::parse(line);
            const std::string type = j.at("type").get<std::string>();
            if (!saw_header) {
                if (type != "header") throw ValidationError("first record is not a header");
                if (j.at("config_hash").get<std::uint64_t>() != expected_hash) {
                    throw ResumeConflict("checkpoint " + path.string() + " was written by a different configuration",
                                         static_cast<long long>(offset));
                }
                saw_header = true;
            } else if (type == "baseline") {
                state.threshold = j.at("threshold").get<double>();
            } else if (type == "screen") {
                const auto index = j.at("index").get<std::size_t>();
                state.screened[index] = {params_from_json(cfg.n, j.at("vector")), value_from_json(j.at("screen"))};
            } else if (type == "refine") {
                const auto index = j.at("index").get<std::size_t>();
                state.refined.insert_or_assign(index, CheckpointState::Refined{params_from_json(cfg.n, j.at("vector")),
                                                                               value_from_json(j.at("objective")),
                                                                               j.at("iterations").get<std::size_t>(),
                                                                               j.at("evaluations").get<std::size_t>()});
            } else {
                throw ValidationError("unknown record type " + type);
            }
        } catch (const ResumeConflict&) {
            throw;
        } catch (const std::exception& e) {
            throw ResumeConflict("corrupt checkpoint " + path.string() + " at byte " + std::to_string(offset) + ": " +
                                     e.what(),
                                 static_cast<long long>(offset));
        }
        offset = end + 1;
    }
    return state;
}

class CheckpointWriter {
public:
    CheckpointWriter(const std::optional<std::filesystem::path>& path, const SearchConfig& cfg, bool fresh)
    {
        if (!path) return;
        out_.open(*path, std::ios::app | std::ios::binary);
        if (!out_) throw IoError("cannot open checkpoint " + path->string());
        if (fresh) {
            write(json{{"type", "header"}, {"config_hash", config_hash(cfg)}, {"config", config_to_json(cfg)}});
        }
    }

    void write(const json& record)
    {
        if (!out_.is_open()) return;
        std::lock_guard lock(mutex_);
        out_ << record.dump() << '\n';
        out_.flush();
        if (!out_) throw IoError("failed writing checkpoint");
    }

private:
    std::ofstream out_;
    std::mutex mutex_;
};

}  // namespace

// ---- config -----------------------------------------------------------------------------

nlohmann::json config_to_json(const SearchConfig& cfg)
{
    return json{{"n", cfg.n},
                {"cycles", cfg.cycles},
                {"screen_cycles", cfg.screen_cycles},
                {"evaluation_seeds", cfg.evaluation_seeds},
                {"heldout_seeds", cfg.heldout_seeds},
                {"master_seed", cfg.master_seed},
                {"restarts", cfg.restarts},
                {"threshold", cfg.threshold},
                {"min_refine", cfg.min_refine},
                {"x_tolerance", cfg.x_tolerance},
                {"max_iterations", cfg.max_iterations},
                {"max_evaluations", cfg.max_evaluations},
                {"polish_rounds", cfg.polish_rounds},
                {"phase_margin", cfg.phase_margin},
                {"min_probe_period", cfg.min_probe_period},
                {"max_probe_period", cfg.max_probe_period},
                {"block_size", cfg.block_size},
                {"workers", cfg.workers}};
}

SearchConfig config_from_json(const nlohmann::json& j)
{
    SearchConfig cfg;
    if (!j.is_object()) throw ValidationError("search config must be a JSON object");
    auto read = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    try {
        read("n", cfg.n);
        read("cycles", cfg.cycles);
        read("screen_cycles", cfg.screen_cycles);
        read("evaluation_seeds", cfg.evaluation_seeds);
        read("heldout_seeds", cfg.heldout_seeds);
        read("master_seed", cfg.master_seed);
        read("restarts", cfg.restarts);
        read("threshold", cfg.threshold);
        read("min_refine", cfg.min_refine);
        read("x_tolerance", cfg.x_tolerance);
        read("max_iterations", cfg.max_iterations);
        read("max_evaluations", cfg.max_evaluations);
        read("polish_rounds", cfg.polish_rounds);
        read("phase_margin", cfg.phase_margin);
        read("min_probe_period", cfg.min_probe_period);
        read("max_probe_period", cfg.max_probe_period);
        read("block_size", cfg.block_size);
        read("workers", cfg.workers);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("search config: ") + e.what());
    }
    if (cfg.restarts < 1) throw ValidationError("search config: restarts must be >= 1");
    if (cfg.cycles < 10000) throw ValidationError("search config: cycles must be >= 10000");
    if (!(cfg.x_tolerance > 0.0)) throw ValidationError("search config: x_tolerance must be > 0");
    if (!(cfg.phase_margin > 0.0 && cfg.phase_margin <= 1.0)) {
        throw ValidationError("search config: phase_margin must be in (0, 1]");
    }
    if (!(cfg.min_probe_period >= 0.0 && cfg.max_probe_period > cfg.min_probe_period)) {
        throw ValidationError("search config: need 0 <= min_probe_period < max_probe_period");
    }
    if (cfg.evaluation_seeds < 1 || cfg.heldout_seeds < 1) {
        throw ValidationError("search config: evaluation_seeds and heldout_seeds must be >= 1");
    }
    return cfg;
}

std::uint64_t config_hash(const SearchConfig& cfg)
{
    json j = config_to_json(cfg);
    j.erase("workers");
    const std::string text = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// ---- evaluation -------------------------------------------------------------------------

ScoreLimits score_limits(const SearchConfig& cfg)
{
    return {cfg.phase_margin, cfg.min_probe_period, cfg.max_probe_period};
}

EvaluationSet::EvaluationSet(std::uint64_t master_seed, std::uint64_t first_stream, std::size_t count,
                             std::size_t cycles, std::size_t block_size, const ScoreLimits& limits)
    : cycles_(cycles), limits_(limits)
{
    estimator_.block_size = block_size;
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint64_t stream = first_stream + i;
        traces_.push_back(std::make_shared<const NoiseTrace>(generate_flicker(cycles, derive_seed(master_seed, 2 * stream))));
        measurement_seeds_.push_back(derive_seed(master_seed, 2 * stream + 1));
    }
}

EvaluationSet EvaluationSet::optimization(const SearchConfig& cfg)
{
    return {cfg.master_seed, kOptimizationStreams, cfg.evaluation_seeds, cfg.cycles, cfg.block_size, score_limits(cfg)};
}

EvaluationSet EvaluationSet::heldout(const SearchConfig& cfg)
{
    return {cfg.master_seed, kHeldoutStreams, cfg.heldout_seeds, cfg.cycles, cfg.block_size, score_limits(cfg)};
}

EvaluationSet EvaluationSet::screening(const SearchConfig& cfg)
{
    return {cfg.master_seed, kScreeningStreams, cfg.evaluation_seeds, cfg.screen_cycles, cfg.block_size, score_limits(cfg)};
}

std::vector<std::uint64_t> EvaluationSet::trace_seeds() const
{
    std::vector<std::uint64_t> seeds;
    for (const auto& t : traces_) seeds.push_back(t->seed());
    return seeds;
}

std::vector<InstabilityReport> EvaluationSet::reports(const ClockProtocol& protocol) const
{
    std::vector<InstabilityReport> out;
    out.reserve(traces_.size());
    for (std::size_t i = 0; i < traces_.size(); ++i) {
        out.push_back(simulate_instability(protocol, *traces_[i], cycles_, measurement_seeds_[i], estimator_));
    }
    return out;
}

double EvaluationSet::evaluate(const ClockProtocol& protocol) const
{
    double sum = 0.0;
    for (std::size_t i = 0; i < traces_.size(); ++i) {
        sum += simulate_instability(protocol, *traces_[i], cycles_, measurement_seeds_[i], estimator_).variance_at_1s;
    }
    return sum / static_cast<double>(traces_.size());
}

double EvaluationSet::score(const ClockProtocol& protocol) const
{
    const double period = protocol.probe_period();
    if (period < limits_.min_probe_period || period > limits_.max_probe_period) return kInf;
    const double window = limits_.phase_margin * std::numbers::pi / std::max(1, phase_periodicity(protocol.initial_state()));
    std::vector<double> variances;
    variances.reserve(traces_.size());
    for (std::size_t i = 0; i < traces_.size(); ++i) {
        const auto report = simulate_instability(protocol, *traces_[i], cycles_, measurement_seeds_[i], estimator_);
        if (report.fringe_hops > 0 || report.max_abs_phase >= window) return kInf;
        variances.push_back(report.variance_at_1s);
    }
    const double mean = std::accumulate(variances.begin(), variances.end(), 0.0) / static_cast<double>(variances.size());
    // A slip onto a neighbouring fringe of a multi-fringe readout is invisible to the hop counter
    // but leaves one seed far above the rest.
    auto sorted = variances;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2), sorted.end());
    const double median = sorted[sorted.size() / 2];
    if (*std::max_element(variances.begin(), variances.end()) > kOutlierFactor * median) return kInf;
    return mean;
}

double objective(const ParamVector& params, const EvaluationSet& set) { return set.score(decode_params(params)); }

// ---- families ---------------------------------------------------------------------------

std::string to_string(ProtocolFamily family)
{
    switch (family) {
    case ProtocolFamily::ramsey: return "ramsey";
    case ProtocolFamily::ghz: return "ghz";
    case ProtocolFamily::squeezed: return "squeezed";
    case ProtocolFamily::buzek: return "buzek";
    case ProtocolFamily::custom: return "custom";
    }
    return "custom";
}

ProtocolFamily family_from_string(const std::string& name)
{
    for (const auto f : {ProtocolFamily::ramsey, ProtocolFamily::ghz, ProtocolFamily::squeezed,
                         ProtocolFamily::buzek, ProtocolFamily::custom}) {
        if (to_string(f) == name) return f;
    }
    throw ValidationError("unknown protocol family \"" + name + "\"");
}

double ghz_clock_readout_phase() { return -std::numbers::pi / 2.0; }

SearchResult refine_known(ProtocolFamily family, int n, const SearchConfig& cfg, const FamilyOptions& options)
{
    RefineSpace space;
    space.n = n;
    switch (family) {
    case ProtocolFamily::ramsey:
        space.symmetry = Symmetry::antisymmetric;
        space.build = [n](double) { return std::pair{ramsey_state(n), ramsey_basis(n)}; };
        break;
    case ProtocolFamily::ghz:
        space.symmetry = Symmetry::ghz;
        space.build = [n](double) { return std::pair{ghz_state(n), ghz_basis(n, ghz_clock_readout_phase())}; };
        break;
    case ProtocolFamily::squeezed:
        space.symmetry = Symmetry::antisymmetric;
        space.has_kappa = true;
        space.build = [n](double kappa) {
            auto p = squeezed_protocol(n, kappa, 1.0);
            return std::pair{p.initial_state(), p.basis()};
        };
        break;
    case ProtocolFamily::buzek: {
        const bool shift = options.half_shift.value_or(n % 2 == 1);
        space.symmetry = Symmetry::none;
        space.build = [n, shift](double) { return std::pair{buzek_state(n), buzek_basis(n, shift)}; };
        break;
    }
    case ProtocolFamily::custom:
        throw ValidationError("refine_known needs a builtin family; use refine_fixed for custom protocols");
    }
    // Validate n against the family before spending time on traces.
    (void)space.build(1.0);
    const auto opt_set = EvaluationSet::optimization(cfg);
    const auto heldout_set = EvaluationSet::heldout(cfg);
    return refine_space(space, family, cfg, kRefineStreams + static_cast<std::uint64_t>(family), opt_set,
                        &heldout_set);
}

SearchResult refine_fixed(const ClockProtocol& protocol, const SearchConfig& cfg)
{
    RefineSpace space;
    space.n = protocol.qubits();
    space.symmetry = Symmetry::none;
    space.build = [&protocol](double) { return std::pair{protocol.initial_state(), protocol.basis()}; };
    const auto opt_set = EvaluationSet::optimization(cfg);
    const auto heldout_set = EvaluationSet::heldout(cfg);
    return refine_space(space, ProtocolFamily::custom, cfg, kRefineStreams + 100, opt_set, &heldout_set);
}

SearchResult warm_start_search(const ClockProtocol& protocol, const SearchConfig& cfg)
{
    const int n = protocol.qubits();
    const auto set = EvaluationSet::optimization(cfg);
    const auto start = to_search_coordinates(encode_params(protocol));
    const Objective f = [&](std::span<const double> x) { return coordinate_objective(n, set, x); };

    NelderMeadResult nm;
    if (cfg.max_iterations > 0) {
        nm = polish(f, start, search_steps(n), cfg, ParamVector::period_offset(n));
    } else {
        nm.x = start;
        nm.f = f(start);
        nm.evaluations = 1;
    }

    SearchResult result;
    result.best = from_search_coordinates(n, nm.x);
    if (cfg.max_iterations == 0) result.best = encode_params(protocol);
    result.protocol = std::make_shared<const ClockProtocol>(decode_params(result.best));
    result.objective = nm.f;
    result.heldout = EvaluationSet::heldout(cfg).evaluate(*result.protocol);
    result.iterations = nm.iterations;
    result.evaluations = nm.evaluations;
    result.master_seed = cfg.master_seed;
    result.config_hash = config_hash(cfg);
    return result;
}

SearchResult random_restart_search(const SearchConfig& cfg, const std::optional<std::filesystem::path>& checkpoint)
{
    const int n = cfg.n;
    if (n < 1 || n > kMaxQubits) throw ValidationError("search needs 1 <= n <= 64");
    if (cfg.restarts < 1) throw ValidationError("search needs at least one restart");

    CheckpointState resumed;
    bool fresh = true;
    if (checkpoint && std::filesystem::exists(*checkpoint) && std::filesystem::file_size(*checkpoint) > 0) {
        resumed = load_checkpoint(*checkpoint, cfg);
        fresh = false;
    }
    CheckpointWriter log(checkpoint, cfg, fresh);
    const std::size_t workers = worker_count(cfg);

    double threshold = cfg.threshold;
    if (threshold <= 0.0) {
        if (resumed.threshold) {
            threshold = *resumed.threshold;
        } else {
            threshold = 1.05 * refine_known(ProtocolFamily::ramsey, n, cfg).objective;
            log.write(json{{"type", "baseline"}, {"threshold", threshold}});
        }
    }

    // Screening.
    const auto screen_set = EvaluationSet::screening(cfg);
    std::vector<Candidate> candidates(cfg.restarts);
    parallel_for(cfg.restarts, workers, [&](std::size_t i) {
        if (const auto it = resumed.screened.find(i); it != resumed.screened.end()) {
            candidates[i] = it->second;
            return;
        }
        Candidate c = random_candidate(cfg, i);
        screen_candidate(c, cfg, screen_set);
        log.write(json{{"type", "screen"}, {"index", i}, {"vector", c.params.reals}, {"screen", value_to_json(c.screen)}});
        candidates[i] = std::move(c);
    });

    std::vector<std::size_t> order(cfg.restarts);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return candidates[a].screen < candidates[b].screen; });
    std::vector<std::size_t> chosen;
    for (const auto i : order) {
        if (candidates[i].screen < threshold || chosen.size() < cfg.min_refine) chosen.push_back(i);
    }

    const auto opt_set = EvaluationSet::optimization(cfg);
    const auto heldout_set = EvaluationSet::heldout(cfg);

    struct Refined {
        std::size_t index;
        ParamVector params;
        double objective;
        std::size_t iterations;
        std::size_t evaluations;
    };
    std::vector<Refined> refined(chosen.size());
    parallel_for(chosen.size(), workers, [&](std::size_t k) {
        const std::size_t index = chosen[k];
        if (const auto it = resumed.refined.find(index); it != resumed.refined.end()) {
            refined[k] = {index, it->second.params, it->second.objective, it->second.iterations, it->second.evaluations};
            return;
        }
        // Corrections and T first with the candidate's state and basis frozen, then every parameter.
        const auto draft = decode_params(candidates[index].params);
        RefineSpace space;
        space.n = n;
        space.build = [&draft](double) { return std::pair{draft.initial_state(), draft.basis()}; };
        const auto fixed = refine_space(space, ProtocolFamily::custom, cfg, kRefineStreams + 1000 + index, opt_set, nullptr);
        const Objective f = [&](std::span<const double> x) { return coordinate_objective(n, opt_set, x); };
        const auto nm = polish(f, to_search_coordinates(fixed.best), search_steps(n), cfg, ParamVector::period_offset(n));
        Refined r{index, from_search_coordinates(n, nm.x), nm.f, fixed.iterations + nm.iterations,
                  fixed.evaluations + nm.evaluations};
        log.write(json{{"type", "refine"},
                       {"index", index},
                       {"vector", r.params.reals},
                       {"objective", value_to_json(r.objective)},
                       {"iterations", r.iterations},
                       {"evaluations", r.evaluations}});
        refined[k] = std::move(r);
    });

    SearchResult result;
    result.master_seed = cfg.master_seed;
    result.config_hash = config_hash(cfg);

    const Refined* winner = nullptr;
    for (const auto& r : refined) {
        if (!std::isfinite(r.objective)) continue;
        if (!winner || r.objective < winner->objective ||
            (r.objective == winner->objective && lexicographically_less(r.params.reals, winner->params.reals))) {
            winner = &r;
        }
    }
    std::size_t total_evaluations = 0;
    for (const auto& r : refined) total_evaluations += r.evaluations;
    result.evaluations = total_evaluations + cfg.restarts;

    if (winner) {
        result.best = winner->params;
        result.objective = winner->objective;
        result.iterations = winner->iterations;
        result.beat_threshold = winner->objective < threshold;
    } else {
        result.best = candidates[order.front()].params;
        result.refined = false;
        result.beat_threshold = false;
        result.objective = safe_evaluate(opt_set, result.best, false);
    }
    result.protocol = std::make_shared<const ClockProtocol>(decode_params(result.best));
    result.heldout = heldout_set.evaluate(*result.protocol);
    return result;
}

nlohmann::json result_to_json(const SearchResult& result)
{
    std::ostringstream hash;
    hash << std::hex << result.config_hash;
    json j{{"family", to_string(result.family)},
           {"n", result.best.n},
           {"best_vector", result.best.reals},
           {"objective_hz2", value_to_json(result.objective)},
           {"heldout_hz2", value_to_json(result.heldout)},
           {"iterations", result.iterations},
           {"evaluations", result.evaluations},
           {"refined", result.refined},
           {"beat_threshold", result.beat_threshold},
           {"provenance", {{"master_seed", result.master_seed}, {"config_hash", hash.str()}}}};
    j["kappa"] = result.kappa ? json(*result.kappa) : json(nullptr);
    if (result.protocol) {
        j["T_seconds"] = result.protocol->probe_period();
        j["protocol"] = protocol_to_json(*result.protocol);
    }
    return j;
}

}  // namespace clockopt
