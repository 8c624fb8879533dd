// End-to-end acceptance checks, one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails.

#include <chrono>
#include <cstdlib>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/QR>

#include "projection_servo.hpp"
#include "tensor_oracle.hpp"

#include "clockopt/cli.hpp"
#include "clockopt/noise.hpp"
#include "clockopt/protocol_json.hpp"
#include "clockopt/protocols.hpp"
#include "clockopt/rng.hpp"
#include "clockopt/search.hpp"
#include "clockopt/simulator.hpp"

using namespace clockopt;
using std::numbers::pi;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* format, auto... args)
{
    char buffer[512];
    std::snprintf(buffer, sizeof buffer, format, args...);
    return buffer;
}

std::string join(const std::vector<std::string>& parts)
{
    std::string s;
    for (const auto& p : parts) s += (s.empty() ? "" : " ") + p;
    return s;
}

// Refinements shared between criteria.
class Refinements {
public:
    explicit Refinements(SearchConfig cfg) : cfg_(cfg) {}

    const SearchResult& get(ProtocolFamily family, int n)
    {
        const auto key = std::make_pair(static_cast<int>(family), n);
        auto it = cache_.find(key);
        if (it == cache_.end()) {
            SearchConfig cfg = cfg_;
            cfg.n = n;
            it = cache_.emplace(key, refine_known(family, n, cfg)).first;
        }
        return it->second;
    }

    double sql(int n) { return get(ProtocolFamily::ramsey, 1).objective / n; }
    const SearchConfig& config() const { return cfg_; }

private:
    SearchConfig cfg_;
    std::map<std::pair<int, int>, SearchResult> cache_;
};

// Least-squares C in log space for ratio ~ C n^-alpha; returns the worst relative deviation.
double worst_power_law_deviation(const std::vector<int>& ns, const std::vector<double>& ratios, double alpha, double* c_out)
{
    double log_c = 0.0;
    for (std::size_t i = 0; i < ns.size(); ++i) log_c += std::log(ratios[i]) + alpha * std::log(ns[i]);
    log_c /= static_cast<double>(ns.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        const double predicted = std::exp(log_c) * std::pow(ns[i], -alpha);
        worst = std::max(worst, std::abs(ratios[i] / predicted - 1.0));
    }
    if (c_out) *c_out = std::exp(log_c);
    return worst;
}

Outcome noise_calibration()
{
    const auto trace = generate_flicker(1000000, derive_seed(2024, 0));
    const double adjacent = adjacent_difference_variance(trace.samples());
    bool pass = std::abs(adjacent / 2.0 - 1.0) <= 0.05;
    std::vector<std::string> parts{fmt("adjacent-difference variance %.4f Hz^2;", adjacent)};
    for (std::size_t tau : {1, 10, 100}) {
        const double a = allan_deviation(trace, tau);
        pass = pass && std::abs(a - 1.0) <= 0.10;
        parts.push_back(fmt("adev(%zu)=%.4f", tau, a));
    }
    return {pass, join(parts)};
}

Outcome curve_oracle()
{
    double worst_closed = 0.0, worst_oracle = 0.0;
    const auto curve = [](const ClockProtocol& p, double phi) {
        return outcome_probabilities(evolve_phase(p.initial_state(), phi), p.basis());
    };
    const double r = std::sqrt(0.5);
    const auto ramsey = ramsey_protocol(1, 0.05);
    const auto product = oracle::product_state(1, r, oracle::cd(0.0, -r));
    for (int i = 0; i < 1000; ++i) {
        const double phi = -pi + 2 * pi * i / 999.0;
        const auto p = curve(ramsey, phi);
        const auto o = oracle::rotated_counting_probabilities(1, pi / 2, oracle::phase_each(1, phi, product));
        worst_closed = std::max({worst_closed, std::abs(p[0] - (1 + std::sin(phi)) / 2), std::abs(p[1] - (1 - std::sin(phi)) / 2)});
        worst_oracle = std::max({worst_oracle, std::abs(p[0] - o[0]), std::abs(p[1] - o[1])});
    }
    for (int n : {2, 3}) {
        const auto ghz = ghz_protocol(n, 0.05);
        const std::size_t dim = std::size_t{1} << n;
        oracle::Vec plus(dim, 0.0), minus(dim, 0.0);
        plus[0] = minus[0] = r;
        plus[dim - 1] = r;
        minus[dim - 1] = -r;
        for (int i = 0; i < 1000; ++i) {
            const double phi = -pi + 2 * pi * i / 999.0;
            const auto p = curve(ghz, phi);
            const auto o = oracle::projection_probabilities({plus, minus}, oracle::phase_each(n, phi, plus));
            worst_closed = std::max({worst_closed, std::abs(p.front() - (1 + std::cos(n * phi)) / 2),
                                     std::abs(p.back() - (1 - std::cos(n * phi)) / 2)});
            worst_oracle = std::max({worst_oracle, std::abs(p.front() - o[0]), std::abs(p.back() - o[1])});
        }
    }
    return {worst_closed <= 1e-10 && worst_oracle <= 1e-10,
            fmt("max deviation from closed form %.2e, from tensor oracle %.2e", worst_closed, worst_oracle)};
}

Outcome subspace_equivalence()
{
    std::mt19937_64 gen(7);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> angle(-pi, pi);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + trial % 4;
        std::vector<Complex> amp(static_cast<std::size_t>(n) + 1);
        for (auto& a : amp) a = {g(gen), g(gen)};
        const auto state = normalize(SymmetricState(amp));
        const double phi = angle(gen);
        const double theta = angle(gen);
        const std::vector<oracle::cd> dicke(state.amplitudes().begin(), state.amplitudes().end());
        const auto full = oracle::phase_each(n, phi, oracle::embed(n, dicke));
        const auto evolved = evolve_phase(state, phi);
        const auto p = outcome_probabilities(evolved, MeasurementBasis(collective_rotation(n, theta).cast<Complex>()));
        const auto o = oracle::rotated_counting_probabilities(n, theta, full);
        for (std::size_t j = 0; j < p.size(); ++j) worst = std::max(worst, std::abs(p[j] - o[j]));

        ComplexMatrix m(n + 1, n + 1);
        for (int i = 0; i <= n; ++i)
            for (int j = 0; j <= n; ++j) m(i, j) = {g(gen), g(gen)};
        const MeasurementBasis general(Eigen::HouseholderQR<ComplexMatrix>(m).householderQ());
        std::vector<oracle::Vec> kets;
        for (std::size_t j = 0; j < general.size(); ++j) {
            const auto v = general.vector(j);
            kets.push_back(oracle::embed(n, {v.amplitudes().begin(), v.amplitudes().end()}));
        }
        const auto pg = outcome_probabilities(evolved, general);
        const auto og = oracle::projection_probabilities(kets, full);
        for (std::size_t j = 0; j < pg.size(); ++j) worst = std::max(worst, std::abs(pg[j] - og[j]));
    }
    return {worst <= 1e-10, fmt("100 states, rotated and random bases, max deviation %.2e", worst)};
}

Outcome sql_reproduction()
{
    const double t = 0.01;
    bool pass = true;
    std::vector<std::string> parts;
    for (int n : {1, 2, 4}) {
        const auto p = testsupport::linear_ramsey(n, t, 0.05);
        const auto trace = generate_white(1000000, 0.0, 0);
        const auto r = simulate_instability(p, trace, 1000000, derive_seed(4, static_cast<std::uint64_t>(n)),
                                            {.block_size = 1000, .burn_in_blocks = 10});
        const double ratio = r.variance_at_1s / testsupport::projection_variance_at_1s(n, t);
        pass = pass && std::abs(ratio - 1.0) <= 0.15 && r.phase_variance < 0.05 && r.fringe_hops == 0;
        parts.push_back(fmt("n=%d ratio %.3f <phi^2> %.4f;", n, ratio, r.phase_variance));
    }
    return {pass, join(parts)};
}

Outcome entanglement_gain(Refinements& ref)
{
    bool beats = true;
    std::vector<int> ns;
    std::vector<double> ratios;
    std::vector<std::string> parts;
    for (int n = 2; n <= 8; ++n) {
        const double ramsey = ref.get(ProtocolFamily::ramsey, n).objective;
        const double squeezed = ref.get(ProtocolFamily::squeezed, n).objective;
        beats = beats && squeezed < ramsey;
        ns.push_back(n);
        ratios.push_back(squeezed / ref.sql(n));
        parts.push_back(fmt("n=%d %.4f/%.4f", n, squeezed, ramsey));
    }
    double c = 0.0;
    const double worst = worst_power_law_deviation(ns, ratios, 1.0 / 3.0, &c);
    parts.push_back(fmt("; squeezed/SQL = %.3f n^-1/3, worst deviation %.1f%%", c, 100 * worst));
    return {beats && worst <= 0.20, join(parts)};
}

Outcome buzek_scaling(Refinements& ref)
{
    std::vector<int> ns{4, 8, 16};
    std::vector<double> ratios;
    std::vector<std::string> parts;
    for (int n : ns) {
        ratios.push_back(ref.get(ProtocolFamily::buzek, n).objective / ref.sql(n));
        parts.push_back(fmt("n=%d ratio %.3f", n, ratios.back()));
    }
    double c = 0.0;
    const double worst = worst_power_law_deviation(ns, ratios, 1.0, &c);
    const double buzek16 = ref.get(ProtocolFamily::buzek, 16).objective;
    const double squeezed16 = ref.get(ProtocolFamily::squeezed, 16).objective;
    parts.push_back(fmt("; fit %.2f/n, worst deviation %.1f%%; n=16 buzek %.5f vs squeezed %.5f", c, 100 * worst, buzek16,
                        squeezed16));
    return {worst <= 0.25 && ratios.back() <= 0.55 && buzek16 < squeezed16, join(parts)};
}

Outcome ghz_null(Refinements& ref)
{
    bool pass = true;
    std::vector<std::string> parts;
    for (int n : {2, 3, 4}) {
        const double ratio = ref.get(ProtocolFamily::ghz, n).objective / ref.get(ProtocolFamily::ramsey, n).objective;
        pass = pass && ratio >= 0.95;
        parts.push_back(fmt("n=%d ghz/ramsey %.3f", n, ratio));
    }
    return {pass, join(parts)};
}

Outcome paper_fixture(Refinements& ref)
{
    const auto path = std::filesystem::path(CLOCKOPT_TEST_DATA_DIR) / "paper_n2.json";
    const auto fixture = read_protocol_file(path, {.orthonormalize = true});
    SearchConfig cfg = ref.config();
    cfg.n = 2;
    const auto r = refine_fixed(fixture, cfg);
    const double squeezed = ref.get(ProtocolFamily::squeezed, 2).objective;
    const double ratio = r.objective / squeezed;
    return {std::abs(ratio - 1.0) <= 0.10,
            fmt("fixture %.4f (T %.4f s) vs squeezed %.4f, ratio %.3f", r.objective, r.protocol->probe_period(), squeezed, ratio)};
}

Outcome desk_search(const Refinements& ref)
{
    SearchConfig cfg = ref.config();
    cfg.n = 2;
    cfg.restarts = 200;
    cfg.evaluation_seeds = 8;
    cfg.min_refine = 16;
    cfg.polish_rounds = 3;
    const auto r = random_restart_search(cfg);
    // The reference is refined under the same seeds and budget as the search.
    const double squeezed = refine_known(ProtocolFamily::squeezed, 2, cfg).heldout;
    const double ratio = r.heldout / squeezed;
    return {r.refined && ratio <= 1.10,
            fmt("held-out %.4f (objective %.4f) vs squeezed held-out %.4f, ratio %.3f", r.heldout, r.objective, squeezed, ratio)};
}

Outcome determinism()
{
    const auto dir = std::filesystem::temp_directory_path() / "clockopt_acceptance";
    std::filesystem::create_directories(dir);
    const auto protocol_file = dir / "protocol.json";
    write_protocol_file(buzek_protocol(3, true, 0.04), protocol_file);

    const std::vector<std::pair<std::string, std::vector<std::string>>> commands{
        {"simulate", {"simulate", "--protocol", "squeezed", "--n", "3", "--kappa", "1.5", "--cycles", "20000", "--seed", "3"}},
        {"simulate-file", {"simulate", "--protocol", "file:" + protocol_file.string(), "--evaluation-set", "heldout", "--cycles",
                           "10000", "--set-seeds", "2"}},
        {"curves", {"curves", "--protocol", "buzek", "--n", "5", "--points", "301"}},
        {"sweep", {"sweep", "--families", "ramsey,buzek", "--n-min", "1", "--n-max", "2", "--cycles", "10000", "--seeds", "1"}},
        {"noise-check", {"noise-check", "--cycles", "100000", "--seed", "9"}},
        {"search", {"search", "--n", "2", "--restarts", "4", "--cycles", "10000", "--screen-cycles", "2000", "--seeds", "2",
                    "--heldout-seeds", "2", "--min-refine", "1", "--max-iterations", "30", "--polish-rounds", "0"}},
    };
    bool pass = true;
    std::vector<std::string> parts;
    for (const auto& [name, args] : commands) {
        std::string outputs[2];
        for (int rep = 0; rep < 2; ++rep) {
            const auto path = dir / (name + "_" + std::to_string(rep) + ".out");
            auto full = args;
            full.push_back("--out");
            full.push_back(path.string());
            std::ostringstream out, err;
            if (cli::run(full, out, err) != cli::kSuccess) {
                outputs[rep] = "failed: " + err.str();
                continue;
            }
            std::ifstream in(path, std::ios::binary);
            std::ostringstream s;
            s << in.rdbuf();
            // Output paths differ between the two runs; they are recorded in the manifest.
            std::string text = s.str();
            const std::string own = path.string();
            for (std::size_t at; (at = text.find(own)) != std::string::npos;) text.replace(at, own.size(), "OUT");
            outputs[rep] = text;
        }
        const bool same = outputs[0] == outputs[1] && outputs[0].rfind("failed", 0) != 0;
        pass = pass && same;
        parts.push_back(name + (same ? " identical" : " DIFFERS"));
    }
    std::filesystem::remove_all(dir);
    return {pass, join(parts)};
}

}  // namespace

// Optional arguments select criteria by number; the default runs all of them.
int main(int argc, char** argv)
{
    SearchConfig cfg;
    cfg.master_seed = 1;
    Refinements ref(cfg);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"noise calibration", noise_calibration},
        {"analytic curve oracle", curve_oracle},
        {"subspace equivalence", subspace_equivalence},
        {"projection noise limit", sql_reproduction},
        {"squeezed gain over ramsey, n=2..8", [&] { return entanglement_gain(ref); }},
        {"buzek scaling and crossover", [&] { return buzek_scaling(ref); }},
        {"ghz gives no gain", [&] { return ghz_null(ref); }},
        {"printed two-qubit protocol", [&] { return paper_fixture(ref); }},
        {"random restart search, n=2", [&] { return desk_search(ref); }},
        {"cli determinism", determinism},
    };

    std::vector<bool> selected(criteria.size(), argc == 1);
    for (int a = 1; a < argc; ++a) {
        const int k = std::atoi(argv[a]);
        if (k >= 1 && k <= static_cast<int>(criteria.size())) selected[static_cast<std::size_t>(k - 1)] = true;
    }

    int failures = 0;
    int ran = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (!selected[i]) continue;
        ++ran;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failures += o.pass ? 0 : 1;
        std::printf("criterion %zu %s: %s (%s) [%.0f s]\n", i + 1, criteria[i].first.c_str(), o.pass ? "PASS" : "FAIL",
                    o.detail.c_str(), seconds);
        std::fflush(stdout);
    }
    std::printf("%d of %d criteria failed\n", failures, ran);
    return failures == 0 ? 0 : 1;
}
