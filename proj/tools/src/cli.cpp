#include "clockopt/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "clockopt/error.hpp"
#include "clockopt/noise.hpp"
#include "clockopt/protocol_json.hpp"
#include "clockopt/protocols.hpp"
#include "clockopt/rng.hpp"
#include "clockopt/search.hpp"
#include "clockopt/simulator.hpp"

#ifndef CLOCKOPT_VERSION
#define CLOCKOPT_VERSION "unknown"
#endif

namespace clockopt::cli {

namespace {

using nlohmann::json;

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kDefaultProbePeriod = 0.05;

// Streams of the run seed: noise trace and measurement outcomes.
constexpr std::uint64_t kTraceStream = 0;
constexpr std::uint64_t kMeasurementStream = 1;

json manifest(const std::string& subcommand, json config, std::uint64_t seed, json artifacts)
{
    return json{{"tool", "clockopt"},
                {"version", CLOCKOPT_VERSION},
                {"subcommand", subcommand},
                {"config", std::move(config)},
                {"master_seed", seed},
                {"artifacts", std::move(artifacts)}};
}

json artifact_path(const std::string& path) { return path.empty() ? json(nullptr) : json(path); }

void emit(const std::string& text, const std::string& path, std::ostream& out)
{
    if (path.empty()) {
        out << text;
        return;
    }
    std::ofstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot open " + path + " for writing");
    file << text;
    if (!file) throw IoError("failed writing " + path);
}

std::string csv_number(double v)
{
    if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    std::ostringstream s;
    s << std::setprecision(12) << v;
    return s.str();
}

std::string csv_quote(const std::string& text)
{
    std::string q = "\"";
    for (const char c : text) {
        if (c == '"') q += '"';
        q += (c == '\n') ? ' ' : c;
    }
    return q + "\"";
}

// ---- protocol source shared by simulate and curves --------------------------------------

struct ProtocolSource {
    std::string protocol;
    int n = 1;
    std::optional<double> probe_period;
    std::optional<double> kappa;
    bool optimize_kappa = false;
    std::optional<bool> half_shift;
    bool orthonormalize = false;
    bool refine = false;
    std::size_t cycles = 100000;
    std::size_t set_seeds = 4;
    std::size_t block_size = 100;
    std::uint64_t seed = 1;
};

void add_source_options(CLI::App& cmd, ProtocolSource& src, CLI::Option*& half_shift_flag, bool& half_shift_value)
{
    cmd.add_option("--protocol", src.protocol, "ramsey | ghz | squeezed | buzek | file:PATH")->required();
    cmd.add_option("--n", src.n, "qubits")->check(CLI::Range(1, 64));
    cmd.add_option("--t", src.probe_period, "probe period, seconds");
    cmd.add_option("--kappa", src.kappa, "squeezing parameter");
    cmd.add_flag("--optimize-kappa", src.optimize_kappa, "optimize kappa, T and corrections (implies --refine)");
    half_shift_flag = cmd.add_flag("--half-shift,!--no-half-shift", half_shift_value,
                                   "Buzek basis phases 2 pi (j + 1/2) / (n + 1); default on for odd n");
    cmd.add_flag("--orthonormalize", src.orthonormalize, "replace a file basis by its nearest unitary");
    cmd.add_flag("--refine", src.refine, "optimize corrections and T (and kappa) before running");
    cmd.add_option("--cycles", src.cycles, "cycles per run")->check(CLI::PositiveNumber);
    cmd.add_option("--set-seeds", src.set_seeds, "seeds per evaluation set used by --refine")->check(CLI::PositiveNumber);
    cmd.add_option("--block-size", src.block_size, "cycles per averaging block")->check(CLI::PositiveNumber);
    cmd.add_option("--seed", src.seed, "master seed");
}

json source_config(const ProtocolSource& src)
{
    return json{{"protocol", src.protocol},
                {"n", src.n},
                {"t_seconds", src.probe_period ? json(*src.probe_period) : json(nullptr)},
                {"kappa", src.kappa ? json(*src.kappa) : json(nullptr)},
                {"optimize_kappa", src.optimize_kappa},
                {"half_shift", src.half_shift ? json(*src.half_shift) : json(nullptr)},
                {"orthonormalize", src.orthonormalize},
                {"refine", src.refine || src.optimize_kappa},
                {"cycles", src.cycles},
                {"set_seeds", src.set_seeds},
                {"block_size", src.block_size},
                {"seed", src.seed}};
}

SearchConfig refine_config(const ProtocolSource& src)
{
    SearchConfig cfg;
    cfg.n = src.n;
    cfg.master_seed = src.seed;
    cfg.cycles = src.cycles;
    cfg.evaluation_seeds = src.set_seeds;
    cfg.heldout_seeds = src.set_seeds;
    cfg.block_size = src.block_size;
    return cfg;
}

struct ResolvedProtocol {
    ClockProtocol protocol;
    std::optional<SearchResult> refined;
};

ResolvedProtocol resolve_protocol(const ProtocolSource& src)
{
    const bool refine = src.refine || src.optimize_kappa;
    const double period = src.probe_period.value_or(kDefaultProbePeriod);
    if (src.probe_period && !(*src.probe_period > 0.0)) throw ValidationError("--t must be positive");

    if (src.protocol.rfind("file:", 0) == 0) {
        if (src.optimize_kappa) throw ValidationError("--optimize-kappa applies to the squeezed protocol only");
        ProtocolReadOptions options;
        options.orthonormalize = src.orthonormalize;
        ClockProtocol p = read_protocol_file(src.protocol.substr(5), options);
        if (src.probe_period) {
            // Phase estimates are kept; corrections in Hz follow the new period.
            const double scale = p.probe_period() / period;
            std::vector<double> c(p.corrections().begin(), p.corrections().end());
            for (auto& v : c) v *= scale;
            p = p.with_corrections(std::move(c)).with_probe_period(period);
        }
        if (!refine) return {std::move(p), std::nullopt};
        auto result = refine_fixed(p, refine_config(src));
        return {*result.protocol, std::move(result)};
    }

    const ProtocolFamily family = family_from_string(src.protocol);
    if (family == ProtocolFamily::custom) throw ValidationError("custom protocols are read with file:PATH");
    if (family == ProtocolFamily::squeezed && !src.kappa && !src.optimize_kappa) {
        throw ValidationError("squeezed protocol needs --kappa or --optimize-kappa");
    }
    if (family != ProtocolFamily::squeezed && (src.kappa || src.optimize_kappa)) {
        throw ValidationError("--kappa and --optimize-kappa apply to the squeezed protocol only");
    }
    if (src.kappa && src.optimize_kappa) throw ValidationError("--kappa and --optimize-kappa are exclusive");
    if (src.kappa && !(*src.kappa > 0.0)) throw ValidationError("--kappa must be positive");

    const bool shift = src.half_shift.value_or(src.n % 2 == 1);
    auto build = [&]() -> ClockProtocol {
        switch (family) {
        case ProtocolFamily::ramsey: return ramsey_protocol(src.n, period);
        case ProtocolFamily::ghz: return ghz_protocol(src.n, period, ghz_clock_readout_phase());
        case ProtocolFamily::squeezed: return squeezed_protocol(src.n, *src.kappa, period);
        case ProtocolFamily::buzek: return buzek_protocol(src.n, shift, period);
        case ProtocolFamily::custom: break;
        }
        throw ValidationError("unknown protocol");
    };

    if (!refine) return {build(), std::nullopt};
    if (family == ProtocolFamily::squeezed && src.kappa) {
        auto result = refine_fixed(build(), refine_config(src));
        return {*result.protocol, std::move(result)};
    }
    FamilyOptions options;
    options.half_shift = src.half_shift;
    auto result = refine_known(family, src.n, refine_config(src), options);
    return {*result.protocol, std::move(result)};
}

json refine_summary(const SearchResult& r)
{
    return json{{"objective_hz2", r.objective},
                {"heldout_hz2", r.heldout},
                {"iterations", r.iterations},
                {"evaluations", r.evaluations},
                {"kappa", r.kappa ? json(*r.kappa) : json(nullptr)}};
}

void finish_source(ProtocolSource& src, const CLI::Option* half_shift_flag, bool half_shift_value)
{
    if (half_shift_flag->count() > 0) src.half_shift = half_shift_value;
}

// ---- simulate ---------------------------------------------------------------------------

struct SimulateArgs {
    ProtocolSource src;
    CLI::Option* half_shift_flag = nullptr;
    bool half_shift_value = false;
    std::string evaluation_set = "none";
    std::string out;
    std::string dump_cycles;
};

void write_cycles_csv(const std::vector<CycleRecord>& records, const json& head, const std::string& path)
{
    std::ostringstream s;
    s << "# manifest " << head.dump() << '\n' << "cycle,frequency_error_hz,phase_rad,outcome,correction_hz\n";
    s << std::setprecision(17);
    for (const auto& r : records) {
        s << r.cycle << ',' << r.frequency_error << ',' << r.phase << ',' << r.outcome << ',' << r.correction << '\n';
    }
    std::ostringstream ignored;
    emit(s.str(), path, ignored);
}

int cmd_simulate(SimulateArgs& a, std::ostream& out)
{
    finish_source(a.src, a.half_shift_flag, a.half_shift_value);
    if (a.evaluation_set != "none" && !a.dump_cycles.empty()) {
        throw ValidationError("--dump-cycles needs a single run (--evaluation-set none)");
    }
    auto config = source_config(a.src);
    config["evaluation_set"] = a.evaluation_set;
    const json head = manifest("simulate", config, a.src.seed,
                               json{{"out", artifact_path(a.out)}, {"dump_cycles", artifact_path(a.dump_cycles)}});

    const auto resolved = resolve_protocol(a.src);
    const ClockProtocol& p = resolved.protocol;
    EstimatorOptions estimator;
    estimator.block_size = a.src.block_size;

    json doc{{"manifest", head}, {"protocol", protocol_to_json(p)}};
    if (resolved.refined) doc["refine"] = refine_summary(*resolved.refined);

    if (a.evaluation_set == "none") {
        const auto trace = generate_flicker(a.src.cycles, derive_seed(a.src.seed, kTraceStream));
        const auto seed = derive_seed(a.src.seed, kMeasurementStream);
        InstabilityReport report;
        if (a.dump_cycles.empty()) {
            report = simulate_instability(p, trace, a.src.cycles, seed, estimator);
        } else {
            const auto records = run_clock(p, trace, a.src.cycles, seed);
            report = estimate_instability(records, p.probe_period(), estimator);
            write_cycles_csv(records, head, a.dump_cycles);
        }
        doc["trace_seed"] = trace.seed();
        doc["measurement_seed"] = seed;
        doc["report"] = report_to_json(report);
    } else {
        auto cfg = refine_config(a.src);
        std::optional<EvaluationSet> set;
        if (a.evaluation_set == "optimization") {
            set.emplace(EvaluationSet::optimization(cfg));
        } else if (a.evaluation_set == "heldout") {
            set.emplace(EvaluationSet::heldout(cfg));
        } else {
            throw ValidationError("--evaluation-set must be none, optimization or heldout");
        }
        const auto reports = set->reports(p);
        double mean = 0.0;
        json list = json::array();
        for (const auto& r : reports) {
            mean += r.variance_at_1s;
            list.push_back(report_to_json(r));
        }
        doc["mean_variance_at_1s"] = mean / static_cast<double>(reports.size());
        doc["trace_seeds"] = set->trace_seeds();
        doc["measurement_seeds"] = set->measurement_seeds();
        doc["reports"] = std::move(list);
    }
    emit(doc.dump(2) + "\n", a.out, out);
    return kSuccess;
}

// ---- curves -----------------------------------------------------------------------------

struct CurvesArgs {
    ProtocolSource src;
    CLI::Option* half_shift_flag = nullptr;
    bool half_shift_value = false;
    double phi_min = -std::numbers::pi;
    double phi_max = std::numbers::pi;
    std::size_t points = 1001;
    std::string out;
};

int cmd_curves(CurvesArgs& a, std::ostream& out)
{
    finish_source(a.src, a.half_shift_flag, a.half_shift_value);
    if (a.points < 2) throw ValidationError("--points must be >= 2");
    if (!(a.phi_max > a.phi_min)) throw ValidationError("--phi-max must exceed --phi-min");
    auto config = source_config(a.src);
    config["phi_min"] = a.phi_min;
    config["phi_max"] = a.phi_max;
    config["points"] = a.points;
    const json head = manifest("curves", config, a.src.seed, json{{"out", artifact_path(a.out)}});

    const auto resolved = resolve_protocol(a.src);
    const ClockProtocol& p = resolved.protocol;
    std::vector<double> grid(a.points);
    for (std::size_t i = 0; i < a.points; ++i) {
        grid[i] = a.phi_min + (a.phi_max - a.phi_min) * static_cast<double>(i) / static_cast<double>(a.points - 1);
    }
    const auto table = probability_curves(p, grid);

    std::ostringstream s;
    s << "# manifest " << head.dump() << '\n';
    s << "# T_seconds," << csv_number(p.probe_period()) << '\n';
    s << "# phi_est";
    for (const double c : p.corrections()) s << ',' << csv_number(kTwoPi * p.probe_period() * c);
    s << '\n' << "phi";
    for (std::size_t j = 0; j < p.basis().size(); ++j) s << ",p_" << j;
    s << '\n';
    for (std::size_t i = 0; i < table.phi.size(); ++i) {
        s << csv_number(table.phi[i]);
        for (const double v : table.probabilities[i]) s << ',' << csv_number(v);
        s << '\n';
    }
    emit(s.str(), a.out, out);
    return kSuccess;
}

// ---- sweep ------------------------------------------------------------------------------

struct SweepArgs {
    std::vector<std::string> families{"ramsey", "squeezed", "buzek"};
    int n_min = 1;
    int n_max = 8;
    std::size_t cycles = 100000;
    std::size_t seeds = 4;
    std::uint64_t seed = 1;
    std::string out;
};

int cmd_sweep(SweepArgs& a, std::ostream& out, std::ostream& err)
{
    if (a.n_min < 1 || a.n_max > 20 || a.n_min > a.n_max) throw ValidationError("n range must lie within [1, 20]");
    std::vector<ProtocolFamily> families;
    for (const auto& name : a.families) {
        const auto f = family_from_string(name);
        if (f == ProtocolFamily::custom) throw ValidationError("sweep takes builtin families only");
        families.push_back(f);
    }
    SearchConfig cfg;
    cfg.master_seed = a.seed;
    cfg.cycles = a.cycles;
    cfg.evaluation_seeds = a.seeds;
    cfg.heldout_seeds = a.seeds;

    const json head = manifest("sweep",
                               json{{"families", a.families},
                                    {"n_min", a.n_min},
                                    {"n_max", a.n_max},
                                    {"cycles", a.cycles},
                                    {"seeds", a.seeds},
                                    {"seed", a.seed}},
                               a.seed, json{{"out", artifact_path(a.out)}});

    // SQL reference: refined single-qubit Ramsey divided by n.
    const double sql_one = refine_known(ProtocolFamily::ramsey, 1, cfg).objective;

    std::ostringstream s;
    s << "# manifest " << head.dump() << '\n';
    s << "# sql_reference_hz2," << csv_number(sql_one) << '\n';
    s << "n,family,T_seconds,kappa,variance_at_1s,heldout_variance_at_1s,sql_ratio,status\n";
    for (int n = a.n_min; n <= a.n_max; ++n) {
        for (const auto family : families) {
            s << n << ',' << to_string(family) << ',';
            try {
                const auto r = refine_known(family, n, cfg);
                s << csv_number(r.protocol->probe_period()) << ',' << (r.kappa ? csv_number(*r.kappa) : "") << ','
                  << csv_number(r.objective) << ',' << csv_number(r.heldout) << ','
                  << csv_number(r.objective / (sql_one / n)) << ",ok\n";
            } catch (const std::exception& e) {
                s << ",,,,," << csv_quote(std::string("error: ") + e.what()) << '\n';
                err << "sweep: n=" << n << ' ' << to_string(family) << ": " << e.what() << '\n';
            }
        }
    }
    emit(s.str(), a.out, out);
    return kSuccess;
}

// ---- noise-check ------------------------------------------------------------------------

struct NoiseArgs {
    std::size_t cycles = 1000000;
    std::uint64_t seed = 1;
    std::vector<std::size_t> taus{1, 10, 100};
    std::string out;
    std::string trace_out;
};

int cmd_noise_check(NoiseArgs& a, std::ostream& out)
{
    if (a.taus.empty()) throw ValidationError("--taus needs at least one value");
    const std::size_t max_tau = *std::max_element(a.taus.begin(), a.taus.end());
    if (a.cycles < 2 * max_tau + 1) {
        throw InsufficientData("noise-check needs at least 2 * max tau + 1 = " + std::to_string(2 * max_tau + 1) +
                               " cycles");
    }
    const json head = manifest("noise-check", json{{"cycles", a.cycles}, {"seed", a.seed}, {"taus", a.taus}}, a.seed,
                               json{{"out", artifact_path(a.out)}, {"trace_out", artifact_path(a.trace_out)}});
    const auto trace = generate_flicker(a.cycles, derive_seed(a.seed, kTraceStream));
    const auto report = allan_report(trace.samples(), a.taus);
    json allan = json::array();
    for (std::size_t i = 0; i < report.taus.size(); ++i) {
        allan.push_back(json{{"tau_cycles", report.taus[i]}, {"adev_hz", report.adev[i]}});
    }
    const json doc{{"manifest", head},
                   {"trace_seed", trace.seed()},
                   {"adjacent_difference_variance_hz2", adjacent_difference_variance(trace.samples())},
                   {"allan", allan}};
    if (!a.trace_out.empty()) write_trace_csv(trace, a.trace_out);
    emit(doc.dump(2) + "\n", a.out, out);
    return kSuccess;
}

// ---- search -----------------------------------------------------------------------------

struct SearchArgs {
    std::string config_file;
    std::string checkpoint;
    std::string out;
    std::string protocol_out;
    // Flag values; applied over the config file only when given.
    SearchConfig flags;
    std::vector<std::pair<CLI::Option*, std::function<void(SearchConfig&)>>> overrides;
};

template <typename T>
void add_override(CLI::App& cmd, SearchArgs& a, const std::string& name, T SearchConfig::*field,
                  const std::string& help)
{
    auto* opt = cmd.add_option(name, a.flags.*field, help);
    a.overrides.emplace_back(opt, [&a, field](SearchConfig& cfg) { cfg.*field = a.flags.*field; });
}

int cmd_search(SearchArgs& a, std::ostream& out)
{
    SearchConfig cfg;
    if (!a.config_file.empty()) {
        std::ifstream in(a.config_file, std::ios::binary);
        if (!in) throw IoError("cannot read config " + a.config_file);
        std::ostringstream text;
        text << in.rdbuf();
        cfg = config_from_json(parse_json_text(text.str(), a.config_file));
    }
    for (const auto& [opt, apply] : a.overrides) {
        if (opt->count() > 0) apply(cfg);
    }
    if (cfg.n < 2 || cfg.n > 8) throw ValidationError("search needs 2 <= n <= 8");
    cfg = config_from_json(config_to_json(cfg));

    const json head = manifest("search", config_to_json(cfg), cfg.master_seed,
                               json{{"out", artifact_path(a.out)},
                                    {"protocol_out", artifact_path(a.protocol_out)},
                                    {"checkpoint", artifact_path(a.checkpoint)}});
    std::optional<std::filesystem::path> checkpoint;
    if (!a.checkpoint.empty()) checkpoint = a.checkpoint;
    const auto result = random_restart_search(cfg, checkpoint);

    if (!a.protocol_out.empty()) write_protocol_file(*result.protocol, a.protocol_out);
    const json doc{{"manifest", head}, {"result", result_to_json(result)}};
    emit(doc.dump(2) + "\n", a.out, out);
    return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Simulate and optimize entangled atomic clock protocols.", "clockopt"};
    app.set_version_flag("--version", CLOCKOPT_VERSION);
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "run one protocol under 1 Hz flicker noise");
    add_source_options(*simulate, sim.src, sim.half_shift_flag, sim.half_shift_value);
    simulate->add_option("--evaluation-set", sim.evaluation_set,
                         "none (one run) | optimization | heldout (search seed sets)");
    simulate->add_option("--out", sim.out, "report JSON path (default stdout)");
    simulate->add_option("--dump-cycles", sim.dump_cycles, "per-cycle CSV path");

    CurvesArgs crv;
    auto* curves = app.add_subcommand("curves", "outcome probabilities against phase");
    add_source_options(*curves, crv.src, crv.half_shift_flag, crv.half_shift_value);
    curves->add_option("--phi-min", crv.phi_min, "first grid phase, rad");
    curves->add_option("--phi-max", crv.phi_max, "last grid phase, rad");
    curves->add_option("--points", crv.points, "grid points");
    curves->add_option("--out", crv.out, "CSV path (default stdout)");

    SweepArgs swp;
    auto* sweep = app.add_subcommand("sweep", "refine builtin families over a range of n");
    sweep->add_option("--families", swp.families, "comma separated builtin families")->delimiter(',');
    sweep->add_option("--n-min", swp.n_min, "smallest n");
    sweep->add_option("--n-max", swp.n_max, "largest n");
    sweep->add_option("--cycles", swp.cycles, "cycles per evaluation")->check(CLI::PositiveNumber);
    sweep->add_option("--seeds", swp.seeds, "seeds per evaluation set")->check(CLI::PositiveNumber);
    sweep->add_option("--seed", swp.seed, "master seed");
    sweep->add_option("--out", swp.out, "CSV path (default stdout)");

    NoiseArgs nse;
    auto* noise = app.add_subcommand("noise-check", "Allan deviation of a generated flicker trace");
    noise->add_option("--cycles", nse.cycles, "trace length")->check(CLI::PositiveNumber);
    noise->add_option("--seed", nse.seed, "master seed");
    noise->add_option("--taus", nse.taus, "averaging times in cycles")->delimiter(',');
    noise->add_option("--out", nse.out, "report JSON path (default stdout)");
    noise->add_option("--trace-out", nse.trace_out, "write the trace, one Hz value per line");

    SearchArgs srch;
    auto* search = app.add_subcommand("search", "random-restart search over all protocol parameters");
    search->add_option("--config", srch.config_file, "SearchConfig JSON; flags override it");
    search->add_option("--checkpoint", srch.checkpoint, "append-only JSON-lines checkpoint, resumed when present");
    search->add_option("--out", srch.out, "result JSON path (default stdout)");
    search->add_option("--protocol-out", srch.protocol_out, "winner protocol JSON path");
    add_override(*search, srch, "--n", &SearchConfig::n, "qubits, 2..8");
    add_override(*search, srch, "--restarts", &SearchConfig::restarts, "random candidates");
    add_override(*search, srch, "--seed", &SearchConfig::master_seed, "master seed");
    add_override(*search, srch, "--cycles", &SearchConfig::cycles, "cycles per full evaluation");
    add_override(*search, srch, "--screen-cycles", &SearchConfig::screen_cycles, "cycles per screening evaluation");
    add_override(*search, srch, "--seeds", &SearchConfig::evaluation_seeds, "optimization seeds");
    add_override(*search, srch, "--heldout-seeds", &SearchConfig::heldout_seeds, "held-out seeds");
    add_override(*search, srch, "--threshold", &SearchConfig::threshold,
                 "screening threshold, Hz^2 (0: 1.05 x refined Ramsey)");
    add_override(*search, srch, "--min-refine", &SearchConfig::min_refine, "refine at least this many candidates");
    add_override(*search, srch, "--x-tolerance", &SearchConfig::x_tolerance, "simplex size tolerance");
    add_override(*search, srch, "--max-iterations", &SearchConfig::max_iterations, "simplex iterations per run");
    add_override(*search, srch, "--max-evaluations", &SearchConfig::max_evaluations, "objective calls per run");
    add_override(*search, srch, "--polish-rounds", &SearchConfig::polish_rounds, "simplex restarts after the first");
    add_override(*search, srch, "--phase-margin", &SearchConfig::phase_margin, "phase guard fraction");
    add_override(*search, srch, "--block-size", &SearchConfig::block_size, "cycles per averaging block");
    add_override(*search, srch, "--workers", &SearchConfig::workers, "threads (0: all cores)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
        if (simulate->parsed()) return cmd_simulate(sim, out);
        if (curves->parsed()) return cmd_curves(crv, out);
        if (sweep->parsed()) return cmd_sweep(swp, out, err);
        if (noise->parsed()) return cmd_noise_check(nse, out);
        if (search->parsed()) return cmd_search(srch, out);
        return kValidation;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kSuccess : kValidation;
    } catch (const ResumeConflict& e) {
        err << "clockopt: resume conflict at byte " << e.offset() << ": " << e.what() << '\n';
        return kResumeConflict;
    } catch (const ValidationError& e) {
        err << "clockopt: " << e.what() << '\n';
        return kValidation;
    } catch (const IoError& e) {
        err << "clockopt: " << e.what() << '\n';
        return kIo;
    } catch (const nlohmann::json::exception& e) {
        err << "clockopt: " << e.what() << '\n';
        return kValidation;
    } catch (const std::exception& e) {
        err << "clockopt: " << e.what() << '\n';
        return kFailure;
    }
}

}  // namespace clockopt::cli
