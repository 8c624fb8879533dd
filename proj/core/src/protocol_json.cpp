#include "clockopt/protocol_json.hpp"

#include <fstream>
#include <sstream>

#include "clockopt/error.hpp"

namespace clockopt {

namespace {

using nlohmann::json;

json complex_to_json(const Complex& c) { return json::array({c.real(), c.imag()}); }

Complex complex_from_json(const json& j, const std::string& where)
{
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw ValidationError(where + ": complex numbers are [re, im] pairs");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

const json& require_field(const json& j, const char* key)
{
    if (!j.contains(key)) throw ValidationError(std::string("protocol JSON is missing field \"") + key + "\"");
    return j.at(key);
}

}  // namespace

json protocol_to_json(const ClockProtocol& protocol)
{
    json psi = json::array();
    for (const auto& a : protocol.initial_state().amplitudes()) psi.push_back(complex_to_json(a));

    json basis = json::array();
    const auto& u = protocol.basis().unitary();
    for (Eigen::Index row = 0; row < u.rows(); ++row) {
        json r = json::array();
        for (Eigen::Index col = 0; col < u.cols(); ++col) r.push_back(complex_to_json(u(row, col)));
        basis.push_back(std::move(r));
    }

    json corrections = json::array();
    for (const double c : protocol.corrections()) corrections.push_back(c);

    return json{{"n", protocol.qubits()},
                {"T_seconds", protocol.probe_period()},
                {"psi1", std::move(psi)},
                {"basis", std::move(basis)},
                {"corrections_hz", std::move(corrections)}};
}

ClockProtocol protocol_from_json(const json& j, const ProtocolReadOptions& options)
{
    if (!j.is_object()) throw ValidationError("protocol JSON must be an object");
    const json& n_field = require_field(j, "n");
    if (!n_field.is_number_integer()) throw ValidationError("protocol field \"n\" must be an integer");
    const int n = n_field.get<int>();
    if (n < 1 || n > kMaxQubits) throw ValidationError("protocol field \"n\" out of range");
    const auto dim = static_cast<std::size_t>(n) + 1;

    const json& t_field = require_field(j, "T_seconds");
    if (!t_field.is_number()) throw ValidationError("protocol field \"T_seconds\" must be a number");

    const json& psi_field = require_field(j, "psi1");
    if (!psi_field.is_array() || psi_field.size() != dim) {
        throw ValidationError("protocol field \"psi1\" must hold n+1 = " + std::to_string(dim) + " amplitudes");
    }
    std::vector<Complex> amp;
    for (std::size_t m = 0; m < dim; ++m) amp.push_back(complex_from_json(psi_field[m], "psi1"));

    const json& basis_field = require_field(j, "basis");
    if (!basis_field.is_array() || basis_field.size() != dim) {
        throw ValidationError("protocol field \"basis\" must hold n+1 rows");
    }
    ComplexMatrix u(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t row = 0; row < dim; ++row) {
        const json& r = basis_field[row];
        if (!r.is_array() || r.size() != dim) {
            throw ValidationError("protocol basis row " + std::to_string(row) + " must hold n+1 entries");
        }
        for (std::size_t col = 0; col < dim; ++col) {
            u(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = complex_from_json(r[col], "basis");
        }
    }

    const json& corr_field = require_field(j, "corrections_hz");
    if (!corr_field.is_array()) throw ValidationError("protocol field \"corrections_hz\" must be an array");
    std::vector<double> corrections;
    for (const auto& c : corr_field) {
        if (!c.is_number()) throw ValidationError("protocol corrections must be numbers");
        corrections.push_back(c.get<double>());
    }

    SymmetricState state(std::move(amp));
    if (options.orthonormalize) {
        state = normalize(state);
        u = nearest_unitary(u);
    }
    return ClockProtocol(std::move(state), MeasurementBasis(std::move(u)), std::move(corrections),
                         t_field.get<double>());
}

json parse_json_text(const std::string& text, const std::string& source_name)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        // e.byte is 1-based and points just past the offending character.
        std::size_t line = 1, column = 1;
        const std::size_t stop = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
        for (std::size_t i = 0; i < stop; ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        throw ValidationError(source_name + ":" + std::to_string(line) + ":" + std::to_string(column) +
                              ": JSON parse error: " + e.what());
    }
}

ClockProtocol read_protocol_file(const std::filesystem::path& path, const ProtocolReadOptions& options)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open protocol file " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return protocol_from_json(parse_json_text(buffer.str(), path.string()), options);
}

void write_protocol_file(const ClockProtocol& protocol, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << protocol_to_json(protocol).dump(2) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

nlohmann::json report_to_json(const InstabilityReport& report)
{
    return nlohmann::json{{"variance_at_1s", report.variance_at_1s},
                          {"block_size", report.block_size},
                          {"blocks_used", report.blocks_used},
                          {"burn_in_blocks", report.burn_in_blocks},
                          {"cycles_run", report.cycles_run},
                          {"fringe_hops", report.fringe_hops},
                          {"phase_variance", report.phase_variance},
                          {"mean_frequency", report.mean_frequency},
                          {"max_abs_phase", report.max_abs_phase}};
}

}  // namespace clockopt
