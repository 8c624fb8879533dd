#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "clockopt/protocols.hpp"
#include "clockopt/simulator.hpp"

namespace clockopt {

/// {"n", "T_seconds", "psi1": [[re,im]...], "basis": [[[re,im]...]...], "corrections_hz": [...]}
/// where basis row j is the bra <a_j|, i.e. row j of the measurement unitary.
nlohmann::json protocol_to_json(const ClockProtocol& protocol);

struct ProtocolReadOptions {
    // Normalize psi1 and replace the basis by its nearest unitary before validation;
    // for protocols transcribed with a few printed digits.
    bool orthonormalize = false;
};

ClockProtocol protocol_from_json(const nlohmann::json& j, const ProtocolReadOptions& options = {});

/// Parse errors come back as ValidationError carrying line and column.
ClockProtocol read_protocol_file(const std::filesystem::path& path, const ProtocolReadOptions& options = {});
void write_protocol_file(const ClockProtocol& protocol, const std::filesystem::path& path);

nlohmann::json report_to_json(const InstabilityReport& report);

/// nlohmann parse with errors rethrown as ValidationError("<source>:<line>:<col>: ...").
nlohmann::json parse_json_text(const std::string& text, const std::string& source_name);

}  // namespace clockopt
