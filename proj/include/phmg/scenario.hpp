#pragma once

#include "phmg/sim.hpp"

#include <string>
#include <vector>

namespace phmg {

// Names accepted by load_scenario in place of a file path.
std::vector<std::string> preset_names();

// Preset document as JSON text.
std::string preset_text(const std::string& name);

// Parses, converts p.u. references to volts, resolves saturation fractions and certifies PI gains.
// Throws ValidationError with a field path, or CertificationError for PI gains without a certificate.
Scenario parse_scenario(const std::string& text);

// A preset name or a path to a JSON file.
Scenario load_scenario(const std::string& name_or_path);

// Canonical JSON; parse_scenario(dump_scenario(s)) == s for scenarios without an explicit x0.
std::string dump_scenario(const Scenario& s);

}  // namespace phmg
