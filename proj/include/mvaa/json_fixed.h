#pragma once

#include "json.hpp"

#include <string>

namespace mvaa {

using Json = nlohmann::ordered_json;

// Serialises with every floating-point number printed with exactly six
// fractional digits (round-half-even on exact ties), so artifacts are
// byte-stable across runs and platforms. Non-finite numbers are rejected.
std::string dump_fixed(const Json& value, int indent = 2);

}  // namespace mvaa
