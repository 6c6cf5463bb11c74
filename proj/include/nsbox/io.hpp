#pragma once

#include "nsbox/distribution.hpp"

#include "json.hpp"

#include <optional>
#include <string>

namespace nsbox {

using Json = nlohmann::ordered_json;

/// A system file's payload. Exact tables parse straight to a
/// ConditionalDistribution; tables containing float entries only carry a
/// FloatTable and need rationalize before use.
struct LoadedSystem {
    std::optional<ConditionalDistribution> exact;
    FloatTable floats;

    bool is_exact() const { return exact.has_value(); }
};

/// Parses the system schema:
///   { "schema_version": 1, "x_size": ..., "y_size": ..., "a_size": ...,
///     "b_size": ..., "probs": [x][y][a][b] }
/// with entries "num/den" strings, integers, or floats.
LoadedSystem parse_system(const Json& j);

LoadedSystem load_system_file(const std::string& path);

/// Serializes with entries as exact "num/den" strings, keys in stable
/// order.
Json system_to_json(const ConditionalDistribution& p);

void write_json_file(const std::string& path, const Json& j);

} // namespace nsbox
