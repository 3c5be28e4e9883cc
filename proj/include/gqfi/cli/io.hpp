#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gqfi/gaussian_state.hpp"
#include "gqfi/probes.hpp"

namespace gqfi::cli {

using Json = nlohmann::json;

/// Bad file, bad JSON or a malformed descriptor. Maps to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses `arg` as inline JSON when it starts with '{', otherwise as a path.
Json load_json(const std::string& arg);

ProbeSpec probe_from_json(const Json& j);
Json probe_to_json(const ProbeSpec& spec);

ChannelSpec channel_from_json(const Json& j);
Json channel_to_json(const ChannelSpec& spec);

/// {"modes", "representation": "complex"|"real", "displacement": [[re, im]...],
///  "covariance": {"rows": [[[re, im]...]...]}}. Real entries may also be bare numbers.
GaussianState state_from_json(const Json& j);
Json state_to_json(const GaussianState& state, bool real = false);

/// "a:b:n" -> n evenly spaced points including both ends.
std::vector<double> parse_range(const std::string& text);

/// 17 significant digits, '.' separator.
std::string format_double(double v);

/// Quotes a CSV field when it holds a comma, quote or newline.
std::string csv_field(const std::string& s);

}  // namespace gqfi::cli
