#include "gqfi/cli/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gqfi/errors.hpp"

namespace gqfi::cli {

Json load_json(const std::string& arg) {
  std::size_t first = arg.find_first_not_of(" \t\r\n");
  std::string text;
  if (first != std::string::npos && arg[first] == '{') {
    text = arg;
  } else {
    std::ifstream in(arg);
    if (!in) throw InputError("cannot open " + arg);
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw InputError(std::string("malformed JSON: ") + e.what());
  }
}

namespace {

double number(const Json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if (!v.is_number()) throw InputError(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

Complex complex_entry(const Json& v) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
    return {v[0].get<double>(), v[1].get<double>()};
  }
  throw InputError("expected a number or an [re, im] pair");
}

Json pair(Complex z) { return Json::array({z.real(), z.imag()}); }

ModeProbe mode_from_json(const Json& j) {
  if (!j.is_object()) throw InputError("probe mode must be an object");
  ModeProbe m;
  m.n_th = number(j, "n_th", 0.0);
  if (j.contains("lambda")) m.n_th = 0.5 * (number(j, "lambda", 1.0) - 1.0);
  m.r = number(j, "r", 0.0);
  m.theta = number(j, "theta", 0.0);
  m.d_abs = number(j, "d_abs", 0.0);
  m.d_phase = number(j, "d_phase", 0.0);
  return m;
}

}  // namespace

ProbeSpec probe_from_json(const Json& j) {
  if (!j.is_object()) throw InputError("probe must be a JSON object");
  ProbeSpec spec;
  if (j.contains("modes")) {
    const Json& modes = j.at("modes");
    if (!modes.is_array() || modes.empty()) throw InputError("probe 'modes' must be a non-empty array");
    spec.modes.clear();
    for (const Json& m : modes) spec.modes.push_back(mode_from_json(m));
  } else {
    spec.modes = {mode_from_json(j)};
  }
  spec.two_mode_squeezing = number(j, "two_mode_squeezing", 0.0);
  try {
    spec.validate();
  } catch (const Error& e) {
    throw InputError(std::string("invalid probe: ") + e.what());
  }
  return spec;
}

Json probe_to_json(const ProbeSpec& spec) {
  Json modes = Json::array();
  for (const ModeProbe& m : spec.modes) {
    modes.push_back({{"n_th", m.n_th}, {"r", m.r}, {"theta", m.theta}, {"d_abs", m.d_abs},
                     {"d_phase", m.d_phase}});
  }
  return {{"modes", modes}, {"two_mode_squeezing", spec.two_mode_squeezing}};
}

ChannelSpec channel_from_json(const Json& j) {
  if (!j.is_object()) throw InputError("channel must be a JSON object");
  ChannelSpec c;
  const std::string kind = j.value("kind", std::string("squeeze"));
  if (kind == "squeeze") {
    c.kind = ChannelKind::squeeze;
  } else if (kind == "rotate") {
    c.kind = ChannelKind::rotate;
  } else if (kind == "displace") {
    c.kind = ChannelKind::displace;
  } else if (kind == "two_mode_squeeze") {
    c.kind = ChannelKind::two_mode_squeeze;
  } else {
    throw InputError("unknown channel kind '" + kind + "'");
  }
  c.mode = static_cast<int>(number(j, "mode", 0.0));
  c.mode_b = static_cast<int>(number(j, "mode_b", 1.0));
  if (j.contains("direction")) c.direction = complex_entry(j.at("direction"));
  return c;
}

Json channel_to_json(const ChannelSpec& c) {
  return {{"kind", std::string(to_string(c.kind))},
          {"mode", c.mode},
          {"mode_b", c.mode_b},
          {"direction", pair(c.direction)}};
}

GaussianState state_from_json(const Json& j) {
  if (!j.is_object()) throw InputError("state must be a JSON object");
  try {
    const int n = j.at("modes").get<int>();
    if (n < 1) throw InputError("state needs at least one mode");
    const std::string rep = j.value("representation", std::string("complex"));
    if (rep != "complex" && rep != "real") throw InputError("unknown representation '" + rep + "'");
    const Json& disp = j.at("displacement");
    const Json& rows = j.at("covariance").at("rows");
    if (!disp.is_array() || static_cast<int>(disp.size()) != 2 * n) {
      throw InputError("displacement must have 2N entries");
    }
    if (!rows.is_array() || static_cast<int>(rows.size()) != 2 * n) {
      throw InputError("covariance must have 2N rows");
    }
    CVector d(2 * n);
    CMatrix sigma(2 * n, 2 * n);
    for (int i = 0; i < 2 * n; ++i) {
      d(i) = complex_entry(disp[static_cast<std::size_t>(i)]);
      const Json& row = rows[static_cast<std::size_t>(i)];
      if (!row.is_array() || static_cast<int>(row.size()) != 2 * n) {
        throw InputError("covariance rows must have 2N entries");
      }
      for (int k = 0; k < 2 * n; ++k) sigma(i, k) = complex_entry(row[static_cast<std::size_t>(k)]);
    }
    GaussianState state;
    if (rep == "real") {
      RealGaussianState real{d.real(), sigma.real()};
      if (d.imag().norm() != 0.0 || sigma.imag().norm() != 0.0) {
        throw InputError("real representation needs real entries");
      }
      state = to_complex(real);
    } else {
      state = GaussianState(d, sigma);
    }
    validate_state(state);
    return state;
  } catch (const Json::exception& e) {
    throw InputError(std::string("malformed state: ") + e.what());
  } catch (const Error& e) {
    throw InputError(std::string("invalid state: ") + e.what());
  }
}

Json state_to_json(const GaussianState& state, bool real) {
  const int n = state.modes();
  Json disp = Json::array();
  Json rows = Json::array();
  if (real) {
    const RealGaussianState r = to_real(state);
    for (int i = 0; i < 2 * n; ++i) {
      disp.push_back(pair(r.displacement(i)));
      Json row = Json::array();
      for (int k = 0; k < 2 * n; ++k) row.push_back(pair(r.covariance(i, k)));
      rows.push_back(row);
    }
  } else {
    for (int i = 0; i < 2 * n; ++i) {
      disp.push_back(pair(state.displacement()(i)));
      Json row = Json::array();
      for (int k = 0; k < 2 * n; ++k) row.push_back(pair(state.covariance()(i, k)));
      rows.push_back(row);
    }
  }
  return {{"modes", n},
          {"representation", real ? "real" : "complex"},
          {"displacement", disp},
          {"covariance", {{"rows", rows}}}};
}

std::vector<double> parse_range(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
  if (parts.size() != 3) throw InputError("range must look like a:b:n");
  double a = 0.0, b = 0.0;
  long n = 0;
  try {
    std::size_t used = 0;
    a = std::stod(parts[0], &used);
    if (used != parts[0].size()) throw InputError("bad range start");
    b = std::stod(parts[1], &used);
    if (used != parts[1].size()) throw InputError("bad range end");
    n = std::stol(parts[2], &used);
    if (used != parts[2].size()) throw InputError("bad range count");
  } catch (const std::logic_error&) {
    throw InputError("range must look like a:b:n");
  }
  if (n < 1) throw InputError("range count must be positive");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n));
  if (n == 1) {
    out.push_back(a);
    return out;
  }
  for (long i = 0; i < n; ++i) {
    out.push_back(i == n - 1 ? b : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace gqfi::cli
