#include "bvam/config.hpp"

#include "bvam/errors.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

namespace bvam {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double to_double(std::string_view v, std::string_view key, int line) {
  double out = 0.0;
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || end != v.data() + v.size()) {
    throw ConfigError("'" + std::string(key) + "' expects a number, got '" + std::string(v) + "'", line);
  }
  return out;
}

int to_int(std::string_view v, std::string_view key, int line) {
  int out = 0;
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || end != v.data() + v.size()) {
    throw ConfigError("'" + std::string(key) + "' expects an integer, got '" + std::string(v) + "'", line);
  }
  return out;
}

bool to_bool(std::string_view v, std::string_view key, int line) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("'" + std::string(key) + "' expects true or false, got '" + std::string(v) + "'", line);
}

using Setter = std::function<void(RunConfig&, std::string_view, int)>;

Setter real(double RunConfig::*m) {
  return [m](RunConfig& c, std::string_view v, int line) { c.*m = to_double(v, "", line); };
}
Setter param(double ModelParameters::*m) {
  return [m](RunConfig& c, std::string_view v, int line) { c.parameters.*m = to_double(v, "", line); };
}
Setter integer(int RunConfig::*m) {
  return [m](RunConfig& c, std::string_view v, int line) { c.*m = to_int(v, "", line); };
}

const std::map<std::string, std::map<std::string, Setter>>& keys() {
  static const std::map<std::string, std::map<std::string, Setter>> table = {
      {"reaction",
       {{"eta", param(&ModelParameters::eta)},
        {"a", param(&ModelParameters::a)},
        {"b", param(&ModelParameters::b)},
        {"C", param(&ModelParameters::C)},
        {"H", param(&ModelParameters::H)}}},
      {"diffusion",
       {{"d1", param(&ModelParameters::d1)},
        {"d2", param(&ModelParameters::d2)},
        {"d11", param(&ModelParameters::d11)},
        {"d22", param(&ModelParameters::d22)},
        {"d12", param(&ModelParameters::d12)}}},
      {"solver",
       {{"Lx", param(&ModelParameters::Lx)},
        {"N", integer(&RunConfig::N)},
        {"dt", real(&RunConfig::dt)},
        {"dealias", [](RunConfig& c, std::string_view v, int line) { c.dealias = to_bool(v, "dealias", line); }},
        {"newton_tol", real(&RunConfig::newton_tol)},
        {"newton_max_iterations", integer(&RunConfig::newton_max_iterations)},
        {"orbit_tol", real(&RunConfig::orbit_tol)},
        {"orbit_max_iterations", integer(&RunConfig::orbit_max_iterations)},
        {"period_guess", real(&RunConfig::period_guess)},
        {"monodromy_h", real(&RunConfig::monodromy_h)},
        {"monodromy_stride", integer(&RunConfig::monodromy_stride)},
        {"C_start", real(&RunConfig::C_start)},
        {"C_end", real(&RunConfig::C_end)},
        {"C_steps", integer(&RunConfig::C_steps)},
        {"delta_C", real(&RunConfig::delta_C)},
        {"orbit_max_steps", integer(&RunConfig::orbit_max_steps)},
        {"C_limit", real(&RunConfig::C_limit)},
        {"t_end", real(&RunConfig::t_end)},
        {"tau", real(&RunConfig::tau)},
        {"record_every", integer(&RunConfig::record_every)},
        {"seed_transient", real(&RunConfig::seed_transient)},
        {"seed_max_transient", real(&RunConfig::seed_max_transient)},
        {"guess_amplitude1", real(&RunConfig::guess_amplitude1)},
        {"guess_amplitude2", real(&RunConfig::guess_amplitude2)},
        {"guess_mode1", integer(&RunConfig::guess_mode1)},
        {"guess_mode2", integer(&RunConfig::guess_mode2)},
        {"broadband_threshold", real(&RunConfig::broadband_threshold)},
        {"bound", real(&RunConfig::bound)}}},
      {"output", {{"out_dir", [](RunConfig& c, std::string_view v, int) { c.out_dir = std::string(v); }}}},
  };
  return table;
}

struct Entry {
  const Setter* setter;
  std::string key;
  std::string value;
  int line;
};

}  // namespace

void RunConfig::validate() const {
  parameters.validate();
  if (N < 4 || N % 2 != 0) throw ConfigError("N must be an even integer >= 4");
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(newton_tol > 0.0) || !(orbit_tol > 0.0)) throw ConfigError("tolerances must be positive");
  if (newton_max_iterations < 1 || orbit_max_iterations < 1) throw ConfigError("iteration limits must be positive");
  if (!(period_guess > 0.0)) throw ConfigError("period_guess must be positive");
  if (!(monodromy_h > 0.0)) throw ConfigError("monodromy_h must be positive");
  if (monodromy_stride < 1) throw ConfigError("monodromy_stride must be at least 1");
  if (C_steps < 1) throw ConfigError("C_steps must be at least 1");
  if (delta_C == 0.0) throw ConfigError("delta_C must be nonzero");
  if (orbit_max_steps < 0) throw ConfigError("orbit_max_steps must be non-negative");
  if (!(t_end > 0.0)) throw ConfigError("t_end must be positive");
  if (!(tau >= 0.0)) throw ConfigError("tau must be non-negative");
  if (record_every < 1) throw ConfigError("record_every must be at least 1");
  if (!(seed_transient >= 0.0) || !(seed_max_transient > seed_transient)) {
    throw ConfigError("seed transients must satisfy 0 <= seed_transient < seed_max_transient");
  }
  if (guess_mode1 < 0 || guess_mode2 < 0) throw ConfigError("guess modes must be non-negative");
  if (!(broadband_threshold > 0.0 && broadband_threshold <= 1.0)) throw ConfigError("broadband_threshold in (0, 1]");
  if (!(bound > 0.0)) throw ConfigError("bound must be positive");
  if (out_dir.empty()) throw ConfigError("out_dir must not be empty");
}

RunConfig parse_config(std::string_view text, std::optional<Regime> regime_override) {
  std::optional<Regime> regime;
  std::string section;
  std::vector<Entry> entries;
  std::map<std::string, int> seen;

  int line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("malformed section header", line_no);
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (!keys().contains(section)) throw ConfigError("unknown section [" + section + "]", line_no);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected key = value", line_no);
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw ConfigError("missing key", line_no);
    if (value.empty()) throw ConfigError("missing value for '" + key + "'", line_no);

    const std::string qualified = section + "." + key;
    if (const auto [it, fresh] = seen.emplace(qualified, line_no); !fresh) {
      throw ConfigError("duplicate key '" + key + "' (first set on line " + std::to_string(it->second) + ")", line_no);
    }
    if (section.empty()) {
      if (key != "regime") throw ConfigError("unknown key '" + key + "' outside a section", line_no);
      try {
        regime = parse_regime(value);
      } catch (const ConfigError& e) {
        throw ConfigError(e.what(), line_no);
      }
      continue;
    }
    const auto& table = keys().at(section);
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError("unknown key '" + key + "' in [" + section + "]", line_no);
    entries.push_back({&it->second, key, value, line_no});
  }

  RunConfig cfg;
  cfg.regime = regime_override.value_or(regime.value_or(Regime::linear));
  cfg.parameters = make_regime(cfg.regime, cfg.parameters.C).parameters;
  cfg.out_dir = default_out_dir();
  for (const auto& e : entries) {
    try {
      (*e.setter)(cfg, e.value, e.line);
    } catch (const ConfigError& err) {
      // Setters do not know their key name; rebuild the message.
      throw ConfigError("'" + e.key + "' has an invalid value '" + e.value + "'", e.line);
    }
  }
  try {
    cfg.validate();
  } catch (const ConfigError& err) {
    // Point at the line that set the offending key when there is one.
    const std::string msg = err.what();
    for (const auto& e : entries) {
      if (msg.rfind(e.key + " ", 0) == 0) throw ConfigError(msg, e.line);
    }
    throw;
  }
  return cfg;
}

RunConfig load_config(const std::string& path, std::optional<Regime> regime_override) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_config(buf.str(), regime_override);
}

std::string default_out_dir() {
  const char* env = std::getenv("BVAM_OUT_DIR");
  return env != nullptr && *env != '\0' ? std::string(env) : std::string("out");
}

nlohmann::json to_json(const RunConfig& c) {
  const auto& p = c.parameters;
  return {
      {"regime", std::string(to_string(c.regime))},
      {"reaction", {{"eta", p.eta}, {"a", p.a}, {"b", p.b}, {"C", p.C}, {"H", p.H}}},
      {"diffusion", {{"d1", p.d1}, {"d2", p.d2}, {"d11", p.d11}, {"d22", p.d22}, {"d12", p.d12}}},
      {"solver",
       {{"Lx", p.Lx},
        {"N", c.N},
        {"dt", c.dt},
        {"dealias", c.dealias},
        {"newton_tol", c.newton_tol},
        {"newton_max_iterations", c.newton_max_iterations},
        {"orbit_tol", c.orbit_tol},
        {"orbit_max_iterations", c.orbit_max_iterations},
        {"period_guess", c.period_guess},
        {"monodromy_h", c.monodromy_h},
        {"monodromy_stride", c.monodromy_stride},
        {"C_start", c.C_start},
        {"C_end", c.C_end},
        {"C_steps", c.C_steps},
        {"delta_C", c.delta_C},
        {"orbit_max_steps", c.orbit_max_steps},
        {"C_limit", c.C_limit},
        {"t_end", c.t_end},
        {"tau", c.tau},
        {"record_every", c.record_every},
        {"seed_transient", c.seed_transient},
        {"seed_max_transient", c.seed_max_transient},
        {"guess_amplitude1", c.guess_amplitude1},
        {"guess_amplitude2", c.guess_amplitude2},
        {"guess_mode1", c.guess_mode1},
        {"guess_mode2", c.guess_mode2},
        {"broadband_threshold", c.broadband_threshold},
        {"bound", c.bound}}},
      {"output", {{"out_dir", c.out_dir}}},
  };
}

}  // namespace bvam
