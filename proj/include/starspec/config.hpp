#ifndef STARSPEC_CONFIG_HPP
#define STARSPEC_CONFIG_HPP

#include <cctype>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "starspec/errors.hpp"

namespace starspec {

/// Value of one configuration key: string, number, boolean, or a numeric
/// array.  The file format is a flat TOML-compatible key-value table.
using ConfigValue = std::variant<std::string, double, bool, std::vector<double>>;
using ConfigTable = std::map<std::string, ConfigValue>;

namespace detail {

inline std::string cfg_trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

inline ConfigValue parse_value(const std::string& raw, int line_no) {
  const std::string v = cfg_trim(raw);
  if (v.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty value");
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"')
      throw ConfigError("line " + std::to_string(line_no) + ": unterminated string");
    return v.substr(1, v.size() - 2);
  }
  if (v == "true") return true;
  if (v == "false") return false;
  if (v.front() == '[') {
    if (v.back() != ']')
      throw ConfigError("line " + std::to_string(line_no) + ": unterminated array");
    std::vector<double> arr;
    std::string inner = v.substr(1, v.size() - 2);
    std::istringstream is(inner);
    std::string item;
    while (std::getline(is, item, ',')) {
      item = cfg_trim(item);
      if (item.empty()) continue;
      std::size_t used = 0;
      double d = std::stod(item, &used);
      if (used != item.size())
        throw ConfigError("line " + std::to_string(line_no) + ": bad array element '" + item + "'");
      arr.push_back(d);
    }
    return arr;
  }
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (...) {
  }
  throw ConfigError("line " + std::to_string(line_no) + ": cannot parse value '" + v + "'");
}

}  // namespace detail

/// Parses "[table]" sections of "key = value" lines; '#' starts a comment.
inline std::map<std::string, ConfigTable> parse_config(std::istream& in) {
  std::map<std::string, ConfigTable> out;
  std::string section = "job";
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    // strip comments outside quotes
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.erase(i);
        break;
      }
    }
    std::string t = detail::cfg_trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": bad table header");
      section = detail::cfg_trim(t.substr(1, t.size() - 2));
      if (section.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty table name");
      out[section];
      continue;
    }
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    std::string key = detail::cfg_trim(t.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    out[section][key] = detail::parse_value(t.substr(eq + 1), line_no);
  }
  return out;
}

inline std::map<std::string, ConfigTable> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

/// One spectrum/compare/normalform job, fully resolved with defaults.
struct JobConfig {
  std::string hamiltonian;  // builtin name, or "symbol" / "potential"
  std::map<std::string, double> params;
  std::string symbol_text;             // PolySymbol lines when hamiltonian = "symbol"
  std::vector<double> potential;       // V coefficients when hamiltonian = "potential"
  double mass = 1.0;
  std::vector<double> hbar = {1.0};
  int n_lo = 0, n_hi = 9;
  int order = 2;
  double action_ceiling = std::numeric_limits<double>::infinity();
  double energy_ceiling = std::numeric_limits<double>::infinity();
  std::string oracle = "auto";  // grid | fock | auto | none
  double oracle_tol = 1e-8;
  int oracle_n = 0;  // starting resolution; 0 picks the method default
  double slope_action = 1.0;  // action at which compare fits residual slopes
  int nf_order = 3;           // normal-form order
  std::string format = "csv";  // csv | json | both
  std::string out_dir;
  std::uint64_t seed = 12345;
};

namespace detail {

inline void parse_levels(const std::string& s, int& lo, int& hi) {
  auto dots = s.find("..");
  try {
    if (dots == std::string::npos) {
      lo = hi = std::stoi(s);
    } else {
      lo = std::stoi(s.substr(0, dots));
      hi = std::stoi(s.substr(dots + 2));
    }
  } catch (...) {
    throw ConfigError("bad level range '" + s + "' (expected e.g. \"0..9\")");
  }
  if (lo < 0 || hi < lo) throw ConfigError("bad level range '" + s + "'");
}

}  // namespace detail

/// Builds a JobConfig from one parsed table, validating the invariants:
/// exactly one Hamiltonian form, a nonempty positive hbar list.
inline JobConfig job_from_table(const ConfigTable& t) {
  JobConfig job;
  auto gets = [&](const std::string& k) -> const std::string& {
    return std::get<std::string>(t.at(k));
  };

  int forms = 0;
  if (t.count("hamiltonian")) ++forms;
  if (t.count("symbol") || t.count("symbol_file")) ++forms;
  if (t.count("potential")) ++forms;
  if (forms != 1)
    throw ConfigError("exactly one of 'hamiltonian', 'symbol'/'symbol_file', 'potential' required");

  if (t.count("hamiltonian")) {
    job.hamiltonian = gets("hamiltonian");
  } else if (t.count("potential")) {
    job.hamiltonian = "potential";
    job.potential = std::get<std::vector<double>>(t.at("potential"));
  } else {
    job.hamiltonian = "symbol";
    if (t.count("symbol")) {
      std::string inline_sym = gets("symbol");
      for (auto& c : inline_sym)
        if (c == ';') c = '\n';
      job.symbol_text = inline_sym;
    } else {
      std::ifstream f(gets("symbol_file"));
      if (!f) throw ConfigError("cannot open symbol file '" + gets("symbol_file") + "'");
      std::ostringstream ss;
      ss << f.rdbuf();
      job.symbol_text = ss.str();
    }
  }

  for (const std::string key : {"epsilon", "mass", "omega", "x0", "D", "alpha"})
    if (t.count(key)) job.params[key] = std::get<double>(t.at(key));
  if (t.count("mass")) job.mass = std::get<double>(t.at("mass"));

  if (t.count("hbar")) {
    if (std::holds_alternative<double>(t.at("hbar")))
      job.hbar = {std::get<double>(t.at("hbar"))};
    else
      job.hbar = std::get<std::vector<double>>(t.at("hbar"));
  }
  if (job.hbar.empty()) throw ConfigError("hbar list must be non-empty");
  for (double hb : job.hbar)
    if (!(hb > 0.0)) throw ConfigError("hbar values must be positive");

  if (t.count("levels")) detail::parse_levels(gets("levels"), job.n_lo, job.n_hi);
  if (t.count("order")) {
    job.order = static_cast<int>(std::get<double>(t.at("order")));
    if (job.order != 0 && job.order != 2) throw ConfigError("order must be 0 or 2");
  }
  if (t.count("action_ceiling")) job.action_ceiling = std::get<double>(t.at("action_ceiling"));
  if (t.count("energy_ceiling")) job.energy_ceiling = std::get<double>(t.at("energy_ceiling"));
  if (t.count("oracle")) job.oracle = gets("oracle");
  if (t.count("oracle_tol")) job.oracle_tol = std::get<double>(t.at("oracle_tol"));
  if (t.count("oracle_n")) job.oracle_n = static_cast<int>(std::get<double>(t.at("oracle_n")));
  if (t.count("slope_action")) job.slope_action = std::get<double>(t.at("slope_action"));
  if (t.count("nf_order")) job.nf_order = static_cast<int>(std::get<double>(t.at("nf_order")));
  if (t.count("format")) job.format = gets("format");
  if (t.count("out")) job.out_dir = gets("out");
  if (t.count("seed")) job.seed = static_cast<std::uint64_t>(std::get<double>(t.at("seed")));
  return job;
}

}  // namespace starspec

#endif  // STARSPEC_CONFIG_HPP
