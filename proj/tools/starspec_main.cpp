// starspec: Bohr-Sommerfeld spectra of one-dimensional phase-space
// Hamiltonians with the hbar^2 correction, validated against matrix
// quantization oracles.
//
// Verbs: spectrum, compare, identities, normalform.
// Exit codes: 0 ok, 1 error, 2 partial (skipped levels), 3 oracle divergence.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "starspec/catalog.hpp"
#include "starspec/config.hpp"
#include "starspec/identities.hpp"
#include "starspec/io.hpp"
#include "starspec/normalform.hpp"
#include "starspec/oracle.hpp"
#include "starspec/spectrum.hpp"

namespace fs = std::filesystem;
using namespace starspec;

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::string hbar_list;
  std::string levels;
  int order = -1;
  std::optional<std::uint64_t> seed;
  std::string format;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "job config file (flat TOML table)");
  cmd->add_option("--out", f.out_dir, "output directory (default $STARSPEC_OUT or .)");
  cmd->add_option("--hbar", f.hbar_list, "comma-separated hbar values (overrides config)");
  cmd->add_option("--levels", f.levels, "level range n_lo..n_hi (overrides config)");
  cmd->add_option("--order", f.order, "correction order, 0 or 2")->check(CLI::IsMember({0, 2}));
  cmd->add_option("--seed", f.seed, "random seed (overrides config)");
  cmd->add_option("--format", f.format, "csv | json | both")
      ->check(CLI::IsMember({"csv", "json", "both"}));
}

JobConfig load_job(const CommonFlags& f, const std::string& builtin) {
  JobConfig job;
  if (!f.config_path.empty()) {
    auto tables = parse_config_file(f.config_path);
    auto it = tables.find("job");
    if (it == tables.end() && !tables.empty()) it = tables.begin();
    if (it == tables.end()) throw ConfigError("config file has no job table");
    job = job_from_table(it->second);
  } else if (!builtin.empty()) {
    job.hamiltonian = builtin;
  } else {
    throw ConfigError("either --config or --hamiltonian is required");
  }
  if (!f.hbar_list.empty()) {
    job.hbar.clear();
    std::istringstream is(f.hbar_list);
    std::string item;
    while (std::getline(is, item, ',')) {
      if (item.empty()) continue;
      job.hbar.push_back(std::stod(item));
    }
    if (job.hbar.empty()) throw ConfigError("--hbar list is empty");
    for (double hb : job.hbar)
      if (!(hb > 0.0)) throw ConfigError("hbar values must be positive");
  }
  if (!f.levels.empty()) detail::parse_levels(f.levels, job.n_lo, job.n_hi);
  if (f.order >= 0) job.order = f.order;
  if (f.seed) job.seed = *f.seed;
  if (!f.format.empty()) job.format = f.format;
  if (!f.out_dir.empty()) {
    job.out_dir = f.out_dir;
  } else if (job.out_dir.empty()) {
    const char* env = std::getenv("STARSPEC_OUT");
    job.out_dir = env ? env : ".";
  }
  return job;
}

CatalogEntry resolve_entry(const JobConfig& job, double hbar) {
  if (job.hamiltonian == "symbol") {
    PolySymbol sym = PolySymbol::parse(job.symbol_text);
    return make_symbol_entry("symbol", sym, hbar);
  }
  if (job.hamiltonian == "potential") {
    std::vector<Rational> vc;
    for (double c : job.potential) vc.push_back(rational_from_decimal(c));
    return make_polynomial_potential("potential", vc, rational_from_decimal(job.mass), hbar);
  }
  return make_builtin(job.hamiltonian, job.params, hbar);
}

Window job_window(const JobConfig& job) {
  Window w;
  w.action_ceiling = job.action_ceiling;
  w.energy_excursion = job.energy_ceiling;
  return w;
}

std::string hbar_suffix(const JobConfig& job, double hbar) {
  if (job.hbar.size() == 1) return "";
  return "_" + fmt_double(hbar);
}

void write_outputs(const JobConfig& job, const std::string& stem, const std::string& csv,
                   const nlohmann::ordered_json& json) {
  fs::create_directories(job.out_dir);
  if (job.format == "csv" || job.format == "both")
    atomic_write_file(fs::path(job.out_dir) / (stem + ".csv"), csv);
  if (job.format == "json" || job.format == "both")
    atomic_write_file(fs::path(job.out_dir) / (stem + ".json"), json.dump(2) + "\n");
}

OracleSpectrum run_oracle(const JobConfig& job, const CatalogEntry& entry, double hbar,
                          int k_levels, double e_hint) {
  std::string method = job.oracle;
  if (method == "auto") method = entry.has_potential ? "grid" : "fock";
  if (method == "grid") {
    if (!entry.has_potential)
      throw ConfigError("grid oracle needs a kinetic-plus-potential Hamiltonian");
    auto [lo, hi] = suggest_grid_domain(entry.potential, entry.mass, hbar, entry.guess.x, e_hint);
    return grid_spectrum(entry.potential, entry.mass, hbar, lo, hi,
                         job.oracle_n > 0 ? job.oracle_n : 128, k_levels, job.oracle_tol);
  }
  if (method == "fock") {
    if (!entry.has_symbol) throw ConfigError("fock oracle needs a polynomial symbol");
    return fock_spectrum(entry.symbol, hbar, job.oracle_n > 0 ? job.oracle_n : 64, k_levels,
                         job.oracle_tol);
  }
  throw ConfigError("unknown oracle '" + method + "'");
}

int cmd_spectrum(const CommonFlags& flags, const std::string& builtin) {
  JobConfig job = load_job(flags, builtin);
  bool partial = false;
  for (double hbar : job.hbar) {
    CatalogEntry entry = resolve_entry(job, hbar);
    FixedPointReport fp = find_fixed_point(entry.h, entry.guess);
    SpectrumResult res =
        bs_spectrum(entry.h, fp, job.n_lo, job.n_hi, hbar, job.order, job_window(job));
    bool this_partial = false;
    for (const auto& lev : res.levels) this_partial |= lev.skipped;
    partial |= this_partial;
    write_outputs(job, "spectrum" + hbar_suffix(job, hbar), spectrum_to_csv(res),
                  spectrum_to_json(res));
    std::cout << "spectrum " << entry.name << " hbar=" << fmt_double(hbar) << " levels "
              << job.n_lo << ".." << job.n_hi << (this_partial ? " (partial)" : "") << "\n";
  }
  return partial ? 2 : 0;
}

struct CompareRow {
  double hbar;
  int n;
  double action, e0, e2, oracle, res0, res2, conv;
};

int cmd_compare(const CommonFlags& flags, const std::string& builtin) {
  JobConfig job = load_job(flags, builtin);
  std::vector<CompareRow> rows;
  bool improvement_ok = true;
  std::vector<double> fit_h, fit_r0, fit_r2;

  for (double hbar : job.hbar) {
    CatalogEntry entry = resolve_entry(job, hbar);
    FixedPointReport fp = find_fixed_point(entry.h, entry.guess);
    SpectrumResult spec = bs_spectrum(entry.h, fp, job.n_lo, job.n_hi, hbar, 2, job_window(job));
    double e_hint = std::abs(fp.energy);
    for (const auto& lev : spec.levels)
      if (!lev.skipped) e_hint = std::max(e_hint, std::abs(lev.e2));
    OracleSpectrum oracle = run_oracle(job, entry, hbar, job.n_hi + 1, 1.5 * e_hint + hbar);
    write_outputs(job, "oracle" + hbar_suffix(job, hbar), oracle_to_csv(oracle),
                  oracle_to_json(oracle));

    int slope_idx = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (const auto& lev : spec.levels) {
      if (lev.skipped || lev.n >= static_cast<int>(oracle.eigenvalues.size())) continue;
      double e_or = spec.negated ? -oracle.eigenvalues[lev.n] : oracle.eigenvalues[lev.n];
      CompareRow row{hbar,
                     lev.n,
                     lev.action,
                     lev.e0,
                     lev.e2,
                     e_or,
                     std::abs(lev.e0 - e_or),
                     std::abs(lev.e2 - e_or),
                     oracle.convergence[lev.n]};
      rows.push_back(row);
      // gate with a floor so that exactly-quantizable cases, where both
      // residuals sit at numerical noise, do not flip it
      const double floor = 10.0 * row.conv + 1e-10 * std::max(1.0, std::abs(row.oracle));
      if (row.res2 > row.res0 + floor) improvement_ok = false;
      double dist = std::abs(lev.action - job.slope_action);
      if (dist < best_dist) {
        best_dist = dist;
        slope_idx = static_cast<int>(rows.size()) - 1;
      }
    }
    if (slope_idx >= 0) {
      fit_h.push_back(hbar);
      fit_r0.push_back(rows[slope_idx].res0);
      fit_r2.push_back(rows[slope_idx].res2);
    }
  }

  // least-squares slope of log(residual) vs log(hbar)
  auto fit_slope = [](const std::vector<double>& xs, const std::vector<double>& ys) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int n = static_cast<int>(xs.size());
    for (int i = 0; i < n; ++i) {
      double lx = std::log(xs[i]), ly = std::log(std::max(ys[i], 1e-300));
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
  };

  bool slopes_ok = true;
  double slope0 = 0.0, slope2 = 0.0;
  const bool fitted = fit_h.size() >= 3;
  if (fitted) {
    slope0 = fit_slope(fit_h, fit_r0);
    slope2 = fit_slope(fit_h, fit_r2);
    slopes_ok = slope0 >= 1.5 && slope0 <= 2.5 && slope2 >= 3.5 && slope2 <= 4.5;
  }

  std::ostringstream csv;
  csv << "hbar,n,A,E0,E2,E_oracle,res0,res2,conv_est\n";
  for (const auto& r : rows)
    csv << fmt_double(r.hbar) << ',' << r.n << ',' << fmt_double(r.action) << ','
        << fmt_double(r.e0) << ',' << fmt_double(r.e2) << ',' << fmt_double(r.oracle) << ','
        << fmt_double(r.res0) << ',' << fmt_double(r.res2) << ',' << fmt_double(r.conv) << '\n';

  nlohmann::ordered_json j;
  if (fitted) {
    j["order0_slope"] = slope0;
    j["order2_slope"] = slope2;
  }
  j["improvement_ok"] = improvement_ok;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json row;
    row["hbar"] = r.hbar;
    row["n"] = r.n;
    row["A"] = r.action;
    row["E0"] = r.e0;
    row["E2"] = r.e2;
    row["E_oracle"] = r.oracle;
    row["res0"] = r.res0;
    row["res2"] = r.res2;
    row["conv_est"] = r.conv;
    j["rows"].push_back(row);
  }
  write_outputs(job, "compare", csv.str(), j);

  if (fitted)
    std::cout << "slopes: order0 " << fmt_double(slope0) << ", order2 " << fmt_double(slope2)
              << "\n";
  std::cout << "improvement gate: " << (improvement_ok ? "pass" : "fail") << "\n";
  return (improvement_ok && slopes_ok) ? 0 : 1;
}

int cmd_identities(const CommonFlags& flags, int count, bool corrupt) {
  std::uint64_t seed = flags.seed.value_or(20260809);
  BracketFn bracket;
  if (corrupt) {
    bracket = [](const PolySymbol& a, const PolySymbol& b, int n) {
      PolySymbol r = moyal_bracket(a, b, n);
      if (n == 1) r += PolySymbol::constant(Rational(1));
      return r;
    };
  }
  auto reports = run_identity_suite(seed, count, bracket);
  bool all = true;
  std::ostringstream out;
  for (const auto& r : reports) {
    out << (r.passed ? "pass" : "FAIL") << "  " << r.name << "  (" << r.checked << " checked)\n";
    if (!r.passed) {
      out << "  first offending symbols:\n";
      std::istringstream fails(r.first_failure);
      std::string line;
      while (std::getline(fails, line)) out << "    " << line << "\n";
      all = false;
    }
  }
  std::cout << out.str();
  if (!flags.out_dir.empty()) {
    fs::create_directories(flags.out_dir);
    atomic_write_file(fs::path(flags.out_dir) / "identities.txt", out.str());
  }
  return all ? 0 : 1;
}

int cmd_normalform(const CommonFlags& flags, const std::string& builtin) {
  JobConfig job = load_job(flags, builtin);
  const double hbar = job.hbar.front();
  CatalogEntry entry = resolve_entry(job, hbar);
  if (!entry.has_symbol)
    throw ConfigError("normalform requires a polynomial Hamiltonian (symbol or potential form)");
  PolySymbol classical = entry.symbol.truncate_hbar(0);
  ActionSeries series = birkhoff_series(classical, job.nf_order);

  auto h = SmoothHamiltonian::from_symbol(classical, 0.0, entry.name);
  FixedPointReport fp = find_fixed_point(h, entry.guess);

  std::ostringstream csv;
  csv << "m,a_m\n";
  for (int m = 1; m <= series.order(); ++m)
    csv << m << ',' << fmt_double(series.coeff_double(m)) << '\n';
  csv << "A,f0,E_dynamics,residual\n";
  nlohmann::ordered_json j;
  j["hamiltonian"] = entry.name;
  j["order"] = series.order();
  j["coefficients"] = nlohmann::ordered_json::array();
  for (int m = 1; m <= series.order(); ++m) {
    nlohmann::ordered_json c;
    c["m"] = m;
    c["a"] = series.coeff_double(m);
    c["exact"] = rational_to_string(series.coeff(m));
    j["coefficients"].push_back(c);
  }
  j["crosscheck"] = nlohmann::ordered_json::array();
  for (double a : {1e-2, 1e-3, 1e-4}) {
    double e = orbit_with_action(h, fp, a).energy();
    double f0 = series.eval(a);
    csv << fmt_double(a) << ',' << fmt_double(f0) << ',' << fmt_double(e) << ','
        << fmt_double(std::abs(f0 - e)) << '\n';
    nlohmann::ordered_json row;
    row["A"] = a;
    row["f0"] = f0;
    row["E"] = e;
    row["residual"] = std::abs(f0 - e);
    j["crosscheck"].push_back(row);
  }
  write_outputs(job, "normalform", csv.str(), j);
  for (int m = 1; m <= series.order(); ++m)
    std::cout << "a_" << m << " = " << fmt_double(series.coeff_double(m)) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bohr-Sommerfeld spectra from phase-space symbols, with the hbar^2 correction"};
  app.require_subcommand(1);

  CommonFlags fspec, fcomp, fid, fnf;
  std::string builtin_spec, builtin_comp, builtin_nf;
  int id_count = 100;
  bool id_corrupt = false;

  auto* spectrum_cmd = app.add_subcommand("spectrum", "compute a Bohr-Sommerfeld spectrum");
  add_common(spectrum_cmd, fspec);
  spectrum_cmd->add_option("--hamiltonian", builtin_spec, "builtin Hamiltonian name");

  auto* compare_cmd = app.add_subcommand("compare", "spectrum vs matrix-quantization oracle");
  add_common(compare_cmd, fcomp);
  compare_cmd->add_option("--hamiltonian", builtin_comp, "builtin Hamiltonian name");

  auto* id_cmd = app.add_subcommand("identities", "run the exact star-algebra identity suite");
  add_common(id_cmd, fid);
  id_cmd->add_option("--count", id_count, "number of random symbol triples");
  id_cmd->add_flag("--corrupt", id_corrupt,
                   "inject a bracket fault (harness self-test; must fail)");

  auto* nf_cmd = app.add_subcommand("normalform", "classical normal-form coefficients");
  add_common(nf_cmd, fnf);
  nf_cmd->add_option("--hamiltonian", builtin_nf, "builtin Hamiltonian name");

  CLI11_PARSE(app, argc, argv);

  try {
    if (spectrum_cmd->parsed()) return cmd_spectrum(fspec, builtin_spec);
    if (compare_cmd->parsed()) return cmd_compare(fcomp, builtin_comp);
    if (id_cmd->parsed()) return cmd_identities(fid, id_count, id_corrupt);
    if (nf_cmd->parsed()) return cmd_normalform(fnf, builtin_nf);
  } catch (const OracleDiverged& e) {
    std::cerr << "oracle divergence: " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
