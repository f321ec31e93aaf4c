// Command line front end: reproducible runs driven by a JSON config whose
// digest is stamped into every artifact.
//
// Exit codes: 0 success, 2 config or input error, 3 numerical gate
// (quadrature rejected at some order), 4 integrator rejection, 1 unexpected.

#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "acsm/criteria.hpp"
#include "acsm/dynamics.hpp"
#include "acsm/fpu_model.hpp"
#include "acsm/gibbs_sampler.hpp"
#include "acsm/moment_engine.hpp"
#include "acsm/parallel.hpp"
#include "acsm/reference_functions.hpp"
#include "acsm/sample_io.hpp"
#include "acsm/stieltjes.hpp"
#include "acsm/version.hpp"
#include "json.hpp"

namespace {

using acsm::MomentEstimate;
using acsm::MomentSequence;
using acsm::Observable;
using acsm::SpectralApproximant;
using nlohmann::json;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr int kExitConfig = 2;
constexpr int kExitGate = 3;
constexpr int kExitIntegrator = 4;

struct RunConfig {
  acsm::FpuParams params;
  std::uint64_t seed = 1;
  std::size_t n_samples = 0;
  std::string observable = "Etilde";
  std::vector<acsm::MonomialTerm> terms;
  int max_order = 8;
  int blocks = 20;
  int precision_bits = 0;  // 0 = not set in the config
  std::string out_dir = ".";
  // verify stage
  double t_max = 0.0;  // 0 = one period of the slowest mode
  int n_times = 24;
  std::vector<int> verify_orders;  // empty = highest odd/even pair
  double n_sigma = 3.0;
  std::size_t max_members = 2000;

  std::string digest;  // of the canonical form below
  json canonical;
};

double require_number(const json& j, const std::string& key) {
  if (!j.at(key).is_number()) throw ConfigError("config: '" + key + "' must be a number");
  return j.at(key).get<double>();
}

std::int64_t require_int(const json& j, const std::string& key) {
  if (!j.at(key).is_number_integer() && !j.at(key).is_number_unsigned()) {
    throw ConfigError("config: '" + key + "' must be an integer");
  }
  return j.at(key).get<std::int64_t>();
}

std::vector<acsm::MonomialTerm> parse_terms(const json& arr) {
  if (!arr.is_array() || arr.empty()) {
    throw ConfigError("config: 'custom_terms' must be a non-empty array");
  }
  std::vector<acsm::MonomialTerm> terms;
  for (const json& t : arr) {
    if (!t.is_object()) throw ConfigError("config: custom term must be an object");
    for (const auto& kv : t.items()) {
      if (kv.key() != "coeff" && kv.key() != "q" && kv.key() != "p") {
        throw ConfigError("config: unknown custom term key '" + kv.key() + "'");
      }
    }
    acsm::MonomialTerm term;
    term.coeff = require_number(t, "coeff");
    auto parse_pows = [&](const char* key) {
      std::vector<std::pair<int, int>> out;
      if (!t.contains(key)) return out;
      if (!t.at(key).is_array()) throw ConfigError("config: term powers must be an array");
      for (const json& e : t.at(key)) {
        if (!e.is_array() || e.size() != 2) {
          throw ConfigError("config: term power entries are [index, exponent] pairs");
        }
        out.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
      }
      return out;
    };
    term.q_pows = parse_pows("q");
    term.p_pows = parse_pows("p");
    terms.push_back(std::move(term));
  }
  return terms;
}

// Parses and validates the run config; unknown keys are rejected so a typo
// cannot silently fall back to a default.
RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  static const std::vector<std::string> known = {
      "n",         "alpha",      "beta",           "temperature", "seed",
      "n_samples", "observable", "custom_terms",   "max_order",   "blocks",
      "precision_bits", "out_dir", "verify"};
  for (const auto& kv : j.items()) {
    if (std::find(known.begin(), known.end(), kv.key()) == known.end()) {
      throw ConfigError("config: unknown key '" + kv.key() + "'");
    }
  }
  for (const char* key : {"n", "alpha", "beta", "temperature", "seed", "n_samples"}) {
    if (!j.contains(key)) throw ConfigError(std::string("config: missing key '") + key + "'");
  }

  RunConfig cfg;
  cfg.params.n_particles = static_cast<int>(require_int(j, "n"));
  cfg.params.alpha = require_number(j, "alpha");
  cfg.params.beta = require_number(j, "beta");
  cfg.params.temperature = require_number(j, "temperature");
  const std::int64_t seed = require_int(j, "seed");
  if (seed < 0) throw ConfigError("config: 'seed' must be >= 0");
  cfg.seed = static_cast<std::uint64_t>(seed);
  const std::int64_t n_samples = require_int(j, "n_samples");
  if (n_samples < 1) throw ConfigError("config: 'n_samples' must be >= 1");
  cfg.n_samples = static_cast<std::size_t>(n_samples);

  if (j.contains("observable")) {
    if (!j.at("observable").is_string()) throw ConfigError("config: 'observable' must be a string");
    cfg.observable = j.at("observable").get<std::string>();
  }
  static const std::vector<std::string> kinds = {"Etilde", "Ktilde", "E", "H",
                                                 "custom-polynomial"};
  if (std::find(kinds.begin(), kinds.end(), cfg.observable) == kinds.end()) {
    throw ConfigError("config: observable must be one of Etilde, Ktilde, E, H, custom-polynomial");
  }
  if (cfg.observable == "custom-polynomial") {
    if (!j.contains("custom_terms")) {
      throw ConfigError("config: custom-polynomial requires 'custom_terms'");
    }
    cfg.terms = parse_terms(j.at("custom_terms"));
  } else if (j.contains("custom_terms")) {
    throw ConfigError("config: 'custom_terms' only applies to custom-polynomial");
  }

  if (j.contains("max_order")) cfg.max_order = static_cast<int>(require_int(j, "max_order"));
  if (cfg.max_order < 1) throw ConfigError("config: 'max_order' must be >= 1");
  if (cfg.max_order > acsm::kJetOrderCap) {
    throw ConfigError("config: 'max_order' exceeds the jet order cap (" +
                      std::to_string(acsm::kJetOrderCap) + ")");
  }
  if (j.contains("blocks")) cfg.blocks = static_cast<int>(require_int(j, "blocks"));
  if (cfg.blocks < 2) throw ConfigError("config: 'blocks' must be >= 2");
  if (j.contains("precision_bits")) {
    cfg.precision_bits = static_cast<int>(require_int(j, "precision_bits"));
    if (cfg.precision_bits < 64) throw ConfigError("config: 'precision_bits' must be >= 64");
  }
  if (j.contains("out_dir")) {
    if (!j.at("out_dir").is_string()) throw ConfigError("config: 'out_dir' must be a string");
    cfg.out_dir = j.at("out_dir").get<std::string>();
  }

  if (j.contains("verify")) {
    const json& v = j.at("verify");
    if (!v.is_object()) throw ConfigError("config: 'verify' must be an object");
    for (const auto& kv : v.items()) {
      static const std::vector<std::string> vkeys = {"t_max", "n_times", "orders",
                                                     "n_sigma", "max_members"};
      if (std::find(vkeys.begin(), vkeys.end(), kv.key()) == vkeys.end()) {
        throw ConfigError("config: unknown verify key '" + kv.key() + "'");
      }
    }
    if (v.contains("t_max")) cfg.t_max = require_number(v, "t_max");
    if (v.contains("n_times")) cfg.n_times = static_cast<int>(require_int(v, "n_times"));
    if (cfg.n_times < 2) throw ConfigError("config: verify.n_times must be >= 2");
    if (v.contains("orders")) {
      for (const json& o : v.at("orders")) cfg.verify_orders.push_back(o.get<int>());
    }
    if (v.contains("n_sigma")) cfg.n_sigma = require_number(v, "n_sigma");
    if (v.contains("max_members")) {
      cfg.max_members = static_cast<std::size_t>(require_int(v, "max_members"));
    }
  }

  try {
    cfg.params.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  // Canonical form: every accepted key, defaults materialized, keys sorted by
  // the JSON library. The digest of this text names the run everywhere.
  json c;
  c["n"] = cfg.params.n_particles;
  c["alpha"] = cfg.params.alpha;
  c["beta"] = cfg.params.beta;
  c["temperature"] = cfg.params.temperature;
  c["seed"] = cfg.seed;
  c["n_samples"] = cfg.n_samples;
  c["observable"] = cfg.observable;
  if (!cfg.terms.empty()) {
    json arr = json::array();
    for (const auto& t : cfg.terms) {
      json e;
      e["coeff"] = t.coeff;
      e["q"] = t.q_pows;
      e["p"] = t.p_pows;
      arr.push_back(e);
    }
    c["custom_terms"] = arr;
  }
  c["max_order"] = cfg.max_order;
  c["blocks"] = cfg.blocks;
  if (cfg.precision_bits > 0) c["precision_bits"] = cfg.precision_bits;
  c["verify"] = {{"t_max", cfg.t_max},
                 {"n_times", cfg.n_times},
                 {"orders", cfg.verify_orders},
                 {"n_sigma", cfg.n_sigma},
                 {"max_members", cfg.max_members}};
  cfg.canonical = c;
  cfg.digest = acsm::digest_hex(c.dump());
  return cfg;
}

// flag > config > ACSM_PRECISION_BITS > 512
int resolve_precision(int flag_bits, const RunConfig* cfg) {
  if (flag_bits > 0) return flag_bits;
  if (cfg && cfg->precision_bits > 0) return cfg->precision_bits;
  if (const char* env = std::getenv("ACSM_PRECISION_BITS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v >= 64) return static_cast<int>(v);
  }
  return 512;
}

Observable build_observable(const RunConfig& cfg, const acsm::ChainModel& model,
                            const acsm::SampleSet& sample) {
  if (cfg.observable == "E") return Observable::low_mode_energy();
  if (cfg.observable == "H") return Observable::total_energy();
  if (cfg.observable == "custom") return Observable::custom(cfg.terms);
  if (cfg.observable == "custom-polynomial") return Observable::custom(cfg.terms);
  const acsm::ProjectionCoeffs proj = acsm::estimate_projection(model, sample);
  if (cfg.observable == "Etilde") return Observable::low_mode_energy_projected(proj);
  return Observable::half_kinetic_projected(proj);  // Ktilde
}

std::filesystem::path prepare_out_dir(const std::string& dir) {
  std::filesystem::path p(dir);
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir + ": " + ec.message());
  return p;
}

std::ofstream open_stamped(const std::filesystem::path& path, const std::string& digest) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "# code_version=" << acsm::code_version() << "\n";
  out << "# config_digest=" << digest << "\n";
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// --- sample ----------------------------------------------------------------

int cmd_sample(const RunConfig& cfg, int threads) {
  const acsm::ChainModel model(cfg.params);
  const acsm::SampleSet sample = acsm::draw_sample(model, cfg.seed, cfg.n_samples, threads);
  const auto dir = prepare_out_dir(cfg.out_dir);
  const auto path = dir / "sample.bin";
  acsm::write_sample_file(path.string(), sample, cfg.digest);

  acsm::Accumulator he;
  for (std::size_t i = 0; i < sample.n_points; ++i) {
    he.add(model.hamiltonian(sample.point(i)));
  }
  std::printf("wrote %s: %zu points, N=%d, T=%g, seed=%llu\n", path.string().c_str(),
              sample.n_points, model.size(), cfg.params.temperature,
              static_cast<unsigned long long>(cfg.seed));
  std::printf("mean energy per particle %.6g (equipartition ~ %.6g)\n",
              he.value() / (sample.n_points * model.size()),
              cfg.params.temperature);  // kinetic T/2 + potential ~ T/2 per site
  return 0;
}

// --- moments ----------------------------------------------------------------

int cmd_moments(const RunConfig& cfg, const std::string& sample_path, int order_flag,
                int threads) {
  const std::string spath =
      sample_path.empty() ? (std::filesystem::path(cfg.out_dir) / "sample.bin").string()
                          : sample_path;
  const acsm::SampleSet sample = acsm::read_sample_file(spath);
  const auto& sp = sample.params;
  if (sp.n_particles != cfg.params.n_particles || sp.alpha != cfg.params.alpha ||
      sp.beta != cfg.params.beta || sp.temperature != cfg.params.temperature ||
      sample.seed != cfg.seed) {
    throw ConfigError("sample file " + spath + " was drawn under a different config");
  }
  const int max_order = order_flag > 0 ? order_flag : cfg.max_order;
  if (max_order > acsm::kJetOrderCap) {
    throw ConfigError("moment order exceeds the jet order cap (" +
                      std::to_string(acsm::kJetOrderCap) + ")");
  }
  const acsm::ChainModel model(cfg.params);
  const Observable f = build_observable(cfg, model, sample);
  MomentEstimate est = acsm::estimate_moments(model, sample, f, max_order, cfg.blocks, threads);

  const auto dir = prepare_out_dir(cfg.out_dir);
  const auto path = dir / "moments.json";
  acsm::write_moment_file(path.string(), est, cfg.digest);

  const acsm::HankelReport gate = acsm::hankel_check(est.moments);
  std::printf("wrote %s: observable %s, c_0..c_%d from %zu points\n", path.string().c_str(),
              est.moments.observable.c_str(), max_order, sample.n_points);
  for (int n = 0; n <= est.moments.max_order(); ++n) {
    std::printf("  c_%-2d = %-14.8g (stderr %.3g)\n", n, est.moments.c[n],
                est.moments.stderr_c[n]);
  }
  if (gate.first_negative_order) {
    std::printf("hankel gate: first negative determinant at order %d\n",
                *gate.first_negative_order);
  } else {
    std::printf("hankel gate: all determinants nonnegative up to the available order\n");
  }
  return 0;
}

// --- poles -------------------------------------------------------------------

std::string moment_file_digest(const std::string& path) {
  std::ifstream in(path);
  json j;
  in >> j;
  return j.value("config_digest", std::string("unknown"));
}

struct PoleTable {
  std::vector<SpectralApproximant> by_order;
  // stderr entries parallel to atoms, one row per order (jackknife spread).
  std::vector<std::vector<double>> omega_se, rho_se;
};

// Reruns the quadrature on every jackknife replicate sequence; the spread of
// the replicate atoms is the reported uncertainty. Replicates that fail the
// gate are dropped (their count is reported by the caller if needed).
PoleTable extract_poles(const MomentEstimate& est, int max_n, int precision) {
  PoleTable table;
  for (int n = 1; n <= max_n; ++n) {
    SpectralApproximant a = acsm::quadrature_from_moments(est.moments, n, precision);
    std::vector<std::vector<double>> rep_omega, rep_rho;
    for (const auto& rc : est.jackknife_c) {
      MomentSequence rm;
      rm.c = rc;
      rm.stderr_c.assign(rc.size(), 0.0);
      rm.n_samples = est.moments.n_samples;
      rm.observable = est.moments.observable;
      try {
        SpectralApproximant ra = acsm::quadrature_from_moments(rm, n, precision);
        std::vector<double> ro(n), rr(n);
        for (int k = 0; k < n; ++k) {
          ro[k] = ra.atoms[k].omega;
          rr[k] = ra.atoms[k].rho;
        }
        rep_omega.push_back(std::move(ro));
        rep_rho.push_back(std::move(rr));
      } catch (const acsm::QuadratureError&) {
        // replicate fell outside the representable cone; skip
      }
    }
    std::vector<double> ose(n, 0.0), rse(n, 0.0);
    const std::size_t b = rep_omega.size();
    if (b >= 2) {
      for (int k = 0; k < n; ++k) {
        double mo = 0.0, mr = 0.0;
        for (std::size_t i = 0; i < b; ++i) {
          mo += rep_omega[i][k];
          mr += rep_rho[i][k];
        }
        mo /= b;
        mr /= b;
        double vo = 0.0, vr = 0.0;
        for (std::size_t i = 0; i < b; ++i) {
          vo += (rep_omega[i][k] - mo) * (rep_omega[i][k] - mo);
          vr += (rep_rho[i][k] - mr) * (rep_rho[i][k] - mr);
        }
        ose[k] = std::sqrt(vo * (b - 1) / static_cast<double>(b));
        rse[k] = std::sqrt(vr * (b - 1) / static_cast<double>(b));
      }
    }
    table.by_order.push_back(std::move(a));
    table.omega_se.push_back(std::move(ose));
    table.rho_se.push_back(std::move(rse));
  }
  return table;
}

void write_pole_csv(std::ofstream& out, const PoleTable& table) {
  out << "order,k,omega,one_over_omega,rho,rho_normalized,omega_stderr,rho_stderr\n";
  for (std::size_t i = 0; i < table.by_order.size(); ++i) {
    const SpectralApproximant& a = table.by_order[i];
    double total = 0.0;
    for (const auto& atom : a.atoms) total += atom.rho;
    for (std::size_t k = 0; k < a.atoms.size(); ++k) {
      out << a.order << ',' << k << ',' << fmt(a.atoms[k].omega) << ','
          << fmt(1.0 / a.atoms[k].omega) << ',' << fmt(a.atoms[k].rho) << ','
          << fmt(a.atoms[k].rho / total) << ',' << fmt(table.omega_se[i][k]) << ','
          << fmt(table.rho_se[i][k]) << '\n';
    }
  }
}

json isolation_to_json(const acsm::IsolationReport& iso) {
  json rows = json::array();
  for (const auto& r : iso.rows) {
    rows.push_back({{"order", r.order},
                    {"dominant_omega", r.dominant_omega},
                    {"dominant_rho", r.dominant_rho},
                    {"dominant_fraction", r.dominant_fraction},
                    {"min_gap", r.min_gap}});
  }
  return {{"rows", rows}, {"drift", iso.drift}, {"verdict", iso.verdict}};
}

int cmd_poles(const std::string& moment_path, const std::string& out_dir, int order_flag,
              int precision_flag) {
  const MomentEstimate est = acsm::read_moment_file(moment_path);
  const std::string digest = moment_file_digest(moment_path);
  const int precision = resolve_precision(precision_flag, nullptr);
  const int feasible = static_cast<int>(est.moments.c.size()) / 2;
  const int max_n = order_flag > 0 ? order_flag : feasible;
  if (max_n > feasible) {
    throw ConfigError("order " + std::to_string(max_n) + " needs " +
                      std::to_string(2 * max_n) + " moments, file has " +
                      std::to_string(est.moments.c.size()));
  }

  const PoleTable table = extract_poles(est, max_n, precision);
  const auto dir = prepare_out_dir(out_dir);
  auto csv = open_stamped(dir / "poles.csv", digest);
  write_pole_csv(csv, table);
  csv.close();

  const acsm::IsolationReport iso = acsm::isolation_diagnostic(table.by_order);
  json jiso = isolation_to_json(iso);
  jiso["code_version"] = acsm::code_version();
  jiso["config_digest"] = digest;
  std::ofstream jout(dir / "isolation.json");
  jout << jiso.dump(2) << "\n";

  std::printf("wrote %s and %s\n", (dir / "poles.csv").string().c_str(),
              (dir / "isolation.json").string().c_str());
  for (const auto& a : table.by_order) {
    std::printf("  order %d:", a.order);
    for (const auto& atom : a.atoms) std::printf(" (omega %.6g, rho %.4g)", atom.omega, atom.rho);
    std::printf("\n");
  }
  std::printf("isolation verdict: %s (drift %.3g)\n", iso.verdict.c_str(), iso.drift);
  return 0;
}

// --- criteria ----------------------------------------------------------------

json criteria_to_json(const acsm::CriteriaSummary& s) {
  json bd = json::array();
  for (const auto& r : s.bounded_density.by_L) {
    json e = {{"L", r.L},
              {"passes", r.passes},
              {"degenerate", r.degenerate},
              {"minor_signs", r.minor_signs}};
    if (r.fails_at) e["fails_at"] = *r.fails_at;
    bd.push_back(e);
  }
  json levels = json::array();
  for (const auto& l : s.difference.levels) {
    levels.push_back({{"k", l.k},
                      {"sup_value", l.sup_value},
                      {"slope", l.slope},
                      {"verdict", l.verdict}});
  }
  json pos = json::array();
  for (const auto& e : s.positivity.entries) {
    pos.push_back({{"family", std::string(1, e.family)},
                   {"n", e.n},
                   {"l", e.l},
                   {"min_estimate", e.min_estimate},
                   {"tolerance", e.tolerance},
                   {"positive", e.positive}});
  }
  return {{"bounded_density",
           {{"by_L", bd}, {"passes_some_L", s.bounded_density.passes_some_L}}},
          {"difference", {{"levels", levels}, {"verdict", s.difference.verdict},
                          {"p_max", s.difference.p_max}}},
          {"root_test",
           {{"r", s.root.r},
            {"bounded", s.root.bounded},
            {"growth_scale", s.root.growth_scale}}},
          {"positivity", {{"entries", pos}, {"all_positive", s.positivity.all_positive}}},
          {"signature", s.signature}};
}

int cmd_criteria(const std::string& moment_path, const std::string& out_dir, int order_flag,
                 int precision_flag) {
  const MomentEstimate est = acsm::read_moment_file(moment_path);
  const std::string digest = moment_file_digest(moment_path);
  const int precision = resolve_precision(precision_flag, nullptr);
  const int feasible = static_cast<int>(est.moments.c.size()) / 2;
  if (feasible < 1) throw ConfigError("criteria need at least two moments");

  // An explicit order is binding; otherwise fall back to the largest order the
  // gate admits (an atomic sequence only supports as many atoms as it has).
  SpectralApproximant atoms;
  if (order_flag > 0) {
    atoms = acsm::quadrature_from_moments(est.moments, order_flag, precision);
  } else {
    for (int n = feasible;; --n) {
      try {
        atoms = acsm::quadrature_from_moments(est.moments, n, precision);
        break;
      } catch (const acsm::QuadratureError& e) {
        if (n <= 1 || e.max_valid_order < 1) throw;
      }
    }
  }

  const acsm::CriteriaSummary summary = acsm::run_criteria(est.moments, atoms);
  json out = criteria_to_json(summary);
  out["code_version"] = acsm::code_version();
  out["config_digest"] = digest;
  out["approximant_order"] = atoms.order;

  const auto dir = prepare_out_dir(out_dir);
  std::ofstream jout(dir / "criteria.json");
  if (!jout) throw ConfigError("cannot write criteria.json");
  jout << out.dump(2) << "\n";
  std::printf("wrote %s\n", (dir / "criteria.json").string().c_str());
  std::printf("signature: %s (difference: %s, bounded density somewhere: %s, root bounded: %s)\n",
              summary.signature.c_str(), summary.difference.verdict.c_str(),
              summary.bounded_density.passes_some_L ? "yes" : "no",
              summary.root.bounded ? "yes" : "no");
  return 0;
}

// --- verify -------------------------------------------------------------------

int cmd_verify(const RunConfig& cfg, int threads) {
  const acsm::ChainModel model(cfg.params);
  const acsm::SampleSet sample = acsm::draw_sample(model, cfg.seed, cfg.n_samples, threads);
  const Observable f = build_observable(cfg, model, sample);
  const MomentEstimate est =
      acsm::estimate_moments(model, sample, f, cfg.max_order, cfg.blocks, threads);

  const double dt = acsm::default_timestep(model);
  // Default window: twice the correlation time scale sqrt(c_0/c_1), which is
  // where the alternating truncations are informative.
  const double t_scale = std::sqrt(est.moments.c[0] / est.moments.c[1]);
  const double t_max = cfg.t_max > 0.0 ? cfg.t_max : 2.0 * t_scale;
  const int stride = std::max(1, static_cast<int>(std::ceil(t_max / (cfg.n_times * dt))));
  std::vector<double> t_grid(cfg.n_times + 1);
  for (int k = 0; k <= cfg.n_times; ++k) t_grid[k] = k * stride * dt;

  const acsm::EmpiricalCorrelation corr = acsm::empirical_autocorrelation(
      model, sample, f, t_grid, dt, cfg.blocks, threads, cfg.max_members);

  std::vector<int> orders = cfg.verify_orders;
  if (orders.empty()) {
    const int top = est.moments.max_order();
    orders = top >= 3 ? std::vector<int>{top - 1, top} : std::vector<int>{top};
  }
  for (int n : orders) {
    if (n < 0 || n > est.moments.max_order()) {
      throw ConfigError("verify order " + std::to_string(n) + " outside estimated moments");
    }
  }
  const acsm::TruncationBoundsReport rep =
      acsm::truncation_bounds_check(corr, est.moments, orders, cfg.n_sigma);

  const auto dir = prepare_out_dir(cfg.out_dir);
  auto csv = open_stamped(dir / "correlation.csv", cfg.digest);
  csv << "t,C,stderr";
  for (int n : orders) csv << ",S_" << n;
  csv << "\n";
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    csv << fmt(corr.times[k]) << ',' << fmt(corr.values[k]) << ',' << fmt(corr.stderr_c[k]);
    for (std::size_t oi = 0; oi < orders.size(); ++oi) csv << ',' << fmt(rep.s[oi][k]);
    csv << "\n";
  }
  csv.close();

  json jrep = {{"code_version", acsm::code_version()},
               {"config_digest", cfg.digest},
               {"orders", rep.orders},
               {"t_star", rep.t_star},
               {"holds_anywhere", rep.holds_anywhere},
               {"worst_violation_sigma", rep.worst_violation_sigma},
               {"ensemble_size", corr.ensemble_size},
               {"dt", dt}};
  std::ofstream jout(dir / "bounds.json");
  jout << jrep.dump(2) << "\n";

  std::printf("wrote %s and %s\n", (dir / "correlation.csv").string().c_str(),
              (dir / "bounds.json").string().c_str());
  std::printf("truncation bounds hold through t* = %.6g (worst excess %.3g sigma)\n",
              rep.t_star, rep.worst_violation_sigma);
  return rep.holds_anywhere ? 0 : kExitGate;
}

// --- reproduce -----------------------------------------------------------------

struct FigRun {
  double temperature = 0.0;
  PoleTable table;
  MomentEstimate est;
};

RunConfig fig_config(double temperature, std::uint64_t seed, std::size_t n_samples,
                     const std::string& observable, const std::string& out_dir) {
  RunConfig cfg;
  cfg.params.n_particles = 40;
  cfg.params.alpha = 0.25;
  cfg.params.beta = 0.25;
  cfg.params.temperature = temperature;
  cfg.seed = seed;
  cfg.n_samples = n_samples;
  cfg.observable = observable;
  cfg.max_order = 8;
  cfg.out_dir = out_dir;
  json c = {{"figure_model", "fpu-n40"},
            {"temperature", temperature},
            {"seed", seed},
            {"n_samples", n_samples},
            {"observable", observable}};
  cfg.canonical = c;
  cfg.digest = acsm::digest_hex(c.dump());
  return cfg;
}

FigRun run_fig_pipeline(const RunConfig& cfg, int order, int precision, int threads) {
  const acsm::ChainModel model(cfg.params);
  const acsm::SampleSet sample = acsm::draw_sample(model, cfg.seed, cfg.n_samples, threads);
  const Observable f = build_observable(cfg, model, sample);
  FigRun run;
  run.temperature = cfg.params.temperature;
  run.est = acsm::estimate_moments(model, sample, f, 2 * order, cfg.blocks, threads);
  run.table = extract_poles(run.est, order, precision);
  return run;
}

int cmd_reproduce(const std::string& fig, const std::string& scale, const std::string& out_dir,
                  std::uint64_t seed, int precision_flag, int threads) {
  if (scale != "desk" && scale != "paper") {
    throw ConfigError("scale must be 'desk' or 'paper'");
  }
  const bool desk = scale == "desk";
  const int precision = resolve_precision(precision_flag, nullptr);
  const auto dir = prepare_out_dir(out_dir);

  std::vector<double> t_grid;
  if (desk) {
    t_grid = {1e-5, 1e-4, 1e-3, 1e-2};
  } else {
    for (double t = 1e-5; t < 1.05e-2; t *= std::sqrt(10.0)) t_grid.push_back(t);
  }
  const std::size_t n_samples = desk ? 200000 : 1000000;
  const int order = 4;

  json meta = {{"figure", fig}, {"scale", scale}, {"seed", seed},
               {"n_samples", n_samples}, {"order", order}};
  const std::string digest = acsm::digest_hex(meta.dump());

  if (fig == "fig1" || fig == "fig2" || fig == "fig3" || fig == "fig4") {
    const std::string obs = (fig == "fig1" || fig == "fig2") ? "Etilde" : "Ktilde";
    auto csv = open_stamped(dir / (fig + ".csv"), digest);
    if (fig == "fig1" || fig == "fig3") {
      csv << "temperature,k,omega,one_over_omega,omega_stderr\n";
    } else {
      csv << "temperature,k,rho,rho_normalized,rho_stderr\n";
    }
    for (double temperature : t_grid) {
      const RunConfig cfg = fig_config(temperature, seed, n_samples, obs, out_dir);
      const FigRun run = run_fig_pipeline(cfg, order, precision, threads);
      const SpectralApproximant& a = run.table.by_order.back();
      double total = 0.0;
      for (const auto& atom : a.atoms) total += atom.rho;
      for (std::size_t k = 0; k < a.atoms.size(); ++k) {
        if (fig == "fig1" || fig == "fig3") {
          csv << fmt(temperature) << ',' << k << ',' << fmt(a.atoms[k].omega) << ','
              << fmt(1.0 / a.atoms[k].omega) << ',' << fmt(run.table.omega_se.back()[k])
              << "\n";
        } else {
          csv << fmt(temperature) << ',' << k << ',' << fmt(a.atoms[k].rho) << ','
              << fmt(a.atoms[k].rho / total) << ',' << fmt(run.table.rho_se.back()[k]) << "\n";
        }
      }
      std::printf("T=%g done (dominant omega %.6g)\n", temperature, a.atoms.front().omega);
    }
    std::printf("wrote %s\n", (dir / (fig + ".csv")).string().c_str());
    return 0;
  }

  if (fig == "fig5") {
    const double temperature = 1e-5;
    const RunConfig cfg = fig_config(temperature, seed, n_samples, "Etilde", out_dir);
    const FigRun run = run_fig_pipeline(cfg, order, precision, threads);
    // Reference sequence with the same frequency scale as the chain data.
    const double b = acsm::calibrate_scale(run.est.moments);
    const MomentSequence ref = acsm::sech_moments(b, 2 * order);

    auto csv = open_stamped(dir / "fig5.csv", digest);
    csv << "source,order,k,omega,one_over_omega,rho,rho_normalized\n";
    auto emit = [&](const std::string& source, const SpectralApproximant& a) {
      double total = 0.0;
      for (const auto& atom : a.atoms) total += atom.rho;
      for (std::size_t k = 0; k < a.atoms.size(); ++k) {
        csv << source << ',' << a.order << ',' << k << ',' << fmt(a.atoms[k].omega) << ','
            << fmt(1.0 / a.atoms[k].omega) << ',' << fmt(a.atoms[k].rho) << ','
            << fmt(a.atoms[k].rho / total) << "\n";
      }
    };
    for (int n : {3, 4}) {
      emit("Etilde", run.table.by_order[n - 1]);
      emit("sech-calibrated", acsm::quadrature_from_moments(ref, n, precision));
    }
    std::printf("wrote %s (scale b = %.6g)\n", (dir / "fig5.csv").string().c_str(), b);
    return 0;
  }

  throw ConfigError("unknown figure id '" + fig + "' (expected fig1..fig5)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"anharmonic chain spectral moments pipeline"};
  app.require_subcommand(1);

  std::string config_path, sample_path, moment_path, out_flag, scale = "desk", fig;
  std::uint64_t seed_flag = 0;
  bool seed_set = false;
  int order_flag = 0, precision_flag = 0, threads = 1;

  auto add_common = [&](CLI::App* sub, bool with_config) {
    if (with_config) {
      sub->add_option("--config", config_path, "run config JSON")->required();
      sub->add_option("--seed", seed_flag, "override the config seed")
          ->each([&](const std::string&) { seed_set = true; });
    }
    sub->add_option("--out", out_flag, "output directory (overrides config)");
    sub->add_option("--threads", threads, "worker thread count");
    sub->add_option("--precision", precision_flag, "working precision bits");
    return sub;
  };

  CLI::App* sample = add_common(app.add_subcommand("sample", "draw an equilibrium sample"), true);
  CLI::App* moments =
      add_common(app.add_subcommand("moments", "estimate spectral moments from a sample"), true);
  moments->add_option("--sample", sample_path, "sample file (default OUT/sample.bin)");
  moments->add_option("--order", order_flag, "highest moment order");

  CLI::App* poles = app.add_subcommand("poles", "atoms of the spectral measure from moments");
  poles->add_option("--moments", moment_path, "moment JSON file")->required();
  poles->add_option("--out", out_flag, "output directory");
  poles->add_option("--order", order_flag, "highest quadrature order");
  poles->add_option("--precision", precision_flag, "working precision bits");

  CLI::App* criteria = app.add_subcommand("criteria", "regularity indicators from moments");
  criteria->add_option("--moments", moment_path, "moment JSON file")->required();
  criteria->add_option("--out", out_flag, "output directory");
  criteria->add_option("--order", order_flag, "approximant order");
  criteria->add_option("--precision", precision_flag, "working precision bits");

  CLI::App* verify =
      add_common(app.add_subcommand("verify", "empirical correlation vs truncation bounds"), true);

  CLI::App* reproduce = app.add_subcommand("reproduce", "emit the table behind a figure");
  reproduce->add_option("figure", fig, "fig1..fig5")->required();
  reproduce->add_option("--scale", scale, "desk or paper");
  reproduce->add_option("--out", out_flag, "output directory");
  reproduce->add_option("--seed", seed_flag, "ensemble seed")
      ->each([&](const std::string&) { seed_set = true; });
  reproduce->add_option("--precision", precision_flag, "working precision bits");
  reproduce->add_option("--threads", threads, "worker thread count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return kExitConfig;
  }

  try {
    auto load = [&]() {
      RunConfig cfg = load_config(config_path);
      if (seed_set) {
        cfg.seed = seed_flag;
        cfg.canonical["seed"] = cfg.seed;
        cfg.digest = acsm::digest_hex(cfg.canonical.dump());
      }
      if (!out_flag.empty()) cfg.out_dir = out_flag;
      return cfg;
    };
    const std::string out_dir = out_flag.empty() ? "." : out_flag;
    if (sample->parsed()) return cmd_sample(load(), threads);
    if (moments->parsed()) return cmd_moments(load(), sample_path, order_flag, threads);
    if (poles->parsed()) return cmd_poles(moment_path, out_dir, order_flag, precision_flag);
    if (criteria->parsed()) return cmd_criteria(moment_path, out_dir, order_flag, precision_flag);
    if (verify->parsed()) return cmd_verify(load(), threads);
    if (reproduce->parsed()) {
      return cmd_reproduce(fig, scale, out_dir, seed_set ? seed_flag : 1, precision_flag,
                           threads);
    }
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const acsm::QuadratureError& e) {
    std::fprintf(stderr,
                 "numerical gate: order %d rejected: %s (results reliable up to order %d)\n",
                 e.failed_order, e.what(), e.max_valid_order);
    return kExitGate;
  } catch (const acsm::IntegratorError& e) {
    std::fprintf(stderr, "integrator rejection: %s (try dt <= %.6g)\n", e.what(),
                 e.suggested_dt);
    return kExitIntegrator;
  } catch (const acsm::SampleIoError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
