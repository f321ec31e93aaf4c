#include "acsm/moment_engine.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "acsm/parallel.hpp"
#include "acsm/version.hpp"
#include "mp_support.hpp"

namespace acsm {

using nlohmann::json;

DerivativeTable derivative_table(const ChainModel& model,
                                 const SampleSet& sample, const Observable& f,
                                 int max_n, int threads, int order_cap) {
  if (max_n < 0) throw std::invalid_argument("max_n must be >= 0");
  DerivativeTable table;
  table.n_points = sample.n_points;
  table.max_n = max_n;
  table.values.resize(sample.n_points * (max_n + 1));
  parallel_blocks(sample.n_points, threads,
                  [&](std::size_t, std::size_t begin, std::size_t end) {
                    for (std::size_t i = begin; i < end; ++i) {
                      const PhasePoint x = sample.point(i);
                      const auto d = lie_derivatives(model, x, f, max_n, order_cap);
                      std::copy(d.begin(), d.end(),
                                table.values.begin() + i * (max_n + 1));
                    }
                  });
  return table;
}

MomentEstimate moments_from_table(const DerivativeTable& table, int blocks) {
  const std::size_t n = table.n_points;
  const int cols = table.max_n + 1;
  if (blocks < 2) throw std::invalid_argument("jackknife needs >= 2 blocks");
  if (n < 2 * static_cast<std::size_t>(blocks)) {
    throw std::invalid_argument("too few points for the requested blocks");
  }

  MomentEstimate est;
  est.moments.c.resize(cols);
  est.moments.stderr_c.resize(cols);
  est.moments.n_samples = n;
  est.jackknife_c.assign(blocks, std::vector<double>(cols));

  auto block_begin = [&](int b) { return (n * b) / blocks; };

  for (int col = 0; col < cols; ++col) {
    Accumulator total;
    for (std::size_t i = 0; i < n; ++i) total.add(table.at(i, col));
    const double mean = total.value() / n;

    // Per-block sums and sums of squared deviations about the global mean.
    std::vector<double> s_b(blocks), ss_b(blocks);
    Accumulator ss_total;
    for (int b = 0; b < blocks; ++b) {
      Accumulator s, ss;
      for (std::size_t i = block_begin(b); i < block_begin(b + 1); ++i) {
        const double d = table.at(i, col) - mean;
        s.add(table.at(i, col));
        ss.add(d * d);
      }
      s_b[b] = s.value();
      ss_b[b] = ss.value();
      ss_total.add(ss_b[b]);
    }
    est.moments.c[col] = ss_total.value() / (n - 1);

    // Leave-one-block-out variance via the shifted-mean identity
    //   sum_{i not in b} (x_i - mean')^2
    //     = (SS_tot - SS_b) - n' (mean' - mean)^2.
    Accumulator jk_mean;
    for (int b = 0; b < blocks; ++b) {
      const std::size_t nb = block_begin(b + 1) - block_begin(b);
      const std::size_t np = n - nb;
      const double mean_p = (total.value() - s_b[b]) / np;
      double ss = (ss_total.value() - ss_b[b]) -
                  np * (mean_p - mean) * (mean_p - mean);
      if (ss < 0.0) ss = 0.0;
      est.jackknife_c[b][col] = ss / (np - 1);
      jk_mean.add(est.jackknife_c[b][col]);
    }
    const double jbar = jk_mean.value() / blocks;
    Accumulator jvar;
    for (int b = 0; b < blocks; ++b) {
      const double d = est.jackknife_c[b][col] - jbar;
      jvar.add(d * d);
    }
    est.moments.stderr_c[col] =
        std::sqrt(jvar.value() * (blocks - 1) / static_cast<double>(blocks));
  }
  return est;
}

MomentEstimate estimate_moments(const ChainModel& model,
                                const SampleSet& sample, const Observable& f,
                                int max_n, int blocks, int threads,
                                int order_cap) {
  const DerivativeTable table =
      derivative_table(model, sample, f, max_n, threads, order_cap);
  MomentEstimate est = moments_from_table(table, blocks);
  est.moments.observable = f.label();
  est.moments.params = sample.params;
  est.moments.seed = sample.seed;
  est.moments.source = "sampled";
  return est;
}

HankelReport hankel_check(const MomentSequence& m, int precision_bits) {
  HankelReport rep;
  rep.precision_bits = precision_bits;
  const int max_order = m.max_order();
  const int n_h = max_order / 2;            // H_n reads c_{2n}
  const int n_h1 = (max_order - 1) / 2;     // H1_n reads c_{2n+1}

  auto minor_det = [&](int size, int shift) {
    std::vector<std::vector<mp::Rat>> a(size, std::vector<mp::Rat>(size));
    for (int i = 0; i < size; ++i) {
      for (int j = 0; j < size; ++j) a[i][j] = mp::Rat(m.c[i + j + shift]);
    }
    return mp::exact_det(std::move(a));
  };

  for (int nn = 0; nn <= n_h; ++nn) {
    const mp::Rat d = minor_det(nn + 1, 0);
    rep.det_h.push_back(d.convert_to<double>());
    rep.sign_h.push_back(mp::sign_of(d));
  }
  for (int nn = 0; nn <= n_h1; ++nn) {
    const mp::Rat d = minor_det(nn + 1, 1);
    rep.det_h1.push_back(d.convert_to<double>());
    rep.sign_h1.push_back(mp::sign_of(d));
  }
  for (int nn = 0; nn < static_cast<int>(rep.sign_h.size()); ++nn) {
    if (rep.sign_h[nn] < 0) {
      rep.first_negative_order = nn;
      break;
    }
    if (nn < static_cast<int>(rep.sign_h1.size()) && rep.sign_h1[nn] < 0) {
      rep.first_negative_order = nn;
      break;
    }
  }
  return rep;
}

UniquenessEstimate uniqueness_bound(const MomentSequence& m) {
  UniquenessEstimate est;
  for (int n = 1; n <= m.max_order(); ++n) {
    double dn = 0.0;
    if (m.c[n] > 0.0) {
      dn = std::exp((std::log(m.c[n]) - std::lgamma(2.0 * n + 1.0)) / n);
    }
    est.d.push_back(dn);
    est.d_sup = std::max(est.d_sup, dn);
  }
  return est;
}

void write_moment_file(const std::string& path, const MomentEstimate& est,
                       const std::string& config_digest) {
  json j{{"format_version", 1},
         {"code_version", code_version()},
         {"config_digest", config_digest},
         {"observable", est.moments.observable},
         {"n_samples", est.moments.n_samples},
         {"seed", est.moments.seed},
         {"source", est.moments.source},
         {"c", est.moments.c},
         {"stderr", est.moments.stderr_c},
         {"jackknife_c", est.jackknife_c}};
  if (est.moments.params) {
    const FpuParams& p = *est.moments.params;
    j["params"] = {{"n_particles", p.n_particles},
                   {"alpha", p.alpha},
                   {"beta", p.beta},
                   {"temperature", p.temperature}};
  } else {
    j["params"] = nullptr;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error(path + ": write failed");
}

MomentEstimate read_moment_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": bad JSON: " + e.what());
  }
  MomentEstimate est;
  try {
    est.moments.observable = j.at("observable").get<std::string>();
    est.moments.n_samples = j.at("n_samples").get<std::size_t>();
    est.moments.seed = j.at("seed").get<std::uint64_t>();
    est.moments.source = j.value("source", "file");
    est.moments.c = j.at("c").get<std::vector<double>>();
    est.moments.stderr_c = j.at("stderr").get<std::vector<double>>();
    est.jackknife_c =
        j.value("jackknife_c", std::vector<std::vector<double>>{});
    if (!j.at("params").is_null()) {
      const json& p = j.at("params");
      FpuParams fp;
      fp.n_particles = p.at("n_particles").get<int>();
      fp.alpha = p.at("alpha").get<double>();
      fp.beta = p.at("beta").get<double>();
      fp.temperature = p.at("temperature").get<double>();
      est.moments.params = fp;
    }
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": incomplete moment file: " + e.what());
  }
  if (est.moments.stderr_c.size() != est.moments.c.size()) {
    throw std::runtime_error(path + ": stderr/c length mismatch");
  }
  return est;
}

}  // namespace acsm
