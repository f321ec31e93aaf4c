#include "acsm/gibbs_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "acsm/parallel.hpp"

namespace acsm {
namespace {

// 15-point Gauss-Legendre nodes/weights on [-1, 1], enough for one smooth
// quadrature panel at full double accuracy.
constexpr double kGlx[15] = {
    -0.9879925180204854, -0.9372733924007060, -0.8482065834104272,
    -0.7244177313601700, -0.5709721726085388, -0.3941513470775634,
    -0.2011940939974345, 0.0,                 0.2011940939974345,
    0.3941513470775634,  0.5709721726085388,  0.7244177313601700,
    0.8482065834104272,  0.9372733924007060,  0.9879925180204854};
constexpr double kGlw[15] = {
    0.03075324199611727, 0.07036604748810812, 0.1071592204671719,
    0.1395706779261543,  0.1662692058169939,  0.1861610000155622,
    0.1984314853271116,  0.2025782419255613,  0.1984314853271116,
    0.1861610000155622,  0.1662692058169939,  0.1395706779261543,
    0.1071592204671719,  0.07036604748810812, 0.03075324199611727};

constexpr double kLogCutoff = 709.0;  // exp(-709) is the smallest normal scale
constexpr int kGridCells = 8192;
constexpr int kExactEdgeCells = 4;

double gl15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < 15; ++i) s += kGlw[i] * f(c + h * kGlx[i]);
  return s * h;
}

struct SimpsonPanel {
  double a, b, integral;
};

void adaptive_simpson(const std::function<double(double)>& f, double a,
                      double fa, double m, double fm, double b, double fb,
                      double whole, double tol, int depth,
                      std::vector<SimpsonPanel>& out) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) {
    const double corr = (left + right - whole) / 15.0;
    out.push_back({a, m, left + 0.5 * corr});
    out.push_back({m, b, right + 0.5 * corr});
    return;
  }
  adaptive_simpson(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1, out);
  adaptive_simpson(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1, out);
}

}  // namespace

BondSampler::BondSampler(const FpuParams& params)
    : alpha_(params.alpha), beta_(params.beta), temperature_(params.temperature) {
  params.validate();

  // Global potential minimum over the stationary points of V.
  auto v = [&](double b) { return bond_energy(b, alpha_, beta_); };
  double b_min = 0.0;
  v_min_ = 0.0;
  if (beta_ > 0.0 && alpha_ * alpha_ >= 4.0 * beta_) {
    const double disc = std::sqrt(alpha_ * alpha_ - 4.0 * beta_);
    for (double r : {(-alpha_ + disc) / (2.0 * beta_), (-alpha_ - disc) / (2.0 * beta_)}) {
      if (v(r) < v_min_) {
        v_min_ = v(r);
        b_min = r;
      }
    }
  }

  // Support out to where the density underflows relative to the peak.
  auto log_weight = [&](double b) { return (v(b) - v_min_) / temperature_; };
  auto expand = [&](double dir) {
    double step = std::sqrt(2.0 * kLogCutoff * temperature_);
    double x = b_min + dir * step;
    while (log_weight(x) < kLogCutoff) {
      step *= 2.0;
      x = b_min + dir * step;
      if (!std::isfinite(x)) throw SamplerError("bond density does not decay");
    }
    double inner = b_min, outer = x;
    for (int i = 0; i < 80; ++i) {
      const double mid = 0.5 * (inner + outer);
      (log_weight(mid) < kLogCutoff ? inner : outer) = mid;
    }
    return outer;
  };
  lo_ = expand(-1.0);
  hi_ = expand(+1.0);

  std::function<double(double)> dens = [this](double b) {
    return density_unnormalized(b);
  };

  // Adaptive panel quadrature of the unnormalized density.
  std::vector<SimpsonPanel> panels;
  const int coarse = 64;
  double total_estimate = 0.0;
  std::vector<double> edge(coarse + 1), mid(coarse), fe(coarse + 1), fm(coarse);
  for (int i = 0; i <= coarse; ++i) {
    edge[i] = lo_ + (hi_ - lo_) * i / coarse;
    fe[i] = dens(edge[i]);
  }
  for (int i = 0; i < coarse; ++i) {
    mid[i] = 0.5 * (edge[i] + edge[i + 1]);
    fm[i] = dens(mid[i]);
    total_estimate += (edge[i + 1] - edge[i]) / 6.0 * (fe[i] + 4.0 * fm[i] + fe[i + 1]);
  }
  const double tol = 1e-13 * total_estimate / coarse;
  for (int i = 0; i < coarse; ++i) {
    const double whole =
        (edge[i + 1] - edge[i]) / 6.0 * (fe[i] + 4.0 * fm[i] + fe[i + 1]);
    adaptive_simpson(dens, edge[i], fe[i], mid[i], fm[i], edge[i + 1], fe[i + 1],
                     whole, tol, 40, panels);
  }

  panel_x_.reserve(panels.size() + 1);
  panel_cum_.reserve(panels.size() + 1);
  panel_x_.push_back(lo_);
  panel_cum_.push_back(0.0);
  Accumulator cum;
  for (const auto& pn : panels) {
    cum.add(pn.integral);
    panel_x_.push_back(pn.b);
    panel_cum_.push_back(cum.value());
  }
  mass_ = panel_cum_.back();
  if (!(mass_ > 0.0) || !std::isfinite(mass_)) {
    throw SamplerError("bond density has no usable mass");
  }

  // Cross-check the mass against a fixed composite rule; the tabulated CDF
  // must carry at least 1 - 1e-10 of the truth.
  double check = 0.0;
  const int nc = 4096;
  for (int i = 0; i < nc; ++i) {
    check += gl15(dens, lo_ + (hi_ - lo_) * i / nc, lo_ + (hi_ - lo_) * (i + 1) / nc);
  }
  if (std::abs(check - mass_) > 1e-10 * mass_) {
    throw SamplerError("bond mass quadrature failed its self-check");
  }

  // Inverse CDF at uniform mass fractions.
  nodes_.resize(kGridCells + 1);
  slopes_.resize(kGridCells + 1);
  nodes_[0] = lo_;
  nodes_[kGridCells] = hi_;
  for (int i = 1; i < kGridCells; ++i) {
    nodes_[i] = invert_exact(mass_ * i / kGridCells);
  }
  for (int i = 0; i <= kGridCells; ++i) {
    const double g = dens(nodes_[i]);
    slopes_[i] = (g > 0.0) ? mass_ / g : 0.0;
    if (!std::isfinite(slopes_[i])) slopes_[i] = 0.0;
  }
  // Monotonicity guard on the Hermite cells (slopes at most 3x the secant).
  for (int i = 0; i < kGridCells; ++i) {
    const double secant = (nodes_[i + 1] - nodes_[i]) * kGridCells;
    slopes_[i] = std::min(slopes_[i], 3.0 * secant);
    slopes_[i + 1] = std::min(slopes_[i + 1], 3.0 * secant);
  }
}

double BondSampler::density_unnormalized(double b) const {
  return std::exp(-(bond_energy(b, alpha_, beta_) - v_min_) / temperature_);
}

double BondSampler::invert_exact(double target_mass) const {
  auto it = std::lower_bound(panel_cum_.begin(), panel_cum_.end(), target_mass);
  std::size_t idx = it == panel_cum_.begin() ? 0 : (it - panel_cum_.begin()) - 1;
  idx = std::min(idx, panel_cum_.size() - 2);
  double a = panel_x_[idx], b = panel_x_[idx + 1];
  const double base = panel_cum_[idx];
  std::function<double(double)> dens = [this](double x) {
    return density_unnormalized(x);
  };
  double x = 0.5 * (a + b);
  for (int iter = 0; iter < 80; ++iter) {
    const double h = base + gl15(dens, panel_x_[idx], x) - target_mass;
    if (std::abs(h) <= 1e-15 * mass_) break;
    (h > 0.0 ? b : a) = x;
    const double g = density_unnormalized(x);
    double next = (g > 0.0) ? x - h / g : 0.5 * (a + b);
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    if (next == x) break;
    x = next;
  }
  return x;
}

double BondSampler::sample(double u) const {
  if (!(u > 0.0 && u <= 1.0)) throw SamplerError("uniform variate out of range");
  if (u == 1.0) return hi_;
  const double scaled = u * kGridCells;
  int cell = std::min(static_cast<int>(scaled), kGridCells - 1);
  if (cell < kExactEdgeCells || cell >= kGridCells - kExactEdgeCells) {
    return invert_exact(u * mass_);
  }
  const double s = scaled - cell;
  const double b0 = nodes_[cell], b1 = nodes_[cell + 1];
  const double d0 = slopes_[cell] / kGridCells, d1 = slopes_[cell + 1] / kGridCells;
  const double s2 = s * s, s3 = s2 * s;
  return (2.0 * s3 - 3.0 * s2 + 1.0) * b0 + (s3 - 2.0 * s2 + s) * d0 +
         (-2.0 * s3 + 3.0 * s2) * b1 + (s3 - s2) * d1;
}

double BondSampler::cdf(double b) const {
  if (b <= lo_) return 0.0;
  if (b >= hi_) return 1.0;
  auto it = std::upper_bound(panel_x_.begin(), panel_x_.end(), b);
  std::size_t idx = (it - panel_x_.begin()) - 1;
  idx = std::min(idx, panel_x_.size() - 2);
  std::function<double(double)> dens = [this](double x) {
    return density_unnormalized(x);
  };
  return (panel_cum_[idx] + gl15(dens, panel_x_[idx], b)) / mass_;
}

PhasePoint sample_state(const ChainModel& model, const BondSampler& bonds,
                        RngStream& stream) {
  const int n = model.size();
  const double sigma = std::sqrt(model.params().temperature);
  PhasePoint x;
  x.p.resize(n);
  for (int j = 0; j < n; ++j) x.p[j] = sigma * stream.next_gaussian();
  std::vector<double> b(n);
  for (int j = 0; j < n; ++j) b[j] = bonds.sample(stream.next_unit());
  x.q = positions_from_bonds(b);
  return x;
}

PhasePoint SampleSet::point(std::size_t i) const {
  const int n = params.n_particles;
  PhasePoint x;
  x.q.assign(q.begin() + i * n, q.begin() + (i + 1) * n);
  x.p.assign(p.begin() + i * n, p.begin() + (i + 1) * n);
  return x;
}

void SampleSet::append(const PhasePoint& x) {
  q.insert(q.end(), x.q.begin(), x.q.end());
  p.insert(p.end(), x.p.begin(), x.p.end());
  ++n_points;
}

SampleSet draw_sample(const ChainModel& model, std::uint64_t seed,
                      std::size_t n_points, int threads) {
  BondSampler bonds(model.params());
  const int n = model.size();
  SampleSet out;
  out.params = model.params();
  out.seed = seed;
  out.generator_id = std::string(kGeneratorId) + "|bond-icdf-v1";
  out.n_points = n_points;
  out.q.resize(n_points * n);
  out.p.resize(n_points * n);
  parallel_blocks(n_points, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      RngStream stream = RngStream::for_draw(seed, i);
      const PhasePoint x = sample_state(model, bonds, stream);
      std::copy(x.q.begin(), x.q.end(), out.q.begin() + i * n);
      std::copy(x.p.begin(), x.p.end(), out.p.begin() + i * n);
    }
  });
  return out;
}

ProjectionCoeffs estimate_projection(const ChainModel& model,
                                     const SampleSet& sample) {
  if (sample.n_points <= 100) {
    throw SamplerError("projection estimate needs more than 100 points");
  }
  const std::size_t n = sample.n_points;
  std::vector<double> e(n), k(n), h(n);
  for (std::size_t i = 0; i < n; ++i) {
    const PhasePoint x = sample.point(i);
    e[i] = model.low_mode_energy(x);
    k[i] = model.half_kinetic(x);
    h[i] = model.hamiltonian(x);
  }
  auto mean = [n](const std::vector<double>& v) {
    Accumulator a;
    for (double x : v) a.add(x);
    return a.value() / n;
  };
  const double me = mean(e), mk = mean(k), mh = mean(h);
  Accumulator ceh, ckh, chh;
  for (std::size_t i = 0; i < n; ++i) {
    ceh.add((e[i] - me) * (h[i] - mh));
    ckh.add((k[i] - mk) * (h[i] - mh));
    chh.add((h[i] - mh) * (h[i] - mh));
  }
  if (!(chh.value() > 0.0)) {
    throw SamplerError("energy variance vanishes; projection undefined");
  }
  ProjectionCoeffs c;
  c.lambda_low_mode = ceh.value() / chh.value();
  c.lambda_half_kinetic = ckh.value() / chh.value();
  c.sample_size = n;
  return c;
}

}  // namespace acsm
