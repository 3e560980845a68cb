#include "lnf/fieldgen.hpp"

#include <cmath>
#include <numbers>

#include "lnf/numerics.hpp"

namespace lnf::fieldgen {

namespace {

constexpr double kPi = std::numbers::pi;

void scale_max_abs_one(std::span<double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  if (m == 0.0) return;
  for (double& x : v) x /= m;
}

}  // namespace

LaplaceSample laplace_mad_sample(const Grid& grid, int n_sources, double eps,
                                 Rng& rng) {
  if (grid.dim != 2) throw DimensionError("laplace_mad_sample needs a 2-D grid");
  std::vector<std::array<double, 2>> sources(n_sources);
  for (auto& c : sources) {
    // rejection from [-0.5, 1.5]^2 minus the expanded box
    while (true) {
      double x = rng.uniform(-0.5, 1.5);
      double y = rng.uniform(-0.5, 1.5);
      if (x < -eps || x > 1.0 + eps || y < -eps || y > 1.0 + eps) {
        c = {x, y};
        break;
      }
    }
  }
  std::vector<double> weights(n_sources);
  for (double& w : weights) w = rng.uniform(-1.0, 1.0);

  LaplaceSample s;
  s.field.resize(grid.n_nodes());
  for (int64_t id = 0; id < grid.n_nodes(); ++id) {
    double xy[3];
    grid.node_coords(id, xy);
    double u = 0.0;
    for (int j = 0; j < n_sources; ++j) {
      double dx = xy[0] - sources[j][0];
      double dy = xy[1] - sources[j][1];
      u += weights[j] * 0.5 * std::log(dx * dx + dy * dy);
    }
    s.field[id] = u;
  }
  s.boundary.resize(grid.n_boundary());
  for (int b = 0; b < grid.n_boundary(); ++b) {
    s.boundary[b] = s.field[grid.boundary_nodes[b]];
  }
  // joint normalization: max |[u_b; u]| = 1
  double m = 0.0;
  for (double x : s.field) m = std::max(m, std::abs(x));
  for (double x : s.boundary) m = std::max(m, std::abs(x));
  if (m > 0.0) {
    for (double& x : s.field) x /= m;
    for (double& x : s.boundary) x /= m;
  }
  return s;
}

std::vector<double> fourier_ic_1d(int n, int max_mode, double alpha, Rng& rng) {
  std::vector<double> u(n, 0.0);
  for (int m = 1; m <= max_mode; ++m) {
    double a = rng.normal();
    double b = rng.normal();
    double decay = std::pow(static_cast<double>(m), alpha);
    for (int i = 0; i < n; ++i) {
      double x = 2.0 * kPi * i / n;
      u[i] += (a * std::cos(m * x) + b * std::sin(m * x)) / decay;
    }
  }
  double mean = 0.0;
  for (double x : u) mean += x;
  mean /= n;
  double var = 0.0;
  for (double& x : u) {
    x -= mean;
    var += x * x;
  }
  double sd = std::sqrt(var / n);
  if (sd > 0.0) {
    for (double& x : u) x /= sd;
  }
  return u;
}

std::vector<double> boundary_grf_mix(int n_b, Rng& rng) {
  if (n_b < 8) throw DimensionError("boundary_grf_mix needs n_b >= 8");
  int max_mode = (n_b - 1) / 2;
  auto component = [&](double alpha, double tau) {
    std::vector<double> g(n_b, 0.0);
    for (int m = 1; m <= max_mode; ++m) {
      double a = rng.normal();
      double b = rng.normal();
      double amp = std::pow(m * m + tau * tau, -alpha / 2.0);
      for (int i = 0; i < n_b; ++i) {
        double th = 2.0 * kPi * m * i / n_b;
        g[i] += amp * (a * std::cos(th) + b * std::sin(th));
      }
    }
    return g;
  };
  std::vector<double> low = component(2.5, 3.0);
  std::vector<double> high = component(1.5, 12.0);
  for (int i = 0; i < n_b; ++i) low[i] += 0.25 * high[i];
  scale_max_abs_one(low);
  return low;
}

SineNet sample_sine_net(Rng& rng) {
  SineNet net;
  const int w = SineNet::kWidth;
  double s1 = 1.0 / std::sqrt(2.0);
  double s2 = 1.0 / std::sqrt(static_cast<double>(w));
  for (int j = 0; j < w; ++j) {
    for (int d = 0; d < 2; ++d) net.w1[j][d] = rng.normal() * s1;
  }
  for (int j = 0; j < w; ++j) net.b1[j] = rng.uniform(-kPi, kPi);
  for (int k = 0; k < w; ++k) {
    for (int j = 0; j < w; ++j) net.w2[k][j] = rng.normal() * s2;
  }
  for (int k = 0; k < w; ++k) net.b2[k] = rng.uniform(-kPi, kPi);
  for (int k = 0; k < w; ++k) net.w3[k] = rng.normal() * s2;
  net.b3 = rng.uniform(-kPi, kPi);
  return net;
}

double SineNet::eval(double x, double y) const {
  std::array<double, kWidth> a1;
  for (int j = 0; j < kWidth; ++j) {
    a1[j] = std::sin(w1[j][0] * x + w1[j][1] * y + b1[j]);
  }
  double out = b3;
  for (int k = 0; k < kWidth; ++k) {
    double h2 = b2[k];
    for (int j = 0; j < kWidth; ++j) h2 += w2[k][j] * a1[j];
    out += w3[k] * std::sin(h2);
  }
  return out;
}

double SineNet::laplacian(double x, double y) const {
  std::array<double, kWidth> sin1, cos1;
  for (int j = 0; j < kWidth; ++j) {
    double h1 = w1[j][0] * x + w1[j][1] * y + b1[j];
    sin1[j] = std::sin(h1);
    cos1[j] = std::cos(h1);
  }
  double lap = 0.0;
  for (int k = 0; k < kWidth; ++k) {
    double h2 = b2[k];
    double dx = 0.0, dy = 0.0, dxx = 0.0, dyy = 0.0;
    for (int j = 0; j < kWidth; ++j) {
      h2 += w2[k][j] * sin1[j];
      dx += w2[k][j] * cos1[j] * w1[j][0];
      dy += w2[k][j] * cos1[j] * w1[j][1];
      dxx -= w2[k][j] * sin1[j] * w1[j][0] * w1[j][0];
      dyy -= w2[k][j] * sin1[j] * w1[j][1] * w1[j][1];
    }
    double s2 = std::sin(h2), c2 = std::cos(h2);
    lap += w3[k] * (-s2 * (dx * dx + dy * dy) + c2 * (dxx + dyy));
  }
  return lap;
}

std::vector<double> sine_net_field(const SineNet& net, const Grid& grid) {
  if (grid.dim != 2) throw DimensionError("sine_net_field needs a 2-D grid");
  std::vector<double> out(grid.n_nodes());
  for (int64_t id = 0; id < grid.n_nodes(); ++id) {
    double xy[3];
    grid.node_coords(id, xy);
    out[id] = net.eval(xy[0], xy[1]);
  }
  return out;
}

std::vector<double> grf_periodic_2d(int n, double alpha, double tau, Rng& rng) {
  using numerics::cplx;
  int64_t nn = int64_t(n) * n;
  std::vector<cplx> noise(nn);
  for (auto& c : noise) c = rng.normal();
  numerics::fft_2d(noise, n, n, false);
  for (int y = 0; y < n; ++y) {
    int my = y <= n / 2 ? y : y - n;
    for (int x = 0; x < n; ++x) {
      int mx = x <= n / 2 ? x : x - n;
      int64_t id = int64_t(y) * n + x;
      if (mx == 0 && my == 0) {
        noise[id] = 0.0;  // zero mean
      } else {
        double k2 = double(mx) * mx + double(my) * my;
        noise[id] *= std::pow(k2 + tau * tau, -alpha / 2.0);
      }
    }
  }
  numerics::fft_2d(noise, n, n, true);
  std::vector<double> out(nn);
  for (int64_t i = 0; i < nn; ++i) out[i] = noise[i].real();
  return out;
}

std::vector<double> yukawa_boundary_3d(const Grid& grid3, int n_sources, Rng& rng) {
  if (grid3.dim != 3) throw DimensionError("yukawa_boundary_3d needs a 3-D grid");
  std::vector<std::array<double, 3>> sources(n_sources);
  std::vector<double> weights(n_sources), kappas(n_sources);
  for (auto& c : sources) {
    while (true) {
      double x = rng.uniform(-0.7, 1.7);
      double y = rng.uniform(-0.7, 1.7);
      double z = rng.uniform(-0.7, 1.7);
      bool inside_inner = x > -0.2 && x < 1.2 && y > -0.2 && y < 1.2 && z > -0.2 && z < 1.2;
      if (!inside_inner) {
        c = {x, y, z};
        break;
      }
    }
  }
  for (double& w : weights) w = rng.uniform(-1.0, 1.0);
  for (double& k : kappas) k = rng.uniform(0.5, 3.0);

  std::vector<double> g(grid3.n_boundary());
  for (int b = 0; b < grid3.n_boundary(); ++b) {
    double xyz[3];
    grid3.node_coords(grid3.boundary_nodes[b], xyz);
    double acc = 0.0;
    for (int j = 0; j < n_sources; ++j) {
      double dx = xyz[0] - sources[j][0];
      double dy = xyz[1] - sources[j][1];
      double dz = xyz[2] - sources[j][2];
      double r = std::sqrt(dx * dx + dy * dy + dz * dz);
      acc += weights[j] * std::exp(-kappas[j] * r) / r;
    }
    g[b] = acc;
  }
  scale_max_abs_one(g);
  return g;
}

namespace {

std::vector<double> truncated_series(int n_b, Rng& rng) {
  constexpr int kModes = 8;
  std::vector<double> s(n_b, 0.0);
  for (int m = 1; m <= kModes; ++m) {
    double a = rng.normal();
    double b = rng.normal();
    double decay = 1.0 / (m * m);
    for (int i = 0; i < n_b; ++i) {
      double th = 2.0 * kPi * m * i / n_b;
      s[i] += decay * (a * std::cos(th) + b * std::sin(th));
    }
  }
  return s;
}

}  // namespace

std::vector<double> positivity_shift(std::vector<double> fluctuation,
                                     double floor_val) {
  double lo = 1e300;
  for (double x : fluctuation) lo = std::min(lo, 1.0 + x);
  if (lo < floor_val) {
    // shrink the fluctuation about the base level so the minimum lands on floor
    double gamma = (1.0 - floor_val) / (1.0 - lo);
    for (double& x : fluctuation) x *= gamma;
  }
  for (double& x : fluctuation) x += 1.0;
  return fluctuation;
}

std::vector<double> fourier_boundary_positive(int n_b, double floor_val, Rng& rng) {
  if (n_b < 8) throw DimensionError("fourier_boundary_positive needs n_b >= 8");
  return positivity_shift(truncated_series(n_b, rng), floor_val);
}

std::vector<double> fourier_boundary_zero_mean(int n_b, Rng& rng) {
  if (n_b < 8) throw DimensionError("fourier_boundary_zero_mean needs n_b >= 8");
  return truncated_series(n_b, rng);
}

double harmonic_residual_max(const Grid& grid, std::span<const double> field,
                             int node_stride, double margin) {
  if (grid.dim != 2) throw DimensionError("harmonic_residual_max needs a 2-D grid");
  double inv_h2 = 1.0 / (grid.h * grid.h);
  double worst = 0.0;
  for (int64_t id : grid.interior_nodes) {
    int x = static_cast<int>(id % grid.n);
    int y = static_cast<int>(id / grid.n);
    if (x % node_stride != 0 || y % node_stride != 0) continue;
    double xy[3];
    grid.node_coords(id, xy);
    double dist = std::min(std::min(xy[0], 1 - xy[0]), std::min(xy[1], 1 - xy[1]));
    if (dist < margin) continue;
    double acc = 4.0 * inv_h2 * field[id] -
                 inv_h2 * (field[id - 1] + field[id + 1] + field[id - grid.n] +
                           field[id + grid.n]);
    worst = std::max(worst, std::abs(acc));
  }
  return worst;
}

}  // namespace lnf::fieldgen
