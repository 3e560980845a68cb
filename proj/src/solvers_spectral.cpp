#include <cmath>
#include <numbers>

#include "lnf/solvers.hpp"

namespace lnf::solvers {

using numerics::cplx;
using numerics::fft_1d;
using numerics::fft_2d;

namespace {

bool finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace

// ETDRK4 on [0, 2pi): linear symbol -nu m^2, nonlinear term -1/2 d_x(u^2)
// evaluated pseudo-spectrally under the 2/3 rule. The phi-function
// coefficients are contour averages over 32 points on a unit circle around
// each dt*L value, which avoids cancellation for small |dt*L|.
BurgersTrajectory etdrk4_burgers(std::span<const double> u0, double nu,
                                 double dt, double t_final, int n_record,
                                 bool advection) {
  int n = static_cast<int>(u0.size());
  if (nu <= 0 || dt <= 0 || t_final <= 0 || n_record < 1) {
    throw ContractError("burgers: need nu, dt, T > 0 and n_record >= 1");
  }
  int64_t steps_per_record =
      static_cast<int64_t>(std::llround(t_final / (dt * n_record)));
  if (steps_per_record < 1 ||
      std::abs(steps_per_record * dt * n_record - t_final) > 1e-9 * t_final) {
    throw ContractError("burgers: T must be an integer multiple of dt * n_record");
  }

  std::vector<double> m(n);  // signed wavenumbers
  for (int i = 0; i < n; ++i) m[i] = i <= n / 2 ? i : i - n;
  std::vector<double> deriv(n);  // i*m with the Nyquist mode zeroed
  for (int i = 0; i < n; ++i) deriv[i] = (i == n / 2) ? 0.0 : m[i];
  std::vector<char> dealias(n);
  for (int i = 0; i < n; ++i) dealias[i] = std::abs(m[i]) < n / 3.0 ? 1 : 0;

  // phi coefficients per mode
  std::vector<double> e_full(n), e_half(n), q(n), f1(n), f2(n), f3(n);
  const int n_contour = 32;
  for (int i = 0; i < n; ++i) {
    double l = -nu * m[i] * m[i] * dt;
    e_full[i] = std::exp(l);
    e_half[i] = std::exp(0.5 * l);
    cplx aq = 0, a1 = 0, a2 = 0, a3 = 0;
    for (int j = 0; j < n_contour; ++j) {
      double ang = std::numbers::pi * (j + 0.5) / n_contour;
      cplx z = l + cplx(std::cos(ang), std::sin(ang));
      cplx ez = std::exp(z);
      aq += (std::exp(0.5 * z) - 1.0) / z;
      a1 += (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / (z * z * z);
      a2 += (2.0 + z + ez * (-2.0 + z)) / (z * z * z);
      a3 += (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / (z * z * z);
    }
    // circle points come in conjugate pairs, so the means are real
    q[i] = dt * aq.real() / n_contour;
    f1[i] = dt * a1.real() / n_contour;
    f2[i] = dt * a2.real() / n_contour;
    f3[i] = dt * a3.real() / n_contour;
  }

  std::vector<cplx> v(n);
  for (int i = 0; i < n; ++i) v[i] = u0[i];
  fft_1d(v, false);

  std::vector<cplx> work(n), nv(n), na(n), nb(n), nc(n), av(n), bv(n), cv(n);
  auto nonlin = [&](const std::vector<cplx>& vin, std::vector<cplx>& out) {
    if (!advection) {
      std::fill(out.begin(), out.end(), cplx(0));
      return;
    }
    work = vin;
    for (int i = 0; i < n; ++i) {
      if (!dealias[i]) work[i] = 0;
    }
    fft_1d(work, true);
    for (int i = 0; i < n; ++i) {
      double ur = work[i].real();
      work[i] = ur * ur;
    }
    fft_1d(work, false);
    for (int i = 0; i < n; ++i) {
      out[i] = dealias[i] ? cplx(0, -0.5 * deriv[i]) * work[i] : cplx(0);
    }
  };

  BurgersTrajectory traj;
  double t = 0.0;
  for (int rec = 1; rec <= n_record; ++rec) {
    for (int64_t s = 0; s < steps_per_record; ++s) {
      nonlin(v, nv);
      for (int i = 0; i < n; ++i) av[i] = e_half[i] * v[i] + q[i] * nv[i];
      nonlin(av, na);
      for (int i = 0; i < n; ++i) bv[i] = e_half[i] * v[i] + q[i] * na[i];
      nonlin(bv, nb);
      for (int i = 0; i < n; ++i) {
        cv[i] = e_half[i] * av[i] + q[i] * (2.0 * nb[i] - nv[i]);
      }
      nonlin(cv, nc);
      for (int i = 0; i < n; ++i) {
        v[i] = e_full[i] * v[i] + nv[i] * f1[i] + 2.0 * (na[i] + nb[i]) * f2[i] +
               nc[i] * f3[i];
      }
      t += dt;
    }
    work = v;
    fft_1d(work, true);
    std::vector<double> snap(n);
    for (int i = 0; i < n; ++i) snap[i] = work[i].real();
    if (!finite(snap)) {
      throw SolverError("burgers: blow-up at t = " + std::to_string(t));
    }
    traj.times.push_back(double(rec) * t_final / n_record);
    traj.snapshots.push_back(std::move(snap));
  }
  return traj;
}

// Vorticity-streamfunction pseudo-spectral scheme on the [0,1)^2 torus.
// Per step: psi_hat = -omega_hat/|k|^2; u = perp-grad psi; the advection term
// is formed in physical space from 2/3-dealiased fields and treated
// explicitly; the viscous term is Crank-Nicolson.
std::vector<std::vector<double>> ns_rollout(std::span<const double> omega0,
                                            int n, const NsConfig& cfg) {
  if (static_cast<int64_t>(omega0.size()) != int64_t(n) * n) {
    throw DimensionError("ns: omega0 size mismatch");
  }
  if (cfg.dt <= 0 || cfg.t_final <= 0 || cfg.record_every <= 0) {
    throw ContractError("ns: need dt, T, record_every > 0");
  }
  int64_t steps_per_record =
      static_cast<int64_t>(std::llround(cfg.record_every / cfg.dt));
  int n_record = static_cast<int>(std::llround(cfg.t_final / cfg.record_every));
  if (steps_per_record < 1 || n_record < 1) {
    throw ContractError("ns: record_every must be a multiple of dt and <= T");
  }

  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<double> kx(n);
  for (int i = 0; i < n; ++i) kx[i] = two_pi * (i <= n / 2 ? i : i - n);
  std::vector<double> kderiv(n);
  for (int i = 0; i < n; ++i) kderiv[i] = (i == n / 2) ? 0.0 : kx[i];
  std::vector<char> keep(n);
  for (int i = 0; i < n; ++i) {
    double mi = std::abs(i <= n / 2 ? i : i - n);
    keep[i] = mi < n / 3.0 ? 1 : 0;
  }

  int64_t nn = int64_t(n) * n;
  std::vector<cplx> what(nn);
  for (int64_t i = 0; i < nn; ++i) what[i] = omega0[i];
  fft_2d(what, n, n, false);

  // forcing spectrum
  std::vector<cplx> fhat(nn, cplx(0));
  if (cfg.forced) {
    std::vector<cplx> f(nn);
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        double arg = two_pi * (double(x) / n + double(y) / n);
        f[int64_t(y) * n + x] = 0.1 * (std::sin(arg) + std::cos(arg));
      }
    }
    fft_2d(f, n, n, false);
    fhat = std::move(f);
  }

  std::vector<double> inv_k2(nn), visc_num(nn), visc_den(nn);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      double k2 = kx[x] * kx[x] + kx[y] * kx[y];
      int64_t id = int64_t(y) * n + x;
      inv_k2[id] = k2 == 0.0 ? 0.0 : 1.0 / k2;
      visc_num[id] = 1.0 - 0.5 * cfg.nu * cfg.dt * k2;
      visc_den[id] = 1.0 / (1.0 + 0.5 * cfg.nu * cfg.dt * k2);
    }
  }

  std::vector<cplx> ux(nn), uy(nn), wx(nn), wy(nn), nhat(nn);
  auto advection = [&](const std::vector<cplx>& w) {
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        int64_t id = int64_t(y) * n + x;
        cplx wd = keep[x] && keep[y] ? w[id] : cplx(0);
        cplx psi = -wd * inv_k2[id];
        // u = (d psi/dy, -d psi/dx)
        ux[id] = cplx(0, kderiv[y]) * psi;
        uy[id] = -cplx(0, kderiv[x]) * psi;
        wx[id] = cplx(0, kderiv[x]) * wd;
        wy[id] = cplx(0, kderiv[y]) * wd;
      }
    }
    fft_2d(ux, n, n, true);
    fft_2d(uy, n, n, true);
    fft_2d(wx, n, n, true);
    fft_2d(wy, n, n, true);
    for (int64_t i = 0; i < nn; ++i) {
      nhat[i] = ux[i].real() * wx[i].real() + uy[i].real() * wy[i].real();
    }
    fft_2d(nhat, n, n, false);
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        int64_t id = int64_t(y) * n + x;
        if (!(keep[x] && keep[y])) nhat[id] = 0;
      }
    }
  };

  std::vector<std::vector<double>> snapshots;
  std::vector<cplx> work(nn);
  double t = 0.0;
  for (int rec = 1; rec <= n_record; ++rec) {
    for (int64_t s = 0; s < steps_per_record; ++s) {
      advection(what);
      for (int64_t i = 0; i < nn; ++i) {
        what[i] = (visc_num[i] * what[i] - cfg.dt * nhat[i] + cfg.dt * fhat[i]) *
                  visc_den[i];
      }
      t += cfg.dt;
    }
    work = what;
    fft_2d(work, n, n, true);
    std::vector<double> snap(nn);
    for (int64_t i = 0; i < nn; ++i) snap[i] = work[i].real();
    if (!finite(snap)) {
      throw SolverError("ns: blow-up at t = " + std::to_string(t));
    }
    snapshots.push_back(std::move(snap));
  }
  return snapshots;
}

}  // namespace lnf::solvers
