#pragma once

#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <fftw3.h>

#include "thinflow/bump.hpp"
#include "thinflow/errors.hpp"
#include "thinflow/grid.hpp"
#include "thinflow/parallel.hpp"

namespace thinflow {

enum class AdvectionScheme { arakawa, upwind };
enum class WallClosure { thom, jensen };

inline std::string to_string(AdvectionScheme s) { return s == AdvectionScheme::arakawa ? "arakawa" : "upwind"; }
inline std::string to_string(WallClosure c) { return c == WallClosure::thom ? "thom" : "jensen"; }

template <typename Scalar>
struct SolverConfig {
  Scalar nu = Scalar(0.01);
  Scalar dt = 0;               ///< 0 picks dt from cfl_target at each snapshot interval
  Scalar t_end = 1;
  Scalar snapshot_dt = Scalar(0.01);
  Scalar cfl_target = Scalar(0.3);
  Scalar diffusion_tol = Scalar(1e-10);  ///< relative residual allowed in the implicit solves
  AdvectionScheme advection = AdvectionScheme::arakawa;
  WallClosure closure = WallClosure::thom;
};

/// Vorticity and stream function on the grid. Rows 0 and n_sigma - 1 of w
/// hold the wall closure value and the outer value (zero).
///
/// The stream function is psi_p + carrier * sigma / (2 pi) where psi_p
/// vanishes on both boundary rows; carrier is set so that the discrete flux
/// through the outermost cell layer, i.e. the circulation at infinity, is
/// alpha. beta is the discrete circulation around the wall.
template <typename Scalar>
struct SolverState {
  GridArray<Scalar> w;
  GridArray<Scalar> psi;
  Scalar t = 0;
  Scalar alpha = 0;
  Scalar beta = 0;
  Scalar carrier = 0;
};

/// 5-point Poisson solver in (sigma, theta) with homogeneous Dirichlet rows
/// at both ends: real FFT in theta, then one tridiagonal solve in sigma per
/// mode, with the mode eigenvalue of the discrete second difference.
template <typename Scalar>
class PoissonSolver {
  static_assert(std::is_same_v<Scalar, double>, "the Poisson solver runs in double");

 public:
  using Cx = std::complex<Scalar>;

  explicit PoissonSolver(const MappedGrid<Scalar>& grid)
      : rows_(grid.n_sigma), cols_(grid.n_theta), modes_(grid.n_theta / 2 + 1), ds2_(grid.d_sigma * grid.d_sigma) {
    const int inner = rows_ - 2;
    cprime_.resize(inner, modes_);
    denom_.resize(inner, modes_);
    for (int k = 0; k < modes_; ++k) {
      const Scalar lam = (2 - 2 * std::cos(k * grid.d_theta)) / (grid.d_theta * grid.d_theta);
      const Scalar off = 1 / ds2_, diag = -2 / ds2_ - lam;
      Scalar cp = 0;
      for (int i = 0; i < inner; ++i) {
        const Scalar den = diag - off * cp;
        if (den == 0) throw NumericalAbort("singular tridiagonal system in the Poisson solve");
        denom_(i, k) = den;
        cp = off / den;
        cprime_(i, k) = cp;
      }
    }
    real_ = fftw_alloc_real(static_cast<std::size_t>(inner) * cols_);
    hat_ = fftw_alloc_complex(static_cast<std::size_t>(inner) * modes_);
    if (!real_ || !hat_) throw NumericalAbort("FFT buffer allocation failed");
    const int n[] = {cols_};
    std::lock_guard<std::mutex> lock(planner_mutex());
    fwd_ = fftw_plan_many_dft_r2c(1, n, inner, real_, nullptr, 1, cols_, hat_, nullptr, 1, modes_, FFTW_ESTIMATE);
    inv_ = fftw_plan_many_dft_c2r(1, n, inner, hat_, nullptr, 1, modes_, real_, nullptr, 1, cols_, FFTW_ESTIMATE);
    if (!fwd_ || !inv_) throw NumericalAbort("FFT planning failed");
  }
  PoissonSolver(const PoissonSolver&) = delete;
  PoissonSolver& operator=(const PoissonSolver&) = delete;
  ~PoissonSolver() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
    fftw_free(real_);
    fftw_free(hat_);
  }

  /// (D_ss + D_tt) psi = rhs on rows 1..n-2; psi = 0 on rows 0 and n-1.
  /// Not reentrant: one solve at a time per solver.
  void solve(const GridArray<Scalar>& rhs, GridArray<Scalar>& psi) const {
    const int inner = rows_ - 2;
    Eigen::Map<GridArray<Scalar>> real(real_, inner, cols_);
    real = rhs.middleRows(1, inner);
    fftw_execute(fwd_);
    Eigen::Map<GridArray<Cx>> hat(reinterpret_cast<Cx*>(hat_), inner, modes_);
    const Scalar off = 1 / ds2_;
    const int blocks = (modes_ + kBlock - 1) / kBlock;
    parallel_for(static_cast<std::size_t>(blocks), [&](std::size_t b) {
      const int k0 = static_cast<int>(b) * kBlock, k1 = std::min(modes_, k0 + kBlock);
      for (int k = k0; k < k1; ++k) hat(0, k) /= denom_(0, k);
      for (int i = 1; i < inner; ++i)
        for (int k = k0; k < k1; ++k) hat(i, k) = (hat(i, k) - off * hat(i - 1, k)) / denom_(i, k);
      for (int i = inner - 2; i >= 0; --i)
        for (int k = k0; k < k1; ++k) hat(i, k) -= cprime_(i, k) * hat(i + 1, k);
    });
    fftw_execute(inv_);
    psi.resize(rows_, cols_);
    psi.row(0).setZero();
    psi.row(rows_ - 1).setZero();
    psi.middleRows(1, inner) = real / Scalar(cols_);
  }

 private:
  static std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
  }

  static constexpr int kBlock = 64;
  int rows_, cols_, modes_;
  Scalar ds2_;
  GridArray<Scalar> cprime_, denom_;  // row i, mode k
  double* real_ = nullptr;
  fftw_complex* hat_ = nullptr;
  fftw_plan fwd_ = nullptr, inv_ = nullptr;
};

/// Discrete circulation around the closed grid curve between rows i and i+1:
/// sum_j (psi_{i+1,j} - psi_{i,j}) / d_sigma * d_theta.
template <typename Scalar>
Scalar layer_circulation(const GridArray<Scalar>& psi, const MappedGrid<Scalar>& grid, int i) {
  return (psi.row(i + 1) - psi.row(i)).sum() * grid.d_theta / grid.d_sigma;
}

/// Sum of w times cell area over interior rows (the discrete vorticity mass).
template <typename Scalar>
Scalar vorticity_mass(const GridArray<Scalar>& w, const MappedGrid<Scalar>& grid) {
  const int n = grid.n_sigma;
  Scalar total = 0;
  for (int i = 1; i < n - 1; ++i) total += (w.row(i) / grid.factor.row(i)).sum();
  return total * grid.d_sigma * grid.d_theta;
}

/// Row index whose outer cell layer is the grid circle nearest |xi| = r_max / 2.
template <typename Scalar>
int far_circulation_row(const MappedGrid<Scalar>& grid) {
  return static_cast<int>(std::lround(std::log(grid.r_max / 2) / grid.d_sigma));
}

/// Solves g (D_ss + D_tt) psi = w for the interior, adds the circulation
/// carrier, and updates beta.
template <typename Scalar>
void poisson_streamfunction(SolverState<Scalar>& state, const MappedGrid<Scalar>& grid,
                            const PoissonSolver<Scalar>& solver) {
  const int n = grid.n_sigma;
  GridArray<Scalar> rhs(n, grid.n_theta);
  rhs.row(0).setZero();
  rhs.row(n - 1).setZero();
  rhs.middleRows(1, n - 2) = state.w.middleRows(1, n - 2) / grid.factor.middleRows(1, n - 2);
  solver.solve(rhs, state.psi);
  const Scalar outer_flux = layer_circulation(state.psi, grid, n - 2);
  state.carrier = state.alpha - outer_flux;
  const Scalar two_pi = 2 * std::numbers::pi_v<Scalar>;
  for (int i = 0; i < n; ++i) state.psi.row(i) += state.carrier * grid.sigma(i) / two_pi;
  state.beta = layer_circulation(state.psi, grid, 0);
}

/// No-slip wall vorticity from the stream function next to the wall, with
/// psi = 0 and d_sigma psi = 0 on the wall:
///   Thom:    w_0 = g_0 * 2 psi_1 / ds^2
///   Jensen:  w_0 = g_0 * (8 psi_1 - psi_2) / (2 ds^2)
template <typename Scalar>
void wall_vorticity(SolverState<Scalar>& state, const MappedGrid<Scalar>& grid, WallClosure closure) {
  const Scalar ds2 = grid.d_sigma * grid.d_sigma;
  if (closure == WallClosure::thom)
    state.w.row(0) = grid.factor.row(0) * 2 * state.psi.row(1) / ds2;
  else
    state.w.row(0) = grid.factor.row(0) * (8 * state.psi.row(1) - state.psi.row(2)) / (2 * ds2);
}

/// Samples omega0 on the interior nodes; beta(0) follows from alpha and the
/// discrete mass.
template <typename Scalar>
SolverState<Scalar> init_state(const MappedGrid<Scalar>& grid, const FlowData<Scalar>& flow,
                               const PoissonSolver<Scalar>& solver, WallClosure closure = WallClosure::thom) {
  const Scalar outer_radius = grid.family.inverse(Complex<Scalar>(grid.r_max / 2, 0)).real();
  for (const auto& b : flow.omega0.bumps()) {
    if (!(flow.omega0.clearance(b) > 0) || !grid.family.exterior(b.center))
      throw ConfigError("bump support is not exterior to the obstacle");
    if (std::abs(b.center) + b.radius >= outer_radius)
      throw ConfigError("bump support must lie inside half the outer grid radius");
  }
  SolverState<Scalar> s;
  s.w = GridArray<Scalar>::Zero(grid.n_sigma, grid.n_theta);
  for (int i = 1; i < grid.n_sigma - 1; ++i)
    for (int j = 0; j < grid.n_theta; ++j) s.w(i, j) = flow.omega0(grid.x(i, j));
  s.alpha = flow.alpha();
  poisson_streamfunction(s, grid, solver);
  wall_vorticity(s, grid, closure);
  return s;
}

/// Nodal (d_sigma psi, d_theta psi): centered in the interior, second-order
/// one-sided on the two boundary rows.
template <typename Scalar>
void stream_gradient(const GridArray<Scalar>& psi, const MappedGrid<Scalar>& grid, GridArray<Scalar>& ps,
                     GridArray<Scalar>& pt) {
  const int n = grid.n_sigma, m = grid.n_theta;
  ps.resize(n, m);
  pt.resize(n, m);
  const Scalar hs = grid.d_sigma, ht = grid.d_theta;
  ps.row(0) = (-3 * psi.row(0) + 4 * psi.row(1) - psi.row(2)) / (2 * hs);
  ps.row(n - 1) = (3 * psi.row(n - 1) - 4 * psi.row(n - 2) + psi.row(n - 3)) / (2 * hs);
  ps.middleRows(1, n - 2) = (psi.bottomRows(n - 2) - psi.topRows(n - 2)) / (2 * hs);
  pt.middleCols(1, m - 2) = (psi.rightCols(m - 2) - psi.leftCols(m - 2)) / (2 * ht);
  pt.col(0) = (psi.col(1) - psi.col(m - 1)) / (2 * ht);
  pt.col(m - 1) = (psi.col(0) - psi.col(m - 2)) / (2 * ht);
}

/// Physical velocity from mapped stream-function gradients:
/// u = i conj(zeta') (psi_sigma + i psi_theta).
template <typename Scalar>
inline Complex<Scalar> physical_velocity(const Complex<Scalar>& zeta_prime, Scalar ps, Scalar pt) {
  return Complex<Scalar>(0, 1) * std::conj(zeta_prime) * Complex<Scalar>(ps, pt);
}

/// Velocity at arbitrary exterior points inside the grid, by bilinear
/// interpolation of the nodal stream gradient and exact map derivatives.
template <typename Scalar>
class VelocitySampler {
 public:
  VelocitySampler(const MappedGrid<Scalar>& grid, const GridArray<Scalar>& psi) : grid_(&grid) {
    stream_gradient(psi, grid, ps_, pt_);
  }

  Complex<Scalar> operator()(const Complex<Scalar>& p) const {
    if (grid_->epsilon() > 0 && !grid_->family.exterior(p)) return {};
    auto [s, t] = grid_->locate(p);
    if (s < 0) s = 0;
    const int n = grid_->n_sigma, m = grid_->n_theta;
    if (!(s <= n - 1)) throw DomainError("point lies outside the computational grid");
    int i = std::min(static_cast<int>(s), n - 2);
    int j = static_cast<int>(t);
    const Scalar fs = s - i, ft = t - j;
    j %= m;
    const int j1 = (j + 1) % m;
    auto lerp = [&](const GridArray<Scalar>& a) {
      return (1 - fs) * ((1 - ft) * a(i, j) + ft * a(i, j1)) + fs * ((1 - ft) * a(i + 1, j) + ft * a(i + 1, j1));
    };
    const auto zp = grid_->family.deriv(p) / grid_->family.eval(p);
    return physical_velocity(zp, lerp(ps_), lerp(pt_));
  }

  Complex<Scalar> at_node(int i, int j) const { return physical_velocity(grid_->log_deriv(i, j), ps_(i, j), pt_(i, j)); }

 private:
  const MappedGrid<Scalar>* grid_;
  GridArray<Scalar> ps_, pt_;
};

/// Largest advective Courant number dt * g (|psi_theta|/ds + |psi_sigma|/dt)
/// over interior nodes, for unit dt.
template <typename Scalar>
Scalar courant_rate(const GridArray<Scalar>& psi, const MappedGrid<Scalar>& grid) {
  GridArray<Scalar> ps, pt;
  stream_gradient(psi, grid, ps, pt);
  const int n = grid.n_sigma;
  const auto g = grid.factor.middleRows(1, n - 2);
  return (g * (pt.middleRows(1, n - 2).abs() / grid.d_sigma + ps.middleRows(1, n - 2).abs() / grid.d_theta))
      .maxCoeff();
}

namespace detail {

// Arakawa's energy- and enstrophy-conserving Jacobian psi_s w_t - psi_t w_s.
template <typename Scalar>
void arakawa_rhs(const GridArray<Scalar>& psi, const GridArray<Scalar>& w, const MappedGrid<Scalar>& grid,
                 GridArray<Scalar>& out) {
  const int n = grid.n_sigma, m = grid.n_theta;
  const Scalar inv = 1 / (12 * grid.d_sigma * grid.d_theta);
  out.setZero(n, m);
  parallel_for(static_cast<std::size_t>(n - 2), [&](std::size_t r) {
    const int i = static_cast<int>(r) + 1;
    for (int j = 0; j < m; ++j) {
      const int jp = (j + 1) % m, jm = (j + m - 1) % m;
      const Scalar jpp = (psi(i + 1, j) - psi(i - 1, j)) * (w(i, jp) - w(i, jm)) -
                         (psi(i, jp) - psi(i, jm)) * (w(i + 1, j) - w(i - 1, j));
      const Scalar jpx = psi(i + 1, j) * (w(i + 1, jp) - w(i + 1, jm)) - psi(i - 1, j) * (w(i - 1, jp) - w(i - 1, jm)) -
                         psi(i, jp) * (w(i + 1, jp) - w(i - 1, jp)) + psi(i, jm) * (w(i + 1, jm) - w(i - 1, jm));
      const Scalar jxp = w(i, jp) * (psi(i + 1, jp) - psi(i - 1, jp)) - w(i, jm) * (psi(i + 1, jm) - psi(i - 1, jm)) -
                         w(i + 1, j) * (psi(i + 1, jp) - psi(i + 1, jm)) + w(i - 1, j) * (psi(i - 1, jp) - psi(i - 1, jm));
      out(i, j) = -grid.factor(i, j) * (jpp + jpx + jxp) * inv;
    }
  });
}

template <typename Scalar>
inline Scalar van_leer(Scalar a, Scalar b) {
  return a * b > 0 ? 2 * a * b / (a + b) : Scalar(0);
}

// Conservative upwind fluxes with van Leer limited reconstruction. Face
// velocities come from corner-averaged psi differences, so their discrete
// divergence vanishes exactly.
template <typename Scalar>
void upwind_rhs(const GridArray<Scalar>& psi, const GridArray<Scalar>& w, const MappedGrid<Scalar>& grid,
                GridArray<Scalar>& out) {
  const int n = grid.n_sigma, m = grid.n_theta;
  const Scalar hs = grid.d_sigma, ht = grid.d_theta;
  auto slope_s = [&](int i, int j) {
    if (i <= 0 || i >= n - 1) return Scalar(0);
    return van_leer(w(i, j) - w(i - 1, j), w(i + 1, j) - w(i, j));
  };
  auto slope_t = [&](int i, int j) {
    return van_leer(w(i, j) - w(i, (j + m - 1) % m), w(i, (j + 1) % m) - w(i, j));
  };
  // flux through the sigma-face between rows i and i+1 at column j
  auto flux_s = [&](int i, int j) {
    const int jp = (j + 1) % m, jm = (j + m - 1) % m;
    const Scalar u = -(psi(i, jp) + psi(i + 1, jp) - psi(i, jm) - psi(i + 1, jm)) / (4 * ht);
    const Scalar face = u >= 0 ? w(i, j) + slope_s(i, j) / 2 : w(i + 1, j) - slope_s(i + 1, j) / 2;
    return u * face;
  };
  // flux through the theta-face between columns j and j+1 at row i
  auto flux_t = [&](int i, int j) {
    const int jp = (j + 1) % m;
    const Scalar v = (psi(i + 1, j) + psi(i + 1, jp) - psi(i - 1, j) - psi(i - 1, jp)) / (4 * hs);
    const Scalar face = v >= 0 ? w(i, j) + slope_t(i, j) / 2 : w(i, jp) - slope_t(i, jp) / 2;
    return v * face;
  };
  out.setZero(n, m);
  parallel_for(static_cast<std::size_t>(n - 2), [&](std::size_t r) {
    const int i = static_cast<int>(r) + 1;
    for (int j = 0; j < m; ++j) {
      const int jm = (j + m - 1) % m;
      const Scalar div = (flux_s(i, j) - flux_s(i - 1, j)) / hs + (flux_t(i, j) - flux_t(i, jm)) / ht;
      out(i, j) = -grid.factor(i, j) * div;
    }
  });
}

// Solves the tridiagonal system lo x_{k-1} + di x_k + up x_{k+1} = rhs,
// k = 0..n-1, with lo[0] and up[n-1] ignored.
template <typename Scalar>
void thomas(const std::vector<Scalar>& lo, const std::vector<Scalar>& di, const std::vector<Scalar>& up,
            std::vector<Scalar>& x) {
  const std::size_t n = di.size();
  std::vector<Scalar> cp(n);
  Scalar den = di[0];
  cp[0] = up[0] / den;
  x[0] /= den;
  for (std::size_t k = 1; k < n; ++k) {
    den = di[k] - lo[k] * cp[k - 1];
    cp[k] = up[k] / den;
    x[k] = (x[k] - lo[k] * x[k - 1]) / den;
  }
  for (std::size_t k = n - 1; k-- > 0;) x[k] -= cp[k] * x[k + 1];
}

// Periodic tridiagonal solve (Sherman-Morrison on the corner entries).
template <typename Scalar>
void cyclic_thomas(const std::vector<Scalar>& lo, const std::vector<Scalar>& di, const std::vector<Scalar>& up,
                   std::vector<Scalar>& x) {
  const std::size_t n = di.size();
  const Scalar alpha = up[n - 1], beta = lo[0];  // corners A(n-1,0) and A(0,n-1)
  const Scalar gamma = -di[0];
  std::vector<Scalar> d2(di);
  d2[0] -= gamma;
  d2[n - 1] -= alpha * beta / gamma;
  std::vector<Scalar> z(n, 0);
  z[0] = gamma;
  z[n - 1] = alpha;
  thomas(lo, d2, up, x);
  thomas(lo, d2, up, z);
  const Scalar fact = (x[0] + beta * x[n - 1] / gamma) / (1 + z[0] + beta * z[n - 1] / gamma);
  for (std::size_t k = 0; k < n; ++k) x[k] -= fact * z[k];
}

}  // namespace detail

/// Backward-Euler diffusion dw/dt = nu g (D_ss + D_tt) w on interior rows,
/// factored as (I - tau nu g D_tt) then (I - tau nu g D_ss). The wall row
/// and outer row of w act as Dirichlet data.
template <typename Scalar>
void implicit_diffusion(GridArray<Scalar>& w, const MappedGrid<Scalar>& grid, Scalar nu, Scalar tau, Scalar tol) {
  const int n = grid.n_sigma, m = grid.n_theta;
  const Scalar rt = tau * nu / (grid.d_theta * grid.d_theta);
  const Scalar rs = tau * nu / (grid.d_sigma * grid.d_sigma);
  auto check = [tol](Scalar resid, Scalar scale) {
    if (!(resid <= tol * std::max(Scalar(1), scale)))
      throw NumericalAbort("implicit diffusion solve residual " + std::to_string(static_cast<double>(resid)));
  };
  parallel_for(static_cast<std::size_t>(n - 2), [&](std::size_t r) {
    const int i = static_cast<int>(r) + 1;
    std::vector<Scalar> lo(m), di(m), up(m), x(m);
    for (int j = 0; j < m; ++j) {
      const Scalar c = rt * grid.factor(i, j);
      lo[j] = up[j] = -c;
      di[j] = 1 + 2 * c;
      x[j] = w(i, j);
    }
    detail::cyclic_thomas(lo, di, up, x);
    Scalar resid = 0, scale = 0;
    for (int j = 0; j < m; ++j) {
      resid = std::max(resid, std::abs(lo[j] * x[(j + m - 1) % m] + di[j] * x[j] + up[j] * x[(j + 1) % m] - w(i, j)));
      scale = std::max(scale, std::abs(w(i, j)));
    }
    check(resid, scale);
    for (int j = 0; j < m; ++j) w(i, j) = x[j];
  });
  // Radial solves, one Thomas sweep per column, batched over column blocks
  // so the inner loop runs along rows.
  constexpr int block = 64;
  const int k = n - 2;
  GridArray<Scalar> cp(k, m), rhs(k, m);
  const int blocks = (m + block - 1) / block;
  parallel_for(static_cast<std::size_t>(blocks), [&](std::size_t bb) {
    const int j0 = static_cast<int>(bb) * block, j1 = std::min(m, j0 + block);
    auto coef = [&](int q, int j) { return rs * grid.factor(q + 1, j); };
    for (int q = 0; q < k; ++q)
      for (int j = j0; j < j1; ++j) {
        Scalar b = w(q + 1, j);
        if (q == 0) b += coef(0, j) * w(0, j);
        if (q == k - 1) b += coef(k - 1, j) * w(n - 1, j);
        rhs(q, j) = b;
      }
    for (int j = j0; j < j1; ++j) {
      const Scalar c = coef(0, j), den = 1 + 2 * c;
      cp(0, j) = -c / den;
      w(1, j) = rhs(0, j) / den;
    }
    for (int q = 1; q < k; ++q)
      for (int j = j0; j < j1; ++j) {
        const Scalar c = coef(q, j), den = 1 + 2 * c + c * cp(q - 1, j);
        cp(q, j) = -c / den;
        w(q + 1, j) = (rhs(q, j) + c * w(q, j)) / den;
      }
    for (int q = k - 2; q >= 0; --q)
      for (int j = j0; j < j1; ++j) w(q + 1, j) -= cp(q, j) * w(q + 2, j);
    Scalar resid = 0, scale = 0;
    for (int q = 0; q < k; ++q)
      for (int j = j0; j < j1; ++j) {
        const Scalar c = coef(q, j);
        const Scalar left = q > 0 ? w(q, j) : Scalar(0);
        const Scalar right = q + 1 < k ? w(q + 2, j) : Scalar(0);
        resid = std::max(resid, std::abs((1 + 2 * c) * w(q + 1, j) - c * (left + right) - rhs(q, j)));
        scale = std::max(scale, std::abs(rhs(q, j)));
      }
    check(resid, scale);
  });
}

/// Everything a run needs besides the state: grid, Poisson solver, config.
template <typename Scalar>
struct Stepper {
  const MappedGrid<Scalar>& grid;
  const PoissonSolver<Scalar>& poisson;
  SolverConfig<Scalar> config;

  void advection_rhs(const SolverState<Scalar>& s, GridArray<Scalar>& out) const {
    if (config.advection == AdvectionScheme::arakawa)
      detail::arakawa_rhs(s.psi, s.w, grid, out);
    else
      detail::upwind_rhs(s.psi, s.w, grid, out);
  }

  void refresh(SolverState<Scalar>& s) const {
    poisson_streamfunction(s, grid, poisson);
    wall_vorticity(s, grid, config.closure);
  }

  /// One step: Heun advection, closure, backward-Euler diffusion with the
  /// wall value as Dirichlet data, closure again. Refuses the step when the
  /// Courant number exceeds 1. `rate` may carry courant_rate(s.psi) if the
  /// caller already has it.
  void advance(SolverState<Scalar>& s, Scalar dt, Scalar rate = -1) const {
    const Scalar courant = dt * (rate >= 0 ? rate : courant_rate(s.psi, grid));
    if (!(courant <= 1)) {
      std::ostringstream msg;
      msg << "CFL violation at t = " << s.t << ": Courant number " << courant << " with dt = " << dt
          << "; required dt <= " << dt / courant;
      throw NumericalAbort(msg.str());
    }
    const int n = grid.n_sigma;
    GridArray<Scalar> k1, k2;
    advection_rhs(s, k1);
    SolverState<Scalar> mid = s;
    mid.w.middleRows(1, n - 2) += dt * k1.middleRows(1, n - 2);
    refresh(mid);
    advection_rhs(mid, k2);
    s.w.middleRows(1, n - 2) += dt / 2 * (k1.middleRows(1, n - 2) + k2.middleRows(1, n - 2));
    refresh(s);
    implicit_diffusion(s.w, grid, config.nu, dt, config.diffusion_tol);
    refresh(s);
    s.t += dt;
    if (!s.w.allFinite()) throw NumericalAbort("non-finite vorticity at t = " + std::to_string(static_cast<double>(s.t)));
  }
};

}  // namespace thinflow
