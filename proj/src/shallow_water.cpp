#include "adatemp/shallow_water.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "adatemp/error.hpp"

namespace adatemp::sw {

namespace {

double minmod(double a, double b) {
  if (a * b <= 0.0) {
    return 0.0;
  }
  return std::abs(a) < std::abs(b) ? a : b;
}

double pressure(double g, double h) { return 0.5 * g * h * h; }

double velocity(double h, double hu) { return h > kDryThreshold ? hu / h : 0.0; }

// Edge values of one cell: "a" at the left edge, "b" at the right edge.
struct Edges {
  double h_a, h_b;
  double H_a, H_b;  // surface elevation
  double u_a, u_b;
};

struct Flux {
  double mass;
  double momentum;
};

// Central-upwind flux between hydrostatically reconstructed states.
Flux central_upwind(double h_l, double u_l, double h_r, double u_r, double g) {
  const double c_l = std::sqrt(g * h_l);
  const double c_r = std::sqrt(g * h_r);
  const double a_plus = std::max({u_l + c_l, u_r + c_r, 0.0});
  const double a_minus = std::min({u_l - c_l, u_r - c_r, 0.0});
  const double spread = a_plus - a_minus;
  if (spread <= 0.0) {
    return {0.0, 0.0};
  }
  const double q_l = h_l * u_l;
  const double q_r = h_r * u_r;
  const double f_l[2] = {q_l, q_l * u_l + pressure(g, h_l)};
  const double f_r[2] = {q_r, q_r * u_r + pressure(g, h_r)};
  const double w_diff = a_plus * a_minus / spread;
  const double w_flux = a_minus / spread;
  // Written as F_L + ... so that identical states return the physical flux
  // bit for bit.
  return {f_l[0] + w_flux * (f_l[0] - f_r[0]) + w_diff * (h_r - h_l),
          f_l[1] + w_flux * (f_l[1] - f_r[1]) + w_diff * (q_r - q_l)};
}

struct Residual {
  VectorXd dh;
  VectorXd dhu;
  double inflow;  // mass flux through x = 0 (positive into the domain)
};

Residual residual(const VectorXd& h, const VectorXd& hu, const VectorXd& zb,
                  const VectorXd& centers, const VectorXd& edges, double g) {
  const Index n = h.size();
  // Ghost cells: index 0 is the Neumann copy, n + 1 the reflective wall.
  std::vector<double> gh(n + 2), gH(n + 2), gu(n + 2), gx(n + 2);
  for (Index i = 0; i < n; ++i) {
    gh[i + 1] = h(i);
    gH[i + 1] = h(i) + zb(i);
    gu[i + 1] = velocity(h(i), hu(i));
    gx[i + 1] = centers(i);
  }
  gh[0] = gh[1];
  gH[0] = gH[1];
  gu[0] = gu[1];
  gx[0] = 2.0 * edges(0) - centers(0);
  gh[n + 1] = gh[n];
  gH[n + 1] = gH[n];
  gu[n + 1] = -gu[n];
  gx[n + 1] = 2.0 * edges(n) - centers(n - 1);

  std::vector<Edges> rec(n);
  for (Index i = 0; i < n; ++i) {
    const std::size_t c = i + 1;
    const double dl = gx[c] - gx[c - 1];
    const double dr = gx[c + 1] - gx[c];
    const double left = centers(i) - edges(i);
    const double right = edges(i + 1) - centers(i);
    auto slope = [&](const std::vector<double>& v) {
      return minmod((v[c] - v[c - 1]) / dl, (v[c + 1] - v[c]) / dr);
    };
    const double sh = slope(gh);
    const double sH = slope(gH);
    const double su = gh[c] > kDryThreshold ? slope(gu) : 0.0;
    rec[i] = {gh[c] - sh * left, gh[c] + sh * right, gH[c] - sH * left,
              gH[c] + sH * right, gu[c] - su * left, gu[c] + su * right};
    if (rec[i].h_a <= kDryThreshold) rec[i].u_a = 0.0;
    if (rec[i].h_b <= kDryThreshold) rec[i].u_b = 0.0;
  }

  // Faces 0..n; each stores flux plus the hydrostatic heights seen by the
  // cells on either side.
  std::vector<Flux> flux(n + 1);
  std::vector<double> hstar_left(n + 1), hstar_right(n + 1);
  auto face = [&](std::size_t f, double h_l, double H_l, double u_l, double h_r, double H_r,
                  double u_r) {
    const double z_star = std::max(H_l - h_l, H_r - h_r);
    const double hs_l = std::max(0.0, H_l - z_star);
    const double hs_r = std::max(0.0, H_r - z_star);
    flux[f] = central_upwind(hs_l, u_l, hs_r, u_r, g);
    hstar_left[f] = hs_l;
    hstar_right[f] = hs_r;
  };
  // Left boundary: the ghost mirrors cell 0 with zero slope.
  face(0, gh[1], gH[1], gu[1], rec[0].h_a, rec[0].H_a, rec[0].u_a);
  for (Index f = 1; f < n; ++f) {
    face(f, rec[f - 1].h_b, rec[f - 1].H_b, rec[f - 1].u_b, rec[f].h_a, rec[f].H_a,
         rec[f].u_a);
  }
  face(n, rec[n - 1].h_b, rec[n - 1].H_b, rec[n - 1].u_b, rec[n - 1].h_b, rec[n - 1].H_b,
       -rec[n - 1].u_b);
  flux[n].mass = 0.0;

  Residual out{VectorXd(n), VectorXd(n), flux[0].mass};
  for (Index i = 0; i < n; ++i) {
    const double dx = edges(i + 1) - edges(i);
    const auto& r = rec[i];
    out.dh(i) = -(flux[i + 1].mass - flux[i].mass) / dx;
    const double source = -0.5 * g * (r.h_a + r.h_b) * (r.H_b - r.H_a);
    out.dhu(i) = (-flux[i + 1].momentum + pressure(g, hstar_left[i + 1]) + flux[i].momentum -
                  pressure(g, hstar_right[i]) + source) /
                 dx;
  }
  return out;
}

void zero_dry_momentum(SWState& s) {
  for (Index i = 0; i < s.cells(); ++i) {
    if (s.h(i) <= kDryThreshold) {
      s.hu(i) = 0.0;
    }
  }
}

}  // namespace

VectorXd SWState::widths() const {
  return edges.tail(cells()) - edges.head(cells());
}

VectorXd SWState::centers() const {
  return 0.5 * (edges.tail(cells()) + edges.head(cells()));
}

double SWState::mass() const { return h.dot(widths()); }

void SWScenario::validate(double x_w) const {
  if (!(0.0 < x_w && x_w < x_r && x_r < x_d && x_d < x_b && x_b < length)) {
    throw ConfigError("scenario geometry must satisfy 0 < x_w < x_r < x_d < x_b < L");
  }
  if (n_uniform < 1 || !(g > 0.0) || hw < h0 || h0 < 0.0) {
    throw ConfigError("invalid shallow-water scenario parameters");
  }
}

double SWScenario::orography(double x) const {
  if (x <= x_r) return 0.0;
  if (x <= x_d) return z_d * (x - x_r) / (x_d - x_r);
  if (x <= x_b) return z_d + (z_b_level - z_d) * (x - x_d) / (x_b - x_d);
  return z_b_level;
}

SWState build_scenario(const SWScenario& s, double x_w) {
  s.validate(x_w);
  const Index n = s.n_uniform + 1;
  SWState state;
  state.edges.resize(n + 1);
  const double dx = s.x_b / static_cast<double>(s.n_uniform);
  for (Index i = 0; i < s.n_uniform; ++i) {
    state.edges(i) = dx * static_cast<double>(i);
  }
  state.edges(s.n_uniform) = s.x_b;
  state.edges(n) = s.length;
  state.h.resize(n);
  state.hu.resize(n);
  state.zb.resize(n);

  auto surface = [&](double x) { return (x >= x_w && x <= s.x_r) ? s.hw : s.h0; };
  const double speed = std::sqrt(s.g * (s.hw - s.h0));
  const std::array<double, 5> kinks{x_w, s.x_r, s.x_d, s.x_b, s.length};
  for (Index i = 0; i < n; ++i) {
    const double a = state.edges(i);
    const double b = state.edges(i + 1);
    std::vector<double> pts{a};
    for (double k : kinks) {
      if (k > a && k < b) pts.push_back(k);
    }
    pts.push_back(b);
    double z_int = 0.0;
    double H_int = 0.0;
    double block = 0.0;
    for (std::size_t p = 0; p + 1 < pts.size(); ++p) {
      const double l = pts[p];
      const double r = pts[p + 1];
      const double mid = 0.5 * (l + r);
      z_int += 0.5 * (s.orography(l) + s.orography(r)) * (r - l);
      H_int += surface(mid) * (r - l);
      if (mid >= x_w && mid <= s.x_r) block += r - l;
    }
    const double width = b - a;
    state.zb(i) = z_int / width;
    state.h(i) = std::max(H_int / width - state.zb(i), 0.0);
    // The raised block lies on flat ground, so its depth is H_w there.
    state.hu(i) = state.h(i) > kDryThreshold ? speed * s.hw * block / width : 0.0;
  }
  return state;
}

double cfl_dt(const SWState& state, double g, double cfl) {
  double max_speed = 0.0;
  bool wet = false;
  for (Index i = 0; i < state.cells(); ++i) {
    if (state.h(i) > kDryThreshold) {
      wet = true;
      const double u = state.hu(i) / state.h(i);
      max_speed = std::max(max_speed, std::abs(u) + std::sqrt(g * state.h(i)));
    }
  }
  if (!wet) {
    throw NumericalError("no wet cells");
  }
  return cfl * state.widths().minCoeff() / max_speed;
}

SWState sw_step(const SWState& state, double g, double dt) {
  if (!(dt > 0.0)) {
    throw ConfigError("sw_step: dt must be positive");
  }
  if (dt > cfl_dt(state, g) * (1.0 + 1e-12)) {
    throw NumericalError("unstable step: dt exceeds the CFL limit");
  }
  const VectorXd centers = state.centers();
  const Residual r0 = residual(state.h, state.hu, state.zb, centers, state.edges, g);
  VectorXd h1 = state.h + dt * r0.dh;
  VectorXd hu1 = state.hu + dt * r0.dhu;
  for (Index i = 0; i < h1.size(); ++i) {
    if (h1(i) <= kDryThreshold) hu1(i) = 0.0;
  }
  const Residual r1 = residual(h1, hu1, state.zb, centers, state.edges, g);
  SWState next = state;
  next.h = 0.5 * (state.h + h1 + dt * r1.dh);
  next.hu = 0.5 * (state.hu + hu1 + dt * r1.dhu);
  next.boundary_inflow += 0.5 * dt * (r0.inflow + r1.inflow);
  zero_dry_momentum(next);
  return next;
}

SWState sw_advance(const SWState& state, double g, double duration, double cfl) {
  SWState s = state;
  double remaining = duration;
  while (remaining > 0.0) {
    double dt = cfl_dt(s, g, cfl);
    if (dt >= remaining) {
      dt = remaining;
    }
    s = sw_step(s, g, dt);
    remaining -= dt;
    if (remaining < 1e-14 * std::max(1.0, duration)) {
      break;
    }
  }
  return s;
}

SWState clamp_nonnegative(const SWState& state) {
  SWState out = state;
  for (Index i = 0; i < out.cells(); ++i) {
    if (out.h(i) < 0.0) {
      out.h(i) = 0.0;
      out.hu(i) = 0.0;
    }
  }
  zero_dry_momentum(out);
  return out;
}

VectorXd to_vector(const SWState& state) {
  VectorXd v(2 * state.cells());
  v << state.h, state.hu;
  return v;
}

SWState from_vector(const VectorXd& v, const SWState& layout) {
  if (v.size() != 2 * layout.cells()) {
    throw ConfigError("shallow-water vector has the wrong length");
  }
  SWState s = layout;
  s.h = v.head(layout.cells());
  s.hu = v.tail(layout.cells());
  s.boundary_inflow = 0.0;
  return s;
}

}  // namespace adatemp::sw
