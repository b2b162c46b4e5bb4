#include "vsbbm/fkpp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace vsbbm {

namespace {

double clamp01(double u) { return u < 0.0 ? 0.0 : (u > 1.0 ? 1.0 : u); }

/// Solves du/ds = F(u) over time h.
double react(double u, double h, const BranchingLaw& law, ReactionScheme scheme) {
  if (scheme == ReactionScheme::Euler) {
    return clamp01(u + h * (law.is_binary() ? u - u * u : law.nonlinearity(u)));
  }
  if (law.is_binary()) {
    const double g = std::exp(h);
    return clamp01(u * g / (1.0 - u + u * g));
  }
  constexpr int substeps = 4;
  const double k = h / substeps;
  for (int i = 0; i < substeps; ++i) {
    const double k1 = law.nonlinearity(clamp01(u));
    const double k2 = law.nonlinearity(clamp01(u + 0.5 * k * k1));
    const double k3 = law.nonlinearity(clamp01(u + 0.5 * k * k2));
    const double k4 = law.nonlinearity(clamp01(u + k * k3));
    u = clamp01(u + k / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
  }
  return u;
}

void shift_window(FkppField& field, long cells) {
  auto& v = field.values;
  const long n = static_cast<long>(v.size());
  if (cells == 0) return;
  if (std::abs(cells) >= n) throw InternalError("window shift larger than the window");
  if (cells > 0) {
    const double pad = v.back();
    v.erase(v.begin(), v.begin() + cells);
    v.insert(v.end(), static_cast<std::size_t>(cells), pad);
  } else {
    const double pad = v.front();
    v.erase(v.end() + cells, v.end());
    v.insert(v.begin(), static_cast<std::size_t>(-cells), pad);
  }
  const double d = field.dx * static_cast<double>(cells);
  field.left_edge += d;
  field.window_shift_total += d;
}

void check_field(const FkppField& field, bool monotone) {
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    const double u = field.values[i];
    if (!(u >= 0.0 && u <= 1.0)) throw InternalError("field left [0,1]");
    if (monotone && i > 0 && u > field.values[i - 1] + 1e-14) {
      throw InternalError("monotone field lost monotonicity");
    }
  }
}

}  // namespace

DiffusionScheme diffusion_scheme_from_string(const std::string& name) {
  if (name == "explicit") return DiffusionScheme::Explicit;
  if (name == "crank-nicolson" || name == "cn") return DiffusionScheme::CrankNicolson;
  throw std::invalid_argument("unknown diffusion scheme '" + name + "' (expected explicit, crank-nicolson)");
}

ReactionScheme reaction_scheme_from_string(const std::string& name) {
  if (name == "euler") return ReactionScheme::Euler;
  if (name == "exact") return ReactionScheme::Exact;
  throw std::invalid_argument("unknown reaction scheme '" + name + "' (expected euler, exact)");
}

double GridSpec::default_width(double horizon) const {
  return width.value_or(12.0 * std::sqrt(horizon) + 40.0);
}

double FkppField::value_at(double xq) const {
  if (values.empty()) return 0.0;
  const double pos = (xq - left_edge) / dx;
  if (pos <= 0.0) return values.front();
  const auto last = static_cast<double>(values.size() - 1);
  if (pos >= last) return values.back();
  const auto i = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(i);
  return values[i] + frac * (values[i + 1] - values[i]);
}

InitialCondition InitialCondition::heaviside(double x0) {
  return {"heaviside", [x0](double x) { return x < x0 ? 1.0 : (x == x0 ? 0.5 : 0.0); }, true};
}

InitialCondition InitialCondition::smoothed_heaviside(double width) {
  if (!(width > 0.0)) throw std::invalid_argument("smoothed_heaviside: width must be positive");
  return {"smoothed-heaviside", [width](double x) { return x < 0.0 ? 1.0 - std::exp(x / width) : 0.0; }, true};
}

InitialCondition InitialCondition::laplace_steps(std::vector<double> weights, std::vector<double> thresholds) {
  return laplace_steps_scaled(std::move(weights), std::move(thresholds), 1.0);
}

InitialCondition InitialCondition::laplace_steps_scaled(std::vector<double> weights, std::vector<double> thresholds,
                                                        double scale) {
  if (weights.size() != thresholds.size()) throw std::invalid_argument("laplace_steps: size mismatch");
  for (double c : weights) {
    if (!(c >= 0.0)) throw std::invalid_argument("laplace_steps: weights must be non-negative");
  }
  if (!(scale > 0.0)) throw std::invalid_argument("laplace_steps: scale must be positive");
  auto u0 = [weights, thresholds, scale](double x) {
    // phi(-x s) = sum_l c_l 1_{-x s >= u_l}
    const double y = -x * scale;
    double phi = 0.0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      if (y >= thresholds[l]) phi += weights[l];
    }
    return 1.0 - std::exp(-phi);
  };
  return {"laplace-steps", u0, true};
}

InitialCondition InitialCondition::constant(double value) {
  if (!(value >= 0.0 && value <= 1.0)) throw std::invalid_argument("constant initial value outside [0,1]");
  return {"constant", [value](double) { return value; }, true};
}

FkppField make_field(const InitialCondition& init, double left_edge, double right_edge, double dx) {
  if (!(dx > 0.0)) throw ConfigurationError("dx must be positive");
  if (!(right_edge > left_edge)) throw ConfigurationError("window must have positive width");
  FkppField field;
  field.dx = dx;
  field.left_edge = left_edge;
  const auto n = static_cast<std::size_t>(std::ceil((right_edge - left_edge) / dx - 1e-9)) + 1;
  field.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) field.values[i] = clamp01(init.u0(field.x(i)));
  return field;
}

double fkpp_nonlinearity(double u, const BranchingLaw& law) { return law.nonlinearity(u); }

void step(FkppField& field, double sigma_sq, double dt, const BranchingLaw& law, DiffusionScheme diffusion,
          ReactionScheme reaction) {
  auto& u = field.values;
  const std::size_t n = u.size();
  if (n < 3) throw ConfigurationError("field needs at least three nodes");
  const double half = 0.5 * dt;
  const double mu = sigma_sq * dt / (field.dx * field.dx);

  for (double& v : u) v = react(v, half, law, reaction);

  thread_local std::vector<double> scratch;
  scratch.resize(n);
  if (diffusion == DiffusionScheme::Explicit) {
    const double r = 0.5 * mu;
    scratch[0] = u[0];
    scratch[n - 1] = u[n - 1];
    for (std::size_t i = 1; i + 1 < n; ++i) {
      scratch[i] = clamp01(u[i] + r * (u[i + 1] - 2.0 * u[i] + u[i - 1]));
    }
  } else {
    // (I - mu/4 D) u' = (I + mu/4 D) u on the interior, edges held fixed.
    const double a = 0.25 * mu;
    thread_local std::vector<double> cprime;
    cprime.resize(n);
    scratch[0] = u[0];
    scratch[n - 1] = u[n - 1];
    const double diag = 1.0 + 2.0 * a;
    double prev_c = 0.0;
    double prev_d = u[0];
    // Thomas algorithm with the known edge values folded into the right-hand side.
    for (std::size_t i = 1; i + 1 < n; ++i) {
      double rhs = u[i] + a * (u[i + 1] - 2.0 * u[i] + u[i - 1]);
      if (i == 1) rhs += a * u[0];
      if (i + 2 == n) rhs += a * u[n - 1];
      const double lower = i == 1 ? 0.0 : -a;
      const double denom = diag - lower * prev_c;
      const double c = (i + 2 == n) ? 0.0 : -a / denom;
      const double d = (rhs - lower * prev_d) / denom;
      cprime[i] = c;
      scratch[i] = d;
      prev_c = c;
      prev_d = d;
    }
    for (std::size_t i = n - 2; i >= 2; --i) scratch[i - 1] -= cprime[i - 1] * scratch[i];
    for (std::size_t i = 1; i + 1 < n; ++i) scratch[i] = clamp01(scratch[i]);
  }
  u.swap(scratch);

  for (double& v : u) v = react(v, half, law, reaction);
  field.current_time += dt;
}

std::optional<double> front_position(const FkppField& field, double level) {
  const auto& u = field.values;
  if (u.size() < 2) return std::nullopt;
  // Rightmost node at or above the level; the crossing lies to its right.
  std::size_t i = u.size();
  while (i > 0 && u[i - 1] < level) --i;
  if (i == 0 || i == u.size()) return std::nullopt;
  const std::size_t k = i - 1;
  const double above = u[k];
  const double below = u[k + 1];
  const double frac = (above - level) / (above - below);
  return field.x(k) + frac * field.dx;
}

FkppSolver::FkppSolver(SpeedProfile profile, BranchingLaw law, GridSpec grid)
    : profile_(std::move(profile)), law_(std::move(law)), grid_(grid) {
  if (!(grid_.dx > 0.0)) throw ConfigurationError("dx must be positive");
  if (!(grid_.dt_factor > 0.0)) throw ConfigurationError("dt factor must be positive");
  const double limit = grid_.diffusion == DiffusionScheme::Explicit ? 1.0 : 2.0;
  if (grid_.dt_factor > limit) {
    throw ConfigurationError("time step violates the stability bound dt <= " + std::to_string(limit) +
                             " dx^2 / sigma^2_max");
  }
  width_ = grid_.default_width(profile_.horizon());
  if (!(width_ > 20.0 * grid_.dx)) throw ConfigurationError("window too narrow for the grid spacing");
  const double dt_max = grid_.dt_factor * grid_.dx * grid_.dx / profile_.max_sigma_sq();
  steps_ = static_cast<std::size_t>(std::ceil(profile_.horizon() / dt_max));
  if (steps_ % 2) ++steps_;  // lands the speed change on a step boundary
  dt_ = steps_ ? profile_.horizon() / static_cast<double>(steps_) : 0.0;
}

double FkppSolver::coefficient(double s) const {
  const double real = profile_.horizon() - s - 0.5 * dt_;
  return profile_.sigma_squared(std::clamp(real, 0.0, profile_.horizon()));
}

FkppField FkppSolver::initial_field(const InitialCondition& init) const {
  // Put x = 0 on a node so step data is not shifted by a fraction of a cell.
  const double half = std::ceil(0.5 * width_ / grid_.dx) * grid_.dx;
  return make_field(init, -half, half, grid_.dx);
}

void FkppSolver::follow(FkppField& field) const {
  if (!grid_.follow_front) return;
  const auto front = front_position(field, grid_.level);
  if (!front) return;
  const double left = field.left_edge;
  const double right = field.right_edge();
  const double center = 0.5 * (left + right);
  const double w = right - left;
  if (*front - left < w / 16.0 || right - *front < w / 16.0) {
    throw InternalError("front left the solver window");
  }
  if (std::abs(*front - center) > w / 8.0) {
    shift_window(field, std::lround((*front - center) / field.dx));
  }
}

void FkppSolver::advance(FkppField& field) const {
  step(field, coefficient(field.current_time), dt_, law_, grid_.diffusion, grid_.reaction);
  follow(field);
}

MaxLawSolution FkppSolver::solve(const InitialCondition& init, std::optional<double> until) const {
  MaxLawSolution out;
  out.dt = dt_;
  out.trace.level = grid_.level;
  out.field = initial_field(init);
  const double end = until.value_or(profile_.horizon());
  const auto n = dt_ > 0.0 ? static_cast<std::size_t>(std::llround(end / dt_)) : std::size_t{0};
  if (static_cast<double>(n) * dt_ > profile_.horizon() * (1.0 + 1e-12)) {
    throw ConfigurationError("requested solve time beyond the horizon");
  }
  const auto record = [&](const FkppField& f) {
    if (auto x = front_position(f, grid_.level)) {
      out.trace.times.push_back(f.current_time);
      out.trace.positions.push_back(*x);
    }
  };
  record(out.field);
  double next_trace = grid_.trace_interval;
  for (std::size_t k = 0; k < n; ++k) {
    advance(out.field);
    if (grid_.check_invariants) check_field(out.field, init.monotone);
    if (out.field.current_time >= next_trace - 0.5 * dt_ && k + 1 < n) {
      record(out.field);
      next_trace += grid_.trace_interval;
    }
  }
  out.field.current_time = static_cast<double>(n) * dt_;
  record(out.field);
  out.steps = n;
  return out;
}

MaxLawSolution solve_max_law(const SpeedProfile& profile, const BranchingLaw& law, const InitialCondition& init,
                             const GridSpec& grid) {
  return FkppSolver(profile, law, grid).solve(init);
}

CEstimate estimate_C(const FkppField& field, double r, CWeight weight, std::optional<double> previous_value) {
  const double origin = kSqrt2 * r;
  const auto integrand = [&](double y, double u) {
    const double w = weight == CWeight::WithYWeight ? y : 1.0;
    return u * std::exp(kSqrt2 * y) * w;
  };
  CEstimate out;
  const std::size_t n = field.size();
  if (n < 2 || field.right_edge() <= origin) return out;
  // First node strictly right of the origin.
  std::size_t i0 = 0;
  while (i0 < n && field.x(i0) <= origin) ++i0;
  double sum = 0.0;
  double y_prev = 0.0;
  double g_prev = integrand(0.0, field.value_at(origin));
  for (std::size_t i = i0; i < n; ++i) {
    const double y = field.x(i) - origin;
    const double g = integrand(y, field.values[i]);
    sum += 0.5 * (g + g_prev) * (y - y_prev);
    y_prev = y;
    g_prev = g;
  }
  out.value = std::sqrt(2.0 / std::numbers::pi) * sum;
  // The last node is a boundary node; judge decay one node inside it.
  const double y_tail = field.x(n - 2) - origin;
  out.truncation_warning = y_tail > 0.0 && std::abs(integrand(y_tail, field.values[n - 2])) > 1e-8;
  if (previous_value && *previous_value != 0.0) {
    out.relative_change = std::abs(out.value - *previous_value) / std::abs(*previous_value);
  }
  return out;
}

std::vector<TailPoint> tail_asymptotics_diagnostic(const FkppField& field, double t, const std::vector<double>& xs) {
  if (!(t > 0.0)) throw std::domain_error("tail diagnostic needs t > 0");
  const double shift = kSqrt2 * t - kBramsonLog * std::log(t);
  std::vector<TailPoint> out;
  out.reserve(xs.size());
  for (double x : xs) {
    if (!(x > 0.0)) throw std::domain_error("tail diagnostic needs x > 0");
    const double u = field.value_at(x + shift);
    out.push_back({x, u == 0.0 ? 0.0 : std::exp(kSqrt2 * x + x * x / (2.0 * t)) / x * u});
  }
  return out;
}

bool ordered_pair_run(const InitialCondition& init_low, const InitialCondition& init_high, const FkppSolver& solver,
                      std::size_t steps, double tolerance) {
  FkppField low = solver.initial_field(init_low);
  FkppField high = solver.initial_field(init_high);
  GridSpec grid = solver.grid();
  const auto ordered = [&] {
    for (std::size_t i = 0; i < low.size(); ++i) {
      if (low.values[i] > high.values[i] + tolerance) return false;
    }
    return true;
  };
  if (!ordered()) return false;
  bool held = true;
  for (std::size_t k = 0; k < steps; ++k) {
    // Past the horizon the coefficient stays at its last value.
    const double s = std::min(low.current_time, solver.profile().horizon() - solver.dt());
    const double coeff = solver.coefficient(std::max(s, 0.0));
    step(low, coeff, solver.dt(), solver.law(), grid.diffusion, grid.reaction);
    step(high, coeff, solver.dt(), solver.law(), grid.diffusion, grid.reaction);
    held = held && ordered();
    if (grid.follow_front) {
      // Both fields move by the same number of cells, driven by the upper one.
      const double before = high.left_edge;
      solver.follow(high);
      const long cells = std::lround((high.left_edge - before) / high.dx);
      shift_window(low, cells);
    }
  }
  return held;
}

}  // namespace vsbbm
