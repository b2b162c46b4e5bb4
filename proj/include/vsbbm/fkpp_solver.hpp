#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vsbbm/core_model.hpp"

namespace vsbbm {

/// Raised before a run starts when the grid/time step combination is unstable
/// or otherwise unusable.
class ConfigurationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when the solver loses track of the front (window policy failure).
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class DiffusionScheme { Explicit, CrankNicolson };
enum class ReactionScheme { Euler, Exact };

DiffusionScheme diffusion_scheme_from_string(const std::string& name);
ReactionScheme reaction_scheme_from_string(const std::string& name);

struct GridSpec {
  double dx = 0.05;
  /// dt = dt_factor * dx^2 / max sigma^2.
  double dt_factor = 0.4;
  /// Window width; when unset the solver uses 12 sqrt(t) + 40.
  std::optional<double> width;
  DiffusionScheme diffusion = DiffusionScheme::Explicit;
  ReactionScheme reaction = ReactionScheme::Euler;
  double level = 0.5;
  /// Spacing of FrontTrace samples in solver time.
  double trace_interval = 1.0;
  /// Recenter the window on the front as it moves.
  bool follow_front = true;
  /// Verify range and monotonicity after every step (slow).
  bool check_invariants = false;

  double default_width(double horizon) const;
};

/// u(s, .) on a uniform grid. Values are in [0,1].
struct FkppField {
  std::vector<double> values;
  double left_edge = 0.0;
  double dx = 0.05;
  double current_time = 0.0;
  double window_shift_total = 0.0;

  std::size_t size() const { return values.size(); }
  double x(std::size_t i) const { return left_edge + dx * static_cast<double>(i); }
  double right_edge() const { return x(values.size() - 1); }
  /// Linear interpolation; edge values outside the window.
  double value_at(double x) const;
};

struct FrontTrace {
  std::vector<double> times;
  std::vector<double> positions;
  double level = 0.5;
};

/// Initial data u(0, .). `monotone` marks front-type data (non-increasing in x).
struct InitialCondition {
  std::string name;
  std::function<double(double)> u0;
  bool monotone = true;

  /// u(0,x) = 1_{x < x0}, with value 1/2 at x0 itself.
  static InitialCondition heaviside(double x0 = 0.0);
  /// 1 - exp(x/w) for x < 0, zero otherwise; lies below the Heaviside.
  static InitialCondition smoothed_heaviside(double width);
  /// u(0,x) = 1 - exp(-phi(-x)) with phi(x) = sum_l c_l 1_{x >= u_l}.
  static InitialCondition laplace_steps(std::vector<double> weights, std::vector<double> thresholds);
  static InitialCondition constant(double value);
  /// 1 - f(x * scale) for f(x) = exp(-phi(-x)); used for the t-dependent family f^t.
  static InitialCondition laplace_steps_scaled(std::vector<double> weights, std::vector<double> thresholds,
                                               double scale);
};

FkppField make_field(const InitialCondition& init, double left_edge, double right_edge, double dx);

/// One time step with diffusion coefficient sigma_sq (Strang splitting: half
/// reaction, diffusion, half reaction). The two edge nodes follow the spatially
/// homogeneous reaction ODE. Values are clamped to [0,1].
void step(FkppField& field, double sigma_sq, double dt, const BranchingLaw& law, DiffusionScheme diffusion,
          ReactionScheme reaction);

/// F(u) for the branching law; domain error outside [0,1].
double fkpp_nonlinearity(double u, const BranchingLaw& law);

/// Largest crossing of `level`, linearly interpolated between grid nodes.
std::optional<double> front_position(const FkppField& field, double level);

struct MaxLawSolution {
  FkppField field;
  FrontTrace trace;
  double dt = 0.0;
  std::size_t steps = 0;
};

/// Solver for u_s = 1/2 sigma^2 u_xx + F(u) on a moving window.
///
/// Solver time runs backwards through the profile: at solver time s the
/// coefficient is sigma^2 at real time t - s. With Heaviside data this gives
/// u(t, x) = P(max_k x_k(t) > x) for the forward particle system, whose late
/// (second phase) motion acts first on the initial condition.
class FkppSolver {
 public:
  FkppSolver(SpeedProfile profile, BranchingLaw law, GridSpec grid);

  const SpeedProfile& profile() const { return profile_; }
  const GridSpec& grid() const { return grid_; }
  const BranchingLaw& law() const { return law_; }
  double dt() const { return dt_; }
  std::size_t total_steps() const { return steps_; }
  /// Coefficient used for the step that starts at solver time s.
  double coefficient(double s) const;

  FkppField initial_field(const InitialCondition& init) const;
  /// Advance by one step of size dt() and follow the front.
  void advance(FkppField& field) const;
  /// Run to solver time `until` (default: the horizon).
  MaxLawSolution solve(const InitialCondition& init, std::optional<double> until = std::nullopt) const;
  /// Recenter the window on the front if it has drifted more than width/8.
  void follow(FkppField& field) const;

 private:
  SpeedProfile profile_;
  BranchingLaw law_;
  GridSpec grid_;
  double width_;
  double dt_;
  std::size_t steps_;
};

MaxLawSolution solve_max_law(const SpeedProfile& profile, const BranchingLaw& law, const InitialCondition& init,
                             const GridSpec& grid);

enum class CWeight { WithYWeight, WithoutYWeight };

struct CEstimate {
  double value = 0.0;
  std::optional<double> relative_change;
  /// Integrand not decayed below 1e-8 at the right end of the window.
  bool truncation_warning = false;
};

/// sqrt(2/pi) int_0^Y u(r, y + sqrt(2) r) e^{sqrt(2) y} w(y) dy by trapezoid,
/// where w(y) = y or 1 and Y is the right window edge.
CEstimate estimate_C(const FkppField& field, double r, CWeight weight,
                     std::optional<double> previous_value = std::nullopt);

struct TailPoint {
  double x;
  double value;
};

/// e^{sqrt2 x} e^{x^2/2t} x^{-1} u(t, x + sqrt2 t - 3/(2 sqrt2) ln t) for x > 0.
std::vector<TailPoint> tail_asymptotics_diagnostic(const FkppField& field, double t, const std::vector<double>& xs);

/// Evolve two ordered initial conditions in lockstep on a shared window and
/// report whether low <= high held at every node after every step.
bool ordered_pair_run(const InitialCondition& init_low, const InitialCondition& init_high, const FkppSolver& solver,
                      std::size_t steps, double tolerance = 1e-12);

}  // namespace vsbbm
