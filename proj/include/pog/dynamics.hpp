#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "pog/error.hpp"

namespace pog {

constexpr double kGravity = 9.81;          // [m/s^2]
constexpr double kSteeringRatio = 15.0;    // steering wheel to road wheel
constexpr double kMaxPedalSlip = 0.12;     // slip at full throttle/brake
constexpr double kSpeedEpsilon = 0.1;      // [m/s] low-speed guard for 1/v

/// Planar state of one traffic object. Positions and yaw are in the global
/// frame; v is the speed magnitude along the velocity vector, beta the slip
/// angle between velocity vector and vehicle longitudinal axis.
struct VehicleState {
  double X = 0.0;        // [m]
  double Y = 0.0;        // [m]
  double v = 0.0;        // [m/s], >= 0
  double beta = 0.0;     // [rad]
  double psi = 0.0;      // [rad]
  double psi_dot = 0.0;  // [rad/s]
  double ax = 0.0;       // [m/s^2] body-frame longitudinal acceleration
  double ay = 0.0;       // [m/s^2] body-frame lateral acceleration
};

/// Simplified saturating tire curve, identical shape for longitudinal and
/// side slip: F = mu_max * Fz * sin(C * atan(B * slip)).
struct TireParams {
  double mu_max = 1.0;   // peak friction coefficient
  double B_stiff = 12.0; // slip stiffness [1/rad resp. 1/unit slip]
  double C_shape = 1.9;  // shape factor
};

struct TwoTrackParams {
  double m = 1500.0;  // [kg]
  double Iz = 2500.0; // [kg m^2]
  double lf = 1.2;    // CoG to front axle [m]
  double lr = 1.5;    // CoG to rear axle [m]
  double w = 1.6;     // track width [m]
  TireParams tire;

  double wheel_base() const { return lf + lr; }

  static TwoTrackParams default_car() { return TwoTrackParams{}; }

  /// Single-track parameter set used for bicycles: zero track width.
  static TwoTrackParams default_bicycle() {
    TwoTrackParams p;
    p.m = 90.0;
    p.Iz = 15.0;
    p.lf = 0.55;
    p.lr = 0.55;
    p.w = 0.0;
    return p;
  }
};

struct DriverInput {
  double steering_wheel_angle = 0.0; // [rad]
  double throttle = 0.0;             // [0,1]
  double brake = 0.0;                // [0,1]; brake overrides throttle
};

/// Input set of the single-track model.
struct SingleTrackInput {
  double a_long = 0.0;         // commanded longitudinal acceleration [m/s^2]
  double steering_angle = 0.0; // road-wheel angle [rad]
};

enum Wheel : std::size_t { kFrontLeft = 0, kFrontRight = 1, kRearLeft = 2, kRearRight = 3 };

/// Per-wheel forces in the vehicle frame plus the road-wheel steering angles.
struct WheelForces {
  std::array<double, 4> fx{};    // [N]
  std::array<double, 4> fy{};    // [N]
  std::array<double, 4> delta{}; // [rad]

  double fx_sum() const { return fx[0] + fx[1] + fx[2] + fx[3]; }
  double fy_sum() const { return fy[0] + fy[1] + fy[2] + fy[3]; }
};

struct Derivatives {
  double v_dot = 0.0;
  double beta_dot = 0.0;
  double psi_ddot = 0.0;
};

inline double tire_force(double slip, double fz, const TireParams& t) {
  return t.mu_max * fz * std::sin(t.C_shape * std::atan(t.B_stiff * slip));
}

/// Longitudinal slip from pedal positions; brake has priority.
inline double pedal_slip(double throttle, double brake) {
  throttle = std::clamp(throttle, 0.0, 1.0);
  brake = std::clamp(brake, 0.0, 1.0);
  if (brake > 0.0) return -brake * kMaxPedalSlip;
  return throttle * kMaxPedalSlip;
}

namespace detail {

/// Clamps a force pair to the friction circle of one contact patch.
inline void friction_circle_clamp(double& fx, double& fy, double f_max) {
  const double n = std::hypot(fx, fy);
  if (n > f_max && n > 0.0) {
    const double scale = f_max / n;
    fx *= scale;
    fy *= scale;
  }
}

}  // namespace detail

/// Per-wheel tire forces from pedal and steering inputs. Longitudinal slip is
/// a linear function of the pedals, side slip follows from the wheel-velocity
/// geometry; each wheel force is clamped to its friction circle and rotated
/// into the vehicle frame.
inline WheelForces wheel_forces(const VehicleState& state, const TwoTrackParams& params,
                                const DriverInput& input) {
  const double slip_lon = pedal_slip(input.throttle, input.brake);
  const double delta_front = input.steering_wheel_angle / kSteeringRatio;

  // wheel positions in the vehicle frame (x forward, y left)
  const std::array<double, 4> px = {params.lf, params.lf, -params.lr, -params.lr};
  const std::array<double, 4> py = {params.w / 2.0, -params.w / 2.0, params.w / 2.0,
                                    -params.w / 2.0};

  const double fz = params.m * kGravity / 4.0;
  const double f_max = params.tire.mu_max * fz;
  const double vx = state.v * std::cos(state.beta);
  const double vy = state.v * std::sin(state.beta);

  WheelForces out;
  for (std::size_t i = 0; i < 4; ++i) {
    const double delta = (i < 2) ? delta_front : 0.0;
    const double wvx = vx - state.psi_dot * py[i];
    const double wvy = vy + state.psi_dot * px[i];
    const double alpha =
        (std::hypot(wvx, wvy) > 1e-9) ? delta - std::atan2(wvy, wvx) : 0.0;

    double fx_w = tire_force(slip_lon, fz, params.tire);
    double fy_w = tire_force(alpha, fz, params.tire);
    detail::friction_circle_clamp(fx_w, fy_w, f_max);

    const double c = std::cos(delta), s = std::sin(delta);
    out.fx[i] = fx_w * c - fy_w * s;
    out.fy[i] = fx_w * s + fy_w * c;
    out.delta[i] = delta;
  }
  return out;
}

/// Two-track body equations: force balance along and across the velocity
/// vector plus the yaw moment balance about the CoG.
inline Derivatives two_track_derivatives(const VehicleState& state, const WheelForces& f,
                                         const TwoTrackParams& p) {
  const double sum_fx = f.fx_sum();
  const double sum_fy = f.fy_sum();
  const double cb = std::cos(state.beta);
  const double sb = std::sin(state.beta);
  const double v_div = std::max(state.v, kSpeedEpsilon);

  Derivatives d;
  d.v_dot = (cb * sum_fx + sb * sum_fy) / p.m;
  d.beta_dot = (cb * sum_fy - sb * sum_fx) / (p.m * v_div) - state.psi_dot;
  d.psi_ddot = (p.lf * (f.fy[kFrontLeft] + f.fy[kFrontRight]) +
                (p.w / 2.0) * (f.fx[kFrontRight] - f.fx[kFrontLeft]) -
                p.lr * (f.fy[kRearLeft] + f.fy[kRearRight]) +
                (p.w / 2.0) * (f.fx[kRearRight] - f.fx[kRearLeft])) /
               p.Iz;
  return d;
}

/// Single-track (bicycle) simplification: zero track width, per-axle lumped
/// forces, small slip angle. Inputs are a longitudinal acceleration command
/// and the road-wheel steering angle.
inline Derivatives single_track_derivatives(const VehicleState& state,
                                            const TwoTrackParams& p,
                                            const SingleTrackInput& input) {
  const double v_div = std::max(state.v, kSpeedEpsilon);
  const double vx = state.v * std::cos(state.beta);
  const double vy = state.v * std::sin(state.beta);
  const double delta = input.steering_angle;

  const double alpha_f = delta - std::atan2(vy + state.psi_dot * p.lf, vx);
  const double alpha_r = -std::atan2(vy - state.psi_dot * p.lr, vx);

  const double fz_axle = p.m * kGravity / 2.0;
  const double f_max = p.tire.mu_max * fz_axle;

  double fx_f = p.m * input.a_long / 2.0;
  double fx_r = fx_f;
  double fy_f = tire_force(alpha_f, fz_axle, p.tire);
  double fy_r = tire_force(alpha_r, fz_axle, p.tire);
  detail::friction_circle_clamp(fx_f, fy_f, f_max);
  detail::friction_circle_clamp(fx_r, fy_r, f_max);

  // rotate the front axle force by the steering angle
  const double c = std::cos(delta), s = std::sin(delta);
  const double fxf_v = fx_f * c - fy_f * s;
  const double fyf_v = fx_f * s + fy_f * c;

  const double sum_fx = fxf_v + fx_r;
  const double sum_fy = fyf_v + fy_r;

  Derivatives d;
  d.v_dot = (sum_fx + state.beta * sum_fy) / p.m;
  d.beta_dot = (sum_fy - state.beta * sum_fx) / (p.m * v_div) - state.psi_dot;
  d.psi_ddot = (p.lf * fyf_v - p.lr * fy_r) / p.Iz;
  return d;
}

struct TrajectorySample {
  double t = 0.0;
  VehicleState state;
};

/// Fixed-step trajectory; samples at t = 0, dt, 2*dt, ..., horizon.
struct Trajectory {
  double dt = 0.0;
  std::vector<TrajectorySample> samples;

  const VehicleState& state_at(double t) const {
    const auto k = std::size_t(std::llround(t / dt));
    if (k >= samples.size()) throw Error("Trajectory: time beyond horizon");
    return samples[k].state;
  }

  /// Path length travelled up to time t.
  double arc_length_to(double t) const {
    const auto k = std::size_t(std::llround(t / dt));
    if (k >= samples.size()) throw Error("Trajectory: time beyond horizon");
    double s = 0.0;
    for (std::size_t i = 1; i <= k; ++i) {
      s += std::hypot(samples[i].state.X - samples[i - 1].state.X,
                      samples[i].state.Y - samples[i - 1].state.Y);
    }
    return s;
  }
};

/// Piecewise-constant driver input schedule keyed by start time.
struct ScheduledDriverInput {
  std::vector<std::pair<double, DriverInput>> entries;  // sorted by time

  DriverInput operator()(double t, const VehicleState&) const {
    DriverInput current;
    for (const auto& [start, in] : entries) {
      if (start <= t) current = in;
      else break;
    }
    return current;
  }
};

namespace detail {

inline std::size_t checked_step_count(double horizon, double dt) {
  if (!(horizon > 0.0) || !(dt > 0.0)) {
    throw Error("integrate: horizon and dt must be positive");
  }
  const double steps = horizon / dt;
  const double rounded = std::round(steps);
  if (std::abs(steps - rounded) > 1e-6) {
    throw Error("integrate: horizon must be an integral multiple of dt");
  }
  return std::size_t(rounded);
}

// y = (X, Y, psi, v, beta, psi_dot)
using StateVec = std::array<double, 6>;

inline StateVec pack(const VehicleState& s) {
  return {s.X, s.Y, s.psi, s.v, s.beta, s.psi_dot};
}

inline VehicleState unpack(const StateVec& y, const VehicleState& proto) {
  VehicleState s = proto;
  s.X = y[0];
  s.Y = y[1];
  s.psi = y[2];
  s.v = y[3];
  s.beta = y[4];
  s.psi_dot = y[5];
  return s;
}

/// Classical 4th-order fixed-step integration over the packed state.
/// DerivFn: (double t, const StateVec&) -> StateVec.
template <typename DerivFn>
StateVec rk4_step(double t, const StateVec& y, double dt, DerivFn&& deriv) {
  const StateVec k1 = deriv(t, y);
  StateVec y2;
  for (std::size_t i = 0; i < y.size(); ++i) y2[i] = y[i] + 0.5 * dt * k1[i];
  const StateVec k2 = deriv(t + 0.5 * dt, y2);
  for (std::size_t i = 0; i < y.size(); ++i) y2[i] = y[i] + 0.5 * dt * k2[i];
  const StateVec k3 = deriv(t + 0.5 * dt, y2);
  for (std::size_t i = 0; i < y.size(); ++i) y2[i] = y[i] + dt * k3[i];
  const StateVec k4 = deriv(t + dt, y2);
  StateVec out;
  for (std::size_t i = 0; i < y.size(); ++i) {
    out[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return out;
}

template <typename DynamicsFn>
Trajectory integrate_impl(const VehicleState& initial, double horizon, double dt,
                          DynamicsFn&& dynamics) {
  const std::size_t n_steps = checked_step_count(horizon, dt);

  auto deriv = [&](double t, const StateVec& y) -> StateVec {
    VehicleState s = unpack(y, initial);
    s.v = std::max(s.v, 0.0);
    const Derivatives d = dynamics(t, s);
    return {s.v * std::cos(s.psi + s.beta),
            s.v * std::sin(s.psi + s.beta),
            s.psi_dot,
            d.v_dot,
            d.beta_dot,
            d.psi_ddot};
  };

  // body-frame accelerations from the rotating-frame kinematics
  auto record = [&](double t, VehicleState s) -> VehicleState {
    const Derivatives d = dynamics(t, s);
    const double rate = s.v * (d.beta_dot + s.psi_dot);
    s.ax = d.v_dot * std::cos(s.beta) - rate * std::sin(s.beta);
    s.ay = d.v_dot * std::sin(s.beta) + rate * std::cos(s.beta);
    return s;
  };

  Trajectory traj;
  traj.dt = dt;
  traj.samples.reserve(n_steps + 1);

  StateVec y = pack(initial);
  y[3] = std::max(y[3], 0.0);
  traj.samples.push_back({0.0, record(0.0, unpack(y, initial))});
  for (std::size_t k = 0; k < n_steps; ++k) {
    const double t = double(k) * dt;
    y = rk4_step(t, y, dt, deriv);
    y[3] = std::max(y[3], 0.0);                 // no reverse motion
    y[4] = std::clamp(y[4], -1.5, 1.5);         // keep beta in its validity range
    traj.samples.push_back({t + dt, record(t + dt, unpack(y, initial))});
  }
  return traj;
}

}  // namespace detail

/// Two-track prediction. InputFn: (double t, const VehicleState&) -> DriverInput.
template <typename InputFn>
Trajectory integrate_two_track(const VehicleState& initial, const TwoTrackParams& params,
                               InputFn&& input_fn, double horizon, double dt) {
  return detail::integrate_impl(initial, horizon, dt,
                                [&](double t, const VehicleState& s) {
                                  const DriverInput in = input_fn(t, s);
                                  return two_track_derivatives(s, wheel_forces(s, params, in),
                                                               params);
                                });
}

/// Single-track prediction. InputFn: (double t, const VehicleState&) -> SingleTrackInput.
template <typename InputFn>
Trajectory integrate_single_track(const VehicleState& initial, const TwoTrackParams& params,
                                  InputFn&& input_fn, double horizon, double dt) {
  return detail::integrate_impl(initial, horizon, dt,
                                [&](double t, const VehicleState& s) {
                                  return single_track_derivatives(s, params, input_fn(t, s));
                                });
}

}  // namespace pog
