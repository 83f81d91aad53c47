#pragma once

#include <numbers>

namespace ionphoton::units {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Bohr magneton over Planck's constant, Hz per gauss.
inline constexpr double kBohrMagnetonHzPerGauss = 1.39962449361e6;

constexpr double mhz(double f_mhz) { return kTwoPi * 1e6 * f_mhz; }          // MHz -> rad/s
constexpr double to_mhz(double omega) { return omega / (kTwoPi * 1e6); }     // rad/s -> MHz
constexpr double us(double t_us) { return 1e-6 * t_us; }                     // us -> s
constexpr double to_us(double t) { return 1e6 * t; }                         // s -> us

}  // namespace ionphoton::units
