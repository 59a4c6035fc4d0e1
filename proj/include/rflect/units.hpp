#pragma once

#include <cmath>
#include <numbers>

namespace rflect {

// CODATA 2018 exact SI values.
namespace phys {
inline constexpr double kBoltzmann = 1.380649e-23;        // J/K
inline constexpr double kPlanck = 6.62607015e-34;         // J s
inline constexpr double kElementaryCharge = 1.602176634e-19;  // C
inline constexpr double kFluxQuantum = kPlanck / (2.0 * kElementaryCharge);  // Wb
}  // namespace phys

inline double dbm_to_watts(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }
inline double watts_to_dbm(double watts) { return 10.0 * std::log10(watts / 1e-3); }
inline double db_to_power_ratio(double db) { return std::pow(10.0, db / 10.0); }
inline double power_ratio_to_db(double ratio) { return 10.0 * std::log10(ratio); }
inline double db_to_amplitude_ratio(double db) { return std::pow(10.0, db / 20.0); }

}  // namespace rflect
