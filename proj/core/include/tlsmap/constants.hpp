#pragma once

namespace tlsmap {

// Exact SI values (2019 redefinition).
inline constexpr double kPlanck = 6.62607015e-34;        // J s
inline constexpr double kHbar = kPlanck / 6.283185307179586476925286766559;
inline constexpr double kElementaryCharge = 1.602176634e-19;  // C
inline constexpr double kPi = 3.141592653589793238462643383279;
inline constexpr double kTwoPi = 2.0 * kPi;

// Unit conversions. Internally: lengths in um, voltages in V, fields in V/m,
// frequencies in GHz, rates in 1/s, dipole moments in e*Angstrom.
inline constexpr double kMicron = 1e-6;                  // m per um
inline constexpr double kGigahertz = 1e9;                // Hz per GHz
inline constexpr double kCoulombMeterPerEAngstrom = kElementaryCharge * 1e-10;
inline constexpr double kFemtofarad = 1e-15;             // F per fF
inline constexpr double kNanoampere = 1e-9;              // A per nA

}  // namespace tlsmap
