#pragma once

// Internal unit system: lengths in nm, times in ps, masses in electron masses.
// Momentum is then m_e * nm / ps and action m_e * nm^2 / ps.

#include <stdexcept>

namespace qtraj {

namespace codata {
inline constexpr double hbar_si = 1.054571817e-34;         // J s
inline constexpr double electron_mass_si = 9.1093837015e-31;  // kg
}  // namespace codata

/// hbar / m_e expressed in nm^2 / ps (1 m^2/s = 1e6 nm^2/ps).
inline constexpr double hbar_over_me_nm2_per_ps = codata::hbar_si / codata::electron_mass_si * 1.0e6;

struct UnitSystem {
    double hbar = hbar_over_me_nm2_per_ps;  // m_e nm^2 / ps
    double mass = 1.0;                      // m_e

    void validate() const {
        if (!(hbar > 0.0)) throw std::invalid_argument("UnitSystem: hbar must be positive");
        if (!(mass > 0.0)) throw std::invalid_argument("UnitSystem: mass must be positive");
    }

    /// Electron-mass multiple `mass_me` with hbar in the matching units.
    static UnitSystem with_mass(double mass_me) {
        UnitSystem u;
        u.mass = mass_me;
        return u;
    }
};

}  // namespace qtraj
