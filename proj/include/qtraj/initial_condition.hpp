#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qtraj {

/// Guidance law driving a trajectory.
enum class Theory { dbb, revised };

inline std::string_view to_string(Theory theory) {
    return theory == Theory::dbb ? "dbb" : "revised";
}

inline Theory parse_theory(std::string_view text) {
    if (text == "dbb") return Theory::dbb;
    if (text == "revised") return Theory::revised;
    throw std::invalid_argument("unknown theory '" + std::string(text) + "' (expected dbb or revised)");
}

/// Fully determines one trajectory. For Theory::dbb, p0 is the de Broglie-Bohm
/// momentum at (x0, t0) rather than an independent draw.
struct InitialCondition {
    double x0 = 0.0;
    double p0 = 0.0;
    double t0 = 0.0;
    Theory theory = Theory::dbb;

    friend bool operator==(const InitialCondition&, const InitialCondition&) = default;
};

}  // namespace qtraj
