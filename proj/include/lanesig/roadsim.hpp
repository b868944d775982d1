#pragma once

#include <cstdint>
#include <vector>

#include "lanesig/drive.hpp"

namespace lanesig::roadsim {

// Road roughness classes, ordered from smoothest to roughest. The class
// selects the anomaly density used when generating a surface.
enum class Roughness { Green, Yellow, Red };

const char* to_string(Roughness r);
Roughness roughness_from_string(const std::string& s);

// All surface-generation knobs. Amplitudes are configuration, not calibrated
// physics; defaults produce sparse localized bumps/cracks over a gentle
// large-scale undulation.
struct SimConfig {
    // Base undulation: n_base sinusoids with random wavelength and phase,
    // per-sinusoid amplitude uniform in [0, base_amp_m / n_base].
    double base_amp_m = 0.002;
    int n_base = 8;
    double wavelength_min_m = 5.0;
    double wavelength_max_m = 50.0;
    // Localized anomalies: a Poisson process along the road; each event is a
    // signed Gaussian-shaped elevation deviation.
    double width_min_m = 0.05;
    double width_max_m = 0.30;
    double amp_min_m = 0.002;
    double amp_max_m = 0.020;
    // Poisson rates (anomalies per meter) per roughness class.
    double rate_green = 0.05;
    double rate_yellow = 0.15;
    double rate_red = 0.40;

    double rate_for(Roughness r) const;
};

// A lane's elevation-vs-distance signature.
struct SurfaceProfile {
    int lane_id = 0;
    double length_m = 0.0;
    double resolution_m = 0.0;
    std::vector<double> elevation;  // floor(length_m/resolution_m) + 1 points
    Roughness roughness_class = Roughness::Green;
    std::uint64_t seed = 0;
    // Construction metadata, used to check the class-density ordering.
    std::size_t anomaly_count = 0;
    double anomaly_rate_per_m = 0.0;
};

struct VehicleParams {
    double suspension_gain = 1.0;  // > 0
    double noise_std = 0.0;        // >= 0, acceleration units
    std::uint64_t seed = 0;
};

// Piecewise-linear speed over time. Interpolation is only defined up to the
// last knot; asking beyond it is an error (the profile must cover the drive).
struct SpeedProfile {
    std::vector<double> times;   // strictly increasing, seconds
    std::vector<double> speeds;  // m/s, > 0

    double speed_at(double t) const;
    double duration() const { return times.empty() ? 0.0 : times.back(); }
};

// Deterministic surface synthesis. Draw order per seed, recomputable by
// tests: first per sinusoid (wavelength, phase, amplitude), then per anomaly
// (exponential gap, width, amplitude, sign).
SurfaceProfile gen_surface(std::uint64_t seed, double length_m, double resolution_m,
                           Roughness cls, const SimConfig& cfg = {});

// Piecewise-linear speed profile with n_segments knots; knot speed =
// v_mean * max(0.2, 1 + N(0, v_frac_std)). One normal draw per knot.
SpeedProfile gen_speed_profile(std::uint64_t seed, double duration_s, double v_mean,
                               double v_frac_std, int n_segments);

// Simulates the vertical acceleration of a vehicle traversing `surface` with
// the given speed profile: position is integrated from speed at rate fs, the
// elevation along the path is linearly interpolated, and
//   a_z[k] = gain * (h[k+1] - 2 h[k] + h[k-1]) * fs^2 + N(0, noise_std).
// The output holds the interior samples (central difference needs both
// neighbors); the drive ends when the position reaches the surface length.
Drive simulate_drive(const SurfaceProfile& surface, const SpeedProfile& speed,
                     const VehicleParams& vehicle, double fs_hz);

}  // namespace lanesig::roadsim
