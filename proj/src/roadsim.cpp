#include "lanesig/roadsim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "lanesig/rng.hpp"

namespace lanesig::roadsim {

const char* to_string(Roughness r) {
    switch (r) {
        case Roughness::Green: return "green";
        case Roughness::Yellow: return "yellow";
        case Roughness::Red: return "red";
    }
    return "?";
}

Roughness roughness_from_string(const std::string& s) {
    if (s == "green" || s == "Green") return Roughness::Green;
    if (s == "yellow" || s == "Yellow") return Roughness::Yellow;
    if (s == "red" || s == "Red") return Roughness::Red;
    throw std::invalid_argument("unknown roughness class: " + s);
}

double SimConfig::rate_for(Roughness r) const {
    switch (r) {
        case Roughness::Green: return rate_green;
        case Roughness::Yellow: return rate_yellow;
        case Roughness::Red: return rate_red;
    }
    return rate_green;
}

SurfaceProfile gen_surface(std::uint64_t seed, double length_m, double resolution_m,
                           Roughness cls, const SimConfig& cfg) {
    if (!(length_m >= 1.0)) throw std::invalid_argument("surface length must be >= 1 m");
    if (!(resolution_m > 0.0) || resolution_m > length_m)
        throw std::invalid_argument("surface resolution must be in (0, length_m]");

    SurfaceProfile sp;
    sp.length_m = length_m;
    sp.resolution_m = resolution_m;
    sp.roughness_class = cls;
    sp.seed = seed;
    sp.anomaly_rate_per_m = cfg.rate_for(cls);
    const std::size_t n = static_cast<std::size_t>(std::floor(length_m / resolution_m)) + 1;
    sp.elevation.assign(n, 0.0);

    Rng rng(seed);

    for (int b = 0; b < cfg.n_base; ++b) {
        const double wavelength = rng.uniform(cfg.wavelength_min_m, cfg.wavelength_max_m);
        const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double amp = rng.uniform(0.0, cfg.base_amp_m / cfg.n_base);
        const double k = 2.0 * std::numbers::pi / wavelength;
        for (std::size_t i = 0; i < n; ++i)
            sp.elevation[i] += amp * std::sin(k * (static_cast<double>(i) * resolution_m) + phase);
    }

    const double rate = sp.anomaly_rate_per_m;
    if (rate > 0) {
        double pos = 0.0;
        for (;;) {
            pos += rng.exponential(rate);
            if (pos >= length_m) break;
            const double width = rng.uniform(cfg.width_min_m, cfg.width_max_m);
            const double amp = rng.uniform(cfg.amp_min_m, cfg.amp_max_m);
            const double signed_amp = rng.uniform01() < 0.5 ? amp : -amp;
            ++sp.anomaly_count;
            const double span = 4.0 * width;
            const auto lo = static_cast<std::size_t>(
                std::max(0.0, std::floor((pos - span) / resolution_m)));
            const auto hi = std::min(n, static_cast<std::size_t>(
                                            std::max(0.0, std::ceil((pos + span) / resolution_m))));
            for (std::size_t i = lo; i < hi; ++i) {
                const double x = static_cast<double>(i) * resolution_m - pos;
                sp.elevation[i] += signed_amp * std::exp(-x * x / (2.0 * width * width));
            }
        }
    }
    return sp;
}

double SpeedProfile::speed_at(double t) const {
    if (times.empty()) throw std::invalid_argument("empty speed profile");
    if (t <= times.front()) return speeds.front();
    if (t > times.back())
        throw std::invalid_argument("speed profile too short for requested time");
    const auto it = std::lower_bound(times.begin(), times.end(), t);
    const std::size_t j = static_cast<std::size_t>(it - times.begin());
    if (times[j] == t) return speeds[j];
    const double t0 = times[j - 1], t1 = times[j];
    const double w = (t - t0) / (t1 - t0);
    return speeds[j - 1] * (1.0 - w) + speeds[j] * w;
}

SpeedProfile gen_speed_profile(std::uint64_t seed, double duration_s, double v_mean,
                               double v_frac_std, int n_segments) {
    if (!(v_mean > 0)) throw std::invalid_argument("mean speed must be positive");
    if (v_frac_std < 0 || v_frac_std >= 1)
        throw std::invalid_argument("speed deviation fraction must be in [0, 1)");
    if (n_segments < 1) throw std::invalid_argument("speed profile needs at least one knot");
    if (!(duration_s > 0)) throw std::invalid_argument("duration must be positive");

    Rng rng(seed);
    SpeedProfile sp;
    if (n_segments == 1) {
        const double v = v_mean * std::max(0.2, 1.0 + rng.normal(0.0, v_frac_std));
        sp.times = {0.0, duration_s};
        sp.speeds = {v, v};
        return sp;
    }
    sp.times.resize(static_cast<std::size_t>(n_segments));
    sp.speeds.resize(static_cast<std::size_t>(n_segments));
    for (int i = 0; i < n_segments; ++i) {
        sp.times[static_cast<std::size_t>(i)] =
            duration_s * static_cast<double>(i) / static_cast<double>(n_segments - 1);
        sp.speeds[static_cast<std::size_t>(i)] =
            v_mean * std::max(0.2, 1.0 + rng.normal(0.0, v_frac_std));
    }
    return sp;
}

Drive simulate_drive(const SurfaceProfile& surface, const SpeedProfile& speed,
                     const VehicleParams& vehicle, double fs_hz) {
    if (!(fs_hz > 0)) throw std::invalid_argument("sample rate must be positive");
    if (!(vehicle.suspension_gain > 0))
        throw std::invalid_argument("suspension gain must be positive");
    if (vehicle.noise_std < 0) throw std::invalid_argument("noise deviation must be >= 0");
    if (surface.elevation.size() < 3)
        throw std::invalid_argument("surface too short to simulate");

    const double dt = 1.0 / fs_hz;
    const std::size_t n_elev = surface.elevation.size();

    // Elevation along the time-sampled path, linear interpolation in x.
    std::vector<double> h;
    double x = 0.0;
    double t = 0.0;
    while (x < surface.length_m) {
        const double fidx = x / surface.resolution_m;
        const auto i0 = std::min(n_elev - 2, static_cast<std::size_t>(fidx));
        const double w = fidx - static_cast<double>(i0);
        h.push_back(surface.elevation[i0] * (1.0 - w) + surface.elevation[i0 + 1] * w);
        x += speed.speed_at(t) * dt;  // throws when the profile is too short
        t += dt;
    }
    if (h.size() < 3)
        throw std::invalid_argument("drive too short: fewer than three path samples");

    Drive d;
    d.fs_hz = fs_hz;
    d.segments = {{0, surface.lane_id}};
    d.seed = vehicle.seed;
    d.provenance = "original";
    d.samples.resize(h.size() - 2);
    Rng rng(vehicle.seed);
    const double fs2 = fs_hz * fs_hz;
    for (std::size_t k = 1; k + 1 < h.size(); ++k) {
        double a = vehicle.suspension_gain * (h[k + 1] - 2.0 * h[k] + h[k - 1]) * fs2;
        if (vehicle.noise_std > 0) a += rng.normal(0.0, vehicle.noise_std);
        d.samples[k - 1] = a;
    }
    return d;
}

}  // namespace lanesig::roadsim
