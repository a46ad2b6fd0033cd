#ifndef SVESIM_SENSOR_HPP
#define SVESIM_SENSOR_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "svesim/image.hpp"
#include "svesim/patterns.hpp"
#include "svesim/rng.hpp"

namespace sve {

// Sensor model constants. Electron quantities are referred to the output of
// the programmable gain amplifier ("post-gain"): the ADC step, lower bound,
// and read noise are fixed there regardless of the gain setting, which is why
// higher gains resolve finer input-referred steps.
struct SensorConfig {
    double qe = 0.8;                // quantum efficiency
    double dark_current = 0.8;      // electrons per unit exposure (0.2 at the shortest default exposure)
    double read_noise_base = 20.0;  // post-gain electrons, one sigma
    double full_well = 8200.0;      // electrons, clips charge before gain
    int adc_bits = 10;
    double adc_lower = 1.0;         // post-gain electrons at code 0
    double adc_lsb_base = 8.0;      // post-gain electrons per code step
    double v_max = 8185.0;          // post-gain saturation reference for the risk cutoffs

    int max_code() const { return (1 << adc_bits) - 1; }

    void require_valid() const {
        if (!(qe > 0.0) || qe > 1.0) throw std::invalid_argument("SensorConfig: qe must be in (0, 1]");
        if (dark_current < 0.0) throw std::invalid_argument("SensorConfig: dark_current must be >= 0");
        if (read_noise_base < 0.0) throw std::invalid_argument("SensorConfig: read_noise_base must be >= 0");
        if (!(full_well > 0.0)) throw std::invalid_argument("SensorConfig: full_well must be positive");
        if (adc_bits < 1 || adc_bits > 16) throw std::invalid_argument("SensorConfig: adc_bits out of range");
        if (adc_lower < 0.0) throw std::invalid_argument("SensorConfig: adc_lower must be >= 0");
        if (!(adc_lsb_base > 0.0)) throw std::invalid_argument("SensorConfig: adc_lsb_base must be positive");
        if (!(v_max > 0.0)) throw std::invalid_argument("SensorConfig: v_max must be positive");
        // The ADC range must not exceed what the well can deliver at unit gain.
        const double top = adc_lower + static_cast<double>(max_code()) * adc_lsb_base;
        if (top > full_well * (1.0 + 1e-9))
            throw std::invalid_argument("SensorConfig: ADC range exceeds full well at unit gain");
    }
};

// Quantized sensor output plus everything needed to interpret it.
struct RawCapture {
    int width = 0;
    int height = 0;
    std::vector<std::uint16_t> codes;  // row-major ADC codes
    Pattern pattern;
    SensorConfig config;
    std::uint64_t seed = 0;

    std::uint16_t at(int r, int c) const {
        return codes[static_cast<std::size_t>(r) * width + c];
    }
};

namespace detail {

inline std::uint16_t quantize(double v, const SensorConfig& cfg) {
    const double q = std::floor((v - cfg.adc_lower) / cfg.adc_lsb_base);
    if (q <= 0.0) return 0;
    const double top = static_cast<double>(cfg.max_code());
    if (q >= top) return static_cast<std::uint16_t>(cfg.max_code());
    return static_cast<std::uint16_t>(q);
}

}  // namespace detail

// Noise-free pre-ADC value for radiance theta under one level: expected charge
// (shot mean plus dark), clipped at the well, then amplified.
inline double expected_readout(double theta, const Level& level, const SensorConfig& cfg) {
    if (!(theta >= 0.0) || !std::isfinite(theta))
        throw std::invalid_argument("expected_readout: theta must be finite and >= 0");
    const double charge = std::min(level.tau * theta * cfg.qe + level.tau * cfg.dark_current,
                                   cfg.full_well);
    return charge * level.alpha;
}

struct NormalizedReadout {
    double value = 0.0;   // input-referred radiance estimate
    bool saturated = false;
};

// Inverts the deterministic chain on a code: undo gain, subtract dark,
// divide by exposure and quantum efficiency. A railed code flags saturation.
inline NormalizedReadout normalize_readout(std::uint16_t code, const Level& level,
                                           const SensorConfig& cfg) {
    NormalizedReadout out;
    const double v = static_cast<double>(code) * cfg.adc_lsb_base + cfg.adc_lower;
    const double charge = v / level.alpha - level.tau * cfg.dark_current;
    out.value = std::max(0.0, charge) / (level.tau * cfg.qe);
    out.saturated = (code == cfg.max_code());
    return out;
}

// Forward simulation: per pixel, Poisson shot noise on tau * theta * qe plus
// deterministic dark charge, well clip, gain, Gaussian read noise, floor ADC.
// Identical inputs and seed give bit-identical captures; each pixel consumes
// its own counter-based stream so evaluation order is irrelevant.
inline RawCapture simulate_capture(const RadianceMap& scene, const Pattern& pattern,
                                   const SensorConfig& cfg, std::uint64_t seed,
                                   bool noise = true) {
    scene.require_valid();
    scene.require_even_dims();
    pattern.require_valid();
    cfg.require_valid();

    RawCapture cap;
    cap.width = scene.width;
    cap.height = scene.height;
    cap.pattern = pattern;
    cap.config = cfg;
    cap.seed = seed;
    cap.codes.resize(scene.size());

    for (int r = 0; r < scene.height; ++r) {
        for (int c = 0; c < scene.width; ++c) {
            const Level lv = pattern.level_at(r, c);
            const double theta = scene.at(r, c);
            const double shot_mean = lv.tau * theta * cfg.qe;
            const double dark = lv.tau * cfg.dark_current;
            double v;
            if (noise) {
                const std::uint64_t pixel = static_cast<std::uint64_t>(r) * scene.width + c;
                Philox gen(seed, pixel);
                const double electrons = static_cast<double>(gen.next_poisson(shot_mean));
                const double charge = std::min(electrons + dark, cfg.full_well);
                v = charge * lv.alpha + gen.next_normal() * cfg.read_noise_base;
            } else {
                const double charge = std::min(shot_mean + dark, cfg.full_well);
                v = charge * lv.alpha;
            }
            cap.codes[static_cast<std::size_t>(r) * scene.width + c] = detail::quantize(v, cfg);
        }
    }
    return cap;
}

}  // namespace sve

#endif
