#ifndef SVESIM_SCENES_HPP
#define SVESIM_SCENES_HPP

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "svesim/image.hpp"
#include "svesim/rng.hpp"

namespace sve {

enum class SceneKind { Flat, TwoLevel, Ramp, HdrComposite };

inline SceneKind scene_kind_from_string(const std::string& s) {
    if (s == "flat") return SceneKind::Flat;
    if (s == "two-level") return SceneKind::TwoLevel;
    if (s == "ramp") return SceneKind::Ramp;
    if (s == "hdr-composite") return SceneKind::HdrComposite;
    throw std::invalid_argument("unknown scene kind: " + s);
}

struct SceneParams {
    double level = 1000.0;       // flat
    double level_a = 100.0;      // two-level, left half
    double level_b = 10000.0;    // two-level, right half
    double split = 0.5;          // two-level column split fraction
    double lo = 10.0;            // ramp start (left column)
    double hi = 10000.0;         // ramp end (right column)
    std::uint64_t seed = 1;      // hdr-composite
    double p99_target = 0.99 * 8185.0 / 0.25;  // hdr-composite brightness anchor
};

namespace detail {

// Smooth composite with several decades of dynamic range: a log-domain ramp,
// soft blobs, and a bright rectangular source, rescaled so the scene's 99th
// percentile sits just inside the ADC range at minimal exposure and unit gain.
inline RadianceMap hdr_composite(int width, int height, const SceneParams& params) {
    RadianceMap logmap(width, height, 0.0);
    Philox gen(params.seed, 0x5ce9e5);

    const double ramp_dir = gen.next_double() * 6.283185307179586;
    const double ramp_span = 1.0 + 0.8 * gen.next_double();  // decades across the frame
    const double cx = std::cos(ramp_dir), sy = std::sin(ramp_dir);
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c) {
            const double u = (c + 0.5) / width - 0.5;
            const double v = (r + 0.5) / height - 0.5;
            logmap.at(r, c) = ramp_span * (u * cx + v * sy);
        }

    const int blobs = 6 + static_cast<int>(gen.next_double() * 5.0);
    for (int b = 0; b < blobs; ++b) {
        const double bx = gen.next_double();
        const double by = gen.next_double();
        const double radius = 0.06 + 0.22 * gen.next_double();
        const double amp = (gen.next_double() * 2.0 - 1.0) * 1.6;
        for (int r = 0; r < height; ++r)
            for (int c = 0; c < width; ++c) {
                const double dx = (c + 0.5) / width - bx;
                const double dy = (r + 0.5) / height - by;
                const double d2 = (dx * dx + dy * dy) / (radius * radius);
                logmap.at(r, c) += amp * std::exp(-0.5 * d2);
            }
    }

    // Bright source with soft edges, two to three decades above its surround.
    const double sx = 0.15 + 0.6 * gen.next_double();
    const double sy2 = 0.15 + 0.6 * gen.next_double();
    const double sw = 0.10 + 0.18 * gen.next_double();
    const double sh = 0.10 + 0.18 * gen.next_double();
    const double boost = 2.0 + gen.next_double();
    const double edge = 0.02;
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c) {
            const double px = (c + 0.5) / width;
            const double py = (r + 0.5) / height;
            const double fx = 1.0 / (1.0 + std::exp((std::fabs(px - sx) - sw) / edge));
            const double fy = 1.0 / (1.0 + std::exp((std::fabs(py - sy2) - sh) / edge));
            logmap.at(r, c) += boost * fx * fy;
        }

    RadianceMap out(width, height);
    for (std::size_t i = 0; i < out.size(); ++i)
        out.values[i] = std::pow(10.0, logmap.values[i]);
    const double p99 = percentile(out.values, 99.0);
    const double scale = params.p99_target / p99;
    for (double& v : out.values) v *= scale;
    return out;
}

}  // namespace detail

inline RadianceMap synth_scene(SceneKind kind, int width, int height,
                               const SceneParams& params = {}) {
    if (width <= 0 || height <= 0 || width % 2 != 0 || height % 2 != 0)
        throw std::invalid_argument("synth_scene: dimensions must be positive and even");
    switch (kind) {
        case SceneKind::Flat: {
            if (!(params.level >= 0.0)) throw std::invalid_argument("synth_scene: level must be >= 0");
            return RadianceMap(width, height, params.level);
        }
        case SceneKind::TwoLevel: {
            if (!(params.split > 0.0) || !(params.split < 1.0))
                throw std::invalid_argument("synth_scene: split must be in (0, 1)");
            RadianceMap m(width, height);
            const int cut = static_cast<int>(width * params.split);
            for (int r = 0; r < height; ++r)
                for (int c = 0; c < width; ++c)
                    m.at(r, c) = c < cut ? params.level_a : params.level_b;
            return m;
        }
        case SceneKind::Ramp: {
            RadianceMap m(width, height);
            for (int r = 0; r < height; ++r)
                for (int c = 0; c < width; ++c) {
                    const double t = width > 1 ? static_cast<double>(c) / (width - 1) : 0.0;
                    m.at(r, c) = params.lo + (params.hi - params.lo) * t;
                }
            return m;
        }
        case SceneKind::HdrComposite:
            return detail::hdr_composite(width, height, params);
    }
    throw std::invalid_argument("synth_scene: unknown kind");
}

}  // namespace sve

#endif
