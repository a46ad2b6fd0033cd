#ifndef SVESIM_IMAGE_HPP
#define SVESIM_IMAGE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace sve {

// Scene radiance field, photons per unit exposure time, row-major storage.
struct RadianceMap {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    RadianceMap() = default;
    RadianceMap(int w, int h, double fill = 0.0) : width(w), height(h) {
        if (w <= 0 || h <= 0)
            throw std::invalid_argument("RadianceMap: dimensions must be positive");
        values.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill);
    }

    double& at(int r, int c) { return values[static_cast<std::size_t>(r) * width + c]; }
    double at(int r, int c) const { return values[static_cast<std::size_t>(r) * width + c]; }
    std::size_t size() const { return values.size(); }

    bool finite_nonnegative() const {
        for (double v : values)
            if (!std::isfinite(v) || v < 0.0) return false;
        return true;
    }

    void require_valid() const {
        if (width <= 0 || height <= 0 ||
            values.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
            throw std::invalid_argument("RadianceMap: inconsistent dimensions");
        if (!finite_nonnegative())
            throw std::invalid_argument("RadianceMap: values must be finite and non-negative");
    }

    void require_even_dims() const {
        if (width % 2 != 0 || height % 2 != 0)
            throw std::invalid_argument("RadianceMap: dimensions must be even");
    }
};

// Box average over factor x factor blocks. Dimensions must divide evenly.
inline RadianceMap downsample_box(const RadianceMap& in, int factor) {
    if (factor <= 0) throw std::invalid_argument("downsample_box: factor must be positive");
    if (factor == 1) return in;
    if (in.width % factor != 0 || in.height % factor != 0)
        throw std::invalid_argument("downsample_box: factor must divide both dimensions");
    RadianceMap out(in.width / factor, in.height / factor);
    const double inv = 1.0 / (static_cast<double>(factor) * factor);
    for (int r = 0; r < out.height; ++r) {
        for (int c = 0; c < out.width; ++c) {
            double acc = 0.0;
            for (int dr = 0; dr < factor; ++dr)
                for (int dc = 0; dc < factor; ++dc)
                    acc += in.at(r * factor + dr, c * factor + dc);
            out.at(r, c) = acc * inv;
        }
    }
    return out;
}

// Percentile with linear interpolation between closest ranks, p in [0, 100].
inline double percentile(std::vector<double> v, double p) {
    if (v.empty()) throw std::invalid_argument("percentile: empty input");
    if (p < 0.0 || p > 100.0) throw std::invalid_argument("percentile: p out of range");
    std::sort(v.begin(), v.end());
    const double pos = p / 100.0 * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= v.size()) return v.back();
    const double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[lo + 1] * frac;
}

}  // namespace sve

#endif
