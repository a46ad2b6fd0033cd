#ifndef SVESIM_RECONSTRUCT_HPP
#define SVESIM_RECONSTRUCT_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "svesim/image.hpp"
#include "svesim/patterns.hpp"
#include "svesim/sensor.hpp"

namespace sve {

// Per-pixel observations pulled out of a capture: input-referred estimates,
// their variance model, validity (false where the ADC railed), and the
// saturation radiance of the pixel's own element.
struct ObservationField {
    int width = 0;
    int height = 0;
    std::vector<double> estimate;
    std::vector<double> variance;
    std::vector<double> cutoff;
    std::vector<std::uint8_t> valid;
};

inline ObservationField observe(const RawCapture& cap) {
    cap.config.require_valid();
    cap.pattern.require_valid();
    if (cap.width <= 0 || cap.height <= 0 ||
        cap.codes.size() != static_cast<std::size_t>(cap.width) * cap.height)
        throw std::invalid_argument("observe: malformed capture");
    ObservationField f;
    f.width = cap.width;
    f.height = cap.height;
    f.estimate.resize(cap.codes.size());
    f.variance.resize(cap.codes.size());
    f.cutoff.resize(cap.codes.size());
    f.valid.resize(cap.codes.size());
    const double sigma2 = cap.config.read_noise_base * cap.config.read_noise_base;
    for (int r = 0; r < cap.height; ++r) {
        for (int c = 0; c < cap.width; ++c) {
            const std::size_t i = static_cast<std::size_t>(r) * cap.width + c;
            const Level lv = cap.pattern.level_at(r, c);
            const NormalizedReadout nr = normalize_readout(cap.codes[i], lv, cap.config);
            const double at = lv.alpha * lv.tau;
            f.estimate[i] = nr.value;
            f.variance[i] = std::max(
                (nr.value + cap.config.dark_current) / lv.tau + sigma2 / (at * at), 1e-12);
            f.cutoff[i] = cap.config.v_max / at;
            f.valid[i] = nr.saturated ? 0 : 1;
        }
    }
    return f;
}

// Scratch buffers for the dual TV solver, reusable across calls on frames of
// the same size.
struct ChambolleWorkspace {
    std::vector<double> p0, p1, g0, g1, d, out;
};

// Dual-ascent total-variation denoiser (Chambolle's projection algorithm).
// Solves min_z 0.5 ||z - image||^2 + weight * TV(z); iterates the dual field
// with step 1/(2 * ndim) and stops once the energy change falls below
// eps times the initial energy.
inline RadianceMap chambolle_tv_denoise(const RadianceMap& image, double weight,
                                        double eps = 2e-4, int max_iters = 200,
                                        ChambolleWorkspace* ws = nullptr) {
    if (image.width <= 0 || image.height <= 0 ||
        image.values.size() != static_cast<std::size_t>(image.width) * image.height)
        throw std::invalid_argument("chambolle_tv_denoise: inconsistent dimensions");
    if (eps <= 0.0) throw std::invalid_argument("chambolle_tv_denoise: eps must be positive");
    if (max_iters < 1) throw std::invalid_argument("chambolle_tv_denoise: max_iters must be >= 1");
    if (weight <= 0.0) return image;

    const int W = image.width, H = image.height;
    const std::size_t N = image.size();
    ChambolleWorkspace local;
    ChambolleWorkspace& w = ws ? *ws : local;
    w.p0.assign(N, 0.0);
    w.p1.assign(N, 0.0);
    w.g0.assign(N, 0.0);
    w.g1.assign(N, 0.0);
    w.d.assign(N, 0.0);
    w.out.resize(N);

    const double tau = 0.25;  // 1 / (2 * ndim)
    double e_init = 0.0, e_prev = 0.0;
    for (int it = 0; it < max_iters; ++it) {
        double energy = 0.0;
        if (it > 0) {
            for (int r = 0; r < H; ++r) {
                for (int c = 0; c < W; ++c) {
                    const std::size_t i = static_cast<std::size_t>(r) * W + c;
                    double div = -(w.p0[i] + w.p1[i]);
                    if (r > 0) div += w.p0[i - W];
                    if (c > 0) div += w.p1[i - 1];
                    w.d[i] = div;
                    w.out[i] = image.values[i] + div;
                    energy += div * div;
                }
            }
        } else {
            std::copy(image.values.begin(), image.values.end(), w.out.begin());
        }
        double tv = 0.0;
        for (int r = 0; r < H; ++r) {
            for (int c = 0; c < W; ++c) {
                const std::size_t i = static_cast<std::size_t>(r) * W + c;
                const double gr = r + 1 < H ? w.out[i + W] - w.out[i] : 0.0;
                const double gc = c + 1 < W ? w.out[i + 1] - w.out[i] : 0.0;
                w.g0[i] = gr;
                w.g1[i] = gc;
                const double norm = std::sqrt(gr * gr + gc * gc);
                tv += norm;
                const double factor = 1.0 + tau / weight * norm;
                w.p0[i] = (w.p0[i] - tau * gr) / factor;
                w.p1[i] = (w.p1[i] - tau * gc) / factor;
            }
        }
        energy = (energy + weight * tv) / static_cast<double>(N);
        if (it == 0) {
            e_init = energy;
            e_prev = energy;
            if (e_init == 0.0) break;  // already flat, nothing to iterate
        } else {
            if (std::fabs(e_prev - energy) < eps * e_init) break;
            e_prev = energy;
        }
    }
    RadianceMap result(W, H);
    result.values.assign(w.out.begin(), w.out.end());
    return result;
}

namespace detail {

// Solves the symmetric 3x3 system A x = b by Gaussian elimination with
// partial pivoting; false when numerically singular.
inline bool solve3(std::array<std::array<double, 3>, 3> a, std::array<double, 3> b,
                   std::array<double, 3>& x) {
    double scale = 0.0;
    for (int i = 0; i < 3; ++i) scale = std::max(scale, std::fabs(a[i][i]));
    const double tiny = std::max(scale, 1.0) * 1e-13;
    for (int col = 0; col < 3; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
        if (std::fabs(a[pivot][col]) < tiny) return false;
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (int r = col + 1; r < 3; ++r) {
            const double f = a[r][col] / a[col][col];
            for (int k = col; k < 3; ++k) a[r][k] -= f * a[col][k];
            b[r] -= f * b[col];
        }
    }
    for (int i = 2; i >= 0; --i) {
        double s = b[i];
        for (int k = i + 1; k < 3; ++k) s -= a[i][k] * x[k];
        x[i] = s / a[i][i];
    }
    return true;
}

}  // namespace detail

// Local polynomial approximation: per pixel, a degree-1 bivariate weighted
// least-squares fit over a 7x7 window, weighted by a Gaussian radial kernel
// (scale 1), the inverse of the observation variance, and validity. Windows
// with fewer than three valid samples (or a singular fit) fall back to the
// weighted mean; windows with no valid sample at all output the center
// element's saturation cutoff. Output is clamped non-negative.
inline RadianceMap lpa_reconstruct(const RawCapture& cap) {
    const ObservationField f = observe(cap);
    const int W = f.width, H = f.height;
    constexpr int kHalf = 3;
    std::array<std::array<double, 2 * kHalf + 1>, 2 * kHalf + 1> gauss;
    for (int dr = -kHalf; dr <= kHalf; ++dr)
        for (int dc = -kHalf; dc <= kHalf; ++dc)
            gauss[dr + kHalf][dc + kHalf] = std::exp(-0.5 * (dr * dr + dc * dc));

    RadianceMap out(W, H);
    for (int r = 0; r < H; ++r) {
        for (int c = 0; c < W; ++c) {
            const int r0 = std::max(-kHalf, -r), r1 = std::min(kHalf, H - 1 - r);
            const int c0 = std::max(-kHalf, -c), c1 = std::min(kHalf, W - 1 - c);
            double a00 = 0, a01 = 0, a02 = 0, a11 = 0, a12 = 0, a22 = 0;
            double b0 = 0, b1 = 0, b2 = 0;
            int valid_count = 0;
            for (int dr = r0; dr <= r1; ++dr) {
                const std::size_t row = static_cast<std::size_t>(r + dr) * W + c;
                for (int dc = c0; dc <= c1; ++dc) {
                    const std::size_t i = row + dc;
                    if (!f.valid[i]) continue;
                    ++valid_count;
                    const double wgt = gauss[dr + kHalf][dc + kHalf] / f.variance[i];
                    const double z = f.estimate[i];
                    a00 += wgt;
                    a01 += wgt * dc;
                    a02 += wgt * dr;
                    a11 += wgt * dc * dc;
                    a12 += wgt * dc * dr;
                    a22 += wgt * dr * dr;
                    b0 += wgt * z;
                    b1 += wgt * z * dc;
                    b2 += wgt * z * dr;
                }
            }
            const std::size_t center = static_cast<std::size_t>(r) * W + c;
            if (valid_count == 0) {
                out.values[center] = f.cutoff[center];
                continue;
            }
            double value;
            std::array<double, 3> sol;
            if (valid_count >= 3 &&
                detail::solve3({{{a00, a01, a02}, {a01, a11, a12}, {a02, a12, a22}}},
                               {b0, b1, b2}, sol)) {
                value = sol[0];
            } else {
                value = b0 / a00;
            }
            out.values[center] = std::max(0.0, value);
        }
    }
    return out;
}

struct AdmmStats {
    int iterations = 0;
    double last_rel_change = 0.0;
};

// Plug-and-play ADMM for the TV-regularized weighted least squares problem
//   min_x sum_valid (x_i - est_i)^2 / (2 var_i) + lambda TV(x).
// The x-update is the closed-form per-pixel weighted average of the data and
// the denoised iterate (invalid pixels take the prior z - u directly), the
// z-update is one TV denoise with weight lambda / rho, rho is fixed at 1, and
// the iterate starts from the LPA reconstruction. Stops after max_iters or
// when the relative x change drops below 1e-4.
inline RadianceMap admm_tv_reconstruct(const RawCapture& cap, double lambda = 1.0,
                                       int max_iters = 30, AdmmStats* stats = nullptr,
                                       const RadianceMap* warm_start = nullptr) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("admm_tv_reconstruct: lambda must be >= 0");
    if (max_iters < 1) throw std::invalid_argument("admm_tv_reconstruct: max_iters must be >= 1");
    const ObservationField f = observe(cap);
    RadianceMap x = warm_start ? *warm_start : lpa_reconstruct(cap);
    if (x.width != f.width || x.height != f.height)
        throw std::invalid_argument("admm_tv_reconstruct: warm start dimensions mismatch");
    const std::size_t N = x.size();
    const double rho = 1.0;

    RadianceMap z = x;
    std::vector<double> u(N, 0.0);
    RadianceMap zu_sum(f.width, f.height);
    ChambolleWorkspace ws;
    AdmmStats local;
    AdmmStats& st = stats ? *stats : local;

    for (int it = 1; it <= max_iters; ++it) {
        double diff2 = 0.0, norm2 = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double prior = z.values[i] - u[i];
            double xn;
            if (f.valid[i]) {
                const double inv_v = 1.0 / f.variance[i];
                xn = (f.estimate[i] * inv_v + rho * prior) / (inv_v + rho);
            } else {
                xn = prior;
            }
            const double dx = xn - x.values[i];
            diff2 += dx * dx;
            norm2 += x.values[i] * x.values[i];
            x.values[i] = xn;
        }
        for (std::size_t i = 0; i < N; ++i) zu_sum.values[i] = x.values[i] + u[i];
        z = chambolle_tv_denoise(zu_sum, lambda / rho, 2e-4, 200, &ws);
        for (std::size_t i = 0; i < N; ++i) u[i] += x.values[i] - z.values[i];
        st.iterations = it;
        st.last_rel_change = norm2 > 0.0 ? std::sqrt(diff2 / norm2) : std::sqrt(diff2);
        if (st.last_rel_change < 1e-4) break;
    }
    for (double& v : x.values) v = std::max(0.0, v);
    return x;
}

}  // namespace sve

#endif
