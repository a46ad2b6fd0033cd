#ifndef SVESIM_IO_HPP
#define SVESIM_IO_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <zlib.h>
#include <nlohmann/json.hpp>

#include "svesim/histogram.hpp"
#include "svesim/image.hpp"
#include "svesim/metrics.hpp"
#include "svesim/patterns.hpp"
#include "svesim/risk.hpp"
#include "svesim/sensor.hpp"

static_assert(std::endian::native == std::endian::little,
              "PFM float payloads are written in host order and assume little-endian");

namespace sve {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using json = nlohmann::json;

// ---------------------------------------------------------------- PFM

// Grayscale PFM, scale -1.0 (little-endian), rows stored bottom-to-top.
inline void write_pfm(const std::string& path, const RadianceMap& map) {
    map.require_valid();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << "Pf\n" << map.width << " " << map.height << "\n-1.0\n";
    std::vector<float> row(map.width);
    for (int r = map.height - 1; r >= 0; --r) {
        for (int c = 0; c < map.width; ++c) row[c] = static_cast<float>(map.at(r, c));
        f.write(reinterpret_cast<const char*>(row.data()), sizeof(float) * row.size());
    }
    if (!f) throw IoError("short write: " + path);
}

inline RadianceMap read_pfm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path);
    std::string magic;
    f >> magic;
    if (magic != "Pf") throw IoError("not a grayscale PFM: " + path);
    int w = 0, h = 0;
    double scale = 0.0;
    f >> w >> h >> scale;
    if (!f || w <= 0 || h <= 0) throw IoError("bad PFM header: " + path);
    if (scale >= 0.0) throw IoError("big-endian PFM not supported: " + path);
    f.get();  // single whitespace after the scale line
    RadianceMap map(w, h);
    std::vector<float> row(w);
    for (int r = h - 1; r >= 0; --r) {
        f.read(reinterpret_cast<char*>(row.data()), sizeof(float) * row.size());
        if (!f) throw IoError("truncated PFM payload: " + path);
        for (int c = 0; c < w; ++c) map.at(r, c) = row[c];
    }
    return map;
}

// ---------------------------------------------------------------- PNG

namespace detail {

inline void png_chunk(std::string& out, const char type[4], const std::string& data) {
    auto be32 = [](std::uint32_t v) {
        char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 8), static_cast<char>(v)};
        return std::string(b, 4);
    };
    out += be32(static_cast<std::uint32_t>(data.size()));
    std::string body(type, 4);
    body += data;
    out += body;
    const auto crc = crc32(0, reinterpret_cast<const Bytef*>(body.data()),
                           static_cast<uInt>(body.size()));
    out += be32(static_cast<std::uint32_t>(crc));
}

}  // namespace detail

// Minimal 8-bit grayscale PNG encoder (filter 0 scanlines, one IDAT).
inline void write_png_gray8(const std::string& path, int width, int height,
                            const std::vector<std::uint8_t>& pixels) {
    if (width <= 0 || height <= 0 ||
        pixels.size() != static_cast<std::size_t>(width) * height)
        throw std::invalid_argument("write_png_gray8: dimension mismatch");
    std::string raw;
    raw.reserve(pixels.size() + height);
    for (int r = 0; r < height; ++r) {
        raw.push_back('\0');
        raw.append(reinterpret_cast<const char*>(&pixels[static_cast<std::size_t>(r) * width]),
                   width);
    }
    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::string compressed(bound, '\0');
    if (compress2(reinterpret_cast<Bytef*>(compressed.data()), &bound,
                  reinterpret_cast<const Bytef*>(raw.data()), static_cast<uLong>(raw.size()),
                  9) != Z_OK)
        throw IoError("deflate failed: " + path);
    compressed.resize(bound);

    std::string out("\x89PNG\r\n\x1a\n", 8);
    std::string ihdr;
    auto push_be32 = [&ihdr](std::uint32_t v) {
        ihdr.push_back(static_cast<char>(v >> 24));
        ihdr.push_back(static_cast<char>(v >> 16));
        ihdr.push_back(static_cast<char>(v >> 8));
        ihdr.push_back(static_cast<char>(v));
    };
    push_be32(static_cast<std::uint32_t>(width));
    push_be32(static_cast<std::uint32_t>(height));
    ihdr.push_back(8);   // bit depth
    ihdr.push_back(0);   // grayscale
    ihdr.push_back(0);   // compression
    ihdr.push_back(0);   // filter
    ihdr.push_back(0);   // no interlace
    detail::png_chunk(out, "IHDR", ihdr);
    detail::png_chunk(out, "IDAT", compressed);
    detail::png_chunk(out, "IEND", "");

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("short write: " + path);
}

// Tone-mapped 8-bit preview of a radiance map.
inline void write_preview_png(const std::string& path, const RadianceMap& map, double mu) {
    const double ref = percentile(map.values, 99.9);
    const RadianceMap tm = mu_tonemap(normalize_unit(map, ref > 0.0 ? ref : 1.0), mu);
    std::vector<std::uint8_t> bytes(tm.size());
    for (std::size_t i = 0; i < tm.size(); ++i)
        bytes[i] = static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(tm.values[i], 0.0, 1.0)));
    write_png_gray8(path, map.width, map.height, bytes);
}

// ---------------------------------------------------------------- JSON

inline void to_json(json& j, const SensorConfig& c) {
    j = json{{"qe", c.qe},
             {"dark_current", c.dark_current},
             {"read_noise_base", c.read_noise_base},
             {"full_well", c.full_well},
             {"adc_bits", c.adc_bits},
             {"adc_lower", c.adc_lower},
             {"adc_lsb_base", c.adc_lsb_base},
             {"v_max", c.v_max}};
}

inline void from_json(const json& j, SensorConfig& c) {
    j.at("qe").get_to(c.qe);
    j.at("dark_current").get_to(c.dark_current);
    j.at("read_noise_base").get_to(c.read_noise_base);
    j.at("full_well").get_to(c.full_well);
    j.at("adc_bits").get_to(c.adc_bits);
    j.at("adc_lower").get_to(c.adc_lower);
    j.at("adc_lsb_base").get_to(c.adc_lsb_base);
    j.at("v_max").get_to(c.v_max);
    c.require_valid();
}

inline void to_json(json& j, const Level& l) { j = json{{"tau", l.tau}, {"alpha", l.alpha}}; }

inline void from_json(const json& j, Level& l) {
    j.at("tau").get_to(l.tau);
    j.at("alpha").get_to(l.alpha);
}

inline void to_json(json& j, const LevelSet& ls) { j = json{{"levels", ls.levels}}; }

inline void from_json(const json& j, LevelSet& ls) {
    std::vector<Level> levels = j.at("levels").get<std::vector<Level>>();
    ls = LevelSet::from_levels(std::move(levels));
}

inline void to_json(json& j, const Pattern& p) {
    j = json{{"tau", p.tau}, {"alpha", p.alpha}};
}

inline void from_json(const json& j, Pattern& p) {
    j.at("tau").get_to(p.tau);
    j.at("alpha").get_to(p.alpha);
    p.require_valid();
}

inline void to_json(json& j, const RadianceHistogram& h) {
    j = json{{"bin_edges", h.bin_edges},
             {"weights", h.weights},
             {"saturated_fraction", h.saturated_fraction},
             {"total_pixels", h.total_pixels}};
}

inline void from_json(const json& j, RadianceHistogram& h) {
    j.at("bin_edges").get_to(h.bin_edges);
    j.at("weights").get_to(h.weights);
    j.at("saturated_fraction").get_to(h.saturated_fraction);
    j.at("total_pixels").get_to(h.total_pixels);
    h.require_valid();
}

inline void to_json(json& j, const RawCapture& c) {
    j = json{{"width", c.width},     {"height", c.height}, {"codes", c.codes},
             {"pattern", c.pattern}, {"config", c.config}, {"seed", c.seed}};
}

inline void from_json(const json& j, RawCapture& c) {
    j.at("width").get_to(c.width);
    j.at("height").get_to(c.height);
    j.at("codes").get_to(c.codes);
    j.at("pattern").get_to(c.pattern);
    j.at("config").get_to(c.config);
    j.at("seed").get_to(c.seed);
    if (c.width <= 0 || c.height <= 0 ||
        c.codes.size() != static_cast<std::size_t>(c.width) * c.height)
        throw IoError("RawCapture: dimension/code mismatch");
}

inline json load_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open: " + path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw IoError("invalid JSON in " + path + ": " + e.what());
    }
    return j;
}

inline void save_json(const std::string& path, const json& j) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << j.dump(2) << "\n";
    if (!f) throw IoError("short write: " + path);
}

// ---------------------------------------------------------------- CSV

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

inline void write_rank_csv(const std::string& path, const RankReport& report) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << "rank,pattern_id,tau0,tau1,tau2,tau3,alpha0,alpha1,alpha2,alpha3,risk,infinite\n";
    for (const RankedPattern& row : report.rows) {
        f << row.rank << "," << row.pattern_id;
        for (double t : row.pattern.pattern.tau) f << "," << detail::fmt_double(t);
        for (double a : row.pattern.pattern.alpha) f << "," << detail::fmt_double(a);
        f << "," << detail::fmt_double(row.risk) << "," << (row.infinite ? 1 : 0) << "\n";
    }
    if (!f) throw IoError("short write: " + path);
}

inline void write_score_csv(const std::string& path, const std::string& scene_name,
                            const ScoreTable& table) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << "scene,pattern_id,algorithm,metric,score\n";
    for (std::size_t i = 0; i < table.pattern_ids.size(); ++i)
        for (std::size_t j = 0; j < table.algorithms.size(); ++j)
            for (std::size_t k = 0; k < table.metrics.size(); ++k)
                f << scene_name << "," << table.pattern_ids[i] << "," << table.algorithms[j]
                  << "," << table.metrics[k] << "," << detail::fmt_double(table.at(i, j, k))
                  << "\n";
    if (!f) throw IoError("short write: " + path);
}

}  // namespace sve

#endif
