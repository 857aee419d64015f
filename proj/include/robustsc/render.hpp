#pragma once

// Minimal heatmap rendering to PNG. The horizontal axis is eps (or time), the
// vertical axis is f increasing upwards. No text or axes are drawn; the
// numeric grids are the CSV outputs.

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "robustsc/errors.hpp"
#include "robustsc/io.hpp"
#include "robustsc/signal.hpp"
#include "robustsc/spectral.hpp"

namespace robustsc {

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct Image {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<Rgb> pixels; // row-major, row 0 at the top

    Rgb& at(std::size_t x, std::size_t y) { return pixels[y * width + x]; }
    const Rgb& at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
};

struct RenderOptions {
    double width_in = 8.0;
    double height_in = 6.0;
    double dpi = 100.0;
    bool log_scale = false;         // 20 log10, clipped to 80 dB below the maximum
    std::optional<Band> band;       // red horizontal lines at lo and hi
    std::vector<double> cyclic_eps; // dashed white vertical markers

    std::size_t pixel_width() const { return static_cast<std::size_t>(std::lround(width_in * dpi)); }
    std::size_t pixel_height() const { return static_cast<std::size_t>(std::lround(height_in * dpi)); }
};

inline constexpr Rgb kBandColor{228, 26, 28};
inline constexpr Rgb kMarkerColor{255, 255, 255};

/// Viridis, linearly interpolated between nine reference colours.
inline Rgb viridis(double t) {
    static constexpr std::array<Rgb, 9> lut{{{0x44, 0x01, 0x54},
                                             {0x47, 0x2D, 0x7B},
                                             {0x3B, 0x52, 0x8B},
                                             {0x2C, 0x72, 0x8E},
                                             {0x21, 0x90, 0x8C},
                                             {0x27, 0xAD, 0x81},
                                             {0x5D, 0xC8, 0x63},
                                             {0xAA, 0xDC, 0x32},
                                             {0xFD, 0xE7, 0x25}}};
    if (!(t > 0.0)) return lut.front();
    if (t >= 1.0) return lut.back();
    const double x = t * static_cast<double>(lut.size() - 1);
    const auto i = static_cast<std::size_t>(x);
    const double w = x - static_cast<double>(i);
    auto mix = [w](std::uint8_t a, std::uint8_t b) {
        return static_cast<std::uint8_t>(std::lround((1.0 - w) * a + w * b));
    };
    return {mix(lut[i].r, lut[i + 1].r), mix(lut[i].g, lut[i + 1].g), mix(lut[i].b, lut[i + 1].b)};
}

/// Pixel position of `v` on an axis spanning [lo, hi] over `pixels` pixels
/// (0 at lo). Returns nullopt outside the axis.
inline std::optional<std::size_t> axis_pixel(double v, double lo, double hi, std::size_t pixels) {
    if (pixels == 0 || v < lo || v > hi) return std::nullopt;
    if (hi == lo) return 0;
    const double pos = (v - lo) / (hi - lo) * static_cast<double>(pixels - 1);
    return static_cast<std::size_t>(std::lround(pos));
}

/// Image row for frequency `f` given the f grid of the rendered matrix.
inline std::optional<std::size_t> frequency_row(double f, std::span<const double> f_grid, std::size_t height) {
    if (f_grid.empty()) return std::nullopt;
    const auto p = axis_pixel(f, f_grid.front(), f_grid.back(), height);
    if (!p) return std::nullopt;
    return height - 1 - *p;
}

inline Image render_grid(const Grid& g, std::span<const double> x_axis, std::span<const double> f_axis,
                         const RenderOptions& opt) {
    if (g.empty()) throw InvalidInput("cannot render an empty matrix");
    if (x_axis.size() != g.cols() || f_axis.size() != g.rows())
        throw InvalidInput("axis lengths do not match the matrix shape");
    if (!(opt.dpi > 0.0) || !(opt.width_in > 0.0) || !(opt.height_in > 0.0))
        throw InvalidParameter("image size and dpi must be positive");
    Image img;
    img.width = opt.pixel_width();
    img.height = opt.pixel_height();
    if (img.width == 0 || img.height == 0 || img.width > 20000 || img.height > 20000)
        throw InvalidParameter("image size out of range");
    img.pixels.resize(img.width * img.height);

    auto transform = [&](double v) {
        if (!opt.log_scale) return v;
        return 20.0 * std::log10(std::max(std::abs(v), 1e-300));
    };
    double hi = -INFINITY, lo = INFINITY;
    for (double v : g.data()) {
        hi = std::max(hi, transform(v));
        lo = std::min(lo, transform(v));
    }
    if (opt.log_scale) lo = std::max(lo, hi - 80.0);
    else lo = std::min(lo, 0.0);
    const double span = hi > lo ? hi - lo : 1.0;

    for (std::size_t y = 0; y < img.height; ++y) {
        const std::size_t r = g.rows() - 1 - y * g.rows() / img.height;
        for (std::size_t x = 0; x < img.width; ++x) {
            const std::size_t c = x * g.cols() / img.width;
            img.at(x, y) = viridis((transform(g(r, c)) - lo) / span);
        }
    }

    for (double e : opt.cyclic_eps) {
        // Marker at the centre of the column holding eps.
        const auto it = std::find(x_axis.begin(), x_axis.end(), e);
        if (it == x_axis.end()) continue;
        const auto c = static_cast<std::size_t>(it - x_axis.begin());
        const std::size_t x = std::min(img.width - 1, (2 * c + 1) * img.width / (2 * g.cols()));
        for (std::size_t y = 0; y < img.height; ++y)
            if ((y / 6) % 2 == 0) img.at(x, y) = kMarkerColor;
    }
    if (opt.band) {
        for (double f : {opt.band->lo, opt.band->hi}) {
            const auto y = frequency_row(f, f_axis, img.height);
            if (!y) continue;
            for (std::size_t x = 0; x < img.width; ++x) img.at(x, *y) = kBandColor;
        }
    }
    return img;
}

inline Image render_map(const SCMap& m, const RenderOptions& opt) {
    return render_grid(m.values, m.eps_grid, m.f_grid, opt);
}

inline Image render_spectrogram(const Spectrogram& s, RenderOptions opt) {
    opt.cyclic_eps.clear();
    return render_grid(s.magnitudes, s.t_grid, s.f_grid, opt);
}

namespace detail {

inline void png_append(png_structp png, png_bytep data, png_size_t len) {
    auto* out = static_cast<std::string*>(png_get_io_ptr(png));
    out->append(reinterpret_cast<const char*>(data), len);
}
inline void png_noop_flush(png_structp) {}

} // namespace detail

/// Encodes an 8-bit RGB PNG with fixed compression settings and a pHYs chunk.
inline std::string encode_png(const Image& img, double dpi) {
    std::string out;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw Error("libpng: cannot create write struct");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw Error("libpng: cannot create info struct");
    }
    std::vector<png_bytep> rows(img.height);
    for (std::size_t y = 0; y < img.height; ++y)
        rows[y] = reinterpret_cast<png_bytep>(const_cast<Rgb*>(img.pixels.data() + y * img.width));
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error("libpng: encoding failed");
    }
    png_set_write_fn(png, &out, detail::png_append, detail::png_noop_flush);
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    const auto ppm = static_cast<png_uint_32>(std::lround(dpi / 0.0254));
    png_set_pHYs(png, info, ppm, ppm, PNG_RESOLUTION_METER);
    png_set_compression_level(png, 6);
    png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_NONE);
    png_set_rows(png, info, rows.data());
    png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

inline void write_png(const Image& img, double dpi, const std::filesystem::path& path) {
    write_file_atomic(path, encode_png(img, dpi));
}

inline void render_heatmap(const SCMap& m, const std::filesystem::path& path, const RenderOptions& opt = {}) {
    write_png(render_map(m, opt), opt.dpi, path);
}

inline void render_heatmap(const Spectrogram& s, const std::filesystem::path& path, const RenderOptions& opt = {}) {
    write_png(render_spectrogram(s, opt), opt.dpi, path);
}

} // namespace robustsc
