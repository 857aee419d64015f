#pragma once

// File formats:
//   signal CSV   "fs=<Hz>" header line, then one sample per line
//   signal WAV   RIFF/WAVE mono, PCM 16/24/32-bit or IEEE float 32/64-bit
//   map CSV      first row: corner label then the eps grid; each further row: f then the cells
//   spectrogram  same layout with time in the first row
// Numbers are written with 17 significant digits so that re-reading is exact.

#include <algorithm>
#include <array>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <thread>
#include <vector>

#include "robustsc/errors.hpp"
#include "robustsc/metrics.hpp"
#include "robustsc/signal.hpp"
#include "robustsc/spectral.hpp"

namespace robustsc {

enum class SignalFormat { Csv, Wav };

namespace detail {

inline std::string format_double(double v) {
    std::array<char, 40> buf{};
    const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
    return std::string(buf.data(), r.ptr);
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::optional<double> parse_double(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::string where(const std::filesystem::path& p, std::size_t line) {
    return p.string() + ":" + std::to_string(line) + ": ";
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
    return std::move(ss).str();
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        lines.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return lines;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

inline std::uint32_t le_u32(const unsigned char* p) {
    return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}
inline std::uint16_t le_u16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | p[1] << 8); }

} // namespace detail

/// Writes `contents` to a sibling temp file and renames it over `path`.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
    }
    fs::path tmp = path;
    static std::atomic<std::uint64_t> counter{0};
    tmp += ".tmp-" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()) & 0xffffffu) + "-" +
           std::to_string(counter++);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) {
            out.close();
            fs::remove(tmp);
            throw IoError("write failure on '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw IoError("cannot rename onto '" + path.string() + "': " + ec.message());
    }
}

inline std::optional<SignalFormat> format_from_extension(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if (ext == ".csv" || ext == ".txt") return SignalFormat::Csv;
    if (ext == ".wav") return SignalFormat::Wav;
    return std::nullopt;
}

/// Parses a signal CSV. `fs_override` replaces the header value and is
/// required when the header is missing.
inline Signal parse_signal_csv(std::string_view text, const std::filesystem::path& origin,
                               std::optional<double> fs_override = std::nullopt) {
    const auto lines = detail::split_lines(text);
    std::optional<double> fs;
    std::vector<double> samples;
    bool header_seen = false;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto line = detail::trim(lines[i]);
        if (line.empty()) continue;
        if (!header_seen && samples.empty() && line.starts_with("fs=")) {
            header_seen = true;
            fs = detail::parse_double(line.substr(3));
            if (!fs || !(*fs > 0.0) || !std::isfinite(*fs))
                throw FormatError(detail::where(origin, i + 1) + "malformed header, expected fs=<positive Hz>");
            continue;
        }
        const auto v = detail::parse_double(line);
        if (!v) throw FormatError(detail::where(origin, i + 1) + "not a number: '" + std::string(line) + "'");
        if (!std::isfinite(*v)) throw FormatError(detail::where(origin, i + 1) + "non-finite sample");
        samples.push_back(*v);
    }
    if (fs_override) fs = fs_override;
    if (!fs)
        throw InvalidParameter("'" + origin.string() + "' has no fs= header; the sampling rate must be given explicitly");
    if (samples.empty()) throw FormatError(origin.string() + ": no samples");
    return Signal(std::move(samples), *fs, origin.stem().string());
}

/// Parses a mono WAV image. Integer PCM is scaled by 2^-(bits-1) into [-1, 1).
inline Signal parse_signal_wav(std::string_view bytes_in, const std::filesystem::path& origin,
                               std::optional<double> fs_override = std::nullopt) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(bytes_in.data());
    const std::size_t size = bytes_in.size();
    auto fail = [&](std::size_t off, const std::string& what) -> FormatError {
        return FormatError(origin.string() + ": byte " + std::to_string(off) + ": " + what);
    };
    if (size < 12 || std::memcmp(bytes, "RIFF", 4) != 0 || std::memcmp(bytes + 8, "WAVE", 4) != 0)
        throw fail(0, "not a RIFF/WAVE file");

    std::uint16_t audio_format = 0, channels = 0, bits = 0, block_align = 0;
    std::uint32_t rate = 0;
    bool have_fmt = false;
    std::size_t data_off = 0, data_len = 0;
    bool have_data = false;

    std::size_t off = 12;
    while (off + 8 <= size) {
        const std::uint32_t len = detail::le_u32(bytes + off + 4);
        const std::size_t body = off + 8;
        if (std::memcmp(bytes + off, "fmt ", 4) == 0) {
            if (len < 16 || body + len > size) throw fail(off, "truncated fmt chunk");
            audio_format = detail::le_u16(bytes + body);
            channels = detail::le_u16(bytes + body + 2);
            rate = detail::le_u32(bytes + body + 4);
            block_align = detail::le_u16(bytes + body + 12);
            bits = detail::le_u16(bytes + body + 14);
            if (audio_format == 0xFFFE) {
                if (len < 40) throw fail(off, "truncated WAVE_FORMAT_EXTENSIBLE chunk");
                audio_format = detail::le_u16(bytes + body + 24);
            }
            have_fmt = true;
        } else if (std::memcmp(bytes + off, "data", 4) == 0) {
            if (!have_fmt) throw fail(off, "data chunk before fmt chunk");
            data_off = body;
            data_len = std::min<std::size_t>(len, size - body);
            have_data = true;
            break;
        }
        off = body + len + (len & 1u);
    }
    if (!have_fmt) throw fail(12, "missing fmt chunk");
    if (!have_data) throw fail(off, "missing data chunk");
    if (channels != 1) throw fail(12, "expected a single channel, found " + std::to_string(channels));
    const bool is_pcm = audio_format == 1 && (bits == 16 || bits == 24 || bits == 32);
    const bool is_float = audio_format == 3 && (bits == 32 || bits == 64);
    if (!is_pcm && !is_float)
        throw fail(12, "unsupported sample format " + std::to_string(audio_format) + " with " + std::to_string(bits) +
                           " bits");
    const std::size_t width = bits / 8u;
    if (block_align != width) throw fail(12, "block alignment does not match sample width");
    if (rate == 0 && !fs_override) throw fail(12, "sampling rate is zero");

    const std::size_t n = data_len / width;
    if (n == 0) throw fail(data_off, "no samples");
    std::vector<double> samples(n);
    const double scale = std::ldexp(1.0, -(static_cast<int>(bits) - 1));
    for (std::size_t i = 0; i < n; ++i) {
        const unsigned char* p = bytes + data_off + i * width;
        double v = 0.0;
        if (is_pcm) {
            std::int64_t raw = 0;
            for (std::size_t b = 0; b < width; ++b) raw |= std::int64_t(p[b]) << (8 * b);
            const std::int64_t sign_bit = std::int64_t(1) << (bits - 1);
            if (raw & sign_bit) raw -= sign_bit << 1;
            v = static_cast<double>(raw) * scale;
        } else if (bits == 32) {
            float f;
            std::memcpy(&f, p, 4);
            v = f;
        } else {
            std::memcpy(&v, p, 8);
        }
        if (!std::isfinite(v)) throw fail(data_off + i * width, "non-finite sample");
        samples[i] = v;
    }
    return Signal(std::move(samples), fs_override ? *fs_override : static_cast<double>(rate), origin.stem().string());
}

/// Reads a signal; the format defaults to the file extension.
inline Signal read_signal(const std::filesystem::path& path, std::optional<SignalFormat> format = std::nullopt,
                          std::optional<double> fs_override = std::nullopt) {
    if (!format) format = format_from_extension(path);
    if (!format) throw InvalidParameter("cannot infer signal format of '" + path.string() + "'; use csv or wav");
    const std::string bytes = detail::read_file(path);
    return *format == SignalFormat::Csv ? parse_signal_csv(bytes, path, fs_override)
                                        : parse_signal_wav(bytes, path, fs_override);
}

inline std::string format_signal_csv(const Signal& x) {
    std::string out = "fs=" + detail::format_double(x.fs()) + "\n";
    out.reserve(out.size() + x.size() * 24);
    for (double v : x.samples()) {
        out += detail::format_double(v);
        out += '\n';
    }
    return out;
}

inline void write_signal(const Signal& x, const std::filesystem::path& path) {
    write_file_atomic(path, format_signal_csv(x));
}

namespace detail {

inline std::string format_grid_csv(std::string_view corner, std::span<const double> cols,
                                   std::span<const double> rows, const Grid& g) {
    std::string out(corner);
    for (double c : cols) {
        out += ',';
        out += format_double(c);
    }
    out += '\n';
    for (std::size_t r = 0; r < g.rows(); ++r) {
        out += format_double(rows[r]);
        for (std::size_t c = 0; c < g.cols(); ++c) {
            out += ',';
            out += format_double(g(r, c));
        }
        out += '\n';
    }
    return out;
}

struct ParsedGrid {
    std::string corner;
    std::vector<double> cols;
    std::vector<double> rows;
    Grid values;
};

inline ParsedGrid parse_grid_csv(std::string_view text, const std::filesystem::path& origin) {
    const auto lines = split_lines(text);
    ParsedGrid pg;
    std::size_t first = 0;
    while (first < lines.size() && trim(lines[first]).empty()) ++first;
    if (first == lines.size()) throw FormatError(origin.string() + ": empty grid file");
    const auto head = split_fields(trim(lines[first]));
    if (head.size() < 2) throw FormatError(where(origin, first + 1) + "header needs at least one column");
    pg.corner = std::string(trim(head[0]));
    for (std::size_t k = 1; k < head.size(); ++k) {
        const auto v = parse_double(head[k]);
        if (!v) throw FormatError(where(origin, first + 1) + "bad header field " + std::to_string(k + 1));
        pg.cols.push_back(*v);
    }
    std::vector<double> cells;
    for (std::size_t i = first + 1; i < lines.size(); ++i) {
        const auto line = trim(lines[i]);
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != head.size())
            throw FormatError(where(origin, i + 1) + "expected " + std::to_string(head.size()) + " fields, found " +
                              std::to_string(fields.size()));
        for (std::size_t k = 0; k < fields.size(); ++k) {
            const auto v = parse_double(fields[k]);
            if (!v || !std::isfinite(*v))
                throw FormatError(where(origin, i + 1) + "bad number in field " + std::to_string(k + 1));
            if (k == 0) pg.rows.push_back(*v);
            else cells.push_back(*v);
        }
    }
    if (pg.rows.empty()) throw FormatError(origin.string() + ": grid has no rows");
    pg.values = Grid(pg.rows.size(), pg.cols.size());
    std::copy(cells.begin(), cells.end(), pg.values.data().begin());
    return pg;
}

} // namespace detail

inline constexpr std::string_view kMapCorner = "f_hz\\eps_hz";
inline constexpr std::string_view kSpectrogramCorner = "f_hz\\t_s";

inline std::string format_map_csv(const SCMap& m) {
    return detail::format_grid_csv(kMapCorner, m.eps_grid, m.f_grid, m.values);
}

inline void write_map(const SCMap& m, const std::filesystem::path& path) { write_file_atomic(path, format_map_csv(m)); }

/// Reads a map CSV. Estimator metadata is not stored in the file; `rescaled`
/// is set when the maximum cell equals 1.
inline SCMap read_map(const std::filesystem::path& path) {
    auto pg = detail::parse_grid_csv(detail::read_file(path), path);
    SCMap m;
    m.values = std::move(pg.values);
    m.f_grid = std::move(pg.rows);
    m.eps_grid = std::move(pg.cols);
    m.rescaled = m.values.max() == 1.0;
    return m;
}

inline void write_spectrogram(const Spectrogram& s, const std::filesystem::path& path) {
    write_file_atomic(path, detail::format_grid_csv(kSpectrogramCorner, s.t_grid, s.f_grid, s.magnitudes));
}

/// Per-eps table: eps, R_gamma, cyclic flag and, when present, R'_gamma.
inline std::string format_ratio_csv(const MetricsReport& r) {
    std::string out = r.column_profile ? "eps_hz,r_gamma,cyclic,r_prime\n" : "eps_hz,r_gamma,cyclic\n";
    for (std::size_t i = 0; i < r.amp_ratio.size(); ++i) {
        const auto& p = r.amp_ratio[i];
        const bool cyc = std::find(r.cyclic_eps.begin(), r.cyclic_eps.end(), p.eps) != r.cyclic_eps.end();
        out += detail::format_double(p.eps) + ',' + detail::format_double(p.value) + (cyc ? ",1" : ",0");
        if (r.column_profile) out += ',' + detail::format_double((*r.column_profile)[i].value);
        out += '\n';
    }
    return out;
}

} // namespace robustsc
