#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <istream>
#include <iterator>
#include <limits>
#include <ostream>
#include <string>
#include <type_traits>
#include <vector>

#include "qsst/error.hpp"
#include "qsst/signal.hpp"
#include "qsst/tfmatrix.hpp"

namespace qsst {

struct WavInfo {
    std::uint16_t format = 1;  // 1 PCM, 3 IEEE float
    std::uint16_t channels = 1;
    std::uint32_t sample_rate = 0;
    std::uint16_t bits = 16;
};

struct WavData {
    DiscreteSignal signal;  // first channel, real samples in [-1, 1)
    WavInfo info;
    bool channels_discarded = false;
};

namespace detail {

inline std::uint32_t read_u32le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
inline std::uint16_t read_u16le(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline void put_u32le(std::ostream& os, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}
inline void put_u16le(std::ostream& os, std::uint16_t v) {
    const unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
    os.write(reinterpret_cast<const char*>(b), 2);
}

}  // namespace detail

/// RIFF/WAVE reader: PCM 16/24/32-bit and 32-bit float (WAVE_FORMAT_EXTENSIBLE accepted).
/// Multichannel files keep the first channel.
inline WavData read_wav(std::istream& is) {
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw FormatError("wav: not a RIFF/WAVE file");
    }
    WavData out;
    bool have_fmt = false;
    const unsigned char* data = nullptr;
    std::size_t data_size = 0;
    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const unsigned char* id = bytes.data() + pos;
        const std::size_t size = detail::read_u32le(id + 4);
        const std::size_t body = pos + 8;
        const std::size_t avail = std::min(size, bytes.size() - body);
        if (std::memcmp(id, "fmt ", 4) == 0) {
            if (avail < 16) throw FormatError("wav: truncated fmt chunk");
            const unsigned char* f = bytes.data() + body;
            out.info.format = detail::read_u16le(f);
            out.info.channels = detail::read_u16le(f + 2);
            out.info.sample_rate = detail::read_u32le(f + 4);
            out.info.bits = detail::read_u16le(f + 14);
            if (out.info.format == 0xFFFE) {
                if (avail < 26) throw FormatError("wav: truncated extensible fmt chunk");
                out.info.format = detail::read_u16le(f + 24);
            }
            have_fmt = true;
        } else if (std::memcmp(id, "data", 4) == 0) {
            data = bytes.data() + body;
            data_size = avail;
        }
        pos = body + size + (size & 1);
    }
    if (!have_fmt) throw FormatError("wav: missing fmt chunk");
    if (data == nullptr) throw FormatError("wav: missing data chunk");
    const auto& info = out.info;
    if (info.channels == 0 || info.sample_rate == 0) throw FormatError("wav: zero channels or sample rate");
    const bool pcm = info.format == 1 && (info.bits == 16 || info.bits == 24 || info.bits == 32);
    const bool flt = info.format == 3 && info.bits == 32;
    if (!pcm && !flt) {
        throw FormatError("wav: unsupported encoding (format " + std::to_string(info.format) + ", " +
                          std::to_string(info.bits) + " bits)");
    }
    const std::size_t width = info.bits / 8;
    const std::size_t stride = width * info.channels;
    const std::size_t count = data_size / stride;
    out.channels_discarded = info.channels > 1;
    out.signal.fs = info.sample_rate;
    out.signal.samples.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const unsigned char* p = data + i * stride;
        double v = 0.0;
        if (flt) {
            float f;
            const std::uint32_t u = detail::read_u32le(p);
            std::memcpy(&f, &u, 4);
            v = f;
        } else if (width == 2) {
            v = static_cast<std::int16_t>(detail::read_u16le(p)) / 32768.0;
        } else if (width == 3) {
            std::int32_t s = static_cast<std::int32_t>(p[0] | (p[1] << 8) | (p[2] << 16));
            if (s & 0x800000) s -= 0x1000000;
            v = s / 8388608.0;
        } else {
            v = static_cast<std::int32_t>(detail::read_u32le(p)) / 2147483648.0;
        }
        out.signal.samples[i] = cplx(v, 0.0);
    }
    return out;
}

inline WavData read_wav(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open '" + path + "'");
    return read_wav(f);
}

/// Mono 32-bit float WAV of the real parts.
inline void write_wav(std::ostream& os, const DiscreteSignal& s) {
    detail::require(s.fs > 0.0 && s.fs < 4.3e9, "wav: sample rate out of range");
    const auto n = static_cast<std::uint32_t>(s.samples.size());
    const std::uint32_t data_bytes = n * 4;
    os.write("RIFF", 4);
    detail::put_u32le(os, 36 + data_bytes);
    os.write("WAVEfmt ", 8);
    detail::put_u32le(os, 16);
    detail::put_u16le(os, 3);
    detail::put_u16le(os, 1);
    const auto rate = static_cast<std::uint32_t>(std::llround(s.fs));
    detail::put_u32le(os, rate);
    detail::put_u32le(os, rate * 4);
    detail::put_u16le(os, 4);
    detail::put_u16le(os, 32);
    os.write("data", 4);
    detail::put_u32le(os, data_bytes);
    for (const auto& z : s.samples) {
        const float f = static_cast<float>(z.real());
        std::uint32_t u;
        std::memcpy(&u, &f, 4);
        detail::put_u32le(os, u);
    }
}

inline void write_wav(const std::string& path, const DiscreteSignal& s) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot write '" + path + "'");
    write_wav(f, s);
}

/// 8-bit binary PGM of log2(1 + v) (v = energy), affinely scaled to [0, 255]. Time runs
/// left to right, frequency bottom to top; only bins below `max_bin` are drawn.
inline void write_pgm(std::ostream& os, std::size_t frames, std::size_t bins, std::size_t max_bin,
                      const std::function<double(std::size_t, std::size_t)>& energy) {
    max_bin = std::min(max_bin, bins);
    detail::require(frames > 0 && max_bin > 0, "pgm: empty image");
    std::vector<double> img(frames * max_bin);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t k = 0; k < max_bin; ++k) {
        for (std::size_t n = 0; n < frames; ++n) {
            const double v = std::log2(1.0 + std::max(0.0, energy(n, k)));
            img[(max_bin - 1 - k) * frames + n] = v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    const double span = hi > lo ? hi - lo : 1.0;
    os << "P5\n" << frames << ' ' << max_bin << "\n255\n";
    for (double v : img) {
        const auto b = static_cast<unsigned char>(std::clamp(std::lround(255.0 * (v - lo) / span), 0L, 255L));
        os.put(static_cast<char>(b));
    }
}

template <class T>
void write_pgm(std::ostream& os, const TfMatrix<T>& m) {
    write_pgm(os, m.frames(), m.bins(), m.bins() / 2 + 1, [&](std::size_t n, std::size_t k) {
        if constexpr (std::is_same_v<T, cplx>) {
            return std::norm(m(n, k));
        } else {
            return static_cast<double>(m(n, k));
        }
    });
}

/// Little-endian float64 samples (interleaved re, im for complex signals).
inline void write_raw(std::ostream& os, const DiscreteSignal& s, bool complex_samples) {
    for (const auto& z : s.samples) {
        const double parts[2] = {z.real(), z.imag()};
        for (int i = 0; i < (complex_samples ? 2 : 1); ++i) {
            std::uint64_t u;
            std::memcpy(&u, &parts[i], 8);
            for (int b = 0; b < 8; ++b) os.put(static_cast<char>((u >> (8 * b)) & 0xFF));
        }
    }
}

}  // namespace qsst
