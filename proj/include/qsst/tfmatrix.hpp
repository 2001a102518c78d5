#pragma once

#include <algorithm>
#include <bit>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include <nlohmann/json.hpp>

#include "qsst/error.hpp"
#include "qsst/fft.hpp"

namespace qsst {

enum class TfKind { Stft, StftFreqShifted, SstCoefficients, SstMagnitude, RmEnergy, Energy };

inline std::string to_string(TfKind k) {
    switch (k) {
        case TfKind::Stft: return "complex-stft";
        case TfKind::StftFreqShifted: return "complex-stft-freq-shifted";
        case TfKind::SstCoefficients: return "sst-coeff";
        case TfKind::SstMagnitude: return "sst-magnitude";
        case TfKind::RmEnergy: return "rm-energy";
        case TfKind::Energy: return "real-energy";
    }
    return "real-energy";
}

inline TfKind tf_kind_from_string(const std::string& s) {
    for (auto k : {TfKind::Stft, TfKind::StftFreqShifted, TfKind::SstCoefficients, TfKind::SstMagnitude,
                   TfKind::RmEnergy, TfKind::Energy}) {
        if (to_string(k) == s) return k;
    }
    throw FormatError("unknown matrix kind '" + s + "'");
}

/// Dense (frame, bin) matrix with its lattice: frame n starts at n*hop/fs seconds,
/// bin k sits at k*fs/bins Hz.
template <class T>
class TfMatrix {
public:
    TfMatrix() = default;
    TfMatrix(std::size_t frames, std::size_t bins, std::size_t hop, double fs, TfKind kind, std::string label = {})
        : frames_(frames), bins_(bins), hop_(hop), fs_(fs), kind_(kind), label_(std::move(label)),
          values_(frames * bins, T{}) {}

    std::size_t frames() const noexcept { return frames_; }
    std::size_t bins() const noexcept { return bins_; }
    std::size_t hop() const noexcept { return hop_; }
    double fs() const noexcept { return fs_; }
    TfKind kind() const noexcept { return kind_; }
    const std::string& label() const noexcept { return label_; }
    void set_label(std::string l) { label_ = std::move(l); }
    void set_kind(TfKind k) { kind_ = k; }

    double frame_time(std::size_t n) const noexcept { return static_cast<double>(n * hop_) / fs_; }
    double bin_freq(std::size_t k) const noexcept { return static_cast<double>(k) * fs_ / static_cast<double>(bins_); }

    T& operator()(std::size_t n, std::size_t k) noexcept { return values_[n * bins_ + k]; }
    const T& operator()(std::size_t n, std::size_t k) const noexcept { return values_[n * bins_ + k]; }

    std::span<T> frame(std::size_t n) noexcept { return {values_.data() + n * bins_, bins_}; }
    std::span<const T> frame(std::size_t n) const noexcept { return {values_.data() + n * bins_, bins_}; }

    std::vector<T>& values() noexcept { return values_; }
    const std::vector<T>& values() const noexcept { return values_; }

    bool same_grid(const TfMatrix& o) const noexcept {
        return frames_ == o.frames_ && bins_ == o.bins_ && hop_ == o.hop_ && fs_ == o.fs_;
    }

private:
    std::size_t frames_ = 0;
    std::size_t bins_ = 0;
    std::size_t hop_ = 1;
    double fs_ = 1.0;
    TfKind kind_ = TfKind::Energy;
    std::string label_;
    std::vector<T> values_;
};

using StftMatrix = TfMatrix<cplx>;
using EnergyMatrix = TfMatrix<double>;

inline EnergyMatrix energy_of(const StftMatrix& m) {
    EnergyMatrix e(m.frames(), m.bins(), m.hop(), m.fs(), TfKind::Energy, m.label());
    for (std::size_t i = 0; i < m.values().size(); ++i) e.values()[i] = std::norm(m.values()[i]);
    return e;
}

// TFMATRX1 container ------------------------------------------------------------
//   8 bytes magic "TFMATRX1", u32 LE header length, JSON header, LE payload.

inline constexpr char kContainerMagic[8] = {'T', 'F', 'M', 'A', 'T', 'R', 'X', '1'};

namespace detail {

template <class U>
void put_le(std::ostream& os, U v) {
    static_assert(std::is_trivially_copyable_v<U>);
    unsigned char bytes[sizeof(U)];
    std::memcpy(bytes, &v, sizeof(U));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(U));
    os.write(reinterpret_cast<const char*>(bytes), sizeof(U));
}

template <class U>
U get_le(const unsigned char* p) {
    unsigned char bytes[sizeof(U)];
    std::memcpy(bytes, p, sizeof(U));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(U));
    U v;
    std::memcpy(&v, bytes, sizeof(U));
    return v;
}

}  // namespace detail

struct Container {
    nlohmann::json header;
    std::vector<unsigned char> payload;
};

inline void write_container(std::ostream& os, const nlohmann::json& header, std::span<const unsigned char> payload) {
    const std::string h = header.dump();
    os.write(kContainerMagic, 8);
    detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(h.size()));
    os.write(h.data(), static_cast<std::streamsize>(h.size()));
    os.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
    if (!os) throw FormatError("TFMATRX1: write failed");
}

inline Container read_container(std::istream& is) {
    char magic[8] = {};
    is.read(magic, 8);
    if (is.gcount() != 8 || std::memcmp(magic, kContainerMagic, 8) != 0) throw FormatError("TFMATRX1: bad magic");
    unsigned char len_bytes[4];
    is.read(reinterpret_cast<char*>(len_bytes), 4);
    if (is.gcount() != 4) throw FormatError("TFMATRX1: truncated header length");
    const auto len = detail::get_le<std::uint32_t>(len_bytes);
    std::string h(len, '\0');
    is.read(h.data(), len);
    if (static_cast<std::uint32_t>(is.gcount()) != len) throw FormatError("TFMATRX1: truncated header");
    Container c;
    try {
        c.header = nlohmann::json::parse(h);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("TFMATRX1: header is not JSON: ") + e.what());
    }
    c.payload.assign(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
    return c;
}

template <class T>
void write_tfmatrix(std::ostream& os, const TfMatrix<T>& m, const nlohmann::json& extra = {}) {
    constexpr bool is_complex = std::is_same_v<T, cplx>;
    nlohmann::json header{{"dtype", is_complex ? "c64f" : "f64"},
                          {"rows", m.frames()},
                          {"cols", m.bins()},
                          {"fs", m.fs()},
                          {"hop", m.hop()},
                          {"window_label", m.label()},
                          {"kind", to_string(m.kind())}};
    const bool stft_like = m.kind() == TfKind::Stft || m.kind() == TfKind::StftFreqShifted;
    header[stft_like ? "fft_size" : "kbins"] = m.bins();
    if (extra.is_object()) {
        for (auto it = extra.begin(); it != extra.end(); ++it) header[it.key()] = it.value();
    }
    std::vector<unsigned char> payload;
    payload.reserve(m.values().size() * sizeof(T));
    auto push = [&](double v) {
        unsigned char b[8];
        std::memcpy(b, &v, 8);
        if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + 8);
        payload.insert(payload.end(), b, b + 8);
    };
    for (const auto& v : m.values()) {
        if constexpr (is_complex) {
            push(v.real());
            push(v.imag());
        } else {
            push(v);
        }
    }
    write_container(os, header, payload);
}

template <class T>
TfMatrix<T> tfmatrix_from_container(const Container& c) {
    constexpr bool is_complex = std::is_same_v<T, cplx>;
    const auto& h = c.header;
    try {
        const std::string dtype = h.at("dtype").get<std::string>();
        if (dtype != (is_complex ? "c64f" : "f64")) throw FormatError("TFMATRX1: unexpected dtype " + dtype);
        const auto rows = h.at("rows").get<std::size_t>();
        const auto cols = h.at("cols").get<std::size_t>();
        TfMatrix<T> m(rows, cols, h.at("hop").get<std::size_t>(), h.at("fs").get<double>(),
                      tf_kind_from_string(h.at("kind").get<std::string>()), h.value("window_label", std::string{}));
        const std::size_t expected = rows * cols * sizeof(T);
        if (c.payload.size() != expected) throw FormatError("TFMATRX1: payload size mismatch");
        const unsigned char* p = c.payload.data();
        for (auto& v : m.values()) {
            if constexpr (is_complex) {
                v = cplx(detail::get_le<double>(p), detail::get_le<double>(p + 8));
                p += 16;
            } else {
                v = detail::get_le<double>(p);
                p += 8;
            }
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("TFMATRX1: bad header: ") + e.what());
    }
}

template <class T>
TfMatrix<T> read_tfmatrix(std::istream& is) {
    return tfmatrix_from_container<T>(read_container(is));
}

template <class T>
void save_tfmatrix(const std::string& path, const TfMatrix<T>& m, const nlohmann::json& extra = {}) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InputError("cannot open '" + path + "' for writing");
    write_tfmatrix(os, m, extra);
}

template <class T>
TfMatrix<T> load_tfmatrix(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputError("cannot open '" + path + "'");
    return read_tfmatrix<T>(is);
}

}  // namespace qsst
