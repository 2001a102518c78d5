#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qsst/error.hpp"
#include "qsst/fft.hpp"

namespace qsst {

/// Uniformly sampled complex sequence. Real signals carry zero imaginary parts.
struct DiscreteSignal {
    std::vector<cplx> samples;
    double fs = 1.0;

    std::size_t size() const noexcept { return samples.size(); }
    double dt() const noexcept { return 1.0 / fs; }
    double duration() const noexcept { return static_cast<double>(samples.size()) / fs; }

    bool is_real() const noexcept {
        return std::all_of(samples.begin(), samples.end(), [](const cplx& z) { return z.imag() == 0.0; });
    }

    /// Out-of-range reads are zero; the signal is taken to vanish outside its stored support.
    cplx at(std::ptrdiff_t i) const noexcept {
        if (i < 0 || static_cast<std::size_t>(i) >= samples.size()) return {};
        return samples[static_cast<std::size_t>(i)];
    }

    void validate() const {
        detail::require(fs > 0.0 && std::isfinite(fs), "DiscreteSignal: sample rate must be positive");
        detail::require(!samples.empty(), "DiscreteSignal: signal must have at least one sample");
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (!std::isfinite(samples[i].real()) || !std::isfinite(samples[i].imag())) {
                throw NumericError("DiscreteSignal: non-finite sample at index " + std::to_string(i));
            }
        }
    }
};

/// One AM-FM component A(t) e^{2 pi i phi(t)} with polynomial phase of degree <= 2,
/// phi(t) = phase0 + offset_hz t + chirp_rate t^2 / 2, or user-sampled arrays.
struct ComponentSpec {
    double amplitude = 1.0;
    std::function<double(double)> amplitude_fn;  // overrides `amplitude` when set
    double phase0 = 0.0;                         // cycles
    double offset_hz = 0.0;                      // IF at t = 0
    double chirp_rate = 0.0;                     // Hz/s
    // Sampled overrides, one value per sample at `samples_fs`. Phase in cycles.
    std::vector<double> amplitude_samples;
    std::vector<double> phase_samples;
    double samples_fs = 0.0;

    double amplitude_at(double t) const {
        if (!amplitude_samples.empty()) return amplitude_samples[sample_index(t, amplitude_samples.size())];
        if (amplitude_fn) return amplitude_fn(t);
        return amplitude;
    }

    double phase_at(double t) const {
        if (!phase_samples.empty()) return phase_samples[sample_index(t, phase_samples.size())];
        return phase0 + offset_hz * t + 0.5 * chirp_rate * t * t;
    }

    double inst_freq(double t) const {
        if (!phase_samples.empty()) {
            const std::size_t n = phase_samples.size();
            if (n < 2) return 0.0;
            const std::size_t i = sample_index(t, n);
            const std::size_t lo = i == 0 ? 0 : i - 1;
            const std::size_t hi = i + 1 >= n ? n - 1 : i + 1;
            return (phase_samples[hi] - phase_samples[lo]) * samples_fs / static_cast<double>(hi - lo);
        }
        return offset_hz + chirp_rate * t;
    }

private:
    std::size_t sample_index(double t, std::size_t n) const {
        const double pos = std::round(t * samples_fs);
        if (pos <= 0.0) return 0;
        return std::min(static_cast<std::size_t>(pos), n - 1);
    }
};

/// A full synthesis request: components plus sampling grid.
struct SignalSpec {
    std::vector<ComponentSpec> components;
    double duration = 5.0;
    double fs = 44100.0;
    bool real_valued = true;
};

/// The four crossing linear chirps used throughout the benchmark.
inline SignalSpec crossing_chirps(double duration = 5.0, double fs = 44100.0) {
    SignalSpec spec;
    spec.duration = duration;
    spec.fs = fs;
    spec.real_valued = true;
    const double offsets[] = {5000.0, 8000.0, 12000.0, 15000.0};
    const double rates[] = {2000.0, 800.0, -800.0, -2000.0};
    for (int m = 0; m < 4; ++m) {
        ComponentSpec c;
        c.offset_hz = offsets[m];
        c.chirp_rate = rates[m];
        spec.components.push_back(c);
    }
    return spec;
}

inline std::size_t sample_count(double duration, double fs) {
    detail::require(duration > 0.0 && std::isfinite(duration), "duration must be positive");
    detail::require(fs > 0.0 && std::isfinite(fs), "sample rate must be positive");
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(duration * fs)));
}

namespace detail {

inline double frac(double x) { return x - std::floor(x); }

/// Fractional part of a * b / d, keeping the rounding error of the product.
/// fmod is exact, so only the final division rounds.
inline double frac_ratio(double a, double b, double d) {
    const double p = a * b;
    const double err = std::fma(a, b, -p);
    return frac((std::fmod(p, d) + err) / d);
}

}  // namespace detail

/// Sum of components sampled at fs over [0, duration). With `real_valued`, returns
/// the real part (sum of A cos(2 pi phi)).
inline DiscreteSignal synth_components(const std::vector<ComponentSpec>& specs, double duration, double fs,
                                       bool real_valued) {
    const std::size_t count = sample_count(duration, fs);
    const double nyquist = fs / 2.0;
    for (std::size_t m = 0; m < specs.size(); ++m) {
        for (std::size_t l = 0; l < count; ++l) {
            const double t = static_cast<double>(l) / fs;
            const double f = specs[m].inst_freq(t);
            if (!(f > 0.0 && f < nyquist)) {
                std::ostringstream msg;
                msg << "synth_components: component " << m << " has IF " << f << " Hz at t = " << t
                    << " s, outside (0, " << nyquist << ") Hz";
                throw InputError(msg.str());
            }
        }
    }

    DiscreteSignal out;
    out.fs = fs;
    out.samples.assign(count, cplx{});
    for (const auto& spec : specs) {
        const bool polynomial = spec.phase_samples.empty();
        const double half_rate = 0.5 * spec.chirp_rate;
        const double fs2 = fs * fs;
        for (std::size_t l = 0; l < count; ++l) {
            const double t = static_cast<double>(l) / fs;
            double phase;
            if (polynomial) {
                // reduce each term separately; a plain phi(l dt) loses ~1e-11 cycles at large l
                const double ld = static_cast<double>(l);
                phase = detail::frac(spec.phase0) + detail::frac_ratio(ld, spec.offset_hz, fs) +
                        detail::frac_ratio(ld * ld, half_rate, fs2);
            } else {
                phase = spec.phase_at(t);
            }
            phase -= std::floor(phase);
            const double arg = 2.0 * std::numbers::pi * phase;
            const double a = spec.amplitude_at(t);
            out.samples[l] += a * cplx(std::cos(arg), real_valued ? 0.0 : std::sin(arg));
        }
    }
    return out;
}

inline DiscreteSignal synth_components(const SignalSpec& spec) {
    return synth_components(spec.components, spec.duration, spec.fs, spec.real_valued);
}

/// Population variance, mean |x - mean(x)|^2.
inline double variance(const std::vector<cplx>& x) {
    if (x.empty()) return 0.0;
    cplx mean{};
    for (const auto& v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double acc = 0.0;
    for (const auto& v : x) acc += std::norm(v - mean);
    return acc / static_cast<double>(x.size());
}

/// Zero-mean white Gaussian noise scaled so that 10 log10(var(y)/var(noise)) equals
/// `snr_db` for this realization. Real input gets real noise. snr = +inf gives zeros.
inline std::vector<cplx> make_noise(const DiscreteSignal& signal, double snr_db, std::uint64_t seed) {
    std::vector<cplx> noise(signal.size(), cplx{});
    if (std::isinf(snr_db) && snr_db > 0) return noise;
    detail::require(std::isfinite(snr_db), "add_noise: SNR must be finite or +inf");
    const double signal_var = variance(signal.samples);
    detail::require(signal_var > 0.0, "add_noise: signal has zero variance");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const bool real = signal.is_real();
    for (auto& z : noise) {
        const double re = normal(rng);
        z = real ? cplx(re, 0.0) : cplx(re, normal(rng));
    }
    cplx mean{};
    for (const auto& z : noise) mean += z;
    mean /= static_cast<double>(noise.size());
    for (auto& z : noise) z -= mean;

    const double drawn = variance(noise);
    if (!(drawn > 0.0)) throw NumericError("add_noise: degenerate noise draw");
    const double target = signal_var / std::pow(10.0, snr_db / 10.0);
    const double scale = std::sqrt(target / drawn);
    for (auto& z : noise) z *= scale;
    return noise;
}

inline DiscreteSignal add_noise(const DiscreteSignal& signal, double snr_db, std::uint64_t seed) {
    const auto noise = make_noise(signal, snr_db, seed);
    DiscreteSignal out = signal;
    for (std::size_t i = 0; i < out.samples.size(); ++i) out.samples[i] += noise[i];
    return out;
}

/// s_out[l] = s_in[l + offset]; reads outside the stored range are zero.
inline DiscreteSignal shift(const DiscreteSignal& signal, std::ptrdiff_t offset) {
    DiscreteSignal out;
    out.fs = signal.fs;
    out.samples.resize(signal.size());
    for (std::size_t l = 0; l < out.samples.size(); ++l) {
        out.samples[l] = signal.at(static_cast<std::ptrdiff_t>(l) + offset);
    }
    return out;
}

struct ComponentEstimate {
    double sup_amplitude_rate = 0.0;  // sup |A'|, 1/s
    double sup_if_rate = 0.0;         // sup |phi''|, Hz/s
    double inf_amplitude = 0.0;
    double inf_if = 0.0;
};

/// Finite-difference check of the slowly-varying / well-separated signal class.
struct ClassReport {
    std::vector<ComponentEstimate> components;
    double min_separation = std::numeric_limits<double>::infinity();  // Hz
    bool bounded_positive = true;
    bool slow_amplitude = true;
    bool slow_frequency = true;
    bool well_separated = true;

    bool passes() const { return bounded_positive && slow_amplitude && slow_frequency && well_separated; }
};

inline ClassReport validate_class(const std::vector<ComponentSpec>& specs, double duration, double fs, double eps,
                                  double d) {
    const std::size_t count = sample_count(duration, fs);
    const double dt = 1.0 / fs;
    ClassReport report;
    report.components.resize(specs.size());

    for (std::size_t m = 0; m < specs.size(); ++m) {
        auto& est = report.components[m];
        est.inf_amplitude = std::numeric_limits<double>::infinity();
        est.inf_if = std::numeric_limits<double>::infinity();
        for (std::size_t l = 0; l < count; ++l) {
            const double t = static_cast<double>(l) * dt;
            est.inf_amplitude = std::min(est.inf_amplitude, specs[m].amplitude_at(t));
            est.inf_if = std::min(est.inf_if, specs[m].inst_freq(t));
            if (count < 2) continue;
            // central differences inside, one-sided at the ends
            const double tl = l == 0 ? t : t - dt;
            const double th = l + 1 == count ? t : t + dt;
            const double span = th - tl;
            const double da = (specs[m].amplitude_at(th) - specs[m].amplitude_at(tl)) / span;
            const double df = (specs[m].inst_freq(th) - specs[m].inst_freq(tl)) / span;
            est.sup_amplitude_rate = std::max(est.sup_amplitude_rate, std::abs(da));
            est.sup_if_rate = std::max(est.sup_if_rate, std::abs(df));
        }
        report.bounded_positive = report.bounded_positive && est.inf_amplitude > 0.0 && est.inf_if > 0.0;
        report.slow_amplitude = report.slow_amplitude && est.sup_amplitude_rate <= eps;
        report.slow_frequency = report.slow_frequency && est.sup_if_rate <= eps;
    }

    if (specs.size() >= 2) {
        std::vector<double> ifs(specs.size());
        for (std::size_t l = 0; l < count; ++l) {
            const double t = static_cast<double>(l) * dt;
            for (std::size_t m = 0; m < specs.size(); ++m) ifs[m] = specs[m].inst_freq(t);
            std::sort(ifs.begin(), ifs.end());
            for (std::size_t m = 1; m < ifs.size(); ++m) {
                report.min_separation = std::min(report.min_separation, ifs[m] - ifs[m - 1]);
            }
        }
        report.well_separated = report.min_separation > d;
    }
    return report;
}

// JSON ------------------------------------------------------------------------

inline ComponentSpec component_from_json(const nlohmann::json& j, double fs) {
    ComponentSpec c;
    c.amplitude = j.value("amplitude", 1.0);
    c.phase0 = j.value("phase0", 0.0);
    c.offset_hz = j.value("offset_hz", 0.0);
    c.chirp_rate = j.value("chirp_rate", 0.0);
    if (j.contains("amplitude_samples")) c.amplitude_samples = j.at("amplitude_samples").get<std::vector<double>>();
    if (j.contains("phase_samples")) c.phase_samples = j.at("phase_samples").get<std::vector<double>>();
    c.samples_fs = fs;
    detail::require(c.amplitude_samples.empty() ? c.amplitude > 0.0 : true, "component amplitude must be positive");
    return c;
}

inline SignalSpec signal_spec_from_json(const nlohmann::json& j) {
    SignalSpec spec;
    spec.fs = j.value("fs", 44100.0);
    spec.duration = j.value("duration", 5.0);
    spec.real_valued = j.value("real_valued", true);
    detail::require(j.contains("components") && j.at("components").is_array(),
                    "signal spec: missing 'components' array");
    for (const auto& c : j.at("components")) spec.components.push_back(component_from_json(c, spec.fs));
    detail::require(!spec.components.empty(), "signal spec: no components");
    return spec;
}

inline nlohmann::json to_json(const SignalSpec& spec) {
    nlohmann::json comps = nlohmann::json::array();
    for (const auto& c : spec.components) {
        nlohmann::json jc{{"amplitude", c.amplitude},
                          {"phase0", c.phase0},
                          {"offset_hz", c.offset_hz},
                          {"chirp_rate", c.chirp_rate}};
        if (!c.amplitude_samples.empty()) jc["amplitude_samples"] = c.amplitude_samples;
        if (!c.phase_samples.empty()) jc["phase_samples"] = c.phase_samples;
        comps.push_back(std::move(jc));
    }
    return {{"fs", spec.fs}, {"duration", spec.duration}, {"real_valued", spec.real_valued}, {"components", comps}};
}

}  // namespace qsst
