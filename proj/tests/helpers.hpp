#pragma once

// Shared synthesis and scratch-file utilities for the test suite.

#include "melody/audio_io.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace testutil {

inline std::filesystem::path scratch_dir() {
    const auto dir = std::filesystem::temp_directory_path() / "melody_tests";
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string scratch_path(const std::string& name) {
    return (scratch_dir() / name).string();
}

inline melody::Waveform make_sine(int rate, double seconds, double freq, double amp = 0.5,
                                  double phase = 0.0) {
    melody::Waveform w;
    w.sample_rate = rate;
    const size_t n = static_cast<size_t>(std::llround(seconds * rate));
    w.samples.resize(n);
    for (size_t i = 0; i < n; ++i)
        w.samples[i] = amp * std::sin(2.0 * std::numbers::pi * freq * i / rate + phase);
    return w;
}

// Harmonic tone with 1/h^2 partial amplitudes, peak-normalized to `amp`.
inline melody::Waveform make_harmonic_tone(int rate, double seconds, double f0, int n_harmonics,
                                           double amp = 0.5) {
    melody::Waveform w;
    w.sample_rate = rate;
    const size_t n = static_cast<size_t>(std::llround(seconds * rate));
    w.samples.assign(n, 0.0);
    for (int h = 1; h <= n_harmonics; ++h) {
        if (f0 * h >= rate / 2.0) break;
        const double a = 1.0 / (h * h);
        for (size_t i = 0; i < n; ++i)
            w.samples[i] += a * std::sin(2.0 * std::numbers::pi * f0 * h * i / rate);
    }
    double peak = 0.0;
    for (double s : w.samples) peak = std::max(peak, std::abs(s));
    if (peak > 0.0)
        for (double& s : w.samples) s *= amp / peak;
    return w;
}

// Raised-cosine fade over the first and last `taper` samples, to keep
// resampler edge transients out of round-trip comparisons.
inline void taper_edges(melody::Waveform& w, size_t taper) {
    const size_t n = w.samples.size();
    for (size_t i = 0; i < taper && i < n; ++i) {
        const double g = 0.5 - 0.5 * std::cos(std::numbers::pi * i / taper);
        w.samples[i] *= g;
        w.samples[n - 1 - i] *= g;
    }
}

inline melody::Waveform make_noise(int rate, size_t n, unsigned seed, double amp = 0.3) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> dist(-amp, amp);
    melody::Waveform w;
    w.sample_rate = rate;
    w.samples.resize(n);
    for (double& s : w.samples) s = dist(rng);
    return w;
}

} // namespace testutil
