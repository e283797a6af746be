#include "melody/cfp.hpp"

#include "melody/fft.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace melody {

namespace {

void check(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

} // namespace

void CfpParams::validate(double nyquist_hz) const {
    check(k >= 0.0, "CfpParams: k must be >= 0, got " + std::to_string(k));
    check(gamma_s > 0.0 && gamma_gc > 0.0 && gamma_gcos > 0.0,
          "CfpParams: rescale exponents must be positive");
    check(hp_cutoff_freq >= 0.0 && hp_cutoff_quef >= 0.0,
          "CfpParams: high-pass cutoffs must be >= 0");
    check(n_log_bins >= 1, "CfpParams: n_log_bins must be >= 1");
    check(bins_per_octave >= 1, "CfpParams: bins_per_octave must be >= 1");
    check(f_min > 0.0, "CfpParams: f_min must be positive");
    check(f_min < f_max, "CfpParams: f_min must be below f_max");
    // f_max is the nominal stop frequency. The default 6-octave grid puts the
    // top center slightly above it (32.5 * 2^(359/60) ~= 2056 Hz vs 2050 Hz),
    // so allow an overshoot of up to one bin step.
    const double top = f_min * std::exp2(static_cast<double>(n_log_bins - 1) / bins_per_octave);
    const double ratio = std::exp2(1.0 / bins_per_octave);
    check(top <= f_max * ratio * (1.0 + 1e-12),
          "CfpParams: top log bin center " + std::to_string(top) + " Hz overshoots f_max " +
              std::to_string(f_max) + " Hz by more than one bin step");
    if (nyquist_hz > 0.0) {
        check(f_max <= nyquist_hz, "CfpParams: f_max " + std::to_string(f_max) +
                                       " Hz exceeds Nyquist " + std::to_string(nyquist_hz) +
                                       " Hz");
    }
}

std::vector<double> CfpParams::log_bin_centers() const {
    std::vector<double> centers(static_cast<size_t>(n_log_bins));
    for (int n = 0; n < n_log_bins; ++n)
        centers[n] = f_min * std::exp2(static_cast<double>(n) / bins_per_octave);
    return centers;
}

std::vector<double> make_window(WindowFn fn, int size) {
    check(size >= 1, "make_window: size must be >= 1");
    std::vector<double> w(static_cast<size_t>(size), 1.0);
    if (size == 1 || fn == WindowFn::kRect) return w;
    const double step = 2.0 * std::numbers::pi / (size - 1);
    switch (fn) {
    case WindowFn::kHann:
        for (int i = 0; i < size; ++i) w[i] = 0.5 - 0.5 * std::cos(step * i);
        break;
    case WindowFn::kBlackmanHarris:
        for (int i = 0; i < size; ++i) {
            const double t = step * i;
            w[i] = 0.35875 - 0.48829 * std::cos(t) + 0.14128 * std::cos(2.0 * t) -
                   0.01168 * std::cos(3.0 * t);
        }
        break;
    case WindowFn::kRect:
        break;
    }
    return w;
}

Spectrogram stft_magnitude(const std::vector<std::vector<double>>& frames, WindowFn window_fn,
                           int sample_rate, int hop) {
    check(sample_rate > 0, "stft_magnitude: sample_rate must be positive");
    check(hop >= 1, "stft_magnitude: hop must be >= 1");

    Spectrogram out;
    if (frames.empty()) return out;

    const int w = static_cast<int>(frames.front().size());
    check(w >= 2, "stft_magnitude: frames must have at least 2 samples");
    for (const auto& f : frames)
        check(static_cast<int>(f.size()) == w, "stft_magnitude: ragged frame lengths");

    const std::vector<double> window = make_window(window_fn, w);
    RealFft fft(w);

    out.values.reserve(frames.size());
    std::vector<double> buf(static_cast<size_t>(w));
    for (const auto& frame : frames) {
        for (int i = 0; i < w; ++i) buf[i] = frame[i] * window[i];
        out.values.push_back(fft.forward_magnitude(buf));
    }

    const int n_bins = fft.bins();
    out.bin_freqs.resize(static_cast<size_t>(n_bins));
    const double df = static_cast<double>(sample_rate) / w;
    for (int n = 0; n < n_bins; ++n) out.bin_freqs[n] = df * n;

    out.frame_times.resize(frames.size());
    const double dt = static_cast<double>(hop) / sample_rate;
    for (size_t t = 0; t < frames.size(); ++t) out.frame_times[t] = dt * static_cast<double>(t);
    return out;
}

std::vector<double> rescale(std::span<const double> s, double gamma) {
    check(gamma > 0.0, "rescale: gamma must be positive");
    std::vector<double> out(s.size());
    for (size_t i = 0; i < s.size(); ++i) out[i] = std::pow(std::max(s[i], 0.0), gamma);
    return out;
}

std::vector<double> z_modify(std::span<const double> s, double k) {
    check(k >= 0.0, "z_modify: k must be >= 0, got " + std::to_string(k));
    if (!s.empty()) {
        const double max_exp = k * static_cast<double>(s.size() - 1);
        check(max_exp <= 80.0, "z_modify: k * n_max = " + std::to_string(max_exp) +
                                   " exceeds 80; the gain e^(k*n) would overflow");
    }
    std::vector<double> out(s.size());
    for (size_t n = 0; n < s.size(); ++n) out[n] = std::exp(k * static_cast<double>(n)) * s[n];
    return out;
}

std::vector<double> high_pass(std::span<const double> row, double axis_step, double cutoff) {
    check(axis_step > 0.0, "high_pass: axis_step must be positive");
    std::vector<double> out(row.begin(), row.end());
    for (size_t i = 0; i < out.size(); ++i) {
        if (axis_step * static_cast<double>(i) < cutoff)
            out[i] = 0.0;
        else
            break; // axis is ascending
    }
    return out;
}

std::vector<double> generalized_cepstrum(std::span<const double> s_mod) {
    check(s_mod.size() >= 2, "generalized_cepstrum: need at least 2 one-sided bins");
    const int n_one_sided = static_cast<int>(s_mod.size());
    const int w = 2 * (n_one_sided - 1);

    // Rebuild the symmetric two-sided row; bins 0 and W/2 appear once.
    std::vector<double> full(static_cast<size_t>(w));
    for (int n = 0; n < n_one_sided; ++n) full[n] = s_mod[n];
    for (int n = 1; n < n_one_sided - 1; ++n) full[w - n] = s_mod[n];

    RealFft fft(w);
    return fft.forward_magnitude(full);
}

std::vector<double> generalized_cepstrum_of_spectrum(std::span<const double> gc,
                                                     const CfpParams& p, int sample_rate) {
    check(sample_rate > 0, "generalized_cepstrum_of_spectrum: sample_rate must be positive");
    const std::vector<double> scaled = rescale(gc, p.gamma_gcos);
    const std::vector<double> passed =
        high_pass(scaled, 1.0 / static_cast<double>(sample_rate), p.hp_cutoff_quef);
    return generalized_cepstrum(passed);
}

std::vector<double> quefrency_axis(int n_bins, int sample_rate) {
    check(n_bins >= 0, "quefrency_axis: n_bins must be >= 0");
    check(sample_rate > 0, "quefrency_axis: sample_rate must be positive");
    std::vector<double> q(static_cast<size_t>(n_bins));
    for (int n = 0; n < n_bins; ++n) q[n] = static_cast<double>(n) / sample_rate;
    return q;
}

std::vector<double> quefrency_to_freq_axis(std::span<const double> quef_seconds) {
    std::vector<double> f(quef_seconds.size());
    for (size_t i = 0; i < f.size(); ++i) {
        f[i] = quef_seconds[i] > 0.0 ? 1.0 / quef_seconds[i]
                                     : std::numeric_limits<double>::infinity();
    }
    return f;
}

LogFreqMapper::LogFreqMapper(std::span<const double> source_freqs_hz, const CfpParams& p) {
    p.validate();
    centers_ = p.log_bin_centers();
    const int n = p.n_log_bins;
    taps_.resize(static_cast<size_t>(n));
    weight_sums_.assign(static_cast<size_t>(n), 0.0);

    const double ratio = std::exp2(1.0 / p.bins_per_octave);
    const double lo = centers_.front() / ratio; // virtual center below bin 0
    const double hi = centers_.back() * ratio;  // virtual center above bin F-1

    auto center = [&](int idx) -> double {
        if (idx < 0) return lo;
        if (idx >= n) return hi;
        return centers_[idx];
    };

    for (size_t s = 0; s < source_freqs_hz.size(); ++s) {
        const double f = source_freqs_hz[s];
        if (!(f > 0.0) || !std::isfinite(f)) continue;
        if (f < lo || f > hi) continue;
        const double x = p.bins_per_octave * std::log2(f / p.f_min);
        int left = static_cast<int>(std::floor(x));
        if (left < -1) left = -1;
        if (left > n - 1) left = n - 1;
        const double cl = center(left);
        const double cr = center(left + 1);
        const double rising = std::clamp((f - cl) / (cr - cl), 0.0, 1.0);
        if (left >= 0 && 1.0 - rising > 0.0) {
            taps_[left].push_back({static_cast<int>(s), 1.0 - rising});
            weight_sums_[left] += 1.0 - rising;
        }
        if (left + 1 < n && rising > 0.0) {
            taps_[left + 1].push_back({static_cast<int>(s), rising});
            weight_sums_[left + 1] += rising;
        }
    }
}

std::vector<double> LogFreqMapper::apply(std::span<const double> row) const {
    std::vector<double> out(taps_.size(), 0.0);
    for (size_t n = 0; n < taps_.size(); ++n) {
        if (weight_sums_[n] <= 0.0) continue;
        double acc = 0.0;
        for (const Tap& tap : taps_[n]) {
            check(tap.source < static_cast<int>(row.size()),
                  "LogFreqMapper: row shorter than the source axis");
            acc += tap.weight * row[tap.source];
        }
        out[n] = acc / weight_sums_[n];
    }
    return out;
}

std::vector<std::vector<double>> to_log_frequency(const std::vector<std::vector<double>>& rows,
                                                  std::span<const double> source_freqs_hz,
                                                  const CfpParams& p) {
    if (source_freqs_hz.size() >= 2 && source_freqs_hz.front() < source_freqs_hz.back()) {
        // Linear frequency axis: its last bin is the Nyquist frequency.
        const double nyquist = source_freqs_hz.back();
        check(p.f_max <= nyquist, "to_log_frequency: f_max " + std::to_string(p.f_max) +
                                      " Hz exceeds source Nyquist " + std::to_string(nyquist) +
                                      " Hz");
    }
    LogFreqMapper mapper(source_freqs_hz, p);
    std::vector<std::vector<double>> out;
    out.reserve(rows.size());
    for (const auto& row : rows) out.push_back(mapper.apply(row));
    return out;
}

CfpTensor compute_zcfp(const Waveform& w, const CfpParams& p, int window_size, int hop,
                       WindowFn window_fn) {
    check(window_size >= 2, "compute_zcfp: window_size must be >= 2");
    check(window_size % 2 == 0, "compute_zcfp: window_size must be even");
    p.validate(w.sample_rate / 2.0);

    const auto frames = frame_signal(w, window_size, hop);
    const Spectrogram spec = stft_magnitude(frames, window_fn, w.sample_rate, hop);

    const int t_frames = static_cast<int>(spec.values.size());
    const double df = static_cast<double>(w.sample_rate) / window_size;

    std::vector<std::vector<double>> s_rows, gc_rows, gcos_rows;
    s_rows.reserve(t_frames);
    gc_rows.reserve(t_frames);
    gcos_rows.reserve(t_frames);
    for (const auto& mag : spec.values) {
        s_rows.push_back(rescale(mag, p.gamma_s));
        std::vector<double> pre = rescale(mag, p.gamma_gc);
        pre = high_pass(pre, df, p.hp_cutoff_freq);
        pre = z_modify(pre, p.k);
        gc_rows.push_back(generalized_cepstrum(pre));
        gcos_rows.push_back(generalized_cepstrum_of_spectrum(gc_rows.back(), p, w.sample_rate));
    }

    const int n_one_sided = window_size / 2 + 1;
    const std::vector<double> quef = quefrency_axis(n_one_sided, w.sample_rate);
    const std::vector<double> gc_axis = quefrency_to_freq_axis(quef);

    CfpTensor out;
    out.frames = t_frames;
    out.bins = p.n_log_bins;
    out.frame_period = static_cast<double>(hop) / w.sample_rate;
    out.log_bin_freqs = p.log_bin_centers();
    out.frame_times = spec.frame_times;
    out.values.assign(static_cast<size_t>(CfpTensor::kChannels) * t_frames * p.n_log_bins, 0.0);

    const LogFreqMapper lin_map(spec.bin_freqs, p);
    const LogFreqMapper quef_map(gc_axis, p);
    for (int t = 0; t < t_frames; ++t) {
        const std::vector<double> s_log = lin_map.apply(s_rows[t]);
        const std::vector<double> gc_log = quef_map.apply(gc_rows[t]);
        const std::vector<double> gcos_log = lin_map.apply(gcos_rows[t]);
        for (int f = 0; f < p.n_log_bins; ++f) {
            out.at(CfpTensor::kSpectrum, t, f) = s_log[f];
            out.at(CfpTensor::kCepstrum, t, f) = gc_log[f];
            out.at(CfpTensor::kCepstrumOfSpectrum, t, f) = gcos_log[f];
        }
    }
    return out;
}

} // namespace melody
