#pragma once

#include "melody/audio_io.hpp"

#include <span>
#include <vector>

namespace melody {

enum class WindowFn { kHann, kBlackmanHarris, kRect };

// Frame-wise magnitude spectrum on a linear frequency axis.
struct Spectrogram {
    std::vector<std::vector<double>> values; // T rows of N magnitudes, N = window/2 + 1
    std::vector<double> bin_freqs;           // N values, spacing sample_rate / window
    std::vector<double> frame_times;         // T values, spacing hop / sample_rate
};

// Parameters of the z-CFP transform. k = 0 reproduces the plain CFP.
struct CfpParams {
    double k = 0.0006;                    // per-bin exponential growth rate
    double gamma_s = 1.0;                 // rescale exponent, stored spectrum channel
    double gamma_gc = 0.24;               // rescale exponent before the cepstrum transform
    double gamma_gcos = 0.6;              // rescale exponent before the second transform
    double hp_cutoff_freq = 32.5;         // Hz, zero spectrum bins below this
    double hp_cutoff_quef = 1.0 / 2050.0; // seconds, zero quefrency bins below this
    int n_log_bins = 360;
    int bins_per_octave = 60;
    double f_min = 32.5;  // Hz, center of log bin 0
    double f_max = 2050.0;

    // Throws std::invalid_argument on out-of-range fields, or if f_max
    // exceeds the given Nyquist frequency (pass <= 0 to skip that check).
    void validate(double nyquist_hz = 0.0) const;

    // f_min * 2^(n / bins_per_octave) for n in [0, n_log_bins).
    std::vector<double> log_bin_centers() const;
};

// The 3 x T x F stack {S, GC, GCoS} on the log-frequency axis.
struct CfpTensor {
    static constexpr int kChannels = 3;
    enum Channel { kSpectrum = 0, kCepstrum = 1, kCepstrumOfSpectrum = 2 };

    int frames = 0;
    int bins = 0;
    double frame_period = 0.0;
    std::vector<double> values;        // kChannels * frames * bins, row-major
    std::vector<double> log_bin_freqs; // bins
    std::vector<double> frame_times;   // frames

    double at(int c, int t, int f) const {
        return values[(static_cast<size_t>(c) * frames + t) * bins + f];
    }
    double& at(int c, int t, int f) {
        return values[(static_cast<size_t>(c) * frames + t) * bins + f];
    }
};

std::vector<double> make_window(WindowFn fn, int size);

// Magnitude of the one-sided DFT of each windowed frame. All frames must
// share one length. sample_rate and hop only fill in the axes.
Spectrogram stft_magnitude(const std::vector<std::vector<double>>& frames, WindowFn window_fn,
                           int sample_rate, int hop);

// Element-wise max(s, 0)^gamma.
std::vector<double> rescale(std::span<const double> s, double gamma);

// Element-wise e^(k*n) gain, n the raw bin index. k = 0 is the identity.
// Throws if k < 0 or k * n_max > 80 (the gain would overflow).
std::vector<double> z_modify(std::span<const double> s, double k);

// Zero entries whose axis position (index * axis_step) lies below cutoff.
std::vector<double> high_pass(std::span<const double> row, double axis_step, double cutoff);

// |DFT| of the row, treating it as the one-sided half of a length-2(N-1)
// symmetric real spectrum. Output has the input's length; for a spectrum
// input, output bin q sits at quefrency q / sample_rate seconds.
std::vector<double> generalized_cepstrum(std::span<const double> s_mod);

// One more rescale + quefrency high-pass + |DFT| layer on top of the
// cepstrum, back onto the linear frequency axis. No z-modification here.
std::vector<double> generalized_cepstrum_of_spectrum(std::span<const double> gc,
                                                     const CfpParams& p, int sample_rate);

// Quefrency axis in seconds for an n_bins one-sided cepstrum row.
std::vector<double> quefrency_axis(int n_bins, int sample_rate);

// 1/quefrency in Hz; quefrency 0 maps to +infinity (never aggregated).
std::vector<double> quefrency_to_freq_axis(std::span<const double> quef_seconds);

// Triangular-kernel averaging from an arbitrary source frequency axis onto
// the geometric log-frequency grid of CfpParams. Targets with no source
// support stay 0.
class LogFreqMapper {
public:
    LogFreqMapper(std::span<const double> source_freqs_hz, const CfpParams& p);
    std::vector<double> apply(std::span<const double> row) const;
    const std::vector<double>& centers() const { return centers_; }

private:
    struct Tap {
        int source;
        double weight;
    };
    std::vector<double> centers_;
    std::vector<std::vector<Tap>> taps_;  // per target bin
    std::vector<double> weight_sums_;
};

// Mapper applied to every row. For an ascending axis (linear Hz), errors if
// f_max exceeds the axis Nyquist.
std::vector<std::vector<double>> to_log_frequency(const std::vector<std::vector<double>>& rows,
                                                  std::span<const double> source_freqs_hz,
                                                  const CfpParams& p);

// Full pipeline: frame, STFT, then per frame
//   S    = rescale(|X|, gamma_s)
//   GC   = |DFT(z_modify(high_pass(rescale(|X|, gamma_gc))))|
//   GCoS = |DFT(high_pass(rescale(GC, gamma_gcos)))|
// and triangular log-frequency mapping of all three channels.
CfpTensor compute_zcfp(const Waveform& w, const CfpParams& p, int window_size = 768,
                       int hop = 80, WindowFn window_fn = WindowFn::kHann);

} // namespace melody
