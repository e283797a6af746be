#include "melody/cfp.hpp"

#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

using namespace melody;

namespace {

std::vector<double> random_row(size_t n, unsigned seed, double lo = 0.0, double hi = 1.0) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> row(n);
    for (double& v : row) v = dist(rng);
    return row;
}

// Rebuild the even-symmetric two-sided row the cepstrum transform implies.
std::vector<double> mirror_one_sided(const std::vector<double>& s) {
    const int n = static_cast<int>(s.size());
    const int w = 2 * (n - 1);
    std::vector<double> full(static_cast<size_t>(w));
    for (int i = 0; i < n; ++i) full[i] = s[i];
    for (int i = 1; i < n - 1; ++i) full[w - i] = s[i];
    return full;
}

int argmax_from(const std::vector<double>& v, size_t first) {
    size_t best = first;
    for (size_t i = first + 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return static_cast<int>(best);
}

} // namespace

TEST_CASE("make_window shapes") {
    const auto rect = make_window(WindowFn::kRect, 16);
    for (double v : rect) CHECK(v == 1.0);

    const auto hann5 = make_window(WindowFn::kHann, 5);
    CHECK(hann5[0] == doctest::Approx(0.0));
    CHECK(hann5[1] == doctest::Approx(0.5));
    CHECK(hann5[2] == doctest::Approx(1.0));
    CHECK(hann5[3] == doctest::Approx(0.5));
    CHECK(hann5[4] == doctest::Approx(0.0));

    const auto hann = make_window(WindowFn::kHann, 768);
    const auto bh = make_window(WindowFn::kBlackmanHarris, 768);
    for (int i = 0; i < 768; ++i) {
        CHECK(hann[i] == doctest::Approx(hann[767 - i]).epsilon(1e-12));
        CHECK(bh[i] == doctest::Approx(bh[767 - i]).epsilon(1e-12));
        CHECK(hann[i] >= 0.0);
        CHECK(bh[i] > -1e-12);
    }
    CHECK(hann[0] == doctest::Approx(0.0));
    CHECK(bh[0] == doctest::Approx(0.00006).epsilon(1e-2));

    CHECK(make_window(WindowFn::kHann, 1) == std::vector<double>{1.0});
    CHECK_THROWS_AS(make_window(WindowFn::kHann, 0), std::invalid_argument);
}

TEST_CASE("stft_magnitude of silence is all zero") {
    const std::vector<std::vector<double>> frames(3, std::vector<double>(768, 0.0));
    const Spectrogram spec = stft_magnitude(frames, WindowFn::kHann, 8000, 80);
    REQUIRE(spec.values.size() == 3);
    for (const auto& row : spec.values) {
        REQUIRE(row.size() == 385);
        for (double v : row) CHECK(v == 0.0);
    }
    CHECK(spec.bin_freqs[0] == 0.0);
    CHECK(spec.bin_freqs[1] == doctest::Approx(8000.0 / 768.0));
    CHECK(spec.bin_freqs[384] == doctest::Approx(4000.0));
    CHECK(spec.frame_times[0] == 0.0);
    CHECK(spec.frame_times[2] == doctest::Approx(0.02));
}

TEST_CASE("stft_magnitude concentrates an exact-bin sine in one bin") {
    const int w = 768, k0 = 50;
    std::vector<double> frame(w);
    for (int n = 0; n < w; ++n)
        frame[n] = std::sin(2.0 * std::numbers::pi * k0 * n / w);

    const Spectrogram spec = stft_magnitude({frame}, WindowFn::kRect, 8000, 80);
    const auto& row = spec.values[0];
    CHECK(row[k0] == doctest::Approx(w / 2.0).epsilon(1e-9));
    for (int n = 0; n < 385; ++n) {
        if (n == k0) continue;
        CHECK(row[n] < 1e-6 * row[k0]);
    }
}

TEST_CASE("stft_magnitude matches the naive DFT oracle") {
    const auto frame = random_row(32, 11, -1.0, 1.0);
    const Spectrogram spec = stft_magnitude({frame}, WindowFn::kRect, 8000, 80);
    const std::vector<double> ref = oracle::dft_magnitude(frame);
    REQUIRE(spec.values[0].size() == 17);
    for (int n = 0; n < 17; ++n)
        CHECK(spec.values[0][n] == doctest::Approx(ref[n]).epsilon(1e-12));
}

TEST_CASE("stft_magnitude satisfies Parseval for noise frames") {
    for (WindowFn fn : {WindowFn::kRect, WindowFn::kHann}) {
        const auto frame = random_row(768, 21, -1.0, 1.0);
        const auto window = make_window(fn, 768);
        const Spectrogram spec = stft_magnitude({frame}, fn, 8000, 80);
        const auto& row = spec.values[0];

        double windowed_energy = 0.0;
        for (int i = 0; i < 768; ++i)
            windowed_energy += frame[i] * window[i] * frame[i] * window[i];

        double spectral = row[0] * row[0] + row[384] * row[384];
        for (int n = 1; n < 384; ++n) spectral += 2.0 * row[n] * row[n];

        CHECK(spectral == doctest::Approx(768.0 * windowed_energy).epsilon(1e-6));
    }
}

TEST_CASE("stft_magnitude rejects ragged frames") {
    std::vector<std::vector<double>> frames = {std::vector<double>(64, 0.0),
                                               std::vector<double>(63, 0.0)};
    CHECK_THROWS_AS(stft_magnitude(frames, WindowFn::kHann, 8000, 80), std::invalid_argument);
}

TEST_CASE("rescale applies max(s,0)^gamma elementwise") {
    const std::vector<double> row = {1.0, 16.0};
    const auto out = rescale(row, 0.24);
    CHECK(out[0] == doctest::Approx(1.0));
    CHECK(out[1] == doctest::Approx(1.945310).epsilon(1e-6));

    const std::vector<double> ident = {0.0, 0.3, 2.5};
    CHECK(rescale(ident, 1.0) == std::vector<double>{0.0, 0.3, 2.5});

    const std::vector<double> neg = {-2.0, -0.1, 0.0, 4.0};
    const auto clip = rescale(neg, 0.5);
    CHECK(clip[0] == 0.0);
    CHECK(clip[1] == 0.0);
    CHECK(clip[2] == 0.0);
    CHECK(clip[3] == doctest::Approx(2.0));

    CHECK_THROWS_AS(rescale(row, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(rescale(row, -1.0), std::invalid_argument);
}

TEST_CASE("z_modify with k = 0 is the exact identity") {
    const auto row = random_row(385, 3);
    const auto out = z_modify(row, 0.0);
    CHECK(out == row);
}

TEST_CASE("z_modify applies a strictly growing exponential gain") {
    const std::vector<double> ones(386, 1.0);
    const auto out = z_modify(ones, 0.0006);
    CHECK(out[0] == 1.0);
    CHECK(out[385] == doctest::Approx(std::exp(0.231)).epsilon(1e-12));
    CHECK(out[385] == doctest::Approx(1.2599).epsilon(1e-4));
    for (size_t n = 1; n < out.size(); ++n) CHECK(out[n] > out[n - 1]);

    const auto mixed = random_row(385, 5, 0.1, 2.0);
    const auto gained = z_modify(mixed, 0.0006);
    for (size_t n = 1; n < mixed.size(); ++n) {
        const double ratio_prev = gained[n - 1] / mixed[n - 1];
        const double ratio_cur = gained[n] / mixed[n];
        CHECK(ratio_cur > ratio_prev);
    }
}

TEST_CASE("z_modify rejects negative and overflowing k") {
    const std::vector<double> row(200, 1.0);
    CHECK_THROWS_AS(z_modify(row, -0.0006), std::invalid_argument);
    CHECK_THROWS_AS(z_modify(row, 0.5), std::invalid_argument); // 0.5 * 199 > 80
    CHECK_NOTHROW(z_modify(row, 0.4));                          // 0.4 * 199 = 79.6
}

TEST_CASE("high_pass zeroes bins below the cutoff") {
    const double df = 8000.0 / 768.0;
    std::vector<double> row(385, 1.0);
    const auto hp = high_pass(row, df, 32.5);
    for (int i = 0; i < 4; ++i) CHECK(hp[i] == 0.0); // 3*df = 31.25 < 32.5
    for (int i = 4; i < 385; ++i) CHECK(hp[i] == 1.0);

    const auto quef_hp = high_pass(row, 1.0 / 8000.0, 1.0 / 2050.0);
    for (int i = 0; i < 4; ++i) CHECK(quef_hp[i] == 0.0); // 3/8000 < 1/2050
    CHECK(quef_hp[4] == 1.0);

    const auto ident = high_pass(row, df, 0.0);
    CHECK(ident == row);

    CHECK_THROWS_AS(high_pass(row, 0.0, 32.5), std::invalid_argument);
}

TEST_CASE("generalized_cepstrum of a constant is an impulse at quefrency 0") {
    const std::vector<double> row(385, 0.5);
    const auto gc = generalized_cepstrum(row);
    REQUIRE(gc.size() == 385);
    CHECK(gc[0] == doctest::Approx(0.5 * 768.0).epsilon(1e-12));
    for (size_t q = 1; q < gc.size(); ++q) CHECK(gc[q] < 1e-9 * gc[0]);
}

TEST_CASE("generalized_cepstrum of a spectral cosine peaks at its quefrency") {
    const int w = 768, q0 = 30;
    std::vector<double> row(385);
    for (int n = 0; n < 385; ++n)
        row[n] = std::cos(2.0 * std::numbers::pi * q0 * n / w);
    const auto gc = generalized_cepstrum(row);
    CHECK(gc[q0] == doctest::Approx(w / 2.0).epsilon(1e-9));
    for (size_t q = 0; q < gc.size(); ++q) {
        if (static_cast<int>(q) == q0) continue;
        CHECK(gc[q] < 1e-6 * gc[q0]);
    }
}

TEST_CASE("generalized_cepstrum matches forward and inverse DFT oracles") {
    const auto row = random_row(65, 17); // implies a length-128 two-sided row
    const auto gc = generalized_cepstrum(row);
    REQUIRE(gc.size() == 65);

    const std::vector<double> full = mirror_one_sided(row);
    const std::vector<double> fwd = oracle::dft_magnitude(full);
    const std::vector<double> inv = oracle::inverse_dft_magnitude_unnormalized(full);
    for (int q = 0; q < 65; ++q) {
        CHECK(gc[q] == doctest::Approx(fwd[q]).epsilon(1e-9));
        CHECK(gc[q] == doctest::Approx(inv[q]).epsilon(1e-9));
    }

    CHECK_THROWS_AS(generalized_cepstrum(std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("generalized_cepstrum_of_spectrum basics") {
    const CfpParams p;
    const std::vector<double> zeros(385, 0.0);
    const auto out = generalized_cepstrum_of_spectrum(zeros, p, 8000);
    REQUIRE(out.size() == 385);
    for (double v : out) CHECK(v == 0.0);
}

TEST_CASE("cepstrum layers locate a 200 Hz harmonic comb") {
    const Waveform tone = testutil::make_harmonic_tone(8000, 0.3, 200.0, 10);
    const auto frames = frame_signal(tone, 768, 80);
    const Spectrogram spec = stft_magnitude(frames, WindowFn::kHann, 8000, 80);
    const CfpParams p;
    const double df = spec.bin_freqs[1];

    const auto& mag = spec.values[10]; // frame well inside the tone
    const auto pre = z_modify(high_pass(rescale(mag, p.gamma_gc), df, p.hp_cutoff_freq), p.k);
    const auto gc = generalized_cepstrum(pre);
    const auto gcos = generalized_cepstrum_of_spectrum(gc, p, 8000);

    // f0 = 200 Hz: quefrency 5 ms = bin 40 at 8 kHz. Search above the
    // high-pass cutoffs (bins 0..3 hold envelope energy).
    CHECK(argmax_from(gc, 4) == 40);

    // The spectrum of the cepstrum is a comb with teeth every 19.2 bins
    // (200 Hz on the 10.42 Hz grid). No single tooth is guaranteed to win,
    // but the argmax must sit on the comb and dominate the low-bin leakage.
    const int am = argmax_from(gcos, 4);
    int tooth_dist = 385;
    for (int h = 1; h <= 12; ++h)
        tooth_dist = std::min(tooth_dist, std::abs(am - static_cast<int>(std::lround(19.2 * h))));
    CHECK(tooth_dist <= 1);
    double leakage = 0.0;
    for (int i = 5; i <= 14; ++i) leakage = std::max(leakage, gcos[i]);
    CHECK(gcos[am] > 2.0 * leakage);
}

TEST_CASE("quefrency axes") {
    const auto quef = quefrency_axis(385, 8000);
    CHECK(quef[0] == 0.0);
    CHECK(quef[40] == doctest::Approx(0.005));
    CHECK(quef[384] == doctest::Approx(0.048));

    const auto freqs = quefrency_to_freq_axis(quef);
    CHECK(std::isinf(freqs[0]));
    CHECK(freqs[40] == doctest::Approx(200.0));
    CHECK(freqs[384] == doctest::Approx(8000.0 / 384.0));

    CHECK_THROWS_AS(quefrency_axis(10, 0), std::invalid_argument);
}

TEST_CASE("log_bin_centers hit the documented anchor frequencies") {
    const CfpParams p;
    const auto centers = p.log_bin_centers();
    REQUIRE(centers.size() == 360);
    CHECK(centers[0] == 32.5);
    CHECK(centers[60] == 65.0);
    CHECK(centers[120] == 130.0);
    CHECK(centers[359] == doctest::Approx(2056.109).epsilon(1e-6));
    // nominal stop frequency overshot by less than one bin step
    CHECK(centers[359] <= p.f_max * std::exp2(1.0 / p.bins_per_octave));
}

TEST_CASE("to_log_frequency maps a constant row to ones wherever supported") {
    const CfpParams p;
    std::vector<double> axis(385);
    for (int n = 0; n < 385; ++n) axis[n] = n * 8000.0 / 768.0;
    const std::vector<std::vector<double>> rows = {std::vector<double>(385, 1.0)};

    const auto mapped = to_log_frequency(rows, axis, p);
    REQUIRE(mapped.size() == 1);
    REQUIRE(mapped[0].size() == 360);
    int supported = 0;
    for (int n = 0; n < 360; ++n) {
        const double v = mapped[0][n];
        const bool is_zero = v == 0.0;
        const bool is_one = std::abs(v - 1.0) < 1e-9;
        CHECK((is_zero || is_one));
        if (is_one) ++supported;
        // above ~460 Hz the bin spacing exceeds the source spacing, so
        // support is guaranteed
        if (p.log_bin_centers()[n] > 460.0) CHECK(is_one);
    }
    CHECK(supported >= 200);
}

TEST_CASE("to_log_frequency places single sources on their bins") {
    CfpParams p;
    const std::vector<double> axis = {65.0}; // exactly the center of bin 60
    LogFreqMapper mapper(axis, p);
    const auto out = mapper.apply(std::vector<double>{7.0});
    REQUIRE(out.size() == 360);
    for (int n = 0; n < 360; ++n) {
        if (n == 60)
            CHECK(out[n] == doctest::Approx(7.0).epsilon(1e-12));
        else
            CHECK(out[n] == 0.0);
    }

    // a source between two centers contributes to both, each normalized back
    // to the source value
    const double mid = 32.5 * std::exp2(10.5 / 60.0);
    LogFreqMapper between(std::vector<double>{mid}, p);
    const auto out2 = between.apply(std::vector<double>{3.0});
    CHECK(out2[10] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(out2[11] == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("to_log_frequency rejects an f_max beyond the source Nyquist") {
    CfpParams p;
    p.f_max = 5000.0; // source axis below only reaches 4000 Hz
    std::vector<double> axis(385);
    for (int n = 0; n < 385; ++n) axis[n] = n * 8000.0 / 768.0;
    const std::vector<std::vector<double>> rows = {std::vector<double>(385, 1.0)};
    CHECK_THROWS_WITH_AS(to_log_frequency(rows, axis, p),
                         doctest::Contains("5000"), std::invalid_argument);

    LogFreqMapper mapper(axis, CfpParams{});
    CHECK_THROWS_AS(mapper.apply(std::vector<double>(10, 1.0)), std::invalid_argument);
}

TEST_CASE("CfpParams::validate rejects out-of-range fields") {
    CfpParams p;
    CHECK_NOTHROW(p.validate());
    CHECK_NOTHROW(p.validate(4000.0));

    CfpParams bad = p;
    bad.k = -0.1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = p;
    bad.gamma_gc = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = p;
    bad.f_min = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = p;
    bad.f_min = 3000.0; // above f_max
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = p;
    bad.n_log_bins = 361; // top center 2080 Hz, a full step past f_max
    CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("overshoots"),
                         std::invalid_argument);

    CHECK_THROWS_WITH_AS(p.validate(1500.0), doctest::Contains("1500"), std::invalid_argument);
}

TEST_CASE("compute_zcfp on silence yields a zero tensor with the right frame") {
    Waveform w;
    w.sample_rate = 8000;
    w.samples.assign(1600, 0.0);

    const CfpTensor t = compute_zcfp(w, CfpParams{});
    CHECK(t.frames == 20);
    CHECK(t.bins == 360);
    CHECK(t.frame_period == doctest::Approx(0.01));
    REQUIRE(t.values.size() == static_cast<size_t>(3) * 20 * 360);
    for (double v : t.values) CHECK(v == 0.0);
    CHECK(t.log_bin_freqs == CfpParams{}.log_bin_centers());
    CHECK(t.frame_times[19] == doctest::Approx(0.19));
}

TEST_CASE("compute_zcfp is deterministic") {
    const Waveform w = testutil::make_noise(8000, 4000, 99);
    const CfpTensor a = compute_zcfp(w, CfpParams{});
    const CfpTensor b = compute_zcfp(w, CfpParams{});
    CHECK(a.values == b.values);
}

TEST_CASE("compute_zcfp with k = 0 equals the plain pipeline composed by hand") {
    const Waveform w = testutil::make_harmonic_tone(8000, 0.5, 220.0, 6);
    CfpParams p;
    p.k = 0.0;
    const CfpTensor t = compute_zcfp(w, p);

    const auto frames = frame_signal(w, 768, 80);
    const Spectrogram spec = stft_magnitude(frames, WindowFn::kHann, 8000, 80);
    const double df = spec.bin_freqs[1];

    std::vector<std::vector<double>> s_rows, gc_rows, gcos_rows;
    for (const auto& mag : spec.values) {
        s_rows.push_back(rescale(mag, p.gamma_s));
        // plain CFP: no z-modification anywhere
        const auto pre = high_pass(rescale(mag, p.gamma_gc), df, p.hp_cutoff_freq);
        gc_rows.push_back(generalized_cepstrum(pre));
        gcos_rows.push_back(generalized_cepstrum_of_spectrum(gc_rows.back(), p, 8000));
    }
    const auto s_log = to_log_frequency(s_rows, spec.bin_freqs, p);
    const auto gc_axis = quefrency_to_freq_axis(quefrency_axis(385, 8000));
    const auto gc_log = to_log_frequency(gc_rows, gc_axis, p);
    const auto gcos_log = to_log_frequency(gcos_rows, spec.bin_freqs, p);

    REQUIRE(t.frames == static_cast<int>(s_log.size()));
    for (int ti = 0; ti < t.frames; ++ti) {
        for (int f = 0; f < t.bins; ++f) {
            CHECK(t.at(CfpTensor::kSpectrum, ti, f) == s_log[ti][f]);
            CHECK(t.at(CfpTensor::kCepstrum, ti, f) == gc_log[ti][f]);
            CHECK(t.at(CfpTensor::kCepstrumOfSpectrum, ti, f) == gcos_log[ti][f]);
        }
    }
}

TEST_CASE("k changes only the cepstrum channels") {
    const Waveform w = testutil::make_harmonic_tone(8000, 0.4, 196.0, 8);
    CfpParams plain;
    plain.k = 0.0;
    const CfpTensor a = compute_zcfp(w, plain);
    const CfpTensor b = compute_zcfp(w, CfpParams{}); // k = 0.0006

    bool gc_differs = false, gcos_differs = false;
    for (int t = 0; t < a.frames; ++t) {
        for (int f = 0; f < a.bins; ++f) {
            CHECK(a.at(CfpTensor::kSpectrum, t, f) == b.at(CfpTensor::kSpectrum, t, f));
            gc_differs |= a.at(CfpTensor::kCepstrum, t, f) != b.at(CfpTensor::kCepstrum, t, f);
            gcos_differs |= a.at(CfpTensor::kCepstrumOfSpectrum, t, f) !=
                            b.at(CfpTensor::kCepstrumOfSpectrum, t, f);
        }
    }
    CHECK(gc_differs);
    CHECK(gcos_differs);
}

TEST_CASE("compute_zcfp output is finite and non-negative") {
    const Waveform w = testutil::make_noise(8000, 8000, 31, 0.8);
    const CfpTensor t = compute_zcfp(w, CfpParams{});
    for (double v : t.values) {
        CHECK(std::isfinite(v));
        CHECK(v >= 0.0);
    }
}

TEST_CASE("compute_zcfp validates window and params") {
    const Waveform w = testutil::make_noise(8000, 1000, 1);
    CHECK_THROWS_AS(compute_zcfp(w, CfpParams{}, 767, 80), std::invalid_argument); // odd
    CfpParams p;
    p.k = -1.0;
    CHECK_THROWS_AS(compute_zcfp(w, p), std::invalid_argument);

    Waveform low = w;
    low.sample_rate = 3000; // Nyquist 1500 < f_max 2050
    CHECK_THROWS_AS(compute_zcfp(low, CfpParams{}), std::invalid_argument);
}
