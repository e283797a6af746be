#include "melody/decode.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace melody {

namespace {

void check(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

void check_binary(const std::vector<int>& v, const char* who) {
    for (size_t i = 0; i < v.size(); ++i) {
        check(v[i] == 0 || v[i] == 1, std::string(who) + ": value " + std::to_string(v[i]) +
                                          " at index " + std::to_string(i) + " is not binary");
    }
}

PitchTrack decode_impl(const PredictionGrid& pred, double threshold, bool use_voicing,
                       std::span<const double> log_bin_freqs) {
    pred.validate_shape();
    check(pred.cols >= 2, "decode_grid: grid needs a voicing column plus pitch columns");
    check(static_cast<int>(log_bin_freqs.size()) == pred.cols - 1,
          "decode_grid: bin table has " + std::to_string(log_bin_freqs.size()) +
              " entries but the grid has " + std::to_string(pred.cols - 1) + " pitch columns");
    check(pred.frame_period > 0.0, "decode_grid: frame_period must be positive");

    PitchTrack track;
    track.times.resize(static_cast<size_t>(pred.frames));
    track.freqs.resize(static_cast<size_t>(pred.frames));
    for (int t = 0; t < pred.frames; ++t) {
        track.times[t] = pred.frame_period * t;
        const bool voiced = !use_voicing || pred.at(t, 0) >= threshold;
        if (!voiced) continue; // freqs already 0
        int best = 1;
        for (int c = 2; c < pred.cols; ++c) {
            if (pred.at(t, c) > pred.at(t, best)) best = c; // strict: ties keep the lowest bin
        }
        track.freqs[t] = log_bin_freqs[best - 1];
    }
    return track;
}

} // namespace

PitchTrack decode_grid(const PredictionGrid& pred, double threshold,
                       std::span<const double> log_bin_freqs) {
    check(threshold > 0.0 && threshold < 1.0, "decode_grid: threshold must lie in (0, 1)");
    return decode_impl(pred, threshold, true, log_bin_freqs);
}

PitchTrack decode_grid_all_voiced(const PredictionGrid& pred,
                                  std::span<const double> log_bin_freqs) {
    return decode_impl(pred, 0.0, false, log_bin_freqs);
}

std::vector<int> median_filter_voicing(const std::vector<int>& v, int size) {
    check(size >= 3, "median_filter_voicing: size must be >= 3, got " + std::to_string(size));
    check(size % 2 == 1, "median_filter_voicing: size must be odd, got " + std::to_string(size));
    check_binary(v, "median_filter_voicing");
    if (v.empty()) return {};

    const int n = static_cast<int>(v.size());
    const int half = size / 2;
    std::vector<int> out(v.size());
    for (int i = 0; i < n; ++i) {
        // edge replication: clamp window indices into [0, n)
        int ones = 0;
        for (int j = i - half; j <= i + half; ++j) ones += v[std::clamp(j, 0, n - 1)];
        out[i] = 2 * ones > size ? 1 : 0; // binary median == majority, size odd
    }
    return out;
}

PitchTrack merge_median(const PitchTrack& original, const std::vector<int>& filtered_voicing,
                        const PitchTrack& fallback_pitch) {
    const size_t n = original.size();
    check(original.freqs.size() == n, "merge_median: original track times/freqs length mismatch");
    check(filtered_voicing.size() == n && fallback_pitch.size() == n,
          "merge_median: inputs cover " + std::to_string(n) + ", " +
              std::to_string(filtered_voicing.size()) + ", and " +
              std::to_string(fallback_pitch.size()) + " frames; all three must align");
    check_binary(filtered_voicing, "merge_median");
    for (size_t t = 0; t < n; ++t) {
        check(std::abs(original.times[t] - fallback_pitch.times[t]) <= 1e-9,
              "merge_median: track time grids diverge at frame " + std::to_string(t));
    }

    PitchTrack out;
    out.times = original.times;
    out.freqs.resize(n, 0.0);
    for (size_t t = 0; t < n; ++t) {
        if (original.freqs[t] > 0.0)
            out.freqs[t] = original.freqs[t];
        else if (filtered_voicing[t] == 1)
            out.freqs[t] = fallback_pitch.freqs[t];
    }
    return out;
}

BurstProfile burst_profile(const std::vector<int>& v, int m_v, int m_nv) {
    check(m_v >= 3, "burst_profile: M_v must be >= 3, got " + std::to_string(m_v));
    check(m_nv >= 3, "burst_profile: M_nv must be >= 3, got " + std::to_string(m_nv));
    check_binary(v, "burst_profile");

    BurstProfile out;
    const int n = static_cast<int>(v.size());
    int start = 0;
    while (start < n) {
        int end = start;
        while (end < n && v[end] == v[start]) ++end;
        const int len = end - start;
        const bool interior = start > 0 && end < n; // flanked by opposite state on both sides
        if (interior) {
            if (v[start] == 1 && len <= m_v - 2) {
                out.vocal_bursts.push_back({start, len});
                ++out.vocal_counts[len];
            } else if (v[start] == 0 && len <= m_nv - 2) {
                out.nonvocal_bursts.push_back({start, len});
                ++out.nonvocal_counts[len];
            }
        }
        start = end;
    }
    return out;
}

std::vector<int> binarize_voicing(const VoicingSeq& a, double threshold) {
    std::vector<int> v(a.size());
    for (size_t i = 0; i < a.size(); ++i) v[i] = a[i] >= threshold ? 1 : 0;
    return v;
}

} // namespace melody
