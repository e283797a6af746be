#pragma once

#include "melody/stability_loss.hpp"

#include <map>
#include <span>
#include <vector>

namespace melody {

// Per-frame melody contour; 0 Hz marks an unvoiced frame.
struct PitchTrack {
    std::vector<double> times; // seconds, uniform spacing
    std::vector<double> freqs; // Hz, >= 0

    size_t size() const { return times.size(); }
};

struct Burst {
    int start = 0;  // frame index of the first frame in the run
    int length = 0; // frames
};

// Maximal short runs flanked on both sides by the opposite state. Runs that
// touch the sequence boundary are excluded.
struct BurstProfile {
    std::vector<Burst> vocal_bursts;    // 1-runs of length <= M_v - 2
    std::vector<Burst> nonvocal_bursts; // 0-runs of length <= M_nv - 2
    std::map<int, int> vocal_counts;    // length -> number of runs
    std::map<int, int> nonvocal_counts;

    int total() const {
        return static_cast<int>(vocal_bursts.size() + nonvocal_bursts.size());
    }
};

// Frame voiced iff column 0 >= threshold; voiced frames emit the frequency
// of the argmax over pitch columns (ties -> lowest bin), unvoiced emit 0 Hz.
// log_bin_freqs must have pred.cols - 1 entries.
PitchTrack decode_grid(const PredictionGrid& pred, double threshold,
                       std::span<const double> log_bin_freqs);

// As decode_grid but ignoring the voicing column: every frame emits the
// pitch argmax. Feeds merge_median's fallback track.
PitchTrack decode_grid_all_voiced(const PredictionGrid& pred,
                                  std::span<const double> log_bin_freqs);

// Sliding binary majority with edge-replication padding. size odd, >= 3.
std::vector<int> median_filter_voicing(const std::vector<int>& v, int size);

// Keep original where it is voiced; where it is unvoiced but the filtered
// voicing says voiced, take fallback_pitch's frequency; else 0 Hz.
PitchTrack merge_median(const PitchTrack& original, const std::vector<int>& filtered_voicing,
                        const PitchTrack& fallback_pitch);

BurstProfile burst_profile(const std::vector<int>& v, int m_v, int m_nv);

// Threshold a [0,1] sequence into the binary voicing used by the ops above.
std::vector<int> binarize_voicing(const VoicingSeq& a, double threshold);

} // namespace melody
