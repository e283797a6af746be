#pragma once

#include "melody/decode.hpp"

#include <span>

namespace melody {

// Frame tallies backing the five ratios.
struct EvalCounts {
    long long total_frames = 0;
    long long ref_voiced = 0;
    long long ref_unvoiced = 0;
    long long voiced_hits = 0;    // ref voiced and est voiced
    long long false_alarms = 0;   // ref unvoiced and est voiced
    long long pitch_correct = 0;  // ref voiced, est pitch within 50 cents
    long long chroma_correct = 0; // same, pitch folded to one octave
    long long overall_correct = 0;
};

struct EvalReport {
    double vr = 0.0;  // voicing recall
    double vfa = 0.0; // voicing false alarm
    double rpa = 0.0; // raw pitch accuracy
    double rca = 0.0; // raw chroma accuracy
    double oa = 0.0;  // overall accuracy
    bool no_voiced_reference = false; // #ref voiced == 0; VR/RPA/RCA reported as 0
    EvalCounts counts;
};

// Nearest-frame assignment of a track onto a uniform time grid; grid frames
// beyond the track's extent come out unvoiced. Ties round toward the later
// source frame.
PitchTrack resample_track(const PitchTrack& t, std::span<const double> grid_times);

// The five melody metrics over two tracks on the same frame grid (align the
// estimate with resample_track first). 50-cent tolerance, closed interval;
// RPA/RCA score the estimate's pitch on ref-voiced frames regardless of the
// estimate's voicing flag (0 Hz counts as incorrect).
EvalReport evaluate(const PitchTrack& ref, const PitchTrack& est);

} // namespace melody
