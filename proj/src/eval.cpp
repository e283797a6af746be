#include "melody/eval.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace melody {

namespace {

constexpr double kCentTolerance = 50.0;
constexpr double kCentSlack = 1e-9; // keeps the exactly-50-cent boundary inside

void check(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

void check_track(const PitchTrack& t, const char* who) {
    check(t.times.size() == t.freqs.size(),
          std::string(who) + ": times/freqs length mismatch");
    for (size_t i = 0; i < t.freqs.size(); ++i)
        check(t.freqs[i] >= 0.0, std::string(who) + ": negative frequency at frame " +
                                     std::to_string(i));
    for (size_t i = 2; i < t.times.size(); ++i) {
        const double d0 = t.times[1] - t.times[0];
        check(std::abs((t.times[i] - t.times[i - 1]) - d0) <= 1e-9,
              std::string(who) + ": non-uniform time grid at frame " + std::to_string(i));
    }
}

bool within_tolerance(double cents) { return cents <= kCentTolerance + kCentSlack; }

} // namespace

PitchTrack resample_track(const PitchTrack& t, std::span<const double> grid_times) {
    check_track(t, "resample_track");
    for (size_t i = 1; i < grid_times.size(); ++i) {
        const double d0 = grid_times.size() >= 2 ? grid_times[1] - grid_times[0] : 0.0;
        check(std::abs((grid_times[i] - grid_times[i - 1]) - d0) <= 1e-9,
              "resample_track: target grid is not uniform at index " + std::to_string(i));
    }

    PitchTrack out;
    out.times.assign(grid_times.begin(), grid_times.end());
    out.freqs.assign(grid_times.size(), 0.0);
    if (t.times.empty()) return out;

    double dt = 0.0;
    if (t.times.size() >= 2)
        dt = t.times[1] - t.times[0];
    else if (grid_times.size() >= 2)
        dt = grid_times[1] - grid_times[0];
    const double t0 = t.times.front();
    const long long n = static_cast<long long>(t.times.size());

    for (size_t i = 0; i < grid_times.size(); ++i) {
        long long idx;
        if (dt > 0.0) {
            // round half toward the later frame
            idx = static_cast<long long>(std::floor((grid_times[i] - t0) / dt + 0.5));
        } else {
            idx = std::abs(grid_times[i] - t0) <= 1e-9 ? 0 : -1;
        }
        if (idx >= 0 && idx < n) out.freqs[i] = t.freqs[idx];
    }
    return out;
}

EvalReport evaluate(const PitchTrack& ref, const PitchTrack& est) {
    check_track(ref, "evaluate reference");
    check_track(est, "evaluate estimate");
    check(!ref.times.empty(), "evaluate: reference track has no frames");
    check(ref.times.size() == est.times.size(),
          "evaluate: reference has " + std::to_string(ref.times.size()) +
              " frames, estimate has " + std::to_string(est.times.size()) +
              "; align them with resample_track first");
    for (size_t i = 0; i < ref.times.size(); ++i) {
        check(std::abs(ref.times[i] - est.times[i]) <= 1e-9,
              "evaluate: time grids diverge at frame " + std::to_string(i) +
                  "; align them with resample_track first");
    }

    EvalReport rep;
    EvalCounts& c = rep.counts;
    c.total_frames = static_cast<long long>(ref.times.size());
    for (size_t i = 0; i < ref.times.size(); ++i) {
        const bool ref_voiced = ref.freqs[i] > 0.0;
        const bool est_voiced = est.freqs[i] > 0.0;
        if (!ref_voiced) {
            ++c.ref_unvoiced;
            if (est_voiced)
                ++c.false_alarms;
            else
                ++c.overall_correct;
            continue;
        }
        ++c.ref_voiced;
        if (est_voiced) ++c.voiced_hits;
        if (!est_voiced) continue; // 0 Hz estimate can never be within tolerance
        const double diff = 1200.0 * std::log2(est.freqs[i] / ref.freqs[i]);
        if (within_tolerance(std::abs(diff))) {
            ++c.pitch_correct;
            ++c.overall_correct; // est is voiced here by construction
        }
        const double folded = std::abs(diff - 1200.0 * std::round(diff / 1200.0));
        if (within_tolerance(folded)) ++c.chroma_correct;
    }

    rep.no_voiced_reference = c.ref_voiced == 0;
    if (c.ref_voiced > 0) {
        rep.vr = static_cast<double>(c.voiced_hits) / c.ref_voiced;
        rep.rpa = static_cast<double>(c.pitch_correct) / c.ref_voiced;
        rep.rca = static_cast<double>(c.chroma_correct) / c.ref_voiced;
    }
    if (c.ref_unvoiced > 0) rep.vfa = static_cast<double>(c.false_alarms) / c.ref_unvoiced;
    rep.oa = static_cast<double>(c.overall_correct) / c.total_frames;
    return rep;
}

} // namespace melody
