#pragma once

#include <string>
#include <vector>

namespace melody {

// Mono audio at a fixed sample rate, samples roughly in [-1, 1].
struct Waveform {
    std::vector<double> samples;
    int sample_rate = 0;

    double duration() const {
        return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
    }
};

// Decode a RIFF/WAVE file. Accepts PCM 8/16/24-bit integer and 32-bit float,
// any channel count (channels are averaged to mono). Samples are normalized
// to [-1, 1]. Throws std::runtime_error naming the offending property on
// unreadable or unsupported input.
Waveform load_audio(const std::string& path);

// Write a mono waveform as 16-bit PCM. Test/demo helper for synthesizing inputs.
void write_wav_pcm16(const std::string& path, const Waveform& w);

// Band-limited rate conversion (Kaiser-windowed sinc interpolation).
// Output duration equals the input duration within one output sample.
// Same rate in and out returns the input unchanged.
Waveform resample(const Waveform& w, int target_rate);

// Split into frames of window_size samples every hop samples. Frame t covers
// samples [t*hop, t*hop + window_size), zero-padded past the end of the
// signal. Frame count is ceil(len / hop), so with hop = sample_rate/100 the
// frame grid lands on 0.01 s steps. Empty input gives no frames.
// Requires window_size >= hop >= 1.
std::vector<std::vector<double>> frame_signal(const Waveform& w, int window_size, int hop);

} // namespace melody
