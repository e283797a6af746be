#include "melody/audio_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace melody {

namespace {

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;
constexpr uint16_t kFormatExtensible = 0xFFFE;

uint32_t read_u32le(const uint8_t* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t read_u16le(const uint8_t* p) {
    return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

std::vector<uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open audio file: " + path);
    }
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    return bytes;
}

double decode_sample(const uint8_t* p, uint16_t format, int bits) {
    if (format == kFormatFloat) {
        float v;
        std::memcpy(&v, p, 4);
        return static_cast<double>(v);
    }
    switch (bits) {
        case 8:
            // 8-bit WAV is unsigned with midpoint 128
            return (static_cast<int>(p[0]) - 128) / 128.0;
        case 16: {
            int16_t v = static_cast<int16_t>(p[0] | (p[1] << 8));
            return v / 32768.0;
        }
        case 24: {
            int32_t v = static_cast<int32_t>(p[0] | (p[1] << 8) | (p[2] << 16));
            if (v & 0x800000) v |= ~0xFFFFFF; // sign extend
            return v / 8388608.0;
        }
        default:
            throw std::runtime_error("unsupported PCM bit depth: " + std::to_string(bits));
    }
}

// Modified Bessel function of the first kind, order 0 (for the Kaiser window).
double bessel_i0(double x) {
    double sum = 1.0, term = 1.0;
    const double half_x = x / 2.0;
    for (int k = 1; k < 64; ++k) {
        term *= (half_x / k) * (half_x / k);
        sum += term;
        if (term < 1e-18 * sum) break;
    }
    return sum;
}

} // namespace

Waveform load_audio(const std::string& path) {
    const std::vector<uint8_t> bytes = read_file_bytes(path);
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw std::runtime_error("not a RIFF/WAVE file: " + path);
    }

    uint16_t format = 0, channels = 0, bits = 0;
    uint32_t sample_rate = 0;
    bool have_fmt = false;
    const uint8_t* data = nullptr;
    size_t data_size = 0;

    size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
        uint32_t chunk_size = read_u32le(bytes.data() + pos + 4);
        pos += 8;
        if (pos + chunk_size > bytes.size()) {
            chunk_size = static_cast<uint32_t>(bytes.size() - pos); // tolerate truncated final chunk size
        }
        if (std::memcmp(id, "fmt ", 4) == 0) {
            if (chunk_size < 16) {
                throw std::runtime_error("malformed fmt chunk (size " +
                                         std::to_string(chunk_size) + ") in " + path);
            }
            const uint8_t* f = bytes.data() + pos;
            format = read_u16le(f);
            channels = read_u16le(f + 2);
            sample_rate = read_u32le(f + 4);
            bits = read_u16le(f + 14);
            if (format == kFormatExtensible) {
                // sub-format GUID starts at offset 24; first two bytes carry the tag
                if (chunk_size < 26) {
                    throw std::runtime_error("malformed extensible fmt chunk in " + path);
                }
                format = read_u16le(f + 24);
            }
            have_fmt = true;
        } else if (std::memcmp(id, "data", 4) == 0) {
            data = bytes.data() + pos;
            data_size = chunk_size;
        }
        pos += chunk_size + (chunk_size & 1); // chunks are word-aligned
    }

    if (!have_fmt || data == nullptr) {
        throw std::runtime_error("missing fmt or data chunk in " + path);
    }
    if (format != kFormatPcm && format != kFormatFloat) {
        throw std::runtime_error("unsupported WAV format tag " + std::to_string(format) +
                                 " in " + path + " (expected PCM or IEEE float)");
    }
    if (format == kFormatFloat && bits != 32) {
        throw std::runtime_error("unsupported float bit depth " + std::to_string(bits) +
                                 " in " + path);
    }
    if (format == kFormatPcm && bits != 8 && bits != 16 && bits != 24) {
        throw std::runtime_error("unsupported PCM bit depth " + std::to_string(bits) +
                                 " in " + path);
    }
    if (channels == 0) {
        throw std::runtime_error("zero channels declared in " + path);
    }
    if (sample_rate == 0) {
        throw std::runtime_error("zero sample rate declared in " + path);
    }

    const size_t bytes_per_sample = bits / 8;
    const size_t frame_bytes = bytes_per_sample * channels;
    const size_t n_frames = data_size / frame_bytes;

    Waveform w;
    w.sample_rate = static_cast<int>(sample_rate);
    w.samples.resize(n_frames);
    for (size_t i = 0; i < n_frames; ++i) {
        double acc = 0.0;
        for (int c = 0; c < channels; ++c) {
            acc += decode_sample(data + i * frame_bytes + c * bytes_per_sample, format, bits);
        }
        w.samples[i] = acc / channels;
    }
    return w;
}

void write_wav_pcm16(const std::string& path, const Waveform& w) {
    if (w.sample_rate <= 0) {
        throw std::runtime_error("cannot write WAV with sample rate " +
                                 std::to_string(w.sample_rate));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path);
    }
    const uint32_t data_size = static_cast<uint32_t>(w.samples.size() * 2);
    const uint32_t riff_size = 36 + data_size;
    const uint32_t rate = static_cast<uint32_t>(w.sample_rate);
    const uint32_t byte_rate = rate * 2;

    auto put_u32 = [&](uint32_t v) {
        uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                        static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
        out.write(reinterpret_cast<char*>(b), 4);
    };
    auto put_u16 = [&](uint16_t v) {
        uint8_t b[2] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8)};
        out.write(reinterpret_cast<char*>(b), 2);
    };

    out.write("RIFF", 4);
    put_u32(riff_size);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    put_u32(16);
    put_u16(kFormatPcm);
    put_u16(1); // mono
    put_u32(rate);
    put_u32(byte_rate);
    put_u16(2);  // block align
    put_u16(16); // bits
    out.write("data", 4);
    put_u32(data_size);
    for (double s : w.samples) {
        const double clamped = std::clamp(s, -1.0, 1.0);
        put_u16(static_cast<uint16_t>(static_cast<int16_t>(std::lround(clamped * 32767.0))));
    }
    if (!out) {
        throw std::runtime_error("write failed: " + path);
    }
}

Waveform resample(const Waveform& w, int target_rate) {
    if (target_rate <= 0) {
        throw std::invalid_argument("target sample rate must be positive, got " +
                                    std::to_string(target_rate));
    }
    if (target_rate == w.sample_rate) {
        return w;
    }

    const double in_rate = static_cast<double>(w.sample_rate);
    const double out_rate = static_cast<double>(target_rate);
    const size_t out_len = static_cast<size_t>(
        std::llround(static_cast<double>(w.samples.size()) * out_rate / in_rate));

    Waveform out;
    out.sample_rate = target_rate;
    out.samples.assign(out_len, 0.0);
    if (w.samples.empty()) return out;

    // Kaiser-windowed sinc. Cutoff sits just under the lower Nyquist; when
    // downsampling the kernel stretches by the rate ratio to keep it there.
    constexpr int kHalfTaps = 48;
    constexpr double kBeta = 9.0;
    constexpr double kRolloff = 0.95;
    const double stretch = std::max(1.0, in_rate / out_rate);
    const double cutoff = kRolloff * 0.5 / stretch; // cycles per input sample
    const double inv_i0_beta = 1.0 / bessel_i0(kBeta);
    const double half_width = kHalfTaps * stretch;
    const int n_in = static_cast<int>(w.samples.size());

    for (size_t i = 0; i < out_len; ++i) {
        const double center = static_cast<double>(i) * in_rate / out_rate;
        const int lo = std::max(0, static_cast<int>(std::ceil(center - half_width)));
        const int hi = std::min(n_in - 1, static_cast<int>(std::floor(center + half_width)));
        double acc = 0.0;
        for (int n = lo; n <= hi; ++n) {
            const double t = n - center;
            const double x = 2.0 * std::numbers::pi * cutoff * t;
            const double sinc = (std::abs(x) < 1e-12) ? 1.0 : std::sin(x) / x;
            const double u = t / half_width; // in [-1, 1]
            const double win = bessel_i0(kBeta * std::sqrt(std::max(0.0, 1.0 - u * u))) * inv_i0_beta;
            acc += w.samples[n] * sinc * win;
        }
        out.samples[i] = acc * 2.0 * cutoff;
    }
    return out;
}

std::vector<std::vector<double>> frame_signal(const Waveform& w, int window_size, int hop) {
    if (hop < 1 || window_size < hop) {
        throw std::invalid_argument("frame_signal requires window_size >= hop >= 1, got window " +
                                    std::to_string(window_size) + ", hop " + std::to_string(hop));
    }
    const size_t len = w.samples.size();
    const size_t n_frames = (len + hop - 1) / hop; // ceil(len / hop)
    std::vector<std::vector<double>> frames(n_frames);
    for (size_t t = 0; t < n_frames; ++t) {
        frames[t].assign(window_size, 0.0);
        const size_t start = t * static_cast<size_t>(hop);
        const size_t n = std::min(static_cast<size_t>(window_size), len - start);
        std::copy(w.samples.begin() + start, w.samples.begin() + start + n, frames[t].begin());
    }
    return frames;
}

} // namespace melody
