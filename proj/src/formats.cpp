#include "melody/formats.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace melody {

namespace {

constexpr char kMagic[4] = {'Z', 'C', 'F', 'P'};
constexpr uint32_t kVersion = 1;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::runtime_error(path + ": " + what);
}

void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<uint64_t>(v)); }
void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<uint32_t>(v)); }

class Cursor {
public:
    Cursor(const std::string& data, const std::string& path) : data_(data), path_(path) {}

    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }
    double f64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return std::bit_cast<double>(v);
    }
    float f32() { return std::bit_cast<float>(u32()); }

    void expect_magic() {
        need(4);
        for (int i = 0; i < 4; ++i) {
            if (data_[pos_ + i] != kMagic[i]) fail(path_, "not a ZCFP file (bad magic)");
        }
        pos_ += 4;
    }
    size_t remaining() const { return data_.size() - pos_; }

private:
    void need(size_t n) {
        if (data_.size() - pos_ < n) fail(path_, "truncated file");
    }
    const std::string& data_;
    std::string path_;
    size_t pos_ = 0;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (!in.good() && !in.eof()) fail(path, "read error");
    return std::move(buf).str();
}

void write_file(const std::string& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(path, "cannot open for writing");
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out.good()) fail(path, "write error");
}

void check_counts(const std::string& path, const ZcfpFile& f) {
    if (f.channels < 1 || f.frames < 0 || f.bins < 1)
        fail(path, "invalid dimensions " + std::to_string(f.channels) + "x" +
                       std::to_string(f.frames) + "x" + std::to_string(f.bins));
    if (f.valid_frames < 0 || f.valid_frames > f.frames)
        fail(path, "valid_frames " + std::to_string(f.valid_frames) + " outside [0, frames]");
    if (f.bin_freqs.size() != static_cast<size_t>(f.bins)) fail(path, "bin table size mismatch");
    const size_t expect = static_cast<size_t>(f.channels) * f.frames * f.bins;
    if (f.values.size() != expect)
        fail(path, "value count " + std::to_string(f.values.size()) + " != " +
                       std::to_string(expect));
}

} // namespace

ZcfpFile read_zcfp(const std::string& path) {
    const std::string data = read_file(path);
    Cursor cur(data, path);
    cur.expect_magic();
    ZcfpFile f;
    f.version = cur.u32();
    if (f.version != kVersion)
        fail(path, "unsupported version " + std::to_string(f.version));
    f.channels = static_cast<int>(cur.u32());
    f.frames = static_cast<int>(cur.u32());
    f.bins = static_cast<int>(cur.u32());
    f.valid_frames = static_cast<int>(cur.u32());
    f.frame_period = cur.f64();
    if (f.channels < 1 || f.channels > 16 || f.bins < 1 || f.bins > (1 << 20) || f.frames < 0 ||
        f.frames > (1 << 26))
        fail(path, "implausible dimensions");
    f.bin_freqs.resize(static_cast<size_t>(f.bins));
    for (int i = 0; i < f.bins; ++i) f.bin_freqs[i] = cur.f64();
    const size_t count = static_cast<size_t>(f.channels) * f.frames * f.bins;
    f.values.resize(count);
    for (size_t i = 0; i < count; ++i) f.values[i] = cur.f32();
    if (cur.remaining() != 0) fail(path, "trailing bytes after tensor data");
    check_counts(path, f);
    return f;
}

void write_zcfp(const std::string& path, const ZcfpFile& f) {
    check_counts(path, f);
    std::string out;
    out.reserve(32 + 8 * f.bin_freqs.size() + 4 * f.values.size());
    out.append(kMagic, 4);
    put_u32(out, f.version);
    put_u32(out, static_cast<uint32_t>(f.channels));
    put_u32(out, static_cast<uint32_t>(f.frames));
    put_u32(out, static_cast<uint32_t>(f.bins));
    put_u32(out, static_cast<uint32_t>(f.valid_frames));
    put_f64(out, f.frame_period);
    for (double c : f.bin_freqs) put_f64(out, c);
    for (float v : f.values) put_f32(out, v);
    write_file(path, out);
}

ZcfpFile pack_tensor(const CfpTensor& tensor, int chunk_frames) {
    if (chunk_frames < 1) throw std::invalid_argument("pack_tensor: chunk_frames must be >= 1");
    ZcfpFile f;
    f.channels = CfpTensor::kChannels;
    f.valid_frames = tensor.frames;
    f.frames = (tensor.frames + chunk_frames - 1) / chunk_frames * chunk_frames;
    f.bins = tensor.bins;
    f.frame_period = tensor.frame_period;
    f.bin_freqs = tensor.log_bin_freqs;
    f.values.assign(static_cast<size_t>(f.channels) * f.frames * f.bins, 0.0f);
    for (int c = 0; c < f.channels; ++c)
        for (int t = 0; t < tensor.frames; ++t)
            for (int b = 0; b < tensor.bins; ++b)
                f.values[(static_cast<size_t>(c) * f.frames + t) * f.bins + b] =
                    static_cast<float>(tensor.at(c, t, b));
    return f;
}

CfpTensor unpack_tensor(const ZcfpFile& f) {
    if (f.channels != CfpTensor::kChannels)
        throw std::runtime_error("unpack_tensor: expected " +
                                 std::to_string(CfpTensor::kChannels) + " channels, got " +
                                 std::to_string(f.channels));
    CfpTensor t;
    t.frames = f.valid_frames;
    t.bins = f.bins;
    t.frame_period = f.frame_period;
    t.log_bin_freqs = f.bin_freqs;
    t.frame_times.resize(static_cast<size_t>(t.frames));
    for (int i = 0; i < t.frames; ++i) t.frame_times[i] = f.frame_period * i;
    t.values.resize(static_cast<size_t>(CfpTensor::kChannels) * t.frames * t.bins);
    for (int c = 0; c < f.channels; ++c)
        for (int i = 0; i < t.frames; ++i)
            for (int b = 0; b < t.bins; ++b) t.at(c, i, b) = f.at(c, i, b);
    return t;
}

ZcfpFile pack_grid(const PredictionGrid& grid) {
    grid.validate_shape();
    ZcfpFile f;
    f.channels = 1;
    f.frames = grid.frames;
    f.bins = grid.cols;
    f.valid_frames = grid.frames;
    f.frame_period = grid.frame_period;
    if (grid.col_freqs.empty())
        f.bin_freqs.assign(static_cast<size_t>(grid.cols), 0.0);
    else if (grid.col_freqs.size() == static_cast<size_t>(grid.cols))
        f.bin_freqs = grid.col_freqs;
    else
        throw std::invalid_argument("pack_grid: col_freqs size mismatch");
    f.values.assign(grid.values.begin(), grid.values.end());
    return f;
}

PredictionGrid unpack_grid(const ZcfpFile& f) {
    if (f.channels != 1)
        throw std::runtime_error("unpack_grid: expected 1 channel, got " +
                                 std::to_string(f.channels));
    PredictionGrid g;
    g.frames = f.valid_frames;
    g.cols = f.bins;
    g.frame_period = f.frame_period;
    g.col_freqs = f.bin_freqs;
    g.values.resize(static_cast<size_t>(g.frames) * g.cols);
    for (int t = 0; t < g.frames; ++t) {
        for (int b = 0; b < g.cols; ++b)
            g.values[static_cast<size_t>(t) * g.cols + b] = f.at(0, t, b);
    }
    g.validate_shape();
    return g;
}

void write_grid_csv(const std::string& path, const PredictionGrid& grid) {
    grid.validate_shape();
    std::string out;
    for (int t = 0; t < grid.frames; ++t) {
        out += format_g17(grid.frame_period * t);
        for (int c = 0; c < grid.cols; ++c) {
            out += ',';
            out += format_g17(grid.at(t, c));
        }
        out += '\n';
    }
    write_file(path, out);
}

PredictionGrid read_grid_csv(const std::string& path) {
    const std::string data = read_file(path);
    PredictionGrid g;
    std::vector<double> times;
    std::istringstream lines(data);
    std::string line;
    int line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<double> fields;
        std::string cell;
        std::istringstream cells(line);
        while (std::getline(cells, cell, ',')) {
            try {
                size_t used = 0;
                fields.push_back(std::stod(cell, &used));
                while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used])))
                    ++used;
                if (used != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                fail(path, "line " + std::to_string(line_no) + ": bad number '" + cell + "'");
            }
        }
        if (fields.size() < 2)
            fail(path, "line " + std::to_string(line_no) + ": need time plus at least 1 value");
        if (g.cols == 0)
            g.cols = static_cast<int>(fields.size()) - 1;
        else if (static_cast<int>(fields.size()) - 1 != g.cols)
            fail(path, "line " + std::to_string(line_no) + ": expected " +
                           std::to_string(g.cols + 1) + " fields, got " +
                           std::to_string(fields.size()));
        times.push_back(fields[0]);
        g.values.insert(g.values.end(), fields.begin() + 1, fields.end());
    }
    if (times.empty()) fail(path, "no data rows");
    g.frames = static_cast<int>(times.size());
    g.frame_period = times.size() >= 2 ? times[1] - times[0] : 0.01;
    g.validate_shape();
    return g;
}

PredictionGrid read_grid_auto(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open for reading");
    char magic[4] = {0, 0, 0, 0};
    in.read(magic, 4);
    in.close();
    if (in.gcount() == 4 && std::equal(magic, magic + 4, kMagic))
        return unpack_grid(read_zcfp(path));
    return read_grid_csv(path);
}

void write_tensor_csv(const std::string& path, const CfpTensor& tensor) {
    std::string out;
    for (int c = 0; c < CfpTensor::kChannels; ++c) {
        for (int t = 0; t < tensor.frames; ++t) {
            out += std::to_string(c);
            out += ',';
            out += format_g17(tensor.frame_times[t]);
            for (int b = 0; b < tensor.bins; ++b) {
                out += ',';
                out += format_g17(tensor.at(c, t, b));
            }
            out += '\n';
        }
    }
    write_file(path, out);
}

void write_track(const std::string& path, const PitchTrack& track) {
    if (track.times.size() != track.freqs.size())
        throw std::invalid_argument("write_track: times/freqs length mismatch");
    std::string out;
    for (size_t i = 0; i < track.times.size(); ++i) {
        out += format_g17(track.times[i]);
        out += ' ';
        out += format_g17(track.freqs[i]);
        out += '\n';
    }
    write_file(path, out);
}

PitchTrack read_track(const std::string& path) {
    const std::string data = read_file(path);
    PitchTrack track;
    std::istringstream lines(data);
    std::string line;
    int line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream cells(line);
        double t = 0.0, f = 0.0;
        if (!(cells >> t >> f))
            fail(path, "line " + std::to_string(line_no) + ": expected 'time freq'");
        std::string extra;
        if (cells >> extra)
            fail(path, "line " + std::to_string(line_no) + ": trailing field '" + extra + "'");
        track.times.push_back(t);
        track.freqs.push_back(f);
    }
    return track;
}

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace melody
