#pragma once

#include "melody/cfp.hpp"
#include "melody/decode.hpp"
#include "melody/stability_loss.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace melody {

// On-disk container for tensors and prediction grids. Little-endian layout:
//   magic "ZCFP", u32 version, u32 channels, u32 frames, u32 bins,
//   u32 valid_frames, f64 frame_period, bins x f64 bin centers,
//   channels*frames*bins f32 values (row-major, channel-major).
// Tensors use channels=3 / bins=F; grids use channels=1 / bins=1+F with the
// voicing column's center stored as 0 Hz. frames may include zero padding up
// to a chunk multiple; valid_frames is the true length.
struct ZcfpFile {
    uint32_t version = 1;
    int channels = 0;
    int frames = 0;
    int bins = 0;
    int valid_frames = 0;
    double frame_period = 0.0;
    std::vector<double> bin_freqs; // bins entries
    std::vector<float> values;     // channels * frames * bins

    float at(int c, int t, int f) const {
        return values[(static_cast<size_t>(c) * frames + t) * bins + f];
    }
};

ZcfpFile read_zcfp(const std::string& path);
void write_zcfp(const std::string& path, const ZcfpFile& file);

// Pack a tensor, zero-padding the frame count up to a multiple of
// chunk_frames (pass 1 for no padding); valid_frames keeps the true count.
ZcfpFile pack_tensor(const CfpTensor& tensor, int chunk_frames);
CfpTensor unpack_tensor(const ZcfpFile& file); // trims padding back off

ZcfpFile pack_grid(const PredictionGrid& grid);
PredictionGrid unpack_grid(const ZcfpFile& file);

// Grid CSV: one row per frame, `time,value0,...` (column 0 = voicing).
// Reading infers frame_period from the time column (0.01 s for one row)
// and leaves col_freqs empty.
void write_grid_csv(const std::string& path, const PredictionGrid& grid);
PredictionGrid read_grid_csv(const std::string& path);

// Reads a grid from either container, sniffing the ZCFP magic.
PredictionGrid read_grid_auto(const std::string& path);

// Debug CSV of a tensor: one row per (channel, frame): `channel,time,v...`.
void write_tensor_csv(const std::string& path, const CfpTensor& tensor);

// Pitch-track text: two whitespace-separated columns `time_sec freq_hz`,
// 0 Hz = unvoiced.
void write_track(const std::string& path, const PitchTrack& track);
PitchTrack read_track(const std::string& path);

// 17-significant-digit formatting used by every text emitter, so written
// values re-ingest losslessly.
std::string format_g17(double v);

} // namespace melody
