#include "melody/audio_io.hpp"
#include "melody/cfp.hpp"
#include "melody/decode.hpp"
#include "melody/eval.hpp"
#include "melody/formats.hpp"
#include "melody/stability_loss.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Everything the subcommands consume, filled by CLI11. Defaults follow the
// reference configuration: 8 kHz audio, 768/80 framing, 128-frame chunks,
// F=360 log bins, k=0.0006, M_v=30, M_nv=7, r=5.
struct RunConfig {
    int sample_rate = 8000;
    int window = 768;
    int hop = 80;
    int chunk = 128;
    melody::CfpParams cfp;
    melody::LossParams loss;
    double threshold = 0.5;
    int median_size = 3;
    int steps = 500;
    double lr = 0.5;
    int demo_length = 60;
    unsigned seed = 1234;

    std::vector<std::string> inputs;
    std::string out_dir = ".";
    std::string grid_path;
    std::string label_path;
    std::string out_path;
    std::string ref_path;
    std::string est_path;
    std::string per_window_csv;
    std::string curve_csv;
    std::string seq_csv;
    std::string a0_path;
    std::string label_seq_path;
    bool emit_csv = false;
    bool json_output = false;
};

void add_cfp_options(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--k", cfg.cfp.k, "z-transform growth rate (0 = plain CFP)")
        ->capture_default_str();
    cmd->add_option("--gamma-s", cfg.cfp.gamma_s, "rescale exponent, spectrum channel")
        ->capture_default_str();
    cmd->add_option("--gamma-gc", cfg.cfp.gamma_gc, "rescale exponent before the cepstrum")
        ->capture_default_str();
    cmd->add_option("--gamma-gcos", cfg.cfp.gamma_gcos,
                    "rescale exponent before the cepstrum-of-spectrum")
        ->capture_default_str();
    cmd->add_option("--hp-freq", cfg.cfp.hp_cutoff_freq, "spectrum high-pass cutoff, Hz")
        ->capture_default_str();
    cmd->add_option("--hp-quef", cfg.cfp.hp_cutoff_quef, "quefrency high-pass cutoff, seconds")
        ->capture_default_str();
}

void add_bin_options(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--bins", cfg.cfp.n_log_bins, "log-frequency bins")->capture_default_str();
    cmd->add_option("--bpo", cfg.cfp.bins_per_octave, "bins per octave")->capture_default_str();
    cmd->add_option("--fmin", cfg.cfp.f_min, "center of log bin 0, Hz")->capture_default_str();
    cmd->add_option("--fmax", cfg.cfp.f_max, "upper frequency bound, Hz")->capture_default_str();
}

void add_loss_options(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--mv", cfg.loss.m_v, "max penalized vocal-burst window, frames")
        ->capture_default_str();
    cmd->add_option("--mnv", cfg.loss.m_nv, "max penalized non-vocal-burst window, frames")
        ->capture_default_str();
    cmd->add_option("--r", cfg.loss.r, "S-curve exponent")->capture_default_str();
    cmd->add_option("--w-bce", cfg.loss.weight_bce, "BCE weight")->capture_default_str();
    cmd->add_option("--w-v", cfg.loss.weight_v, "vocal-burst loss weight")->capture_default_str();
    cmd->add_option("--w-nv", cfg.loss.weight_nv, "non-vocal-burst loss weight")
        ->capture_default_str();
    cmd->add_option("--eps", cfg.loss.eps, "BCE probability clamp")->capture_default_str();
}

void emit(const json& j) { std::cout << j.dump(2) << "\n"; }

// Pitch-bin centers for a grid: prefer the table stored in the file, fall
// back to the configured log-frequency grid.
std::vector<double> pitch_centers(const melody::PredictionGrid& grid, const RunConfig& cfg) {
    if (grid.col_freqs.size() == static_cast<size_t>(grid.cols)) {
        // stored table covers all columns; strip the voicing column
        bool any = false;
        for (size_t i = 1; i < grid.col_freqs.size(); ++i) any = any || grid.col_freqs[i] > 0.0;
        if (any) return {grid.col_freqs.begin() + 1, grid.col_freqs.end()};
    }
    if (cfg.cfp.n_log_bins != grid.cols - 1) {
        throw std::runtime_error("grid has " + std::to_string(grid.cols - 1) +
                                 " pitch columns but --bins is " +
                                 std::to_string(cfg.cfp.n_log_bins));
    }
    return cfg.cfp.log_bin_centers();
}

std::vector<double> read_sequence(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open for reading");
    std::vector<double> vals;
    double v = 0.0;
    while (in >> v) vals.push_back(v);
    if (!in.eof()) throw std::runtime_error(path + ": bad number near entry " +
                                            std::to_string(vals.size()));
    if (vals.empty()) throw std::runtime_error(path + ": no values");
    return vals;
}

int run_extract(RunConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    json outputs = json::array();
    for (const std::string& input : cfg.inputs) {
        melody::Waveform w = melody::load_audio(input);
        w = melody::resample(w, cfg.sample_rate);
        const melody::CfpTensor tensor =
            melody::compute_zcfp(w, cfg.cfp, cfg.window, cfg.hop);
        const melody::ZcfpFile packed = melody::pack_tensor(tensor, cfg.chunk);

        const fs::path out_base = fs::path(cfg.out_dir) / fs::path(input).stem();
        const std::string bin_path = out_base.string() + ".zcfp";
        melody::write_zcfp(bin_path, packed);
        json entry = {
            {"input", input},
            {"output", bin_path},
            {"frames", packed.valid_frames},
            {"padded_frames", packed.frames},
            {"chunks", cfg.chunk > 0 ? packed.frames / cfg.chunk : 0},
            {"bins", packed.bins},
            {"frame_period", packed.frame_period},
        };
        if (cfg.emit_csv) {
            const std::string csv_path = out_base.string() + ".csv";
            melody::write_tensor_csv(csv_path, tensor);
            entry["csv"] = csv_path;
        }
        outputs.push_back(std::move(entry));
    }
    emit(json{{"outputs", outputs}});
    return 0;
}

int run_loss(RunConfig& cfg) {
    const melody::PredictionGrid pred = melody::read_grid_auto(cfg.grid_path);
    const melody::PredictionGrid label = melody::read_grid_auto(cfg.label_path);
    const melody::LossBreakdown breakdown = melody::total_loss(pred, label, cfg.loss);

    if (!cfg.per_window_csv.empty()) {
        std::ofstream out(cfg.per_window_csv);
        if (!out) throw std::runtime_error(cfg.per_window_csv + ": cannot open for writing");
        out << "kind,m,start,value\n";
        for (const auto& [m, vals] : breakdown.per_window_v)
            for (size_t s = 0; s < vals.size(); ++s)
                out << "v," << m << ',' << s << ',' << melody::format_g17(vals[s]) << '\n';
        for (const auto& [m, vals] : breakdown.per_window_nv)
            for (size_t s = 0; s < vals.size(); ++s)
                out << "nv," << m << ',' << s << ',' << melody::format_g17(vals[s]) << '\n';
        if (!out.good()) throw std::runtime_error(cfg.per_window_csv + ": write error");
    }

    size_t windows_v = 0, windows_nv = 0;
    for (const auto& [m, vals] : breakdown.per_window_v) windows_v += vals.size();
    for (const auto& [m, vals] : breakdown.per_window_nv) windows_nv += vals.size();
    json j = {
        {"total", breakdown.total},     {"bce", breakdown.bce},
        {"l_v", breakdown.l_v},         {"l_nv", breakdown.l_nv},
        {"windows_v", windows_v},       {"windows_nv", windows_nv},
        {"frames", pred.frames},        {"cols", pred.cols},
    };
    if (!cfg.per_window_csv.empty()) j["per_window_csv"] = cfg.per_window_csv;
    emit(j);
    return 0;
}

int run_smooth(RunConfig& cfg) {
    const melody::PredictionGrid grid = melody::read_grid_auto(cfg.grid_path);
    const std::vector<double> centers = pitch_centers(grid, cfg);

    const melody::PitchTrack original = melody::decode_grid(grid, cfg.threshold, centers);
    const melody::PitchTrack fallback = melody::decode_grid_all_voiced(grid, centers);
    const std::vector<int> voicing =
        melody::binarize_voicing(grid.voicing_column(), cfg.threshold);
    const std::vector<int> filtered = melody::median_filter_voicing(voicing, cfg.median_size);
    const melody::PitchTrack merged = melody::merge_median(original, filtered, fallback);
    melody::write_track(cfg.out_path, merged);

    const auto voiced = [](const melody::PitchTrack& t) {
        return std::count_if(t.freqs.begin(), t.freqs.end(), [](double f) { return f > 0.0; });
    };
    emit(json{
        {"output", cfg.out_path},
        {"frames", merged.size()},
        {"median_size", cfg.median_size},
        {"threshold", cfg.threshold},
        {"voiced_before", voiced(original)},
        {"voiced_after", voiced(merged)},
    });
    return 0;
}

json report_json(const melody::EvalReport& rep) {
    return json{
        {"vr", rep.vr},
        {"vfa", rep.vfa},
        {"rpa", rep.rpa},
        {"rca", rep.rca},
        {"oa", rep.oa},
        {"no_voiced_reference", rep.no_voiced_reference},
        {"counts",
         {{"total_frames", rep.counts.total_frames},
          {"ref_voiced", rep.counts.ref_voiced},
          {"ref_unvoiced", rep.counts.ref_unvoiced},
          {"voiced_hits", rep.counts.voiced_hits},
          {"false_alarms", rep.counts.false_alarms},
          {"pitch_correct", rep.counts.pitch_correct},
          {"chroma_correct", rep.counts.chroma_correct},
          {"overall_correct", rep.counts.overall_correct}}},
    };
}

melody::EvalReport evaluate_pair(const std::string& ref_path, const std::string& est_path) {
    const melody::PitchTrack ref = melody::read_track(ref_path);
    const melody::PitchTrack est = melody::read_track(est_path);
    if (ref.times.empty()) throw std::runtime_error(ref_path + ": reference track is empty");
    return melody::evaluate(ref, melody::resample_track(est, ref.times));
}

int run_evaluate(RunConfig& cfg) {
    const bool ref_dir = fs::is_directory(cfg.ref_path);
    const bool est_dir = fs::is_directory(cfg.est_path);
    if (ref_dir != est_dir)
        throw std::runtime_error("--ref and --est must both be files or both be directories");

    if (!ref_dir) {
        const melody::EvalReport rep = evaluate_pair(cfg.ref_path, cfg.est_path);
        if (cfg.json_output) {
            emit(report_json(rep));
        } else {
            std::printf("VR   %.4f\nVFA  %.4f\nRPA  %.4f\nRCA  %.4f\nOA   %.4f\n", rep.vr,
                        rep.vfa, rep.rpa, rep.rca, rep.oa);
            if (rep.no_voiced_reference)
                std::printf("note: reference has no voiced frames; VR/RPA/RCA reported as 0\n");
        }
        return 0;
    }

    // batch: pair files across the two directories by filename
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(cfg.ref_path)) {
        if (entry.is_regular_file()) names.push_back(entry.path().filename().string());
    }
    std::sort(names.begin(), names.end());
    if (names.empty()) throw std::runtime_error(cfg.ref_path + ": no reference files");

    std::vector<std::pair<std::string, melody::EvalReport>> rows;
    for (const std::string& name : names) {
        const fs::path est_file = fs::path(cfg.est_path) / name;
        if (!fs::exists(est_file))
            throw std::runtime_error(est_file.string() + ": missing estimate for " + name);
        rows.emplace_back(name,
                          evaluate_pair((fs::path(cfg.ref_path) / name).string(),
                                        est_file.string()));
    }

    melody::EvalReport mean;
    for (const auto& [name, rep] : rows) {
        mean.vr += rep.vr;
        mean.vfa += rep.vfa;
        mean.rpa += rep.rpa;
        mean.rca += rep.rca;
        mean.oa += rep.oa;
    }
    const double n = static_cast<double>(rows.size());
    mean.vr /= n;
    mean.vfa /= n;
    mean.rpa /= n;
    mean.rca /= n;
    mean.oa /= n;

    if (cfg.json_output) {
        json tracks = json::array();
        for (const auto& [name, rep] : rows) {
            json j = report_json(rep);
            j["name"] = name;
            tracks.push_back(std::move(j));
        }
        emit(json{{"tracks", tracks},
                  {"mean",
                   {{"vr", mean.vr},
                    {"vfa", mean.vfa},
                    {"rpa", mean.rpa},
                    {"rca", mean.rca},
                    {"oa", mean.oa}}}});
        return 0;
    }

    std::ostream* outp = &std::cout;
    std::ofstream file;
    if (!cfg.out_path.empty()) {
        file.open(cfg.out_path);
        if (!file) throw std::runtime_error(cfg.out_path + ": cannot open for writing");
        outp = &file;
    }
    *outp << "name,vr,vfa,rpa,rca,oa\n";
    auto row = [&](const std::string& name, const melody::EvalReport& rep) {
        *outp << name << ',' << melody::format_g17(rep.vr) << ',' << melody::format_g17(rep.vfa)
              << ',' << melody::format_g17(rep.rpa) << ',' << melody::format_g17(rep.rca) << ','
              << melody::format_g17(rep.oa) << '\n';
    };
    for (const auto& [name, rep] : rows) row(name, rep);
    row("mean", mean);
    if (!outp->good()) throw std::runtime_error("write error");
    return 0;
}

// A label without bursts (long runs only) and a start sequence with short
// runs planted inside both states.
struct DemoInstance {
    melody::VoicingSeq a0;
    melody::VoicingSeq label;
};

DemoInstance make_demo_instance(int length, int m_v, int m_nv, unsigned seed) {
    if (length < 24) throw std::runtime_error("demo-smooth: --length must be >= 24");
    std::mt19937 rng(seed);
    const int vocal_len = std::max({m_v - 1, length / 2, 8});
    const int lead = std::max(4, (length - vocal_len) / 2);
    const int tail = length - vocal_len - lead;
    if (tail < 4) throw std::runtime_error("demo-smooth: --length too small for --mv");

    std::vector<int> label_bits(static_cast<size_t>(length), 0);
    for (int i = lead; i < lead + vocal_len; ++i) label_bits[i] = 1;

    std::vector<int> start_bits = label_bits;
    auto plant = [&](int lo, int hi, int max_len, int value) {
        // flip a short run inside [lo, hi), leaving a 1-frame guard on each side
        if (hi - lo < 3) return;
        std::uniform_int_distribution<int> len_dist(1, std::min(max_len, hi - lo - 2));
        const int len = len_dist(rng);
        std::uniform_int_distribution<int> pos_dist(lo + 1, hi - 1 - len);
        const int pos = pos_dist(rng);
        for (int i = pos; i < pos + len; ++i) start_bits[i] = value;
    };
    // vocal bursts inside the leading/trailing non-vocal stretches
    plant(0 + 1, lead / 2, std::min(m_v - 2, 2), 1);
    plant(lead / 2, lead, std::min(m_v - 2, 2), 1);
    plant(lead + vocal_len + 1, lead + vocal_len + tail / 2, std::min(m_v - 2, 2), 1);
    plant(lead + vocal_len + tail / 2, length - 1, std::min(m_v - 2, 2), 1);
    // one non-vocal burst inside the vocal stretch
    plant(lead + vocal_len / 3, lead + 2 * vocal_len / 3, std::min(m_nv - 2, 3), 0);

    DemoInstance inst;
    inst.a0.resize(static_cast<size_t>(length));
    inst.label.resize(static_cast<size_t>(length));
    for (int i = 0; i < length; ++i) {
        inst.a0[i] = start_bits[i] ? 0.9 : 0.1;
        inst.label[i] = static_cast<double>(label_bits[i]);
    }
    return inst;
}

int run_demo_smooth(RunConfig& cfg) {
    melody::VoicingSeq a0, label;
    if (!cfg.a0_path.empty() || !cfg.label_seq_path.empty()) {
        if (cfg.a0_path.empty() || cfg.label_seq_path.empty())
            throw std::runtime_error("demo-smooth: pass both --a0 and --label or neither");
        a0 = read_sequence(cfg.a0_path);
        label = read_sequence(cfg.label_seq_path);
    } else {
        DemoInstance inst =
            make_demo_instance(cfg.demo_length, cfg.loss.m_v, cfg.loss.m_nv, cfg.seed);
        a0 = std::move(inst.a0);
        label = std::move(inst.label);
    }

    const melody::SmoothResult result =
        melody::demo_smooth(a0, label, cfg.loss, cfg.steps, cfg.lr);
    const melody::VoicingSeq& final_a = result.iterates.back();

    const auto bursts = [&](const melody::VoicingSeq& a) {
        return melody::burst_profile(melody::binarize_voicing(a, cfg.threshold), cfg.loss.m_v,
                                     cfg.loss.m_nv)
            .total();
    };

    if (!cfg.curve_csv.empty()) {
        std::ofstream out(cfg.curve_csv);
        if (!out) throw std::runtime_error(cfg.curve_csv + ": cannot open for writing");
        out << "step,loss\n";
        for (size_t i = 0; i < result.losses.size(); ++i)
            out << i << ',' << melody::format_g17(result.losses[i]) << '\n';
        if (!out.good()) throw std::runtime_error(cfg.curve_csv + ": write error");
    }
    if (!cfg.seq_csv.empty()) {
        std::ofstream out(cfg.seq_csv);
        if (!out) throw std::runtime_error(cfg.seq_csv + ": cannot open for writing");
        out << "frame,initial,final,label\n";
        for (size_t i = 0; i < a0.size(); ++i) {
            out << i << ',' << melody::format_g17(result.iterates.front()[i]) << ','
                << melody::format_g17(final_a[i]) << ',' << melody::format_g17(label[i]) << '\n';
        }
        if (!out.good()) throw std::runtime_error(cfg.seq_csv + ": write error");
    }

    json j = {
        {"frames", a0.size()},
        {"steps", cfg.steps},
        {"lr", cfg.lr},
        {"initial_loss", result.losses.front()},
        {"final_loss", result.losses.back()},
        {"bursts_before", bursts(result.iterates.front())},
        {"bursts_after", bursts(final_a)},
    };
    if (!cfg.curve_csv.empty()) j["curve_csv"] = cfg.curve_csv;
    if (!cfg.seq_csv.empty()) j["sequences_csv"] = cfg.seq_csv;
    emit(j);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"z-CFP melody features, burst-penalizing stability loss, and melody metrics"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read options from an INI-style key=value file");
    app.set_version_flag("--version", "melody-kit 0.1.0");

    RunConfig cfg;

    CLI::App* extract = app.add_subcommand("extract", "compute z-CFP tensors from WAV files");
    extract->add_option("inputs", cfg.inputs, "input WAV files")
        ->required()
        ->check(CLI::ExistingFile);
    extract->add_option("-o,--out-dir", cfg.out_dir, "output directory")->capture_default_str();
    extract->add_option("--sample-rate", cfg.sample_rate, "working sample rate, Hz")
        ->capture_default_str();
    extract->add_option("--window", cfg.window, "STFT window size, samples")
        ->capture_default_str();
    extract->add_option("--hop", cfg.hop, "hop size, samples")->capture_default_str();
    extract->add_option("--chunk", cfg.chunk, "frames per excerpt; output is zero-padded to a multiple")
        ->capture_default_str();
    add_cfp_options(extract, cfg);
    add_bin_options(extract, cfg);
    extract->add_flag("--csv", cfg.emit_csv, "also write a debug CSV per input");

    CLI::App* loss = app.add_subcommand("loss", "stability-loss breakdown of a prediction grid");
    loss->add_option("--grid", cfg.grid_path, "prediction grid (.zcfp or CSV)")
        ->required()
        ->check(CLI::ExistingFile);
    loss->add_option("--label", cfg.label_path, "label grid (.zcfp or CSV, binary values)")
        ->required()
        ->check(CLI::ExistingFile);
    add_loss_options(loss, cfg);
    loss->add_option("--per-window-csv", cfg.per_window_csv,
                     "write per-window loss values (kind,m,start,value)");

    CLI::App* smooth = app.add_subcommand("smooth", "median-filter merge of a prediction grid");
    smooth->add_option("--grid", cfg.grid_path, "prediction grid (.zcfp or CSV)")
        ->required()
        ->check(CLI::ExistingFile);
    smooth->add_option("-o,--out", cfg.out_path, "output pitch-track file")->required();
    smooth->add_option("--median-size", cfg.median_size, "median filter length, odd frames")
        ->capture_default_str();
    smooth->add_option("--threshold", cfg.threshold, "voicing threshold")->capture_default_str();
    add_bin_options(smooth, cfg);

    CLI::App* evaluate = app.add_subcommand("evaluate", "melody metrics for track pairs");
    evaluate->add_option("--ref", cfg.ref_path, "reference track file or directory")
        ->required()
        ->check(CLI::ExistingPath);
    evaluate->add_option("--est", cfg.est_path, "estimate track file or directory")
        ->required()
        ->check(CLI::ExistingPath);
    evaluate->add_flag("--json", cfg.json_output, "emit JSON instead of text/CSV");
    evaluate->add_option("-o,--out", cfg.out_path, "batch CSV output path (default stdout)");

    CLI::App* demo = app.add_subcommand(
        "demo-smooth", "gradient-descent demo: the loss removes planted bursts");
    demo->add_option("--steps", cfg.steps, "gradient steps")->capture_default_str();
    demo->add_option("--lr", cfg.lr, "learning rate")->capture_default_str();
    demo->add_option("--length", cfg.demo_length, "synthetic sequence length, frames")
        ->capture_default_str();
    demo->add_option("--seed", cfg.seed, "synthetic instance seed")->capture_default_str();
    demo->add_option("--a0", cfg.a0_path, "initial activations, one value per line")
        ->check(CLI::ExistingFile);
    demo->add_option("--label", cfg.label_seq_path, "binary labels, one value per line")
        ->check(CLI::ExistingFile);
    demo->add_option("--threshold", cfg.threshold, "burst-count binarization threshold")
        ->capture_default_str();
    demo->add_option("--curve-csv", cfg.curve_csv, "write the loss curve (step,loss)");
    demo->add_option("--seq-csv", cfg.seq_csv, "write frame,initial,final,label sequences");
    add_loss_options(demo, cfg);

    try {
        app.parse(argc, argv);
        if (extract->parsed()) return run_extract(cfg);
        if (loss->parsed()) return run_loss(cfg);
        if (smooth->parsed()) return run_smooth(cfg);
        if (evaluate->parsed()) return run_evaluate(cfg);
        if (demo->parsed()) return run_demo_smooth(cfg);
        return 1;
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1; // usage errors collapse to 1; --help/--version stay 0
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
