#pragma once

#include <map>
#include <span>
#include <vector>

namespace melody {

// Voicing probability per frame; every value must lie in [0, 1].
using VoicingSeq = std::vector<double>;

struct LossParams {
    int m_v = 30;   // max penalized vocal-burst window length, frames (0.3 s at 0.01 s frames)
    int m_nv = 7;   // max penalized non-vocal-burst window length, frames
    double r = 5.0; // S-curve exponent, > 1

    // The total objective is the unweighted sum bce + l_v + l_nv; these knobs
    // exist for experiments and default to 1.
    double weight_bce = 1.0;
    double weight_v = 1.0;
    double weight_nv = 1.0;

    double eps = 1e-7; // BCE probability clamp

    void validate() const; // throws std::invalid_argument
};

// T x (1 + pitch bins) activation grid; column 0 is the voicing bin.
struct PredictionGrid {
    int frames = 0;
    int cols = 0;
    double frame_period = 0.0;     // seconds between rows
    std::vector<double> values;    // frames * cols, row-major
    std::vector<double> col_freqs; // optional, cols entries; col 0 carries 0 Hz

    double at(int t, int c) const { return values[static_cast<size_t>(t) * cols + c]; }
    double& at(int t, int c) { return values[static_cast<size_t>(t) * cols + c]; }

    VoicingSeq voicing_column() const;
    void validate_shape() const; // throws if values.size() != frames * cols or frames/cols < 1
};

struct LossBreakdown {
    double total = 0.0;
    double bce = 0.0;
    double l_v = 0.0;
    double l_nv = 0.0;
    // Post-S-curve per-window values keyed by window length m, start order.
    std::map<int, std::vector<double>> per_window_v;
    std::map<int, std::vector<double>> per_window_nv;
};

// Closed-form vocal-burst penalty of one window:
//   (1 - a_1)(1 - a_m)(1 - prod_{i=2}^{m-1} (1 - a_i))
// Requires m >= 3 and values in [0, 1]. Equals the sum over all interior
// bit-vectors (except all-zero) of the elementary burst polynomials.
double window_loss_v(std::span<const double> a);

// Non-vocal counterpart: window_loss_v of the flipped sequence 1 - a.
double window_loss_nv(std::span<const double> a);

// x^r / (x^r + (1-x)^r) for x in [0, 1], r > 1. Fixed points 0, 1/2, 1.
double s_curve(double x, double r);

// d s_curve / dx = r x^(r-1) (1-x)^(r-1) / (x^r + (1-x)^r)^2.
double s_curve_grad(double x, double r);

struct AggregateResult {
    double value = 0.0;
    int window_count = 0;
    std::map<int, std::vector<double>> per_window; // m -> post-S-curve values
};

// Mean of s_curve(window_loss) over every window of every length m in
// [3, m_max], stride 1. No windows (T < 3) gives value 0.
AggregateResult aggregate_loss_v(const VoicingSeq& a, const LossParams& p);
AggregateResult aggregate_loss_nv(const VoicingSeq& a, const LossParams& p);

// Mean elementwise binary cross entropy; pred clamped into [eps, 1-eps],
// labels must be exactly 0 or 1. Shapes must match.
double bce(const PredictionGrid& pred, const PredictionGrid& label, double eps = 1e-7);

// bce over the grid + aggregate losses over the voicing column (Eq.-style
// unweighted sum when the weights are left at 1).
LossBreakdown total_loss(const PredictionGrid& pred, const PredictionGrid& label,
                         const LossParams& p);

// Analytic gradient of total_loss w.r.t. every pred cell, same layout as
// pred.values. Cells outside column 0 receive only the BCE term.
std::vector<double> grad_total_loss(const PredictionGrid& pred, const PredictionGrid& label,
                                    const LossParams& p);

struct SmoothResult {
    std::vector<VoicingSeq> iterates; // steps + 1 entries; iterates[0] is the squashed a0
    std::vector<double> losses;       // loss at each iterate
};

// Toy optimization harness: gradient descent on unconstrained logits u with
// a = sigmoid(u), objective = mean sequence BCE + l_v + l_nv. Labels binary.
SmoothResult demo_smooth(const VoicingSeq& a0, const VoicingSeq& label, const LossParams& p,
                         int steps, double lr);

} // namespace melody
