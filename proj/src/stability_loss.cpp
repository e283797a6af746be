#include "melody/stability_loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace melody {

namespace {

void check(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

void check_probs(std::span<const double> a, const char* who) {
    for (size_t i = 0; i < a.size(); ++i) {
        check(a[i] >= 0.0 && a[i] <= 1.0, std::string(who) + ": value " + std::to_string(a[i]) +
                                              " at index " + std::to_string(i) +
                                              " is outside [0, 1]");
    }
}

void check_binary(std::span<const double> y, const char* who) {
    for (size_t i = 0; i < y.size(); ++i) {
        check(y[i] == 0.0 || y[i] == 1.0, std::string(who) + ": label " + std::to_string(y[i]) +
                                              " at index " + std::to_string(i) +
                                              " is not exactly 0 or 1");
    }
}

VoicingSeq flipped(std::span<const double> a) {
    VoicingSeq b(a.size());
    for (size_t i = 0; i < a.size(); ++i) b[i] = 1.0 - a[i];
    return b;
}

// x^r with a multiply ladder when r is a small integer (the default r = 5).
// The s-curve sits in every window of every gradient step, so the general
// std::pow would dominate the whole loss computation.
double pow_r(double x, double r) {
    const int n = static_cast<int>(r);
    if (static_cast<double>(n) == r && n >= 0 && n <= 32) {
        double acc = 1.0;
        for (int e = n; e > 0; e >>= 1, x *= x)
            if (e & 1) acc *= x;
        return acc;
    }
    return std::pow(x, r);
}

// Shared core of the two aggregates: windows of length m in [3, m_max] at
// every start, sequential summation for reproducibility.
AggregateResult aggregate_windows(std::span<const double> a, int m_max, double r) {
    AggregateResult res;
    const int t = static_cast<int>(a.size());
    double sum = 0.0;
    for (int m = 3; m <= std::min(m_max, t); ++m) {
        std::vector<double>& vals = res.per_window[m];
        vals.reserve(static_cast<size_t>(t - m + 1));
        for (int s = 0; s + m <= t; ++s) {
            // window_loss_v inlined; the sequence is validated once by the
            // callers, so per-window re-validation would only burn time.
            double prod = 1.0;
            for (int j = s + 1; j < s + m - 1; ++j) prod *= 1.0 - a[j];
            const double raw = (1.0 - a[s]) * (1.0 - a[s + m - 1]) * (1.0 - prod);
            const double v = s_curve(raw, r);
            vals.push_back(v);
            sum += v;
            ++res.window_count;
        }
    }
    if (res.window_count > 0) res.value = sum / res.window_count;
    return res;
}

// Accumulates scale * d(aggregate of window_loss_v over b)/d(b_j) into
// out[j * out_stride]. The 1/window_count mean factor is applied here;
// scale carries only the caller's chain-rule coefficient (and sign).
void accumulate_aggregate_grad(std::span<const double> b, int m_max, double r, double scale,
                               std::span<double> out, size_t out_stride) {
    const int t = static_cast<int>(b.size());
    long long count = 0;
    for (int m = 3; m <= std::min(m_max, t); ++m) count += t - m + 1;
    if (count == 0) return;
    const double coeff = scale / static_cast<double>(count);

    std::vector<double> pre, suf;
    for (int m = 3; m <= std::min(m_max, t); ++m) {
        const int n_int = m - 2;
        pre.assign(static_cast<size_t>(n_int) + 1, 1.0);
        suf.assign(static_cast<size_t>(n_int) + 1, 1.0);
        for (int s = 0; s + m <= t; ++s) {
            const std::span<const double> w = b.subspan(s, m);
            // prefix/suffix products of (1 - interior) avoid division
            for (int j = 0; j < n_int; ++j) pre[j + 1] = pre[j] * (1.0 - w[j + 1]);
            for (int j = n_int - 1; j >= 0; --j) suf[j] = suf[j + 1] * (1.0 - w[j + 1]);
            const double prod = pre[n_int];
            const double p1 = 1.0 - w[0];
            const double pm = 1.0 - w[m - 1];
            const double loss = p1 * pm * (1.0 - prod);
            const double sg = coeff * s_curve_grad(loss, r);
            if (sg == 0.0) continue;
            out[static_cast<size_t>(s) * out_stride] += sg * (-pm * (1.0 - prod));
            out[static_cast<size_t>(s + m - 1) * out_stride] += sg * (-p1 * (1.0 - prod));
            for (int j = 0; j < n_int; ++j)
                out[static_cast<size_t>(s + 1 + j) * out_stride] += sg * p1 * pm * pre[j] * suf[j + 1];
        }
    }
}

double clamp_prob(double p, double eps) { return std::clamp(p, eps, 1.0 - eps); }

void check_same_shape(const PredictionGrid& pred, const PredictionGrid& label) {
    pred.validate_shape();
    label.validate_shape();
    check(pred.frames == label.frames && pred.cols == label.cols,
          "prediction/label shape mismatch: " + std::to_string(pred.frames) + "x" +
              std::to_string(pred.cols) + " vs " + std::to_string(label.frames) + "x" +
              std::to_string(label.cols));
}

} // namespace

void LossParams::validate() const {
    check(m_v >= 3, "LossParams: M_v must be >= 3, got " + std::to_string(m_v));
    check(m_nv >= 3, "LossParams: M_nv must be >= 3, got " + std::to_string(m_nv));
    check(r > 1.0, "LossParams: r must be > 1, got " + std::to_string(r));
    check(weight_bce >= 0.0 && weight_v >= 0.0 && weight_nv >= 0.0,
          "LossParams: weights must be >= 0");
    check(eps > 0.0 && eps < 0.5, "LossParams: eps must lie in (0, 0.5)");
}

VoicingSeq PredictionGrid::voicing_column() const {
    VoicingSeq a(static_cast<size_t>(frames));
    for (int t = 0; t < frames; ++t) a[t] = at(t, 0);
    return a;
}

void PredictionGrid::validate_shape() const {
    check(frames >= 1 && cols >= 1, "PredictionGrid: frames and cols must be >= 1");
    check(values.size() == static_cast<size_t>(frames) * cols,
          "PredictionGrid: values size " + std::to_string(values.size()) + " != frames*cols " +
              std::to_string(static_cast<size_t>(frames) * cols));
}

double window_loss_v(std::span<const double> a) {
    const size_t m = a.size();
    check(m >= 3, "window_loss_v: window length must be >= 3, got " + std::to_string(m));
    check_probs(a, "window_loss_v");
    double prod = 1.0;
    for (size_t i = 1; i + 1 < m; ++i) prod *= 1.0 - a[i];
    return (1.0 - a.front()) * (1.0 - a.back()) * (1.0 - prod);
}

double window_loss_nv(std::span<const double> a) {
    const size_t m = a.size();
    check(m >= 3, "window_loss_nv: window length must be >= 3, got " + std::to_string(m));
    check_probs(a, "window_loss_nv");
    return window_loss_v(flipped(a));
}

double s_curve(double x, double r) {
    check(r > 1.0, "s_curve: r must be > 1, got " + std::to_string(r));
    check(x >= 0.0 && x <= 1.0, "s_curve: x must lie in [0, 1], got " + std::to_string(x));
    const double num = pow_r(x, r);
    return num / (num + pow_r(1.0 - x, r));
}

double s_curve_grad(double x, double r) {
    check(r > 1.0, "s_curve_grad: r must be > 1, got " + std::to_string(r));
    check(x >= 0.0 && x <= 1.0, "s_curve_grad: x must lie in [0, 1], got " + std::to_string(x));
    const double d = pow_r(x, r) + pow_r(1.0 - x, r);
    return r * pow_r(x, r - 1.0) * pow_r(1.0 - x, r - 1.0) / (d * d);
}

AggregateResult aggregate_loss_v(const VoicingSeq& a, const LossParams& p) {
    p.validate();
    check_probs(a, "aggregate_loss_v");
    return aggregate_windows(a, p.m_v, p.r);
}

AggregateResult aggregate_loss_nv(const VoicingSeq& a, const LossParams& p) {
    p.validate();
    check_probs(a, "aggregate_loss_nv");
    return aggregate_windows(flipped(a), p.m_nv, p.r);
}

double bce(const PredictionGrid& pred, const PredictionGrid& label, double eps) {
    check(eps > 0.0 && eps < 0.5, "bce: eps must lie in (0, 0.5)");
    check_same_shape(pred, label);
    check_binary(label.values, "bce");
    double sum = 0.0;
    for (size_t i = 0; i < pred.values.size(); ++i) {
        const double p = clamp_prob(pred.values[i], eps);
        const double y = label.values[i];
        sum -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    }
    return sum / static_cast<double>(pred.values.size());
}

LossBreakdown total_loss(const PredictionGrid& pred, const PredictionGrid& label,
                         const LossParams& p) {
    p.validate();
    LossBreakdown out;
    out.bce = p.weight_bce * bce(pred, label, p.eps);
    const VoicingSeq a = pred.voicing_column();
    check_probs(a, "total_loss voicing column");
    AggregateResult v = aggregate_windows(a, p.m_v, p.r);
    AggregateResult nv = aggregate_windows(flipped(a), p.m_nv, p.r);
    out.l_v = p.weight_v * v.value;
    out.l_nv = p.weight_nv * nv.value;
    out.total = out.bce + out.l_v + out.l_nv;
    out.per_window_v = std::move(v.per_window);
    out.per_window_nv = std::move(nv.per_window);
    return out;
}

std::vector<double> grad_total_loss(const PredictionGrid& pred, const PredictionGrid& label,
                                    const LossParams& p) {
    p.validate();
    check_same_shape(pred, label);
    check_binary(label.values, "grad_total_loss");

    std::vector<double> g(pred.values.size(), 0.0);
    const double bce_scale = p.weight_bce / static_cast<double>(pred.values.size());
    for (size_t i = 0; i < pred.values.size(); ++i) {
        const double q = clamp_prob(pred.values[i], p.eps);
        const double y = label.values[i];
        g[i] = bce_scale * (-y / q + (1.0 - y) / (1.0 - q));
    }

    const VoicingSeq a = pred.voicing_column();
    check_probs(a, "grad_total_loss voicing column");
    const std::span<double> col0(g.data(), g.size()); // stride pred.cols walks column 0
    accumulate_aggregate_grad(a, p.m_v, p.r, p.weight_v, col0, pred.cols);
    // l_nv sees b = 1 - a, so its chain rule flips the sign.
    accumulate_aggregate_grad(flipped(a), p.m_nv, p.r, -p.weight_nv, col0, pred.cols);
    return g;
}

SmoothResult demo_smooth(const VoicingSeq& a0, const VoicingSeq& label, const LossParams& p,
                         int steps, double lr) {
    p.validate();
    check(!a0.empty(), "demo_smooth: a0 must be non-empty");
    check(a0.size() == label.size(), "demo_smooth: a0 and label lengths differ");
    check(steps >= 0, "demo_smooth: steps must be >= 0");
    check(lr > 0.0, "demo_smooth: lr must be positive");
    check_probs(a0, "demo_smooth a0");
    check_binary(label, "demo_smooth");

    const size_t t = a0.size();
    std::vector<double> u(t);
    for (size_t i = 0; i < t; ++i) {
        const double ai = std::clamp(a0[i], 1e-6, 1.0 - 1e-6);
        u[i] = std::log(ai / (1.0 - ai));
    }

    auto squash = [&] {
        VoicingSeq a(t);
        for (size_t i = 0; i < t; ++i) a[i] = 1.0 / (1.0 + std::exp(-u[i]));
        return a;
    };
    auto objective = [&](const VoicingSeq& a) {
        double s = 0.0;
        for (size_t i = 0; i < t; ++i) {
            const double q = clamp_prob(a[i], p.eps);
            s -= label[i] * std::log(q) + (1.0 - label[i]) * std::log(1.0 - q);
        }
        return p.weight_bce * s / static_cast<double>(t) +
               p.weight_v * aggregate_windows(a, p.m_v, p.r).value +
               p.weight_nv * aggregate_windows(flipped(a), p.m_nv, p.r).value;
    };

    SmoothResult out;
    VoicingSeq a = squash();
    out.iterates.push_back(a);
    out.losses.push_back(objective(a));

    std::vector<double> g(t);
    const double bce_scale = p.weight_bce / static_cast<double>(t);
    for (int step = 0; step < steps; ++step) {
        for (size_t i = 0; i < t; ++i) {
            const double q = clamp_prob(a[i], p.eps);
            g[i] = bce_scale * (-label[i] / q + (1.0 - label[i]) / (1.0 - q));
        }
        accumulate_aggregate_grad(a, p.m_v, p.r, p.weight_v, g, 1);
        accumulate_aggregate_grad(flipped(a), p.m_nv, p.r, -p.weight_nv, g, 1);
        for (size_t i = 0; i < t; ++i) u[i] -= lr * g[i] * a[i] * (1.0 - a[i]);
        a = squash();
        out.iterates.push_back(a);
        out.losses.push_back(objective(a));
    }
    return out;
}

} // namespace melody
