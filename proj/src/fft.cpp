#include "melody/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <stdexcept>

namespace melody {

namespace {
// The FFTW planner is the one piece of global state; executes are per-plan.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
} // namespace

RealFft::RealFft(int n) : n_(n) {
    if (n < 2) {
        throw std::invalid_argument("RealFft size must be >= 2, got " + std::to_string(n));
    }
    in_ = fftw_alloc_real(static_cast<size_t>(n));
    out_ = fftw_alloc_complex(static_cast<size_t>(n / 2 + 1));
    if (!in_ || !out_) {
        throw std::runtime_error("fftw allocation failed");
    }
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(n, in_, static_cast<fftw_complex*>(out_), FFTW_ESTIMATE);
    if (!plan_) {
        throw std::runtime_error("fftw plan creation failed for size " + std::to_string(n));
    }
}

RealFft::~RealFft() {
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(static_cast<fftw_plan>(plan_));
    }
    fftw_free(in_);
    fftw_free(static_cast<fftw_complex*>(out_));
}

std::vector<std::complex<double>> RealFft::forward(const std::vector<double>& in) const {
    if (static_cast<int>(in.size()) != n_) {
        throw std::invalid_argument("RealFft::forward: expected " + std::to_string(n_) +
                                    " samples, got " + std::to_string(in.size()));
    }
    for (int i = 0; i < n_; ++i) in_[i] = in[i];
    fftw_execute(static_cast<fftw_plan>(plan_));
    const fftw_complex* out = static_cast<const fftw_complex*>(out_);
    std::vector<std::complex<double>> result(bins());
    for (int i = 0; i < bins(); ++i) {
        result[i] = {out[i][0], out[i][1]};
    }
    return result;
}

std::vector<double> RealFft::forward_magnitude(const std::vector<double>& in) const {
    if (static_cast<int>(in.size()) != n_) {
        throw std::invalid_argument("RealFft::forward_magnitude: expected " + std::to_string(n_) +
                                    " samples, got " + std::to_string(in.size()));
    }
    for (int i = 0; i < n_; ++i) in_[i] = in[i];
    fftw_execute(static_cast<fftw_plan>(plan_));
    const fftw_complex* out = static_cast<const fftw_complex*>(out_);
    std::vector<double> result(bins());
    for (int i = 0; i < bins(); ++i) {
        result[i] = std::hypot(out[i][0], out[i][1]);
    }
    return result;
}

} // namespace melody
