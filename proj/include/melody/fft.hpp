#pragma once

#include <complex>
#include <vector>

namespace melody {

// Real-input forward DFT of a fixed size, one-sided output (n/2 + 1 bins).
// Wraps FFTW; plan creation is serialized internally, so building separate
// instances from different threads is safe. A single instance is not
// re-entrant.
class RealFft {
public:
    explicit RealFft(int n);
    ~RealFft();

    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    int size() const { return n_; }
    int bins() const { return n_ / 2 + 1; }

    // in: n real samples; returns n/2+1 complex coefficients (unnormalized).
    std::vector<std::complex<double>> forward(const std::vector<double>& in) const;

    // Convenience: magnitudes of forward(in).
    std::vector<double> forward_magnitude(const std::vector<double>& in) const;

private:
    int n_;
    void* plan_;  // fftw_plan
    double* in_;
    void* out_;   // fftw_complex*
};

} // namespace melody
