#pragma once

// Independent reference computations. None of these call into the library's
// numerical kernels; they restate the underlying formulas directly.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <vector>

namespace mereye::oracle {

/// Causal convolution with the input held at x[0] before the first sample.
inline std::vector<double> convolve(const std::vector<double>& x, const std::vector<double>& h) {
    std::vector<double> y(x.size(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t k = 0; k < h.size(); ++k) {
            y[i] += h[k] * (k <= i ? x[i - k] : x[0]);
        }
    }
    return y;
}

/// Ideal (step-edge) stimulus for bits stored oldest first: b_m holds on
/// [-mT, -(m-1)T), the state before the oldest bit is the oldest bit, and the
/// last bit holds forever. Samples at t = (first + j) * T / samples_per_ui.
inline std::vector<double> step_stimulus(const std::vector<std::uint8_t>& bits_oldest_first, long first,
                                         std::size_t n, long samples_per_ui, double v_low, double v_high) {
    const long oldest = static_cast<long>(bits_oldest_first.size()) - 2;
    std::vector<double> x(n);
    for (std::size_t j = 0; j < n; ++j) {
        const long s = first + static_cast<long>(j);
        // m = ceil(-s / N)
        const long neg = -s;
        long m = neg >= 0 ? (neg + samples_per_ui - 1) / samples_per_ui : -((-neg) / samples_per_ui);
        m = std::clamp(m, -1L, oldest);
        x[j] = bits_oldest_first[static_cast<std::size_t>(oldest - m)] ? v_high : v_low;
    }
    return x;
}

/// Method-of-characteristics lossy line: the line is split into `segments`
/// cells per one-way delay, each cell attenuating by alpha^(1/segments). An
/// ideal voltage source drives the near end; the far end is a resistor. The
/// line starts settled at drive(t_first).
inline std::vector<double> characteristics_line(const std::function<double(double)>& drive, double t_first,
                                                double dt, std::size_t n, long segments, double z0, double load,
                                                double alpha) {
    const double gamma = (load - z0) / (load + z0);
    const double cell_loss = std::pow(alpha, 1.0 / static_cast<double>(segments));
    const auto cells = static_cast<std::size_t>(segments);
    std::vector<double> fwd(cells + 1, 0.0);
    std::vector<double> bwd(cells + 1, 0.0);

    // Settled state: v_load = a (1+g) F where F solves F = V - a^2 g F.
    const double v0 = drive(t_first);
    const double f_src = v0 / (1.0 + alpha * alpha * gamma);
    for (std::size_t c = 0; c <= cells; ++c) {
        fwd[c] = f_src * std::pow(cell_loss, static_cast<double>(c));
        bwd[c] = gamma * f_src * alpha * std::pow(cell_loss, static_cast<double>(cells - c));
    }
    std::vector<double> out(n);
    const double dt_cell = dt;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = t_first + static_cast<double>(i) * dt_cell;
        if (i > 0) {
            for (std::size_t c = cells; c >= 1; --c) fwd[c] = fwd[c - 1] * cell_loss;
            for (std::size_t c = 0; c < cells; ++c) bwd[c] = bwd[c + 1] * cell_loss;
            bwd[cells] = gamma * fwd[cells];
            fwd[0] = drive(t) - bwd[0];
        }
        out[i] = fwd[cells] + bwd[cells];
    }
    return out;
}

/// Single-sided DFT amplitudes, normalized so a unit sinusoid at bin k reads 1.
inline std::vector<double> dft_amplitudes(const std::vector<double>& x, const std::vector<double>& w = {}) {
    const std::size_t n = x.size();
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) norm += w.empty() ? 1.0 : w[i];
    std::vector<double> amp(n / 2 + 1);
    for (std::size_t k = 0; k <= n / 2; ++k) {
        std::complex<double> acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double ang = -2.0 * std::numbers::pi * static_cast<double>(k * i % n) / static_cast<double>(n);
            acc += (w.empty() ? 1.0 : w[i]) * x[i] * std::polar(1.0, ang);
        }
        const bool unpaired = k == 0 || (n % 2 == 0 && k == n / 2);
        amp[k] = (unpaired ? 1.0 : 2.0) * std::abs(acc) / norm;
    }
    return amp;
}

/// Symmetric Hann taper reaching zero at both ends.
inline std::vector<double> hann(std::size_t n) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1));
    }
    return w;
}

/// Highest-frequency bin whose amplitude reaches `threshold`, as a frequency.
inline double cutoff(const std::vector<double>& curve, double spacing, double threshold, bool taper) {
    std::vector<double> x = curve;
    std::vector<double> w;
    if (taper) {
        double mean = 0.0;
        for (double v : x) mean += v;
        mean /= static_cast<double>(x.size());
        for (double& v : x) v -= mean;
        w = hann(x.size());
    }
    const auto amp = dft_amplitudes(x, w);
    std::size_t best = 0;
    for (std::size_t k = 1; k < amp.size(); ++k) {
        if (amp[k] >= threshold) best = k;
    }
    return static_cast<double>(best) / (static_cast<double>(x.size()) * spacing);
}

/// Edge instant of the bit-instant PJ model: -mT + A sin(2 pi (-mT + T0) / T_PJ).
inline double pj_edge_time(int m, double period, double a_pj, double t_pj, double t0) {
    const double nominal = -static_cast<double>(m) * period;
    return nominal + a_pj * std::sin(2.0 * std::numbers::pi * (nominal + t0) / t_pj);
}

/// Times where a sampled waveform crosses `level`, by linear interpolation.
inline std::vector<double> crossings(const std::vector<double>& v, double t0, double dt, double level) {
    std::vector<double> t;
    for (std::size_t i = 1; i < v.size(); ++i) {
        const double a = v[i - 1] - level;
        const double b = v[i] - level;
        if ((a < 0.0 && b >= 0.0) || (a >= 0.0 && b < 0.0)) {
            t.push_back(t0 + dt * (static_cast<double>(i - 1) + a / (a - b)));
        }
    }
    return t;
}

}  // namespace mereye::oracle
