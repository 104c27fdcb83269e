#pragma once

// Minimum orders of bit effect (m_b) and jitter effect (m_j), and the
// response requirements they imply.

#include "mereye/error.hpp"
#include "mereye/system.hpp"
#include "mereye/waveform.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace mereye {

struct OrderPoint {
    int m = 0;
    double max_distance = 0.0;  ///< volts
    std::size_t n_sequences = 0;
};

struct OrderResult {
    int order = 0;
    std::vector<OrderPoint> distances;
    double threshold = 0.0;  ///< volts
};

/// Raised when the scan hits max_m while still above threshold.
class OrderNotConverged : public Error {
public:
    OrderNotConverged(const std::string& what, OrderResult partial)
        : Error(what), partial_(std::move(partial)) {}
    [[nodiscard]] const OrderResult& partial() const noexcept { return partial_; }

private:
    OrderResult partial_;
};

struct OrderSearch {
    double threshold_frac = 0.01;
    int max_m = 12;
    std::size_t max_seqs_per_m = 256;
    int tx_points = 21;
    std::uint64_t seed = 1;
    int jobs = 1;

    void validate() const;
};

/// Envelope gap of a set of difference waveforms: max over time of
/// (upper - lower), where the bounds include the zero (no-effect) line.
[[nodiscard]] double envelope_distance(std::span<const Waveform> diffs);

/// S(b_m = 0) - S(b_m = 1) for tail bits b_{m-1}..b_0 (oldest first), no jitter.
[[nodiscard]] Waveform be_diff(const ResponseContext& ctx, std::span<const std::uint8_t> tail, int m);

[[nodiscard]] OrderResult be_order(const ResponseContext& ctx, const OrderSearch& search);

/// S(edge m displaced by t_x) - S(undisplaced). Requires b_{m+1} != b_m.
[[nodiscard]] Waveform je_diff(const ResponseContext& ctx, const BitSequence& seq, int m, double t_x);

/// T_x sweeps [-(A_PJ + 5 sigma), +(A_PJ + 5 sigma)] on search.tx_points points.
[[nodiscard]] OrderResult je_order(const ResponseContext& ctx, const JitterSpec& spec,
                                   const OrderSearch& search);

struct ResponseRequirement {
    int m_b = 0;
    int m_j = 0;
    std::vector<int> bit_indexes;     ///< m_b .. -1
    std::vector<int> jitter_indexes;  ///< m_j .. -1
    std::uint64_t sequence_count = 0;  ///< 2^(m_b + 2)
    std::uint64_t pj_grid_mers = 0;    ///< 2^(m_b + 2) * T0 steps
    /// rj_steps^(m_j + 2) per (sequence, T0); saturates at UINT64_MAX.
    std::uint64_t rj_tensor_entries = 0;
    bool rj_tensor_saturated = false;
};

[[nodiscard]] ResponseRequirement required_responses(int m_b, int m_j, const JitterSpec& spec);

}  // namespace mereye
