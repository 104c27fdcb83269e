#pragma once

// Shared fixtures: the reference link and jitter, plus small LTI setups.

#include "mereye/system.hpp"
#include "mereye/waveform.hpp"

#include <memory>

namespace mereye::test {

inline constexpr double kPeriod = 20e-9;
inline constexpr double kDt = kPeriod / 200;
inline constexpr double kSwing = 5.0;

inline DriverStage reference_driver() {
    DriverStage d;
    d.kind = TransferKind::Tanh;
    d.gain = 3.0;
    d.slew = 5e8;
    d.v_low = 0.0;
    d.v_high = 5.0;
    return d;
}

inline LinkParams reference_link(double load_ohms) {
    LinkParams p;
    p.driver = reference_driver();
    p.z0 = 50.0;
    p.load = load_ohms;
    p.line_delay = 5e-9;
    p.alpha = 0.8;
    return p;
}

inline ResponseContext link_context(const LinkParams& p, double dt = kDt) {
    return make_response_context(std::make_shared<NonlinearLinkModel>(p), extract_edge_templates(p.driver, dt),
                                 kPeriod);
}

inline ResponseContext reference_context(double load_ohms) { return link_context(reference_link(load_ohms)); }

inline ResponseContext lti_context(LtiChannelModel model, DriverStage driver) {
    return make_response_context(std::make_shared<LtiChannelModel>(std::move(model)),
                                 extract_edge_templates(driver, kDt), kPeriod);
}

/// Linear driver without a slew limit: ideal step edges.
inline DriverStage step_driver() {
    DriverStage d;
    d.kind = TransferKind::Linear;
    d.slew = 0.0;
    return d;
}

inline DriverStage linear_slewed_driver() {
    DriverStage d;
    d.kind = TransferKind::Linear;
    d.slew = 5e8;
    return d;
}

inline JitterSpec reference_jitter() {
    JitterSpec s;
    s.a_pj = 1.0e-9;
    s.t_pj = 118e-9;
    s.t0_steps = 100;
    s.sigma_rj = 0.4e-9;
    s.rj_range = 5.0;
    s.rj_steps = 100;
    return s;
}

inline JitterSpec pj_only() {
    auto s = reference_jitter();
    s.sigma_rj = 0.0;
    return s;
}

}  // namespace mereye::test
