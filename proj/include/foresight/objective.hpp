// The training objective: time-weighted anticipation loss with the
// exponential earliness penalty, advantage-weighted actor loss with
// entropy regularization, the critic regression, and their weighted
// composition.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "foresight/errors.hpp"

namespace foresight {

struct LossConfig {
    double neg_scale = 1.0;       // c, scale on the negative-sample cross-entropy
    double entropy_weight = 0.1;  // lambda_e
    double alpha = 0.5;           // weight of the actor-critic block
    double beta = 0.5;            // weight of the critic loss inside the block
    double prob_floor = 1e-7;     // probability clamp before logs
    double aux_diffusion_weight = 0.0; // optional denoiser reconstruction term

    void validate() const {
        if (entropy_weight < 0.0) throw config_error("loss: entropy_weight must be >= 0");
        if (alpha < 0.0 || beta < 0.0) throw config_error("loss: alpha and beta must be >= 0");
        if (neg_scale < 0.0) throw config_error("loss: neg_scale must be >= 0");
        if (prob_floor <= 0.0 || prob_floor >= 0.5)
            throw config_error("loss: prob_floor must be in (0, 0.5)");
        if (aux_diffusion_weight < 0.0)
            throw config_error("loss: aux_diffusion_weight must be >= 0");
    }
};

// Per-frame record of one episode; the unit the losses are computed on.
struct EpisodeTrace {
    bool positive = false;
    std::size_t accident_frame = 0; // 1-based; 0 iff negative
    double fps = 0.0;

    std::vector<double> prob;        // p_t
    std::vector<double> omega;       // time weight in (1, 2); 1 when ablated
    std::vector<std::size_t> action; // sampled action a_t
    std::vector<double> log_prob;    // log pi_t(a_t)
    std::vector<double> warn_prob;   // pi_t(warn), the policy's alert mass
    std::vector<double> value;       // V_t
    std::vector<double> entropy;     // H(pi_t)
    std::vector<double> reward;      // r_t
    std::vector<double> reward_norm; // r~_t, filled after batch normalization

    std::size_t frames() const { return prob.size(); }

    void check_consistent() const {
        const std::size_t n = prob.size();
        if (n == 0) throw domain_error("trace: empty episode");
        if (omega.size() != n || action.size() != n || log_prob.size() != n ||
            warn_prob.size() != n || value.size() != n || entropy.size() != n ||
            reward.size() != n || reward_norm.size() != n)
            throw shape_error("trace: per-frame arrays have inconsistent lengths");
        if (positive != (accident_frame >= 1) || accident_frame > n)
            throw domain_error("trace: accident frame inconsistent with label");
    }
};

inline double clamp_prob(double p, double floor) {
    return std::min(std::max(p, floor), 1.0 - floor);
}

// p = -max(0, (tau - t - 1) / fps); t is the 0-based frame index, tau the
// 1-based accident frame, so the penalty vanishes at the accident frame.
inline double temporal_penalty(std::size_t t, std::size_t tau, double fps) {
    if (tau < 1)
        throw domain_error("temporal_penalty: undefined for negative videos");
    const double lead =
        (static_cast<double>(tau) - static_cast<double>(t) - 1.0) / fps;
    return -std::max(0.0, lead);
}

// Positive videos: mean_t omega_t * exp(penalty) * (-log p_t).
// Negative videos: mean_t c * (-log(1 - p_t)).
inline double anticipation_loss(const EpisodeTrace& trace, const LossConfig& cfg) {
    trace.check_consistent();
    const std::size_t n = trace.frames();
    double sum = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const double p = clamp_prob(trace.prob[t], cfg.prob_floor);
        if (trace.positive) {
            const double pen = temporal_penalty(t, trace.accident_frame, trace.fps);
            sum += trace.omega[t] * std::exp(pen) * (-std::log(p));
        } else {
            sum += cfg.neg_scale * (-std::log(1.0 - p));
        }
    }
    return sum / static_cast<double>(n);
}

// -mean_t[log pi_t(a_t) * A_t] - lambda_e * mean_t[H(pi_t)], with the
// advantage A_t = r~_t - V_t treated as a constant.
inline double actor_loss(const EpisodeTrace& trace, double entropy_weight) {
    trace.check_consistent();
    const std::size_t n = trace.frames();
    double pg = 0.0, ent = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const double advantage = trace.reward_norm[t] - trace.value[t];
        pg += trace.log_prob[t] * advantage;
        ent += trace.entropy[t];
    }
    return -pg / static_cast<double>(n) -
           entropy_weight * ent / static_cast<double>(n);
}

// mean_t of (r~_t - V_t)^2 / 2.
inline double critic_loss(const EpisodeTrace& trace) {
    trace.check_consistent();
    const std::size_t n = trace.frames();
    double sum = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const double d = trace.reward_norm[t] - trace.value[t];
        sum += 0.5 * d * d;
    }
    return sum / static_cast<double>(n);
}

// L = L_an + alpha * (L_actor + beta * L_critic)
inline double total_loss(double l_anticipation, double l_actor, double l_critic,
                         const LossConfig& cfg) {
    return l_anticipation + cfg.alpha * (l_actor + cfg.beta * l_critic);
}

} // namespace foresight
