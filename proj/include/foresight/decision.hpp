// Actor-critic heads over the history summary: discrete action policy,
// categorical sampling, linear value estimate, time-decayed reward, and
// batch reward normalization.

#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "foresight/errors.hpp"
#include "foresight/linalg.hpp"
#include "foresight/rng.hpp"

namespace foresight {

struct ActorCriticParams {
    Matrix w_policy; // A x d_h
    Vector b_policy; // A
    Vector w_value;  // d_h
    Vector b_value;  // 1
};

struct RewardConfig {
    double decay_tau = 5.0;      // frames of exponential decay for correct actions
    double penalty_gamma = -0.5; // fixed reward for incorrect actions
    double epsilon = 1e-8;       // normalization stabilizer
    double reward_scale = 1.0;   // sweep multiplier on the correct-action reward
    double penalty_scale = 1.0;  // sweep multiplier on the penalty
    // When >= 0, positive videos only label frames t >= accident - window
    // as warn-worthy; -1 keeps the video-level label on every frame.
    long long positive_label_window = -1;

    void validate() const {
        if (decay_tau <= 0.0) throw config_error("reward: decay_tau must be positive");
        if (epsilon <= 0.0) throw config_error("reward: epsilon must be positive");
    }
};

// softmax(W h + b); components positive, summing to 1.
inline Vector policy(const Vector& h_bar, const ActorCriticParams& p) {
    require_size(h_bar, p.w_policy.cols(), "policy: state");
    Vector logits;
    matvec(p.w_policy, h_bar, logits);
    add_inplace(logits, p.b_policy);
    double m = logits[0];
    for (double v : logits) m = std::max(m, v);
    double denom = 0.0;
    for (double& v : logits) {
        v = std::exp(v - m);
        denom += v;
    }
    for (double& v : logits) v /= denom;
    return logits;
}

// Categorical draw; returns (action, log pi(action)).
inline std::pair<std::size_t, double> sample_action(const Vector& pi,
                                                    RandomStream& rng) {
    if (!all_finite(pi))
        throw numeric_error("sample_action: action distribution is not finite");
    const double u = rng.uniform01();
    double acc = 0.0;
    std::size_t action = pi.size() - 1;
    for (std::size_t a = 0; a < pi.size(); ++a) {
        acc += pi[a];
        if (u < acc) {
            action = a;
            break;
        }
    }
    return {action, std::log(pi[action])};
}

inline double value(const Vector& h_bar, const ActorCriticParams& p) {
    require_size(h_bar, p.w_value.size(), "value: state");
    return dot(p.w_value, h_bar) + p.b_value[0];
}

inline double action_entropy(const Vector& pi) {
    double h = 0.0;
    for (double v : pi)
        if (v > 0.0) h -= v * std::log(v);
    return h;
}

// r = scale * exp(-t / decay_tau) when the action matches the label,
// else penalty_scale * gamma. t is the 0-based frame index.
inline double reward(std::size_t action, std::size_t truth, std::size_t t,
                     const RewardConfig& cfg) {
    if (action == truth)
        return cfg.reward_scale *
               std::exp(-static_cast<double>(t) / cfg.decay_tau);
    return cfg.penalty_scale * cfg.penalty_gamma;
}

// r~ = (r - mean) / (population std + epsilon)
inline std::vector<double> normalize_rewards(const std::vector<double>& rewards,
                                             double epsilon) {
    if (rewards.empty())
        throw domain_error("normalize_rewards: empty batch");
    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= static_cast<double>(rewards.size());
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    var /= static_cast<double>(rewards.size());
    const double denom = std::sqrt(var) + epsilon;
    std::vector<double> out(rewards.size());
    for (std::size_t i = 0; i < rewards.size(); ++i)
        out[i] = (rewards[i] - mean) / denom;
    return out;
}

// Gradient at the policy logits for a combination of d(log pi(a)) and
// d(entropy); accumulates head gradients and the state gradient.
inline void policy_value_backward(const Vector& h_bar, const ActorCriticParams& p,
                                  const Vector& pi, std::size_t action,
                                  double d_log_prob, double d_entropy, double d_value,
                                  ActorCriticParams& grads, Vector& dh_bar) {
    const std::size_t n = pi.size();
    double entropy = 0.0;
    if (d_entropy != 0.0) entropy = action_entropy(pi);
    Vector d_logits(n, 0.0);
    for (std::size_t a = 0; a < n; ++a) {
        const double indicator = a == action ? 1.0 : 0.0;
        d_logits[a] = d_log_prob * (indicator - pi[a]);
        if (d_entropy != 0.0 && pi[a] > 0.0)
            d_logits[a] += d_entropy * (-pi[a] * (std::log(pi[a]) + entropy));
    }
    add_inplace(grads.b_policy, d_logits);
    add_outer(grads.w_policy, d_logits, h_bar);
    matvec_transposed_add(p.w_policy, d_logits, dh_bar);

    if (d_value != 0.0) {
        grads.b_value[0] += d_value;
        axpy(d_value, h_bar, grads.w_value);
        axpy(d_value, p.w_value, dh_bar);
    }
}

} // namespace foresight
