// Episode rollout: runs one video through attention, dual diffusion
// enhancement, fusion, the GRU, both heads, the history summary, and the
// actor-critic heads, recording the trace plus every intermediate needed
// for reverse accumulation.

#pragma once

#include <cstdint>
#include <vector>

#include "foresight/dataset.hpp"
#include "foresight/decision.hpp"
#include "foresight/diffusion.hpp"
#include "foresight/model.hpp"
#include "foresight/objective.hpp"
#include "foresight/temporal.hpp"

namespace foresight {

// Module on/off switches reproducing the "w/o" ablation variants.
// Disabling a module replaces it with its identity pass-through:
// attention -> uniform weights, diffusion -> unmodified features,
// time weight -> 1, losses -> zero coefficient.
struct AblationSwitches {
    bool object_aware = true;
    bool time_weight = true;
    bool image_diffusion = true;
    bool object_diffusion = true;
    bool anticipation_loss = true;
    bool actor_loss = true;
    bool critic_loss = true;
};

struct TrainConfig {
    std::size_t epochs = 30;
    std::size_t batch_size = 10;
    double learning_rate = 3e-4;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    double plateau_factor = 0.5;
    std::size_t plateau_patience = 3;
    double plateau_min_lr = 1e-6;
    double plateau_threshold = 1e-4; // relative improvement threshold
    std::size_t history_window = 10; // W; 0 = frame-level baseline
    double val_fraction = 0.2;
    std::uint64_t seed = 1;
    std::size_t threads = 0; // 0 = hardware concurrency
    AblationSwitches ablation;
    ModelConfig model;
    LossConfig loss;
    RewardConfig reward;

    void validate() const {
        if (batch_size == 0) throw config_error("train: batch_size must be >= 1");
        if (learning_rate <= 0.0) throw config_error("train: learning_rate must be positive");
        if (adam_beta1 < 0.0 || adam_beta1 >= 1.0 || adam_beta2 < 0.0 || adam_beta2 >= 1.0)
            throw config_error("train: Adam betas must be in [0, 1)");
        if (adam_epsilon <= 0.0) throw config_error("train: adam_epsilon must be positive");
        if (plateau_factor <= 0.0 || plateau_factor >= 1.0)
            throw config_error("train: plateau_factor must be in (0, 1)");
        if (plateau_patience == 0) throw config_error("train: plateau_patience must be >= 1");
        if (plateau_min_lr < 0.0) throw config_error("train: plateau_min_lr must be >= 0");
        if (val_fraction < 0.0 || val_fraction >= 1.0)
            throw config_error("train: val_fraction must be in [0, 1)");
        model.validate();
        loss.validate();
        reward.validate();
    }
};

struct FrameCache {
    std::size_t t_diff = 0;
    AttentionCache att;
    DenoiseCache img_den;
    Vector img_enh;
    std::vector<DenoiseCache> obj_den; // K entries, only present objects filled
    Matrix obj_enh;                    // K x d_obj
    std::size_t present = 0;
    Vector x;
    GruCache gru;
    ProbCache prob;
    Vector h_bar;
    std::size_t window_len = 1;
    Vector pi;
};

struct EpisodeRollout {
    EpisodeTrace trace;
    std::vector<FrameCache> frames;
    const FeatureSequence* sequence = nullptr;
};

enum class RolloutMode {
    train_sampled, // diffusion step sampled per frame, fresh noise
    eval_fixed     // fixed mid-schedule step, seeded noise stream
};

namespace detail {

inline std::size_t frame_label(const ScenarioLabel& label, std::size_t t,
                               const RewardConfig& reward_cfg) {
    if (!label.positive) return 0;
    if (reward_cfg.positive_label_window < 0) return 1;
    const long long onset = static_cast<long long>(label.accident_frame) - 1 -
                            reward_cfg.positive_label_window;
    return static_cast<long long>(t) >= onset ? 1 : 0;
}

} // namespace detail

// Pure function of (sequence, label, params, cfg, rollout_seed, mode).
// When `replay` is given, the diffusion steps, noise draws, and actions
// are copied from it instead of drawn, which makes the loss a
// deterministic function of the parameters (the finite-difference
// harness relies on this).
inline EpisodeRollout rollout(const FeatureSequence& seq, const ScenarioLabel& label,
                              const ModelParameters& params, const TrainConfig& cfg,
                              const DiffusionSchedule& schedule,
                              std::uint64_t rollout_seed, RolloutMode mode,
                              const EpisodeRollout* replay = nullptr) {
    const std::size_t n = seq.frames;
    const std::size_t k_objs = seq.num_objects;
    const std::size_t d_h = cfg.model.d_hidden;
    const double lambda = cfg.model.fusion_lambda;

    // Independent sub-streams: toggling one module never shifts the
    // draws consumed by another.
    RandomStream base(rollout_seed);
    RandomStream tdiff_rng = base.child(1);
    RandomStream img_noise_rng = base.child(2);
    RandomStream obj_noise_rng = base.child(3);
    RandomStream action_rng = base.child(4);

    EpisodeRollout ep;
    ep.sequence = &seq;
    ep.frames.resize(n);
    EpisodeTrace& tr = ep.trace;
    tr.positive = label.positive;
    tr.accident_frame = label.accident_frame;
    tr.fps = seq.fps;
    tr.prob.resize(n);
    tr.omega.resize(n);
    tr.action.resize(n);
    tr.log_prob.resize(n);
    tr.warn_prob.resize(n);
    tr.value.resize(n);
    tr.entropy.resize(n);
    tr.reward.resize(n);
    tr.reward_norm.assign(n, 0.0);

    const std::size_t window = cfg.history_window == 0 ? 1 : cfg.history_window;
    Vector h_prev(d_h, 0.0);
    Vector f_img(seq.d_img);

    for (std::size_t t = 0; t < n; ++t) {
        FrameCache& fc = ep.frames[t];
        const ConstRows objs = object_rows(seq.object_feats, t * k_objs, k_objs);
        const std::uint8_t* mask = &seq.object_mask[t * k_objs];

        if (cfg.ablation.object_aware)
            attend(objs, mask, h_prev, params.attention, fc.att);
        else
            attend_uniform(objs, mask, fc.att);
        fc.present = seq.present_count(t);

        if (replay)
            fc.t_diff = replay->frames[t].t_diff;
        else if (mode == RolloutMode::train_sampled)
            fc.t_diff = sample_timestep(tdiff_rng, schedule.steps());
        else
            fc.t_diff = cfg.model.eval_timestep();

        std::copy(seq.image(t), seq.image(t) + seq.d_img, f_img.begin());
        if (cfg.ablation.image_diffusion) {
            if (replay) {
                fc.img_den.eps = replay->frames[t].img_den.eps;
                forward_diffuse(f_img, fc.t_diff, schedule, fc.img_den.eps,
                                fc.img_den.noisy);
                denoise(fc.img_den.noisy, fc.t_diff, params.image_denoiser, fc.img_den);
                fc.img_enh.resize(seq.d_img);
                for (std::size_t i = 0; i < seq.d_img; ++i)
                    fc.img_enh[i] = f_img[i] + lambda * fc.img_den.out[i];
            } else {
                enhance(f_img, fc.t_diff, schedule, params.image_denoiser, lambda,
                        img_noise_rng, fc.img_enh, fc.img_den);
            }
        } else {
            fc.img_enh = f_img;
        }

        fc.obj_enh = Matrix(k_objs, seq.d_obj);
        fc.obj_den.resize(k_objs);
        Vector refined(seq.d_obj), enh(seq.d_obj);
        for (std::size_t k = 0; k < k_objs; ++k) {
            if (!mask[k]) continue;
            const double* r = fc.att.refined.row(k);
            refined.assign(r, r + seq.d_obj);
            if (cfg.ablation.object_diffusion) {
                if (replay) {
                    DenoiseCache& dc = fc.obj_den[k];
                    dc.eps = replay->frames[t].obj_den[k].eps;
                    forward_diffuse(refined, fc.t_diff, schedule, dc.eps, dc.noisy);
                    denoise(dc.noisy, fc.t_diff, params.object_denoiser, dc);
                    for (std::size_t i = 0; i < seq.d_obj; ++i)
                        enh[i] = refined[i] + lambda * dc.out[i];
                } else {
                    enhance(refined, fc.t_diff, schedule, params.object_denoiser,
                            lambda, obj_noise_rng, enh, fc.obj_den[k]);
                }
                std::copy(enh.begin(), enh.end(), fc.obj_enh.row(k));
            } else {
                std::copy(refined.begin(), refined.end(), fc.obj_enh.row(k));
            }
        }

        fuse_inputs(fc.img_enh, fc.obj_enh, mask, fc.x);
        gru_step(fc.x, h_prev, params.temporal.gru, fc.gru);

        tr.prob[t] = predict_prob(fc.gru.h, params.temporal.prob, fc.prob);
        tr.omega[t] = cfg.ablation.time_weight
                          ? time_weight(fc.gru.h, params.temporal.time_weight)
                          : 1.0;

        // Mean over the last `window` hidden states, summed oldest-first
        // so it agrees with HistoryBuffer::summary bit for bit; window 0
        // is the frame-level baseline and coincides with window 1.
        fc.window_len = std::min(t + 1, window);
        fc.h_bar.assign(d_h, 0.0);
        for (std::size_t i = t + 1 - fc.window_len; i <= t; ++i)
            add_inplace(fc.h_bar, ep.frames[i].gru.h);
        scale_inplace(fc.h_bar, 1.0 / static_cast<double>(fc.window_len));

        fc.pi = policy(fc.h_bar, params.actor_critic);
        if (replay) {
            tr.action[t] = replay->trace.action[t];
            tr.log_prob[t] = std::log(fc.pi[tr.action[t]]);
        } else {
            const auto [a, lp] = sample_action(fc.pi, action_rng);
            tr.action[t] = a;
            tr.log_prob[t] = lp;
        }
        tr.warn_prob[t] = fc.pi.size() > 1 ? fc.pi[1] : 0.0;
        tr.value[t] = value(fc.h_bar, params.actor_critic);
        tr.entropy[t] = action_entropy(fc.pi);

        const std::size_t y = detail::frame_label(label, t, cfg.reward);
        tr.reward[t] = reward(tr.action[t], y, t, cfg.reward);

        h_prev = fc.gru.h;
    }
    return ep;
}

// Fills reward_norm across all timesteps of all episodes in the batch.
inline void normalize_batch_rewards(std::vector<EpisodeRollout>& batch,
                                    double epsilon) {
    std::vector<double> all;
    for (const EpisodeRollout& ep : batch)
        all.insert(all.end(), ep.trace.reward.begin(), ep.trace.reward.end());
    const std::vector<double> normed = normalize_rewards(all, epsilon);
    std::size_t offset = 0;
    for (EpisodeRollout& ep : batch) {
        const std::size_t n = ep.trace.frames();
        std::copy(normed.begin() + offset, normed.begin() + offset + n,
                  ep.trace.reward_norm.begin());
        offset += n;
    }
}

struct BatchLosses {
    double anticipation = 0.0;
    double actor = 0.0;
    double critic = 0.0;
    double aux = 0.0;
    double total = 0.0;
};

// Optional denoiser reconstruction penalty, mean over frames of the
// per-dimension squared error between denoiser output and clean input.
inline double aux_diffusion_loss(const EpisodeRollout& ep, const TrainConfig& cfg) {
    const FeatureSequence& seq = *ep.sequence;
    const std::size_t n = ep.frames.size();
    double sum = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const FrameCache& fc = ep.frames[t];
        if (cfg.ablation.image_diffusion) {
            const double* f = seq.image(t);
            double s = 0.0;
            for (std::size_t i = 0; i < seq.d_img; ++i) {
                const double d = fc.img_den.out[i] - f[i];
                s += d * d;
            }
            sum += s / static_cast<double>(seq.d_img);
        }
        if (cfg.ablation.object_diffusion) {
            double s = 0.0;
            for (std::size_t k = 0; k < seq.num_objects; ++k) {
                if (!seq.present(t, k)) continue;
                const double* r = fc.att.refined.row(k);
                const DenoiseCache& dc = fc.obj_den[k];
                double sk = 0.0;
                for (std::size_t i = 0; i < seq.d_obj; ++i) {
                    const double d = dc.out[i] - r[i];
                    sk += d * d;
                }
                s += sk / static_cast<double>(seq.d_obj);
            }
            sum += s / static_cast<double>(fc.present);
        }
    }
    return sum / static_cast<double>(n);
}

// Mean per-episode losses with the loss switches applied.
inline BatchLosses batch_losses(const std::vector<EpisodeRollout>& batch,
                                const TrainConfig& cfg) {
    BatchLosses out;
    for (const EpisodeRollout& ep : batch) {
        out.anticipation +=
            cfg.ablation.anticipation_loss ? anticipation_loss(ep.trace, cfg.loss) : 0.0;
        out.actor +=
            cfg.ablation.actor_loss ? actor_loss(ep.trace, cfg.loss.entropy_weight) : 0.0;
        out.critic += cfg.ablation.critic_loss ? critic_loss(ep.trace) : 0.0;
        if (cfg.loss.aux_diffusion_weight > 0.0)
            out.aux += aux_diffusion_loss(ep, cfg);
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    out.anticipation *= inv;
    out.actor *= inv;
    out.critic *= inv;
    out.aux *= inv;
    out.total = total_loss(out.anticipation, out.actor, out.critic, cfg.loss) +
                cfg.loss.aux_diffusion_weight * out.aux;
    return out;
}

} // namespace foresight
