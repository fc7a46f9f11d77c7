// Training: exact reverse accumulation through the unrolled pipeline
// (with the advantage treated as a constant in the actor term), Adam with
// bias correction, a reduce-on-plateau schedule, dataset splitting, the
// epoch loop, and versioned text checkpoints.

#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <thread>
#include <utility>
#include <vector>

#include "foresight/metrics.hpp"
#include "foresight/rollout.hpp"
#include "foresight/serialize.hpp"

namespace foresight {

namespace seed_tag {
inline constexpr std::uint64_t init = 0x11717;
inline constexpr std::uint64_t shuffle = 0x5408f;
inline constexpr std::uint64_t rollout = 0x9011;
inline constexpr std::uint64_t eval = 0xe7a1;
inline constexpr std::uint64_t split = 0x59717;
} // namespace seed_tag

template <class Fn>
inline void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
    if (threads == 0) threads = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w) {
        pool.emplace_back([&]() {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    }
    for (std::thread& t : pool) t.join();
}

// --- Gradients ---------------------------------------------------------------

// Accumulates the gradient of this episode's loss (with loss switches and
// composition weights applied) into `grads`. Sampled actions, diffusion
// steps, and noise draws are fixed; the advantage in the actor term and
// the normalized reward in the critic term are constants.
inline void episode_gradients(const EpisodeRollout& ep, const ModelParameters& params,
                              const TrainConfig& cfg, const DiffusionSchedule& schedule,
                              ModelParameters& grads) {
    const EpisodeTrace& tr = ep.trace;
    const FeatureSequence& seq = *ep.sequence;
    const std::size_t n = ep.frames.size();
    const std::size_t d_h = cfg.model.d_hidden;
    const std::size_t k_objs = seq.num_objects;
    const double inv_n = 1.0 / static_cast<double>(n);
    const double floor = cfg.loss.prob_floor;
    const double aux_w = cfg.loss.aux_diffusion_weight;

    // Direct per-frame gradients at the hidden states (heads + history).
    std::vector<Vector> dh_direct(n, Vector(d_h, 0.0));

    for (std::size_t t = 0; t < n; ++t) {
        const FrameCache& fc = ep.frames[t];
        const Vector& h = fc.gru.h;

        if (cfg.ablation.anticipation_loss) {
            const double p = clamp_prob(tr.prob[t], floor);
            const bool interior = tr.prob[t] > floor && tr.prob[t] < 1.0 - floor;
            if (tr.positive) {
                const double pen =
                    std::exp(temporal_penalty(t, tr.accident_frame, tr.fps));
                const double dp =
                    interior ? tr.omega[t] * pen * (-1.0 / p) * inv_n : 0.0;
                predict_prob_backward(h, params.temporal.prob, fc.prob, dp,
                                      grads.temporal.prob, dh_direct[t]);
                if (cfg.ablation.time_weight) {
                    const double d_omega = pen * (-std::log(p)) * inv_n;
                    time_weight_backward(h, params.temporal.time_weight, tr.omega[t],
                                         d_omega, grads.temporal.time_weight,
                                         dh_direct[t]);
                }
            } else {
                const double dp =
                    interior ? cfg.loss.neg_scale * (1.0 / (1.0 - p)) * inv_n : 0.0;
                predict_prob_backward(h, params.temporal.prob, fc.prob, dp,
                                      grads.temporal.prob, dh_direct[t]);
            }
        }

        double d_log_prob = 0.0, d_entropy = 0.0, d_value = 0.0;
        if (cfg.ablation.actor_loss) {
            const double advantage = tr.reward_norm[t] - tr.value[t];
            d_log_prob = cfg.loss.alpha * (-advantage) * inv_n;
            d_entropy = cfg.loss.alpha * (-cfg.loss.entropy_weight) * inv_n;
        }
        if (cfg.ablation.critic_loss)
            d_value = cfg.loss.alpha * cfg.loss.beta *
                      (tr.value[t] - tr.reward_norm[t]) * inv_n;
        if (d_log_prob != 0.0 || d_entropy != 0.0 || d_value != 0.0) {
            Vector dh_bar(d_h, 0.0);
            policy_value_backward(fc.h_bar, params.actor_critic, fc.pi, tr.action[t],
                                  d_log_prob, d_entropy, d_value, grads.actor_critic,
                                  dh_bar);
            const double inv_m = 1.0 / static_cast<double>(fc.window_len);
            for (std::size_t i = t + 1 - fc.window_len; i <= t; ++i)
                axpy(inv_m, dh_bar, dh_direct[i]);
        }
    }

    // Reverse sweep through time.
    const Vector h_zero(d_h, 0.0);
    Vector dh_carry(d_h, 0.0);
    const std::size_t d_img = seq.d_img;
    const std::size_t d_obj = seq.d_obj;
    Vector dh(d_h), dh_prev(d_h), dx(cfg.model.gru_input_dim());
    Vector d_img_enh(d_img), d_f_img(d_img);
    Matrix d_obj_enh(k_objs, d_obj), d_refined(k_objs, d_obj);
    Vector d_enh_row(d_obj), d_ref_row(d_obj), extra(d_obj);

    for (std::size_t rt = n; rt-- > 0;) {
        const FrameCache& fc = ep.frames[rt];
        const Vector& h_prev = rt > 0 ? ep.frames[rt - 1].gru.h : h_zero;
        const std::uint8_t* mask = &seq.object_mask[rt * k_objs];
        const ConstRows objs = object_rows(seq.object_feats, rt * k_objs, k_objs);

        dh = dh_direct[rt];
        add_inplace(dh, dh_carry);

        dh_prev.assign(d_h, 0.0);
        dx.assign(dx.size(), 0.0);
        gru_step_backward(fc.x, h_prev, params.temporal.gru, fc.gru, dh,
                          grads.temporal.gru, dx, dh_prev);

        d_img_enh.assign(d_img, 0.0);
        d_obj_enh.fill(0.0);
        fuse_inputs_backward(dx, d_img, mask, fc.present, d_img_enh, d_obj_enh);

        if (cfg.ablation.image_diffusion) {
            const Vector* extra_ptr = nullptr;
            if (aux_w > 0.0) {
                extra.resize(d_img);
                const double* f = seq.image(rt);
                const double c = 2.0 * aux_w * inv_n / static_cast<double>(d_img);
                for (std::size_t i = 0; i < d_img; ++i)
                    extra[i] = c * (fc.img_den.out[i] - f[i]);
                extra_ptr = &extra;
            }
            d_f_img.assign(d_img, 0.0); // input is data; gradient discarded
            enhance_backward(params.image_denoiser, schedule, cfg.model.fusion_lambda,
                             fc.img_den, d_img_enh, extra_ptr, grads.image_denoiser,
                             d_f_img);
        }

        d_refined.fill(0.0);
        for (std::size_t k = 0; k < k_objs; ++k) {
            if (!mask[k]) continue;
            const double* src = d_obj_enh.row(k);
            d_enh_row.assign(src, src + d_obj);
            if (cfg.ablation.object_diffusion) {
                const DenoiseCache& dc = fc.obj_den[k];
                const Vector* extra_ptr = nullptr;
                if (aux_w > 0.0) {
                    extra.resize(d_obj);
                    const double* r = fc.att.refined.row(k);
                    const double c = 2.0 * aux_w * inv_n /
                                     (static_cast<double>(fc.present) *
                                      static_cast<double>(d_obj));
                    double* dref = d_refined.row(k);
                    for (std::size_t i = 0; i < d_obj; ++i) {
                        extra[i] = c * (dc.out[i] - r[i]);
                        dref[i] -= extra[i]; // target side of the reconstruction term
                    }
                    extra_ptr = &extra;
                }
                d_ref_row.assign(d_obj, 0.0);
                enhance_backward(params.object_denoiser, schedule,
                                 cfg.model.fusion_lambda, dc, d_enh_row, extra_ptr,
                                 grads.object_denoiser, d_ref_row);
                double* dref = d_refined.row(k);
                for (std::size_t i = 0; i < d_obj; ++i) dref[i] += d_ref_row[i];
            } else {
                double* dref = d_refined.row(k);
                for (std::size_t i = 0; i < d_obj; ++i) dref[i] += d_enh_row[i];
            }
        }

        if (cfg.ablation.object_aware)
            attend_backward(objs, mask, h_prev, params.attention, fc.att, d_refined,
                            grads.attention, dh_prev, nullptr);
        // uniform pass-through has no parameters and no h_prev dependence

        dh_carry = dh_prev;
    }
}

// Mean gradient over the batch. Throws numeric_error naming the first
// non-finite tensor.
inline ModelParameters compute_gradients(const std::vector<EpisodeRollout>& batch,
                                         const ModelParameters& params,
                                         const TrainConfig& cfg,
                                         const DiffusionSchedule& schedule) {
    if (batch.empty()) throw domain_error("compute_gradients: empty batch");
    std::vector<ModelParameters> per(batch.size());
    parallel_for(batch.size(), cfg.threads, [&](std::size_t i) {
        per[i] = make_parameters(cfg.model);
        episode_gradients(batch[i], params, cfg, schedule, per[i]);
    });
    ModelParameters total = make_parameters(cfg.model);
    for (const ModelParameters& g : per) accumulate(total, g);
    scale_parameters(total, 1.0 / static_cast<double>(batch.size()));
    check_finite(total, "compute_gradients");
    return total;
}

// --- Optimizer ----------------------------------------------------------------

struct AdamState {
    ModelParameters m;
    ModelParameters v;
    std::size_t step = 0;
};

inline AdamState make_adam_state(const ModelConfig& cfg) {
    return AdamState{make_parameters(cfg), make_parameters(cfg), 0};
}

inline void adam_step(ModelParameters& params, const ModelParameters& grads,
                      AdamState& state, double lr, const TrainConfig& cfg) {
    ++state.step;
    const double b1 = cfg.adam_beta1;
    const double b2 = cfg.adam_beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    auto pr = tensor_refs(params);
    auto gr = tensor_refs(grads);
    auto mr = tensor_refs(state.m);
    auto vr = tensor_refs(state.v);
    for (std::size_t i = 0; i < pr.size(); ++i) {
        std::vector<double>& p = *pr[i].data;
        const std::vector<double>& g = *gr[i].data;
        std::vector<double>& m = *mr[i].data;
        std::vector<double>& v = *vr[i].data;
        for (std::size_t j = 0; j < p.size(); ++j) {
            m[j] = b1 * m[j] + (1.0 - b1) * g[j];
            v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
            const double m_hat = m[j] / bc1;
            const double v_hat = v[j] / bc2;
            p[j] -= lr * m_hat / (std::sqrt(v_hat) + cfg.adam_epsilon);
        }
    }
}

// --- LR schedule ----------------------------------------------------------------

// Multiplies the learning rate by `factor` after `patience` epochs
// without relative improvement of the monitored quantity (validation
// total loss); never drops below min_lr.
class PlateauScheduler {
public:
    PlateauScheduler(double factor, std::size_t patience, double min_lr,
                     double threshold)
        : factor_(factor), patience_(patience), min_lr_(min_lr),
          threshold_(threshold) {}

    double update(double metric, double lr) {
        const bool improved =
            !std::isfinite(best_) || metric < best_ - threshold_ * std::abs(best_);
        if (improved) {
            best_ = metric;
            bad_ = 0;
        } else if (++bad_ >= patience_) {
            lr = std::max(min_lr_, lr * factor_);
            bad_ = 0;
        }
        return lr;
    }

    double best() const { return best_; }
    std::size_t bad_epochs() const { return bad_; }
    void restore(double best, std::size_t bad) {
        best_ = best;
        bad_ = bad;
    }

private:
    double factor_;
    std::size_t patience_;
    double min_lr_;
    double threshold_;
    double best_ = std::numeric_limits<double>::infinity();
    std::size_t bad_ = 0;
};

// --- Config serialization ------------------------------------------------------

inline std::vector<std::pair<std::string, std::string>>
train_config_entries(const TrainConfig& c) {
    auto b = [](bool v) { return std::string(v ? "true" : "false"); };
    auto u = [](std::uint64_t v) { return std::to_string(v); };
    auto i = [](long long v) { return std::to_string(v); };
    auto d = [](double v) { return format_double(v); };
    return {
        {"epochs", u(c.epochs)},
        {"batch_size", u(c.batch_size)},
        {"learning_rate", d(c.learning_rate)},
        {"adam_beta1", d(c.adam_beta1)},
        {"adam_beta2", d(c.adam_beta2)},
        {"adam_epsilon", d(c.adam_epsilon)},
        {"plateau_factor", d(c.plateau_factor)},
        {"plateau_patience", u(c.plateau_patience)},
        {"plateau_min_lr", d(c.plateau_min_lr)},
        {"plateau_threshold", d(c.plateau_threshold)},
        {"history_window", u(c.history_window)},
        {"val_fraction", d(c.val_fraction)},
        {"seed", u(c.seed)},
        {"threads", u(c.threads)},
        {"ablation.object_aware", b(c.ablation.object_aware)},
        {"ablation.time_weight", b(c.ablation.time_weight)},
        {"ablation.image_diffusion", b(c.ablation.image_diffusion)},
        {"ablation.object_diffusion", b(c.ablation.object_diffusion)},
        {"ablation.anticipation_loss", b(c.ablation.anticipation_loss)},
        {"ablation.actor_loss", b(c.ablation.actor_loss)},
        {"ablation.critic_loss", b(c.ablation.critic_loss)},
        {"model.d_img", u(c.model.d_img)},
        {"model.d_obj", u(c.model.d_obj)},
        {"model.num_objects", u(c.model.num_objects)},
        {"model.d_att", u(c.model.d_att)},
        {"model.d_hidden", u(c.model.d_hidden)},
        {"model.d_head", u(c.model.d_head)},
        {"model.actions", u(c.model.actions)},
        {"model.diffusion_steps", u(c.model.diffusion_steps)},
        {"model.beta_start", d(c.model.beta_start)},
        {"model.beta_end", d(c.model.beta_end)},
        {"model.fusion_lambda", d(c.model.fusion_lambda)},
        {"model.step_embedding", b(c.model.step_embedding)},
        {"loss.neg_scale", d(c.loss.neg_scale)},
        {"loss.entropy_weight", d(c.loss.entropy_weight)},
        {"loss.alpha", d(c.loss.alpha)},
        {"loss.beta", d(c.loss.beta)},
        {"loss.prob_floor", d(c.loss.prob_floor)},
        {"loss.aux_diffusion_weight", d(c.loss.aux_diffusion_weight)},
        {"reward.decay_tau", d(c.reward.decay_tau)},
        {"reward.penalty_gamma", d(c.reward.penalty_gamma)},
        {"reward.epsilon", d(c.reward.epsilon)},
        {"reward.reward_scale", d(c.reward.reward_scale)},
        {"reward.penalty_scale", d(c.reward.penalty_scale)},
        {"reward.positive_label_window", i(c.reward.positive_label_window)},
    };
}

inline bool parse_bool(const std::string& v, const std::string& context) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw parse_error(context + ": expected boolean, got '" + v + "'");
}

// Applies one key=value setting; throws config_error on unknown keys.
inline void apply_train_config_key(TrainConfig& c, const std::string& key,
                                   const std::string& value) {
    const std::string ctx = "config key '" + key + "'";
    auto u = [&]() { return static_cast<std::size_t>(parse_int(value, ctx)); };
    auto i = [&]() { return static_cast<long long>(parse_int(value, ctx)); };
    auto d = [&]() { return parse_double(value, ctx); };
    auto b = [&]() { return parse_bool(value, ctx); };

    if (key == "epochs") c.epochs = u();
    else if (key == "batch_size") c.batch_size = u();
    else if (key == "learning_rate") c.learning_rate = d();
    else if (key == "adam_beta1") c.adam_beta1 = d();
    else if (key == "adam_beta2") c.adam_beta2 = d();
    else if (key == "adam_epsilon") c.adam_epsilon = d();
    else if (key == "plateau_factor") c.plateau_factor = d();
    else if (key == "plateau_patience") c.plateau_patience = u();
    else if (key == "plateau_min_lr") c.plateau_min_lr = d();
    else if (key == "plateau_threshold") c.plateau_threshold = d();
    else if (key == "history_window") c.history_window = u();
    else if (key == "val_fraction") c.val_fraction = d();
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_int(value, ctx));
    else if (key == "threads") c.threads = u();
    else if (key == "ablation.object_aware") c.ablation.object_aware = b();
    else if (key == "ablation.time_weight") c.ablation.time_weight = b();
    else if (key == "ablation.image_diffusion") c.ablation.image_diffusion = b();
    else if (key == "ablation.object_diffusion") c.ablation.object_diffusion = b();
    else if (key == "ablation.anticipation_loss") c.ablation.anticipation_loss = b();
    else if (key == "ablation.actor_loss") c.ablation.actor_loss = b();
    else if (key == "ablation.critic_loss") c.ablation.critic_loss = b();
    else if (key == "model.d_img") c.model.d_img = u();
    else if (key == "model.d_obj") c.model.d_obj = u();
    else if (key == "model.num_objects") c.model.num_objects = u();
    else if (key == "model.d_att") c.model.d_att = u();
    else if (key == "model.d_hidden") c.model.d_hidden = u();
    else if (key == "model.d_head") c.model.d_head = u();
    else if (key == "model.actions") c.model.actions = u();
    else if (key == "model.diffusion_steps") c.model.diffusion_steps = u();
    else if (key == "model.beta_start") c.model.beta_start = d();
    else if (key == "model.beta_end") c.model.beta_end = d();
    else if (key == "model.fusion_lambda") c.model.fusion_lambda = d();
    else if (key == "model.step_embedding") c.model.step_embedding = b();
    else if (key == "loss.neg_scale") c.loss.neg_scale = d();
    else if (key == "loss.entropy_weight") c.loss.entropy_weight = d();
    else if (key == "loss.alpha") c.loss.alpha = d();
    else if (key == "loss.beta") c.loss.beta = d();
    else if (key == "loss.prob_floor") c.loss.prob_floor = d();
    else if (key == "loss.aux_diffusion_weight") c.loss.aux_diffusion_weight = d();
    else if (key == "reward.decay_tau") c.reward.decay_tau = d();
    else if (key == "reward.penalty_gamma") c.reward.penalty_gamma = d();
    else if (key == "reward.epsilon") c.reward.epsilon = d();
    else if (key == "reward.reward_scale") c.reward.reward_scale = d();
    else if (key == "reward.penalty_scale") c.reward.penalty_scale = d();
    else if (key == "reward.positive_label_window") c.reward.positive_label_window = i();
    else throw config_error("unknown config key: " + key);
}

// --- Checkpoints ---------------------------------------------------------------

struct Checkpoint {
    int version = 1;
    TrainConfig config;
    std::size_t epoch = 0;
    double lr = 0.0;
    ModelParameters params;
    AdamState adam;
    double plateau_best = std::numeric_limits<double>::infinity();
    std::size_t plateau_bad = 0;
    std::string rng_state;
};

inline void save_checkpoint(const Checkpoint& ck, const std::string& path) {
    std::ofstream out = open_output(path);
    out << "foresight-checkpoint\n";
    out << "version " << ck.version << '\n';
    out << "config_begin\n";
    for (const auto& [k, v] : train_config_entries(ck.config))
        out << k << ' ' << v << '\n';
    out << "config_end\n";
    out << "epoch " << ck.epoch << '\n';
    out << "lr " << format_double(ck.lr) << '\n';
    out << "adam_step " << ck.adam.step << '\n';
    out << "plateau_best " << format_double(ck.plateau_best) << '\n';
    out << "plateau_bad " << ck.plateau_bad << '\n';
    {
        std::istringstream tokens(ck.rng_state);
        std::vector<std::string> parts;
        std::string tok;
        while (tokens >> tok) parts.push_back(tok);
        out << "rng_tokens " << parts.size();
        for (const std::string& t : parts) out << ' ' << t;
        out << '\n';
    }
    auto dump = [&](const char* tag, const ModelParameters& p) {
        auto refs = tensor_refs(p);
        out << tag << ' ' << refs.size() << '\n';
        for (const TensorRef& ref : refs) {
            out << ref.name << ' ' << ref.rows << ' ' << ref.cols << '\n';
            const std::vector<double>& data = *ref.data;
            for (std::size_t r = 0; r < ref.rows; ++r) {
                for (std::size_t c = 0; c < ref.cols; ++c) {
                    if (c) out << ' ';
                    out << format_double(data[r * ref.cols + c]);
                }
                out << '\n';
            }
        }
    };
    dump("params", ck.params);
    dump("adam_m", ck.adam.m);
    dump("adam_v", ck.adam.v);
    out << "end-checkpoint\n";
    if (!out) throw io_error("write failed: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in = open_input(path);
    TokenReader r(in, path);
    r.expect("foresight-checkpoint");
    r.expect("version");
    const long long version = r.next_int("version");
    if (version != 1)
        throw parse_error(path + ": unsupported checkpoint version " +
                          std::to_string(version));

    Checkpoint ck;
    ck.version = static_cast<int>(version);
    r.expect("config_begin");
    for (;;) {
        const std::string key = r.next("config key");
        if (key == "config_end") break;
        const std::string value = r.next("config value");
        apply_train_config_key(ck.config, key, value);
    }
    r.expect("epoch");
    ck.epoch = static_cast<std::size_t>(r.next_int("epoch"));
    r.expect("lr");
    ck.lr = r.next_double("lr");
    r.expect("adam_step");
    ck.adam.step = static_cast<std::size_t>(r.next_int("adam_step"));
    r.expect("plateau_best");
    ck.plateau_best = r.next_double("plateau_best");
    r.expect("plateau_bad");
    ck.plateau_bad = static_cast<std::size_t>(r.next_int("plateau_bad"));
    r.expect("rng_tokens");
    const long long tokens = r.next_int("rng token count");
    std::string rng;
    for (long long i = 0; i < tokens; ++i) {
        if (i) rng += ' ';
        rng += r.next("rng token");
    }
    ck.rng_state = rng;

    ck.params = make_parameters(ck.config.model);
    ck.adam.m = make_parameters(ck.config.model);
    ck.adam.v = make_parameters(ck.config.model);
    auto read_group = [&](const char* tag, ModelParameters& p) {
        r.expect(tag);
        auto refs = tensor_refs(p);
        const long long count = r.next_int("tensor count");
        if (count != static_cast<long long>(refs.size()))
            throw parse_error(path + ": tensor count mismatch in " + tag);
        for (TensorRef& ref : refs) {
            r.expect(ref.name);
            const long long rows = r.next_int(ref.name + " rows");
            const long long cols = r.next_int(ref.name + " cols");
            if (rows != static_cast<long long>(ref.rows) ||
                cols != static_cast<long long>(ref.cols))
                throw parse_error(path + ": shape mismatch for tensor " + ref.name);
            for (double& v : *ref.data) v = r.next_double(ref.name);
        }
    };
    read_group("params", ck.params);
    read_group("adam_m", ck.adam.m);
    read_group("adam_v", ck.adam.v);
    r.expect("end-checkpoint");
    return ck;
}

// --- Evaluation -----------------------------------------------------------------

struct EvalResult {
    std::vector<PredictionRecord> records;
    BatchLosses losses;
};

// Deterministic evaluation pass: fixed mid-schedule diffusion step,
// per-video noise/action streams derived from (seed, video index) so the
// result is independent of epoch and caller.
inline EvalResult evaluate_subset(const Dataset& ds,
                                  const std::vector<std::size_t>& indices,
                                  const ModelParameters& params,
                                  const TrainConfig& cfg,
                                  const DiffusionSchedule& schedule) {
    if (indices.empty()) throw domain_error("evaluate_subset: no videos selected");
    std::vector<EpisodeRollout> rollouts(indices.size());
    parallel_for(indices.size(), cfg.threads, [&](std::size_t i) {
        const std::size_t idx = indices[i];
        rollouts[i] = rollout(ds.features(idx), ds.label(idx), params, cfg, schedule,
                              derive_seed(cfg.seed, seed_tag::eval, idx),
                              RolloutMode::eval_fixed);
    });
    normalize_batch_rewards(rollouts, cfg.reward.epsilon);

    EvalResult out;
    out.losses = batch_losses(rollouts, cfg);
    out.records.reserve(rollouts.size());
    for (EpisodeRollout& ep : rollouts) {
        PredictionRecord rec;
        rec.probs = ep.trace.prob;
        rec.warn_probs = ep.trace.warn_prob;
        rec.positive = ep.trace.positive;
        rec.accident_frame = ep.trace.accident_frame;
        rec.fps = ep.trace.fps;
        out.records.push_back(std::move(rec));
    }
    return out;
}

// --- Split and train loop ---------------------------------------------------------

template <class T>
inline void fisher_yates(std::vector<T>& v, RandomStream& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j =
            static_cast<std::size_t>(rng.uniform_index(static_cast<std::uint64_t>(i)));
        std::swap(v[i - 1], v[j]);
    }
}

// Seeded shuffle, then a per-class 80/20 walk so both classes appear in
// the validation split whenever the data allows it.
inline void split_dataset(const Dataset& ds, double val_fraction, std::uint64_t seed,
                          std::vector<std::size_t>& train_idx,
                          std::vector<std::size_t>& val_idx) {
    std::vector<std::size_t> order(ds.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    RandomStream rng(derive_seed(seed, seed_tag::split));
    fisher_yates(order, rng);

    std::size_t n_pos = 0, n_neg = 0;
    for (const Scenario& sc : ds.scenarios) (sc.label.positive ? n_pos : n_neg)++;
    const std::size_t val_pos =
        static_cast<std::size_t>(val_fraction * static_cast<double>(n_pos));
    const std::size_t val_neg =
        static_cast<std::size_t>(val_fraction * static_cast<double>(n_neg));

    train_idx.clear();
    val_idx.clear();
    std::size_t seen_pos = 0, seen_neg = 0;
    for (std::size_t idx : order) {
        if (ds.label(idx).positive) {
            (seen_pos++ < val_pos ? val_idx : train_idx).push_back(idx);
        } else {
            (seen_neg++ < val_neg ? val_idx : train_idx).push_back(idx);
        }
    }
}

struct EpochLog {
    std::size_t epoch = 0;
    double l_anticipation = 0.0;
    double l_actor = 0.0;
    double l_critic = 0.0;
    double l_total = 0.0;
    double lr = 0.0;
    double val_ap = 0.0;
    double val_mtta = 0.0;
};

struct TrainResult {
    Checkpoint checkpoint; // final state
    ModelParameters best_params;
    std::size_t best_epoch = 0;
    double best_ap = -1.0;
    std::vector<EpochLog> log;
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> val_indices;
};

inline void check_dataset_matches_model(const Dataset& ds, const ModelConfig& m) {
    if (ds.scenarios.empty()) throw config_error("train: dataset is empty");
    const FeatureSequence& fs = ds.features(0);
    if (fs.d_img != m.d_img || fs.d_obj != m.d_obj || fs.num_objects != m.num_objects)
        throw config_error("train: dataset dimensions (d_img=" +
                           std::to_string(fs.d_img) + ", d_obj=" +
                           std::to_string(fs.d_obj) + ", objects=" +
                           std::to_string(fs.num_objects) +
                           ") do not match the model configuration");
}

inline TrainResult train(const Dataset& ds, const TrainConfig& cfg,
                         const Checkpoint* resume = nullptr) {
    cfg.validate();
    check_dataset_matches_model(ds, cfg.model);
    const DiffusionSchedule schedule = cfg.model.schedule();

    TrainResult result;
    split_dataset(ds, cfg.val_fraction, cfg.seed, result.train_indices,
                  result.val_indices);

    ModelParameters params =
        resume ? resume->params
               : init_parameters(cfg.model, derive_seed(cfg.seed, seed_tag::init));
    AdamState adam = resume ? resume->adam : make_adam_state(cfg.model);
    double lr = resume ? resume->lr : cfg.learning_rate;
    PlateauScheduler plateau(cfg.plateau_factor, cfg.plateau_patience,
                             cfg.plateau_min_lr, cfg.plateau_threshold);
    if (resume) plateau.restore(resume->plateau_best, resume->plateau_bad);
    RandomStream shuffle_rng(derive_seed(cfg.seed, seed_tag::shuffle));
    if (resume && !resume->rng_state.empty())
        shuffle_rng.deserialize(resume->rng_state);

    const std::size_t first_epoch = resume ? resume->epoch + 1 : 1;
    result.best_params = params;

    if (cfg.epochs >= first_epoch) {
        if (result.train_indices.empty())
            throw config_error("train: training split is empty");
        std::size_t val_pos = 0, val_neg = 0;
        for (std::size_t idx : result.val_indices)
            (ds.label(idx).positive ? val_pos : val_neg)++;
        if (val_pos == 0 || val_neg == 0)
            throw config_error("train: validation split needs both classes; "
                               "adjust val_fraction or provide more data");
    }

    for (std::size_t epoch = first_epoch; epoch <= cfg.epochs; ++epoch) {
        std::vector<std::size_t> order = result.train_indices;
        fisher_yates(order, shuffle_rng);

        double sum_an = 0.0, sum_actor = 0.0, sum_critic = 0.0, sum_total = 0.0;
        std::size_t episodes = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t count = std::min(cfg.batch_size, order.size() - start);
            std::vector<EpisodeRollout> batch(count);
            parallel_for(count, cfg.threads, [&](std::size_t i) {
                const std::size_t idx = order[start + i];
                batch[i] = rollout(ds.features(idx), ds.label(idx), params, cfg,
                                   schedule,
                                   derive_seed(cfg.seed, seed_tag::rollout, epoch, idx),
                                   RolloutMode::train_sampled);
            });
            normalize_batch_rewards(batch, cfg.reward.epsilon);
            const BatchLosses bl = batch_losses(batch, cfg);
            const double w = static_cast<double>(count);
            sum_an += bl.anticipation * w;
            sum_actor += bl.actor * w;
            sum_critic += bl.critic * w;
            sum_total += bl.total * w;
            episodes += count;

            const ModelParameters grads = compute_gradients(batch, params, cfg, schedule);
            adam_step(params, grads, adam, lr, cfg);
        }

        const EvalResult val =
            evaluate_subset(ds, result.val_indices, params, cfg, schedule);
        std::vector<double> scores;
        std::vector<int> labels;
        for (const PredictionRecord& rec : val.records) {
            scores.push_back(video_score(rec));
            labels.push_back(rec.positive ? 1 : 0);
        }
        const double val_ap = average_precision(scores, labels);
        const double val_mtta = mtta(val.records, default_threshold_grid());

        EpochLog row;
        row.epoch = epoch;
        const double inv = 1.0 / static_cast<double>(episodes);
        row.l_anticipation = sum_an * inv;
        row.l_actor = sum_actor * inv;
        row.l_critic = sum_critic * inv;
        row.l_total = sum_total * inv;
        row.lr = lr;
        row.val_ap = val_ap;
        row.val_mtta = val_mtta;
        result.log.push_back(row);

        if (val_ap > result.best_ap) {
            result.best_ap = val_ap;
            result.best_params = params;
            result.best_epoch = epoch;
        }
        lr = plateau.update(val.losses.total, lr);
    }

    result.checkpoint.config = cfg;
    result.checkpoint.epoch = std::max(cfg.epochs, resume ? resume->epoch : 0);
    result.checkpoint.lr = lr;
    result.checkpoint.params = std::move(params);
    result.checkpoint.adam = std::move(adam);
    result.checkpoint.plateau_best = plateau.best();
    result.checkpoint.plateau_bad = plateau.bad_epochs();
    result.checkpoint.rng_state = shuffle_rng.serialize();
    return result;
}

// Training log CSV: one row per epoch with a fixed column order.
inline void write_training_log(const std::vector<EpochLog>& log,
                               const std::string& path) {
    std::ofstream out = open_output(path);
    out << "epoch,L_an,L_actor,L_critic,L_total,lr,val_AP,val_mTTA\n";
    for (const EpochLog& row : log) {
        out << row.epoch << ',' << format_double(row.l_anticipation) << ','
            << format_double(row.l_actor) << ',' << format_double(row.l_critic) << ','
            << format_double(row.l_total) << ',' << format_double(row.lr) << ','
            << format_double(row.val_ap) << ',' << format_double(row.val_mtta) << '\n';
    }
    if (!out) throw io_error("write failed: " + path);
}

} // namespace foresight
