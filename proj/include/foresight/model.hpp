// ModelConfig pins every learnable shape; ModelParameters aggregates the
// attention, denoiser, temporal, and actor-critic tensors and exposes a
// flat named-tensor view used by the optimizer, the checkpoint format,
// and the finite-difference harness.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "foresight/attention.hpp"
#include "foresight/decision.hpp"
#include "foresight/diffusion.hpp"
#include "foresight/errors.hpp"
#include "foresight/rng.hpp"
#include "foresight/temporal.hpp"

namespace foresight {

struct ModelConfig {
    std::size_t d_img = 64;
    std::size_t d_obj = 64;
    std::size_t num_objects = 5; // K, echoed from the data
    std::size_t d_att = 64;
    std::size_t d_hidden = 64;
    std::size_t d_head = 64;
    std::size_t actions = 2;
    std::size_t diffusion_steps = 10;
    double beta_start = 0.001;
    double beta_end = 0.02;
    double fusion_lambda = 0.15;
    bool step_embedding = false;

    std::size_t gru_input_dim() const { return d_img + d_obj; }

    void validate() const {
        if (d_img == 0 || d_obj == 0 || d_att == 0 || d_hidden == 0 || d_head == 0)
            throw config_error("model: dimensions must be positive");
        if (num_objects == 0) throw config_error("model: num_objects must be >= 1");
        if (actions < 2) throw config_error("model: need at least two actions");
        if (diffusion_steps == 0)
            throw config_error("model: diffusion_steps must be >= 1");
        if (fusion_lambda < 0.0)
            throw config_error("model: fusion_lambda must be >= 0");
        // endpoint ordering checked by build_schedule
    }

    DiffusionSchedule schedule() const {
        return build_schedule(diffusion_steps, beta_start, beta_end);
    }

    // Deterministic evaluation runs the enhancement at a fixed mid step.
    std::size_t eval_timestep() const { return diffusion_steps / 2; }
};

struct ModelParameters {
    AttentionParams attention;
    DenoiserParams image_denoiser;
    DenoiserParams object_denoiser;
    TemporalParams temporal;
    ActorCriticParams actor_critic;
};

// Flat view over every learnable tensor; vectors report cols == 1.
struct TensorRef {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double>* data = nullptr;
};

inline std::vector<TensorRef> tensor_refs(ModelParameters& p) {
    std::vector<TensorRef> refs;
    auto mat = [&](const char* name, Matrix& m) {
        refs.push_back({name, m.rows(), m.cols(), &m.raw()});
    };
    auto vec = [&](const char* name, Vector& v) {
        refs.push_back({name, v.size(), 1, &v});
    };

    mat("attention.w_state", p.attention.w_state);
    mat("attention.w_object", p.attention.w_object);
    vec("attention.bias", p.attention.bias);
    vec("attention.w_score", p.attention.w_score);

    auto denoiser = [&](const std::string& prefix, DenoiserParams& d) {
        refs.push_back({prefix + ".w1", d.w1.rows(), d.w1.cols(), &d.w1.raw()});
        refs.push_back({prefix + ".b1", d.b1.size(), 1, &d.b1});
        refs.push_back({prefix + ".w2", d.w2.rows(), d.w2.cols(), &d.w2.raw()});
        refs.push_back({prefix + ".b2", d.b2.size(), 1, &d.b2});
        if (d.has_step_embedding())
            refs.push_back({prefix + ".step_embedding", d.step_embedding.rows(),
                            d.step_embedding.cols(), &d.step_embedding.raw()});
    };
    denoiser("image_denoiser", p.image_denoiser);
    denoiser("object_denoiser", p.object_denoiser);

    mat("gru.w_update", p.temporal.gru.w_update);
    mat("gru.w_reset", p.temporal.gru.w_reset);
    mat("gru.w_cand", p.temporal.gru.w_cand);
    mat("gru.u_update", p.temporal.gru.u_update);
    mat("gru.u_reset", p.temporal.gru.u_reset);
    mat("gru.u_cand", p.temporal.gru.u_cand);
    vec("gru.b_update", p.temporal.gru.b_update);
    vec("gru.b_reset", p.temporal.gru.b_reset);
    vec("gru.b_cand", p.temporal.gru.b_cand);

    mat("prob_head.w1", p.temporal.prob.w1);
    vec("prob_head.b1", p.temporal.prob.b1);
    mat("prob_head.w2", p.temporal.prob.w2);
    vec("prob_head.b2", p.temporal.prob.b2);

    vec("time_weight.w", p.temporal.time_weight.w);
    vec("time_weight.b", p.temporal.time_weight.b);

    mat("policy.w", p.actor_critic.w_policy);
    vec("policy.b", p.actor_critic.b_policy);
    vec("value.w", p.actor_critic.w_value);
    vec("value.b", p.actor_critic.b_value);

    return refs;
}

inline std::vector<TensorRef> tensor_refs(const ModelParameters& p) {
    return tensor_refs(const_cast<ModelParameters&>(p));
}

// Zero-valued parameter set with the shapes implied by the config.
inline ModelParameters make_parameters(const ModelConfig& cfg) {
    cfg.validate();
    ModelParameters p;
    p.attention.w_state = Matrix(cfg.d_att, cfg.d_hidden);
    p.attention.w_object = Matrix(cfg.d_att, cfg.d_obj);
    p.attention.bias.assign(cfg.d_att, 0.0);
    p.attention.w_score.assign(cfg.d_att, 0.0);

    auto denoiser = [&](std::size_t d) {
        DenoiserParams dn;
        dn.w1 = Matrix(d, d);
        dn.b1.assign(d, 0.0);
        dn.w2 = Matrix(d, d);
        dn.b2.assign(d, 0.0);
        if (cfg.step_embedding) dn.step_embedding = Matrix(cfg.diffusion_steps, d);
        return dn;
    };
    p.image_denoiser = denoiser(cfg.d_img);
    p.object_denoiser = denoiser(cfg.d_obj);

    const std::size_t dx = cfg.gru_input_dim();
    const std::size_t dh = cfg.d_hidden;
    p.temporal.gru.w_update = Matrix(dh, dx);
    p.temporal.gru.w_reset = Matrix(dh, dx);
    p.temporal.gru.w_cand = Matrix(dh, dx);
    p.temporal.gru.u_update = Matrix(dh, dh);
    p.temporal.gru.u_reset = Matrix(dh, dh);
    p.temporal.gru.u_cand = Matrix(dh, dh);
    p.temporal.gru.b_update.assign(dh, 0.0);
    p.temporal.gru.b_reset.assign(dh, 0.0);
    p.temporal.gru.b_cand.assign(dh, 0.0);

    p.temporal.prob.w1 = Matrix(cfg.d_head, dh);
    p.temporal.prob.b1.assign(cfg.d_head, 0.0);
    p.temporal.prob.w2 = Matrix(2, cfg.d_head);
    p.temporal.prob.b2.assign(2, 0.0);

    p.temporal.time_weight.w.assign(dh, 0.0);
    p.temporal.time_weight.b.assign(1, 0.0);

    p.actor_critic.w_policy = Matrix(cfg.actions, dh);
    p.actor_critic.b_policy.assign(cfg.actions, 0.0);
    p.actor_critic.w_value.assign(dh, 0.0);
    p.actor_critic.b_value.assign(1, 0.0);
    return p;
}

// Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)]; biases share their
// layer's fan-in bound. Draw order is the tensor_refs order, so the
// result is a pure function of (config, seed).
inline ModelParameters init_parameters(const ModelConfig& cfg, std::uint64_t seed) {
    ModelParameters p = make_parameters(cfg);
    RandomStream rng(derive_seed(seed, 0x1217));
    auto refs = tensor_refs(p);
    // fan-in of the layer each tensor belongs to, keyed by tensor_refs order
    for (TensorRef& ref : refs) {
        std::size_t fan_in = ref.cols > 1 ? ref.cols : 0;
        if (fan_in == 0) {
            // vectors: use the matching layer input width
            if (ref.name.rfind("attention", 0) == 0) fan_in = cfg.d_obj;
            else if (ref.name.rfind("image_denoiser", 0) == 0) fan_in = cfg.d_img;
            else if (ref.name.rfind("object_denoiser", 0) == 0) fan_in = cfg.d_obj;
            else if (ref.name.rfind("gru", 0) == 0) fan_in = cfg.gru_input_dim();
            else if (ref.name == "prob_head.b1") fan_in = cfg.d_hidden;
            else if (ref.name == "prob_head.b2") fan_in = cfg.d_head;
            else fan_in = cfg.d_hidden;
        }
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (double& v : *ref.data) v = (2.0 * rng.uniform01() - 1.0) * bound;
    }
    return p;
}

// Elementwise helpers over whole parameter sets -------------------------------

inline void fill_parameters(ModelParameters& p, double value) {
    for (TensorRef& ref : tensor_refs(p))
        std::fill(ref.data->begin(), ref.data->end(), value);
}

inline void accumulate(ModelParameters& into, const ModelParameters& from,
                       double scale = 1.0) {
    auto dst = tensor_refs(into);
    auto src = tensor_refs(from);
    for (std::size_t i = 0; i < dst.size(); ++i) {
        const std::vector<double>& s = *src[i].data;
        std::vector<double>& d = *dst[i].data;
        for (std::size_t j = 0; j < d.size(); ++j) d[j] += scale * s[j];
    }
}

inline void scale_parameters(ModelParameters& p, double scale) {
    for (TensorRef& ref : tensor_refs(p))
        for (double& v : *ref.data) v *= scale;
}

// Throws numeric_error naming the first offending tensor.
inline void check_finite(const ModelParameters& grads, const char* context) {
    for (const TensorRef& ref : tensor_refs(grads)) {
        for (double v : *ref.data) {
            if (!std::isfinite(v))
                throw numeric_error(std::string(context) +
                                    ": non-finite value in tensor " + ref.name);
        }
    }
}

} // namespace foresight
