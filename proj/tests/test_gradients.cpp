#include <doctest.h>

#include "oracles.hpp"

using namespace foresight;

namespace {

// One positive and one negative tiny episode under the given config.
std::pair<Dataset, std::vector<std::size_t>> tiny_batch(const TrainConfig& cfg,
                                                        RandomStream& rng) {
    const GenConfig g = oracles::small_gen_config(cfg, rng);
    Dataset ds = gen_synthetic(g, rng.engine()());
    return {std::move(ds), {0, 1}};
}

} // namespace

TEST_CASE("analytic gradients match finite differences on random small configs") {
    RandomStream rng(2024);
    for (int trial = 0; trial < 8; ++trial) {
        TrainConfig cfg = oracles::small_config(rng);
        auto [ds, indices] = tiny_batch(cfg, rng);
        const ModelParameters params =
            init_parameters(cfg.model, derive_seed(cfg.seed, seed_tag::init));
        const oracles::GradCheckReport rep =
            oracles::gradient_check(ds, indices, params, cfg);
        INFO("trial ", trial, " worst tensor ", rep.worst_tensor, " rel err ",
             rep.max_rel_err);
        CHECK(rep.max_rel_err < 1e-4);
        CHECK(rep.checked > 0);
    }
}

TEST_CASE("gradcheck holds under each module ablation") {
    RandomStream rng(3033);
    for (int which = 0; which < 5; ++which) {
        TrainConfig cfg = oracles::small_config(rng);
        cfg.loss.aux_diffusion_weight = 0.0;
        cfg.model.step_embedding = false;
        switch (which) {
            case 0: cfg.ablation.object_aware = false; break;
            case 1: cfg.ablation.time_weight = false; break;
            case 2: cfg.ablation.image_diffusion = false; break;
            case 3: cfg.ablation.object_diffusion = false; break;
            case 4:
                cfg.ablation.anticipation_loss = false;
                break;
        }
        auto [ds, indices] = tiny_batch(cfg, rng);
        const ModelParameters params =
            init_parameters(cfg.model, derive_seed(cfg.seed, seed_tag::init));
        const oracles::GradCheckReport rep =
            oracles::gradient_check(ds, indices, params, cfg);
        INFO("ablation ", which, " worst tensor ", rep.worst_tensor, " rel err ",
             rep.max_rel_err);
        CHECK(rep.max_rel_err < 1e-4);
    }
}

TEST_CASE("gradcheck covers the auxiliary reconstruction term") {
    RandomStream rng(4044);
    TrainConfig cfg = oracles::small_config(rng);
    cfg.loss.aux_diffusion_weight = 0.5;
    auto [ds, indices] = tiny_batch(cfg, rng);
    const ModelParameters params =
        init_parameters(cfg.model, derive_seed(cfg.seed, seed_tag::init));
    const oracles::GradCheckReport rep =
        oracles::gradient_check(ds, indices, params, cfg);
    INFO("worst tensor ", rep.worst_tensor, " rel err ", rep.max_rel_err);
    CHECK(rep.max_rel_err < 1e-4);
}

TEST_CASE("gradcheck covers step embeddings") {
    RandomStream rng(5055);
    TrainConfig cfg = oracles::small_config(rng);
    cfg.model.step_embedding = true;
    auto [ds, indices] = tiny_batch(cfg, rng);
    const ModelParameters params =
        init_parameters(cfg.model, derive_seed(cfg.seed, seed_tag::init));
    const oracles::GradCheckReport rep =
        oracles::gradient_check(ds, indices, params, cfg);
    INFO("worst tensor ", rep.worst_tensor, " rel err ", rep.max_rel_err);
    CHECK(rep.max_rel_err < 1e-4);
}

TEST_CASE("critic-only gradient at zero parameters is -mean(normalized reward)") {
    TrainConfig cfg;
    cfg.model.d_img = 3;
    cfg.model.d_obj = 3;
    cfg.model.num_objects = 2;
    cfg.model.d_att = 2;
    cfg.model.d_hidden = 3;
    cfg.model.d_head = 2;
    cfg.ablation.anticipation_loss = false;
    cfg.ablation.actor_loss = false;
    cfg.loss.alpha = 1.0; // critic enters the total with coefficient alpha*beta
    cfg.loss.beta = 1.0;
    cfg.seed = 99;
    cfg.threads = 1;

    RandomStream rng(6066);
    GenConfig g = oracles::small_gen_config(cfg, rng);
    g.frames = 4;
    g.tau_max = 4;
    const Dataset ds = gen_synthetic(g, 1234);

    const ModelParameters params = make_parameters(cfg.model); // all zeros
    const DiffusionSchedule schedule = cfg.model.schedule();
    std::vector<EpisodeRollout> batch;
    for (std::size_t idx : {std::size_t{0}, std::size_t{1}})
        batch.push_back(rollout(ds.features(idx), ds.label(idx), params, cfg, schedule,
                                derive_seed(cfg.seed, 1, idx),
                                RolloutMode::train_sampled));
    normalize_batch_rewards(batch, cfg.reward.epsilon);

    double mean_norm = 0.0;
    std::size_t count = 0;
    for (const EpisodeRollout& ep : batch) {
        // per-episode frame mean first, then batch mean, matching the loss
        double ep_mean = 0.0;
        for (double r : ep.trace.reward_norm) ep_mean += r;
        mean_norm += ep_mean / static_cast<double>(ep.trace.frames());
        ++count;
    }
    mean_norm /= static_cast<double>(count);

    const ModelParameters grads = compute_gradients(batch, params, cfg, schedule);
    CHECK(std::abs(grads.actor_critic.b_value[0] - (-mean_norm)) < 1e-12);
}

TEST_CASE("duplicated episodes contribute identical gradients") {
    RandomStream rng(7077);
    TrainConfig cfg = oracles::small_config(rng);
    cfg.ablation = AblationSwitches{};
    GenConfig g = oracles::small_gen_config(cfg, rng);
    const Dataset ds = gen_synthetic(g, 777);
    const ModelParameters params =
        init_parameters(cfg.model, derive_seed(cfg.seed, seed_tag::init));
    const DiffusionSchedule schedule = cfg.model.schedule();

    EpisodeRollout ep = rollout(ds.features(0), ds.label(0), params, cfg, schedule,
                                55, RolloutMode::train_sampled);
    std::vector<EpisodeRollout> once;
    once.push_back(ep);
    normalize_batch_rewards(once, cfg.reward.epsilon);
    std::vector<EpisodeRollout> twice;
    twice.push_back(ep);
    twice.push_back(ep);
    normalize_batch_rewards(twice, cfg.reward.epsilon);

    const ModelParameters g1 = compute_gradients(once, params, cfg, schedule);
    const ModelParameters g2 = compute_gradients(twice, params, cfg, schedule);
    auto r1 = tensor_refs(g1);
    auto r2 = tensor_refs(g2);
    for (std::size_t i = 0; i < r1.size(); ++i)
        for (std::size_t j = 0; j < r1[i].data->size(); ++j)
            CHECK((*r1[i].data)[j] == doctest::Approx((*r2[i].data)[j]).epsilon(1e-14));
}

TEST_CASE("non-finite gradients raise a numeric error naming the tensor") {
    TrainConfig cfg;
    cfg.model.d_img = 2;
    cfg.model.d_obj = 2;
    cfg.model.num_objects = 1;
    cfg.model.d_att = 2;
    cfg.model.d_hidden = 2;
    cfg.model.d_head = 2;
    cfg.threads = 1;
    RandomStream rng(8088);
    GenConfig g = oracles::small_gen_config(cfg, rng);
    const Dataset ds = gen_synthetic(g, 31);
    ModelParameters params = init_parameters(cfg.model, 3);
    const DiffusionSchedule schedule = cfg.model.schedule();
    std::vector<EpisodeRollout> batch;
    batch.push_back(rollout(ds.features(0), ds.label(0), params, cfg, schedule, 5,
                            RolloutMode::train_sampled));
    normalize_batch_rewards(batch, cfg.reward.epsilon);
    // poison a recorded value so the backward pass produces NaN
    batch[0].trace.value[0] = std::nan("");
    try {
        compute_gradients(batch, params, cfg, schedule);
        FAIL("expected numeric_error");
    } catch (const numeric_error& e) {
        CHECK(std::string(e.what()).find("value") != std::string::npos);
    }
}
