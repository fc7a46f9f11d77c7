// Experiment harnesses: noise-robustness evaluation of a trained
// checkpoint, module-ablation training runs cross-tabulated with the
// Gaussian grid, and the reward/penalty scaling sweep.

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "foresight/trainer.hpp"

namespace foresight {

namespace seed_tag {
inline constexpr std::uint64_t gaussian_noise = 0x6a55e;
inline constexpr std::uint64_t impulse_noise = 0x1a975;
} // namespace seed_tag

inline const std::vector<double>& default_gaussian_levels() {
    static const std::vector<double> levels = {0.0, 0.5, 1.0, 5.0, 10.0, 20.0};
    return levels;
}

inline const std::vector<double>& default_impulse_levels() {
    static const std::vector<double> levels = {0.0, 0.1, 0.2, 0.3, 0.5};
    return levels;
}

inline std::string level_label(double level) {
    if (level == 0.0) return "original";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", level);
    return buf;
}

struct SweepRow {
    std::string label;
    double ap = 0.0;
    double mtta = 0.0;
};

struct NoiseSweepResult {
    std::vector<double> gaussian_levels;
    std::vector<double> impulse_levels;
    std::vector<SweepRow> gaussian;
    std::vector<SweepRow> impulse;
};

namespace detail {

// Corrupts only the selected videos, preserving their dataset positions
// so evaluation seeds match the clean run exactly.
enum class NoiseKind { gaussian, impulse };

inline Dataset corrupt_subset(const Dataset& ds, const std::vector<std::size_t>& indices,
                              NoiseKind kind, double level, double impulse_magnitude,
                              std::uint64_t seed, std::size_t level_idx) {
    Dataset out = ds;
    if (level == 0.0) return out;
    for (std::size_t idx : indices) {
        const std::uint64_t tag = kind == NoiseKind::gaussian
                                      ? seed_tag::gaussian_noise
                                      : seed_tag::impulse_noise;
        const std::uint64_t s = derive_seed(seed, tag, level_idx, idx);
        out.scenarios[idx].features =
            kind == NoiseKind::gaussian
                ? inject_gaussian(ds.features(idx), level, s)
                : inject_impulse(ds.features(idx), level, impulse_magnitude, s);
    }
    return out;
}

inline SweepRow evaluate_row(const Dataset& ds, const std::vector<std::size_t>& indices,
                             const ModelParameters& params, const TrainConfig& cfg,
                             const DiffusionSchedule& schedule, std::string label) {
    const EvalResult res = evaluate_subset(ds, indices, params, cfg, schedule);
    std::vector<double> scores;
    std::vector<int> labels;
    for (const PredictionRecord& rec : res.records) {
        scores.push_back(video_score(rec));
        labels.push_back(rec.positive ? 1 : 0);
    }
    SweepRow row;
    row.label = std::move(label);
    row.ap = average_precision(scores, labels);
    row.mtta = mtta(res.records, default_threshold_grid());
    return row;
}

} // namespace detail

// Re-evaluates a trained model on corrupted copies of the selected
// videos across the Gaussian and impulse grids. Level 0 rows are the
// clean evaluation, bit for bit.
inline NoiseSweepResult sweep_noise(const ModelParameters& params,
                                    const TrainConfig& cfg, const Dataset& ds,
                                    const std::vector<std::size_t>& indices,
                                    double impulse_magnitude, std::uint64_t noise_seed,
                                    const std::vector<double>& gaussian_levels =
                                        default_gaussian_levels(),
                                    const std::vector<double>& impulse_levels =
                                        default_impulse_levels()) {
    const DiffusionSchedule schedule = cfg.model.schedule();
    NoiseSweepResult result;
    result.gaussian_levels = gaussian_levels;
    result.impulse_levels = impulse_levels;
    for (std::size_t li = 0; li < gaussian_levels.size(); ++li) {
        const Dataset corrupted =
            detail::corrupt_subset(ds, indices, detail::NoiseKind::gaussian,
                                   gaussian_levels[li], impulse_magnitude,
                                   noise_seed, li);
        result.gaussian.push_back(detail::evaluate_row(
            corrupted, indices, params, cfg, schedule, level_label(gaussian_levels[li])));
    }
    for (std::size_t li = 0; li < impulse_levels.size(); ++li) {
        const Dataset corrupted =
            detail::corrupt_subset(ds, indices, detail::NoiseKind::impulse,
                                   impulse_levels[li], impulse_magnitude,
                                   noise_seed, li);
        result.impulse.push_back(detail::evaluate_row(
            corrupted, indices, params, cfg, schedule, level_label(impulse_levels[li])));
    }
    return result;
}

// --- Ablation sweep -----------------------------------------------------------

struct AblationVariant {
    std::string label;
    AblationSwitches switches;
};

inline std::vector<AblationVariant> module_ablation_variants() {
    std::vector<AblationVariant> v;
    AblationSwitches base;
    v.push_back({"full", base});
    {
        AblationSwitches s = base;
        s.object_aware = false;
        v.push_back({"wo_object_aware", s});
    }
    {
        AblationSwitches s = base;
        s.time_weight = false;
        v.push_back({"wo_time_weight", s});
    }
    {
        AblationSwitches s = base;
        s.anticipation_loss = false;
        v.push_back({"wo_anticipation_loss", s});
    }
    {
        AblationSwitches s = base;
        s.actor_loss = false;
        v.push_back({"wo_policy_loss", s});
    }
    {
        AblationSwitches s = base;
        s.critic_loss = false;
        v.push_back({"wo_value_loss", s});
    }
    return v;
}

inline std::vector<AblationVariant> diffusion_ablation_variants() {
    std::vector<AblationVariant> v;
    AblationSwitches base;
    v.push_back({"full", base});
    {
        AblationSwitches s = base;
        s.image_diffusion = false;
        v.push_back({"wo_image_diffusion", s});
    }
    {
        AblationSwitches s = base;
        s.object_diffusion = false;
        v.push_back({"wo_object_diffusion", s});
    }
    {
        AblationSwitches s = base;
        s.image_diffusion = false;
        s.object_diffusion = false;
        v.push_back({"wo_all_diffusion", s});
    }
    return v;
}

struct AblationSweepResult {
    std::vector<SweepRow> modules; // clean evaluation per module variant
    std::vector<double> gaussian_levels;
    std::vector<std::string> diffusion_variants;
    // noise_cells[level][variant] = (ap, mtta)
    std::vector<std::vector<std::pair<double, double>>> noise_cells;
};

// Trains each "w/o" variant from the same seed and cross-tabulates the
// diffusion variants against the Gaussian grid.
inline AblationSweepResult sweep_ablation(const Dataset& ds, const TrainConfig& base,
                                          double impulse_magnitude,
                                          std::uint64_t noise_seed) {
    AblationSweepResult result;
    result.gaussian_levels = default_gaussian_levels();

    std::vector<std::size_t> train_idx, val_idx;
    split_dataset(ds, base.val_fraction, base.seed, train_idx, val_idx);

    for (const AblationVariant& variant : module_ablation_variants()) {
        TrainConfig cfg = base;
        cfg.ablation = variant.switches;
        const TrainResult tr = train(ds, cfg);
        const DiffusionSchedule schedule = cfg.model.schedule();
        result.modules.push_back(detail::evaluate_row(
            ds, val_idx, tr.checkpoint.params, cfg, schedule, variant.label));
    }

    for (const AblationVariant& variant : diffusion_ablation_variants()) {
        TrainConfig cfg = base;
        cfg.ablation = variant.switches;
        const TrainResult tr = train(ds, cfg);
        const DiffusionSchedule schedule = cfg.model.schedule();
        result.diffusion_variants.push_back(variant.label);
        for (std::size_t li = 0; li < result.gaussian_levels.size(); ++li) {
            const Dataset corrupted = detail::corrupt_subset(
                ds, val_idx, detail::NoiseKind::gaussian, result.gaussian_levels[li],
                impulse_magnitude, noise_seed, li);
            const SweepRow row =
                detail::evaluate_row(corrupted, val_idx, tr.checkpoint.params, cfg,
                                     schedule, level_label(result.gaussian_levels[li]));
            if (result.noise_cells.size() <= li) result.noise_cells.resize(li + 1);
            result.noise_cells[li].emplace_back(row.ap, row.mtta);
        }
    }
    return result;
}

// --- Reward/penalty sweep --------------------------------------------------------

struct RewardSweepRow {
    double reward_mult = 1.0;
    double penalty_mult = 1.0;
    double ap = 0.0;
    double mtta = 0.0;
};

inline std::vector<std::pair<double, double>> default_reward_grid() {
    return {{1.0, 1.0},  {10.0, 1.0}, {50.0, 1.0}, {0.1, 1.0},
            {0.02, 1.0}, {1.0, 10.0}, {1.0, 0.1}};
}

// Trains one model per (reward multiplier, penalty multiplier) cell; the
// multipliers scale the correct-action reward magnitude and the penalty.
inline std::vector<RewardSweepRow> sweep_reward(
    const Dataset& ds, const TrainConfig& base,
    const std::vector<std::pair<double, double>>& grid = default_reward_grid()) {
    std::vector<std::size_t> train_idx, val_idx;
    split_dataset(ds, base.val_fraction, base.seed, train_idx, val_idx);

    std::vector<RewardSweepRow> rows;
    for (const auto& [reward_mult, penalty_mult] : grid) {
        TrainConfig cfg = base;
        cfg.reward.reward_scale = base.reward.reward_scale * reward_mult;
        cfg.reward.penalty_scale = base.reward.penalty_scale * penalty_mult;
        const TrainResult tr = train(ds, cfg);
        const DiffusionSchedule schedule = cfg.model.schedule();
        const SweepRow cell = detail::evaluate_row(ds, val_idx, tr.checkpoint.params,
                                                   cfg, schedule, "");
        rows.push_back({reward_mult, penalty_mult, cell.ap, cell.mtta});
    }
    return rows;
}

} // namespace foresight
