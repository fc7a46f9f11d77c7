// foresight CLI: dataset generation, training, evaluation, sweep tables,
// and probability-timeline plots. Exit codes: 0 success, 2 usage or
// configuration error, 1 runtime error.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "foresight/config.hpp"
#include "foresight/plot.hpp"
#include "foresight/report.hpp"
#include "foresight/sweeps.hpp"

namespace fs = std::filesystem;
using namespace foresight;

namespace {

struct CommonOut {
    std::string out_dir;
    bool no_timestamp = false;
};

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw io_error("cannot create directory " + dir + ": " + ec.message());
}

// Model data dimensions always follow the dataset header.
void adopt_data_dims(TrainConfig& cfg, const Dataset& ds) {
    const FeatureSequence& fs0 = ds.features(0);
    cfg.model.d_img = fs0.d_img;
    cfg.model.d_obj = fs0.d_obj;
    cfg.model.num_objects = fs0.num_objects;
}

std::vector<std::size_t> select_split(const Dataset& ds, const TrainConfig& cfg,
                                      const std::string& split) {
    std::vector<std::size_t> train_idx, val_idx;
    split_dataset(ds, cfg.val_fraction, cfg.seed, train_idx, val_idx);
    if (split == "train") return train_idx;
    if (split == "val") return val_idx;
    if (split == "all") {
        std::vector<std::size_t> all(ds.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        return all;
    }
    throw config_error("unknown split '" + split + "' (expected train, val, or all)");
}

struct NoiseSpec {
    enum class Kind { none, gaussian, impulse } kind = Kind::none;
    double level = 0.0;
};

NoiseSpec parse_noise_spec(const std::string& s) {
    NoiseSpec spec;
    if (s.empty()) return spec;
    const std::size_t colon = s.find(':');
    if (colon == std::string::npos)
        throw config_error("--noise expects 'gaussian:SIGMA' or 'impulse:FRACTION'");
    const std::string kind = s.substr(0, colon);
    spec.level = parse_double(s.substr(colon + 1), "--noise level");
    if (kind == "gaussian") spec.kind = NoiseSpec::Kind::gaussian;
    else if (kind == "impulse") spec.kind = NoiseSpec::Kind::impulse;
    else throw config_error("--noise kind must be gaussian or impulse");
    return spec;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"foresight: accident anticipation on feature sequences"};
    app.require_subcommand(1);

    // ---- gen ----
    auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic dataset");
    std::string gen_preset, gen_config_path, gen_out;
    std::uint64_t gen_seed = 42;
    auto* gen_preset_opt = gen_cmd->add_option("--preset", gen_preset,
                                               "dad-like, ccd-like, or full-scale");
    auto* gen_config_opt = gen_cmd->add_option("--config", gen_config_path,
                                               "config file (key = value lines)");
    gen_cmd->add_option("--seed", gen_seed, "generation seed");
    gen_cmd->add_option("--out", gen_out, "output dataset file")->required();
    std::size_t g_npos = 0, g_nneg = 0, g_frames = 0, g_dimg = 0, g_dobj = 0,
                g_objects = 0, g_cue = 0, g_ramp = 0, g_tmin = 0, g_tmax = 0;
    double g_fps = 0, g_slope = 0, g_floor = 0;
    auto* o_npos = gen_cmd->add_option("--n-pos", g_npos, "positive sequences");
    auto* o_nneg = gen_cmd->add_option("--n-neg", g_nneg, "negative sequences");
    auto* o_frames = gen_cmd->add_option("--frames", g_frames, "frames per sequence");
    auto* o_fps = gen_cmd->add_option("--fps", g_fps, "frames per second");
    auto* o_dimg = gen_cmd->add_option("--d-img", g_dimg, "image feature dim");
    auto* o_dobj = gen_cmd->add_option("--d-obj", g_dobj, "object feature dim");
    auto* o_objects = gen_cmd->add_option("--objects", g_objects, "objects per frame");
    auto* o_cue = gen_cmd->add_option("--cue-dim", g_cue, "planted cue subspace dim");
    auto* o_ramp = gen_cmd->add_option("--ramp-start", g_ramp,
                                       "frames before the accident the cue starts");
    auto* o_slope = gen_cmd->add_option("--ramp-slope", g_slope, "cue drift per frame");
    auto* o_floor = gen_cmd->add_option("--noise-floor", g_floor, "background noise std");
    auto* o_tmin = gen_cmd->add_option("--tau-min", g_tmin, "earliest accident frame");
    auto* o_tmax = gen_cmd->add_option("--tau-max", g_tmax, "latest accident frame");

    // ---- shared train-style options ----
    struct TrainFlags {
        std::string data, out_dir, config_path, resume_path;
        bool no_timestamp = false;
        std::size_t epochs = 0, batch = 0, window = 0, threads = 0;
        std::size_t d_att = 0, d_hidden = 0, d_head = 0, diff_steps = 0;
        double lr = 0, alpha = 0, beta = 0, lambda_e = 0, neg_scale = 0;
        double reward_decay = 0, penalty = 0, reward_scale = 0, penalty_scale = 0;
        double beta_start = 0, beta_end = 0, fusion_lambda = 0, aux_weight = 0;
        double val_fraction = 0;
        long long label_window = 0;
        std::uint64_t seed = 0;
        bool no_object_aware = false, no_time_weight = false;
        bool no_image_diffusion = false, no_object_diffusion = false;
        bool no_anticipation = false, no_actor = false, no_critic = false;
        bool step_embedding = false;
        CLI::Option *o_epochs{}, *o_batch{}, *o_window{}, *o_threads{}, *o_lr{},
            *o_alpha{}, *o_beta{}, *o_lambda_e{}, *o_neg_scale{}, *o_reward_decay{},
            *o_penalty{}, *o_reward_scale{}, *o_penalty_scale{}, *o_seed{},
            *o_d_att{}, *o_d_hidden{}, *o_d_head{}, *o_diff_steps{}, *o_beta_start{},
            *o_beta_end{}, *o_fusion_lambda{}, *o_aux{}, *o_val_fraction{},
            *o_label_window{}, *o_config{};
    };

    auto add_train_flags = [](CLI::App* cmd, TrainFlags& f, bool with_out) {
        cmd->add_option("--data", f.data, "dataset file")->required();
        if (with_out)
            cmd->add_option("--out-dir", f.out_dir, "output directory")->required();
        f.o_config = cmd->add_option("--config", f.config_path, "config file");
        cmd->add_flag("--no-timestamp", f.no_timestamp,
                      "omit the timestamp from the manifest");
        f.o_epochs = cmd->add_option("--epochs", f.epochs, "training epochs");
        f.o_batch = cmd->add_option("--batch", f.batch, "episodes per minibatch");
        f.o_lr = cmd->add_option("--lr", f.lr, "initial learning rate");
        f.o_seed = cmd->add_option("--seed", f.seed, "master seed");
        f.o_window = cmd->add_option("--window", f.window,
                                     "history window W (0 = frame-level baseline)");
        f.o_threads = cmd->add_option("--threads", f.threads,
                                      "worker threads (0 = hardware)");
        f.o_val_fraction =
            cmd->add_option("--val-fraction", f.val_fraction, "validation fraction");
        f.o_alpha = cmd->add_option("--alpha", f.alpha, "actor-critic block weight");
        f.o_beta = cmd->add_option("--beta", f.beta, "critic weight inside the block");
        f.o_lambda_e = cmd->add_option("--lambda-e", f.lambda_e, "entropy weight");
        f.o_neg_scale =
            cmd->add_option("--neg-scale", f.neg_scale, "negative-sample CE scale");
        f.o_reward_decay =
            cmd->add_option("--reward-decay", f.reward_decay, "reward decay (frames)");
        f.o_penalty = cmd->add_option("--penalty", f.penalty, "incorrect-action reward");
        f.o_reward_scale =
            cmd->add_option("--reward-scale", f.reward_scale, "reward multiplier");
        f.o_penalty_scale =
            cmd->add_option("--penalty-scale", f.penalty_scale, "penalty multiplier");
        f.o_label_window = cmd->add_option(
            "--label-window", f.label_window,
            "frames before the accident labeled warn-worthy (-1 = whole video)");
        f.o_d_att = cmd->add_option("--d-att", f.d_att, "attention energy dim");
        f.o_d_hidden = cmd->add_option("--d-hidden", f.d_hidden, "GRU hidden dim");
        f.o_d_head = cmd->add_option("--d-head", f.d_head, "probability head dim");
        f.o_diff_steps =
            cmd->add_option("--diff-steps", f.diff_steps, "diffusion steps");
        f.o_beta_start = cmd->add_option("--beta-start", f.beta_start, "schedule start");
        f.o_beta_end = cmd->add_option("--beta-end", f.beta_end, "schedule end");
        f.o_fusion_lambda = cmd->add_option("--fusion-lambda", f.fusion_lambda,
                                            "residual fusion coefficient");
        f.o_aux = cmd->add_option("--aux-diffusion-weight", f.aux_weight,
                                  "optional denoiser reconstruction weight");
        cmd->add_flag("--step-embedding", f.step_embedding,
                      "enable denoiser step embeddings");
        cmd->add_flag("--no-object-aware", f.no_object_aware,
                      "disable the object-aware module");
        cmd->add_flag("--no-time-weight", f.no_time_weight,
                      "disable the time-weight layer");
        cmd->add_flag("--no-image-diffusion", f.no_image_diffusion,
                      "disable image feature enhancement");
        cmd->add_flag("--no-object-diffusion", f.no_object_diffusion,
                      "disable object feature enhancement");
        cmd->add_flag("--no-anticipation-loss", f.no_anticipation,
                      "drop the anticipation loss");
        cmd->add_flag("--no-actor-loss", f.no_actor, "drop the policy-gradient loss");
        cmd->add_flag("--no-critic-loss", f.no_critic, "drop the value loss");
    };

    auto apply_train_flags = [](const TrainFlags& f, RunConfig& rc) {
        if (f.o_config->count()) load_config_file(f.config_path, rc);
        TrainConfig& c = rc.train;
        if (f.o_epochs->count()) c.epochs = f.epochs;
        if (f.o_batch->count()) c.batch_size = f.batch;
        if (f.o_lr->count()) c.learning_rate = f.lr;
        if (f.o_seed->count()) c.seed = f.seed;
        if (f.o_window->count()) c.history_window = f.window;
        if (f.o_threads->count()) c.threads = f.threads;
        if (f.o_val_fraction->count()) c.val_fraction = f.val_fraction;
        if (f.o_alpha->count()) c.loss.alpha = f.alpha;
        if (f.o_beta->count()) c.loss.beta = f.beta;
        if (f.o_lambda_e->count()) c.loss.entropy_weight = f.lambda_e;
        if (f.o_neg_scale->count()) c.loss.neg_scale = f.neg_scale;
        if (f.o_reward_decay->count()) c.reward.decay_tau = f.reward_decay;
        if (f.o_penalty->count()) c.reward.penalty_gamma = f.penalty;
        if (f.o_reward_scale->count()) c.reward.reward_scale = f.reward_scale;
        if (f.o_penalty_scale->count()) c.reward.penalty_scale = f.penalty_scale;
        if (f.o_label_window->count())
            c.reward.positive_label_window = f.label_window;
        if (f.o_d_att->count()) c.model.d_att = f.d_att;
        if (f.o_d_hidden->count()) c.model.d_hidden = f.d_hidden;
        if (f.o_d_head->count()) c.model.d_head = f.d_head;
        if (f.o_diff_steps->count()) c.model.diffusion_steps = f.diff_steps;
        if (f.o_beta_start->count()) c.model.beta_start = f.beta_start;
        if (f.o_beta_end->count()) c.model.beta_end = f.beta_end;
        if (f.o_fusion_lambda->count()) c.model.fusion_lambda = f.fusion_lambda;
        if (f.o_aux->count()) c.loss.aux_diffusion_weight = f.aux_weight;
        if (f.step_embedding) c.model.step_embedding = true;
        if (f.no_object_aware) c.ablation.object_aware = false;
        if (f.no_time_weight) c.ablation.time_weight = false;
        if (f.no_image_diffusion) c.ablation.image_diffusion = false;
        if (f.no_object_diffusion) c.ablation.object_diffusion = false;
        if (f.no_anticipation) c.ablation.anticipation_loss = false;
        if (f.no_actor) c.ablation.actor_loss = false;
        if (f.no_critic) c.ablation.critic_loss = false;
    };

    // ---- train ----
    auto* train_cmd = app.add_subcommand("train", "train a model on a dataset");
    TrainFlags tf;
    add_train_flags(train_cmd, tf, true);
    train_cmd->add_option("--resume", tf.resume_path, "checkpoint to resume from");

    // ---- eval ----
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    std::string ev_checkpoint, ev_data, ev_out, ev_split = "val", ev_noise;
    double ev_impulse_magnitude = 3.0;
    std::uint64_t ev_noise_seed = 1234;
    bool ev_no_timestamp = false;
    std::size_t ev_threads = 0;
    eval_cmd->add_option("--checkpoint", ev_checkpoint, "checkpoint file")->required();
    eval_cmd->add_option("--data", ev_data, "dataset file")->required();
    eval_cmd->add_option("--out-dir", ev_out, "output directory")->required();
    eval_cmd->add_option("--split", ev_split, "train, val, or all (default val)");
    eval_cmd->add_option("--noise", ev_noise, "gaussian:SIGMA or impulse:FRACTION");
    eval_cmd->add_option("--impulse-magnitude", ev_impulse_magnitude,
                         "impulse replacement magnitude");
    eval_cmd->add_option("--noise-seed", ev_noise_seed, "corruption seed");
    auto* ev_threads_opt =
        eval_cmd->add_option("--threads", ev_threads, "worker threads");
    eval_cmd->add_flag("--no-timestamp", ev_no_timestamp,
                       "omit the timestamp from the manifest");

    // ---- sweep ----
    auto* sweep_cmd = app.add_subcommand("sweep", "run an experiment sweep");
    sweep_cmd->require_subcommand(1);

    auto* sw_noise = sweep_cmd->add_subcommand("noise", "noise-robustness table");
    std::string swn_checkpoint, swn_data, swn_out, swn_split = "val";
    double swn_impulse_magnitude = 3.0;
    std::uint64_t swn_noise_seed = 1234;
    bool swn_no_timestamp = false;
    std::size_t swn_threads = 0;
    sw_noise->add_option("--checkpoint", swn_checkpoint, "checkpoint file")->required();
    sw_noise->add_option("--data", swn_data, "dataset file")->required();
    sw_noise->add_option("--out-dir", swn_out, "output directory")->required();
    sw_noise->add_option("--split", swn_split, "train, val, or all (default val)");
    sw_noise->add_option("--impulse-magnitude", swn_impulse_magnitude,
                         "impulse replacement magnitude");
    sw_noise->add_option("--noise-seed", swn_noise_seed, "corruption seed");
    auto* swn_threads_opt =
        sw_noise->add_option("--threads", swn_threads, "worker threads");
    sw_noise->add_flag("--no-timestamp", swn_no_timestamp,
                       "omit the timestamp from the manifest");

    auto* sw_ablation =
        sweep_cmd->add_subcommand("ablation", "module ablations x Gaussian grid");
    TrainFlags saf;
    add_train_flags(sw_ablation, saf, true);
    double swa_impulse_magnitude = 3.0;
    std::uint64_t swa_noise_seed = 1234;
    sw_ablation->add_option("--impulse-magnitude", swa_impulse_magnitude,
                            "impulse replacement magnitude");
    sw_ablation->add_option("--noise-seed", swa_noise_seed, "corruption seed");

    auto* sw_reward =
        sweep_cmd->add_subcommand("reward", "reward/penalty scaling table");
    TrainFlags srf;
    add_train_flags(sw_reward, srf, true);

    // ---- plot ----
    auto* plot_cmd = app.add_subcommand("plot", "probability timeline SVGs");
    std::string pl_checkpoint, pl_baseline, pl_data, pl_out, pl_split = "val";
    std::vector<std::size_t> pl_videos;
    double pl_threshold = 0.5;
    bool pl_no_timestamp = false;
    plot_cmd->add_option("--checkpoint", pl_checkpoint, "checkpoint file")->required();
    plot_cmd->add_option("--baseline-checkpoint", pl_baseline,
                         "second checkpoint rendered side by side");
    plot_cmd->add_option("--data", pl_data, "dataset file")->required();
    plot_cmd->add_option("--out-dir", pl_out, "output directory")->required();
    plot_cmd->add_option("--videos", pl_videos,
                         "video positions within the split (default: first 3)");
    plot_cmd->add_option("--split", pl_split, "train, val, or all (default val)");
    plot_cmd->add_option("--threshold", pl_threshold, "decision threshold line");
    plot_cmd->add_flag("--no-timestamp", pl_no_timestamp,
                       "omit the timestamp from the manifest");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen_cmd->parsed()) {
            RunConfig rc;
            if (gen_preset_opt->count()) apply_preset(rc, gen_preset);
            if (gen_config_opt->count()) load_config_file(gen_config_path, rc);
            GenConfig& g = rc.gen;
            if (o_npos->count()) g.n_pos = g_npos;
            if (o_nneg->count()) g.n_neg = g_nneg;
            if (o_frames->count()) g.frames = g_frames;
            if (o_fps->count()) g.fps = g_fps;
            if (o_dimg->count()) g.d_img = g_dimg;
            if (o_dobj->count()) g.d_obj = g_dobj;
            if (o_objects->count()) g.num_objects = g_objects;
            if (o_cue->count()) g.cue_dim = g_cue;
            if (o_ramp->count()) g.ramp_start = g_ramp;
            if (o_slope->count()) g.ramp_slope = g_slope;
            if (o_floor->count()) g.noise_floor = g_floor;
            if (o_tmin->count()) g.tau_min = g_tmin;
            if (o_tmax->count()) g.tau_max = g_tmax;
            const Dataset ds = gen_synthetic(g, gen_seed);
            save(ds, gen_out);
            std::cout << "wrote " << ds.size() << " sequences to " << gen_out << '\n';
        } else if (train_cmd->parsed()) {
            RunConfig rc;
            apply_train_flags(tf, rc);
            const Dataset ds = load(tf.data);
            adopt_data_dims(rc.train, ds);
            std::optional<Checkpoint> resume;
            if (!tf.resume_path.empty()) {
                resume = load_checkpoint(tf.resume_path);
                resume->config.epochs = rc.train.epochs;
                rc.train = resume->config;
            }
            ensure_dir(tf.out_dir);
            const TrainResult result =
                train(ds, rc.train, resume ? &*resume : nullptr);
            std::vector<std::string> artifacts;
            write_training_log(result.log, tf.out_dir + "/training_log.csv");
            artifacts.push_back("training_log.csv");
            save_checkpoint(result.checkpoint, tf.out_dir + "/checkpoint_final.txt");
            artifacts.push_back("checkpoint_final.txt");
            if (!result.log.empty()) {
                Checkpoint best = result.checkpoint;
                best.params = result.best_params;
                save_checkpoint(best, tf.out_dir + "/checkpoint_best.txt");
                artifacts.push_back("checkpoint_best.txt");
            }
            write_manifest(tf.out_dir, artifacts, !tf.no_timestamp);
            if (!result.log.empty()) {
                const EpochLog& last = result.log.back();
                std::cout << "trained " << result.log.size() << " epochs; final val AP "
                          << last.val_ap << ", val mTTA " << last.val_mtta
                          << " s (best AP " << result.best_ap << " at epoch "
                          << result.best_epoch << ")\n";
            } else {
                std::cout << "wrote initial checkpoint (0 epochs)\n";
            }
        } else if (eval_cmd->parsed()) {
            Checkpoint ck = load_checkpoint(ev_checkpoint);
            if (ev_threads_opt->count()) ck.config.threads = ev_threads;
            const Dataset ds = load(ev_data);
            check_dataset_matches_model(ds, ck.config.model);
            const std::vector<std::size_t> indices =
                select_split(ds, ck.config, ev_split);
            if (indices.empty())
                throw config_error("selected split contains no videos");

            Dataset working = ds;
            const NoiseSpec noise = parse_noise_spec(ev_noise);
            if (noise.kind == NoiseSpec::Kind::gaussian) {
                for (std::size_t idx : indices)
                    working.scenarios[idx].features = inject_gaussian(
                        ds.features(idx), noise.level,
                        derive_seed(ev_noise_seed, seed_tag::gaussian_noise, 0, idx));
            } else if (noise.kind == NoiseSpec::Kind::impulse) {
                for (std::size_t idx : indices)
                    working.scenarios[idx].features = inject_impulse(
                        ds.features(idx), noise.level, ev_impulse_magnitude,
                        derive_seed(ev_noise_seed, seed_tag::impulse_noise, 0, idx));
            }

            const DiffusionSchedule schedule = ck.config.model.schedule();
            const EvalResult res =
                evaluate_subset(working, indices, ck.params, ck.config, schedule);
            const MetricsReport rep =
                compute_metrics(res.records, default_threshold_grid());
            ensure_dir(ev_out);
            std::vector<std::string> artifacts;
            write_metrics_report(rep, ev_out, artifacts);
            write_manifest(ev_out, artifacts, !ev_no_timestamp);
            std::cout << "AP " << rep.ap << ", mTTA " << rep.mtta_seconds << " s over "
                      << indices.size() << " videos\n";
        } else if (sw_noise->parsed()) {
            Checkpoint ck = load_checkpoint(swn_checkpoint);
            if (swn_threads_opt->count()) ck.config.threads = swn_threads;
            const Dataset ds = load(swn_data);
            check_dataset_matches_model(ds, ck.config.model);
            const std::vector<std::size_t> indices =
                select_split(ds, ck.config, swn_split);
            const NoiseSweepResult res =
                sweep_noise(ck.params, ck.config, ds, indices, swn_impulse_magnitude,
                            swn_noise_seed);
            ensure_dir(swn_out);
            std::vector<std::string> artifacts;
            write_noise_sweep(res, swn_out, artifacts);
            write_manifest(swn_out, artifacts, !swn_no_timestamp);
            std::cout << "noise sweep: " << res.gaussian.size() << " gaussian rows, "
                      << res.impulse.size() << " impulse rows\n";
        } else if (sw_ablation->parsed()) {
            RunConfig rc;
            apply_train_flags(saf, rc);
            const Dataset ds = load(saf.data);
            adopt_data_dims(rc.train, ds);
            const AblationSweepResult res =
                sweep_ablation(ds, rc.train, swa_impulse_magnitude, swa_noise_seed);
            ensure_dir(saf.out_dir);
            std::vector<std::string> artifacts;
            write_ablation_sweep(res, saf.out_dir, artifacts);
            write_manifest(saf.out_dir, artifacts, !saf.no_timestamp);
            std::cout << "ablation sweep: " << res.modules.size()
                      << " module variants\n";
        } else if (sw_reward->parsed()) {
            RunConfig rc;
            apply_train_flags(srf, rc);
            const Dataset ds = load(srf.data);
            adopt_data_dims(rc.train, ds);
            const std::vector<RewardSweepRow> rows = sweep_reward(ds, rc.train);
            ensure_dir(srf.out_dir);
            std::vector<std::string> artifacts;
            write_reward_sweep(rows, srf.out_dir, artifacts);
            write_manifest(srf.out_dir, artifacts, !srf.no_timestamp);
            std::cout << "reward sweep: " << rows.size() << " rows\n";
        } else if (plot_cmd->parsed()) {
            Checkpoint ck = load_checkpoint(pl_checkpoint);
            std::optional<Checkpoint> baseline;
            if (!pl_baseline.empty()) baseline = load_checkpoint(pl_baseline);
            const Dataset ds = load(pl_data);
            check_dataset_matches_model(ds, ck.config.model);
            const std::vector<std::size_t> split_indices =
                select_split(ds, ck.config, pl_split);
            std::vector<std::size_t> positions = pl_videos;
            if (positions.empty())
                for (std::size_t i = 0; i < std::min<std::size_t>(3, split_indices.size()); ++i)
                    positions.push_back(i);

            ensure_dir(pl_out);
            std::vector<std::string> artifacts;
            const DiffusionSchedule schedule = ck.config.model.schedule();
            for (std::size_t pos : positions) {
                if (pos >= split_indices.size())
                    throw config_error("--videos position " + std::to_string(pos) +
                                       " outside the selected split");
                const std::size_t idx = split_indices[pos];
                std::vector<PlotSeries> panels;
                {
                    const EvalResult r =
                        evaluate_subset(ds, {idx}, ck.params, ck.config, schedule);
                    panels.push_back({"window=" +
                                          std::to_string(ck.config.history_window),
                                      r.records[0].probs});
                }
                if (baseline) {
                    const DiffusionSchedule bsched = baseline->config.model.schedule();
                    const EvalResult r = evaluate_subset(ds, {idx}, baseline->params,
                                                         baseline->config, bsched);
                    panels.push_back({"window=" +
                                          std::to_string(baseline->config.history_window),
                                      r.records[0].probs});
                }
                const std::string name = "plot_video_" + std::to_string(idx) + ".svg";
                write_probability_svg(panels, ds.features(idx).fps,
                                      ds.label(idx).accident_frame, pl_threshold,
                                      pl_out + "/" + name);
                artifacts.push_back(name);
            }
            write_manifest(pl_out, artifacts, !pl_no_timestamp);
            std::cout << "wrote " << artifacts.size() << " plots\n";
        }
    } catch (const config_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
