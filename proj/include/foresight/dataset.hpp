// Scenario data: per-frame global and object feature sequences with
// video-level labels, a synthetic generator that plants a ramping risk
// cue into positive sequences, canonical text serialization, and the
// Gaussian / impulse corruption used by the robustness sweeps.

#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "foresight/errors.hpp"
#include "foresight/linalg.hpp"
#include "foresight/rng.hpp"
#include "foresight/serialize.hpp"

namespace foresight {

// One video worth of precomputed features: a global image vector per
// frame plus up to K object vectors per frame with a presence mask.
struct FeatureSequence {
    std::size_t frames = 0;      // N
    double fps = 0.0;
    std::size_t d_img = 0;
    std::size_t d_obj = 0;
    std::size_t num_objects = 0; // K

    Matrix image_feats;                    // N x d_img
    Matrix object_feats;                   // (N*K) x d_obj, row t*K + k
    std::vector<std::uint8_t> object_mask; // N*K, 1 = present

    const double* image(std::size_t t) const { return image_feats.row(t); }
    double* image(std::size_t t) { return image_feats.row(t); }
    const double* object(std::size_t t, std::size_t k) const {
        return object_feats.row(t * num_objects + k);
    }
    double* object(std::size_t t, std::size_t k) {
        return object_feats.row(t * num_objects + k);
    }
    bool present(std::size_t t, std::size_t k) const {
        return object_mask[t * num_objects + k] != 0;
    }
    std::size_t present_count(std::size_t t) const {
        std::size_t n = 0;
        for (std::size_t k = 0; k < num_objects; ++k)
            if (present(t, k)) ++n;
        return n;
    }

    bool operator==(const FeatureSequence&) const = default;
};

// Video-level ground truth. accident_frame is 1-based; 0 iff negative.
struct ScenarioLabel {
    bool positive = false;
    std::size_t accident_frame = 0;

    bool operator==(const ScenarioLabel&) const = default;
};

struct Scenario {
    FeatureSequence features;
    ScenarioLabel label;

    bool operator==(const Scenario&) const = default;
};

struct Dataset {
    int version = 1;
    std::optional<std::uint64_t> generation_seed;
    std::vector<Scenario> scenarios;

    std::size_t size() const { return scenarios.size(); }
    const FeatureSequence& features(std::size_t i) const { return scenarios[i].features; }
    const ScenarioLabel& label(std::size_t i) const { return scenarios[i].label; }

    bool operator==(const Dataset&) const = default;
};

// Synthetic scenario generator settings. Positive sequences carry a
// linearly growing drift on the first cue_dim components of both feature
// streams, starting ramp_start frames before the accident frame;
// negatives are stationary noise.
struct GenConfig {
    std::size_t n_pos = 100;
    std::size_t n_neg = 100;
    std::size_t frames = 100; // N
    double fps = 20.0;
    std::size_t d_img = 64;
    std::size_t d_obj = 64;
    std::size_t num_objects = 5; // K
    std::size_t cue_dim = 8;
    std::size_t ramp_start = 75; // frames before tau at which the cue begins
    double ramp_slope = 0.06;    // per-frame drift per cue component
    double noise_floor = 1.0;    // std of the stationary background noise
    std::size_t tau_min = 85;    // accident frame range, 1-based inclusive
    std::size_t tau_max = 98;
    double present_prob = 1.0;
    bool allow_empty_frames = false;

    void validate() const {
        if (n_pos + n_neg == 0)
            throw config_error("gen: n_pos + n_neg must be at least 1");
        if (frames == 0) throw config_error("gen: frames must be >= 1");
        if (fps <= 0.0) throw config_error("gen: fps must be positive");
        if (d_img == 0 || d_obj == 0)
            throw config_error("gen: feature dimensions must be positive");
        if (num_objects == 0) throw config_error("gen: object count must be >= 1");
        if (cue_dim == 0 || cue_dim > d_img || cue_dim > d_obj)
            throw config_error("gen: cue_dim must be in [1, min(d_img, d_obj)]");
        if (ramp_start >= frames)
            throw config_error("gen: ramp_start must be smaller than frames");
        if (noise_floor < 0.0) throw config_error("gen: noise_floor must be >= 0");
        if (tau_min < 1 || tau_min > tau_max || tau_max > frames)
            throw config_error("gen: accident frame range must satisfy 1 <= tau_min <= tau_max <= frames");
        if (present_prob <= 0.0 || present_prob > 1.0)
            throw config_error("gen: present_prob must be in (0, 1]");
    }
};

namespace detail {

inline void fill_gaussian(double* dst, std::size_t n, double sigma, RandomStream& rng) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = sigma * rng.gaussian();
}

} // namespace detail

// Deterministic under (config, seed): sequence i always consumes the same
// derived stream, positives occupy indices [0, n_pos).
inline Dataset gen_synthetic(const GenConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Dataset ds;
    ds.generation_seed = seed;
    ds.scenarios.reserve(cfg.n_pos + cfg.n_neg);

    const std::size_t total = cfg.n_pos + cfg.n_neg;
    for (std::size_t i = 0; i < total; ++i) {
        RandomStream rng(derive_seed(seed, 0x5eed, i));
        const bool positive = i < cfg.n_pos;

        Scenario sc;
        FeatureSequence& fs = sc.features;
        fs.frames = cfg.frames;
        fs.fps = cfg.fps;
        fs.d_img = cfg.d_img;
        fs.d_obj = cfg.d_obj;
        fs.num_objects = cfg.num_objects;
        fs.image_feats = Matrix(cfg.frames, cfg.d_img);
        fs.object_feats = Matrix(cfg.frames * cfg.num_objects, cfg.d_obj);
        fs.object_mask.assign(cfg.frames * cfg.num_objects, 1);

        std::size_t tau = 0;
        if (positive)
            tau = cfg.tau_min + rng.uniform_index(cfg.tau_max - cfg.tau_min + 1);
        sc.label.positive = positive;
        sc.label.accident_frame = tau;

        if (cfg.present_prob < 1.0) {
            for (std::size_t t = 0; t < cfg.frames; ++t) {
                std::size_t present = 0;
                for (std::size_t k = 0; k < cfg.num_objects; ++k) {
                    const bool on = rng.uniform01() < cfg.present_prob;
                    fs.object_mask[t * cfg.num_objects + k] = on ? 1 : 0;
                    present += on;
                }
                if (present == 0 && !cfg.allow_empty_frames)
                    fs.object_mask[t * cfg.num_objects] = 1;
            }
        }

        detail::fill_gaussian(fs.image_feats.data(), fs.image_feats.size(),
                              cfg.noise_floor, rng);
        detail::fill_gaussian(fs.object_feats.data(), fs.object_feats.size(),
                              cfg.noise_floor, rng);

        if (positive) {
            // Cue ramp: monotone drift on the leading cue_dim components,
            // starting ramp_start frames before the accident frame.
            const std::size_t accident_idx = tau - 1; // 0-based
            const std::size_t onset =
                accident_idx >= cfg.ramp_start ? accident_idx - cfg.ramp_start : 0;
            for (std::size_t t = onset; t < cfg.frames; ++t) {
                const double amp =
                    cfg.ramp_slope * static_cast<double>(t - onset + 1);
                double* img = fs.image(t);
                for (std::size_t c = 0; c < cfg.cue_dim; ++c) img[c] += amp;
                for (std::size_t k = 0; k < cfg.num_objects; ++k) {
                    if (!fs.present(t, k)) continue;
                    double* obj = fs.object(t, k);
                    for (std::size_t c = 0; c < cfg.cue_dim; ++c) obj[c] += amp;
                }
            }
        }

        ds.scenarios.push_back(std::move(sc));
    }
    return ds;
}

// Direct score on the planted cue subspace: max over frames of the mean of
// the leading cue_dim image components. Used as the separability oracle.
inline double planted_cue_score(const FeatureSequence& fs, std::size_t cue_dim) {
    double best = -1e300;
    for (std::size_t t = 0; t < fs.frames; ++t) {
        const double* img = fs.image(t);
        double mean = 0.0;
        for (std::size_t c = 0; c < cue_dim; ++c) mean += img[c];
        mean /= static_cast<double>(cue_dim);
        best = std::max(best, mean);
    }
    return best;
}

// --- Corruption -----------------------------------------------------------

// Additive zero-mean Gaussian noise of std sigma on every feature
// component. Labels, mask, and fps are untouched.
inline FeatureSequence inject_gaussian(const FeatureSequence& seq, double sigma,
                                       std::uint64_t seed) {
    if (sigma < 0.0) throw domain_error("inject_gaussian: sigma must be >= 0");
    FeatureSequence out = seq;
    if (sigma == 0.0) return out;
    RandomStream rng(derive_seed(seed, 0x6a55));
    for (double& v : out.image_feats.raw()) v += sigma * rng.gaussian();
    for (double& v : out.object_feats.raw()) v += sigma * rng.gaussian();
    return out;
}

// Each feature component is independently replaced by +magnitude or
// -magnitude with probability `fraction`.
inline FeatureSequence inject_impulse(const FeatureSequence& seq, double fraction,
                                      double magnitude, std::uint64_t seed) {
    if (fraction < 0.0 || fraction > 1.0)
        throw domain_error("inject_impulse: fraction must be in [0, 1]");
    FeatureSequence out = seq;
    if (fraction == 0.0) return out;
    RandomStream rng(derive_seed(seed, 0x1a97));
    auto corrupt = [&](std::vector<double>& data) {
        for (double& v : data) {
            if (rng.uniform01() < fraction)
                v = rng.uniform01() < 0.5 ? magnitude : -magnitude;
        }
    };
    corrupt(out.image_feats.raw());
    corrupt(out.object_feats.raw());
    return out;
}

// --- Serialization ---------------------------------------------------------

inline void save(const Dataset& ds, const std::string& path) {
    if (ds.scenarios.empty()) throw domain_error("save: dataset is empty");
    const FeatureSequence& first = ds.scenarios.front().features;
    for (std::size_t i = 0; i < ds.scenarios.size(); ++i) {
        const FeatureSequence& fs = ds.scenarios[i].features;
        if (fs.d_img != first.d_img || fs.d_obj != first.d_obj ||
            fs.num_objects != first.num_objects || fs.fps != first.fps)
            throw domain_error("save: sequence " + std::to_string(i) +
                               " does not share the dataset header dimensions");
    }

    std::ofstream out = open_output(path);
    out << "foresight-dataset\n";
    out << "version " << ds.version << '\n';
    out << "d_img " << first.d_img << '\n';
    out << "d_obj " << first.d_obj << '\n';
    out << "objects " << first.num_objects << '\n';
    out << "fps " << format_double(first.fps) << '\n';
    out << "sequences " << ds.scenarios.size() << '\n';
    if (ds.generation_seed)
        out << "generation_seed " << *ds.generation_seed << '\n';

    for (std::size_t i = 0; i < ds.scenarios.size(); ++i) {
        const Scenario& sc = ds.scenarios[i];
        const FeatureSequence& fs = sc.features;
        out << "sequence " << i << " frames " << fs.frames << " label "
            << (sc.label.positive ? 1 : 0) << " accident_frame "
            << sc.label.accident_frame << '\n';
        out << "mask\n";
        for (std::size_t t = 0; t < fs.frames; ++t) {
            for (std::size_t k = 0; k < fs.num_objects; ++k) {
                if (k) out << ' ';
                out << (fs.present(t, k) ? 1 : 0);
            }
            out << '\n';
        }
        out << "image\n";
        for (std::size_t t = 0; t < fs.frames; ++t) {
            const double* row = fs.image(t);
            for (std::size_t c = 0; c < fs.d_img; ++c) {
                if (c) out << ' ';
                out << format_double(row[c]);
            }
            out << '\n';
        }
        out << "objects\n";
        for (std::size_t t = 0; t < fs.frames; ++t) {
            for (std::size_t k = 0; k < fs.num_objects; ++k) {
                const double* row = fs.object(t, k);
                for (std::size_t c = 0; c < fs.d_obj; ++c) {
                    if (c) out << ' ';
                    out << format_double(row[c]);
                }
                out << '\n';
            }
        }
        out << "end\n";
    }
    out << "end-dataset\n";
    if (!out) throw io_error("write failed: " + path);
}

inline Dataset load(const std::string& path) {
    std::ifstream in = open_input(path);
    TokenReader r(in, path);

    r.expect("foresight-dataset");
    r.expect("version");
    const long long version = r.next_int("version");
    if (version != 1)
        throw parse_error(path + ": unsupported dataset version " +
                          std::to_string(version));

    r.expect("d_img");
    const std::size_t d_img = static_cast<std::size_t>(r.next_int("d_img"));
    r.expect("d_obj");
    const std::size_t d_obj = static_cast<std::size_t>(r.next_int("d_obj"));
    r.expect("objects");
    const std::size_t k_objs = static_cast<std::size_t>(r.next_int("objects"));
    r.expect("fps");
    const double fps = r.next_double("fps");
    r.expect("sequences");
    const std::size_t count = static_cast<std::size_t>(r.next_int("sequences"));
    if (d_img == 0 || d_obj == 0 || k_objs == 0 || fps <= 0.0 || count == 0)
        throw parse_error(path + ": invalid dataset header");

    Dataset ds;
    ds.version = static_cast<int>(version);

    std::string tok = r.next("sequence or generation_seed");
    if (tok == "generation_seed") {
        ds.generation_seed =
            static_cast<std::uint64_t>(r.next_int("generation_seed"));
        tok = r.next("sequence");
    }

    for (std::size_t i = 0; i < count; ++i) {
        const std::string where = "sequence " + std::to_string(i);
        if (i > 0) tok = r.next("sequence");
        if (tok != "sequence")
            throw parse_error(path + ": " + where + ": expected 'sequence', got '" + tok + "'");
        const long long idx = r.next_int(where + " index");
        if (idx != static_cast<long long>(i))
            throw parse_error(path + ": " + where + ": index out of order");
        r.expect("frames");
        const std::size_t frames =
            static_cast<std::size_t>(r.next_int(where + " frames"));
        if (frames == 0) throw parse_error(path + ": " + where + ": zero frames");
        r.expect("label");
        const long long lab = r.next_int(where + " label");
        r.expect("accident_frame");
        const std::size_t tau =
            static_cast<std::size_t>(r.next_int(where + " accident_frame"));
        if (lab != 0 && lab != 1)
            throw parse_error(path + ": " + where + ": label must be 0 or 1");
        const bool positive = lab == 1;
        if (positive != (tau >= 1) || tau > frames)
            throw parse_error(path + ": " + where +
                              ": accident_frame inconsistent with label");

        Scenario sc;
        sc.label.positive = positive;
        sc.label.accident_frame = tau;
        FeatureSequence& fs = sc.features;
        fs.frames = frames;
        fs.fps = fps;
        fs.d_img = d_img;
        fs.d_obj = d_obj;
        fs.num_objects = k_objs;
        fs.image_feats = Matrix(frames, d_img);
        fs.object_feats = Matrix(frames * k_objs, d_obj);
        fs.object_mask.assign(frames * k_objs, 0);

        r.expect("mask");
        for (std::size_t m = 0; m < frames * k_objs; ++m) {
            const long long bit = r.next_int(where + " mask");
            if (bit != 0 && bit != 1)
                throw parse_error(path + ": " + where + ": mask entries must be 0 or 1");
            fs.object_mask[m] = static_cast<std::uint8_t>(bit);
        }
        r.expect("image");
        for (double& v : fs.image_feats.raw()) v = r.next_double(where + " image feature");
        r.expect("objects");
        for (double& v : fs.object_feats.raw()) v = r.next_double(where + " object feature");
        r.expect("end");

        if (!all_finite(fs.image_feats) || !all_finite(fs.object_feats))
            throw parse_error(path + ": " + where + ": non-finite feature value");

        ds.scenarios.push_back(std::move(sc));
    }
    r.expect("end-dataset");
    return ds;
}

} // namespace foresight
