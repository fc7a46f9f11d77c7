// RunConfig: the merged generation + training configuration, loadable
// from one `key = value` config file with CLI-flag overrides. Unknown
// keys are rejected before any work starts.

#pragma once

#include <string>

#include "foresight/dataset.hpp"
#include "foresight/trainer.hpp"

namespace foresight {

struct RunConfig {
    GenConfig gen;
    TrainConfig train;
};

inline void apply_gen_config_key(GenConfig& g, const std::string& key,
                                 const std::string& value) {
    const std::string ctx = "config key 'gen." + key + "'";
    auto u = [&]() { return static_cast<std::size_t>(parse_int(value, ctx)); };
    auto d = [&]() { return parse_double(value, ctx); };

    if (key == "n_pos") g.n_pos = u();
    else if (key == "n_neg") g.n_neg = u();
    else if (key == "frames") g.frames = u();
    else if (key == "fps") g.fps = d();
    else if (key == "d_img") g.d_img = u();
    else if (key == "d_obj") g.d_obj = u();
    else if (key == "num_objects") g.num_objects = u();
    else if (key == "cue_dim") g.cue_dim = u();
    else if (key == "ramp_start") g.ramp_start = u();
    else if (key == "ramp_slope") g.ramp_slope = d();
    else if (key == "noise_floor") g.noise_floor = d();
    else if (key == "tau_min") g.tau_min = u();
    else if (key == "tau_max") g.tau_max = u();
    else if (key == "present_prob") g.present_prob = d();
    else if (key == "allow_empty_frames") g.allow_empty_frames = parse_bool(value, ctx);
    else throw config_error("unknown config key: gen." + key);
}

inline void apply_run_config_key(RunConfig& rc, const std::string& key,
                                 const std::string& value) {
    if (key.rfind("gen.", 0) == 0)
        apply_gen_config_key(rc.gen, key.substr(4), value);
    else
        apply_train_config_key(rc.train, key, value);
}

// `key = value` lines; '#' starts a comment; blank lines ignored.
inline void load_config_file(const std::string& path, RunConfig& rc) {
    std::ifstream in = open_input(path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos) return std::string();
            const auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw parse_error(path + ":" + std::to_string(line_no) +
                              ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw parse_error(path + ":" + std::to_string(line_no) +
                              ": expected 'key = value'");
        apply_run_config_key(rc, key, value);
    }
}

// Named profiles mirroring the benchmark datasets' temporal shapes, plus
// the full-scale profile (config-selectable, far beyond desk scale).
inline void apply_preset(RunConfig& rc, const std::string& name) {
    if (name == "dad-like") {
        rc.gen.frames = 100;
        rc.gen.fps = 20.0;
        rc.gen.tau_min = 85;
        rc.gen.tau_max = 98;
        rc.gen.ramp_start = 75;
        rc.gen.ramp_slope = 0.06;
    } else if (name == "ccd-like") {
        rc.gen.frames = 50;
        rc.gen.fps = 10.0;
        rc.gen.tau_min = 42;
        rc.gen.tau_max = 48;
        rc.gen.ramp_start = 35;
        rc.gen.ramp_slope = 0.12;
    } else if (name == "full-scale") {
        rc.gen.d_img = 4096;
        rc.gen.d_obj = 4096;
        rc.gen.num_objects = 19;
        rc.train.model.d_img = 4096;
        rc.train.model.d_obj = 4096;
        rc.train.model.num_objects = 19;
        rc.train.model.d_hidden = 256;
        rc.train.model.d_att = 256;
        rc.train.model.d_head = 256;
    } else {
        throw config_error("unknown preset: " + name +
                           " (expected dad-like, ccd-like, or full-scale)");
    }
}

} // namespace foresight
