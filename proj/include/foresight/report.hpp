// CSV and JSON emission for evaluation reports and sweep tables, plus the
// per-run manifest. Tables mirror the sweep layouts so they can be read
// side by side with the reference experiments.

#pragma once

#include <chrono>
#include <ctime>
#include <string>
#include <vector>

#include <json.hpp>

#include "foresight/metrics.hpp"
#include "foresight/serialize.hpp"
#include "foresight/sweeps.hpp"

namespace foresight {

inline nlohmann::json metrics_report_json(const MetricsReport& rep) {
    nlohmann::json j;
    j["ap"] = rep.ap;
    j["mtta_seconds"] = rep.mtta_seconds;
    j["positives"] = rep.positives;
    j["negatives"] = rep.negatives;
    j["true_positives_at_0.5"] = rep.true_positives;
    j["false_positives_at_0.5"] = rep.false_positives;
    j["precision"] = rep.precision;
    j["recall"] = rep.recall;
    j["thresholds"] = rep.thresholds;
    j["tta_per_video"] = rep.tta_per_video; // -1 marks "no crossing"
    return j;
}

inline void write_metrics_report(const MetricsReport& rep, const std::string& dir,
                                 std::vector<std::string>& artifacts) {
    {
        std::ofstream out = open_output(dir + "/metrics.csv");
        out << "metric,value\n";
        out << "AP," << format_double(rep.ap) << '\n';
        out << "mTTA_s," << format_double(rep.mtta_seconds) << '\n';
        out << "positives," << rep.positives << '\n';
        out << "negatives," << rep.negatives << '\n';
        out << "true_positives_at_0.5," << rep.true_positives << '\n';
        out << "false_positives_at_0.5," << rep.false_positives << '\n';
        artifacts.push_back("metrics.csv");
    }
    {
        std::ofstream out = open_output(dir + "/pr_curve.csv");
        out << "recall,precision\n";
        for (std::size_t i = 0; i < rep.precision.size(); ++i)
            out << format_double(rep.recall[i]) << ','
                << format_double(rep.precision[i]) << '\n';
        artifacts.push_back("pr_curve.csv");
    }
    {
        std::ofstream out = open_output(dir + "/tta_per_threshold.csv");
        out << "threshold";
        if (!rep.tta_per_video.empty())
            for (std::size_t v = 0; v < rep.tta_per_video[0].size(); ++v)
                out << ",video_" << v;
        out << '\n';
        for (std::size_t i = 0; i < rep.thresholds.size(); ++i) {
            out << format_double(rep.thresholds[i]);
            for (double v : rep.tta_per_video[i]) out << ',' << format_double(v);
            out << '\n';
        }
        artifacts.push_back("tta_per_threshold.csv");
    }
    {
        std::ofstream out = open_output(dir + "/metrics.json");
        out << metrics_report_json(rep).dump(2) << '\n';
        artifacts.push_back("metrics.json");
    }
}

inline void write_noise_sweep(const NoiseSweepResult& res, const std::string& dir,
                              std::vector<std::string>& artifacts) {
    {
        std::ofstream out = open_output(dir + "/gaussian_noise.csv");
        out << "sigma,AP,mTTA_s\n";
        for (const SweepRow& row : res.gaussian)
            out << row.label << ',' << format_double(row.ap) << ','
                << format_double(row.mtta) << '\n';
        artifacts.push_back("gaussian_noise.csv");
    }
    {
        std::ofstream out = open_output(dir + "/impulse_noise.csv");
        out << "fraction,AP,mTTA_s\n";
        for (const SweepRow& row : res.impulse)
            out << row.label << ',' << format_double(row.ap) << ','
                << format_double(row.mtta) << '\n';
        artifacts.push_back("impulse_noise.csv");
    }
    nlohmann::json j;
    for (const SweepRow& row : res.gaussian)
        j["gaussian"].push_back({{"sigma", row.label}, {"ap", row.ap}, {"mtta", row.mtta}});
    for (const SweepRow& row : res.impulse)
        j["impulse"].push_back({{"fraction", row.label}, {"ap", row.ap}, {"mtta", row.mtta}});
    std::ofstream out = open_output(dir + "/noise_sweep.json");
    out << j.dump(2) << '\n';
    artifacts.push_back("noise_sweep.json");
}

inline void write_ablation_sweep(const AblationSweepResult& res, const std::string& dir,
                                 std::vector<std::string>& artifacts) {
    {
        std::ofstream out = open_output(dir + "/ablation_modules.csv");
        out << "variant,AP,mTTA_s\n";
        for (const SweepRow& row : res.modules)
            out << row.label << ',' << format_double(row.ap) << ','
                << format_double(row.mtta) << '\n';
        artifacts.push_back("ablation_modules.csv");
    }
    {
        std::ofstream out = open_output(dir + "/ablation_diffusion_noise.csv");
        out << "sigma";
        for (const std::string& v : res.diffusion_variants)
            out << ',' << v << "_AP," << v << "_mTTA_s";
        out << '\n';
        for (std::size_t li = 0; li < res.gaussian_levels.size(); ++li) {
            out << level_label(res.gaussian_levels[li]);
            for (const auto& [ap, mtta] : res.noise_cells[li])
                out << ',' << format_double(ap) << ',' << format_double(mtta);
            out << '\n';
        }
        artifacts.push_back("ablation_diffusion_noise.csv");
    }
    nlohmann::json j;
    for (const SweepRow& row : res.modules)
        j["modules"].push_back({{"variant", row.label}, {"ap", row.ap}, {"mtta", row.mtta}});
    for (std::size_t li = 0; li < res.gaussian_levels.size(); ++li) {
        nlohmann::json level;
        level["sigma"] = level_label(res.gaussian_levels[li]);
        for (std::size_t v = 0; v < res.diffusion_variants.size(); ++v)
            level[res.diffusion_variants[v]] = {
                {"ap", res.noise_cells[li][v].first},
                {"mtta", res.noise_cells[li][v].second}};
        j["diffusion_noise"].push_back(level);
    }
    std::ofstream out = open_output(dir + "/ablation_sweep.json");
    out << j.dump(2) << '\n';
    artifacts.push_back("ablation_sweep.json");
}

inline void write_reward_sweep(const std::vector<RewardSweepRow>& rows,
                               const std::string& dir,
                               std::vector<std::string>& artifacts) {
    {
        std::ofstream out = open_output(dir + "/reward_sweep.csv");
        out << "reward_mult,penalty_mult,AP,mTTA_s\n";
        for (const RewardSweepRow& row : rows)
            out << format_double(row.reward_mult) << ','
                << format_double(row.penalty_mult) << ',' << format_double(row.ap)
                << ',' << format_double(row.mtta) << '\n';
        artifacts.push_back("reward_sweep.csv");
    }
    nlohmann::json j;
    for (const RewardSweepRow& row : rows)
        j["rows"].push_back({{"reward_mult", row.reward_mult},
                             {"penalty_mult", row.penalty_mult},
                             {"ap", row.ap},
                             {"mtta", row.mtta}});
    std::ofstream out = open_output(dir + "/reward_sweep.json");
    out << j.dump(2) << '\n';
    artifacts.push_back("reward_sweep.json");
}

// Lists every artifact a command produced. The timestamp is the only
// non-deterministic output field and can be disabled.
inline void write_manifest(const std::string& dir,
                           const std::vector<std::string>& artifacts,
                           bool with_timestamp) {
    nlohmann::json j;
    j["artifacts"] = artifacts;
    if (with_timestamp) {
        const auto now = std::chrono::system_clock::now();
        const std::time_t t = std::chrono::system_clock::to_time_t(now);
        char buf[32];
        std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
        j["timestamp"] = buf;
    }
    std::ofstream out = open_output(dir + "/manifest.json");
    out << j.dump(2) << '\n';
}

} // namespace foresight
