#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "foresight/dataset.hpp"
#include "oracles.hpp"

using namespace foresight;
namespace fs = std::filesystem;

namespace {

GenConfig tiny_gen() {
    GenConfig g;
    g.n_pos = 2;
    g.n_neg = 3;
    g.frames = 12;
    g.fps = 4.0;
    g.d_img = 5;
    g.d_obj = 4;
    g.num_objects = 2;
    g.cue_dim = 2;
    g.ramp_start = 6;
    g.ramp_slope = 0.2;
    g.tau_min = 8;
    g.tau_max = 12;
    return g;
}

std::string temp_path(const std::string& name) {
    return (fs::temp_directory_path() / name).string();
}

} // namespace

TEST_CASE("gen_synthetic honors counts and labels") {
    GenConfig g = tiny_gen();
    g.n_pos = 0;
    g.n_neg = 5;
    const Dataset ds = gen_synthetic(g, 1);
    REQUIRE(ds.size() == 5);
    for (const Scenario& sc : ds.scenarios) {
        CHECK(!sc.label.positive);
        CHECK(sc.label.accident_frame == 0);
    }
}

TEST_CASE("gen_synthetic is deterministic under (config, seed)") {
    const GenConfig g = tiny_gen();
    const Dataset a = gen_synthetic(g, 42);
    const Dataset b = gen_synthetic(g, 42);
    CHECK(a == b);
    const Dataset c = gen_synthetic(g, 43);
    CHECK(a.scenarios[0].features.image_feats.raw() !=
          c.scenarios[0].features.image_feats.raw());
}

TEST_CASE("gen_synthetic rejects bad configurations") {
    GenConfig g = tiny_gen();
    g.n_pos = 0;
    g.n_neg = 0;
    CHECK_THROWS_AS(gen_synthetic(g, 1), config_error);
    g = tiny_gen();
    g.ramp_start = g.frames;
    CHECK_THROWS_AS(gen_synthetic(g, 1), config_error);
    g = tiny_gen();
    g.d_img = 0;
    CHECK_THROWS_AS(gen_synthetic(g, 1), config_error);
    g = tiny_gen();
    g.tau_max = g.frames + 1;
    CHECK_THROWS_AS(gen_synthetic(g, 1), config_error);
}

TEST_CASE("planted cue separates classes under the known-subspace oracle") {
    GenConfig g;
    g.n_pos = 50;
    g.n_neg = 50;
    g.ramp_slope = 0.1;
    const Dataset ds = gen_synthetic(g, 7);
    std::vector<double> scores;
    std::vector<int> labels;
    for (const Scenario& sc : ds.scenarios) {
        scores.push_back(planted_cue_score(sc.features, g.cue_dim));
        labels.push_back(sc.label.positive ? 1 : 0);
    }
    const double ap = oracles::brute_force_average_precision_double(scores, labels);
    CHECK(ap >= 0.95);
}

TEST_CASE("default generation profile is strongly separable") {
    GenConfig g;
    g.n_pos = 20;
    g.n_neg = 20;
    const Dataset ds = gen_synthetic(g, 11);
    std::vector<double> scores;
    std::vector<int> labels;
    for (const Scenario& sc : ds.scenarios) {
        scores.push_back(planted_cue_score(sc.features, g.cue_dim));
        labels.push_back(sc.label.positive ? 1 : 0);
    }
    CHECK(oracles::brute_force_average_precision_double(scores, labels) >= 0.95);
}

TEST_CASE("dataset save/load round-trips exactly") {
    const Dataset ds = gen_synthetic(tiny_gen(), 5);
    const std::string path = temp_path("foresight_roundtrip.txt");
    save(ds, path);
    const Dataset back = load(path);
    CHECK(ds == back);
    fs::remove(path);
}

TEST_CASE("load rejects truncated files without a partial dataset") {
    const Dataset ds = gen_synthetic(tiny_gen(), 5);
    const std::string path = temp_path("foresight_truncated.txt");
    save(ds, path);
    std::error_code ec;
    fs::resize_file(path, fs::file_size(path) / 2, ec);
    REQUIRE(!ec);
    CHECK_THROWS_AS(load(path), parse_error);
    fs::remove(path);
}

TEST_CASE("load cites the offending sequence on malformed records") {
    const Dataset ds = gen_synthetic(tiny_gen(), 5);
    const std::string path = temp_path("foresight_malformed.txt");
    save(ds, path);

    // Drop one numeric token from sequence 1's image block: the reader
    // misaligns and fails inside that record.
    std::ifstream in(path);
    std::string content((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
    in.close();
    const std::size_t seq1 = content.find("sequence 1");
    REQUIRE(seq1 != std::string::npos);
    const std::size_t image = content.find("image\n", seq1);
    REQUIRE(image != std::string::npos);
    const std::size_t tok_end = content.find(' ', image + 6);
    content.erase(image + 6, tok_end - (image + 6) + 1);
    std::ofstream out(path);
    out << content;
    out.close();

    try {
        load(path);
        FAIL("expected parse_error");
    } catch (const parse_error& e) {
        CHECK(std::string(e.what()).find("sequence 1") != std::string::npos);
    }
    fs::remove(path);
}

TEST_CASE("load rejects version mismatch") {
    const Dataset ds = gen_synthetic(tiny_gen(), 5);
    const std::string path = temp_path("foresight_version.txt");
    save(ds, path);
    std::ifstream in(path);
    std::string content((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
    in.close();
    const std::size_t pos = content.find("version 1");
    content.replace(pos, 9, "version 9");
    std::ofstream out(path);
    out << content;
    out.close();
    CHECK_THROWS_AS(load(path), parse_error);
    fs::remove(path);
}

TEST_CASE("inject_gaussian identity, shape, and statistics") {
    GenConfig g = tiny_gen();
    g.frames = 50;
    g.d_img = 100;
    g.d_obj = 100;
    g.num_objects = 1;
    g.ramp_start = 20;
    g.tau_min = 30;
    g.tau_max = 50;
    const Dataset ds = gen_synthetic(g, 3);
    const FeatureSequence& seq = ds.features(0);

    SUBCASE("sigma 0 is the identity") {
        CHECK(inject_gaussian(seq, 0.0, 99) == seq);
    }
    SUBCASE("negative sigma is rejected") {
        CHECK_THROWS_AS(inject_gaussian(seq, -1.0, 99), domain_error);
    }
    SUBCASE("severe noise keeps shape and labels") {
        const FeatureSequence out = inject_gaussian(seq, 20.0, 99);
        CHECK(out.frames == seq.frames);
        CHECK(out.object_mask == seq.object_mask);
        CHECK(out.fps == seq.fps);
        CHECK(all_finite(out.image_feats));
        CHECK(all_finite(out.object_feats));
    }
    SUBCASE("empirical std of the perturbation matches sigma") {
        const double sigma = 5.0;
        const FeatureSequence out = inject_gaussian(seq, sigma, 99);
        double sum = 0.0, sum2 = 0.0;
        std::size_t n = 0;
        auto accumulate_diff = [&](const Matrix& a, const Matrix& b) {
            for (std::size_t i = 0; i < a.size(); ++i) {
                const double d = a.raw()[i] - b.raw()[i];
                sum += d;
                sum2 += d * d;
                ++n;
            }
        };
        accumulate_diff(out.image_feats, seq.image_feats);
        accumulate_diff(out.object_feats, seq.object_feats);
        REQUIRE(n >= 10000);
        const double mean = sum / static_cast<double>(n);
        const double std_dev =
            std::sqrt(sum2 / static_cast<double>(n) - mean * mean);
        const double se = sigma / std::sqrt(2.0 * static_cast<double>(n));
        CHECK(std::abs(std_dev - sigma) < 3.0 * se);
    }
    SUBCASE("determinism under seed") {
        CHECK(inject_gaussian(seq, 2.0, 7) == inject_gaussian(seq, 2.0, 7));
    }
}

TEST_CASE("inject_impulse identity, saturation, and binomial count") {
    GenConfig g = tiny_gen();
    g.frames = 50;
    g.d_img = 100;
    g.d_obj = 100;
    g.num_objects = 1;
    g.ramp_start = 20;
    g.tau_min = 30;
    g.tau_max = 50;
    const Dataset ds = gen_synthetic(g, 3);
    const FeatureSequence& seq = ds.features(0);
    const double s = 3.0;

    SUBCASE("fraction bounds") {
        CHECK(inject_impulse(seq, 0.0, s, 5) == seq);
        CHECK_THROWS_AS(inject_impulse(seq, -0.1, s, 5), domain_error);
        CHECK_THROWS_AS(inject_impulse(seq, 1.5, s, 5), domain_error);
    }
    SUBCASE("fraction 1 replaces every component") {
        const FeatureSequence out = inject_impulse(seq, 1.0, s, 5);
        for (double v : out.image_feats.raw()) CHECK(std::abs(v) == s);
        for (double v : out.object_feats.raw()) CHECK(std::abs(v) == s);
    }
    SUBCASE("replacement count is binomial") {
        const double fraction = 0.2;
        const FeatureSequence out = inject_impulse(seq, fraction, s, 5);
        std::size_t replaced = 0, n = 0;
        auto count = [&](const Matrix& a, const Matrix& b) {
            for (std::size_t i = 0; i < a.size(); ++i) {
                ++n;
                if (a.raw()[i] != b.raw()[i]) ++replaced;
            }
        };
        count(out.image_feats, seq.image_feats);
        count(out.object_feats, seq.object_feats);
        REQUIRE(n >= 10000);
        const double expectation = fraction * static_cast<double>(n);
        const double sigma3 =
            3.0 * std::sqrt(static_cast<double>(n) * fraction * (1.0 - fraction));
        CHECK(std::abs(static_cast<double>(replaced) - expectation) < sigma3);
    }
    SUBCASE("labels, mask, fps untouched") {
        const FeatureSequence out = inject_impulse(seq, 0.3, s, 5);
        CHECK(out.object_mask == seq.object_mask);
        CHECK(out.fps == seq.fps);
        CHECK(out.frames == seq.frames);
    }
}

TEST_CASE("generation with partial presence keeps at least one object") {
    GenConfig g = tiny_gen();
    g.present_prob = 0.4;
    const Dataset ds = gen_synthetic(g, 21);
    for (const Scenario& sc : ds.scenarios)
        for (std::size_t t = 0; t < sc.features.frames; ++t)
            CHECK(sc.features.present_count(t) >= 1);
}
