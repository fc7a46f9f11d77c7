#include <doctest.h>

#include <cmath>

#include "foresight/metrics.hpp"
#include "foresight/plot.hpp"
#include "foresight/rng.hpp"
#include "oracles.hpp"

#include <filesystem>
#include <fstream>

using namespace foresight;

namespace {

PredictionRecord make_record(std::vector<double> probs, bool positive,
                             std::size_t tau, double fps) {
    PredictionRecord r;
    r.probs = std::move(probs);
    r.positive = positive;
    r.accident_frame = tau;
    r.fps = fps;
    return r;
}

} // namespace

TEST_CASE("tta measures lead time from the first crossing") {
    SUBCASE("tau=80, first crossing at frame 40, fps=20 gives 2 s") {
        std::vector<double> probs(100, 0.1);
        for (std::size_t t = 40; t < 100; ++t) probs[t] = 0.9;
        const PredictionRecord r = make_record(probs, true, 80, 20.0);
        const auto dt = tta(r, 0.5);
        REQUIRE(dt.has_value());
        CHECK(*dt == doctest::Approx(2.0).epsilon(1e-12));
    }
    SUBCASE("crossing after the accident clamps to zero") {
        std::vector<double> probs(50, 0.1);
        probs[45] = 0.9;
        const PredictionRecord r = make_record(probs, true, 30, 10.0);
        const auto dt = tta(r, 0.5);
        REQUIRE(dt.has_value());
        CHECK(*dt == 0.0);
    }
    SUBCASE("no crossing yields no value") {
        const PredictionRecord r = make_record(std::vector<double>(20, 0.4), true, 10, 10.0);
        CHECK(!tta(r, 1.0).has_value());
    }
    SUBCASE("negative videos are out of domain") {
        const PredictionRecord r = make_record({0.1, 0.9}, false, 0, 10.0);
        CHECK_THROWS_AS(tta(r, 0.5), domain_error);
    }
}

TEST_CASE("average precision closed forms") {
    SUBCASE("perfect ranking gives 1") {
        CHECK(average_precision({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}) ==
              doctest::Approx(1.0).epsilon(1e-15));
    }
    SUBCASE("worked three-video case gives 5/6") {
        const double ap = average_precision({0.9, 0.8, 0.7}, {1, 0, 1});
        CHECK(std::abs(ap - 5.0 / 6.0) < 1e-12);
    }
    SUBCASE("all-tied scores give the positive prevalence") {
        const double ap =
            average_precision({0.5, 0.5, 0.5, 0.5, 0.5}, {1, 0, 0, 1, 0});
        CHECK(std::abs(ap - 0.4) < 1e-12);
    }
    SUBCASE("single-class input is out of domain") {
        CHECK_THROWS_AS(average_precision({0.4, 0.6}, {1, 1}), domain_error);
        CHECK_THROWS_AS(average_precision({0.4, 0.6}, {0, 0}), domain_error);
    }
}

TEST_CASE("average precision equals the brute-force threshold enumeration") {
    RandomStream rng(101);
    for (int trial = 0; trial < 80; ++trial) {
        const std::size_t n = 2 + rng.uniform_index(11); // up to 12 videos
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        bool has_pos = false, has_neg = false;
        for (std::size_t i = 0; i < n; ++i) {
            // quantized scores to force ties regularly
            scores[i] = static_cast<double>(rng.uniform_index(6)) / 5.0;
            labels[i] = rng.uniform01() < 0.5 ? 1 : 0;
            (labels[i] ? has_pos : has_neg) = true;
        }
        if (!has_pos) labels[0] = 1;
        if (!has_neg) labels[n - 1] = 0;
        const double ap = average_precision(scores, labels);
        const double oracle = oracles::brute_force_average_precision(scores, labels);
        CHECK(std::abs(ap - oracle) < 1e-12);
    }
}

TEST_CASE("average precision is invariant under monotone score transforms") {
    RandomStream rng(103);
    std::vector<double> scores(10);
    std::vector<int> labels(10);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        scores[i] = rng.uniform01();
        labels[i] = rng.uniform01() < 0.4 ? 1 : 0;
    }
    labels[0] = 1;
    labels[1] = 0;
    const double base = average_precision(scores, labels);
    std::vector<double> transformed = scores;
    for (double& s : transformed) s = std::exp(3.0 * s) + 7.0;
    CHECK(average_precision(transformed, labels) == doctest::Approx(base).epsilon(1e-15));
}

TEST_CASE("mtta protocol") {
    SUBCASE("single-point grid equals the mean TTA at that threshold") {
        std::vector<PredictionRecord> records;
        std::vector<double> p1(40, 0.0);
        for (std::size_t t = 10; t < 40; ++t) p1[t] = 0.8;
        records.push_back(make_record(p1, true, 30, 10.0));
        std::vector<double> p2(40, 0.0);
        for (std::size_t t = 20; t < 40; ++t) p2[t] = 0.9;
        records.push_back(make_record(p2, true, 36, 10.0));
        records.push_back(make_record(std::vector<double>(40, 0.2), false, 0, 10.0));

        const double expected = ((30.0 - 10.0) / 10.0 + (36.0 - 20.0) / 10.0) / 2.0;
        CHECK(mtta(records, {0.5}) == doctest::Approx(expected).epsilon(1e-12));
    }
    SUBCASE("constant full-confidence trace gives tau/fps everywhere") {
        const std::size_t n = 50;
        std::vector<PredictionRecord> records = {
            make_record(std::vector<double>(n, 1.0), true, n, 10.0)};
        CHECK(mtta(records, default_threshold_grid()) ==
              doctest::Approx(static_cast<double>(n) / 10.0).epsilon(1e-12));
    }
    SUBCASE("thresholds nobody crosses contribute zero") {
        std::vector<PredictionRecord> records = {
            make_record(std::vector<double>(10, 0.4), true, 8, 10.0)};
        // grid {0.3, 0.9}: crossing at t=0 for 0.3 only
        const double expected = ((8.0 - 0.0) / 10.0 + 0.0) / 2.0;
        CHECK(mtta(records, {0.3, 0.9}) == doctest::Approx(expected).epsilon(1e-12));
    }
    SUBCASE("no positive records is out of domain") {
        std::vector<PredictionRecord> records = {
            make_record({0.1, 0.2}, false, 0, 10.0)};
        CHECK_THROWS_AS(mtta(records, default_threshold_grid()), domain_error);
    }
}

TEST_CASE("per-video TTA is non-increasing in the threshold") {
    RandomStream rng(105);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 20 + rng.uniform_index(40);
        std::vector<double> probs(n);
        for (double& p : probs) p = rng.uniform01();
        const std::size_t tau = 1 + rng.uniform_index(n);
        const PredictionRecord rec = make_record(probs, true, tau, 10.0);
        double prev = 1e300;
        for (double th : default_threshold_grid()) {
            const auto dt = tta(rec, th);
            if (!dt) break; // once it stops crossing it never crosses again
            CHECK(*dt <= prev + 1e-12);
            prev = *dt;
        }
    }
}

TEST_CASE("mtta ignores frames appended after the accident (single record)") {
    RandomStream rng(107);
    std::vector<double> probs(30);
    for (double& p : probs) p = rng.uniform01() * 0.9;
    const std::size_t tau = 25;
    const PredictionRecord base = make_record(probs, true, tau, 10.0);
    const double before = mtta({base}, default_threshold_grid());

    std::vector<double> extended = probs;
    for (int i = 0; i < 10; ++i) extended.push_back(rng.uniform01());
    const PredictionRecord longer = make_record(extended, true, tau, 10.0);
    const double after = mtta({longer}, default_threshold_grid());
    CHECK(after == doctest::Approx(before).epsilon(1e-12));
}

TEST_CASE("compute_metrics aggregates counts and PR curve") {
    std::vector<PredictionRecord> records;
    std::vector<double> hot(10, 0.0);
    hot[5] = 0.9;
    records.push_back(make_record(hot, true, 8, 10.0));
    records.push_back(make_record(std::vector<double>(10, 0.2), false, 0, 10.0));
    records.push_back(make_record(std::vector<double>(10, 0.7), false, 0, 10.0));

    const MetricsReport rep = compute_metrics(records, default_threshold_grid());
    CHECK(rep.positives == 1);
    CHECK(rep.negatives == 2);
    CHECK(rep.true_positives == 1);
    CHECK(rep.false_positives == 1);
    REQUIRE(!rep.recall.empty());
    CHECK(rep.recall.back() == doctest::Approx(1.0));
    CHECK(rep.tta_per_video.size() == default_threshold_grid().size());
}

TEST_CASE("probability SVG honors the plot contract") {
    namespace fs = std::filesystem;
    const std::string path = (fs::temp_directory_path() / "foresight_plot.svg").string();

    SUBCASE("constant-zero trace draws no alarm marker") {
        write_probability_svg({{"window=10", std::vector<double>(40, 0.0)}}, 20.0, 30,
                              0.5, path);
        std::ifstream in(path);
        std::string content((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
        CHECK(content.find("<circle") == std::string::npos);   // no alarm
        CHECK(content.find("stroke=\"red\"") != std::string::npos); // accident marker
        CHECK(content.find("time (s)") != std::string::npos);
        CHECK(content.find(">2.00<") != std::string::npos); // 40 frames / 20 fps
        fs::remove(path);
    }
    SUBCASE("crossing trace draws the alarm marker") {
        std::vector<double> probs(40, 0.1);
        for (std::size_t t = 20; t < 40; ++t) probs[t] = 0.9;
        write_probability_svg({{"window=10", probs}, {"window=0", probs}}, 20.0, 30,
                              0.5, path);
        std::ifstream in(path);
        std::string content((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
        CHECK(content.find("<circle") != std::string::npos);
        CHECK(content.find("window=0") != std::string::npos);
        fs::remove(path);
    }
}
