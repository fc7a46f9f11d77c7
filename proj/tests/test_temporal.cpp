#include <doctest.h>

#include <cmath>

#include "foresight/rng.hpp"
#include "foresight/temporal.hpp"

using namespace foresight;

namespace {

GruParams zero_gru(std::size_t dx, std::size_t dh) {
    GruParams p;
    p.w_update = Matrix(dh, dx);
    p.w_reset = Matrix(dh, dx);
    p.w_cand = Matrix(dh, dx);
    p.u_update = Matrix(dh, dh);
    p.u_reset = Matrix(dh, dh);
    p.u_cand = Matrix(dh, dh);
    p.b_update.assign(dh, 0.0);
    p.b_reset.assign(dh, 0.0);
    p.b_cand.assign(dh, 0.0);
    return p;
}

void randomize_gru(GruParams& p, RandomStream& rng, double scale) {
    for (Matrix* m : {&p.w_update, &p.w_reset, &p.w_cand, &p.u_update, &p.u_reset,
                      &p.u_cand})
        for (double& v : m->raw()) v = scale * (2.0 * rng.uniform01() - 1.0);
    for (Vector* v : {&p.b_update, &p.b_reset, &p.b_cand})
        for (double& x : *v) x = scale * (2.0 * rng.uniform01() - 1.0);
}

} // namespace

TEST_CASE("fuse_inputs concatenates image features with the object mean") {
    SUBCASE("single present object passes through") {
        Matrix objs(2, 2);
        objs(0, 0) = 1.0;
        objs(0, 1) = 2.0;
        objs(1, 0) = 9.0;
        objs(1, 1) = 9.0;
        const std::vector<std::uint8_t> mask = {1, 0};
        Vector x;
        fuse_inputs(Vector{5.0}, objs, mask.data(), x);
        CHECK(x == Vector{5.0, 1.0, 2.0});
    }
    SUBCASE("identical vectors are idempotent under the mean") {
        Matrix objs(2, 2);
        objs(0, 0) = 0.25;
        objs(0, 1) = -1.5;
        objs(1, 0) = 0.25;
        objs(1, 1) = -1.5;
        const std::vector<std::uint8_t> mask = {1, 1};
        Vector x;
        fuse_inputs(Vector{}, objs, mask.data(), x);
        CHECK(x == Vector{0.25, -1.5});
    }
    SUBCASE("hand layout for d_img=2, d_obj=2, K=2") {
        Matrix objs(2, 2);
        objs(0, 0) = 1.0;
        objs(0, 1) = 3.0;
        objs(1, 0) = 5.0;
        objs(1, 1) = 7.0;
        const std::vector<std::uint8_t> mask = {1, 1};
        Vector x;
        fuse_inputs(Vector{10.0, 20.0}, objs, mask.data(), x);
        CHECK(x == Vector{10.0, 20.0, 3.0, 5.0});
    }
    SUBCASE("empty frame raises") {
        Matrix objs(1, 2);
        const std::vector<std::uint8_t> mask = {0};
        Vector x;
        CHECK_THROWS_AS(fuse_inputs(Vector{1.0}, objs, mask.data(), x),
                        empty_frame_error);
    }
}

TEST_CASE("gru_step closed forms") {
    SUBCASE("zero parameters halve the previous state") {
        const GruParams p = zero_gru(2, 3);
        const Vector h_prev = {1.0, -2.0, 4.0};
        const Vector h = gru_step(Vector{0.7, -0.3}, h_prev, p);
        for (std::size_t i = 0; i < 3; ++i)
            CHECK(h[i] == doctest::Approx(0.5 * h_prev[i]).epsilon(1e-12));
    }
    SUBCASE("zero parameters and zero state stay zero") {
        const GruParams p = zero_gru(2, 3);
        const Vector h = gru_step(Vector{0.7, -0.3}, Vector(3, 0.0), p);
        for (double v : h) CHECK(v == 0.0);
    }
    SUBCASE("random 2-dim case matches a step-by-step hand computation") {
        GruParams p = zero_gru(2, 2);
        const double wz[2][2] = {{0.2, -0.3}, {0.1, 0.4}};
        const double wr[2][2] = {{-0.2, 0.5}, {0.3, 0.0}};
        const double wh[2][2] = {{0.6, -0.1}, {-0.4, 0.2}};
        const double uz[2][2] = {{0.1, 0.2}, {-0.3, 0.1}};
        const double ur[2][2] = {{0.4, -0.2}, {0.2, 0.3}};
        const double uh[2][2] = {{-0.1, 0.3}, {0.5, -0.2}};
        const double bz[2] = {0.05, -0.02};
        const double br[2] = {-0.04, 0.06};
        const double bh[2] = {0.1, -0.1};
        for (int i = 0; i < 2; ++i) {
            p.b_update[i] = bz[i];
            p.b_reset[i] = br[i];
            p.b_cand[i] = bh[i];
            for (int j = 0; j < 2; ++j) {
                p.w_update(i, j) = wz[i][j];
                p.w_reset(i, j) = wr[i][j];
                p.w_cand(i, j) = wh[i][j];
                p.u_update(i, j) = uz[i][j];
                p.u_reset(i, j) = ur[i][j];
                p.u_cand(i, j) = uh[i][j];
            }
        }
        const double x[2] = {0.8, -0.6};
        const double hp[2] = {0.3, 0.9};

        double z[2], r[2], cand[2], expected[2];
        for (int i = 0; i < 2; ++i) {
            double az = bz[i], ar = br[i];
            for (int j = 0; j < 2; ++j) {
                az += wz[i][j] * x[j] + uz[i][j] * hp[j];
                ar += wr[i][j] * x[j] + ur[i][j] * hp[j];
            }
            z[i] = 1.0 / (1.0 + std::exp(-az));
            r[i] = 1.0 / (1.0 + std::exp(-ar));
        }
        for (int i = 0; i < 2; ++i) {
            double ah = bh[i];
            for (int j = 0; j < 2; ++j)
                ah += wh[i][j] * x[j] + uh[i][j] * (r[j] * hp[j]);
            cand[i] = std::tanh(ah);
            expected[i] = (1.0 - z[i]) * hp[i] + z[i] * cand[i];
        }

        const Vector h = gru_step(Vector{x[0], x[1]}, Vector{hp[0], hp[1]}, p);
        for (int i = 0; i < 2; ++i) CHECK(std::abs(h[i] - expected[i]) < 1e-12);
    }
}

TEST_CASE("gru gradients match finite differences through a 5-step unroll") {
    RandomStream rng(61);
    const std::size_t dx = 2, dh = 3, steps = 5;
    GruParams p = zero_gru(dx, dh);
    randomize_gru(p, rng, 0.6);

    std::vector<Vector> xs(steps, Vector(dx));
    for (Vector& x : xs)
        for (double& v : x) v = rng.gaussian();
    Vector probe(dh);
    for (double& v : probe) v = rng.gaussian();

    auto unrolled_loss = [&](const GruParams& params) {
        Vector h(dh, 0.0);
        for (const Vector& x : xs) h = gru_step(x, h, params);
        return dot(probe, h);
    };

    // analytic: forward with caches, then backprop through time
    std::vector<GruCache> caches(steps);
    Vector h(dh, 0.0);
    for (std::size_t t = 0; t < steps; ++t) {
        gru_step(xs[t], h, p, caches[t]);
        h = caches[t].h;
    }
    GruParams grads = zero_gru(dx, dh);
    Vector dh_carry = probe;
    const Vector h_zero(dh, 0.0);
    for (std::size_t t = steps; t-- > 0;) {
        const Vector& h_prev = t > 0 ? caches[t - 1].h : h_zero;
        Vector dx_unused(dx, 0.0), dh_prev(dh, 0.0);
        gru_step_backward(xs[t], h_prev, p, caches[t], dh_carry, grads, dx_unused,
                          dh_prev);
        dh_carry = dh_prev;
    }

    const double step = 1e-6;
    auto fd_block = [&](std::vector<double>& data, const std::vector<double>& grad) {
        for (std::size_t i = 0; i < data.size(); ++i) {
            const double saved = data[i];
            data[i] = saved + step;
            const double up = unrolled_loss(p);
            data[i] = saved - step;
            const double down = unrolled_loss(p);
            data[i] = saved;
            const double fd = (up - down) / (2.0 * step);
            const double denom = std::max({1e-6, std::abs(fd), std::abs(grad[i])});
            CHECK(std::abs(fd - grad[i]) / denom < 1e-4);
        }
    };
    fd_block(p.w_update.raw(), grads.w_update.raw());
    fd_block(p.w_reset.raw(), grads.w_reset.raw());
    fd_block(p.w_cand.raw(), grads.w_cand.raw());
    fd_block(p.u_update.raw(), grads.u_update.raw());
    fd_block(p.u_reset.raw(), grads.u_reset.raw());
    fd_block(p.u_cand.raw(), grads.u_cand.raw());
    fd_block(p.b_update, grads.b_update);
    fd_block(p.b_reset, grads.b_reset);
    fd_block(p.b_cand, grads.b_cand);
}

TEST_CASE("probability head closed forms and range") {
    ProbHeadParams p;
    p.w1 = Matrix(2, 3);
    p.b1.assign(2, 0.0);
    p.w2 = Matrix(2, 2);
    p.b2.assign(2, 0.0);

    SUBCASE("zero parameters give 0.5") {
        CHECK(predict_prob(Vector{1.0, -1.0, 2.0}, p) == doctest::Approx(0.5));
    }
    SUBCASE("logits (0, ln 3) give 0.75") {
        p.b2 = {0.0, std::log(3.0)};
        CHECK(predict_prob(Vector{0.0, 0.0, 0.0}, p) ==
              doctest::Approx(0.75).epsilon(1e-12));
    }
    SUBCASE("output is strictly inside (0, 1)") {
        RandomStream rng(71);
        for (int trial = 0; trial < 100; ++trial) {
            for (double& v : p.w1.raw()) v = 3.0 * rng.gaussian();
            for (double& v : p.w2.raw()) v = 3.0 * rng.gaussian();
            for (double& v : p.b1) v = rng.gaussian();
            for (double& v : p.b2) v = rng.gaussian();
            Vector h = {rng.gaussian(), rng.gaussian(), rng.gaussian()};
            const double prob = predict_prob(h, p);
            CHECK(prob > 0.0);
            CHECK(prob < 1.0);
        }
    }
}

TEST_CASE("time weight closed forms and range") {
    TimeWeightParams p;
    p.w.assign(2, 0.0);
    p.b.assign(1, 0.0);

    SUBCASE("zero parameters give 1.5") {
        CHECK(time_weight(Vector{0.4, -0.4}, p) == doctest::Approx(1.5).epsilon(1e-15));
    }
    SUBCASE("saturating projection approaches 2 but stays below") {
        p.b[0] = 50.0;
        const double w = time_weight(Vector{0.0, 0.0}, p);
        CHECK(w > 1.999);
        CHECK(w <= 2.0);
    }
    SUBCASE("random 2-dim case matches hand evaluation") {
        p.w = {0.3, -0.8};
        p.b[0] = 0.25;
        const Vector h = {0.5, 0.1};
        const double u = 0.3 * 0.5 + (-0.8) * 0.1 + 0.25;
        const double expected = 1.0 + 1.0 / (1.0 + std::exp(-u));
        CHECK(std::abs(time_weight(h, p) - expected) < 1e-12);
    }
    SUBCASE("range (1, 2) over random parameters") {
        RandomStream rng(81);
        for (int trial = 0; trial < 100; ++trial) {
            p.w = {4.0 * rng.gaussian(), 4.0 * rng.gaussian()};
            p.b[0] = rng.gaussian();
            const double w = time_weight(Vector{rng.gaussian(), rng.gaussian()}, p);
            CHECK(w > 1.0);
            CHECK(w < 2.0);
        }
    }
}

TEST_CASE("history buffer is FIFO with mean summaries") {
    SUBCASE("capacity 1 mirrors the last state") {
        HistoryBuffer buf(1);
        buf.push(Vector{1.0, 2.0});
        CHECK(buf.summary() == Vector{1.0, 2.0});
        buf.push(Vector{-4.0, 6.0});
        CHECK(buf.summary() == Vector{-4.0, 6.0});
    }
    SUBCASE("mean of two states") {
        HistoryBuffer buf(4);
        buf.push(Vector{0.0, 0.0});
        buf.push(Vector{2.0, 4.0});
        CHECK(buf.summary() == Vector{1.0, 2.0});
    }
    SUBCASE("capacity 3 keeps exactly the last three, in order") {
        HistoryBuffer buf(3);
        for (double v : {1.0, 2.0, 3.0, 4.0, 5.0}) buf.push(Vector{v});
        REQUIRE(buf.size() == 3);
        CHECK(buf.at(0) == Vector{3.0});
        CHECK(buf.at(1) == Vector{4.0});
        CHECK(buf.at(2) == Vector{5.0});
    }
    SUBCASE("empty summary raises") {
        HistoryBuffer buf(2);
        CHECK_THROWS_AS(buf.summary(), domain_error);
    }
    SUBCASE("zero capacity is rejected") {
        CHECK_THROWS_AS(HistoryBuffer(0), config_error);
    }
}
