// Per-frame temporal machinery: input fusion, the GRU step, the
// frame-wise probability head, the time-weight head, and the rolling
// hidden-state history buffer.

#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <vector>

#include "foresight/errors.hpp"
#include "foresight/linalg.hpp"

namespace foresight {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct GruParams {
    Matrix w_update, w_reset, w_cand; // d_h x d_x
    Matrix u_update, u_reset, u_cand; // d_h x d_h
    Vector b_update, b_reset, b_cand; // d_h
};

struct ProbHeadParams {
    Matrix w1; // d_head x d_h
    Vector b1; // d_head
    Matrix w2; // 2 x d_head
    Vector b2; // 2
};

struct TimeWeightParams {
    Vector w; // d_h
    Vector b; // 1
};

struct TemporalParams {
    GruParams gru;
    ProbHeadParams prob;
    TimeWeightParams time_weight;
};

// x = concat(image_feature, mean over present objects of object features)
inline void fuse_inputs(const Vector& f_img, const Matrix& f_obj,
                        const std::uint8_t* mask, Vector& x) {
    const std::size_t d_img = f_img.size();
    const std::size_t d_obj = f_obj.cols();
    std::size_t present = 0;
    x.assign(d_img + d_obj, 0.0);
    for (std::size_t i = 0; i < d_img; ++i) x[i] = f_img[i];
    for (std::size_t k = 0; k < f_obj.rows(); ++k) {
        if (!mask[k]) continue;
        ++present;
        const double* row = f_obj.row(k);
        for (std::size_t j = 0; j < d_obj; ++j) x[d_img + j] += row[j];
    }
    if (present == 0)
        throw empty_frame_error("fuse_inputs: frame has no present object");
    const double inv = 1.0 / static_cast<double>(present);
    for (std::size_t j = 0; j < d_obj; ++j) x[d_img + j] *= inv;
}

inline void fuse_inputs_backward(const Vector& dx, std::size_t d_img,
                                 const std::uint8_t* mask, std::size_t present,
                                 Vector& d_f_img, Matrix& d_f_obj) {
    for (std::size_t i = 0; i < d_img; ++i) d_f_img[i] += dx[i];
    const double inv = 1.0 / static_cast<double>(present);
    const std::size_t d_obj = d_f_obj.cols();
    for (std::size_t k = 0; k < d_f_obj.rows(); ++k) {
        if (!mask[k]) continue;
        double* row = d_f_obj.row(k);
        for (std::size_t j = 0; j < d_obj; ++j) row[j] += inv * dx[d_img + j];
    }
}

struct GruCache {
    Vector update; // z
    Vector reset;  // r
    Vector cand;   // h~
    Vector h;      // output hidden state
};

// z = sigma(Wz x + Uz h + bz); r = sigma(Wr x + Ur h + br);
// h~ = tanh(Wh x + Uh (r . h) + bh); h' = (1 - z) . h + z . h~
inline void gru_step(const Vector& x, const Vector& h_prev, const GruParams& p,
                     GruCache& c) {
    require_size(x, p.w_update.cols(), "gru_step: input");
    require_size(h_prev, p.u_update.cols(), "gru_step: hidden state");
    const std::size_t d_h = h_prev.size();

    matvec(p.w_update, x, c.update);
    matvec_add(p.u_update, h_prev, c.update);
    add_inplace(c.update, p.b_update);
    for (double& v : c.update) v = sigmoid(v);

    matvec(p.w_reset, x, c.reset);
    matvec_add(p.u_reset, h_prev, c.reset);
    add_inplace(c.reset, p.b_reset);
    for (double& v : c.reset) v = sigmoid(v);

    Vector gated(d_h);
    for (std::size_t i = 0; i < d_h; ++i) gated[i] = c.reset[i] * h_prev[i];
    matvec(p.w_cand, x, c.cand);
    matvec_add(p.u_cand, gated, c.cand);
    add_inplace(c.cand, p.b_cand);
    for (double& v : c.cand) v = std::tanh(v);

    c.h.resize(d_h);
    for (std::size_t i = 0; i < d_h; ++i)
        c.h[i] = (1.0 - c.update[i]) * h_prev[i] + c.update[i] * c.cand[i];
}

inline Vector gru_step(const Vector& x, const Vector& h_prev, const GruParams& p) {
    GruCache c;
    gru_step(x, h_prev, p, c);
    return c.h;
}

// Backpropagation through one step: dh is the gradient at c.h; dx and
// dh_prev are accumulated.
inline void gru_step_backward(const Vector& x, const Vector& h_prev,
                              const GruParams& p, const GruCache& c, const Vector& dh,
                              GruParams& grads, Vector& dx, Vector& dh_prev) {
    const std::size_t d_h = h_prev.size();
    Vector d_update(d_h), d_cand_pre(d_h);
    for (std::size_t i = 0; i < d_h; ++i) {
        const double dz = dh[i] * (c.cand[i] - h_prev[i]);
        d_update[i] = dz * c.update[i] * (1.0 - c.update[i]);
        const double dc = dh[i] * c.update[i];
        d_cand_pre[i] = dc * (1.0 - c.cand[i] * c.cand[i]);
        dh_prev[i] += dh[i] * (1.0 - c.update[i]);
    }

    // candidate branch
    add_inplace(grads.b_cand, d_cand_pre);
    add_outer(grads.w_cand, d_cand_pre, x);
    Vector gated(d_h);
    for (std::size_t i = 0; i < d_h; ++i) gated[i] = c.reset[i] * h_prev[i];
    add_outer(grads.u_cand, d_cand_pre, gated);
    matvec_transposed_add(p.w_cand, d_cand_pre, dx);
    Vector d_gated(d_h, 0.0);
    matvec_transposed_add(p.u_cand, d_cand_pre, d_gated);
    Vector d_reset(d_h);
    for (std::size_t i = 0; i < d_h; ++i) {
        d_reset[i] = d_gated[i] * h_prev[i] * c.reset[i] * (1.0 - c.reset[i]);
        dh_prev[i] += d_gated[i] * c.reset[i];
    }

    // reset branch
    add_inplace(grads.b_reset, d_reset);
    add_outer(grads.w_reset, d_reset, x);
    add_outer(grads.u_reset, d_reset, h_prev);
    matvec_transposed_add(p.w_reset, d_reset, dx);
    matvec_transposed_add(p.u_reset, d_reset, dh_prev);

    // update branch
    add_inplace(grads.b_update, d_update);
    add_outer(grads.w_update, d_update, x);
    add_outer(grads.u_update, d_update, h_prev);
    matvec_transposed_add(p.w_update, d_update, dx);
    matvec_transposed_add(p.u_update, d_update, dh_prev);
}

struct ProbCache {
    Vector hidden_pre;
    Vector hidden;
    Vector logits; // 2
    double p = 0.0;
};

// Two-logit MLP + softmax; returns the accident-class probability,
// strictly inside (0, 1).
inline double predict_prob(const Vector& h, const ProbHeadParams& p, ProbCache& c) {
    require_size(h, p.w1.cols(), "predict_prob: hidden state");
    matvec(p.w1, h, c.hidden_pre);
    add_inplace(c.hidden_pre, p.b1);
    c.hidden.resize(c.hidden_pre.size());
    for (std::size_t i = 0; i < c.hidden.size(); ++i)
        c.hidden[i] = c.hidden_pre[i] > 0.0 ? c.hidden_pre[i] : 0.0;
    matvec(p.w2, c.hidden, c.logits);
    add_inplace(c.logits, p.b2);
    const double m = std::max(c.logits[0], c.logits[1]);
    const double e0 = std::exp(c.logits[0] - m);
    const double e1 = std::exp(c.logits[1] - m);
    c.p = e1 / (e0 + e1);
    // keep the open interval even when one exponential underflows
    if (c.p >= 1.0) c.p = 1.0 - 1e-15;
    if (c.p <= 0.0) c.p = 1e-300;
    return c.p;
}

inline double predict_prob(const Vector& h, const ProbHeadParams& p) {
    ProbCache c;
    return predict_prob(h, p, c);
}

inline void predict_prob_backward(const Vector& h, const ProbHeadParams& p,
                                  const ProbCache& c, double dp,
                                  ProbHeadParams& grads, Vector& dh) {
    // p = softmax(logits)[1]
    const double g = dp * c.p * (1.0 - c.p);
    Vector d_logits = {-g, g};
    add_inplace(grads.b2, d_logits);
    add_outer(grads.w2, d_logits, c.hidden);
    Vector d_hidden(c.hidden.size(), 0.0);
    matvec_transposed_add(p.w2, d_logits, d_hidden);
    for (std::size_t i = 0; i < d_hidden.size(); ++i)
        if (c.hidden_pre[i] <= 0.0) d_hidden[i] = 0.0;
    add_inplace(grads.b1, d_hidden);
    add_outer(grads.w1, d_hidden, h);
    matvec_transposed_add(p.w1, d_hidden, dh);
}

// omega = 1 + sigmoid(w . h + b), strictly inside (1, 2).
inline double time_weight(const Vector& h, const TimeWeightParams& p) {
    require_size(h, p.w.size(), "time_weight: hidden state");
    double w = 1.0 + sigmoid(dot(p.w, h) + p.b[0]);
    if (w >= 2.0) w = 2.0 - 1e-15;
    if (w <= 1.0) w = 1.0 + 1e-15;
    return w;
}

inline void time_weight_backward(const Vector& h, const TimeWeightParams& p,
                                 double omega, double d_omega,
                                 TimeWeightParams& grads, Vector& dh) {
    const double du = d_omega * (omega - 1.0) * (2.0 - omega);
    grads.b[0] += du;
    axpy(du, h, grads.w);
    axpy(du, p.w, dh);
}

// FIFO buffer of the most recent hidden states; capacity W >= 1.
class HistoryBuffer {
public:
    explicit HistoryBuffer(std::size_t capacity) : capacity_(capacity) {
        if (capacity == 0)
            throw config_error("HistoryBuffer: capacity must be >= 1 (window 0 bypasses the buffer)");
    }

    void push(const Vector& h) {
        states_.push_back(h);
        if (states_.size() > capacity_) states_.pop_front();
    }

    std::size_t size() const { return states_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Vector& at(std::size_t i) const { return states_[i]; } // oldest first

    // Arithmetic mean of the buffered states.
    Vector summary() const {
        if (states_.empty())
            throw domain_error("HistoryBuffer: summary of empty buffer");
        Vector mean(states_.front().size(), 0.0);
        for (const Vector& s : states_) add_inplace(mean, s);
        scale_inplace(mean, 1.0 / static_cast<double>(states_.size()));
        return mean;
    }

private:
    std::size_t capacity_;
    std::deque<Vector> states_;
};

} // namespace foresight
