// Object-aware refinement: scores each present object against the
// previous hidden state, softmax-normalizes over present objects, and
// rescales the object vectors by their weights. Forward and reverse
// passes live together so the chain stays auditable.

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "foresight/errors.hpp"
#include "foresight/linalg.hpp"

namespace foresight {

struct AttentionParams {
    Matrix w_state;  // d_att x d_hidden
    Matrix w_object; // d_att x d_obj
    Vector bias;     // d_att
    Vector w_score;  // d_att -> one scalar score per object
};

// Read-only view of K contiguous rows of a row-major matrix.
struct ConstRows {
    const double* base = nullptr;
    std::size_t count = 0;
    std::size_t dim = 0;

    const double* row(std::size_t i) const { return base + i * dim; }
};

inline ConstRows object_rows(const Matrix& m, std::size_t first_row, std::size_t count) {
    return ConstRows{m.row(first_row), count, m.cols()};
}

struct AttentionCache {
    Vector shared;   // w_state * h_prev + bias
    Matrix energy;   // K x d_att, tanh energies; rows of absent objects are zero
    Vector scores;   // K
    Vector weights;  // K simplex over present objects, absent entries exactly 0
    Matrix refined;  // K x d_obj
    bool uniform = false; // ablation pass-through: uniform weights, no params
};

// Eqs. of the object-aware module: e_k = tanh(W_s h_prev + W_o F_k + b),
// s_k = w_score . e_k, weights = masked softmax(s), refined_k = a_k * F_k.
inline void attend(const ConstRows& f_obj, const std::uint8_t* mask,
                   const Vector& h_prev, const AttentionParams& p,
                   AttentionCache& out) {
    const std::size_t k_objs = f_obj.count;
    const std::size_t d_att = p.bias.size();
    const std::size_t d_obj = f_obj.dim;
    if (p.w_state.rows() != d_att || p.w_object.rows() != d_att ||
        p.w_object.cols() != d_obj || p.w_score.size() != d_att)
        throw shape_error("attend: parameter shapes are inconsistent");
    require_size(h_prev, p.w_state.cols(), "attend: hidden state");

    std::size_t present = 0;
    for (std::size_t k = 0; k < k_objs; ++k) present += mask[k] ? 1 : 0;
    if (present == 0)
        throw empty_frame_error("attend: frame has no present object");

    out.uniform = false;
    matvec(p.w_state, h_prev, out.shared);
    add_inplace(out.shared, p.bias);

    out.energy = Matrix(k_objs, d_att);
    out.scores.assign(k_objs, 0.0);
    for (std::size_t k = 0; k < k_objs; ++k) {
        if (!mask[k]) continue;
        const double* f = f_obj.row(k);
        double* e = out.energy.row(k);
        double score = 0.0;
        for (std::size_t i = 0; i < d_att; ++i) {
            double pre = out.shared[i];
            const double* wrow = p.w_object.row(i);
            for (std::size_t j = 0; j < d_obj; ++j) pre += wrow[j] * f[j];
            e[i] = std::tanh(pre);
            score += p.w_score[i] * e[i];
        }
        out.scores[k] = score;
    }

    // Masked softmax; absent objects get exactly zero weight.
    double max_score = -1e300;
    for (std::size_t k = 0; k < k_objs; ++k)
        if (mask[k]) max_score = std::max(max_score, out.scores[k]);
    out.weights.assign(k_objs, 0.0);
    double denom = 0.0;
    for (std::size_t k = 0; k < k_objs; ++k) {
        if (!mask[k]) continue;
        out.weights[k] = std::exp(out.scores[k] - max_score);
        denom += out.weights[k];
    }
    for (std::size_t k = 0; k < k_objs; ++k) out.weights[k] /= denom;

    out.refined = Matrix(k_objs, d_obj);
    for (std::size_t k = 0; k < k_objs; ++k) {
        if (!mask[k]) continue;
        const double a = out.weights[k];
        const double* f = f_obj.row(k);
        double* r = out.refined.row(k);
        for (std::size_t j = 0; j < d_obj; ++j) r[j] = a * f[j];
    }
}

// Ablation pass-through: uniform weights over present objects.
inline void attend_uniform(const ConstRows& f_obj, const std::uint8_t* mask,
                           AttentionCache& out) {
    const std::size_t k_objs = f_obj.count;
    const std::size_t d_obj = f_obj.dim;
    std::size_t present = 0;
    for (std::size_t k = 0; k < k_objs; ++k) present += mask[k] ? 1 : 0;
    if (present == 0)
        throw empty_frame_error("attend: frame has no present object");

    out.uniform = true;
    out.shared.clear();
    out.energy = Matrix();
    out.scores.assign(k_objs, 0.0);
    out.weights.assign(k_objs, 0.0);
    const double a = 1.0 / static_cast<double>(present);
    out.refined = Matrix(k_objs, d_obj);
    for (std::size_t k = 0; k < k_objs; ++k) {
        if (!mask[k]) continue;
        out.weights[k] = a;
        const double* f = f_obj.row(k);
        double* r = out.refined.row(k);
        for (std::size_t j = 0; j < d_obj; ++j) r[j] = a * f[j];
    }
}

// Accumulates parameter gradients, the hidden-state gradient, and
// (optionally) the object-feature gradients for d(refined) upstream.
inline void attend_backward(const ConstRows& f_obj, const std::uint8_t* mask,
                            const Vector& h_prev, const AttentionParams& p,
                            const AttentionCache& c, const Matrix& d_refined,
                            AttentionParams& grads, Vector& dh_prev,
                            Matrix* d_f_obj) {
    const std::size_t k_objs = f_obj.count;
    const std::size_t d_obj = f_obj.dim;

    if (c.uniform) {
        if (d_f_obj) {
            for (std::size_t k = 0; k < k_objs; ++k) {
                if (!mask[k]) continue;
                const double a = c.weights[k];
                const double* dr = d_refined.row(k);
                double* df = d_f_obj->row(k);
                for (std::size_t j = 0; j < d_obj; ++j) df[j] += a * dr[j];
            }
        }
        return;
    }

    const std::size_t d_att = p.bias.size();

    // refined_k = a_k * F_k
    Vector d_alpha(k_objs, 0.0);
    for (std::size_t k = 0; k < k_objs; ++k) {
        if (!mask[k]) continue;
        const double* dr = d_refined.row(k);
        const double* f = f_obj.row(k);
        double acc = 0.0;
        for (std::size_t j = 0; j < d_obj; ++j) acc += dr[j] * f[j];
        d_alpha[k] = acc;
        if (d_f_obj) {
            const double a = c.weights[k];
            double* df = d_f_obj->row(k);
            for (std::size_t j = 0; j < d_obj; ++j) df[j] += a * dr[j];
        }
    }

    // softmax over present objects
    double weighted = 0.0;
    for (std::size_t k = 0; k < k_objs; ++k)
        if (mask[k]) weighted += c.weights[k] * d_alpha[k];

    Vector d_pre_sum(d_att, 0.0); // sum over objects of d(pre-tanh energy)
    Vector d_pre(d_att, 0.0);
    for (std::size_t k = 0; k < k_objs; ++k) {
        if (!mask[k]) continue;
        const double ds = c.weights[k] * (d_alpha[k] - weighted);
        const double* e = c.energy.row(k);
        const double* f = f_obj.row(k);
        for (std::size_t i = 0; i < d_att; ++i) {
            grads.w_score[i] += ds * e[i];
            d_pre[i] = ds * p.w_score[i] * (1.0 - e[i] * e[i]);
            d_pre_sum[i] += d_pre[i];
        }
        // per-object terms: W_o and the object features
        for (std::size_t i = 0; i < d_att; ++i) {
            const double g = d_pre[i];
            if (g == 0.0) continue;
            double* wrow = grads.w_object.row(i);
            for (std::size_t j = 0; j < d_obj; ++j) wrow[j] += g * f[j];
        }
        if (d_f_obj) {
            double* df = d_f_obj->row(k);
            for (std::size_t i = 0; i < d_att; ++i) {
                const double g = d_pre[i];
                if (g == 0.0) continue;
                const double* wrow = p.w_object.row(i);
                for (std::size_t j = 0; j < d_obj; ++j) df[j] += wrow[j] * g;
            }
        }
    }

    // shared terms: W_s h_prev + bias entered every present object's energy
    add_inplace(grads.bias, d_pre_sum);
    add_outer(grads.w_state, d_pre_sum, h_prev);
    matvec_transposed_add(p.w_state, d_pre_sum, dh_prev);
}

} // namespace foresight
