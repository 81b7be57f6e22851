#pragma once

#include <algorithm>
#include <optional>
#include <utility>

#include "sentipipe/mat.hpp"

namespace sentipipe {

enum class Mode { Train, Eval };
enum class DropStyle { Element, Channel };

namespace detail {

// c (+)= a * b, ikj order so the inner loop streams rows of b.
template <class T>
void mm_impl(Mat<T>& c, const Mat<T>& a, const Mat<T>& b, bool accumulate) {
    check(a.cols == b.rows, "matmul: inner dimensions differ (" + std::to_string(a.cols) +
                                " vs " + std::to_string(b.rows) + ")");
    check(c.rows == a.rows && c.cols == b.cols, "matmul: output shape mismatch");
    if (!accumulate) c.fill(T(0));
    for (int i = 0; i < a.rows; ++i) {
        const T* arow = a.row(i);
        T* crow = c.row(i);
        for (int k = 0; k < a.cols; ++k) {
            const T aik = arow[k];
            if (aik == T(0)) continue;
            const T* brow = b.row(k);
            for (int j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
}

}  // namespace detail

template <class T>
Mat<T> matmul(const Mat<T>& a, const Mat<T>& b) {
    Mat<T> c(a.rows, b.cols);
    detail::mm_impl(c, a, b, false);
    return c;
}

template <class T>
void mm_into(Mat<T>& c, const Mat<T>& a, const Mat<T>& b, bool accumulate = false) {
    detail::mm_impl(c, a, b, accumulate);
}

// c += a^T * b  (a: k x m, b: k x n, c: m x n)
template <class T>
void mm_at_b_into(Mat<T>& c, const Mat<T>& a, const Mat<T>& b, bool accumulate = true) {
    check(a.rows == b.rows, "mm_at_b: row counts differ");
    check(c.rows == a.cols && c.cols == b.cols, "mm_at_b: output shape mismatch");
    if (!accumulate) c.fill(T(0));
    for (int k = 0; k < a.rows; ++k) {
        const T* arow = a.row(k);
        const T* brow = b.row(k);
        for (int i = 0; i < a.cols; ++i) {
            const T aki = arow[i];
            if (aki == T(0)) continue;
            T* crow = c.row(i);
            for (int j = 0; j < b.cols; ++j) crow[j] += aki * brow[j];
        }
    }
}

// c += a * b^T  (a: m x k, b: n x k, c: m x n)
template <class T>
void mm_a_bt_into(Mat<T>& c, const Mat<T>& a, const Mat<T>& b, bool accumulate = true) {
    check(a.cols == b.cols, "mm_a_bt: column counts differ");
    check(c.rows == a.rows && c.cols == b.rows, "mm_a_bt: output shape mismatch");
    if (!accumulate) c.fill(T(0));
    for (int i = 0; i < a.rows; ++i) {
        const T* arow = a.row(i);
        T* crow = c.row(i);
        for (int j = 0; j < b.rows; ++j) {
            const T* brow = b.row(j);
            T acc = T(0);
            for (int k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
            crow[j] += acc;
        }
    }
}

template <class T>
void add_row_inplace(Mat<T>& x, const Mat<T>& rowvec) {
    check(rowvec.rows == 1 && rowvec.cols == x.cols, "add_row: shape mismatch");
    for (int i = 0; i < x.rows; ++i) {
        T* r = x.row(i);
        for (int j = 0; j < x.cols; ++j) r[j] += rowvec.data[j];
    }
}

template <class T>
Mat<T> tanh_ew(const Mat<T>& x) {
    Mat<T> y(x.rows, x.cols);
    for (size_t i = 0; i < x.size(); ++i) y.data[i] = std::tanh(x.data[i]);
    return y;
}

// Piecewise-linear gate nonlinearity: clamp(0.2 x + 0.5, 0, 1).
template <class T>
T hard_sigmoid(T v) {
    return std::min(T(1), std::max(T(0), T(0.2) * v + T(0.5)));
}

template <class T>
Mat<T> hard_sigmoid_ew(const Mat<T>& x) {
    Mat<T> y(x.rows, x.cols);
    for (size_t i = 0; i < x.size(); ++i) y.data[i] = hard_sigmoid(x.data[i]);
    return y;
}

// Derivative through the saturated value: 0.2 inside the linear region, 0 at the clamps.
template <class T>
T hard_sigmoid_deriv_from_value(T v) {
    return (v > T(0) && v < T(1)) ? T(0.2) : T(0);
}

template <class T>
Mat<T> softmax_rows(const Mat<T>& x) {
    Mat<T> y(x.rows, x.cols);
    for (int i = 0; i < x.rows; ++i) {
        const T* in = x.row(i);
        T* out = y.row(i);
        T mx = in[0];
        for (int j = 1; j < x.cols; ++j) mx = std::max(mx, in[j]);
        T sum = T(0);
        for (int j = 0; j < x.cols; ++j) {
            out[j] = std::exp(in[j] - mx);
            sum += out[j];
        }
        for (int j = 0; j < x.cols; ++j) out[j] /= sum;
    }
    return y;
}

template <class T>
struct CrossEntropyResult {
    T loss;
    Mat<T> grad_logits;  // (probs - one_hot) / batch, valid when probs = softmax(logits)
};

template <class T>
CrossEntropyResult<T> cross_entropy(const Mat<T>& probs, const std::vector<int>& targets) {
    check(static_cast<int>(targets.size()) == probs.rows, "cross_entropy: target count != batch");
    const T eps = T(1e-12);
    CrossEntropyResult<T> r{T(0), Mat<T>(probs.rows, probs.cols)};
    const T inv_batch = T(1) / T(probs.rows);
    for (int i = 0; i < probs.rows; ++i) {
        int t = targets[i];
        check(t >= 0 && t < probs.cols, "cross_entropy: target " + std::to_string(t) +
                                            " out of range [0, " + std::to_string(probs.cols) + ")");
        const T* p = probs.row(i);
        T* g = r.grad_logits.row(i);
        r.loss -= std::log(std::max(p[t], eps));
        for (int j = 0; j < probs.cols; ++j) g[j] = p[j] * inv_batch;
        g[t] -= inv_batch;
    }
    r.loss *= inv_batch;
    return r;
}

template <class T>
struct DropoutResult {
    Mat<T> y;
    Mat<T> mask;  // kept entries hold 1/(1-p), dropped entries 0
};

// Inverted dropout: eval mode is the exact identity. Element style draws one
// Bernoulli per entry; Channel style treats x as one sequence (rows =
// timesteps, cols = channels) and drops whole columns.
template <class T>
DropoutResult<T> dropout(const Mat<T>& x, double p, Mode mode, Rng& rng,
                         DropStyle style = DropStyle::Element) {
    check(p >= 0.0 && p < 1.0, "dropout: p must be in [0, 1)");
    DropoutResult<T> r{x, Mat<T>::full(x.rows, x.cols, T(1))};
    if (mode == Mode::Eval || p == 0.0) return r;
    const T scale = T(1.0 / (1.0 - p));
    if (style == DropStyle::Element) {
        for (size_t i = 0; i < x.size(); ++i) {
            const T m = rng.bernoulli(p) ? T(0) : scale;
            r.mask.data[i] = m;
            r.y.data[i] = x.data[i] * m;
        }
    } else {
        for (int j = 0; j < x.cols; ++j) {
            const T m = rng.bernoulli(p) ? T(0) : scale;
            for (int i = 0; i < x.rows; ++i) {
                r.mask(i, j) = m;
                r.y(i, j) = x(i, j) * m;
            }
        }
    }
    return r;
}

// Scaled keep/drop mask, one Bernoulli per entry. Used where one mask is
// reused across timesteps (the Dropout2d analogue over a batch).
template <class T>
Mat<T> make_dropout_mask(int rows, int cols, double p, Rng& rng) {
    check(p >= 0.0 && p < 1.0, "dropout: p must be in [0, 1)");
    Mat<T> mask = Mat<T>::full(rows, cols, T(1));
    if (p == 0.0) return mask;
    const T scale = T(1.0 / (1.0 - p));
    for (size_t i = 0; i < mask.size(); ++i) mask.data[i] = rng.bernoulli(p) ? T(0) : scale;
    return mask;
}

template <class T>
Mat<T> apply_mask(const Mat<T>& x, const Mat<T>& mask) {
    check(x.same_shape(mask), "apply_mask: shape mismatch");
    Mat<T> y(x.rows, x.cols);
    for (size_t i = 0; i < x.size(); ++i) y.data[i] = x.data[i] * mask.data[i];
    return y;
}

}  // namespace sentipipe
