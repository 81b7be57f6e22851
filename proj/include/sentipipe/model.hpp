#pragma once

#include <array>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "sentipipe/ops.hpp"
#include "sentipipe/textpipe.hpp"

namespace sentipipe {

// Network shape: tanh-bounded embedding -> channel dropout -> two hard-sigmoid
// bidirectional LSTM layers -> attention pooling over the concatenated
// [embedding ; lstm0 ; lstm1] features -> dropout -> linear classifier.
// Defaults give the 256 / 512+512 / 512+512 stack with a 2304-dim attention
// input; everything scales down for fast tests.
struct ModelConfig {
    int vocab_size = 0;
    int embed_dim = 256;
    int lstm_hidden_per_dir = 512;
    int num_classes = 3;
    float embed_dropout_p = 0.1f;
    float final_dropout_p = 0.5f;
    int max_len = 64;

    int lstm_out_dim() const { return 2 * lstm_hidden_per_dir; }
    int attention_dim() const { return embed_dim + 2 * lstm_out_dim(); }

    void validate() const {
        check(vocab_size >= 2, "ModelConfig: vocab_size must cover pad and unk");
        check(embed_dim >= 1 && lstm_hidden_per_dir >= 1 && num_classes >= 2 && max_len >= 1,
              "ModelConfig: dimensions must be positive");
        check(embed_dropout_p >= 0.f && embed_dropout_p < 1.f && final_dropout_p >= 0.f &&
                  final_dropout_p < 1.f,
              "ModelConfig: dropout probabilities must be in [0, 1)");
    }
};

enum class ParamGroup : int { Embed = 0, Lstm0 = 1, Lstm1 = 2, Attention = 3, Output = 4 };

inline constexpr std::array<ParamGroup, 5> kAllGroups = {
    ParamGroup::Embed, ParamGroup::Lstm0, ParamGroup::Lstm1, ParamGroup::Attention,
    ParamGroup::Output};

inline const char* to_string(ParamGroup g) {
    switch (g) {
        case ParamGroup::Embed: return "embed";
        case ParamGroup::Lstm0: return "lstm0";
        case ParamGroup::Lstm1: return "lstm1";
        case ParamGroup::Attention: return "attention";
        case ParamGroup::Output: return "output";
    }
    return "?";
}

// One LSTM direction; gate order along the 4H axis is [i f g o].
template <class T>
struct LstmDir {
    Mat<T> wx;  // d_in x 4H
    Mat<T> wh;  // H x 4H
    Mat<T> b;   // 1 x 4H

    bool operator==(const LstmDir&) const = default;
};

template <class T>
struct LstmLayer {
    LstmDir<T> fwd, bwd;

    bool operator==(const LstmLayer&) const = default;
};

template <class T>
struct ModelParams {
    Mat<T> embed;  // V x E
    LstmLayer<T> lstm0, lstm1;
    Mat<T> attn_w;  // 1 x D
    Mat<T> out_w;   // D x C
    Mat<T> out_b;   // 1 x C

    bool operator==(const ModelParams&) const = default;
};

// Visits every tensor with its owning group, in serialization order.
template <class T, class Fn>
void for_each_tensor(ModelParams<T>& p, Fn&& fn) {
    fn(ParamGroup::Embed, p.embed);
    for (auto* layer : {&p.lstm0, &p.lstm1}) {
        ParamGroup g = layer == &p.lstm0 ? ParamGroup::Lstm0 : ParamGroup::Lstm1;
        fn(g, layer->fwd.wx);
        fn(g, layer->fwd.wh);
        fn(g, layer->fwd.b);
        fn(g, layer->bwd.wx);
        fn(g, layer->bwd.wh);
        fn(g, layer->bwd.b);
    }
    fn(ParamGroup::Attention, p.attn_w);
    fn(ParamGroup::Output, p.out_w);
    fn(ParamGroup::Output, p.out_b);
}

template <class T, class Fn>
void for_each_tensor(const ModelParams<T>& p, Fn&& fn) {
    for_each_tensor(const_cast<ModelParams<T>&>(p),
                    [&](ParamGroup g, Mat<T>& m) { fn(g, static_cast<const Mat<T>&>(m)); });
}

template <class T>
ModelParams<T> zeros_like_params(const ModelParams<T>& p) {
    ModelParams<T> z = p;
    for_each_tensor(z, [](ParamGroup, Mat<T>& m) { m.fill(T(0)); });
    return z;
}

namespace detail {

template <class T>
void init_uniform(Mat<T>& m, int fan_in, Rng& rng) {
    const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& v : m.data) v = static_cast<T>(rng.uniform(-s, s));
}

template <class T>
LstmDir<T> init_lstm_dir(int d_in, int hidden, Rng& rng) {
    LstmDir<T> d;
    d.wx = Mat<T>(d_in, 4 * hidden);
    d.wh = Mat<T>(hidden, 4 * hidden);
    d.b = Mat<T>(1, 4 * hidden);
    init_uniform(d.wx, d_in, rng);
    init_uniform(d.wh, hidden, rng);
    // forget-gate bias starts at 1 so cell state survives early training
    for (int j = hidden; j < 2 * hidden; ++j) d.b(0, j) = T(1);
    return d;
}

}  // namespace detail

// Matrices start uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)]; biases are zero
// except the forget gates. The pad and unk embedding rows start at zero so ids
// the model never trains on inject no arbitrary signal at inference time.
template <class T>
ModelParams<T> init_params(const ModelConfig& cfg, Rng& rng) {
    cfg.validate();
    const int h = cfg.lstm_hidden_per_dir;
    ModelParams<T> p;
    p.embed = Mat<T>(cfg.vocab_size, cfg.embed_dim);
    detail::init_uniform(p.embed, cfg.embed_dim, rng);
    for (int j = 0; j < cfg.embed_dim; ++j) {
        p.embed(Vocabulary::kPad, j) = T(0);
        p.embed(Vocabulary::kUnk, j) = T(0);
    }
    p.lstm0.fwd = detail::init_lstm_dir<T>(cfg.embed_dim, h, rng);
    p.lstm0.bwd = detail::init_lstm_dir<T>(cfg.embed_dim, h, rng);
    p.lstm1.fwd = detail::init_lstm_dir<T>(cfg.lstm_out_dim(), h, rng);
    p.lstm1.bwd = detail::init_lstm_dir<T>(cfg.lstm_out_dim(), h, rng);
    p.attn_w = Mat<T>(1, cfg.attention_dim());
    detail::init_uniform(p.attn_w, cfg.attention_dim(), rng);
    p.out_w = Mat<T>(cfg.attention_dim(), cfg.num_classes);
    detail::init_uniform(p.out_w, cfg.attention_dim(), rng);
    p.out_b = Mat<T>(1, cfg.num_classes);
    return p;
}

template <class T>
struct Batch {
    int size = 0;
    int len = 0;
    std::vector<int32_t> ids;  // size x len, row-major
    Mat<T> mask;               // size x len, entries 0/1
    std::vector<int> labels;   // empty when unlabeled

    int32_t id_at(int b, int t) const { return ids[static_cast<size_t>(b) * len + t]; }
};

template <class T>
Batch<T> make_batch(std::span<const EncodedExample> examples) {
    check(!examples.empty(), "make_batch: batch must be non-empty");
    const int len = static_cast<int>(examples[0].ids.size());
    Batch<T> batch;
    batch.size = static_cast<int>(examples.size());
    batch.len = len;
    batch.ids.resize(static_cast<size_t>(batch.size) * len);
    batch.mask = Mat<T>(batch.size, len);
    bool any_label = false;
    for (const auto& e : examples) any_label = any_label || e.label.has_value();
    if (any_label) batch.labels.resize(static_cast<size_t>(batch.size));
    for (int b = 0; b < batch.size; ++b) {
        const auto& e = examples[static_cast<size_t>(b)];
        check(static_cast<int>(e.ids.size()) == len, "make_batch: ragged batch");
        for (int t = 0; t < len; ++t) {
            batch.ids[static_cast<size_t>(b) * len + t] = e.ids[static_cast<size_t>(t)];
            batch.mask(b, t) = static_cast<T>(e.mask[static_cast<size_t>(t)]);
        }
        if (any_label) {
            check(e.label.has_value(), "make_batch: mixed labeled/unlabeled batch");
            batch.labels[static_cast<size_t>(b)] = static_cast<int>(*e.label);
        }
    }
    return batch;
}

template <class T>
struct LstmDirCache {
    // all per timestep, batch x H; gate values are post-activation
    std::vector<Mat<T>> i, f, g, o, tanh_c;
    std::vector<Mat<T>> h, c;  // post-mask states
};

template <class T>
struct ForwardCache {
    Batch<T> batch;
    Mat<T> emb_mask;                    // batch x E channel-dropout mask (ones in eval)
    std::vector<Mat<T>> emb_tanh;       // per t, batch x E, before dropout
    std::vector<Mat<T>> emb;            // per t, batch x E, after dropout (lstm0/attention input)
    LstmDirCache<T> l0f, l0b, l1f, l1b;
    std::vector<Mat<T>> l0_out, l1_out; // per t, batch x 2H
    std::vector<Mat<T>> feat;           // per t, batch x D concat [emb ; l0 ; l1]
    Mat<T> attn_weights;                // batch x len, exactly 0 on padding
    Mat<T> pooled;                      // batch x D
    Mat<T> final_mask;                  // batch x D dropout mask
    Mat<T> pooled_drop;                 // batch x D
    Mat<T> logits, probs;               // batch x C
};

namespace detail {

// One direction of the masked LSTM recurrence. Padding timesteps carry h and c
// through unchanged, so trailing padding never alters the state.
template <class T>
void lstm_dir_forward(const std::vector<Mat<T>>& x, const Mat<T>& mask, bool reverse,
                      const LstmDir<T>& p, LstmDirCache<T>& cache) {
    const int len = static_cast<int>(x.size());
    const int batch = x[0].rows;
    const int hidden = p.wh.rows;
    check(x[0].cols == p.wx.rows, "lstm: input width " + std::to_string(x[0].cols) +
                                      " != expected " + std::to_string(p.wx.rows));
    cache.i.assign(len, Mat<T>());
    cache.f.assign(len, Mat<T>());
    cache.g.assign(len, Mat<T>());
    cache.o.assign(len, Mat<T>());
    cache.tanh_c.assign(len, Mat<T>());
    cache.h.assign(len, Mat<T>());
    cache.c.assign(len, Mat<T>());

    Mat<T> h_prev(batch, hidden), c_prev(batch, hidden);
    Mat<T> z(batch, 4 * hidden);
    for (int step = 0; step < len; ++step) {
        const int t = reverse ? len - 1 - step : step;
        mm_into(z, x[static_cast<size_t>(t)], p.wx, false);
        mm_into(z, h_prev, p.wh, true);
        add_row_inplace(z, p.b);

        Mat<T> gi(batch, hidden), gf(batch, hidden), gg(batch, hidden), go(batch, hidden);
        Mat<T> tc(batch, hidden), h(batch, hidden), c(batch, hidden);
        for (int b = 0; b < batch; ++b) {
            const T* zr = z.row(b);
            const T m = mask(b, t);
            for (int j = 0; j < hidden; ++j) {
                const T iv = hard_sigmoid(zr[j]);
                const T fv = hard_sigmoid(zr[hidden + j]);
                const T gv = std::tanh(zr[2 * hidden + j]);
                const T ov = hard_sigmoid(zr[3 * hidden + j]);
                const T c_new = fv * c_prev(b, j) + iv * gv;
                const T tcv = std::tanh(c_new);
                const T h_new = ov * tcv;
                gi(b, j) = iv;
                gf(b, j) = fv;
                gg(b, j) = gv;
                go(b, j) = ov;
                tc(b, j) = tcv;
                c(b, j) = m * c_new + (T(1) - m) * c_prev(b, j);
                h(b, j) = m * h_new + (T(1) - m) * h_prev(b, j);
            }
        }
        cache.i[static_cast<size_t>(t)] = std::move(gi);
        cache.f[static_cast<size_t>(t)] = std::move(gf);
        cache.g[static_cast<size_t>(t)] = std::move(gg);
        cache.o[static_cast<size_t>(t)] = std::move(go);
        cache.tanh_c[static_cast<size_t>(t)] = std::move(tc);
        cache.h[static_cast<size_t>(t)] = h;
        cache.c[static_cast<size_t>(t)] = c;
        h_prev = std::move(h);
        c_prev = std::move(c);
    }
}

// Backpropagation through time for one direction; accumulates into dp and dx.
template <class T>
void lstm_dir_backward(const std::vector<Mat<T>>& x, const Mat<T>& mask, bool reverse,
                       const LstmDir<T>& p, const LstmDirCache<T>& cache,
                       const std::vector<Mat<T>>& dh_out, LstmDir<T>& dp,
                       std::vector<Mat<T>>& dx) {
    const int len = static_cast<int>(x.size());
    const int batch = x[0].rows;
    const int hidden = p.wh.rows;
    Mat<T> dh_carry(batch, hidden), dc_carry(batch, hidden);
    Mat<T> dz(batch, 4 * hidden);
    const Mat<T> zero_state(batch, hidden);

    for (int step = len - 1; step >= 0; --step) {
        const int t = reverse ? len - 1 - step : step;
        const int t_prev = reverse ? t + 1 : t - 1;
        const bool has_prev = t_prev >= 0 && t_prev < len;
        const Mat<T>& h_prev = has_prev ? cache.h[static_cast<size_t>(t_prev)] : zero_state;
        const Mat<T>& c_prev = has_prev ? cache.c[static_cast<size_t>(t_prev)] : zero_state;
        const auto& gi = cache.i[static_cast<size_t>(t)];
        const auto& gf = cache.f[static_cast<size_t>(t)];
        const auto& gg = cache.g[static_cast<size_t>(t)];
        const auto& go = cache.o[static_cast<size_t>(t)];
        const auto& tc = cache.tanh_c[static_cast<size_t>(t)];

        for (int b = 0; b < batch; ++b) {
            const T m = mask(b, t);
            T* dzr = dz.row(b);
            for (int j = 0; j < hidden; ++j) {
                const T dht = dh_out[static_cast<size_t>(t)](b, j) + dh_carry(b, j);
                const T dct = dc_carry(b, j);
                const T dh_new = m * dht;
                const T dc_from_state = m * dct;
                const T dh_prev_direct = (T(1) - m) * dht;
                const T dc_prev_direct = (T(1) - m) * dct;

                const T do_ = dh_new * tc(b, j);
                const T dtc = dh_new * go(b, j);
                const T dc_new = dc_from_state + dtc * (T(1) - tc(b, j) * tc(b, j));

                const T di = dc_new * gg(b, j);
                const T df = dc_new * c_prev(b, j);
                const T dg = dc_new * gi(b, j);
                const T dc_prev_gate = dc_new * gf(b, j);

                dzr[j] = di * hard_sigmoid_deriv_from_value(gi(b, j));
                dzr[hidden + j] = df * hard_sigmoid_deriv_from_value(gf(b, j));
                dzr[2 * hidden + j] = dg * (T(1) - gg(b, j) * gg(b, j));
                dzr[3 * hidden + j] = do_ * hard_sigmoid_deriv_from_value(go(b, j));

                dh_carry(b, j) = dh_prev_direct;  // wh^T dz added below
                dc_carry(b, j) = dc_prev_gate + dc_prev_direct;
            }
        }
        mm_at_b_into(dp.wx, x[static_cast<size_t>(t)], dz);
        mm_at_b_into(dp.wh, h_prev, dz);
        for (int b = 0; b < batch; ++b) {
            const T* dzr = dz.row(b);
            for (int j = 0; j < 4 * hidden; ++j) dp.b(0, j) += dzr[j];
        }
        mm_a_bt_into(dx[static_cast<size_t>(t)], dz, p.wx);
        mm_a_bt_into(dh_carry, dz, p.wh);
    }
}

template <class T>
std::vector<Mat<T>> concat_dirs(const LstmDirCache<T>& fw, const LstmDirCache<T>& bw, int len) {
    const int batch = fw.h[0].rows;
    const int hidden = fw.h[0].cols;
    std::vector<Mat<T>> out(static_cast<size_t>(len));
    for (int t = 0; t < len; ++t) {
        Mat<T> m(batch, 2 * hidden);
        for (int b = 0; b < batch; ++b) {
            const T* hf = fw.h[static_cast<size_t>(t)].row(b);
            const T* hb = bw.h[static_cast<size_t>(t)].row(b);
            T* dst = m.row(b);
            std::copy(hf, hf + hidden, dst);
            std::copy(hb, hb + hidden, dst + hidden);
        }
        out[static_cast<size_t>(t)] = std::move(m);
    }
    return out;
}

}  // namespace detail

template <class T>
std::vector<Mat<T>> bilstm_forward(const std::vector<Mat<T>>& inputs, const Mat<T>& mask,
                                   const LstmLayer<T>& layer) {
    check(!inputs.empty(), "bilstm_forward: empty sequence");
    LstmDirCache<T> fw, bw;
    detail::lstm_dir_forward(inputs, mask, false, layer.fwd, fw);
    detail::lstm_dir_forward(inputs, mask, true, layer.bwd, bw);
    return detail::concat_dirs(fw, bw, static_cast<int>(inputs.size()));
}

// Embedding lookup -> tanh -> channel dropout. The dropout mask is one draw
// per (sequence, channel) and is shared across timesteps.
template <class T>
void embed_forward(const Batch<T>& batch, const ModelConfig& cfg, const ModelParams<T>& params,
                   Mode mode, Rng& rng, ForwardCache<T>& cache) {
    const int E = cfg.embed_dim;
    cache.emb_mask = (mode == Mode::Train && cfg.embed_dropout_p > 0.f)
                         ? make_dropout_mask<T>(batch.size, E, cfg.embed_dropout_p, rng)
                         : Mat<T>::full(batch.size, E, T(1));
    cache.emb_tanh.assign(static_cast<size_t>(batch.len), Mat<T>());
    cache.emb.assign(static_cast<size_t>(batch.len), Mat<T>());
    for (int t = 0; t < batch.len; ++t) {
        Mat<T> raw(batch.size, E), dropped(batch.size, E);
        for (int b = 0; b < batch.size; ++b) {
            const int32_t id = batch.id_at(b, t);
            check(id >= 0 && id < cfg.vocab_size, "embed_forward: token id out of range");
            const T* w = params.embed.row(id);
            T* r = raw.row(b);
            T* d = dropped.row(b);
            const T* msk = cache.emb_mask.row(b);
            for (int j = 0; j < E; ++j) {
                r[j] = std::tanh(w[j]);
                d[j] = r[j] * msk[j];
            }
        }
        cache.emb_tanh[static_cast<size_t>(t)] = std::move(raw);
        cache.emb[static_cast<size_t>(t)] = std::move(dropped);
    }
}

// Dot-product attention over the skip-connected features; padding gets weight
// exactly 0 and the weights of each example sum to 1.
template <class T>
void attention_forward(const ModelConfig& cfg, const ModelParams<T>& params,
                       ForwardCache<T>& cache) {
    const int batch = cache.batch.size;
    const int len = cache.batch.len;
    const int D = cfg.attention_dim();
    const int E = cfg.embed_dim;
    const int L = cfg.lstm_out_dim();

    cache.feat.assign(static_cast<size_t>(len), Mat<T>());
    for (int t = 0; t < len; ++t) {
        Mat<T> f(batch, D);
        for (int b = 0; b < batch; ++b) {
            T* dst = f.row(b);
            const T* e = cache.emb[static_cast<size_t>(t)].row(b);
            const T* h0 = cache.l0_out[static_cast<size_t>(t)].row(b);
            const T* h1 = cache.l1_out[static_cast<size_t>(t)].row(b);
            std::copy(e, e + E, dst);
            std::copy(h0, h0 + L, dst + E);
            std::copy(h1, h1 + L, dst + E + L);
        }
        cache.feat[static_cast<size_t>(t)] = std::move(f);
    }

    cache.attn_weights = Mat<T>(batch, len);
    cache.pooled = Mat<T>(batch, D);
    for (int b = 0; b < batch; ++b) {
        T mx = -std::numeric_limits<T>::infinity();
        std::vector<T> scores(static_cast<size_t>(len), T(0));
        bool any = false;
        for (int t = 0; t < len; ++t) {
            if (cache.batch.mask(b, t) == T(0)) continue;
            any = true;
            const T* f = cache.feat[static_cast<size_t>(t)].row(b);
            T s = T(0);
            for (int d = 0; d < D; ++d) s += f[d] * params.attn_w(0, d);
            scores[static_cast<size_t>(t)] = s;
            mx = std::max(mx, s);
        }
        check(any, "attention_forward: fully masked sequence");
        T sum = T(0);
        for (int t = 0; t < len; ++t) {
            if (cache.batch.mask(b, t) == T(0)) continue;
            const T e = std::exp(scores[static_cast<size_t>(t)] - mx);
            cache.attn_weights(b, t) = e;
            sum += e;
        }
        T* pooled = cache.pooled.row(b);
        for (int t = 0; t < len; ++t) {
            if (cache.batch.mask(b, t) == T(0)) {
                cache.attn_weights(b, t) = T(0);
                continue;
            }
            const T a = cache.attn_weights(b, t) / sum;
            cache.attn_weights(b, t) = a;
            const T* f = cache.feat[static_cast<size_t>(t)].row(b);
            for (int d = 0; d < D; ++d) pooled[d] += a * f[d];
        }
    }
}

template <class T>
ForwardCache<T> model_forward(const Batch<T>& batch, const ModelConfig& cfg,
                              const ModelParams<T>& params, Mode mode, Rng& rng) {
    check(batch.size >= 1, "model_forward: empty batch");
    check(params.embed.rows == cfg.vocab_size && params.embed.cols == cfg.embed_dim,
          "model_forward: params do not match config");
    ForwardCache<T> cache;
    cache.batch = batch;

    embed_forward(batch, cfg, params, mode, rng, cache);
    detail::lstm_dir_forward(cache.emb, batch.mask, false, params.lstm0.fwd, cache.l0f);
    detail::lstm_dir_forward(cache.emb, batch.mask, true, params.lstm0.bwd, cache.l0b);
    cache.l0_out = detail::concat_dirs(cache.l0f, cache.l0b, batch.len);
    detail::lstm_dir_forward(cache.l0_out, batch.mask, false, params.lstm1.fwd, cache.l1f);
    detail::lstm_dir_forward(cache.l0_out, batch.mask, true, params.lstm1.bwd, cache.l1b);
    cache.l1_out = detail::concat_dirs(cache.l1f, cache.l1b, batch.len);
    attention_forward(cfg, params, cache);

    cache.final_mask = (mode == Mode::Train && cfg.final_dropout_p > 0.f)
                           ? make_dropout_mask<T>(batch.size, cfg.attention_dim(),
                                                  cfg.final_dropout_p, rng)
                           : Mat<T>::full(batch.size, cfg.attention_dim(), T(1));
    cache.pooled_drop = apply_mask(cache.pooled, cache.final_mask);

    cache.logits = matmul(cache.pooled_drop, params.out_w);
    add_row_inplace(cache.logits, params.out_b);
    cache.probs = softmax_rows(cache.logits);
    return cache;
}

template <class T>
ModelParams<T> model_backward(const ForwardCache<T>& cache, const Mat<T>& grad_logits,
                              const ModelConfig& cfg, const ModelParams<T>& params) {
    const int batch = cache.batch.size;
    const int len = cache.batch.len;
    const int D = cfg.attention_dim();
    const int E = cfg.embed_dim;
    const int L = cfg.lstm_out_dim();
    check(grad_logits.rows == batch && grad_logits.cols == cfg.num_classes,
          "model_backward: grad_logits shape mismatch");

    ModelParams<T> grads = zeros_like_params(params);

    // output layer
    mm_at_b_into(grads.out_w, cache.pooled_drop, grad_logits);
    for (int b = 0; b < batch; ++b)
        for (int j = 0; j < cfg.num_classes; ++j) grads.out_b(0, j) += grad_logits(b, j);
    Mat<T> dpooled_drop(batch, D);
    mm_a_bt_into(dpooled_drop, grad_logits, params.out_w, false);
    Mat<T> dpooled = apply_mask(dpooled_drop, cache.final_mask);

    // attention
    std::vector<Mat<T>> dfeat(static_cast<size_t>(len));
    for (int t = 0; t < len; ++t) dfeat[static_cast<size_t>(t)] = Mat<T>(batch, D);
    for (int b = 0; b < batch; ++b) {
        std::vector<T> da(static_cast<size_t>(len), T(0));
        T weighted_sum = T(0);
        for (int t = 0; t < len; ++t) {
            const T a = cache.attn_weights(b, t);
            if (a == T(0)) continue;
            const T* f = cache.feat[static_cast<size_t>(t)].row(b);
            T s = T(0);
            for (int d = 0; d < D; ++d) s += dpooled(b, d) * f[d];
            da[static_cast<size_t>(t)] = s;
            weighted_sum += a * s;
        }
        for (int t = 0; t < len; ++t) {
            const T a = cache.attn_weights(b, t);
            if (a == T(0)) continue;
            const T ds = a * (da[static_cast<size_t>(t)] - weighted_sum);  // softmax backward
            const T* f = cache.feat[static_cast<size_t>(t)].row(b);
            T* df = dfeat[static_cast<size_t>(t)].row(b);
            for (int d = 0; d < D; ++d) {
                df[d] += a * dpooled(b, d) + ds * params.attn_w(0, d);
                grads.attn_w(0, d) += ds * f[d];
            }
        }
    }

    // split feature gradient back into the three skip inputs
    std::vector<Mat<T>> demb(static_cast<size_t>(len)), dl0(static_cast<size_t>(len)),
        dl1(static_cast<size_t>(len));
    for (int t = 0; t < len; ++t) {
        Mat<T> de(batch, E), d0(batch, L), d1(batch, L);
        for (int b = 0; b < batch; ++b) {
            const T* src = dfeat[static_cast<size_t>(t)].row(b);
            std::copy(src, src + E, de.row(b));
            std::copy(src + E, src + E + L, d0.row(b));
            std::copy(src + E + L, src + D, d1.row(b));
        }
        demb[static_cast<size_t>(t)] = std::move(de);
        dl0[static_cast<size_t>(t)] = std::move(d0);
        dl1[static_cast<size_t>(t)] = std::move(d1);
    }

    const int H = cfg.lstm_hidden_per_dir;
    auto split_dirs = [&](const std::vector<Mat<T>>& dcat) {
        std::pair<std::vector<Mat<T>>, std::vector<Mat<T>>> out;
        out.first.resize(static_cast<size_t>(len));
        out.second.resize(static_cast<size_t>(len));
        for (int t = 0; t < len; ++t) {
            Mat<T> df(batch, H), db(batch, H);
            for (int b = 0; b < batch; ++b) {
                const T* src = dcat[static_cast<size_t>(t)].row(b);
                std::copy(src, src + H, df.row(b));
                std::copy(src + H, src + 2 * H, db.row(b));
            }
            out.first[static_cast<size_t>(t)] = std::move(df);
            out.second[static_cast<size_t>(t)] = std::move(db);
        }
        return out;
    };

    // lstm1 (input was l0_out)
    std::vector<Mat<T>> dl0_from_l1(static_cast<size_t>(len));
    for (int t = 0; t < len; ++t) dl0_from_l1[static_cast<size_t>(t)] = Mat<T>(batch, L);
    {
        auto [dh_f, dh_b] = split_dirs(dl1);
        detail::lstm_dir_backward(cache.l0_out, cache.batch.mask, false, params.lstm1.fwd,
                                  cache.l1f, dh_f, grads.lstm1.fwd, dl0_from_l1);
        detail::lstm_dir_backward(cache.l0_out, cache.batch.mask, true, params.lstm1.bwd,
                                  cache.l1b, dh_b, grads.lstm1.bwd, dl0_from_l1);
    }
    for (int t = 0; t < len; ++t)
        for (size_t k = 0; k < dl0[static_cast<size_t>(t)].size(); ++k)
            dl0[static_cast<size_t>(t)].data[k] += dl0_from_l1[static_cast<size_t>(t)].data[k];

    // lstm0 (input was the dropped embedding)
    std::vector<Mat<T>> demb_from_l0(static_cast<size_t>(len));
    for (int t = 0; t < len; ++t) demb_from_l0[static_cast<size_t>(t)] = Mat<T>(batch, E);
    {
        auto [dh_f, dh_b] = split_dirs(dl0);
        detail::lstm_dir_backward(cache.emb, cache.batch.mask, false, params.lstm0.fwd, cache.l0f,
                                  dh_f, grads.lstm0.fwd, demb_from_l0);
        detail::lstm_dir_backward(cache.emb, cache.batch.mask, true, params.lstm0.bwd, cache.l0b,
                                  dh_b, grads.lstm0.bwd, demb_from_l0);
    }

    // embedding: through channel dropout, then tanh, scattered back to rows
    for (int t = 0; t < len; ++t) {
        for (int b = 0; b < batch; ++b) {
            const int32_t id = cache.batch.id_at(b, t);
            T* grow = grads.embed.row(id);
            const T* de_attn = demb[static_cast<size_t>(t)].row(b);
            const T* de_lstm = demb_from_l0[static_cast<size_t>(t)].row(b);
            const T* msk = cache.emb_mask.row(b);
            const T* th = cache.emb_tanh[static_cast<size_t>(t)].row(b);
            for (int j = 0; j < E; ++j) {
                const T d_drop = de_attn[j] + de_lstm[j];
                const T d_tanh = d_drop * msk[j];
                grow[j] += d_tanh * (T(1) - th[j] * th[j]);
            }
        }
    }
    return grads;
}

// Full batched eval pass; returns probability rows.
template <class T>
Mat<T> predict_probs(const std::vector<EncodedExample>& examples, const ModelConfig& cfg,
                     const ModelParams<T>& params, int batch_size = 64) {
    check(!examples.empty(), "predict_probs: empty input");
    Rng rng(0);  // unused in eval mode
    Mat<T> probs(static_cast<int>(examples.size()), cfg.num_classes);
    for (size_t start = 0; start < examples.size(); start += static_cast<size_t>(batch_size)) {
        const size_t n = std::min(static_cast<size_t>(batch_size), examples.size() - start);
        auto batch = make_batch<T>(std::span(examples).subspan(start, n));
        auto cache = model_forward(batch, cfg, params, Mode::Eval, rng);
        for (size_t b = 0; b < n; ++b)
            for (int j = 0; j < cfg.num_classes; ++j)
                probs(static_cast<int>(start + b), j) = cache.probs(static_cast<int>(b), j);
    }
    return probs;
}

inline int argmax_lowest_tie(const float* row, int n) {
    int best = 0;
    for (int j = 1; j < n; ++j)
        if (row[j] > row[best]) best = j;
    return best;
}

inline int argmax_lowest_tie(const double* row, int n) {
    int best = 0;
    for (int j = 1; j < n; ++j)
        if (row[j] > row[best]) best = j;
    return best;
}

// A trained model bundled with everything inference needs.
struct Model {
    ModelConfig config;
    Vocabulary vocab;
    ModelParams<float> params;
};

struct Prediction {
    SentimentLabel label;
    std::vector<float> probs;
};

inline Prediction predict(const Model& model, std::string_view text) {
    std::vector<EncodedExample> one{encode_text(text, model.vocab, model.config.max_len)};
    Mat<float> probs = predict_probs(one, model.config, model.params, 1);
    Prediction p;
    p.probs.assign(probs.row(0), probs.row(0) + model.config.num_classes);
    p.label = static_cast<SentimentLabel>(argmax_lowest_tie(probs.row(0), model.config.num_classes));
    return p;
}

}  // namespace sentipipe
