#pragma once

#include <algorithm>
#include <array>
#include <initializer_list>
#include <string>
#include <vector>

#include "sentipipe/model.hpp"

namespace sentipipe {

struct TrainConfig {
    double learning_rate = 1e-3;
    int batch_size = 32;
    int max_epochs = 100;
    int patience = 3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    uint64_t seed = 0;

    void validate() const {
        check(learning_rate > 0.0, "TrainConfig: learning_rate must be positive");
        check(batch_size >= 1, "TrainConfig: batch_size must be >= 1");
        check(patience >= 1, "TrainConfig: patience must be >= 1");
        check(max_epochs >= 0, "TrainConfig: max_epochs must be >= 0");
    }
};

struct GroupSet {
    std::array<bool, 5> on{};

    GroupSet() = default;
    GroupSet(std::initializer_list<ParamGroup> groups) {
        for (auto g : groups) on[static_cast<size_t>(g)] = true;
    }
    static GroupSet all() { return {ParamGroup::Embed, ParamGroup::Lstm0, ParamGroup::Lstm1,
                                    ParamGroup::Attention, ParamGroup::Output}; }
    bool contains(ParamGroup g) const { return on[static_cast<size_t>(g)]; }

    std::string label() const {
        int n = 0;
        for (bool b : on) n += b;
        if (n == 5) return "all";
        std::string s;
        for (ParamGroup g : kAllGroups)
            if (contains(g)) s += (s.empty() ? "" : "+") + std::string(to_string(g));
        return s;
    }
};

template <class T>
struct AdamState {
    ModelParams<T> m, v;
    int64_t step = 0;
};

template <class T>
AdamState<T> make_adam_state(const ModelParams<T>& params) {
    return {zeros_like_params(params), zeros_like_params(params), 0};
}

// One Adam update with bias correction over the active groups only; moments of
// frozen groups are left untouched.
template <class T>
void adam_step(ModelParams<T>& params, const ModelParams<T>& grads, AdamState<T>& state,
               const TrainConfig& cfg, GroupSet active) {
    ++state.step;
    const T lr = static_cast<T>(cfg.learning_rate);
    const T b1 = static_cast<T>(cfg.beta1);
    const T b2 = static_cast<T>(cfg.beta2);
    const T eps = static_cast<T>(cfg.eps);
    const T bc1 = T(1) - static_cast<T>(std::pow(cfg.beta1, static_cast<double>(state.step)));
    const T bc2 = T(1) - static_cast<T>(std::pow(cfg.beta2, static_cast<double>(state.step)));

    struct Cursor {
        std::vector<Mat<T>*> tensors;
    };
    Cursor pc, gc, mc, vc;
    for_each_tensor(params, [&](ParamGroup, Mat<T>& t) { pc.tensors.push_back(&t); });
    for_each_tensor(const_cast<ModelParams<T>&>(grads),
                    [&](ParamGroup, Mat<T>& t) { gc.tensors.push_back(&t); });
    for_each_tensor(state.m, [&](ParamGroup, Mat<T>& t) { mc.tensors.push_back(&t); });
    for_each_tensor(state.v, [&](ParamGroup, Mat<T>& t) { vc.tensors.push_back(&t); });

    size_t idx = 0;
    for_each_tensor(params, [&](ParamGroup g, Mat<T>&) {
        const size_t i = idx++;
        if (!active.contains(g)) return;
        Mat<T>& w = *pc.tensors[i];
        const Mat<T>& dw = *gc.tensors[i];
        Mat<T>& m = *mc.tensors[i];
        Mat<T>& v = *vc.tensors[i];
        check(w.same_shape(dw) && w.same_shape(m) && w.same_shape(v),
              "adam_step: shape mismatch between params, grads and state");
        for (size_t k = 0; k < w.size(); ++k) {
            const T gk = dw.data[k];
            m.data[k] = b1 * m.data[k] + (T(1) - b1) * gk;
            v.data[k] = b2 * v.data[k] + (T(1) - b2) * gk * gk;
            const T mhat = m.data[k] / bc1;
            const T vhat = v.data[k] / bc2;
            w.data[k] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    });
}

struct EpochRecord {
    std::string phase;
    int epoch = 0;
    double train_loss = 0.0;
    double val_accuracy = 0.0;
    bool reloaded = false;  // true on the epoch whose weights the phase restored
};

using TrainTrace = std::vector<EpochRecord>;

// Improvement tracking for validation-accuracy early stopping: a phase stops
// once `patience` consecutive epochs fail to beat the best seen.
struct EarlyStopper {
    int patience;
    double best = -1.0;
    int best_epoch = -1;
    int bad = 0;

    explicit EarlyStopper(int patience_) : patience(patience_) {
        check(patience_ >= 1, "EarlyStopper: patience must be >= 1");
    }

    bool feed(double accuracy, int epoch) {
        if (accuracy > best) {
            best = accuracy;
            best_epoch = epoch;
            bad = 0;
            return true;
        }
        ++bad;
        return false;
    }

    bool should_stop() const { return bad >= patience; }
};

template <class T>
double evaluate_accuracy(const ModelConfig& cfg, const ModelParams<T>& params,
                         const std::vector<EncodedExample>& dataset, int batch_size = 64) {
    check(!dataset.empty(), "evaluate_accuracy: empty dataset");
    Mat<T> probs = predict_probs(dataset, cfg, params, batch_size);
    int64_t correct = 0;
    for (size_t i = 0; i < dataset.size(); ++i) {
        check(dataset[i].label.has_value(), "evaluate_accuracy: unlabeled example");
        const int pred = argmax_lowest_tie(probs.row(static_cast<int>(i)), cfg.num_classes);
        correct += pred == static_cast<int>(*dataset[i].label);
    }
    return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

template <class T>
struct FitResult {
    ModelParams<T> params;  // snapshot of the best validation epoch
    TrainTrace trace;
    double best_val_accuracy = 0.0;
};

// Epoch loop with seeded shuffling, early stopping and best-weight reload.
// Only groups in `active` are updated; the optimizer state is fresh per call.
// max_epochs == 0 returns the input parameters unchanged.
template <class T>
FitResult<T> fit_until_converged(ModelParams<T> params, const ModelConfig& cfg,
                                 const std::vector<EncodedExample>& train,
                                 const std::vector<EncodedExample>& val, GroupSet active,
                                 const TrainConfig& tc, Rng& rng,
                                 const std::string& phase_label = "train") {
    tc.validate();
    FitResult<T> result;
    if (tc.max_epochs == 0) {
        result.params = std::move(params);
        return result;
    }
    check(!train.empty() && !val.empty(), "fit_until_converged: train and val must be non-empty");

    AdamState<T> adam = make_adam_state(params);
    EarlyStopper stopper(tc.patience);
    ModelParams<T> best_params = params;

    std::vector<size_t> order(train.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= tc.max_epochs; ++epoch) {
        rng.shuffle(order.begin(), order.end());
        double loss_sum = 0.0;
        int64_t batches = 0;
        std::vector<EncodedExample> chunk;
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(tc.batch_size)) {
            const size_t n = std::min(static_cast<size_t>(tc.batch_size), order.size() - start);
            chunk.clear();
            for (size_t k = 0; k < n; ++k) chunk.push_back(train[order[start + k]]);
            auto batch = make_batch<T>(chunk);
            auto cache = model_forward(batch, cfg, params, Mode::Train, rng);
            auto ce = cross_entropy(cache.probs, batch.labels);
            auto grads = model_backward(cache, ce.grad_logits, cfg, params);
            adam_step(params, grads, adam, tc, active);
            loss_sum += static_cast<double>(ce.loss);
            ++batches;
        }
        const double val_acc = evaluate_accuracy(cfg, params, val, tc.batch_size);
        const bool improved = stopper.feed(val_acc, epoch);
        if (improved) best_params = params;
        result.trace.push_back({phase_label, epoch, loss_sum / static_cast<double>(batches),
                                val_acc, false});
        if (stopper.should_stop()) break;
    }
    for (auto& rec : result.trace)
        if (rec.epoch == stopper.best_epoch) rec.reloaded = true;
    result.params = std::move(best_params);
    result.best_val_accuracy = stopper.best;
    return result;
}

struct Phase {
    std::string label;
    GroupSet groups;
};

struct PhasePlan {
    std::vector<Phase> phases;
};

// Sequential unfreeze schedule: the classifier first, then each layer
// individually from the input side, then everything together.
inline PhasePlan chain_thaw_plan() {
    PhasePlan plan;
    plan.phases.push_back({"output", GroupSet{ParamGroup::Output}});
    plan.phases.push_back({"embed", GroupSet{ParamGroup::Embed}});
    plan.phases.push_back({"lstm0", GroupSet{ParamGroup::Lstm0}});
    plan.phases.push_back({"lstm1", GroupSet{ParamGroup::Lstm1}});
    plan.phases.push_back({"attention", GroupSet{ParamGroup::Attention}});
    plan.phases.push_back({"output", GroupSet{ParamGroup::Output}});
    plan.phases.push_back({"all", GroupSet::all()});
    return plan;
}

// Runs fit_until_converged once per phase, carrying best weights between
// phases; optimizer moments start fresh each phase.
template <class T>
FitResult<T> chain_thaw_train(ModelParams<T> params, const ModelConfig& cfg,
                              const std::vector<EncodedExample>& train,
                              const std::vector<EncodedExample>& val, const TrainConfig& tc,
                              Rng& rng) {
    FitResult<T> out;
    out.params = std::move(params);
    for (const Phase& phase : chain_thaw_plan().phases) {
        auto r = fit_until_converged(std::move(out.params), cfg, train, val, phase.groups, tc,
                                     rng, phase.label);
        out.params = std::move(r.params);
        out.best_val_accuracy = r.best_val_accuracy;
        out.trace.insert(out.trace.end(), r.trace.begin(), r.trace.end());
    }
    return out;
}

void write_trace_jsonl(const std::string& path, const TrainTrace& trace);

}  // namespace sentipipe
