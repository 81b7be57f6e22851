// Acceptance suite: runs every release criterion end to end and prints one
// pass/fail line per criterion. Exits nonzero if any criterion fails.

#include <httplib.h>

#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <sstream>
#include <thread>

#include "sentipipe/dataio.hpp"
#include "sentipipe/experiment.hpp"
#include "sentipipe/gradcheck.hpp"
#include "sentipipe/model_io.hpp"
#include "sentipipe/selftrain.hpp"
#include "sentipipe/serve.hpp"
#include "sentipipe/synth.hpp"
#include "sentipipe/train.hpp"

using namespace sentipipe;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool cond, const std::string& msg) {
    if (!cond) throw Failure(msg);
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof(buf), f, args);
    va_end(args);
    return buf;
}

fs::path work_dir() {
    static fs::path dir = [] {
        auto d = fs::temp_directory_path() / "sentipipe_acceptance";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), "cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---- shared fixtures -------------------------------------------------------

ModelConfig tiny_config() {
    ModelConfig cfg;
    cfg.vocab_size = 20;
    cfg.embed_dim = 8;
    cfg.lstm_hidden_per_dir = 6;
    cfg.max_len = 5;
    cfg.embed_dropout_p = 0.0f;
    cfg.final_dropout_p = 0.0f;
    return cfg;
}

EncodedExample make_example(std::vector<int32_t> ids, int max_len,
                            std::optional<SentimentLabel> label = std::nullopt) {
    EncodedExample e;
    e.mask.assign(static_cast<size_t>(max_len), 0);
    for (size_t i = 0; i < ids.size(); ++i) e.mask[i] = 1;
    ids.resize(static_cast<size_t>(max_len), Vocabulary::kPad);
    e.ids = std::move(ids);
    e.label = label;
    return e;
}

struct TinyTask {
    ModelConfig cfg;
    Vocabulary vocab;
    std::vector<EncodedExample> train, val;
};

TinyTask make_tiny_task(int train_n, int val_n) {
    TinyTask task;
    task.vocab = build_vocab({{"good", "bad", "meh", "so", "very", "day"}}, 1, 20);
    task.cfg = tiny_config();
    task.cfg.vocab_size = task.vocab.size();
    const char* words[3] = {"bad", "meh", "good"};
    auto make = [&](int i) {
        const auto label = static_cast<SentimentLabel>(i % 3);
        const std::string w = words[i % 3];
        const std::string text = i % 2 == 0 ? w + " " + w : "so very " + w + " day";
        return encode_text(text, task.vocab, task.cfg.max_len, label);
    };
    for (int i = 0; i < train_n; ++i) task.train.push_back(make(i));
    for (int i = 0; i < val_n; ++i) task.val.push_back(make(i));
    return task;
}

// ---- criteria --------------------------------------------------------------

// 1. Full-model analytic gradients vs central differences, every group.
std::string criterion_gradients() {
    const auto t0 = Clock::now();
    auto cfg = tiny_config();
    Rng rng(2);
    auto params = init_params<double>(cfg, rng);
    for_each_tensor(params, [&](ParamGroup, Mat<double>& m) {
        for (auto& v : m.data) v = rng.uniform(-0.8, 0.8);
    });
    std::vector<EncodedExample> ex{
        make_example({2, 7, 11}, 5, SentimentLabel::Negative),
        make_example({5, 3, 9, 14, 18}, 5, SentimentLabel::Positive),
    };
    auto batch = make_batch<double>(ex);
    auto loss_fn = [&] {
        Rng r(77);
        auto cache = model_forward(batch, cfg, params, Mode::Train, r);
        return cross_entropy(cache.probs, batch.labels).loss;
    };
    Rng r(77);
    auto cache = model_forward(batch, cfg, params, Mode::Train, r);
    auto ce = cross_entropy(cache.probs, batch.labels);
    auto grads = model_backward(cache, ce.grad_logits, cfg, params);

    std::vector<Mat<double>*> pt;
    std::vector<std::pair<ParamGroup, const Mat<double>*>> gt;
    for_each_tensor(params, [&](ParamGroup, Mat<double>& m) { pt.push_back(&m); });
    for_each_tensor(grads, [&](ParamGroup g, const Mat<double>& m) { gt.push_back({g, &m}); });

    std::array<double, 5> group_max{};
    for (size_t i = 0; i < pt.size(); ++i) {
        const double err = grad_check<double>(loss_fn, std::span<double>(pt[i]->data),
                                              std::span<const double>(gt[i].second->data), 1e-5);
        auto& slot = group_max[static_cast<size_t>(gt[i].first)];
        slot = std::max(slot, err);
    }
    double worst = 0.0;
    for (ParamGroup g : kAllGroups) {
        const double err = group_max[static_cast<size_t>(g)];
        require(err < 1e-4, fmt("group %s relative error %.3e >= 1e-4", to_string(g), err));
        worst = std::max(worst, err);
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    require(secs < 60.0, fmt("runtime %.1fs >= 60s", secs));
    return fmt("max relative error %.2e over 5 groups, %.1fs", worst, secs);
}

// 2. Softmax/attention normalization, masking, embedding range, padding invariance.
std::string criterion_normalization() {
    Mat<float> wide(2, 3);
    wide(0, 0) = 1e4f;
    wide(0, 1) = -1e4f;
    wide(1, 0) = 9999.f;
    wide(1, 1) = 10000.f;
    wide(1, 2) = -9999.f;
    auto soft = softmax_rows(wide);
    for (int i = 0; i < soft.rows; ++i) {
        float sum = 0.f;
        for (int j = 0; j < soft.cols; ++j) sum += soft(i, j);
        require(std::abs(sum - 1.f) < 1e-6f, "softmax row does not sum to 1");
    }

    auto cfg = tiny_config();
    Rng rng(23);
    auto params = init_params<double>(cfg, rng);
    for (auto& v : params.embed.data) v *= 40.0;  // push tanh toward saturation

    std::vector<EncodedExample> ex{make_example({2, 7, 11}, 5), make_example({5, 3, 9, 14, 18}, 5)};
    auto batch = make_batch<double>(ex);
    Rng fwd(0);
    auto cache = model_forward(batch, cfg, params, Mode::Eval, fwd);

    for (const auto& e : cache.emb)
        for (double v : e.data)
            require(v >= -1.0 && v <= 1.0, "embedding output left [-1, 1]");

    for (int b = 0; b < batch.size; ++b) {
        double sum = 0.0;
        for (int t = 0; t < batch.len; ++t) {
            const double w = cache.attn_weights(b, t);
            if (batch.mask(b, t) == 0.0)
                require(w == 0.0, "attention weight not exactly 0 on padding");
            sum += w;
        }
        require(std::abs(sum - 1.0) < 1e-6, "attention weights do not sum to 1");
    }

    std::vector<EncodedExample> short_ex{make_example({2, 7, 11}, 5)};
    std::vector<EncodedExample> long_ex{make_example({2, 7, 11}, 16)};
    auto a = model_forward(make_batch<double>(short_ex), cfg, params, Mode::Eval, fwd);
    auto b = model_forward(make_batch<double>(long_ex), cfg, params, Mode::Eval, fwd);
    for (int j = 0; j < cfg.num_classes; ++j)
        require(std::abs(a.logits(0, j) - b.logits(0, j)) < 1e-6,
                "eval logits changed under extra trailing padding");
    return "softmax/attention sums, pad masking, tanh range, padding invariance";
}

// 3. Chain-thaw phase order and bit-exact freezing of inactive groups.
std::string criterion_chain_thaw_freezing() {
    auto plan = chain_thaw_plan();
    const std::vector<std::string> want{"output", "embed", "lstm0", "lstm1",
                                        "attention", "output", "all"};
    require(plan.phases.size() == 7, "plan does not have 7 phases");
    for (size_t i = 0; i < want.size(); ++i)
        require(plan.phases[i].label == want[i],
                fmt("phase %zu is '%s', expected '%s'", i, plan.phases[i].label.c_str(),
                    want[i].c_str()));

    auto task = make_tiny_task(24, 9);
    Rng init_rng(29);
    auto params = init_params<float>(task.cfg, init_rng);
    TrainConfig tc;
    tc.learning_rate = 1e-2;
    tc.batch_size = 8;
    tc.max_epochs = 3;
    tc.patience = 2;
    Rng rng(31);

    int checked = 0;
    for (const auto& phase : plan.phases) {
        auto before = params;
        auto fit = fit_until_converged(params, task.cfg, task.train, task.val, phase.groups, tc,
                                       rng, phase.label);
        params = fit.params;
        std::vector<std::pair<ParamGroup, const Mat<float>*>> before_t, after_t;
        for_each_tensor(before,
                        [&](ParamGroup g, const Mat<float>& m) { before_t.push_back({g, &m}); });
        for_each_tensor(static_cast<const ModelParams<float>&>(params),
                        [&](ParamGroup g, const Mat<float>& m) { after_t.push_back({g, &m}); });
        for (size_t i = 0; i < before_t.size(); ++i) {
            if (phase.groups.contains(before_t[i].first)) continue;
            require(before_t[i].second->data == after_t[i].second->data,
                    fmt("phase '%s' modified frozen group %s", phase.label.c_str(),
                        to_string(before_t[i].first)));
            ++checked;
        }
    }
    return fmt("7 phases in order, %d frozen tensors bit-identical", checked);
}

// 4. Early stopping on a scripted sequence and on a real run.
std::string criterion_early_stopping() {
    EarlyStopper s(2);
    require(s.feed(0.5, 1), "epoch 1 should improve");
    require(s.feed(0.7, 2), "epoch 2 should improve");
    require(!s.feed(0.65, 3) && !s.should_stop(), "epoch 3 should not stop yet");
    require(!s.feed(0.66, 4) && s.should_stop(), "epoch 4 should trigger the stop");
    require(s.best == 0.7 && s.best_epoch == 2, "best epoch tracking is wrong");

    auto task = make_tiny_task(24, 9);
    Rng init_rng(7);
    auto params = init_params<float>(task.cfg, init_rng);
    TrainConfig tc;
    tc.learning_rate = 5e-2;
    tc.batch_size = 8;
    tc.max_epochs = 12;
    tc.patience = 2;
    Rng rng(11);
    auto fit = fit_until_converged(params, task.cfg, task.train, task.val, GroupSet::all(), tc,
                                   rng, "accept");
    double max_acc = 0.0;
    for (const auto& rec : fit.trace) max_acc = std::max(max_acc, rec.val_accuracy);
    require(fit.best_val_accuracy == max_acc, "returned best != max of trace");
    const double returned = evaluate_accuracy(task.cfg, fit.params, task.val);
    require(returned == max_acc, fmt("returned weights score %.4f, trace max %.4f", returned,
                                     max_acc));
    return fmt("scripted sequence and real run (best %.3f over %zu epochs)", max_acc,
               fit.trace.size());
}

// 5. Tiny-config overfit: 100% training accuracy on 32 examples within 200 epochs.
std::string criterion_overfit() {
    TinyTask task;
    task.vocab = build_vocab({{"good", "bad", "meh", "so", "very", "day", "food", "one", "two"}},
                             1, 30);
    task.cfg = tiny_config();
    task.cfg.vocab_size = task.vocab.size();
    const char* words[3] = {"bad", "meh", "good"};
    const char* extras[4] = {"so", "very", "day", "food"};
    Rng gen(5);
    for (int i = 0; i < 32; ++i) {
        const auto label = static_cast<SentimentLabel>(i % 3);
        std::string text = std::string(words[i % 3]) + " " + extras[gen.below(4)] + " " +
                           extras[gen.below(4)];
        task.train.push_back(encode_text(text, task.vocab, task.cfg.max_len, label));
    }
    Rng init_rng(13);
    auto params = init_params<float>(task.cfg, init_rng);
    TrainConfig tc;
    tc.learning_rate = 2e-2;
    tc.batch_size = 8;
    tc.max_epochs = 200;
    tc.patience = 200;
    Rng rng(17);

    int epochs_used = 0;
    AdamState<float> adam = make_adam_state(params);
    std::vector<size_t> order(task.train.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    double train_acc = 0.0;
    for (int epoch = 1; epoch <= tc.max_epochs; ++epoch) {
        rng.shuffle(order.begin(), order.end());
        std::vector<EncodedExample> chunk;
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(tc.batch_size)) {
            const size_t n = std::min(static_cast<size_t>(tc.batch_size), order.size() - start);
            chunk.clear();
            for (size_t k = 0; k < n; ++k) chunk.push_back(task.train[order[start + k]]);
            auto batch = make_batch<float>(chunk);
            auto cache = model_forward(batch, task.cfg, params, Mode::Train, rng);
            auto ce = cross_entropy(cache.probs, batch.labels);
            auto grads = model_backward(cache, ce.grad_logits, task.cfg, params);
            adam_step(params, grads, adam, tc, GroupSet::all());
        }
        epochs_used = epoch;
        train_acc = evaluate_accuracy(task.cfg, params, task.train);
        if (train_acc == 1.0) break;
    }
    require(train_acc == 1.0,
            fmt("training accuracy %.3f after %d epochs", train_acc, epochs_used));
    return fmt("100%% training accuracy on 32 examples after %d epochs", epochs_used);
}

// 6. The self-training pattern: independent noisy student beats the teacher
//    out of domain by >= 2 points, mean over 5 seeds.
std::string criterion_selftraining_pattern() {
    const auto t0 = Clock::now();
    SynthSpec spec;
    spec.domains = 3;
    spec.teacher_labeled = 2000;
    spec.unlabeled_total = 20000;
    spec.test_per_domain = 1000;
    spec.synonym_rate = 0.5;
    spec.polarity_words_per_class = 8;
    spec.filler_words = 20;
    spec.polarity_rate = 0.5;
    spec.cross_rate = 0.05;
    spec.min_doc_len = 4;
    spec.max_doc_len = 8;
    spec.seed = 2026;
    const auto data_dir = (work_dir() / "pattern_data").string();
    auto files = synth_gen(spec, data_dir);

    ExperimentConfig cfg;
    cfg.teacher_train_path = files.teacher_train;
    cfg.unlabeled_path = files.unlabeled;
    for (size_t d = 0; d < files.test_files.size(); ++d)
        cfg.eval_datasets.push_back({"domain" + std::to_string(d), files.test_files[d]});
    cfg.model.embed_dim = 16;
    cfg.model.lstm_hidden_per_dir = 12;
    cfg.model.max_len = 12;
    cfg.train.learning_rate = 5e-3;
    cfg.train.batch_size = 64;
    cfg.train.max_epochs = 10;
    cfg.train.patience = 3;
    cfg.train_finetuned = false;  // this criterion compares teacher vs noisy student
    cfg.confidence_threshold = 0.9;
    cfg.seeds = {101, 102, 103, 104, 105};
    cfg.out_dir = (work_dir() / "pattern_out").string();
    auto report = run_experiment(cfg);

    double teacher_in = 0.0, student_in = 0.0, teacher_out = 0.0, student_out = 0.0;
    int n_out = 0;
    for (const auto& row : report["mean"]) {
        const std::string ds = row["dataset"].get<std::string>();
        const double t = row["teacher"].get<double>();
        const double s = row["independent_noisy_student"].get<double>();
        if (ds == "domain0") {
            teacher_in = t;
            student_in = s;
        } else {
            teacher_out += t;
            student_out += s;
            ++n_out;
        }
    }
    teacher_out /= n_out;
    student_out /= n_out;
    const double gap = student_out - teacher_out;
    const double mins = std::chrono::duration<double>(Clock::now() - t0).count() / 60.0;

    std::printf("         in-domain (informational): teacher %.2f%%, student %.2f%%\n",
                100.0 * teacher_in, 100.0 * student_in);
    require(gap >= 0.02, fmt("out-of-domain gap %.2f points < 2 points", 100.0 * gap));
    require(teacher_out < teacher_in - 0.02, "synthetic domain shift did not reduce teacher accuracy");
    require(mins <= 15.0, fmt("runtime %.1f min > 15 min", mins));
    return fmt("5 seeds: teacher %.2f%% -> student %.2f%% out of domain (gap %.1f points), %.1f min",
               100.0 * teacher_out, 100.0 * student_out, 100.0 * gap, mins);
}

// 7. run_experiment determinism: identical config and seed, fresh directories.
std::string criterion_determinism() {
    SynthSpec spec;
    spec.domains = 2;
    spec.teacher_labeled = 45;
    spec.unlabeled_total = 90;
    spec.test_per_domain = 15;
    spec.polarity_words_per_class = 5;
    spec.filler_words = 8;
    spec.synonym_rate = 0.5;
    spec.seed = 7;
    auto files = synth_gen(spec, (work_dir() / "det_data").string());

    auto make_cfg = [&](const std::string& out) {
        ExperimentConfig cfg;
        cfg.teacher_train_path = files.teacher_train;
        cfg.unlabeled_path = files.unlabeled;
        for (size_t d = 0; d < files.test_files.size(); ++d)
            cfg.eval_datasets.push_back({"domain" + std::to_string(d), files.test_files[d]});
        cfg.model.embed_dim = 8;
        cfg.model.lstm_hidden_per_dir = 6;
        cfg.model.max_len = 12;
        cfg.train.learning_rate = 1e-2;
        cfg.train.batch_size = 16;
        cfg.train.max_epochs = 2;
        cfg.train.patience = 1;
        cfg.seeds = {1};
        cfg.out_dir = out;
        return cfg;
    };
    run_experiment(make_cfg((work_dir() / "det_run1").string()));
    run_experiment(make_cfg((work_dir() / "det_run2").string()));
    const std::string a = slurp((work_dir() / "det_run1" / "report.json").string());
    const std::string b = slurp((work_dir() / "det_run2" / "report.json").string());
    require(!a.empty() && a == b, "report.json differs between identical runs");
    return fmt("report.json byte-identical across runs (%zu bytes)", a.size());
}

// 8. Serialization round-trip and corruption errors.
std::string criterion_serialization() {
    Model model;
    model.vocab = build_vocab({{"alpha", "beta", "gamma", "delta"}}, 1, 30);
    model.config = tiny_config();
    model.config.vocab_size = model.vocab.size();
    Rng rng(47);
    model.params = init_params<float>(model.config, rng);

    const std::string path = (work_dir() / "round_trip.model").string();
    save_model(model, path);
    Model loaded = load_model(path);
    require(loaded.params == model.params, "parameters not bit-exact after round-trip");
    require(loaded.vocab.tokens == model.vocab.tokens, "vocabulary changed in round-trip");

    auto corrupt = [&](size_t offset, char value, const char* expect) {
        const std::string copy = (work_dir() / "corrupt.model").string();
        std::string bytes = slurp(path);
        bytes[offset] = value;
        std::ofstream(copy, std::ios::binary) << bytes;
        try {
            load_model(copy);
            throw Failure(std::string("corrupted file loaded without error (") + expect + ")");
        } catch (const std::runtime_error& e) {
            require(std::string(e.what()).find(expect) != std::string::npos,
                    fmt("expected '%s' in error, got '%s'", expect, e.what()));
        }
    };
    corrupt(0, 'X', "not a model file");
    corrupt(4, 2, "expected 1, found 2");
    corrupt(60, 0x5a, "checksum");

    const std::string trunc = (work_dir() / "trunc.model").string();
    std::string bytes = slurp(path);
    std::ofstream(trunc, std::ios::binary) << bytes.substr(0, bytes.size() / 2);
    try {
        load_model(trunc);
        throw Failure("truncated file loaded without error");
    } catch (const std::runtime_error&) {
    }
    return "bit-exact round-trip; magic/version/checksum/truncation errors";
}

// 9. Report fidelity for mocked accuracies, including the reference table.
std::string criterion_report_fidelity() {
    std::vector<ComparisonRow> rows{
        {"Sentiment-140", 0.6887, 0.6405, 0.7369},
        {"NEWS2016", 0.6452, 0.6365, 0.6921},
        {"MAKETRESEARCH", 0.8229, 0.8309, 0.9009},
        {"TWEETS25K", 0.7687, 0.7486, 0.7752},
        {"TEACHER-TEST", 0.758, 0.757, 0.7446},
    };
    const std::string expected =
        "| Dataset Name | Teacher | Teacher Finetuning | Independent Noisy Student |\n"
        "| --- | --- | --- | --- |\n"
        "| Sentiment-140 | 68.87% | 64.05% | 73.69% |\n"
        "| NEWS2016 | 64.52% | 63.65% | 69.21% |\n"
        "| MAKETRESEARCH | 82.29% | 83.09% | 90.09% |\n"
        "| TWEETS25K | 76.87% | 74.86% | 77.52% |\n"
        "| TEACHER-TEST | 75.80% | 75.70% | 74.46% |\n";
    const std::string md = render_comparison_markdown(rows);
    require(md == expected, "markdown table does not match the reference layout");

    auto arr = nlohmann::json::parse(comparison_to_json(rows));
    for (size_t i = 0; i < rows.size(); ++i) {
        require(arr[i]["dataset"] == rows[i].dataset, "json dataset mismatch");
        require(arr[i]["teacher"].get<double>() == *rows[i].teacher, "json teacher mismatch");
        require(arr[i]["teacher_finetuned"].get<double>() == *rows[i].teacher_finetuned,
                "json finetuned mismatch");
        require(arr[i]["independent_noisy_student"].get<double>() ==
                    *rows[i].independent_noisy_student,
                "json student mismatch");
    }
    return "markdown layout exact (two-decimal percentages); JSON twin consistent";
}

// 10. HTTP serve contract against predict().
std::string criterion_serve() {
    Model model;
    model.vocab = build_vocab({{"good", "bad", "meh", "day"}}, 1, 20);
    model.config = tiny_config();
    model.config.vocab_size = model.vocab.size();
    model.config.max_len = 8;
    Rng rng(91);
    model.params = init_params<float>(model.config, rng);

    auto server = make_sentiment_server(model);
    const int port = server->bind_to_any_port("127.0.0.1");
    require(port > 0, "could not bind a port");
    std::thread worker([&] { server->listen_after_bind(); });
    server->wait_until_ready();
    httplib::Client client("127.0.0.1", port);

    std::string detail;
    try {
        auto health = client.Get("/health");
        require(health && health->status == 200, "health endpoint failed");

        for (const char* text : {"good day", "bad bad meh", "", "unseen words here"}) {
            nlohmann::json req{{"text", text}};
            auto res = client.Post("/sentiment", req.dump(), "application/json");
            require(res && res->status == 200, "valid request did not return 200");
            auto body = nlohmann::json::parse(res->body);
            const Prediction local = predict(model, text);
            require(body["label"] == to_string(local.label), "label differs from predict()");
            const char* keys[3] = {"negative", "neutral", "positive"};
            double sum = 0.0;
            for (int j = 0; j < 3; ++j) {
                const double p = body["probabilities"][keys[j]].get<double>();
                require(static_cast<float>(p) == local.probs[static_cast<size_t>(j)],
                        "probabilities differ from predict()");
                sum += p;
            }
            require(std::abs(sum - 1.0) < 1e-6, "probabilities do not sum to 1");
        }

        auto missing = client.Post("/sentiment", "{}", "application/json");
        require(missing && missing->status == 400, "missing text did not return 400");
        require(nlohmann::json::parse(missing->body)["error"] == "missing field: text",
                "unexpected 400 message");
        auto bad = client.Post("/sentiment", "{\"text\": 5}", "application/json");
        require(bad && bad->status == 400, "non-string text did not return 400");

        nlohmann::json big{{"text", std::string(70 * 1024, 'x')}};
        auto huge = client.Post("/sentiment", big.dump(), "application/json");
        require(huge && huge->status == 413, "oversized body did not return 413");
        detail = "responses match predict(); 400/413 contracts hold";
    } catch (...) {
        server->stop();
        worker.join();
        throw;
    }
    server->stop();
    worker.join();
    return detail;
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<std::string()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "gradient correctness", criterion_gradients},
        {2, "normalization and masking", criterion_normalization},
        {3, "chain-thaw freezing", criterion_chain_thaw_freezing},
        {4, "early stopping", criterion_early_stopping},
        {5, "overfit smoke test", criterion_overfit},
        {6, "self-training pattern", criterion_selftraining_pattern},
        {7, "experiment determinism", criterion_determinism},
        {8, "model serialization", criterion_serialization},
        {9, "report fidelity", criterion_report_fidelity},
        {10, "serve contract", criterion_serve},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = Clock::now();
        try {
            const std::string detail = c.run();
            const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
            std::printf("[PASS] criterion %2d: %s — %s (%.1fs)\n", c.id, c.name, detail.c_str(),
                        secs);
        } catch (const std::exception& e) {
            ++failures;
            std::printf("[FAIL] criterion %2d: %s — %s\n", c.id, c.name, e.what());
        }
        std::fflush(stdout);
    }
    std::printf("%d/%zu acceptance criteria passed\n", static_cast<int>(criteria.size()) - failures,
                criteria.size());
    return failures == 0 ? 0 : 1;
}
