#include "sentipipe/experiment.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "sentipipe/model_io.hpp"

namespace sentipipe {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// Exclusive ownership of an output directory for the duration of a run.
struct DirLock {
    std::string path;

    explicit DirLock(const std::string& dir) : path(dir + "/.lock") {
        if (fs::exists(path))
            throw std::runtime_error("output directory is locked by another run (remove " + path +
                                     " if stale)");
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot create lock file " + path);
        out << "locked\n";
    }
    ~DirLock() {
        std::error_code ec;
        fs::remove(path, ec);
    }
    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;
};

[[noreturn]] void stage_fail(const std::string& stage, const std::exception& e) {
    throw std::runtime_error("stage '" + stage + "' failed: " + e.what());
}

template <class Fn>
auto run_stage(const std::string& stage, Fn&& fn) {
    try {
        return fn();
    } catch (const std::exception& e) {
        stage_fail(stage, e);
    }
}

std::vector<EncodedExample> encode_all(const std::vector<LabeledExample>& xs, const Vocabulary& v,
                                       int max_len) {
    std::vector<EncodedExample> out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back(encode_text(x.text, v, max_len, x.label));
    return out;
}

// Each model's vocabulary comes from its own training data: the teacher never
// assigns ids to words it was not trained on, and the independent student
// builds its vocabulary over the pseudolabeled corpus (see train_student).
Vocabulary build_run_vocab(const ExperimentConfig& cfg,
                           const std::vector<LabeledExample>& teacher_train) {
    std::vector<std::vector<std::string>> corpus;
    corpus.reserve(teacher_train.size());
    for (const auto& ex : teacher_train) corpus.push_back(tokenize(ex.text));
    return build_vocab(corpus, cfg.vocab_min_freq, cfg.vocab_max_size);
}

struct SeedArtifacts {
    Model teacher;
    std::optional<Model> finetuned;
    std::optional<Model> noisy;
};

SeedArtifacts run_seed(const ExperimentConfig& cfg, uint64_t seed,
                       const std::vector<LabeledExample>& teacher_train_raw,
                       const std::string& seed_dir) {
    fs::create_directories(seed_dir);
    SeedArtifacts art;

    const std::string teacher_path = seed_dir + "/teacher.model";
    if (fs::exists(teacher_path)) {
        art.teacher = load_model(teacher_path);
    } else {
        run_stage("train-teacher", [&] {
            Model teacher;
            teacher.config = cfg.model;
            teacher.vocab = build_run_vocab(cfg, teacher_train_raw);
            teacher.config.vocab_size = teacher.vocab.size();

            Rng split_rng = derive_rng(seed, "split");
            auto [train, val] = split(teacher_train_raw, cfg.val_fraction, split_rng);

            Rng init_rng = derive_rng(seed, "teacher-init");
            teacher.params = init_params<float>(teacher.config, init_rng);

            Rng train_rng = derive_rng(seed, "teacher-train");
            auto fit = chain_thaw_train(std::move(teacher.params), teacher.config,
                                        encode_all(train, teacher.vocab, teacher.config.max_len),
                                        encode_all(val, teacher.vocab, teacher.config.max_len),
                                        cfg.train, train_rng);
            teacher.params = std::move(fit.params);
            write_trace_jsonl(seed_dir + "/teacher_trace.jsonl", fit.trace);
            save_model(teacher, teacher_path);
            art.teacher = std::move(teacher);
            return 0;
        });
    }

    const std::string pseudo_path = seed_dir + "/pseudo.jsonl";
    if (!fs::exists(pseudo_path)) {
        run_stage("pseudolabel", [&] {
            const std::string tmp = pseudo_path + ".tmp";
            pseudolabel_stream(art.teacher, cfg.unlabeled_path, tmp, cfg.pseudolabel_batch,
                               cfg.confidence_threshold);
            fs::rename(tmp, pseudo_path);
            return 0;
        });
    }

    auto train_one_student = [&](StudentMode mode, const std::string& model_path,
                                 const std::string& trace_path, const char* stage,
                                 const char* rng_name) {
        if (fs::exists(model_path)) return load_model(model_path);
        return run_stage(stage, [&] {
            auto pseudo = load_pseudolabels(pseudo_path);
            Rng rng = derive_rng(seed, rng_name);
            auto result = train_student(mode, pseudo, teacher_train_raw, art.teacher, cfg.train,
                                        cfg.val_fraction, rng, cfg.vocab_min_freq,
                                        cfg.vocab_max_size);
            write_trace_jsonl(trace_path, result.trace);
            save_model(result.model, model_path);
            return std::move(result.model);
        });
    };

    if (cfg.train_finetuned)
        art.finetuned = train_one_student(StudentMode::TeacherFineTuned,
                                          seed_dir + "/student_finetuned.model",
                                          seed_dir + "/student_finetuned_trace.jsonl",
                                          "train-student-finetuned", "student-finetuned");
    if (cfg.train_noisy)
        art.noisy = train_one_student(StudentMode::IndependentNoisyStudent,
                                      seed_dir + "/student_noisy.model",
                                      seed_dir + "/student_noisy_trace.jsonl",
                                      "train-student-noisy", "student-noisy");
    return art;
}

ordered_json row_to_json(const ComparisonRow& row) {
    ordered_json j;
    j["dataset"] = row.dataset;
    j["teacher"] = row.teacher ? ordered_json(*row.teacher) : ordered_json(nullptr);
    j["teacher_finetuned"] =
        row.teacher_finetuned ? ordered_json(*row.teacher_finetuned) : ordered_json(nullptr);
    j["independent_noisy_student"] = row.independent_noisy_student
                                         ? ordered_json(*row.independent_noisy_student)
                                         : ordered_json(nullptr);
    return j;
}

}  // namespace

void ExperimentConfig::validate() const {
    check(!teacher_train_path.empty(), "experiment config: teacher_train path is required");
    check(!unlabeled_path.empty(), "experiment config: unlabeled path is required");
    check(!eval_datasets.empty(), "experiment config: at least one evaluation dataset is required");
    check(!seeds.empty(), "experiment config: at least one seed is required");
    check(!out_dir.empty(), "experiment config: out_dir is required");
    check(val_fraction > 0.0 && val_fraction < 1.0,
          "experiment config: val_fraction must be in (0, 1)");
    check(pseudolabel_batch >= 1, "experiment config: pseudolabel_batch must be >= 1");
    if (confidence_threshold)
        check(*confidence_threshold > 0.0 && *confidence_threshold <= 1.0,
              "experiment config: confidence_threshold must be in (0, 1]");
    train.validate();
    std::set<std::string> paths{teacher_train_path, unlabeled_path};
    std::set<std::string> names;
    for (const auto& ds : eval_datasets) {
        check(paths.insert(ds.path).second,
              "experiment config: dataset path '" + ds.path + "' is referenced twice");
        check(names.insert(ds.name).second,
              "experiment config: dataset name '" + ds.name + "' is used twice");
    }
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": invalid JSON: " + e.what());
    }

    ExperimentConfig cfg;
    cfg.teacher_train_path = j.value("teacher_train", "");
    cfg.unlabeled_path = j.value("unlabeled", "");
    cfg.out_dir = j.value("out_dir", "");
    cfg.val_fraction = j.value("val_fraction", cfg.val_fraction);
    for (const auto& d : j.value("eval_datasets", nlohmann::json::array())) {
        EvalDatasetRef ref;
        ref.name = d.at("name").get<std::string>();
        ref.path = d.at("path").get<std::string>();
        ref.format = dataset_format_from_string(d.value("format", "jsonl"));
        cfg.eval_datasets.push_back(std::move(ref));
    }
    if (j.contains("model")) {
        const auto& m = j["model"];
        cfg.model.embed_dim = m.value("embed_dim", cfg.model.embed_dim);
        cfg.model.lstm_hidden_per_dir = m.value("lstm_hidden_per_dir", cfg.model.lstm_hidden_per_dir);
        cfg.model.max_len = m.value("max_len", cfg.model.max_len);
        cfg.model.embed_dropout_p = m.value("embed_dropout_p", cfg.model.embed_dropout_p);
        cfg.model.final_dropout_p = m.value("final_dropout_p", cfg.model.final_dropout_p);
        cfg.vocab_min_freq = m.value("vocab_min_freq", cfg.vocab_min_freq);
        cfg.vocab_max_size = m.value("vocab_max_size", cfg.vocab_max_size);
    }
    if (j.contains("train")) {
        const auto& t = j["train"];
        cfg.train.learning_rate = t.value("learning_rate", cfg.train.learning_rate);
        cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
        cfg.train.max_epochs = t.value("max_epochs", cfg.train.max_epochs);
        cfg.train.patience = t.value("patience", cfg.train.patience);
    }
    if (j.contains("student_modes")) {
        cfg.train_finetuned = false;
        cfg.train_noisy = false;
        for (const auto& m : j["student_modes"]) {
            auto mode = student_mode_from_string(m.get<std::string>());
            check(mode.has_value(), "experiment config: unknown student mode");
            if (*mode == StudentMode::TeacherFineTuned) cfg.train_finetuned = true;
            if (*mode == StudentMode::IndependentNoisyStudent) cfg.train_noisy = true;
        }
    }
    for (const auto& s : j.value("seeds", nlohmann::json::array()))
        cfg.seeds.push_back(s.get<uint64_t>());
    if (j.contains("confidence_threshold") && !j["confidence_threshold"].is_null())
        cfg.confidence_threshold = j["confidence_threshold"].get<double>();
    cfg.pseudolabel_batch = j.value("pseudolabel_batch", cfg.pseudolabel_batch);
    return cfg;
}

ordered_json run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    fs::create_directories(cfg.out_dir);
    DirLock lock(cfg.out_dir);

    auto teacher_train_raw = run_stage("load-teacher-train", [&] {
        return load_jsonl_labeled(cfg.teacher_train_path);
    });
    std::vector<NamedDataset> datasets;
    run_stage("load-eval-datasets", [&] {
        for (const auto& ref : cfg.eval_datasets)
            datasets.push_back({ref.name, load_labeled(ref.path, ref.format)});
        return 0;
    });

    ordered_json report;
    report["seeds"] = cfg.seeds;
    report["per_seed"] = ordered_json::array();

    // mean accumulators, keyed by dataset order
    std::vector<std::array<double, 3>> sums(datasets.size(), {0.0, 0.0, 0.0});
    std::vector<std::array<int, 3>> counts(datasets.size(), {0, 0, 0});
    std::vector<ComparisonRow> last_rows;

    for (uint64_t seed : cfg.seeds) {
        const std::string seed_dir = cfg.out_dir + "/seed_" + std::to_string(seed);
        auto art = run_seed(cfg, seed, teacher_train_raw, seed_dir);
        auto rows = run_stage("evaluate", [&] {
            return compare_models(&art.teacher, art.finetuned ? &*art.finetuned : nullptr,
                                  art.noisy ? &*art.noisy : nullptr, datasets);
        });

        ordered_json seed_entry;
        seed_entry["seed"] = seed;
        seed_entry["rows"] = ordered_json::array();
        for (size_t i = 0; i < rows.size(); ++i) {
            seed_entry["rows"].push_back(row_to_json(rows[i]));
            const std::array<std::optional<double>, 3> vals{rows[i].teacher,
                                                            rows[i].teacher_finetuned,
                                                            rows[i].independent_noisy_student};
            for (int k = 0; k < 3; ++k)
                if (vals[static_cast<size_t>(k)]) {
                    sums[i][static_cast<size_t>(k)] += *vals[static_cast<size_t>(k)];
                    ++counts[i][static_cast<size_t>(k)];
                }
        }
        report["per_seed"].push_back(std::move(seed_entry));

        std::ofstream md(seed_dir + "/report.md");
        md << render_comparison_markdown(rows);
        std::ofstream js(seed_dir + "/report.json");
        js << comparison_to_json(rows) << '\n';
        last_rows = std::move(rows);
    }

    std::vector<ComparisonRow> mean_rows;
    for (size_t i = 0; i < datasets.size(); ++i) {
        ComparisonRow row;
        row.dataset = datasets[i].name;
        auto mean = [&](int k) -> std::optional<double> {
            if (counts[i][static_cast<size_t>(k)] == 0) return std::nullopt;
            return sums[i][static_cast<size_t>(k)] / counts[i][static_cast<size_t>(k)];
        };
        row.teacher = mean(0);
        row.teacher_finetuned = mean(1);
        row.independent_noisy_student = mean(2);
        mean_rows.push_back(std::move(row));
    }
    report["mean"] = ordered_json::array();
    for (const auto& row : mean_rows) report["mean"].push_back(row_to_json(row));

    {
        std::ofstream js(cfg.out_dir + "/report.json");
        if (!js) throw std::runtime_error("cannot write report.json");
        js << report.dump(2) << '\n';
        std::ofstream md(cfg.out_dir + "/report.md");
        md << "# Evaluation report\n\n";
        md << "Seeds:";
        for (uint64_t s : cfg.seeds) md << ' ' << s;
        md << "\n\n";
        if (cfg.seeds.size() > 1) {
            md << "## Mean over seeds\n\n" << render_comparison_markdown(mean_rows) << '\n';
            for (size_t i = 0; i < cfg.seeds.size(); ++i) {
                md << "## Seed " << cfg.seeds[i] << "\n\n";
                std::vector<ComparisonRow> rows;
                for (const auto& rj : report["per_seed"][i]["rows"]) {
                    ComparisonRow r;
                    r.dataset = rj["dataset"].get<std::string>();
                    if (!rj["teacher"].is_null()) r.teacher = rj["teacher"].get<double>();
                    if (!rj["teacher_finetuned"].is_null())
                        r.teacher_finetuned = rj["teacher_finetuned"].get<double>();
                    if (!rj["independent_noisy_student"].is_null())
                        r.independent_noisy_student = rj["independent_noisy_student"].get<double>();
                    rows.push_back(std::move(r));
                }
                md << render_comparison_markdown(rows) << '\n';
            }
        } else {
            md << render_comparison_markdown(last_rows) << '\n';
        }
    }
    return report;
}

}  // namespace sentipipe
