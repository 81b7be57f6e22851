// Command-line front end for the sentiment self-training pipeline.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "sentipipe/dataio.hpp"
#include "sentipipe/experiment.hpp"
#include "sentipipe/model_io.hpp"
#include "sentipipe/selftrain.hpp"
#include "sentipipe/serve.hpp"
#include "sentipipe/synth.hpp"

namespace sp = sentipipe;

namespace {

struct ModelOpts {
    int embed_dim = 32;
    int hidden = 24;
    int max_len = 64;
    float embed_dropout = 0.1f;
    float final_dropout = 0.5f;
    int vocab_min_freq = 2;
    int vocab_max_size = 50000;

    void attach(CLI::App* cmd) {
        cmd->add_option("--embed-dim", embed_dim, "Embedding width");
        cmd->add_option("--hidden", hidden, "LSTM hidden units per direction");
        cmd->add_option("--max-len", max_len, "Sequence length cap in tokens");
        cmd->add_option("--embed-dropout", embed_dropout, "Channel dropout after the embedding");
        cmd->add_option("--final-dropout", final_dropout, "Dropout before the classifier");
        cmd->add_option("--vocab-min-freq", vocab_min_freq, "Minimum token frequency");
        cmd->add_option("--vocab-max-size", vocab_max_size, "Vocabulary size cap");
    }

    sp::ModelConfig to_config() const {
        sp::ModelConfig cfg;
        cfg.embed_dim = embed_dim;
        cfg.lstm_hidden_per_dir = hidden;
        cfg.max_len = max_len;
        cfg.embed_dropout_p = embed_dropout;
        cfg.final_dropout_p = final_dropout;
        return cfg;
    }
};

struct TrainOpts {
    double lr = 1e-3;
    int batch_size = 32;
    int max_epochs = 100;
    int patience = 3;

    void attach(CLI::App* cmd) {
        cmd->add_option("--lr", lr, "Adam learning rate");
        cmd->add_option("--batch-size", batch_size, "Minibatch size");
        cmd->add_option("--max-epochs", max_epochs, "Epoch cap per chain-thaw phase");
        cmd->add_option("--patience", patience, "Epochs without improvement before stopping");
    }

    sp::TrainConfig to_config(uint64_t seed) const {
        sp::TrainConfig tc;
        tc.learning_rate = lr;
        tc.batch_size = batch_size;
        tc.max_epochs = max_epochs;
        tc.patience = patience;
        tc.seed = seed;
        return tc;
    }
};

std::vector<sp::EncodedExample> encode_all(const std::vector<sp::LabeledExample>& xs,
                                           const sp::Vocabulary& vocab, int max_len) {
    std::vector<sp::EncodedExample> out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back(sp::encode_text(x.text, vocab, max_len, x.label));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cross-domain sentiment classification via teacher/student self-training"};
    app.require_subcommand(1);

    // synth-data
    auto* synth_cmd = app.add_subcommand("synth-data", "Generate a synthetic multi-domain corpus");
    std::string synth_spec_path, synth_out = "synth";
    synth_cmd->add_option("--spec", synth_spec_path, "SynthSpec JSON file")->required();
    synth_cmd->add_option("--out", synth_out, "Output directory");

    // train-teacher
    auto* teach_cmd = app.add_subcommand("train-teacher", "Chain-thaw train a model from scratch");
    std::string teach_train, teach_out = "teacher.model", teach_trace, teach_vocab_extra;
    double teach_val_fraction = 0.1;
    uint64_t teach_seed = 1;
    ModelOpts teach_model;
    TrainOpts teach_train_opts;
    teach_cmd->add_option("--train", teach_train, "Labeled JSONL training data")->required();
    teach_cmd->add_option("--out", teach_out, "Model file to write");
    teach_cmd->add_option("--val-fraction", teach_val_fraction, "Held-out validation fraction");
    teach_cmd->add_option("--seed", teach_seed, "Root seed");
    teach_cmd->add_option("--trace-out", teach_trace, "Write per-epoch trace JSONL here");
    teach_cmd->add_option("--vocab-extra", teach_vocab_extra,
                          "Unlabeled JSONL whose tokens also enter the vocabulary");
    teach_model.attach(teach_cmd);
    teach_train_opts.attach(teach_cmd);

    // pseudolabel
    auto* pseudo_cmd = app.add_subcommand("pseudolabel", "Label an unannotated corpus with a model");
    std::string pseudo_model, pseudo_in, pseudo_out = "pseudo.jsonl";
    int pseudo_batch = 64;
    double pseudo_threshold = 0.0;
    pseudo_cmd->add_option("--model", pseudo_model, "Teacher model file")->required();
    pseudo_cmd->add_option("--in", pseudo_in, "Unlabeled JSONL corpus")->required();
    pseudo_cmd->add_option("--out", pseudo_out, "Pseudolabel JSONL to write");
    pseudo_cmd->add_option("--batch-size", pseudo_batch, "Inference batch size");
    auto* thr_opt = pseudo_cmd->add_option("--threshold", pseudo_threshold,
                                           "Drop records whose confidence is below this");

    // train-student
    auto* stud_cmd = app.add_subcommand("train-student", "Train a student on pseudolabels");
    std::string stud_mode_str, stud_pseudo, stud_teacher_train, stud_teacher_model,
        stud_out = "student.model", stud_trace;
    double stud_val_fraction = 0.1;
    uint64_t stud_seed = 1;
    TrainOpts stud_train_opts;
    stud_cmd->add_option("--mode", stud_mode_str, "finetune or noisy")->required();
    stud_cmd->add_option("--pseudo", stud_pseudo, "Pseudolabel JSONL")->required();
    stud_cmd->add_option("--teacher-train", stud_teacher_train,
                         "Teacher's labeled JSONL (noisy mode mixes it in)");
    stud_cmd->add_option("--teacher-model", stud_teacher_model, "Teacher model file")->required();
    stud_cmd->add_option("--out", stud_out, "Model file to write");
    stud_cmd->add_option("--val-fraction", stud_val_fraction, "Held-out validation fraction");
    stud_cmd->add_option("--seed", stud_seed, "Root seed");
    stud_cmd->add_option("--trace-out", stud_trace, "Write per-epoch trace JSONL here");
    stud_train_opts.attach(stud_cmd);

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "Accuracy of a model on a labeled dataset");
    std::string eval_model, eval_data, eval_format = "jsonl";
    eval_cmd->add_option("--model", eval_model, "Model file")->required();
    eval_cmd->add_option("--data", eval_data, "Labeled dataset")->required();
    eval_cmd->add_option("--format", eval_format, "jsonl or sent140");

    // run-experiment
    auto* run_cmd = app.add_subcommand("run-experiment", "Full teacher/pseudolabel/student pipeline");
    std::string run_config;
    run_cmd->add_option("--config", run_config, "Experiment config JSON")->required();

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "HTTP inference endpoint");
    std::string serve_model_path, serve_addr = "127.0.0.1:8080";
    serve_cmd->add_option("--model", serve_model_path, "Model file")->required();
    serve_cmd->add_option("--addr", serve_addr, "host:port to bind");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth_cmd) {
            std::ifstream in(synth_spec_path);
            if (!in) throw std::runtime_error("cannot open " + synth_spec_path);
            nlohmann::json j;
            in >> j;
            sp::SynthSpec spec;
            spec.domains = j.value("domains", spec.domains);
            spec.teacher_domain = j.value("teacher_domain", spec.teacher_domain);
            spec.teacher_labeled = j.value("teacher_labeled", spec.teacher_labeled);
            spec.unlabeled_total = j.value("unlabeled_total", spec.unlabeled_total);
            spec.test_per_domain = j.value("test_per_domain", spec.test_per_domain);
            spec.polarity_words_per_class =
                j.value("polarity_words_per_class", spec.polarity_words_per_class);
            spec.filler_words = j.value("filler_words", spec.filler_words);
            spec.synonym_rate = j.value("synonym_rate", spec.synonym_rate);
            spec.min_doc_len = j.value("min_doc_len", spec.min_doc_len);
            spec.max_doc_len = j.value("max_doc_len", spec.max_doc_len);
            spec.label_noise = j.value("label_noise", spec.label_noise);
            spec.polarity_rate = j.value("polarity_rate", spec.polarity_rate);
            spec.cross_rate = j.value("cross_rate", spec.cross_rate);
            spec.seed = j.value("seed", spec.seed);
            auto files = sp::synth_gen(spec, synth_out);
            std::cout << "wrote " << files.manifest << "\n";
        } else if (*teach_cmd) {
            auto data = sp::load_jsonl_labeled(teach_train);
            std::vector<std::vector<std::string>> corpus;
            corpus.reserve(data.size());
            for (const auto& ex : data) corpus.push_back(sp::tokenize(ex.text));
            if (!teach_vocab_extra.empty())
                sp::for_each_jsonl_text(teach_vocab_extra, [&](size_t, std::string text) {
                    corpus.push_back(sp::tokenize(text));
                });

            sp::Model model;
            model.config = teach_model.to_config();
            model.vocab = sp::build_vocab(corpus, teach_model.vocab_min_freq,
                                          teach_model.vocab_max_size);
            model.config.vocab_size = model.vocab.size();

            sp::Rng split_rng = sp::derive_rng(teach_seed, "split");
            auto [train, val] = sp::split(data, teach_val_fraction, split_rng);
            sp::Rng init_rng = sp::derive_rng(teach_seed, "teacher-init");
            model.params = sp::init_params<float>(model.config, init_rng);
            sp::Rng train_rng = sp::derive_rng(teach_seed, "teacher-train");
            auto fit = sp::chain_thaw_train(std::move(model.params), model.config,
                                            encode_all(train, model.vocab, model.config.max_len),
                                            encode_all(val, model.vocab, model.config.max_len),
                                            teach_train_opts.to_config(teach_seed), train_rng);
            model.params = std::move(fit.params);
            if (!teach_trace.empty()) sp::write_trace_jsonl(teach_trace, fit.trace);
            sp::save_model(model, teach_out);
            std::cout << "best validation accuracy " << fit.best_val_accuracy << ", wrote "
                      << teach_out << "\n";
        } else if (*pseudo_cmd) {
            auto model = sp::load_model(pseudo_model);
            std::optional<double> threshold;
            if (thr_opt->count() > 0) threshold = pseudo_threshold;
            const int64_t n =
                sp::pseudolabel_stream(model, pseudo_in, pseudo_out, pseudo_batch, threshold);
            std::cout << "wrote " << n << " records to " << pseudo_out << "\n";
        } else if (*stud_cmd) {
            auto mode = sp::student_mode_from_string(stud_mode_str);
            if (!mode) throw std::runtime_error("unknown --mode '" + stud_mode_str +
                                                "' (expected finetune or noisy)");
            auto teacher = sp::load_model(stud_teacher_model);
            auto pseudo = sp::load_pseudolabels(stud_pseudo);
            std::vector<sp::LabeledExample> teacher_train_data;
            if (!stud_teacher_train.empty())
                teacher_train_data = sp::load_jsonl_labeled(stud_teacher_train);
            sp::Rng rng = sp::derive_rng(stud_seed, "student");
            auto result = sp::train_student(*mode, pseudo, teacher_train_data, teacher,
                                            stud_train_opts.to_config(stud_seed),
                                            stud_val_fraction, rng);
            if (!stud_trace.empty()) sp::write_trace_jsonl(stud_trace, result.trace);
            sp::save_model(result.model, stud_out);
            std::cout << "wrote " << stud_out << "\n";
        } else if (*eval_cmd) {
            auto model = sp::load_model(eval_model);
            auto data = sp::load_labeled(eval_data, sp::dataset_format_from_string(eval_format));
            auto enc = encode_all(data, model.vocab, model.config.max_len);
            std::cout << sp::evaluate_accuracy(model.config, model.params, enc) << "\n";
        } else if (*run_cmd) {
            auto cfg = sp::load_experiment_config(run_config);
            sp::run_experiment(cfg);
            std::cout << "report written to " << cfg.out_dir << "/report.json\n";
        } else if (*serve_cmd) {
            const auto colon = serve_addr.rfind(':');
            if (colon == std::string::npos)
                throw std::runtime_error("--addr must be host:port");
            const std::string host = serve_addr.substr(0, colon);
            const int port = std::stoi(serve_addr.substr(colon + 1));
            auto model = sp::load_model(serve_model_path);
            std::cout << "serving " << serve_model_path << " on " << host << ":" << port << "\n";
            return sp::run_sentiment_server(model, host, port);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
