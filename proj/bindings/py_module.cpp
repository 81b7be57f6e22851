#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sentipipe/dataio.hpp"
#include "sentipipe/experiment.hpp"
#include "sentipipe/model_io.hpp"
#include "sentipipe/selftrain.hpp"
#include "sentipipe/synth.hpp"

namespace py = pybind11;
namespace sp = sentipipe;

namespace {

std::vector<sp::EncodedExample> encode_all(const std::vector<sp::LabeledExample>& xs,
                                           const sp::Vocabulary& vocab, int max_len) {
    std::vector<sp::EncodedExample> out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back(sp::encode_text(x.text, vocab, max_len, x.label));
    return out;
}

sp::SynthSpec spec_from_kwargs(const py::kwargs& kwargs) {
    sp::SynthSpec spec;
    for (auto item : kwargs) {
        const std::string key = py::cast<std::string>(item.first);
        if (key == "domains") spec.domains = py::cast<int>(item.second);
        else if (key == "teacher_domain") spec.teacher_domain = py::cast<int>(item.second);
        else if (key == "teacher_labeled") spec.teacher_labeled = py::cast<int>(item.second);
        else if (key == "unlabeled_total") spec.unlabeled_total = py::cast<int>(item.second);
        else if (key == "test_per_domain") spec.test_per_domain = py::cast<int>(item.second);
        else if (key == "polarity_words_per_class")
            spec.polarity_words_per_class = py::cast<int>(item.second);
        else if (key == "filler_words") spec.filler_words = py::cast<int>(item.second);
        else if (key == "synonym_rate") spec.synonym_rate = py::cast<double>(item.second);
        else if (key == "min_doc_len") spec.min_doc_len = py::cast<int>(item.second);
        else if (key == "max_doc_len") spec.max_doc_len = py::cast<int>(item.second);
        else if (key == "label_noise") spec.label_noise = py::cast<double>(item.second);
        else if (key == "polarity_rate") spec.polarity_rate = py::cast<double>(item.second);
        else if (key == "cross_rate") spec.cross_rate = py::cast<double>(item.second);
        else if (key == "seed") spec.seed = py::cast<uint64_t>(item.second);
        else throw py::key_error("unknown SynthSpec field: " + key);
    }
    return spec;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Teacher/student sentiment classification pipeline";

    m.def("tokenize", [](const std::string& text) { return sp::tokenize(text); },
          py::arg("text"), "Lowercase and split text into tokens.");

    py::class_<sp::Model>(m, "Model")
        .def_property_readonly("vocab_size", [](const sp::Model& m_) { return m_.config.vocab_size; })
        .def_property_readonly("embed_dim", [](const sp::Model& m_) { return m_.config.embed_dim; })
        .def_property_readonly("hidden_per_dir",
                               [](const sp::Model& m_) { return m_.config.lstm_hidden_per_dir; })
        .def_property_readonly("max_len", [](const sp::Model& m_) { return m_.config.max_len; })
        .def("predict",
             [](const sp::Model& m_, const std::string& text) {
                 const auto p = sp::predict(m_, text);
                 py::dict probs;
                 probs["negative"] = p.probs[0];
                 probs["neutral"] = p.probs[1];
                 probs["positive"] = p.probs[2];
                 return py::make_tuple(std::string(sp::to_string(p.label)), probs);
             },
             py::arg("text"), "Return (label, probability dict) for one text.")
        .def("save", [](const sp::Model& m_, const std::string& path) { sp::save_model(m_, path); },
             py::arg("path"));

    m.def("load_model", &sp::load_model, py::arg("path"));

    m.def(
        "train_teacher",
        [](const std::string& train_path, const std::string& out_path, int embed_dim, int hidden,
           int max_len, double learning_rate, int batch_size, int max_epochs, int patience,
           double val_fraction, uint64_t seed, const std::string& vocab_extra) {
            auto data = sp::load_jsonl_labeled(train_path);
            std::vector<std::vector<std::string>> corpus;
            for (const auto& ex : data) corpus.push_back(sp::tokenize(ex.text));
            if (!vocab_extra.empty())
                sp::for_each_jsonl_text(vocab_extra, [&](size_t, std::string text) {
                    corpus.push_back(sp::tokenize(text));
                });
            sp::Model model;
            model.config.embed_dim = embed_dim;
            model.config.lstm_hidden_per_dir = hidden;
            model.config.max_len = max_len;
            model.vocab = sp::build_vocab(corpus, 2, 50000);
            model.config.vocab_size = model.vocab.size();

            sp::Rng split_rng = sp::derive_rng(seed, "split");
            auto [train, val] = sp::split(data, val_fraction, split_rng);
            sp::Rng init_rng = sp::derive_rng(seed, "teacher-init");
            model.params = sp::init_params<float>(model.config, init_rng);
            sp::TrainConfig tc;
            tc.learning_rate = learning_rate;
            tc.batch_size = batch_size;
            tc.max_epochs = max_epochs;
            tc.patience = patience;
            tc.seed = seed;
            sp::Rng train_rng = sp::derive_rng(seed, "teacher-train");
            auto fit = sp::chain_thaw_train(std::move(model.params), model.config,
                                            encode_all(train, model.vocab, model.config.max_len),
                                            encode_all(val, model.vocab, model.config.max_len), tc,
                                            train_rng);
            model.params = std::move(fit.params);
            sp::save_model(model, out_path);
            return fit.best_val_accuracy;
        },
        py::arg("train_path"), py::arg("out_path"), py::arg("embed_dim") = 16,
        py::arg("hidden") = 12, py::arg("max_len") = 32, py::arg("learning_rate") = 1e-3,
        py::arg("batch_size") = 32, py::arg("max_epochs") = 10, py::arg("patience") = 2,
        py::arg("val_fraction") = 0.1, py::arg("seed") = 1, py::arg("vocab_extra") = "",
        "Chain-thaw train a model on labeled JSONL; returns best validation accuracy.");

    m.def(
        "pseudolabel",
        [](const sp::Model& model, const std::string& in_path, const std::string& out_path,
           int batch_size, py::object threshold) {
            std::optional<double> thr;
            if (!threshold.is_none()) thr = py::cast<double>(threshold);
            return sp::pseudolabel_stream(model, in_path, out_path, batch_size, thr);
        },
        py::arg("model"), py::arg("in_path"), py::arg("out_path"), py::arg("batch_size") = 64,
        py::arg("threshold") = py::none(),
        "Write pseudolabel JSONL for an unlabeled corpus; returns the record count.");

    m.def(
        "evaluate",
        [](const sp::Model& model, const std::string& data_path, const std::string& format) {
            auto data = sp::load_labeled(data_path, sp::dataset_format_from_string(format));
            auto enc = encode_all(data, model.vocab, model.config.max_len);
            return sp::evaluate_accuracy(model.config, model.params, enc);
        },
        py::arg("model"), py::arg("data_path"), py::arg("format") = "jsonl",
        "Accuracy of a model on a labeled dataset.");

    m.def(
        "synth_gen",
        [](const std::string& out_dir, const py::kwargs& kwargs) {
            const auto files = sp::synth_gen(spec_from_kwargs(kwargs), out_dir);
            py::dict d;
            d["teacher_train"] = files.teacher_train;
            d["unlabeled"] = files.unlabeled;
            d["tests"] = files.test_files;
            d["manifest"] = files.manifest;
            return d;
        },
        py::arg("out_dir"), "Generate the synthetic multi-domain corpus; returns the file map.");

    m.def(
        "run_experiment",
        [](const std::string& config_path) {
            const auto report = sp::run_experiment(sp::load_experiment_config(config_path));
            return report.dump();
        },
        py::arg("config_path"),
        "Run the full pipeline from a config file; returns the report as a JSON string.");

#ifdef SENTIPIPE_VERSION
    m.attr("__version__") = SENTIPIPE_VERSION;
#else
    m.attr("__version__") = "dev";
#endif
}
