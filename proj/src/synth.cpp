#include "sentipipe/synth.hpp"

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "sentipipe/dataio.hpp"

namespace sentipipe {

namespace {

std::string word_name(const char* prefix, int i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%02d", prefix, i);
    return buf;
}

struct Lexicon {
    std::array<std::vector<std::string>, 3> polarity;  // indexed by SentimentLabel
    std::vector<std::string> filler;

    static Lexicon build(const SynthSpec& spec) {
        Lexicon lex;
        const char* prefixes[3] = {"neg", "neu", "pos"};
        for (int c = 0; c < 3; ++c)
            for (int i = 0; i < spec.polarity_words_per_class; ++i)
                lex.polarity[static_cast<size_t>(c)].push_back(word_name(prefixes[c], i));
        for (int i = 0; i < spec.filler_words; ++i) lex.filler.push_back(word_name("fill", i));
        return lex;
    }
};

// Polarity word -> its synonym in a non-teacher domain.
std::string domain_synonym(int domain, const std::string& word) {
    return "d" + std::to_string(domain) + word;
}

std::string make_doc(const SynthSpec& spec, const Lexicon& lex, int domain, SentimentLabel label,
                     Rng& rng) {
    const int len = spec.min_doc_len +
                    static_cast<int>(rng.below(static_cast<uint64_t>(spec.max_doc_len - spec.min_doc_len + 1)));
    std::string doc;
    for (int i = 0; i < len; ++i) {
        const double r = rng.uniform();
        std::string word;
        bool is_polarity = false;
        if (r < spec.polarity_rate) {
            const auto& own = lex.polarity[static_cast<size_t>(label)];
            word = own[rng.below(own.size())];
            is_polarity = true;
        } else if (r < spec.polarity_rate + spec.cross_rate) {
            const int other = (static_cast<int>(label) + 1 + static_cast<int>(rng.below(2))) % 3;
            const auto& cls = lex.polarity[static_cast<size_t>(other)];
            word = cls[rng.below(cls.size())];
            is_polarity = true;
        } else {
            word = lex.filler[rng.below(lex.filler.size())];
        }
        if (is_polarity && domain != spec.teacher_domain && rng.bernoulli(spec.synonym_rate))
            word = domain_synonym(domain, word);
        if (!doc.empty()) doc += ' ';
        doc += word;
    }
    return doc;
}

SentimentLabel cycle_label(int64_t i) { return static_cast<SentimentLabel>(i % 3); }

void validate_spec(const SynthSpec& spec) {
    std::vector<std::string> problems;
    if (spec.domains < 1) problems.push_back("domains must be >= 1");
    if (spec.teacher_domain < 0 || spec.teacher_domain >= spec.domains)
        problems.push_back("teacher_domain must be in [0, domains)");
    if (spec.teacher_labeled < 1) problems.push_back("teacher_labeled must be >= 1");
    if (spec.unlabeled_total < 1) problems.push_back("unlabeled_total must be >= 1");
    if (spec.test_per_domain < 1) problems.push_back("test_per_domain must be >= 1");
    if (spec.polarity_words_per_class < 1) problems.push_back("polarity_words_per_class must be >= 1");
    if (spec.filler_words < 1) problems.push_back("filler_words must be >= 1");
    if (spec.synonym_rate < 0.0 || spec.synonym_rate >= 1.0)
        problems.push_back("synonym_rate must be in [0, 1)");
    if (spec.min_doc_len < 1 || spec.max_doc_len < spec.min_doc_len)
        problems.push_back("document length range is invalid");
    if (spec.label_noise < 0.0 || spec.label_noise >= 1.0)
        problems.push_back("label_noise must be in [0, 1)");
    if (spec.polarity_rate <= 0.0 || spec.cross_rate < 0.0 ||
        spec.polarity_rate + spec.cross_rate > 1.0)
        problems.push_back("polarity_rate/cross_rate mixture is invalid");
    if (!problems.empty()) {
        std::string msg = "invalid synth spec: " + problems[0];
        for (size_t i = 1; i < problems.size(); ++i) msg += "; " + problems[i];
        throw std::invalid_argument(msg);
    }
}

}  // namespace

SynthFiles synth_gen(const SynthSpec& spec, const std::string& out_dir) {
    validate_spec(spec);
    std::filesystem::create_directories(out_dir);
    const Lexicon lex = Lexicon::build(spec);
    SynthFiles files;

    {
        Rng rng = derive_rng(spec.seed, "teacher_train");
        std::vector<LabeledExample> docs;
        docs.reserve(static_cast<size_t>(spec.teacher_labeled));
        for (int64_t i = 0; i < spec.teacher_labeled; ++i) {
            SentimentLabel label = cycle_label(i);
            std::string text = make_doc(spec, lex, spec.teacher_domain, label, rng);
            if (spec.label_noise > 0.0 && rng.bernoulli(spec.label_noise))
                label = static_cast<SentimentLabel>((static_cast<int>(label) + 1 +
                                                     static_cast<int>(rng.below(2))) % 3);
            docs.push_back({std::move(text), label});
        }
        files.teacher_train = out_dir + "/teacher_train.jsonl";
        write_jsonl_labeled(files.teacher_train, docs);
    }

    {
        Rng rng = derive_rng(spec.seed, "unlabeled");
        std::vector<std::string> docs;
        docs.reserve(static_cast<size_t>(spec.unlabeled_total));
        for (int64_t i = 0; i < spec.unlabeled_total; ++i) {
            const int domain = static_cast<int>(i % spec.domains);
            docs.push_back(make_doc(spec, lex, domain, cycle_label(i / spec.domains), rng));
        }
        files.unlabeled = out_dir + "/unlabeled.jsonl";
        write_jsonl_unlabeled(files.unlabeled, docs);
    }

    for (int domain = 0; domain < spec.domains; ++domain) {
        Rng rng = derive_rng(spec.seed, "test_domain" + std::to_string(domain));
        std::vector<LabeledExample> docs;
        docs.reserve(static_cast<size_t>(spec.test_per_domain));
        for (int64_t i = 0; i < spec.test_per_domain; ++i) {
            const SentimentLabel label = cycle_label(i);
            docs.push_back({make_doc(spec, lex, domain, label, rng), label});
        }
        const std::string path = out_dir + "/test_domain" + std::to_string(domain) + ".jsonl";
        write_jsonl_labeled(path, docs);
        files.test_files.push_back(path);
    }

    {
        nlohmann::ordered_json manifest;
        manifest["teacher_train"] = files.teacher_train;
        manifest["unlabeled"] = files.unlabeled;
        manifest["tests"] = files.test_files;
        manifest["teacher_domain"] = spec.teacher_domain;
        manifest["counts"] = {{"teacher_labeled", spec.teacher_labeled},
                              {"unlabeled_total", spec.unlabeled_total},
                              {"test_per_domain", spec.test_per_domain}};
        files.manifest = out_dir + "/manifest.json";
        std::ofstream out(files.manifest);
        if (!out) throw std::runtime_error("cannot write " + files.manifest);
        out << manifest.dump(2) << '\n';
    }
    return files;
}

}  // namespace sentipipe
