#include "sentipipe/selftrain.hpp"

#include <cstdio>
#include <fstream>
#include <json.hpp>

#include "sentipipe/dataio.hpp"

namespace sentipipe {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::vector<PseudoLabelRecord> label_chunk(const Model& teacher,
                                           const std::vector<std::string>& texts, int64_t base_id,
                                           std::optional<double> threshold) {
    std::vector<EncodedExample> encoded;
    encoded.reserve(texts.size());
    for (const auto& t : texts) encoded.push_back(encode_text(t, teacher.vocab, teacher.config.max_len));
    Mat<float> probs = predict_probs(encoded, teacher.config, teacher.params,
                                     static_cast<int>(texts.size()));
    std::vector<PseudoLabelRecord> out;
    out.reserve(texts.size());
    for (size_t i = 0; i < texts.size(); ++i) {
        const float* row = probs.row(static_cast<int>(i));
        const int cls = argmax_lowest_tie(row, teacher.config.num_classes);
        const double conf = static_cast<double>(row[cls]);
        if (threshold && conf < *threshold) continue;
        out.push_back({base_id + static_cast<int64_t>(i), texts[i],
                       static_cast<SentimentLabel>(cls), conf});
    }
    return out;
}

std::string format_pct(double accuracy) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f%%", accuracy * 100.0);
    return buf;
}

}  // namespace

std::optional<StudentMode> student_mode_from_string(std::string_view s) {
    if (s == "finetune") return StudentMode::TeacherFineTuned;
    if (s == "noisy") return StudentMode::IndependentNoisyStudent;
    return std::nullopt;
}

const char* to_string(StudentMode m) {
    return m == StudentMode::TeacherFineTuned ? "finetune" : "noisy";
}

std::vector<PseudoLabelRecord> pseudolabel_corpus(const Model& teacher,
                                                  const std::vector<std::string>& texts,
                                                  int batch_size,
                                                  std::optional<double> threshold) {
    check(batch_size >= 1, "pseudolabel_corpus: batch_size must be >= 1");
    if (threshold) check(*threshold > 0.0 && *threshold <= 1.0,
                         "pseudolabel_corpus: threshold must be in (0, 1]");
    std::vector<PseudoLabelRecord> out;
    out.reserve(texts.size());
    std::vector<std::string> chunk;
    for (size_t start = 0; start < texts.size(); start += static_cast<size_t>(batch_size)) {
        const size_t n = std::min(static_cast<size_t>(batch_size), texts.size() - start);
        chunk.assign(texts.begin() + static_cast<int64_t>(start),
                     texts.begin() + static_cast<int64_t>(start + n));
        auto records = label_chunk(teacher, chunk, static_cast<int64_t>(start), threshold);
        out.insert(out.end(), records.begin(), records.end());
    }
    return out;
}

int64_t pseudolabel_stream(const Model& teacher, const std::string& in_jsonl,
                           const std::string& out_jsonl, int batch_size,
                           std::optional<double> threshold) {
    check(batch_size >= 1, "pseudolabel_stream: batch_size must be >= 1");
    std::ofstream out(out_jsonl);
    if (!out) throw std::runtime_error("cannot write " + out_jsonl);

    int64_t written = 0;
    std::vector<std::string> chunk;
    int64_t base_id = 0;
    auto flush = [&] {
        if (chunk.empty()) return;
        for (const auto& rec : label_chunk(teacher, chunk, base_id, threshold)) {
            ordered_json j;
            j["id"] = rec.doc_id;
            j["text"] = rec.text;
            j["label"] = to_string(rec.label);
            j["confidence"] = rec.confidence;
            out << j.dump() << '\n';
            ++written;
        }
        base_id += static_cast<int64_t>(chunk.size());
        chunk.clear();
    };
    for_each_jsonl_text(in_jsonl, [&](size_t, std::string text) {
        chunk.push_back(std::move(text));
        if (static_cast<int>(chunk.size()) == batch_size) flush();
    });
    flush();
    return written;
}

std::vector<PseudoLabelRecord> load_pseudolabels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<PseudoLabelRecord> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("id") || !j.contains("text") || !j.contains("label") ||
            !j.contains("confidence"))
            throw std::runtime_error(path + ": malformed pseudolabel record at line " +
                                     std::to_string(lineno));
        auto label = label_from_string(j["label"].get<std::string>());
        if (!label)
            throw std::runtime_error(path + ": unknown label at line " + std::to_string(lineno));
        out.push_back({j["id"].get<int64_t>(), j["text"].get<std::string>(), *label,
                       j["confidence"].get<double>()});
    }
    return out;
}

void write_pseudolabels(const std::string& path, const std::vector<PseudoLabelRecord>& records) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (const auto& rec : records) {
        ordered_json j;
        j["id"] = rec.doc_id;
        j["text"] = rec.text;
        j["label"] = to_string(rec.label);
        j["confidence"] = rec.confidence;
        out << j.dump() << '\n';
    }
}

std::vector<LabeledExample> assemble_student_dataset(StudentMode mode,
                                                     const std::vector<PseudoLabelRecord>& pseudo,
                                                     const std::vector<LabeledExample>& teacher_train,
                                                     Rng& rng) {
    check(!pseudo.empty(), "assemble_student_dataset: no pseudolabels");
    std::vector<LabeledExample> out;
    out.reserve(pseudo.size() +
                (mode == StudentMode::IndependentNoisyStudent ? teacher_train.size() : 0));
    for (const auto& rec : pseudo) out.push_back({rec.text, rec.label});
    if (mode == StudentMode::IndependentNoisyStudent) {
        out.insert(out.end(), teacher_train.begin(), teacher_train.end());
        rng.shuffle(out.begin(), out.end());
    }
    return out;
}

StudentResult train_student(StudentMode mode, const std::vector<PseudoLabelRecord>& pseudo,
                            const std::vector<LabeledExample>& teacher_train, const Model& teacher,
                            const TrainConfig& tc, double val_fraction, Rng& rng, int vocab_min_freq,
                            int vocab_max_size) {
    auto data = assemble_student_dataset(mode, pseudo, teacher_train, rng);

    StudentResult result;
    result.model.config = teacher.config;
    if (mode == StudentMode::TeacherFineTuned) {
        // finetuning continues the teacher's own embedding table
        result.model.vocab = teacher.vocab;
        result.model.params = teacher.params;
    } else {
        // a fresh backbone owns a vocabulary built from its training corpus,
        // so corpus-only words get trainable embeddings instead of unk
        std::vector<std::vector<std::string>> corpus;
        corpus.reserve(data.size());
        for (const auto& ex : data) corpus.push_back(tokenize(ex.text));
        result.model.vocab = build_vocab(corpus, vocab_min_freq, vocab_max_size);
        result.model.config.vocab_size = result.model.vocab.size();
        result.model.params = init_params<float>(result.model.config, rng);
    }
    if (tc.max_epochs == 0) return result;  // no-op training keeps the initialization

    auto [train_split, val_split] = split(data, val_fraction, rng);
    auto enc = [&](const std::vector<LabeledExample>& xs) {
        std::vector<EncodedExample> out;
        out.reserve(xs.size());
        for (const auto& x : xs)
            out.push_back(
                encode_text(x.text, result.model.vocab, result.model.config.max_len, x.label));
        return out;
    };
    auto fit = chain_thaw_train(std::move(result.model.params), result.model.config,
                                enc(train_split), enc(val_split), tc, rng);
    result.model.params = std::move(fit.params);
    result.trace = std::move(fit.trace);
    return result;
}

std::vector<ComparisonRow> compare_models(const Model* teacher, const Model* teacher_finetuned,
                                          const Model* independent_noisy_student,
                                          const std::vector<NamedDataset>& datasets) {
    std::vector<ComparisonRow> rows;
    rows.reserve(datasets.size());
    for (const auto& ds : datasets) {
        check(!ds.examples.empty(), "compare_models: dataset '" + ds.name + "' is empty");
        ComparisonRow row;
        row.dataset = ds.name;
        auto score = [&](const Model* m) -> std::optional<double> {
            if (!m) return std::nullopt;
            std::vector<EncodedExample> enc;
            enc.reserve(ds.examples.size());
            for (const auto& ex : ds.examples)
                enc.push_back(encode_text(ex.text, m->vocab, m->config.max_len, ex.label));
            return evaluate_accuracy(m->config, m->params, enc);
        };
        row.teacher = score(teacher);
        row.teacher_finetuned = score(teacher_finetuned);
        row.independent_noisy_student = score(independent_noisy_student);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string render_comparison_markdown(const std::vector<ComparisonRow>& rows) {
    std::string out;
    out += "| Dataset Name | Teacher | Teacher Finetuning | Independent Noisy Student |\n";
    out += "| --- | --- | --- | --- |\n";
    auto cell = [](const std::optional<double>& v) { return v ? format_pct(*v) : std::string("-"); };
    for (const auto& row : rows) {
        out += "| " + row.dataset + " | " + cell(row.teacher) + " | " + cell(row.teacher_finetuned) +
               " | " + cell(row.independent_noisy_student) + " |\n";
    }
    return out;
}

std::string comparison_to_json(const std::vector<ComparisonRow>& rows) {
    ordered_json arr = ordered_json::array();
    for (const auto& row : rows) {
        ordered_json j;
        j["dataset"] = row.dataset;
        j["teacher"] = row.teacher ? ordered_json(*row.teacher) : ordered_json(nullptr);
        j["teacher_finetuned"] =
            row.teacher_finetuned ? ordered_json(*row.teacher_finetuned) : ordered_json(nullptr);
        j["independent_noisy_student"] = row.independent_noisy_student
                                             ? ordered_json(*row.independent_noisy_student)
                                             : ordered_json(nullptr);
        arr.push_back(std::move(j));
    }
    return arr.dump(2);
}

}  // namespace sentipipe
