#include "sentipipe/dataio.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

namespace sentipipe {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, size_t line, const std::string& what) {
    throw std::runtime_error(path + ": " + what + " at line " + std::to_string(line));
}

std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return in;
}

// Splits one CSV row of fully or partially quoted fields; "" inside quotes is
// an escaped quote.
std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

}  // namespace

std::vector<LabeledExample> load_jsonl_labeled(const std::string& path) {
    auto in = open_or_throw(path);
    std::vector<LabeledExample> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) fail(path, lineno, "malformed JSON");
        if (!j.contains("text") || !j["text"].is_string()) fail(path, lineno, "missing field 'text'");
        if (!j.contains("label") || !j["label"].is_string())
            fail(path, lineno, "missing field 'label'");
        const std::string label_str = j["label"].get<std::string>();
        auto label = label_from_string(label_str);
        if (!label) fail(path, lineno, "unknown label '" + label_str + "'");
        out.push_back({j["text"].get<std::string>(), *label});
    }
    return out;
}

void for_each_jsonl_text(const std::string& path,
                         const std::function<void(size_t, std::string)>& fn) {
    auto in = open_or_throw(path);
    std::string line;
    size_t lineno = 0, index = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) fail(path, lineno, "malformed JSON");
        if (!j.contains("text") || !j["text"].is_string()) fail(path, lineno, "missing field 'text'");
        fn(index++, j["text"].get<std::string>());
    }
}

std::vector<std::string> load_jsonl_unlabeled(const std::string& path) {
    std::vector<std::string> out;
    for_each_jsonl_text(path, [&](size_t, std::string text) { out.push_back(std::move(text)); });
    return out;
}

std::vector<LabeledExample> load_sentiment140_csv(const std::string& path) {
    auto in = open_or_throw(path);
    std::vector<LabeledExample> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_csv_row(line);
        if (fields.size() != 6)
            fail(path, lineno, "expected 6 fields, found " + std::to_string(fields.size()));
        const std::string& pol = fields[0];
        SentimentLabel label;
        if (pol == "0")
            label = SentimentLabel::Negative;
        else if (pol == "2")
            label = SentimentLabel::Neutral;
        else if (pol == "4")
            label = SentimentLabel::Positive;
        else
            fail(path, lineno, "polarity '" + pol + "' outside {0,2,4}");
        out.push_back({fields[5], label});
    }
    return out;
}

DatasetFormat dataset_format_from_string(const std::string& s) {
    if (s == "jsonl") return DatasetFormat::Jsonl;
    if (s == "sent140") return DatasetFormat::Sentiment140;
    throw std::runtime_error("unknown dataset format '" + s + "' (expected jsonl or sent140)");
}

std::vector<LabeledExample> load_labeled(const std::string& path, DatasetFormat format) {
    return format == DatasetFormat::Jsonl ? load_jsonl_labeled(path) : load_sentiment140_csv(path);
}

void write_jsonl_labeled(const std::string& path, const std::vector<LabeledExample>& examples) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (const auto& e : examples) {
        json j;
        j["text"] = e.text;
        j["label"] = to_string(e.label);
        out << j.dump() << '\n';
    }
}

void write_jsonl_unlabeled(const std::string& path, const std::vector<std::string>& texts) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (const auto& t : texts) {
        json j;
        j["text"] = t;
        out << j.dump() << '\n';
    }
}

}  // namespace sentipipe
