#include <fstream>
#include <json.hpp>

#include "sentipipe/train.hpp"

namespace sentipipe {

void write_trace_jsonl(const std::string& path, const TrainTrace& trace) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (const auto& rec : trace) {
        nlohmann::ordered_json j;
        j["phase"] = rec.phase;
        j["epoch"] = rec.epoch;
        j["train_loss"] = rec.train_loss;
        j["val_accuracy"] = rec.val_accuracy;
        j["reloaded"] = rec.reloaded;
        out << j.dump() << '\n';
    }
}

}  // namespace sentipipe
