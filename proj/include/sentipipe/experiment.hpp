#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sentipipe/dataio.hpp"
#include "sentipipe/selftrain.hpp"

namespace sentipipe {

struct EvalDatasetRef {
    std::string name;
    std::string path;
    DatasetFormat format = DatasetFormat::Jsonl;
};

struct ExperimentConfig {
    std::string teacher_train_path;
    std::string unlabeled_path;
    std::vector<EvalDatasetRef> eval_datasets;
    double val_fraction = 0.1;

    // vocab_size is resolved from the data at run time
    ModelConfig model;
    int vocab_min_freq = 2;
    int vocab_max_size = 50000;

    TrainConfig train;
    bool train_finetuned = true;
    bool train_noisy = true;
    std::vector<uint64_t> seeds;
    std::optional<double> confidence_threshold;
    int pseudolabel_batch = 64;
    std::string out_dir;

    void validate() const;
};

ExperimentConfig load_experiment_config(const std::string& path);

// Full pipeline per seed: vocabulary over teacher-train plus the unlabeled
// corpus, chain-thaw teacher training, pseudolabeling, the enabled student
// modes, and evaluation everywhere. Artifacts land under
// out_dir/seed_<seed>/; stages whose artifact already exists are skipped, so
// an interrupted run resumes. Writes out_dir/report.{json,md} and returns the
// report. One root seed fixes every stage, so identical configs produce
// byte-identical reports.
nlohmann::ordered_json run_experiment(const ExperimentConfig& config);

}  // namespace sentipipe
