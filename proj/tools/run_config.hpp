#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "nrbf/dataset.hpp"
#include "nrbf/pipeline.hpp"

namespace nrbf::cli {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SynthSpec {
    std::size_t num_classes = 4;
    std::size_t per_class = 50;
    std::size_t test_per_class = 100;
    std::size_t dim = 20;
    double center_spread = 5.0;
    double noise_sigma = 1.0;
    std::uint64_t seed = 0;
};

struct DatasetSection {
    enum class Kind { Synth, Idx, Csv };
    Kind kind = Kind::Synth;
    SynthSpec synth;
    std::filesystem::path train_path, test_path;               // csv
    std::filesystem::path train_images, train_labels;          // idx
    std::filesystem::path test_images, test_labels;
};

/// Parsed and validated run configuration. Unknown keys anywhere in the
/// document are rejected before any work starts.
struct RunConfig {
    DatasetSection dataset;
    TrainConfig training;  // model + training sections merged
    SubsampleSchedule sweep_schedule;
    std::vector<Method> sweep_methods;
    std::vector<std::uint64_t> sweep_seeds;
    double validation_fraction = 0.1;
    std::filesystem::path output_dir = "out";
    bool has_sweep = false;
};

RunConfig load_config(const std::filesystem::path& path);

/// Loads (or generates, for synthetic specs) the train and test datasets.
std::pair<Dataset, Dataset> resolve_dataset(const DatasetSection& ds);

}  // namespace nrbf::cli
