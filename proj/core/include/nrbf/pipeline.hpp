#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nrbf/clustering.hpp"
#include "nrbf/dataset.hpp"
#include "nrbf/extractor.hpp"
#include "nrbf/heads.hpp"

namespace nrbf {

/// Training variants: P1 = SoftMax pre-training, Init/Init2 = K-Means /
/// K-Medoids center initialization, P2 = kernel-head fine-tuning.
enum class Method {
    SoftMaxP1,
    KernelP2,
    KernelP1P2,
    KernelP1Init,
    KernelP1InitP2,
    KernelP1Init2P2,
};

std::string method_name(Method m);
std::optional<Method> method_from_name(const std::string& name);

struct TrainConfig {
    Method method = Method::KernelP1InitP2;
    KernelSpec kernel;
    std::size_t k_per_class = 1;
    std::size_t batch_size = 32;
    std::size_t max_epochs = 500;
    std::size_t patience = 20;
    double learning_rate = 1e-5;
    std::uint64_t seed = 0;
    /// Dims after the input layer; the last entry is the embedding size.
    std::vector<std::size_t> layer_dims = {512, 64};
    /// Ablation toggle: keep extractor parameters fixed during phase 2.
    bool freeze_extractor_phase2 = false;

    void validate() const;
};

struct EpochRecord {
    double train_loss = 0.0;
    double val_accuracy = 0.0;
    double val_loss = 0.0;
};

enum class StopReason { MaxEpochs, Patience };

struct TrainTrace {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;  // index into epochs
    StopReason stopped_reason = StopReason::MaxEpochs;
};

/// Extractor plus whichever output head the current phase trains.
struct Model {
    FeatureExtractor extractor;
    std::optional<SoftMaxHead> softmax;
    std::optional<RBFHead> rbf;
};

enum class Phase { SoftMax, Kernel };

/// Minibatch training with early stopping on validation accuracy. Restores the
/// best-validation snapshot before returning.
TrainTrace train_phase(Model& model, Phase phase, const Dataset& train,
                       const Dataset& validation, const TrainConfig& cfg,
                       bool freeze_extractor = false);

/// One sweep record; serialized as a JSON line.
struct RunRecord {
    std::string method;
    double fraction = 1.0;
    std::uint64_t seed = 0;
    double test_accuracy = 0.0;
    std::optional<double> silhouette;
    std::optional<double> distortion;
    std::size_t epochs_run = 0;
    std::string stopped_reason;
    std::string started_at;
    std::string finished_at;
};

struct RunOutput {
    RunRecord record;
    Model model;
    Matrix test_embeddings;
    std::vector<int> test_predictions;
    std::vector<TrainTrace> traces;
};

RunOutput run_method(const TrainConfig& cfg, const Dataset& train, const Dataset& validation,
                     const Dataset& test);

struct SweepSpec {
    SubsampleSchedule schedule;
    std::vector<Method> methods;
    std::vector<std::uint64_t> seeds;
    double validation_fraction = 0.1;
    std::size_t jobs = 1;
};

/// Runs fraction x method x seed over nested training subsets against a fixed
/// test set. `emit` is called once per finished run (serialized; with jobs > 1
/// completion order may vary).
void sweep(const TrainConfig& base_cfg, const Dataset& train_pool, const Dataset& test,
           const SweepSpec& spec, const std::function<void(const RunRecord&)>& emit);

}  // namespace nrbf
