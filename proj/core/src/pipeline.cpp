#include "nrbf/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <limits>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "nrbf/metrics.hpp"
#include "nrbf/optimizer.hpp"

namespace nrbf {

namespace {

std::string iso_timestamp_utc() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

Matrix rows_subset(const Matrix& m, const std::vector<std::size_t>& idx) {
    Matrix out(idx.size(), m.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto src = m.row(idx[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

struct EvalResult {
    double accuracy = 0.0;
    double loss = 0.0;
};

Matrix posterior_of(const Model& model, Phase phase, const Matrix& emb) {
    if (phase == Phase::SoftMax) return softmax_posterior(*model.softmax, emb);
    return rbf_posterior(*model.rbf, emb);
}

EvalResult evaluate(Model& model, Phase phase, const Dataset& data) {
    const Mode saved = model.extractor.mode();
    model.extractor.set_mode(Mode::Inference);
    const Matrix emb = model.extractor.forward(data.features).values;
    model.extractor.set_mode(saved);
    const Matrix post = posterior_of(model, phase, emb);
    EvalResult r;
    r.accuracy = accuracy(predict(post), data.labels);
    for (std::size_t i = 0; i < data.size(); ++i) {
        r.loss -= std::log(std::max(post(i, static_cast<std::size_t>(data.labels[i])),
                                    1e-300));
    }
    r.loss /= static_cast<double>(data.size());
    return r;
}

}  // namespace

std::string method_name(Method m) {
    switch (m) {
        case Method::SoftMaxP1: return "SoftMaxP1";
        case Method::KernelP2: return "KernelP2";
        case Method::KernelP1P2: return "KernelP1P2";
        case Method::KernelP1Init: return "KernelP1Init";
        case Method::KernelP1InitP2: return "KernelP1InitP2";
        case Method::KernelP1Init2P2: return "KernelP1Init2P2";
    }
    return "unknown";
}

std::optional<Method> method_from_name(const std::string& name) {
    for (Method m : {Method::SoftMaxP1, Method::KernelP2, Method::KernelP1P2,
                     Method::KernelP1Init, Method::KernelP1InitP2,
                     Method::KernelP1Init2P2}) {
        if (method_name(m) == name) return m;
    }
    return std::nullopt;
}

void TrainConfig::validate() const {
    if (method != Method::SoftMaxP1) kernel.validate();
    if (k_per_class < 1) throw std::invalid_argument("TrainConfig: k_per_class must be >= 1");
    if (batch_size < 2) throw std::invalid_argument("TrainConfig: batch_size must be >= 2");
    if (max_epochs < 1) throw std::invalid_argument("TrainConfig: max_epochs must be >= 1");
    if (learning_rate <= 0.0) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
    if (layer_dims.empty()) throw std::invalid_argument("TrainConfig: layer_dims empty");
}

TrainTrace train_phase(Model& model, Phase phase, const Dataset& train,
                       const Dataset& validation, const TrainConfig& cfg,
                       bool freeze_extractor) {
    if (train.size() == 0 || validation.size() == 0) {
        throw std::invalid_argument("train_phase: empty dataset");
    }
    if (phase == Phase::SoftMax && !model.softmax) {
        throw std::invalid_argument("train_phase: model has no softmax head");
    }
    if (phase == Phase::Kernel && !model.rbf) {
        throw std::invalid_argument("train_phase: model has no kernel head");
    }

    RMSProp opt(cfg.learning_rate);
    Rng shuffle_rng = Rng(cfg.seed).split("shuffle").split(
        phase == Phase::SoftMax ? "softmax" : "kernel");

    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    TrainTrace trace;
    Model best_snapshot = model;
    double best_acc = -1.0;
    double best_loss = std::numeric_limits<double>::infinity();
    std::size_t epochs_since_improve = 0;

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[shuffle_rng.uniform_index(i)]);
        }

        model.extractor.set_mode(Mode::Training);
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(start + cfg.batch_size, order.size());
            if (end - start < 2) {
                std::fprintf(stderr,
                             "train_phase: skipping batch of size 1 (batch norm)\n");
                continue;
            }
            std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(end));
            const Matrix x = rows_subset(train.features, idx);
            std::vector<int> y(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i) y[i] = train.labels[idx[i]];

            EmbeddingBatch emb = model.extractor.forward(x);

            std::vector<std::vector<double>*> params;
            std::vector<const std::vector<double>*> grads;
            ExtractorGrads ext_grads;
            double loss;
            Matrix grad_emb;
            std::vector<double> head_grad_biases;
            Matrix head_grad_tensor;
            if (phase == Phase::SoftMax) {
                SoftMaxGrads g = softmax_loss_and_grads(*model.softmax, emb.values, y);
                loss = g.loss;
                grad_emb = std::move(g.grad_embeddings);
                head_grad_tensor = std::move(g.grad_weights);
                head_grad_biases = std::move(g.grad_biases);
            } else {
                RBFGrads g = rbf_loss_and_grads(*model.rbf, emb.values, y);
                loss = g.loss;
                grad_emb = std::move(g.grad_embeddings);
                head_grad_tensor = std::move(g.grad_centers);
            }

            if (!freeze_extractor) {
                auto [eg, gin] = model.extractor.backward(emb, grad_emb);
                ext_grads = std::move(eg);
                params = model.extractor.parameters();
                for (const auto* g : flatten_grads(ext_grads)) grads.push_back(g);
            }
            if (phase == Phase::SoftMax) {
                params.push_back(&model.softmax->weights.data());
                params.push_back(&model.softmax->biases);
                grads.push_back(&head_grad_tensor.data());
                grads.push_back(&head_grad_biases);
            } else {
                params.push_back(&model.rbf->centers.data());
                grads.push_back(&head_grad_tensor.data());
            }
            opt.step(params, grads);
            epoch_loss += loss;
            ++batches;
        }
        if (batches > 0) epoch_loss /= static_cast<double>(batches);

        const EvalResult val = evaluate(model, phase, validation);
        trace.epochs.push_back({epoch_loss, val.accuracy, val.loss});

        const bool improved = val.accuracy > best_acc ||
                              (val.accuracy == best_acc && val.loss < best_loss);
        if (improved) {
            best_acc = val.accuracy;
            best_loss = val.loss;
            best_snapshot = model;
            trace.best_epoch = epoch;
            epochs_since_improve = 0;
        } else {
            ++epochs_since_improve;
        }
        if (epochs_since_improve >= cfg.patience) {
            trace.stopped_reason = StopReason::Patience;
            break;
        }
        trace.stopped_reason = StopReason::MaxEpochs;
    }

    model = std::move(best_snapshot);
    model.extractor.set_mode(Mode::Inference);
    return trace;
}

RunOutput run_method(const TrainConfig& cfg, const Dataset& train, const Dataset& validation,
                     const Dataset& test) {
    cfg.validate();
    train.validate();
    validation.validate();
    test.validate();

    RunOutput out;
    out.record.method = method_name(cfg.method);
    out.record.seed = cfg.seed;
    out.record.started_at = iso_timestamp_utc();

    std::vector<std::size_t> full_dims;
    full_dims.push_back(train.dim());
    full_dims.insert(full_dims.end(), cfg.layer_dims.begin(), cfg.layer_dims.end());

    Rng root(cfg.seed);
    Rng init_rng = root.split("init");
    Model model;
    model.extractor = FeatureExtractor::init(full_dims, init_rng);
    const std::size_t emb_dim = model.extractor.embedding_dim();

    const auto random_rbf_head = [&]() {
        Rng crng = root.split("centers");
        RBFHead head;
        head.kernel = cfg.kernel;
        head.num_classes = train.num_classes;
        head.centers = Matrix(train.num_classes * cfg.k_per_class, emb_dim);
        for (double& v : head.centers.data()) v = crng.normal();
        for (std::size_t c = 0; c < train.num_classes; ++c) {
            for (std::size_t j = 0; j < cfg.k_per_class; ++j) {
                head.center_labels.push_back(static_cast<int>(c));
            }
        }
        return head;
    };

    const bool has_p1 = cfg.method != Method::KernelP2;
    if (has_p1) {
        model.softmax = init_softmax_head(emb_dim, train.num_classes);
        out.traces.push_back(train_phase(model, Phase::SoftMax, train, validation, cfg));
    }

    Rng cluster_rng = root.split("cluster");
    switch (cfg.method) {
        case Method::SoftMaxP1:
            break;
        case Method::KernelP2:
        case Method::KernelP1P2:
            model.rbf = random_rbf_head();
            break;
        case Method::KernelP1Init:
        case Method::KernelP1InitP2:
            model.rbf = init_centers(model.extractor, train, cfg.k_per_class,
                                     InitMethod::KMeans, cfg.kernel, cluster_rng);
            break;
        case Method::KernelP1Init2P2:
            model.rbf = init_centers(model.extractor, train, cfg.k_per_class,
                                     InitMethod::KMedoids, cfg.kernel, cluster_rng);
            break;
    }

    const bool has_p2 = cfg.method == Method::KernelP2 || cfg.method == Method::KernelP1P2 ||
                        cfg.method == Method::KernelP1InitP2 ||
                        cfg.method == Method::KernelP1Init2P2;
    if (has_p2) {
        out.traces.push_back(train_phase(model, Phase::Kernel, train, validation, cfg,
                                         cfg.freeze_extractor_phase2));
    }

    // Evaluation on the untouched test split, inference mode.
    const Phase eval_phase = model.rbf ? Phase::Kernel : Phase::SoftMax;
    model.extractor.set_mode(Mode::Inference);
    out.test_embeddings = model.extractor.forward(test.features).values;
    const Matrix post = posterior_of(model, eval_phase, out.test_embeddings);
    out.test_predictions = predict(post);
    out.record.test_accuracy = accuracy(out.test_predictions, test.labels);
    try {
        out.record.silhouette = silhouette(out.test_embeddings, out.test_predictions);
    } catch (const std::invalid_argument&) {
        out.record.silhouette = std::nullopt;  // e.g. all predictions one class
    }
    if (model.rbf) {
        out.record.distortion = distortion(out.test_embeddings, test.labels, *model.rbf);
    }
    out.record.epochs_run = 0;
    for (const auto& t : out.traces) out.record.epochs_run += t.epochs.size();
    out.record.stopped_reason = out.traces.empty() ? "none"
                                : out.traces.back().stopped_reason == StopReason::Patience
                                    ? "patience"
                                    : "max_epochs";
    out.record.finished_at = iso_timestamp_utc();
    out.model = std::move(model);
    return out;
}

void sweep(const TrainConfig& base_cfg, const Dataset& train_pool, const Dataset& test,
           const SweepSpec& spec, const std::function<void(const RunRecord&)>& emit) {
    if (spec.methods.empty() || spec.seeds.empty()) {
        throw std::invalid_argument("sweep: need at least one method and one seed");
    }
    SubsampleSchedule schedule = spec.schedule;
    schedule.seed = base_cfg.seed;
    const auto subsets = nested_subsample(train_pool, schedule);

    struct Job {
        std::size_t fraction_idx;
        std::size_t method_idx;
        std::size_t seed_idx;
    };
    std::vector<Job> jobs;
    for (std::size_t fi = 0; fi < schedule.fractions.size(); ++fi)
        for (std::size_t mi = 0; mi < spec.methods.size(); ++mi)
            for (std::size_t si = 0; si < spec.seeds.size(); ++si)
                jobs.push_back({fi, mi, si});

    std::mutex emit_mutex;
    std::atomic<std::size_t> next{0};

    const auto worker = [&]() {
        for (;;) {
            const std::size_t j = next.fetch_add(1);
            if (j >= jobs.size()) return;
            const Job& job = jobs[j];

            TrainConfig cfg = base_cfg;
            cfg.method = spec.methods[job.method_idx];
            // Per-run seed derived from (base seed, fraction, method, seed entry).
            cfg.seed = Rng(base_cfg.seed)
                           .split("sweep")
                           .split(job.fraction_idx)
                           .split(job.method_idx)
                           .split(spec.seeds[job.seed_idx])
                           .seed();

            Rng split_rng = Rng(cfg.seed).split("valsplit");
            const SplitResult split =
                stratified_split(subsets[job.fraction_idx], spec.validation_fraction,
                                 split_rng);
            RunOutput out = run_method(cfg, split.train, split.validation, test);
            out.record.fraction = schedule.fractions[job.fraction_idx];
            out.record.seed = spec.seeds[job.seed_idx];

            std::lock_guard<std::mutex> lock(emit_mutex);
            emit(out.record);
        }
    };

    const std::size_t n_threads = std::max<std::size_t>(1, spec.jobs);
    if (n_threads == 1) {
        worker();
    } else {
        std::exception_ptr first_error;
        std::mutex error_mutex;
        const auto guarded = [&]() {
            try {
                worker();
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        };
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(guarded);
        for (auto& t : pool) t.join();
        if (first_error) std::rethrow_exception(first_error);
    }
}

}  // namespace nrbf
