#include "run_config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

namespace nrbf::cli {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& context) {
    if (!j.is_object()) throw ConfigError("config: '" + context + "' must be an object");
    for (const auto& [key, value] : j.items()) {
        if (!allowed.contains(key)) {
            throw ConfigError("config: unknown key '" + key + "' in " + context);
        }
    }
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config: bad value for '" + key + "'");
    }
}

template <typename T>
T get_required(const json& j, const std::string& key, const std::string& context) {
    if (!j.contains(key)) {
        throw ConfigError("config: missing key '" + key + "' in " + context);
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config: bad value for '" + key + "' in " + context);
    }
}

DatasetSection parse_dataset(const json& j) {
    DatasetSection ds;
    const std::string kind = get_required<std::string>(j, "kind", "dataset");
    if (kind == "synth") {
        ds.kind = DatasetSection::Kind::Synth;
        check_keys(j, {"kind", "num_classes", "per_class", "test_per_class", "dim",
                       "center_spread", "noise_sigma", "seed"},
                   "dataset (synth)");
        ds.synth.num_classes = get_or<std::size_t>(j, "num_classes", ds.synth.num_classes);
        ds.synth.per_class = get_or<std::size_t>(j, "per_class", ds.synth.per_class);
        ds.synth.test_per_class =
            get_or<std::size_t>(j, "test_per_class", ds.synth.test_per_class);
        ds.synth.dim = get_or<std::size_t>(j, "dim", ds.synth.dim);
        ds.synth.center_spread = get_or<double>(j, "center_spread", ds.synth.center_spread);
        ds.synth.noise_sigma = get_or<double>(j, "noise_sigma", ds.synth.noise_sigma);
        ds.synth.seed = get_or<std::uint64_t>(j, "seed", ds.synth.seed);
        if (ds.synth.num_classes < 1 || ds.synth.per_class < 1 || ds.synth.dim < 1) {
            throw ConfigError("config: synth counts must be >= 1");
        }
        if (ds.synth.noise_sigma <= 0.0) {
            throw ConfigError("config: synth noise_sigma must be > 0");
        }
    } else if (kind == "csv") {
        ds.kind = DatasetSection::Kind::Csv;
        check_keys(j, {"kind", "train_path", "test_path"}, "dataset (csv)");
        ds.train_path = get_required<std::string>(j, "train_path", "dataset");
        ds.test_path = get_required<std::string>(j, "test_path", "dataset");
    } else if (kind == "idx") {
        ds.kind = DatasetSection::Kind::Idx;
        check_keys(j, {"kind", "train_images", "train_labels", "test_images",
                       "test_labels"},
                   "dataset (idx)");
        ds.train_images = get_required<std::string>(j, "train_images", "dataset");
        ds.train_labels = get_required<std::string>(j, "train_labels", "dataset");
        ds.test_images = get_required<std::string>(j, "test_images", "dataset");
        ds.test_labels = get_required<std::string>(j, "test_labels", "dataset");
    } else {
        throw ConfigError("config: dataset kind must be synth, idx or csv");
    }
    return ds;
}

}  // namespace

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    check_keys(j, {"dataset", "model", "training", "sweep", "output_dir"}, "top level");

    RunConfig cfg;
    if (!j.contains("dataset")) throw ConfigError("config: missing 'dataset' section");
    cfg.dataset = parse_dataset(j["dataset"]);

    const json model = j.value("model", json::object());
    check_keys(model, {"layer_dims", "kernel", "alpha", "delta", "k_per_class"}, "model");
    cfg.training.layer_dims =
        get_or<std::vector<std::size_t>>(model, "layer_dims", {512, 64});
    const std::string kernel = get_or<std::string>(model, "kernel", "gaussian");
    if (kernel == "gaussian") {
        cfg.training.kernel.kind = KernelKind::Gaussian;
    } else if (kernel == "inverse") {
        cfg.training.kernel.kind = KernelKind::Inverse;
    } else {
        throw ConfigError("config: kernel must be 'gaussian' or 'inverse'");
    }
    cfg.training.kernel.alpha = get_or<double>(model, "alpha", 1.0);
    cfg.training.kernel.delta = get_or<double>(model, "delta", 1e-3);
    cfg.training.k_per_class = get_or<std::size_t>(model, "k_per_class", 1);

    const json training = j.value("training", json::object());
    check_keys(training,
               {"method", "learning_rate", "batch_size", "max_epochs", "patience",
                "seed", "validation_fraction", "freeze_extractor_phase2"},
               "training");
    const std::string method = get_or<std::string>(training, "method", "KernelP1InitP2");
    const auto parsed = method_from_name(method);
    if (!parsed) throw ConfigError("config: unknown method '" + method + "'");
    cfg.training.method = *parsed;
    cfg.training.learning_rate = get_or<double>(training, "learning_rate", 1e-5);
    cfg.training.batch_size = get_or<std::size_t>(training, "batch_size", 32);
    cfg.training.max_epochs = get_or<std::size_t>(training, "max_epochs", 500);
    cfg.training.patience = get_or<std::size_t>(training, "patience", 20);
    cfg.training.seed = get_or<std::uint64_t>(training, "seed", 0);
    cfg.training.freeze_extractor_phase2 =
        get_or<bool>(training, "freeze_extractor_phase2", false);
    cfg.validation_fraction = get_or<double>(training, "validation_fraction", 0.1);
    if (cfg.validation_fraction <= 0.0 || cfg.validation_fraction >= 1.0) {
        throw ConfigError("config: validation_fraction must be in (0, 1)");
    }
    try {
        cfg.training.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }

    if (j.contains("sweep")) {
        cfg.has_sweep = true;
        const json& sweep = j["sweep"];
        check_keys(sweep, {"fractions", "methods", "seeds"}, "sweep");
        cfg.sweep_schedule.fractions =
            get_required<std::vector<double>>(sweep, "fractions", "sweep");
        try {
            cfg.sweep_schedule.validate();
        } catch (const DataError& e) {
            throw ConfigError(std::string("config: ") + e.what());
        }
        for (const std::string& name :
             get_required<std::vector<std::string>>(sweep, "methods", "sweep")) {
            const auto m = method_from_name(name);
            if (!m) throw ConfigError("config: unknown method '" + name + "' in sweep");
            cfg.sweep_methods.push_back(*m);
        }
        cfg.sweep_seeds = get_required<std::vector<std::uint64_t>>(sweep, "seeds", "sweep");
        if (cfg.sweep_methods.empty() || cfg.sweep_seeds.empty()) {
            throw ConfigError("config: sweep needs at least one method and one seed");
        }
    }

    cfg.output_dir = get_or<std::string>(j, "output_dir", "out");
    return cfg;
}

std::pair<Dataset, Dataset> resolve_dataset(const DatasetSection& ds) {
    switch (ds.kind) {
        case DatasetSection::Kind::Synth: {
            Rng rng(ds.synth.seed);
            Rng train_rng = rng.split("train");
            Rng test_rng = rng.split("test");
            // Same class centers for both splits: the center draw precedes the
            // noise draws, so regenerate with a shared center stream.
            Rng center_rng = rng.split("centers");
            Matrix centers(ds.synth.num_classes, ds.synth.dim);
            for (double& v : centers.data()) {
                v = center_rng.uniform(-ds.synth.center_spread, ds.synth.center_spread);
            }
            const auto sample = [&](std::size_t per_class, Rng& r) {
                Dataset d;
                d.num_classes = ds.synth.num_classes;
                d.features = Matrix(ds.synth.num_classes * per_class, ds.synth.dim);
                d.labels.resize(d.features.rows());
                std::size_t row = 0;
                for (std::size_t c = 0; c < ds.synth.num_classes; ++c) {
                    for (std::size_t s = 0; s < per_class; ++s, ++row) {
                        for (std::size_t t = 0; t < ds.synth.dim; ++t) {
                            d.features(row, t) =
                                centers(c, t) + r.normal(0.0, ds.synth.noise_sigma);
                        }
                        d.labels[row] = static_cast<int>(c);
                    }
                }
                return d;
            };
            return {sample(ds.synth.per_class, train_rng),
                    sample(ds.synth.test_per_class, test_rng)};
        }
        case DatasetSection::Kind::Csv:
            return {load_csv(ds.train_path), load_csv(ds.test_path)};
        case DatasetSection::Kind::Idx:
            return {load_idx(ds.train_images, ds.train_labels),
                    load_idx(ds.test_images, ds.test_labels)};
    }
    throw ConfigError("config: unreachable dataset kind");
}

}  // namespace nrbf::cli
