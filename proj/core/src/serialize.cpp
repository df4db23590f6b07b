#include "nrbf/serialize.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

namespace nrbf {

namespace {

using nlohmann::json;

constexpr int kFormatVersion = 1;

json matrix_to_json(const Matrix& m) {
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

Matrix matrix_from_json(const json& j) {
    return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                  j.at("data").get<std::vector<double>>());
}

json kernel_to_json(const KernelSpec& k) {
    return json{{"kind", k.kind == KernelKind::Gaussian ? "gaussian" : "inverse"},
                {"alpha", k.alpha},
                {"delta", k.delta}};
}

KernelSpec kernel_from_json(const json& j) {
    KernelSpec k;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "gaussian") {
        k.kind = KernelKind::Gaussian;
    } else if (kind == "inverse") {
        k.kind = KernelKind::Inverse;
    } else {
        throw std::runtime_error("model blob: unknown kernel kind '" + kind + "'");
    }
    k.alpha = j.at("alpha").get<double>();
    k.delta = j.at("delta").get<double>();
    return k;
}

}  // namespace

void save_model(const Model& model, const std::filesystem::path& path) {
    json j;
    j["version"] = kFormatVersion;
    j["layer_dims"] = model.extractor.layer_dims();
    json layers = json::array();
    for (const auto& layer : model.extractor.layers()) {
        layers.push_back(
            json{{"weights", matrix_to_json(layer.weights)}, {"biases", layer.biases}});
    }
    j["layers"] = layers;
    const BatchNorm& bn = model.extractor.batchnorm();
    j["batchnorm"] = json{{"gamma", bn.gamma},
                          {"beta", bn.beta},
                          {"running_mean", bn.running_mean},
                          {"running_var", bn.running_var},
                          {"momentum", bn.momentum},
                          {"epsilon", bn.epsilon}};
    if (model.softmax) {
        j["softmax_head"] = json{{"weights", matrix_to_json(model.softmax->weights)},
                                 {"biases", model.softmax->biases}};
    }
    if (model.rbf) {
        j["rbf_head"] = json{{"centers", matrix_to_json(model.rbf->centers)},
                             {"center_labels", model.rbf->center_labels},
                             {"kernel", kernel_to_json(model.rbf->kernel)},
                             {"num_classes", model.rbf->num_classes}};
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_model: cannot write " + path.string());
    out << j.dump(2) << "\n";
}

Model load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_model: cannot open " + path.string());
    json j;
    in >> j;
    if (j.at("version").get<int>() != kFormatVersion) {
        throw std::runtime_error("load_model: unsupported blob version");
    }
    Model model;
    // Reconstruct with a throwaway init, then overwrite every tensor.
    const auto dims = j.at("layer_dims").get<std::vector<std::size_t>>();
    Rng dummy(0);
    model.extractor = FeatureExtractor::init(dims, dummy);
    const json& layers = j.at("layers");
    if (layers.size() != model.extractor.layers().size()) {
        throw std::runtime_error("load_model: layer count mismatch");
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
        model.extractor.layers()[l].weights = matrix_from_json(layers[l].at("weights"));
        model.extractor.layers()[l].biases =
            layers[l].at("biases").get<std::vector<double>>();
    }
    BatchNorm& bn = model.extractor.batchnorm();
    const json& jb = j.at("batchnorm");
    bn.gamma = jb.at("gamma").get<std::vector<double>>();
    bn.beta = jb.at("beta").get<std::vector<double>>();
    bn.running_mean = jb.at("running_mean").get<std::vector<double>>();
    bn.running_var = jb.at("running_var").get<std::vector<double>>();
    bn.momentum = jb.at("momentum").get<double>();
    bn.epsilon = jb.at("epsilon").get<double>();
    model.extractor.set_mode(Mode::Inference);

    if (j.contains("softmax_head")) {
        SoftMaxHead h;
        h.weights = matrix_from_json(j["softmax_head"].at("weights"));
        h.biases = j["softmax_head"].at("biases").get<std::vector<double>>();
        model.softmax = std::move(h);
    }
    if (j.contains("rbf_head")) {
        RBFHead h;
        h.centers = matrix_from_json(j["rbf_head"].at("centers"));
        h.center_labels = j["rbf_head"].at("center_labels").get<std::vector<int>>();
        h.kernel = kernel_from_json(j["rbf_head"].at("kernel"));
        h.num_classes = j["rbf_head"].at("num_classes").get<std::size_t>();
        h.validate();
        model.rbf = std::move(h);
    }
    return model;
}

std::string run_record_to_json(const RunRecord& r) {
    json j;
    j["method"] = r.method;
    j["fraction"] = r.fraction;
    j["seed"] = r.seed;
    j["test_accuracy"] = r.test_accuracy;
    j["silhouette"] = r.silhouette ? json(*r.silhouette) : json(nullptr);
    j["distortion"] = r.distortion ? json(*r.distortion) : json(nullptr);
    j["epochs_run"] = r.epochs_run;
    j["stopped_reason"] = r.stopped_reason;
    j["timestamps"] = json{{"started", r.started_at}, {"finished", r.finished_at}};
    return j.dump();
}

RunRecord run_record_from_json(const std::string& line) {
    const json j = json::parse(line);
    RunRecord r;
    r.method = j.at("method").get<std::string>();
    r.fraction = j.at("fraction").get<double>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.test_accuracy = j.at("test_accuracy").get<double>();
    if (!j.at("silhouette").is_null()) r.silhouette = j["silhouette"].get<double>();
    if (!j.at("distortion").is_null()) r.distortion = j["distortion"].get<double>();
    r.epochs_run = j.at("epochs_run").get<std::size_t>();
    r.stopped_reason = j.at("stopped_reason").get<std::string>();
    r.started_at = j.at("timestamps").at("started").get<std::string>();
    r.finished_at = j.at("timestamps").at("finished").get<std::string>();
    return r;
}

void save_centers_csv(const RBFHead& head, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_centers_csv: cannot write " + path.string());
    out << "label";
    for (std::size_t j = 0; j < head.embedding_dim(); ++j) out << ",c" << j;
    out << "\n";
    char buf[32];
    for (std::size_t i = 0; i < head.num_centers(); ++i) {
        out << head.center_labels[i];
        for (double v : head.centers.row(i)) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            out << "," << buf;
        }
        out << "\n";
    }
}

void save_embeddings_csv(const Matrix& embeddings, const std::vector<int>& labels,
                         const std::filesystem::path& path) {
    if (labels.size() != embeddings.rows()) {
        throw std::invalid_argument("save_embeddings_csv: label count mismatch");
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_embeddings_csv: cannot write " + path.string());
    out << "label";
    for (std::size_t j = 0; j < embeddings.cols(); ++j) out << ",e" << j;
    out << "\n";
    char buf[32];
    for (std::size_t i = 0; i < embeddings.rows(); ++i) {
        out << labels[i];
        for (double v : embeddings.row(i)) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            out << "," << buf;
        }
        out << "\n";
    }
}

void save_matrix_csv(const Matrix& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_matrix_csv: cannot write " + path.string());
    char buf[32];
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
            out << (j ? "," : "") << buf;
        }
        out << "\n";
    }
}

}  // namespace nrbf
