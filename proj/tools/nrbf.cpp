#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "nrbf/metrics.hpp"
#include "nrbf/serialize.hpp"
#include "run_config.hpp"

namespace {

using namespace nrbf;
using nrbf::cli::ConfigError;
using nrbf::cli::RunConfig;
using nlohmann::json;

namespace fs = std::filesystem;

struct CommonOpts {
    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::size_t jobs = 1;
};

RunConfig load_with_overrides(const CommonOpts& opts) {
    RunConfig cfg = nrbf::cli::load_config(opts.config_path);
    if (opts.out_dir) cfg.output_dir = *opts.out_dir;
    if (opts.seed) cfg.training.seed = *opts.seed;
    return cfg;
}

fs::path ensure_out_dir(const RunConfig& cfg) {
    fs::create_directories(cfg.output_dir);
    return cfg.output_dir;
}

int cmd_synth(const CommonOpts& opts) {
    RunConfig cfg = load_with_overrides(opts);
    if (cfg.dataset.kind != nrbf::cli::DatasetSection::Kind::Synth) {
        throw ConfigError("synth: dataset kind must be 'synth'");
    }
    const fs::path out = ensure_out_dir(cfg);
    auto [train, test] = nrbf::cli::resolve_dataset(cfg.dataset);
    save_csv(train, out / "train.csv");
    save_csv(test, out / "test.csv");

    json manifest;
    manifest["seed"] = cfg.dataset.synth.seed;
    manifest["num_classes"] = cfg.dataset.synth.num_classes;
    manifest["per_class"] = cfg.dataset.synth.per_class;
    manifest["test_per_class"] = cfg.dataset.synth.test_per_class;
    manifest["dim"] = cfg.dataset.synth.dim;
    manifest["center_spread"] = cfg.dataset.synth.center_spread;
    manifest["noise_sigma"] = cfg.dataset.synth.noise_sigma;
    std::ofstream m(out / "manifest.json");
    m << manifest.dump(2) << "\n";
    std::cout << "wrote " << (out / "train.csv").string() << " ("
              << train.size() << " rows) and " << (out / "test.csv").string() << " ("
              << test.size() << " rows)\n";
    return 0;
}

int cmd_train(const CommonOpts& opts) {
    RunConfig cfg = load_with_overrides(opts);
    const fs::path out = ensure_out_dir(cfg);
    auto [pool, test] = nrbf::cli::resolve_dataset(cfg.dataset);

    Rng split_rng = Rng(cfg.training.seed).split("valsplit");
    const SplitResult split = stratified_split(pool, cfg.validation_fraction, split_rng);
    RunOutput run = run_method(cfg.training, split.train, split.validation, test);

    std::ofstream rec(out / "run.json");
    rec << run_record_to_json(run.record) << "\n";
    save_model(run.model, out / "model.json");
    save_embeddings_csv(run.test_embeddings, test.labels, out / "embeddings.csv");
    if (run.model.rbf) {
        save_centers_csv(*run.model.rbf, out / "centers.csv");
        save_matrix_csv(center_distance_matrix(*run.model.rbf),
                        out / "center_distances.csv");
    }
    std::cout << run_record_to_json(run.record) << "\n";
    return 0;
}

int cmd_sweep(const CommonOpts& opts) {
    RunConfig cfg = load_with_overrides(opts);
    if (!cfg.has_sweep) throw ConfigError("sweep: config has no 'sweep' section");
    const fs::path out = ensure_out_dir(cfg);
    auto [pool, test] = nrbf::cli::resolve_dataset(cfg.dataset);

    SweepSpec spec;
    spec.schedule = cfg.sweep_schedule;
    spec.methods = cfg.sweep_methods;
    spec.seeds = cfg.sweep_seeds;
    spec.validation_fraction = cfg.validation_fraction;
    spec.jobs = opts.jobs;

    const fs::path results_path = out / "results.jsonl";
    std::ofstream results(results_path, std::ios::trunc);
    if (!results) throw DataError("sweep: cannot write " + results_path.string());

    // Stream each record as it completes so partial results survive interrupts.
    sweep(cfg.training, pool, test, spec, [&](const RunRecord& r) {
        results << run_record_to_json(r) << "\n";
        results.flush();
        std::cout << r.method << " fraction=" << r.fraction << " seed=" << r.seed
                  << " accuracy=" << r.test_accuracy << "\n";
    });

    // Summary: rows = methods, columns = fractions, cells = mean accuracy.
    std::map<std::string, std::map<double, std::vector<double>>> acc;
    {
        std::ifstream in(results_path);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const RunRecord r = run_record_from_json(line);
            acc[r.method][r.fraction].push_back(r.test_accuracy);
        }
    }
    std::ofstream summary(out / "summary.csv");
    summary << "method";
    for (double f : cfg.sweep_schedule.fractions) summary << "," << f;
    summary << "\n";
    for (Method m : cfg.sweep_methods) {
        const std::string name = method_name(m);
        summary << name;
        const auto mit = acc.find(name);
        for (double f : cfg.sweep_schedule.fractions) {
            summary << ",";
            if (mit != acc.end() && mit->second.contains(f) && !mit->second[f].empty()) {
                double mean = 0.0;
                for (double a : mit->second[f]) mean += a;
                mean /= static_cast<double>(mit->second[f].size());
                summary << mean;
            } else {
                summary << "NA";
            }
        }
        summary << "\n";
    }
    std::cout << "wrote " << results_path.string() << " and "
              << (out / "summary.csv").string() << "\n";
    return 0;
}

int cmd_report(const std::string& results_path, const std::string& out_dir) {
    std::ifstream in(results_path);
    if (!in) throw DataError("report: cannot open " + results_path);

    std::map<std::string, std::map<double, std::vector<RunRecord>>> by_cell;
    std::string line;
    std::size_t line_no = 0;
    std::size_t bad = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const RunRecord r = run_record_from_json(line);
            by_cell[r.method][r.fraction].push_back(r);
        } catch (const std::exception& e) {
            std::cerr << "report: malformed line " << line_no << ": " << e.what() << "\n";
            ++bad;
        }
    }
    if (bad > 0) throw DataError("report: " + std::to_string(bad) + " malformed lines");
    if (by_cell.empty()) {
        std::cerr << "report: no results in " << results_path << "\n";
        return 0;
    }

    std::set<double> fractions;
    for (const auto& [method, cells] : by_cell)
        for (const auto& [f, rs] : cells) fractions.insert(f);

    const auto mean_of = [](const std::vector<RunRecord>& rs,
                            auto&& proj) -> std::optional<double> {
        double sum = 0.0;
        std::size_t n = 0;
        for (const RunRecord& r : rs) {
            const std::optional<double> v = proj(r);
            if (v) {
                sum += *v;
                ++n;
            }
        }
        if (n == 0) return std::nullopt;
        return sum / static_cast<double>(n);
    };
    const auto acc_proj = [](const RunRecord& r) { return std::optional<double>(r.test_accuracy); };
    const auto sil_proj = [](const RunRecord& r) { return r.silhouette; };

    // Text table: mean test accuracy per (method, fraction).
    std::printf("%-20s", "method");
    for (double f : fractions) std::printf("  %8.3g", f);
    std::printf("\n");
    for (const auto& [method, cells] : by_cell) {
        std::printf("%-20s", method.c_str());
        for (double f : fractions) {
            const auto it = cells.find(f);
            const auto v = it == cells.end() ? std::nullopt : mean_of(it->second, acc_proj);
            if (v) {
                std::printf("  %8.4f", *v);
            } else {
                std::printf("  %8s", "NA");
            }
        }
        std::printf("\n");
    }

    fs::create_directories(out_dir);
    const auto write_curve = [&](const fs::path& path, auto&& proj, const char* col) {
        std::ofstream out(path);
        out << "method,fraction," << col << "\n";
        for (const auto& [method, cells] : by_cell) {
            for (const auto& [f, rs] : cells) {
                out << method << "," << f << ",";
                const auto v = mean_of(rs, proj);
                if (v) {
                    char buf[32];
                    std::snprintf(buf, sizeof(buf), "%.17g", *v);
                    out << buf;
                } else {
                    out << "NA";
                }
                out << "\n";
            }
        }
    };
    write_curve(fs::path(out_dir) / "accuracy_vs_fraction.csv", acc_proj, "mean_accuracy");
    write_curve(fs::path(out_dir) / "silhouette_vs_fraction.csv", sil_proj,
                "mean_silhouette");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"normalized RBF kernel output layers: training and benchmarks"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string report_results;
    std::string report_out = "report";

    auto add_common = [&](CLI::App* sub, bool with_jobs) {
        sub->add_option("--config", opts.config_path, "JSON run config")->required();
        sub->add_option("--out", opts.out_dir, "output directory (overrides config)");
        sub->add_option("--seed", opts.seed, "seed override");
        if (with_jobs) sub->add_option("--jobs", opts.jobs, "parallel runs");
    };

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    add_common(synth, false);
    CLI::App* train = app.add_subcommand("train", "train a single model");
    add_common(train, false);
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "run the sample-efficiency sweep");
    add_common(sweep_cmd, true);
    CLI::App* report = app.add_subcommand("report", "summarize sweep results");
    report->add_option("--results", report_results, "results.jsonl path")->required();
    report->add_option("--out", report_out, "directory for curve CSVs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (synth->parsed()) return cmd_synth(opts);
        if (train->parsed()) return cmd_train(opts);
        if (sweep_cmd->parsed()) return cmd_sweep(opts);
        if (report->parsed()) return cmd_report(report_results, report_out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 1;
}
