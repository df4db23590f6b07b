#include "nrbf/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace nrbf {

namespace {

void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        const std::size_t j = rng.uniform_index(i);
        std::swap(idx[i - 1], idx[j]);
    }
}

std::uint32_t read_be_u32(std::istream& in, const std::string& what) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw DataError("IDX: truncated file while reading " + what);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

}  // namespace

void Dataset::validate() const {
    if (labels.size() != features.rows()) {
        throw DataError("Dataset: label count does not match feature rows");
    }
    if (num_classes == 0 || size() < num_classes) {
        throw DataError("Dataset: need at least one sample per class");
    }
    std::vector<bool> seen(num_classes, false);
    for (int l : labels) {
        if (l < 0 || static_cast<std::size_t>(l) >= num_classes) {
            throw DataError("Dataset: label " + std::to_string(l) + " out of range");
        }
        seen[static_cast<std::size_t>(l)] = true;
    }
    for (std::size_t c = 0; c < num_classes; ++c) {
        if (!seen[c]) throw DataError("Dataset: class " + std::to_string(c) + " is empty");
    }
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
    Dataset out;
    out.num_classes = num_classes;
    out.features = Matrix(indices.size(), features.cols());
    out.labels.reserve(indices.size());
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const auto src = features.row(indices[r]);
        std::copy(src.begin(), src.end(), out.features.row(r).begin());
        out.labels.push_back(labels[indices[r]]);
    }
    return out;
}

std::vector<std::vector<std::size_t>> Dataset::indices_by_class() const {
    std::vector<std::vector<std::size_t>> by_class(num_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        by_class[static_cast<std::size_t>(labels[i])].push_back(i);
    }
    return by_class;
}

void SubsampleSchedule::validate() const {
    if (fractions.empty()) throw DataError("SubsampleSchedule: no fractions");
    double prev = 0.0;
    for (double f : fractions) {
        if (f <= prev || f > 1.0) {
            throw DataError("SubsampleSchedule: fractions must be strictly increasing in (0, 1]");
        }
        prev = f;
    }
}

Dataset generate_blobs(std::size_t num_classes, std::size_t per_class, std::size_t dim,
                       double center_spread, double noise_sigma, Rng& rng) {
    if (num_classes < 1 || per_class < 1 || dim < 1) {
        throw DataError("generate_blobs: counts must be >= 1");
    }
    if (noise_sigma <= 0.0) throw DataError("generate_blobs: noise_sigma must be > 0");

    Matrix centers(num_classes, dim);
    for (std::size_t c = 0; c < num_classes; ++c)
        for (std::size_t j = 0; j < dim; ++j)
            centers(c, j) = rng.uniform(-center_spread, center_spread);

    Dataset d;
    d.num_classes = num_classes;
    d.features = Matrix(num_classes * per_class, dim);
    d.labels.resize(num_classes * per_class);
    std::size_t row = 0;
    for (std::size_t c = 0; c < num_classes; ++c) {
        for (std::size_t s = 0; s < per_class; ++s, ++row) {
            for (std::size_t j = 0; j < dim; ++j) {
                d.features(row, j) = centers(c, j) + rng.normal(0.0, noise_sigma);
            }
            d.labels[row] = static_cast<int>(c);
        }
    }
    return d;
}

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw DataError("IDX: cannot open " + images_path.string());
    std::ifstream lbl(labels_path, std::ios::binary);
    if (!lbl) throw DataError("IDX: cannot open " + labels_path.string());

    const std::uint32_t img_magic = read_be_u32(img, "image magic");
    if (img_magic != 0x00000803) {
        throw DataError("IDX: bad image magic (expected 0x00000803)");
    }
    const std::uint32_t lbl_magic = read_be_u32(lbl, "label magic");
    if (lbl_magic != 0x00000801) {
        throw DataError("IDX: bad label magic (expected 0x00000801)");
    }
    const std::uint32_t n_img = read_be_u32(img, "image count");
    const std::uint32_t rows = read_be_u32(img, "image rows");
    const std::uint32_t cols = read_be_u32(img, "image cols");
    const std::uint32_t n_lbl = read_be_u32(lbl, "label count");
    if (n_img != n_lbl) {
        throw DataError("IDX: image count " + std::to_string(n_img) +
                        " != label count " + std::to_string(n_lbl));
    }

    const std::size_t pixels = std::size_t(rows) * cols;
    Dataset d;
    d.features = Matrix(n_img, pixels);
    d.labels.resize(n_img);

    std::vector<unsigned char> buf(pixels);
    int max_label = -1;
    for (std::uint32_t i = 0; i < n_img; ++i) {
        img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pixels));
        if (!img) throw DataError("IDX: truncated image payload");
        auto dst = d.features.row(i);
        for (std::size_t p = 0; p < pixels; ++p) dst[p] = buf[p] / 255.0;
        char lc;
        lbl.read(&lc, 1);
        if (!lbl) throw DataError("IDX: truncated label payload");
        d.labels[i] = static_cast<unsigned char>(lc);
        max_label = std::max(max_label, d.labels[i]);
    }
    d.num_classes = static_cast<std::size_t>(max_label) + 1;
    d.validate();
    return d;
}

Dataset load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("CSV: cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw DataError("CSV: empty file " + path.string());

    std::size_t num_cols = 1 + std::count(line.begin(), line.end(), ',');
    if (num_cols < 2) throw DataError("CSV: need at least one feature column plus label");
    const std::size_t dim = num_cols - 1;

    std::vector<double> values;
    std::vector<int> labels;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t col = 0;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) {
            std::size_t pos = 0;
            double v;
            try {
                v = std::stod(cell, &pos);
            } catch (const std::exception&) {
                throw DataError("CSV: non-numeric cell '" + cell + "' at line " +
                                std::to_string(line_no));
            }
            if (pos != cell.size()) {
                throw DataError("CSV: non-numeric cell '" + cell + "' at line " +
                                std::to_string(line_no));
            }
            row.push_back(v);
            ++col;
        }
        if (col != num_cols) {
            throw DataError("CSV: ragged row at line " + std::to_string(line_no) +
                            " (" + std::to_string(col) + " cells, expected " +
                            std::to_string(num_cols) + ")");
        }
        for (std::size_t j = 0; j < dim; ++j) values.push_back(row[j]);
        const double lv = row[dim];
        if (lv != std::floor(lv) || lv < 0) {
            throw DataError("CSV: label must be a non-negative integer at line " +
                            std::to_string(line_no));
        }
        labels.push_back(static_cast<int>(lv));
    }
    if (labels.empty()) throw DataError("CSV: no data rows in " + path.string());

    const int max_label = *std::max_element(labels.begin(), labels.end());
    std::vector<bool> seen(static_cast<std::size_t>(max_label) + 1, false);
    for (int l : labels) seen[static_cast<std::size_t>(l)] = true;
    for (std::size_t c = 0; c < seen.size(); ++c) {
        if (!seen[c]) {
            throw DataError("CSV: labels must be consecutive integers from 0; class " +
                            std::to_string(c) + " is missing");
        }
    }

    Dataset d;
    d.num_classes = static_cast<std::size_t>(max_label) + 1;
    d.features = Matrix(labels.size(), dim, std::move(values));
    d.labels = std::move(labels);
    d.validate();
    return d;
}

void save_csv(const Dataset& d, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("CSV: cannot write " + path.string());
    for (std::size_t j = 0; j < d.dim(); ++j) out << "f" << j << ",";
    out << "label\n";
    char buf[32];
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto row = d.features.row(i);
        for (double v : row) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            out << buf << ",";
        }
        out << d.labels[i] << "\n";
    }
}

SplitResult stratified_split(const Dataset& d, double holdout_fraction, Rng& rng) {
    if (holdout_fraction <= 0.0 || holdout_fraction >= 1.0) {
        throw DataError("stratified_split: holdout_fraction must be in (0, 1)");
    }
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> val_idx;
    for (auto& cls : d.indices_by_class()) {
        if (cls.size() < 2) {
            throw DataError("stratified_split: class with fewer than 2 samples");
        }
        shuffle_indices(cls, rng);
        std::size_t n_val = static_cast<std::size_t>(
            std::llround(static_cast<double>(cls.size()) * holdout_fraction));
        n_val = std::clamp<std::size_t>(n_val, 1, cls.size() - 1);
        for (std::size_t i = 0; i < cls.size(); ++i) {
            (i < n_val ? val_idx : train_idx).push_back(cls[i]);
        }
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(val_idx.begin(), val_idx.end());
    return {d.subset(train_idx), d.subset(val_idx)};
}

std::vector<std::vector<std::size_t>> nested_subsample_indices(
    const Dataset& d, const SubsampleSchedule& schedule) {
    schedule.validate();
    d.validate();
    Rng rng = Rng(schedule.seed).split("nested_subsample");

    // One permutation per class, fixed once; every fraction takes a prefix.
    auto by_class = d.indices_by_class();
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        Rng class_rng = rng.split(c);
        shuffle_indices(by_class[c], class_rng);
    }

    std::vector<std::vector<std::size_t>> result;
    for (double f : schedule.fractions) {
        std::vector<std::size_t> idx;
        for (const auto& cls : by_class) {
            const std::size_t take = static_cast<std::size_t>(
                std::llround(f * static_cast<double>(cls.size())));
            if (take < 1) {
                throw DataError("nested_subsample: fraction " + std::to_string(f) +
                                " yields an empty class");
            }
            idx.insert(idx.end(), cls.begin(), cls.begin() + static_cast<std::ptrdiff_t>(take));
        }
        std::sort(idx.begin(), idx.end());
        result.push_back(std::move(idx));
    }
    return result;
}

std::vector<Dataset> nested_subsample(const Dataset& d, const SubsampleSchedule& schedule) {
    std::vector<Dataset> out;
    for (const auto& idx : nested_subsample_indices(d, schedule)) {
        out.push_back(d.subset(idx));
    }
    return out;
}

}  // namespace nrbf
