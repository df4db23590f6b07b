#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "nrbf/matrix.hpp"
#include "nrbf/rng.hpp"

namespace nrbf {

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Labeled feature vectors. Labels are consecutive class indices in [0, C).
struct Dataset {
    Matrix features;            // N x D
    std::vector<int> labels;    // length N
    std::size_t num_classes = 0;

    std::size_t size() const { return labels.size(); }
    std::size_t dim() const { return features.cols(); }

    /// Throws DataError if any invariant is violated.
    void validate() const;
    Dataset subset(const std::vector<std::size_t>& indices) const;
    std::vector<std::vector<std::size_t>> indices_by_class() const;
};

/// Fractions for the sample-efficiency sweep. Subsets are nested: the index
/// set at a smaller fraction is contained in every larger one.
struct SubsampleSchedule {
    std::vector<double> fractions;  // strictly increasing, in (0, 1]
    std::uint64_t seed = 0;

    void validate() const;
};

Dataset generate_blobs(std::size_t num_classes, std::size_t per_class, std::size_t dim,
                       double center_spread, double noise_sigma, Rng& rng);

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path);

Dataset load_csv(const std::filesystem::path& path);
void save_csv(const Dataset& d, const std::filesystem::path& path);

struct SplitResult {
    Dataset train;
    Dataset validation;
};

/// Per-class holdout: round(class_count * holdout_fraction) samples, at least 1.
SplitResult stratified_split(const Dataset& d, double holdout_fraction, Rng& rng);

std::vector<Dataset> nested_subsample(const Dataset& d, const SubsampleSchedule& schedule);

/// Index sets behind nested_subsample, exposed for testing the nesting and
/// stratification properties directly.
std::vector<std::vector<std::size_t>> nested_subsample_indices(
    const Dataset& d, const SubsampleSchedule& schedule);

}  // namespace nrbf
