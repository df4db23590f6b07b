#pragma once

#include <filesystem>
#include <string>

#include "nrbf/pipeline.hpp"

namespace nrbf {

/// Versioned JSON parameter blob: extractor layers, batch-norm state and the
/// final head (if any), all as shape-tagged arrays.
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

std::string run_record_to_json(const RunRecord& r);
RunRecord run_record_from_json(const std::string& line);

/// One row per center: class label, then the P coordinates.
void save_centers_csv(const RBFHead& head, const std::filesystem::path& path);

/// One row per sample: label, then the P coordinates. Input format for
/// external T-SNE / plotting tools.
void save_embeddings_csv(const Matrix& embeddings, const std::vector<int>& labels,
                         const std::filesystem::path& path);

void save_matrix_csv(const Matrix& m, const std::filesystem::path& path);

}  // namespace nrbf
