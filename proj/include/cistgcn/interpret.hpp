#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "cistgcn/data.hpp"
#include "cistgcn/model.hpp"

namespace cistgcn::interpret {

struct SaliencyMap {
    std::string layer;
    int64_t rows = 0, cols = 0;
    std::vector<double> values;
    double mean = 0, stddev = 0;  // pre-normalization statistics
    bool normalized = false;
};

// Min-max normalization to [0,1]; a constant matrix maps to all 0.5 so
// degenerate maps stay distinct from genuinely zero maps.
SaliencyMap normalize_map(const model::Interpretation::Map& map);

// Elementwise mean over samples, then normalized.
SaliencyMap layer_average(const std::vector<model::Interpretation>& bundles,
                          const std::string& layer);

// Single forward pass; the bundle comes with the prediction.
struct BundleResult {
    std::vector<float> prediction;  // t2*J*3
    model::Interpretation bundle;
};
BundleResult extract_bundle(model::CistGcn<float>& m, const data::Sample& sample);

struct ImportanceRecord {
    std::string sample_id;
    std::string action;
    std::vector<double> vec;  // canonical concatenation, fixed ordering
    double mpjpe = 0;
};

std::vector<ImportanceRecord> importance_table(model::CistGcn<float>& m,
                                               const std::vector<data::Sample>& samples);

struct CentroidReport {
    struct ClassStat {
        std::string label;
        int64_t count = 0;
        std::vector<double> centroid;
        double intra_mean = 0;  // mean distance of members to their centroid
    };
    std::vector<ClassStat> classes;
    std::optional<double> inter_centroid_mean;  // absent with a single class
    std::optional<double> separation;  // (inter - intra) / max(inter, intra)
    std::vector<std::string> warnings;
};

CentroidReport centroid_analysis(const std::vector<ImportanceRecord>& records);

// Convenience: the same analysis over arbitrary vectors (e.g. raw poses).
CentroidReport centroid_analysis_vectors(const std::vector<std::string>& labels,
                                         const std::vector<std::vector<double>>& vecs);

// Mean-centered top-2 principal directions by power iteration with deflation.
std::vector<std::array<double, 2>> pca_project(const std::vector<std::vector<double>>& vecs,
                                               uint64_t seed);

// Exports: one directory per sample with TNSR dumps and a manifest
// `layer<TAB>rows<TAB>cols<TAB>mean<TAB>std`, plus table writers.
void export_bundle(const std::string& dir, const model::Interpretation& bundle);
void write_importance_tsv(const std::string& path, const std::vector<ImportanceRecord>& records);
void write_centroids_tsv(const std::string& path, const CentroidReport& report);
void write_pca_tsv(const std::string& path, const std::vector<ImportanceRecord>& records,
                   const std::vector<std::array<double, 2>>& coords);

}  // namespace cistgcn::interpret
