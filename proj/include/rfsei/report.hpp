#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace rfsei::harness {

/// Per-dimension standardized nearest-centroid classifier.
struct NearestCentroid {
    std::vector<double> mean;
    std::vector<double> scale;
    std::vector<std::vector<double>> centroids;  // one per class, standardized
};

/// Classes are 0..n_classes-1 and each needs at least one sample.
NearestCentroid fit_nearest_centroid(const std::vector<std::vector<double>>& features, const std::vector<int>& labels,
                                     std::size_t n_classes);
/// Euclidean distance in standardized space; ties go to the lowest class index.
int classify(const NearestCentroid& model, std::span<const double> feature);

struct Prediction {
    int truth = 0;
    int predicted = 0;
    double snr_db = 0.0;
};

struct SnrCell {
    std::size_t correct = 0;
    std::size_t total = 0;
    double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total); }
    bool operator==(const SnrCell&) const = default;
};

struct ExperimentReport {
    std::string pipeline;
    double proportion = 1.0;
    bool supported = true;
    std::string note;
    std::size_t n_classes = 0;
    /// Rows are true classes. The extra last column counts predictions outside
    /// the label set, so every row sums to that class's support.
    std::vector<std::vector<std::size_t>> confusion;
    std::map<double, SnrCell> per_snr;
    double accuracy = 0.0;
    nlohmann::json config;
    std::vector<std::uint64_t> seeds;
    double wall_clock_s = 0.0;

    std::vector<std::size_t> support() const;
    /// Support-weighted mean of per-class recall.
    double mean_recall_weighted() const;
    double accuracy_at(double snr_db) const;
};

ExperimentReport evaluate(std::span<const Prediction> predictions, std::size_t n_classes);
/// An unsupported cell: no predictions, accuracy left empty in the CSV.
ExperimentReport unsupported_report(std::string pipeline, double proportion, std::string note);

/// Header `pipeline,proportion,snr_db,accuracy,n_test,status`; one row per
/// (pipeline, proportion, SNR) in ascending SNR order.
std::string report_csv(std::span<const ExperimentReport> reports);
nlohmann::json report_json(const ExperimentReport& r);

}  // namespace rfsei::harness
