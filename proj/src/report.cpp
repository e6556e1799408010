#include "rfsei/report.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "rfsei/errors.hpp"

namespace rfsei::harness {

NearestCentroid fit_nearest_centroid(const std::vector<std::vector<double>>& features, const std::vector<int>& labels,
                                     std::size_t n_classes) {
    if (features.empty() || features.size() != labels.size())
        throw ParameterError("fit_nearest_centroid: features and labels must be nonempty and aligned");
    const auto dim = features.front().size();
    if (dim == 0) throw ParameterError("fit_nearest_centroid: zero-dimensional features");
    for (const auto& f : features)
        if (f.size() != dim) throw ParameterError("fit_nearest_centroid: inconsistent feature dimension");

    NearestCentroid model;
    model.mean.assign(dim, 0.0);
    model.scale.assign(dim, 0.0);
    const double n = static_cast<double>(features.size());
    for (const auto& f : features)
        for (std::size_t d = 0; d < dim; ++d) model.mean[d] += f[d] / n;
    for (const auto& f : features)
        for (std::size_t d = 0; d < dim; ++d) model.scale[d] += (f[d] - model.mean[d]) * (f[d] - model.mean[d]) / n;
    for (auto& s : model.scale) s = s > 0.0 ? std::sqrt(s) : 1.0;

    model.centroids.assign(n_classes, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> count(n_classes, 0);
    for (std::size_t i = 0; i < features.size(); ++i) {
        const int label = labels[i];
        if (label < 0 || static_cast<std::size_t>(label) >= n_classes)
            throw ParameterError("fit_nearest_centroid: label outside the class range");
        const auto c = static_cast<std::size_t>(label);
        ++count[c];
        for (std::size_t d = 0; d < dim; ++d) model.centroids[c][d] += (features[i][d] - model.mean[d]) / model.scale[d];
    }
    for (std::size_t c = 0; c < n_classes; ++c) {
        if (count[c] == 0) throw ParameterError("fit_nearest_centroid: class " + std::to_string(c) + " has no samples");
        for (auto& v : model.centroids[c]) v /= static_cast<double>(count[c]);
    }
    return model;
}

int classify(const NearestCentroid& model, std::span<const double> feature) {
    if (feature.size() != model.mean.size()) throw ParameterError("classify: feature dimension mismatch");
    int best = -1;
    double best_distance = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < model.centroids.size(); ++c) {
        double distance = 0.0;
        for (std::size_t d = 0; d < feature.size(); ++d) {
            const double diff = (feature[d] - model.mean[d]) / model.scale[d] - model.centroids[c][d];
            distance += diff * diff;
        }
        if (distance < best_distance) {
            best_distance = distance;
            best = static_cast<int>(c);
        }
    }
    return best;
}

std::vector<std::size_t> ExperimentReport::support() const {
    std::vector<std::size_t> out;
    for (const auto& row : confusion) {
        std::size_t s = 0;
        for (auto v : row) s += v;
        out.push_back(s);
    }
    return out;
}

double ExperimentReport::mean_recall_weighted() const {
    const auto sup = support();
    std::size_t total = 0;
    double weighted = 0.0;
    for (std::size_t c = 0; c < sup.size(); ++c) {
        total += sup[c];
        if (sup[c] > 0)
            weighted += static_cast<double>(sup[c]) * (static_cast<double>(confusion[c][c]) / static_cast<double>(sup[c]));
    }
    return total == 0 ? 0.0 : weighted / static_cast<double>(total);
}

double ExperimentReport::accuracy_at(double snr_db) const {
    const auto it = per_snr.find(snr_db);
    if (it == per_snr.end()) throw ParameterError("report has no SNR point " + std::to_string(snr_db));
    return it->second.accuracy();
}

ExperimentReport evaluate(std::span<const Prediction> predictions, std::size_t n_classes) {
    if (predictions.empty()) throw ParameterError("evaluate: empty test set");
    ExperimentReport r;
    r.n_classes = n_classes;
    r.confusion.assign(n_classes, std::vector<std::size_t>(n_classes + 1, 0));
    std::size_t correct = 0;
    for (const auto& p : predictions) {
        if (p.truth < 0 || static_cast<std::size_t>(p.truth) >= n_classes)
            throw ParameterError("evaluate: true label outside the class range");
        const bool known = p.predicted >= 0 && static_cast<std::size_t>(p.predicted) < n_classes;
        const auto column = known ? static_cast<std::size_t>(p.predicted) : n_classes;
        ++r.confusion[static_cast<std::size_t>(p.truth)][column];
        auto& cell = r.per_snr[p.snr_db];
        ++cell.total;
        if (p.predicted == p.truth) {
            ++cell.correct;
            ++correct;
        }
    }
    r.accuracy = static_cast<double>(correct) / static_cast<double>(predictions.size());
    return r;
}

ExperimentReport unsupported_report(std::string pipeline, double proportion, std::string note) {
    ExperimentReport r;
    r.pipeline = std::move(pipeline);
    r.proportion = proportion;
    r.supported = false;
    r.note = std::move(note);
    return r;
}

std::string report_csv(std::span<const ExperimentReport> reports) {
    std::ostringstream out;
    out << "pipeline,proportion,snr_db,accuracy,n_test,status\n";
    for (const auto& r : reports) {
        if (!r.supported) {
            out << r.pipeline << ',' << r.proportion << ",all,,0,unsupported\n";
            continue;
        }
        for (const auto& [snr, cell] : r.per_snr)
            out << r.pipeline << ',' << r.proportion << ',' << snr << ',' << std::setprecision(6) << std::fixed
                << cell.accuracy() << std::defaultfloat << ',' << cell.total << ",ok\n";
    }
    return out.str();
}

nlohmann::json report_json(const ExperimentReport& r) {
    nlohmann::json per_snr = nlohmann::json::array();
    for (const auto& [snr, cell] : r.per_snr)
        per_snr.push_back({{"snr_db", snr}, {"correct", cell.correct}, {"total", cell.total}, {"accuracy", cell.accuracy()}});
    return {{"pipeline", r.pipeline},   {"proportion", r.proportion}, {"supported", r.supported},
            {"note", r.note},           {"n_classes", r.n_classes},   {"accuracy", r.accuracy},
            {"per_snr", per_snr},       {"confusion", r.confusion},   {"config", r.config},
            {"seeds", r.seeds},         {"wall_clock_s", r.wall_clock_s}};
}

}  // namespace rfsei::harness
