#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "grace/data.hpp"
#include "grace/metrics.hpp"

namespace grace::uncertainty {

using FeatureRow = std::vector<double>;
using FeatureMatrix = std::vector<FeatureRow>;

// Per-action sample variance (divisor count-1) of a scene's annotator scores.
std::vector<double> score_variances(const data::Dataset& ds, const std::string& scene_id);

// Variances for every scene with >= 2 annotations, keyed by scene_id.
std::map<std::string, std::vector<double>> all_scene_variances(const data::Dataset& ds);

struct KMeansOptions {
    std::size_t k = 2;
    std::size_t restarts = 10;
    std::size_t max_iter = 300;
    double tol = 1e-9;
};

struct KMeansResult {
    FeatureMatrix centroids;
    std::vector<std::size_t> assignments;
    std::size_t certain_centroid_index = 0;  // lower mean feature value
    double sse = 0.0;
};

KMeansResult kmeans_pp(const FeatureMatrix& points, std::uint64_t seed,
                       const KMeansOptions& opts = {});

// label 1 where the point sits with the non-certain centroid.
std::map<std::string, int> weak_labels(const KMeansResult& result,
                                       const std::vector<std::string>& scene_ids);

// Duplicate minority rows (with replacement) until class counts match.
void oversample_minority(FeatureMatrix& x, std::vector<int>& y, std::uint64_t seed);

enum class ClassifierKind { LR, KNN, MLP, RF };
ClassifierKind classifier_kind_from_string(const std::string& s);
std::string to_string(ClassifierKind kind);

struct Hyperparams {
    std::map<std::string, double> values;
    double get(const std::string& key, double fallback) const {
        auto it = values.find(key);
        return it == values.end() ? fallback : it->second;
    }
};

class Classifier {
public:
    virtual ~Classifier() = default;
    virtual int predict(const FeatureRow& features) const = 0;
    virtual std::string serialize() const = 0;

    std::vector<int> predict_all(const FeatureMatrix& x) const {
        std::vector<int> out;
        out.reserve(x.size());
        for (const auto& row : x) out.push_back(predict(row));
        return out;
    }
};

// kind-specific hyperparameter keys:
//   LR:  lr, max_iter, tol, l2, balanced (0/1)
//   KNN: k
//   MLP: hidden, epochs, lr
//   RF:  n_trees, max_depth, min_leaf
std::unique_ptr<Classifier> train_classifier(ClassifierKind kind, const FeatureMatrix& x,
                                             const std::vector<int>& y, const Hyperparams& hp,
                                             std::uint64_t seed);

std::unique_ptr<Classifier> bagging_ensemble(ClassifierKind kind, const FeatureMatrix& x,
                                             const std::vector<int>& y, const Hyperparams& hp,
                                             std::size_t n_estimators, std::uint64_t seed);

void save_classifier(const Classifier& model, const std::string& path);
std::unique_ptr<Classifier> load_classifier(const std::string& path);

using metrics::classification_metrics;

}  // namespace grace::uncertainty
