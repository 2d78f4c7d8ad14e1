#pragma once

#include <utility>
#include <vector>

namespace grace::metrics {

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

// Per-record RMSE over the action dimension, then mean/std across records
// (population std). Matches the "1.37 (+-0.51)" reporting style.
MeanStd rmse(const std::vector<std::vector<double>>& pred,
             const std::vector<std::vector<double>>& truth);

// Pearson correlation on the flattened series; population moments.
double pcc(const std::vector<double>& x, const std::vector<double>& y);

// Lin's concordance correlation coefficient, population moments:
//   2 cov / (var_x + var_y + (mean_x - mean_y)^2)
double ccc(const std::vector<double>& x, const std::vector<double>& y);

std::vector<double> flatten(const std::vector<std::vector<double>>& rows);

struct ClassificationScores {
    double balanced_accuracy = 0.0;
    double macro_f1 = 0.0;
    double macro_precision = 0.0;
};

// Binary labels. Balanced accuracy is the unweighted mean of per-class
// recalls; a class absent from y_true contributes recall 0.
ClassificationScores classification_metrics(const std::vector<int>& y_true,
                                            const std::vector<int>& y_pred);

// Per scene, mean over actions of ln(variance + 1e-6); mean/std across scenes.
MeanStd aleatoric_uncertainty(const std::vector<std::vector<double>>& scene_variances);

}  // namespace grace::metrics
