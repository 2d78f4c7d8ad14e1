#include "grace/metrics.hpp"

#include <cmath>

#include "grace/error.hpp"

namespace grace::metrics {

namespace {

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace

MeanStd rmse(const std::vector<std::vector<double>>& pred,
             const std::vector<std::vector<double>>& truth) {
    if (pred.empty() || pred.size() != truth.size()) fail("EmptyInput", "rmse");
    std::vector<double> per_record;
    per_record.reserve(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i].size() != truth[i].size() || pred[i].empty()) fail("EmptyInput", "rmse record");
        double acc = 0.0;
        for (std::size_t j = 0; j < pred[i].size(); ++j) {
            const double d = pred[i][j] - truth[i][j];
            acc += d * d;
        }
        per_record.push_back(std::sqrt(acc / static_cast<double>(pred[i].size())));
    }
    MeanStd out;
    out.mean = mean_of(per_record);
    double var = 0.0;
    for (double r : per_record) var += (r - out.mean) * (r - out.mean);
    out.std = std::sqrt(var / static_cast<double>(per_record.size()));
    return out;
}

double pcc(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.empty() || x.size() != y.size()) fail("EmptyInput", "pcc");
    const double mx = mean_of(x);
    const double my = mean_of(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) fail("ConstantSeries", "pcc needs non-constant input");
    return sxy / std::sqrt(sxx * syy);
}

double ccc(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.empty() || x.size() != y.size()) fail("EmptyInput", "ccc");
    const double n = static_cast<double>(x.size());
    const double mx = mean_of(x);
    const double my = mean_of(y);
    double cov = 0.0, vx = 0.0, vy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        cov += (x[i] - mx) * (y[i] - my);
        vx += (x[i] - mx) * (x[i] - mx);
        vy += (y[i] - my) * (y[i] - my);
    }
    cov /= n;
    vx /= n;
    vy /= n;
    if (vx == 0.0 && vy == 0.0 && mx == my) return 1.0;  // identical constant series
    if (vx == 0.0 || vy == 0.0) fail("ConstantSeries", "ccc needs non-constant input");
    return 2.0 * cov / (vx + vy + (mx - my) * (mx - my));
}

std::vector<double> flatten(const std::vector<std::vector<double>>& rows) {
    std::vector<double> out;
    for (const auto& r : rows) out.insert(out.end(), r.begin(), r.end());
    return out;
}

ClassificationScores classification_metrics(const std::vector<int>& y_true,
                                            const std::vector<int>& y_pred) {
    if (y_true.empty() || y_true.size() != y_pred.size()) fail("EmptyInput", "metrics");
    // Confusion counts: [true][pred].
    double cm[2][2] = {{0, 0}, {0, 0}};
    for (std::size_t i = 0; i < y_true.size(); ++i) cm[y_true[i]][y_pred[i]] += 1.0;

    ClassificationScores out;
    double recall_sum = 0.0, prec_sum = 0.0, f1_sum = 0.0;
    for (int c = 0; c < 2; ++c) {
        const double tp = cm[c][c];
        const double support = cm[c][0] + cm[c][1];
        const double predicted = cm[0][c] + cm[1][c];
        const double recall = support > 0.0 ? tp / support : 0.0;
        const double precision = predicted > 0.0 ? tp / predicted : 0.0;
        const double f1 = (precision + recall) > 0.0
                              ? 2.0 * precision * recall / (precision + recall)
                              : 0.0;
        recall_sum += recall;
        prec_sum += precision;
        f1_sum += f1;
    }
    out.balanced_accuracy = recall_sum / 2.0;
    out.macro_precision = prec_sum / 2.0;
    out.macro_f1 = f1_sum / 2.0;
    return out;
}

MeanStd aleatoric_uncertainty(const std::vector<std::vector<double>>& scene_variances) {
    if (scene_variances.empty()) fail("EmptyInput", "aleatoric_uncertainty");
    constexpr double kFloor = 1e-6;
    std::vector<double> per_scene;
    per_scene.reserve(scene_variances.size());
    for (const auto& vars : scene_variances) {
        if (vars.empty()) fail("EmptyInput", "scene with no variances");
        double acc = 0.0;
        for (double v : vars) acc += std::log(v + kFloor);
        per_scene.push_back(acc / static_cast<double>(vars.size()));
    }
    MeanStd out;
    out.mean = mean_of(per_scene);
    double var = 0.0;
    for (double v : per_scene) var += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(var / static_cast<double>(per_scene.size()));
    return out;
}

}  // namespace grace::metrics
