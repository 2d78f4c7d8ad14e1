#include "grace/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "grace/csv.hpp"
#include "grace/error.hpp"
#include "grace/num.hpp"
#include "grace/rng.hpp"

namespace grace::pipeline {

RegressionReport evaluate_scores(const std::string& model, const std::string& variant,
                                 const std::string& cluster,
                                 const std::vector<std::vector<double>>& pred,
                                 const std::vector<std::vector<double>>& truth) {
    RegressionReport report;
    report.model = model;
    report.variant = variant;
    report.cluster = cluster;
    const auto rm = metrics::rmse(pred, truth);
    report.rmse_mean = rm.mean;
    report.rmse_std = rm.std;
    const auto px = metrics::flatten(pred);
    const auto py = metrics::flatten(truth);
    report.pcc = metrics::pcc(px, py);
    report.ccc = metrics::ccc(px, py);
    report.n_samples = pred.size();
    return report;
}

void emit_report_csv(const std::vector<RegressionReport>& reports, const std::string& path) {
    if (reports.empty()) fail("EmptyInput", "no reports to emit");
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("FileNotFound", "cannot write " + path);
    csv::write_row(out, {"model", "variant", "cluster", "rmse_mean", "rmse_std", "pcc", "ccc",
                         "n_samples"});
    for (const auto& r : reports)
        csv::write_row(out, {r.model, r.variant, r.cluster, num::to_string(r.rmse_mean),
                             num::to_string(r.rmse_std), num::to_string(r.pcc),
                             num::to_string(r.ccc), std::to_string(r.n_samples)});
}

std::vector<RegressionReport> load_report_csv(const std::string& path) {
    auto rows = csv::parse_file(path);
    if (rows.size() < 2) fail("EmptyInput", "report " + path + " has no rows");
    std::vector<RegressionReport> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        RegressionReport rep;
        rep.model = r[0];
        rep.variant = r[1];
        rep.cluster = r[2];
        rep.rmse_mean = num::parse(r[3], path);
        rep.rmse_std = num::parse(r[4], path);
        rep.pcc = num::parse(r[5], path);
        rep.ccc = num::parse(r[6], path);
        rep.n_samples = static_cast<std::size_t>(num::parse(r[7], path));
        out.push_back(std::move(rep));
    }
    return out;
}

std::string format_report_table(const std::vector<RegressionReport>& reports) {
    std::ostringstream out;
    out << "model            variant        cluster    RMSE            PCC     CCC     n\n";
    char line[160];
    for (const auto& r : reports) {
        std::snprintf(line, sizeof(line), "%-16s %-14s %-10s %.3f (+-%.3f)  %6.3f  %6.3f  %zu\n",
                      r.model.c_str(), r.variant.c_str(), r.cluster.c_str(), r.rmse_mean,
                      r.rmse_std, r.pcc, r.ccc, r.n_samples);
        out << line;
    }
    return out.str();
}

std::vector<net::TrainRow> assemble_rows(const data::Dataset& ds, const data::ScoreTable& llm,
                                         bool require_explanation,
                                         std::vector<std::size_t>* annotation_indices) {
    std::vector<net::TrainRow> rows;
    if (annotation_indices) annotation_indices->clear();
    for (std::size_t i = 0; i < ds.annotations.size(); ++i) {
        const auto& ann = ds.annotations[i];
        auto it = llm.find(ann.scene_id);
        if (it == llm.end()) continue;
        if (require_explanation && !ann.explanation) continue;
        net::TrainRow row;
        row.s_llm = it->second;
        row.s_human = ann.scores.scores;
        row.e_human = ann.explanation ? ann.explanation->values
                                      : std::vector<double>(data::kExplanationDims, 0.5);
        rows.push_back(std::move(row));
        if (annotation_indices) annotation_indices->push_back(i);
    }
    return rows;
}

namespace {

// Assign each distinct group to a fold, then map rows through their group.
std::vector<std::size_t> group_fold_of_rows(const std::vector<std::string>& groups,
                                            std::size_t folds, Rng& rng) {
    std::vector<std::string> distinct = groups;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < folds)
        fail("TooFewGroups", std::to_string(distinct.size()) + " groups < " +
                                 std::to_string(folds) + " folds");
    rng.shuffle(distinct);
    std::map<std::string, std::size_t> fold_of;
    for (std::size_t i = 0; i < distinct.size(); ++i) fold_of[distinct[i]] = i % folds;
    std::vector<std::size_t> out(groups.size());
    for (std::size_t i = 0; i < groups.size(); ++i) out[i] = fold_of.at(groups[i]);
    return out;
}

uncertainty::Hyperparams sample_hyperparams(uncertainty::ClassifierKind kind, Rng& rng) {
    using uncertainty::ClassifierKind;
    uncertainty::Hyperparams hp;
    switch (kind) {
        case ClassifierKind::LR:
            hp.values["lr"] = rng.uniform(0.05, 1.0);
            hp.values["l2"] = std::pow(10.0, rng.uniform(-5.0, -1.0));
            hp.values["balanced"] = rng.uniform() < 0.5 ? 0.0 : 1.0;
            hp.values["max_iter"] = 500;
            break;
        case ClassifierKind::KNN:
            hp.values["k"] = static_cast<double>(1 + rng.index(15));
            break;
        case ClassifierKind::MLP:
            hp.values["hidden"] = static_cast<double>(std::size_t{8} << rng.index(4));
            hp.values["lr"] = std::pow(10.0, rng.uniform(-3.0, -1.5));
            hp.values["epochs"] = 150;
            break;
        case ClassifierKind::RF:
            hp.values["n_trees"] = static_cast<double>(20 + rng.index(81));
            hp.values["max_depth"] = static_cast<double>(3 + rng.index(10));
            hp.values["min_leaf"] = static_cast<double>(1 + rng.index(5));
            break;
    }
    return hp;
}

// Oversampling substitutes for built-in class weighting where the model has
// none (KNN, MLP); LR uses its balanced option via the sampled hyperparams.
bool needs_oversampling(uncertainty::ClassifierKind kind) {
    return kind == uncertainty::ClassifierKind::KNN || kind == uncertainty::ClassifierKind::MLP;
}

struct IndexedData {
    uncertainty::FeatureMatrix x;
    std::vector<int> y;
    std::vector<std::string> groups;
};

IndexedData subset(const uncertainty::FeatureMatrix& x, const std::vector<int>& y,
                   const std::vector<std::string>& groups, const std::vector<std::size_t>& idx) {
    IndexedData out;
    for (std::size_t i : idx) {
        out.x.push_back(x[i]);
        out.y.push_back(y[i]);
        out.groups.push_back(groups[i]);
    }
    return out;
}

bool single_class(const std::vector<int>& y) {
    bool has0 = false, has1 = false;
    for (int v : y) (v == 0 ? has0 : has1) = true;
    return !(has0 && has1);
}

}  // namespace

NestedCvResult nested_cv(const uncertainty::FeatureMatrix& x, const std::vector<int>& y,
                         const std::vector<std::string>& groups, const NestedCvConfig& cfg) {
    if (x.empty() || x.size() != y.size() || x.size() != groups.size())
        fail("EmptyInput", "nested_cv inputs");

    Rng rng(cfg.seed);
    const auto outer_fold = group_fold_of_rows(groups, cfg.outer_folds, rng);

    NestedCvResult result;
    std::vector<double> bas, f1s, precs;

    for (std::size_t outer = 0; outer < cfg.outer_folds; ++outer) {
        std::vector<std::size_t> train_idx, test_idx;
        for (std::size_t i = 0; i < x.size(); ++i)
            (outer_fold[i] == outer ? test_idx : train_idx).push_back(i);
        IndexedData outer_train = subset(x, y, groups, train_idx);
        IndexedData outer_test = subset(x, y, groups, test_idx);

        Rng inner_rng(cfg.seed + 101 * (outer + 1));
        const auto inner_fold =
            group_fold_of_rows(outer_train.groups, cfg.inner_folds, inner_rng);

        // Record every inner x outer split combination for the leakage audit.
        for (std::size_t inner = 0; inner < cfg.inner_folds; ++inner) {
            SplitAudit audit;
            audit.outer = outer;
            audit.inner = inner;
            for (std::size_t i = 0; i < outer_train.groups.size(); ++i)
                (inner_fold[i] == inner ? audit.validation_groups : audit.train_groups)
                    .insert(outer_train.groups[i]);
            for (const auto& g : outer_test.groups) audit.test_groups.insert(g);
            result.audits.push_back(std::move(audit));
        }

        uncertainty::Hyperparams best_hp;
        double best_score = -1.0;
        for (std::size_t trial = 0; trial < cfg.search_budget; ++trial) {
            const auto hp = sample_hyperparams(cfg.kind, inner_rng);
            double score_sum = 0.0;
            std::size_t score_n = 0;
            for (std::size_t inner = 0; inner < cfg.inner_folds; ++inner) {
                std::vector<std::size_t> fit_idx, val_idx;
                for (std::size_t i = 0; i < outer_train.x.size(); ++i)
                    (inner_fold[i] == inner ? val_idx : fit_idx).push_back(i);
                IndexedData fit = subset(outer_train.x, outer_train.y, outer_train.groups, fit_idx);
                IndexedData val = subset(outer_train.x, outer_train.y, outer_train.groups, val_idx);
                if (single_class(fit.y) || val.y.empty()) continue;
                if (needs_oversampling(cfg.kind))
                    uncertainty::oversample_minority(fit.x, fit.y, cfg.seed + trial);
                auto model = uncertainty::train_classifier(cfg.kind, fit.x, fit.y, hp,
                                                           cfg.seed + 7 * trial + inner);
                const auto pred = model->predict_all(val.x);
                score_sum += metrics::classification_metrics(val.y, pred).balanced_accuracy;
                ++score_n;
            }
            if (score_n == 0) continue;
            const double score = score_sum / static_cast<double>(score_n);
            if (score > best_score) {
                best_score = score;
                best_hp = hp;
            }
        }

        IndexedData fit = outer_train;
        if (needs_oversampling(cfg.kind)) uncertainty::oversample_minority(fit.x, fit.y, cfg.seed);
        auto model =
            uncertainty::train_classifier(cfg.kind, fit.x, fit.y, best_hp, cfg.seed + outer);
        const auto pred = model->predict_all(outer_test.x);
        OuterFoldReport fold;
        fold.test = metrics::classification_metrics(outer_test.y, pred);
        fold.chosen = best_hp;
        bas.push_back(fold.test.balanced_accuracy);
        f1s.push_back(fold.test.macro_f1);
        precs.push_back(fold.test.macro_precision);
        result.folds.push_back(std::move(fold));
    }

    auto mean_std = [](const std::vector<double>& v) {
        metrics::MeanStd ms;
        for (double a : v) ms.mean += a;
        ms.mean /= static_cast<double>(v.size());
        for (double a : v) ms.std += (a - ms.mean) * (a - ms.mean);
        ms.std = std::sqrt(ms.std / static_cast<double>(v.size()));
        return ms;
    };
    result.balanced_accuracy = mean_std(bas);
    result.macro_f1 = mean_std(f1s);
    result.macro_precision = mean_std(precs);
    return result;
}

RoutedOutput run_pipeline(const PipelineModels& models, const std::vector<double>& scene_features,
                          const std::vector<double>& llm_scores,
                          const std::optional<std::vector<double>>& explanation,
                          const std::optional<std::vector<double>>& human_scores) {
    if (!models.classifier) fail("ModelMissing", "uncertainty classifier not loaded");

    RoutedOutput out;
    const int label = models.classifier->predict(scene_features);
    if (label == 0) {
        out.route = "llm";
        out.scores = llm_scores;
        return out;
    }
    if (explanation) {
        if (!models.grace) fail("ModelMissing", "grace model not loaded");
        out.route = "corrected";
        out.scores = net::correct_scores(*models.grace, llm_scores, *explanation);
        return out;
    }
    if (human_scores) {
        if (!models.grace) fail("ModelMissing", "grace model not loaded");
        out.route = "explain";
        out.explanations = net::generate_explanation(*models.grace, *human_scores);
        return out;
    }
    out.route = "llm-unresolved";
    out.scores = llm_scores;
    out.unresolved_uncertainty = true;
    return out;
}

}  // namespace grace::pipeline
