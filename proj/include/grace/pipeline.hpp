#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "grace/data.hpp"
#include "grace/metrics.hpp"
#include "grace/net.hpp"
#include "grace/uncertainty.hpp"

namespace grace::pipeline {

struct RegressionReport {
    std::string model;
    std::string variant;
    std::string cluster;  // "whole", "certain", "uncertain"
    double rmse_mean = 0.0;
    double rmse_std = 0.0;
    double pcc = 0.0;
    double ccc = 0.0;
    std::size_t n_samples = 0;
};

RegressionReport evaluate_scores(const std::string& model, const std::string& variant,
                                 const std::string& cluster,
                                 const std::vector<std::vector<double>>& pred,
                                 const std::vector<std::vector<double>>& truth);

// CSV schema: model,variant,cluster,rmse_mean,rmse_std,pcc,ccc,n_samples
void emit_report_csv(const std::vector<RegressionReport>& reports, const std::string& path);
std::vector<RegressionReport> load_report_csv(const std::string& path);
std::string format_report_table(const std::vector<RegressionReport>& reports);

// Join annotations with per-scene LLM scores into net training rows. Rows
// without a resolvable explanation are dropped when require_explanation is
// set; otherwise they get the neutral 0.5 vector.
std::vector<net::TrainRow> assemble_rows(const data::Dataset& ds, const data::ScoreTable& llm,
                                         bool require_explanation,
                                         std::vector<std::size_t>* annotation_indices = nullptr);

// ---- Nested cross-validation over scene-level classification rows ----

struct NestedCvConfig {
    std::size_t outer_folds = 5;
    std::size_t inner_folds = 5;
    std::size_t search_budget = 25;
    std::uint64_t seed = 0;
    uncertainty::ClassifierKind kind = uncertainty::ClassifierKind::LR;
};

struct SplitAudit {
    std::size_t outer = 0;
    std::size_t inner = 0;
    std::set<std::string> train_groups;
    std::set<std::string> validation_groups;
    std::set<std::string> test_groups;
};

struct OuterFoldReport {
    metrics::ClassificationScores test;
    uncertainty::Hyperparams chosen;
};

struct NestedCvResult {
    std::vector<OuterFoldReport> folds;
    metrics::MeanStd balanced_accuracy;
    metrics::MeanStd macro_f1;
    metrics::MeanStd macro_precision;
    std::vector<SplitAudit> audits;
};

NestedCvResult nested_cv(const uncertainty::FeatureMatrix& x, const std::vector<int>& y,
                         const std::vector<std::string>& groups, const NestedCvConfig& cfg);

// ---- End-to-end routing ----

struct PipelineModels {
    const uncertainty::Classifier* classifier = nullptr;
    const net::GraceModel* grace = nullptr;
};

struct RoutedOutput {
    std::string route;  // "llm", "corrected", "explain", "llm-unresolved"
    std::vector<double> scores;
    std::vector<net::ExplanationRank> explanations;
    bool unresolved_uncertainty = false;
};

RoutedOutput run_pipeline(const PipelineModels& models, const std::vector<double>& scene_features,
                          const std::vector<double>& llm_scores,
                          const std::optional<std::vector<double>>& explanation,
                          const std::optional<std::vector<double>>& human_scores);

}  // namespace grace::pipeline
