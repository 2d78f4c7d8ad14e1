#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace grace::data {

enum class RobotType { Pepper, PR2, Nao, Other };

RobotType robot_type_from_string(const std::string& s);
std::string to_string(RobotType t);

// The seven retained explanation categories, in canonical storage order.
// Pole assignment: +1 maps to the first-listed component.
struct ExplanationCategory {
    std::string slug;
    std::string positive_pole;
    std::string negative_pole;
};

constexpr std::size_t kExplanationDims = 7;
const std::array<ExplanationCategory, kExplanationDims>& explanation_categories();

struct SceneRecord {
    std::string scene_id;
    RobotType robot_type = RobotType::Other;
    std::vector<double> features;
};

// n appropriateness scores, each in [1, 5].
struct ScoreVector {
    std::vector<double> scores;
};

// m=7 values in {0, 0.5, 1}: negative / neutral / positive component.
struct ExplanationVector {
    std::vector<double> values;
};

struct AnnotationRecord {
    std::string scene_id;
    std::string annotator_id;
    ScoreVector scores;
    std::string explanation_text;
    std::optional<ExplanationVector> explanation;
};

struct Dataset {
    std::map<std::string, SceneRecord> scenes;
    std::vector<AnnotationRecord> annotations;
    std::vector<std::string> action_names;
    std::vector<std::string> feature_names;

    const SceneRecord& scene(const std::string& scene_id) const;
    std::size_t n_actions() const { return action_names.size(); }
    std::size_t n_features() const { return feature_names.size(); }
};

struct DatasetSchema {
    std::vector<std::string> action_names;
    std::vector<std::string> feature_names;
};

// CSV ingestion. Column layouts:
//   scenes.csv:      scene_id, robot_type, f_<feature_slug> x p
//   annotations.csv: scene_id, annotator_id, score_<action_slug> x n, explanation_text
//   explanation_labels.csv: scene_id, annotator_id, <category_slug> x 7, raw in {-1,0,1}
Dataset load_dataset(const std::string& scenes_path, const std::string& annotations_path,
                     const std::optional<std::string>& labels_path = std::nullopt);

void write_dataset(const Dataset& ds, const std::string& scenes_path,
                   const std::string& annotations_path,
                   const std::optional<std::string>& labels_path = std::nullopt);

struct FoldSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
};

// Group-aware k-fold split over annotation indices: all annotations of a
// scene land in exactly one of train/validation/test within each fold.
std::vector<FoldSplit> group_split(const Dataset& ds, std::size_t folds, std::uint64_t seed);

// Synthetic dataset generation. Ground truth is returned alongside so tests
// can use the generator as an oracle.
struct SynthSpec {
    std::size_t n_actions = 9;
    std::size_t n_features = 8;
    std::size_t n_scenes = 100;
    std::size_t annotators_per_scene = 5;
    double noise_sigma = 0.1;
    // Per-scene annotator score noise comes from one of two regimes; the
    // uncertain regime gets the larger sigma.
    double certain_sigma = 0.0;
    double uncertain_sigma = 0.0;
    double uncertain_fraction = 0.0;
    // When true, explanation category 2 is forced to 1 when the first LLM
    // score is below 2 and 0 otherwise; used by the bidirectional oracle.
    bool deterministic_category = false;
    double residual_weight_scale = 1.5;
};

struct SynthTruth {
    // residual_weights is m x n: S_human = clamp(S_LLM + W^T (E - 0.5) + noise).
    std::vector<std::vector<double>> residual_weights;
    std::map<std::string, std::vector<double>> llm_scores;
    std::map<std::string, int> regime;  // 0 certain, 1 uncertain
};

struct SynthResult {
    Dataset dataset;
    SynthTruth truth;
};

SynthResult synthesize_dataset(const SynthSpec& spec, std::uint64_t seed);

// LLM score table artifact: scene_id -> n expected scores.
using ScoreTable = std::map<std::string, std::vector<double>>;
ScoreTable load_score_table(const std::string& path, std::size_t n_actions);
void write_score_table(const ScoreTable& table, const std::vector<std::string>& action_names,
                       const std::string& path);

}  // namespace grace::data
