#include "grace/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "grace/csv.hpp"
#include "grace/error.hpp"
#include "grace/num.hpp"
#include "grace/rng.hpp"

namespace grace::data {

RobotType robot_type_from_string(const std::string& s) {
    if (s == "Pepper") return RobotType::Pepper;
    if (s == "PR2") return RobotType::PR2;
    if (s == "Nao") return RobotType::Nao;
    if (s == "Other") return RobotType::Other;
    fail("UnknownRobotType", "robot_type '" + s + "'");
}

std::string to_string(RobotType t) {
    switch (t) {
        case RobotType::Pepper: return "Pepper";
        case RobotType::PR2: return "PR2";
        case RobotType::Nao: return "Nao";
        case RobotType::Other: return "Other";
    }
    return "Other";
}

const std::array<ExplanationCategory, kExplanationDims>& explanation_categories() {
    static const std::array<ExplanationCategory, kExplanationDims> cats = {{
        {"human_state", "available", "busy"},
        {"safety", "safe", "dangerous"},
        {"robot_direction", "facing_humans", "not_facing_humans"},
        {"working_area", "big", "small"},
        {"robot_capability", "capable", "incapable"},
        {"robot_proximity", "far", "close"},
        {"crowd", "crowded", "empty"},
    }};
    return cats;
}

const SceneRecord& Dataset::scene(const std::string& scene_id) const {
    auto it = scenes.find(scene_id);
    if (it == scenes.end()) fail("DanglingSceneReference", "scene_id '" + scene_id + "'");
    return it->second;
}

namespace {

std::size_t require_column(const std::vector<std::string>& header, const std::string& name,
                           const std::string& file) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) fail("MissingColumn", "'" + name + "' missing from " + file);
    return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

Dataset load_dataset(const std::string& scenes_path, const std::string& annotations_path,
                     const std::optional<std::string>& labels_path) {
    Dataset ds;

    auto scene_rows = csv::parse_file(scenes_path);
    if (scene_rows.empty()) fail("MissingColumn", "empty scenes file " + scenes_path);
    const auto& sh = scene_rows[0];
    std::size_t sid_col = require_column(sh, "scene_id", scenes_path);
    std::size_t rt_col = require_column(sh, "robot_type", scenes_path);
    std::vector<std::size_t> feat_cols;
    for (std::size_t j = 0; j < sh.size(); ++j) {
        if (sh[j].rfind("f_", 0) == 0) {
            feat_cols.push_back(j);
            ds.feature_names.push_back(sh[j].substr(2));
        }
    }
    if (feat_cols.empty()) fail("MissingColumn", "no f_* feature columns in " + scenes_path);
    for (std::size_t r = 1; r < scene_rows.size(); ++r) {
        const auto& row = scene_rows[r];
        if (row.size() != sh.size())
            fail("WrongFeatureArity", scenes_path + " row " + std::to_string(r + 1));
        SceneRecord rec;
        rec.scene_id = row[sid_col];
        rec.robot_type = robot_type_from_string(row[rt_col]);
        for (std::size_t j : feat_cols)
            rec.features.push_back(num::parse(row[j], scenes_path + " row " + std::to_string(r + 1)));
        ds.scenes[rec.scene_id] = std::move(rec);
    }

    auto ann_rows = csv::parse_file(annotations_path);
    if (ann_rows.empty()) fail("MissingColumn", "empty annotations file " + annotations_path);
    const auto& ah = ann_rows[0];
    std::size_t a_sid = require_column(ah, "scene_id", annotations_path);
    std::size_t a_aid = require_column(ah, "annotator_id", annotations_path);
    std::size_t a_txt = require_column(ah, "explanation_text", annotations_path);
    std::vector<std::size_t> score_cols;
    for (std::size_t j = 0; j < ah.size(); ++j) {
        if (ah[j].rfind("score_", 0) == 0) {
            score_cols.push_back(j);
            ds.action_names.push_back(ah[j].substr(6));
        }
    }
    if (score_cols.empty()) fail("MissingColumn", "no score_* columns in " + annotations_path);
    for (std::size_t r = 1; r < ann_rows.size(); ++r) {
        const auto& row = ann_rows[r];
        const std::string where = annotations_path + " row " + std::to_string(r + 1);
        if (row.size() != ah.size()) fail("MissingColumn", "short row at " + where);
        AnnotationRecord rec;
        rec.scene_id = row[a_sid];
        rec.annotator_id = row[a_aid];
        rec.explanation_text = row[a_txt];
        if (!ds.scenes.count(rec.scene_id))
            fail("DanglingSceneReference", "scene_id '" + rec.scene_id + "' at " + where);
        for (std::size_t j : score_cols) {
            double s = num::parse(row[j], where);
            if (s < 1.0 || s > 5.0)
                fail("ScoreOutOfRange", "score " + row[j] + " at " + where);
            rec.scores.scores.push_back(s);
        }
        ds.annotations.push_back(std::move(rec));
    }

    if (labels_path) {
        auto lab_rows = csv::parse_file(*labels_path);
        if (lab_rows.empty()) fail("MissingColumn", "empty labels file " + *labels_path);
        const auto& lh = lab_rows[0];
        std::size_t l_sid = require_column(lh, "scene_id", *labels_path);
        std::size_t l_aid = require_column(lh, "annotator_id", *labels_path);
        std::array<std::size_t, kExplanationDims> cat_cols{};
        for (std::size_t c = 0; c < kExplanationDims; ++c)
            cat_cols[c] = require_column(lh, explanation_categories()[c].slug, *labels_path);
        std::map<std::pair<std::string, std::string>, ExplanationVector> by_key;
        for (std::size_t r = 1; r < lab_rows.size(); ++r) {
            const auto& row = lab_rows[r];
            const std::string where = *labels_path + " row " + std::to_string(r + 1);
            ExplanationVector ev;
            for (std::size_t c = 0; c < kExplanationDims; ++c) {
                double raw = num::parse(row[cat_cols[c]], where);
                if (raw != -1.0 && raw != 0.0 && raw != 1.0)
                    fail("OutOfDomain", "raw label " + row[cat_cols[c]] + " at " + where);
                ev.values.push_back((raw + 1.0) / 2.0);
            }
            by_key[{row[l_sid], row[l_aid]}] = std::move(ev);
        }
        for (auto& ann : ds.annotations) {
            auto it = by_key.find({ann.scene_id, ann.annotator_id});
            if (it != by_key.end()) ann.explanation = it->second;
        }
    }

    return ds;
}

void write_dataset(const Dataset& ds, const std::string& scenes_path,
                   const std::string& annotations_path,
                   const std::optional<std::string>& labels_path) {
    {
        std::ofstream out(scenes_path, std::ios::binary);
        if (!out) fail("FileNotFound", "cannot write " + scenes_path);
        std::vector<std::string> header = {"scene_id", "robot_type"};
        for (const auto& f : ds.feature_names) header.push_back("f_" + f);
        csv::write_row(out, header);
        for (const auto& [id, scene] : ds.scenes) {
            std::vector<std::string> row = {scene.scene_id, to_string(scene.robot_type)};
            for (double v : scene.features) row.push_back(num::to_string(v));
            csv::write_row(out, row);
        }
    }
    {
        std::ofstream out(annotations_path, std::ios::binary);
        if (!out) fail("FileNotFound", "cannot write " + annotations_path);
        std::vector<std::string> header = {"scene_id", "annotator_id"};
        for (const auto& a : ds.action_names) header.push_back("score_" + a);
        header.push_back("explanation_text");
        csv::write_row(out, header);
        for (const auto& ann : ds.annotations) {
            std::vector<std::string> row = {ann.scene_id, ann.annotator_id};
            for (double v : ann.scores.scores) row.push_back(num::to_string(v));
            row.push_back(ann.explanation_text);
            csv::write_row(out, row);
        }
    }
    if (labels_path) {
        std::ofstream out(*labels_path, std::ios::binary);
        if (!out) fail("FileNotFound", "cannot write " + *labels_path);
        std::vector<std::string> header = {"scene_id", "annotator_id"};
        for (const auto& c : explanation_categories()) header.push_back(c.slug);
        csv::write_row(out, header);
        for (const auto& ann : ds.annotations) {
            if (!ann.explanation) continue;
            std::vector<std::string> row = {ann.scene_id, ann.annotator_id};
            for (double v : ann.explanation->values)
                row.push_back(num::to_string(v * 2.0 - 1.0));
            csv::write_row(out, row);
        }
    }
}

std::vector<FoldSplit> group_split(const Dataset& ds, std::size_t folds, std::uint64_t seed) {
    if (folds < 2) fail("TooFewGroups", "folds must be >= 2");
    if (ds.annotations.empty()) fail("TooFewGroups", "empty dataset");

    std::vector<std::string> scene_ids;
    for (const auto& [id, _] : ds.scenes) scene_ids.push_back(id);
    if (scene_ids.size() < folds)
        fail("TooFewGroups", std::to_string(scene_ids.size()) + " scenes < " +
                                 std::to_string(folds) + " folds");

    Rng rng(seed);
    rng.shuffle(scene_ids);

    std::map<std::string, std::size_t> scene_fold;
    for (std::size_t i = 0; i < scene_ids.size(); ++i) scene_fold[scene_ids[i]] = i % folds;

    std::vector<FoldSplit> result(folds);
    for (std::size_t f = 0; f < folds; ++f) {
        const std::size_t val_fold = (f + 1) % folds;
        for (std::size_t i = 0; i < ds.annotations.size(); ++i) {
            std::size_t g = scene_fold.at(ds.annotations[i].scene_id);
            if (g == f) result[f].test.push_back(i);
            else if (g == val_fold) result[f].validation.push_back(i);
            else result[f].train.push_back(i);
        }
    }
    return result;
}

SynthResult synthesize_dataset(const SynthSpec& spec, std::uint64_t seed) {
    if (spec.n_scenes == 0 || spec.annotators_per_scene == 0 || spec.n_actions == 0)
        fail("InvalidSpec", "scene, annotator and action counts must be positive");
    if (spec.uncertain_fraction < 0.0 || spec.uncertain_fraction > 1.0)
        fail("InvalidSpec", "uncertain_fraction outside [0,1]");

    Rng rng(seed);
    SynthResult out;
    Dataset& ds = out.dataset;

    for (std::size_t a = 0; a < spec.n_actions; ++a)
        ds.action_names.push_back("action" + std::to_string(a));
    for (std::size_t f = 0; f < spec.n_features; ++f)
        ds.feature_names.push_back("feat" + std::to_string(f));

    // Residual weights map (E - 0.5) to a per-action score shift.
    auto& w = out.truth.residual_weights;
    w.assign(kExplanationDims, std::vector<double>(spec.n_actions, 0.0));
    for (auto& row : w)
        for (auto& v : row) v = rng.uniform(-spec.residual_weight_scale, spec.residual_weight_scale);

    const int digits = static_cast<int>(std::to_string(spec.n_scenes - 1).size());
    for (std::size_t s = 0; s < spec.n_scenes; ++s) {
        std::string id = std::to_string(s);
        id = "scene" + std::string(digits - static_cast<int>(id.size()), '0') + id;

        const bool uncertain = rng.uniform() < spec.uncertain_fraction;
        out.truth.regime[id] = uncertain ? 1 : 0;

        SceneRecord scene;
        scene.scene_id = id;
        scene.robot_type = static_cast<RobotType>(rng.index(4));
        for (std::size_t f = 0; f < spec.n_features; ++f)
            scene.features.push_back(rng.uniform() < 0.5 ? 0.0 : 1.0);
        // Last feature doubles as the regime marker so classifiers can
        // recover the weak label from scene features.
        if (!scene.features.empty()) scene.features.back() = uncertain ? 1.0 : 0.0;

        std::vector<double> llm(spec.n_actions);
        for (auto& v : llm) v = rng.uniform(1.2, 4.8);
        out.truth.llm_scores[id] = llm;

        ExplanationVector expl;
        for (std::size_t c = 0; c < kExplanationDims; ++c) {
            const std::size_t tri = rng.index(3);
            expl.values.push_back(tri == 0 ? 0.0 : (tri == 1 ? 0.5 : 1.0));
        }
        if (spec.deterministic_category) {
            // Category 2 is the sole informative category: it fires exactly
            // when the first action's base score is low, every other category
            // stays neutral, and its weight on action 0 is pinned negative so
            // the two classes sit a full margin apart in the observed scores.
            for (auto& v : expl.values) v = 0.5;
            expl.values[2] = llm[0] < 2.0 ? 1.0 : 0.0;
            w[2][0] = -spec.residual_weight_scale;
        }

        std::vector<double> base(spec.n_actions);
        for (std::size_t a = 0; a < spec.n_actions; ++a) {
            double shift = 0.0;
            for (std::size_t c = 0; c < kExplanationDims; ++c)
                shift += w[c][a] * (expl.values[c] - 0.5);
            base[a] = llm[a] + shift;
        }

        const double regime_sigma = uncertain ? spec.uncertain_sigma : spec.certain_sigma;
        for (std::size_t k = 0; k < spec.annotators_per_scene; ++k) {
            AnnotationRecord ann;
            ann.scene_id = id;
            ann.annotator_id = "annotator" + std::to_string(k);
            ann.explanation = expl;
            ann.explanation_text = "synthetic";
            for (std::size_t a = 0; a < spec.n_actions; ++a) {
                double v = base[a];
                if (spec.noise_sigma > 0.0) v += rng.normal(0.0, spec.noise_sigma);
                if (regime_sigma > 0.0) v += rng.normal(0.0, regime_sigma);
                ann.scores.scores.push_back(std::clamp(v, 1.0, 5.0));
            }
            ds.annotations.push_back(std::move(ann));
        }
        ds.scenes[id] = std::move(scene);
    }
    return out;
}

ScoreTable load_score_table(const std::string& path, std::size_t n_actions) {
    auto rows = csv::parse_file(path);
    if (rows.empty()) fail("MissingColumn", "empty score table " + path);
    const auto& h = rows[0];
    std::size_t sid = require_column(h, "scene_id", path);
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < h.size(); ++j)
        if (h[j].rfind("llm_score_", 0) == 0) cols.push_back(j);
    if (cols.size() != n_actions)
        fail("WrongFeatureArity", path + " has " + std::to_string(cols.size()) +
                                      " score columns, expected " + std::to_string(n_actions));
    ScoreTable table;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        std::vector<double> v;
        for (std::size_t j : cols)
            v.push_back(num::parse(rows[r][j], path + " row " + std::to_string(r + 1)));
        table[rows[r][sid]] = std::move(v);
    }
    return table;
}

void write_score_table(const ScoreTable& table, const std::vector<std::string>& action_names,
                       const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("FileNotFound", "cannot write " + path);
    std::vector<std::string> header = {"scene_id"};
    for (const auto& a : action_names) header.push_back("llm_score_" + a);
    csv::write_row(out, header);
    for (const auto& [id, scores] : table) {
        std::vector<std::string> row = {id};
        for (double v : scores) row.push_back(num::to_string(v));
        csv::write_row(out, row);
    }
}

}  // namespace grace::data
