#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <unistd.h>
#include <fstream>
#include <set>

#include "grace/data.hpp"
#include "grace/error.hpp"

namespace fs = std::filesystem;
using namespace grace;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("grace_test_data_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

const char* kScenes =
    "scene_id,robot_type,f_crowded,f_noisy\n"
    "s1,Pepper,1,0\n"
    "s2,PR2,0,1\n";

const char* kAnnotations =
    "scene_id,annotator_id,score_wave,score_speak,explanation_text\n"
    "s1,a1,5,4,\"the robot is far, and idle\"\n"
    "s1,a2,4,4,busy area\n"
    "s2,a1,1,2,too close\n";

const char* kLabels =
    "scene_id,annotator_id,human_state,safety,robot_direction,working_area,robot_capability,"
    "robot_proximity,crowd\n"
    "s1,a1,1,0,-1,0,0,1,0\n";

}  // namespace

TEST_CASE("load_dataset parses schema, scores, and optional labels") {
    TempDir tmp;
    write_text(tmp.file("scenes.csv"), kScenes);
    write_text(tmp.file("ann.csv"), kAnnotations);
    write_text(tmp.file("labels.csv"), kLabels);

    auto ds = data::load_dataset(tmp.file("scenes.csv"), tmp.file("ann.csv"),
                                 tmp.file("labels.csv"));
    CHECK(ds.scenes.size() == 2);
    CHECK(ds.annotations.size() == 3);
    CHECK(ds.action_names == std::vector<std::string>{"wave", "speak"});
    CHECK(ds.feature_names == std::vector<std::string>{"crowded", "noisy"});
    CHECK(ds.scene("s1").robot_type == data::RobotType::Pepper);
    CHECK(ds.annotations[0].scores.scores == std::vector<double>{5.0, 4.0});
    CHECK(ds.annotations[0].explanation_text == "the robot is far, and idle");

    // Raw {-1,0,1} labels arrive on the {0,0.5,1} scale.
    REQUIRE(ds.annotations[0].explanation.has_value());
    CHECK(ds.annotations[0].explanation->values ==
          std::vector<double>{1.0, 0.5, 0.0, 0.5, 0.5, 1.0, 0.5});
    CHECK(!ds.annotations[1].explanation.has_value());
}

TEST_CASE("load_dataset validation failures carry stable codes") {
    TempDir tmp;
    write_text(tmp.file("scenes.csv"), kScenes);

    write_text(tmp.file("no_scores.csv"), "scene_id,annotator_id,explanation_text\ns1,a1,x\n");
    CHECK_THROWS_WITH_AS(data::load_dataset(tmp.file("scenes.csv"), tmp.file("no_scores.csv")),
                         doctest::Contains("MissingColumn"), Error);

    write_text(tmp.file("bad_score.csv"),
               "scene_id,annotator_id,score_wave,explanation_text\ns1,a1,6,x\n");
    CHECK_THROWS_WITH_AS(data::load_dataset(tmp.file("scenes.csv"), tmp.file("bad_score.csv")),
                         doctest::Contains("ScoreOutOfRange"), Error);

    write_text(tmp.file("dangling.csv"),
               "scene_id,annotator_id,score_wave,explanation_text\nmissing,a1,3,x\n");
    CHECK_THROWS_WITH_AS(data::load_dataset(tmp.file("scenes.csv"), tmp.file("dangling.csv")),
                         doctest::Contains("DanglingSceneReference"), Error);

    write_text(tmp.file("ann.csv"), kAnnotations);
    write_text(tmp.file("bad_label.csv"),
               "scene_id,annotator_id,human_state,safety,robot_direction,working_area,"
               "robot_capability,robot_proximity,crowd\ns1,a1,2,0,0,0,0,0,0\n");
    CHECK_THROWS_WITH_AS(data::load_dataset(tmp.file("scenes.csv"), tmp.file("ann.csv"),
                                            tmp.file("bad_label.csv")),
                         doctest::Contains("OutOfDomain"), Error);
}

TEST_CASE("write_dataset then load_dataset round-trips") {
    TempDir tmp;
    write_text(tmp.file("scenes.csv"), kScenes);
    write_text(tmp.file("ann.csv"), kAnnotations);
    write_text(tmp.file("labels.csv"), kLabels);
    auto ds = data::load_dataset(tmp.file("scenes.csv"), tmp.file("ann.csv"),
                                 tmp.file("labels.csv"));

    data::write_dataset(ds, tmp.file("s2.csv"), tmp.file("a2.csv"), tmp.file("l2.csv"));
    auto ds2 = data::load_dataset(tmp.file("s2.csv"), tmp.file("a2.csv"), tmp.file("l2.csv"));

    CHECK(ds2.action_names == ds.action_names);
    CHECK(ds2.feature_names == ds.feature_names);
    REQUIRE(ds2.annotations.size() == ds.annotations.size());
    for (std::size_t i = 0; i < ds.annotations.size(); ++i) {
        CHECK(ds2.annotations[i].scores.scores == ds.annotations[i].scores.scores);
        CHECK(ds2.annotations[i].explanation_text == ds.annotations[i].explanation_text);
        CHECK(ds2.annotations[i].explanation.has_value() ==
              ds.annotations[i].explanation.has_value());
        if (ds.annotations[i].explanation)
            CHECK(ds2.annotations[i].explanation->values == ds.annotations[i].explanation->values);
    }
}

TEST_CASE("group_split keeps every scene's annotations in one partition") {
    data::SynthSpec spec;
    spec.n_scenes = 23;
    spec.annotators_per_scene = 4;
    auto ds = data::synthesize_dataset(spec, 77).dataset;

    auto folds = data::group_split(ds, 5, 3);
    REQUIRE(folds.size() == 5);
    for (const auto& f : folds) {
        CHECK(f.train.size() + f.validation.size() + f.test.size() == ds.annotations.size());
        std::set<std::string> train_g, val_g, test_g;
        for (auto i : f.train) train_g.insert(ds.annotations[i].scene_id);
        for (auto i : f.validation) val_g.insert(ds.annotations[i].scene_id);
        for (auto i : f.test) test_g.insert(ds.annotations[i].scene_id);
        for (const auto& g : test_g) {
            CHECK(!train_g.count(g));
            CHECK(!val_g.count(g));
        }
        for (const auto& g : val_g) CHECK(!train_g.count(g));
    }

    // Every scene appears as test exactly once across folds.
    std::map<std::string, int> test_count;
    for (const auto& f : folds)
        for (auto i : f.test) test_count[ds.annotations[i].scene_id] = 1;
    CHECK(test_count.size() == ds.scenes.size());

    CHECK(data::group_split(ds, 5, 3)[0].test == folds[0].test);  // seeded determinism
    CHECK_THROWS_WITH_AS(data::group_split(ds, 24, 3), doctest::Contains("TooFewGroups"), Error);
}

TEST_CASE("synthesize_dataset obeys its own generative law") {
    data::SynthSpec spec;
    spec.n_scenes = 40;
    spec.annotators_per_scene = 3;
    spec.noise_sigma = 0.0;  // noiseless: annotations must equal base exactly
    auto result = data::synthesize_dataset(spec, 5);
    const auto& truth = result.truth;

    for (const auto& ann : result.dataset.annotations) {
        const auto& llm = truth.llm_scores.at(ann.scene_id);
        const auto& expl = ann.explanation->values;
        for (std::size_t a = 0; a < spec.n_actions; ++a) {
            double want = llm[a];
            for (std::size_t c = 0; c < data::kExplanationDims; ++c)
                want += truth.residual_weights[c][a] * (expl[c] - 0.5);
            want = std::clamp(want, 1.0, 5.0);
            CHECK(ann.scores.scores[a] == doctest::Approx(want).epsilon(1e-12));
        }
    }

    // Regime marker is mirrored in the last scene feature.
    for (const auto& [id, scene] : result.dataset.scenes)
        CHECK(scene.features.back() == (truth.regime.at(id) ? 1.0 : 0.0));

    // Determinism: same seed, identical dataset.
    auto again = data::synthesize_dataset(spec, 5);
    CHECK(again.dataset.annotations.size() == result.dataset.annotations.size());
    for (std::size_t i = 0; i < again.dataset.annotations.size(); ++i)
        CHECK(again.dataset.annotations[i].scores.scores ==
              result.dataset.annotations[i].scores.scores);
}

TEST_CASE("score table round-trip and arity check") {
    TempDir tmp;
    data::ScoreTable table = {{"s1", {1.5, 4.25}}, {"s2", {3.0, 2.75}}};
    data::write_score_table(table, {"wave", "speak"}, tmp.file("llm.csv"));
    auto back = data::load_score_table(tmp.file("llm.csv"), 2);
    CHECK(back == table);
    CHECK_THROWS_WITH_AS(data::load_score_table(tmp.file("llm.csv"), 3),
                         doctest::Contains("WrongFeatureArity"), Error);
}

TEST_CASE("explanation categories are the seven retained dimensions") {
    const auto& cats = data::explanation_categories();
    REQUIRE(cats.size() == 7);
    CHECK(cats[0].slug == "human_state");
    CHECK(cats[5].slug == "robot_proximity");
    CHECK(cats[5].positive_pole == "far");  // far is the positive component
    CHECK(cats[6].slug == "crowd");
}
