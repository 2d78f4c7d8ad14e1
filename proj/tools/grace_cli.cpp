#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "grace/csv.hpp"
#include "grace/data.hpp"
#include "grace/error.hpp"
#include "grace/llm.hpp"
#include "grace/metrics.hpp"
#include "grace/net.hpp"
#include "grace/num.hpp"
#include "grace/pipeline.hpp"
#include "grace/uncertainty.hpp"

#include <CLI11.hpp>
#include <json.hpp>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// Exit codes: 0 ok, 2 validation, 3 missing artifact, 4 provider.
int exit_code_for(const grace::Error& e) {
    const std::string& code = e.code();
    if (code == "FileNotFound" || code == "ModelMissing" || code == "MissingArtifact" ||
        code == "BadModelFile")
        return 3;
    if (code == "ProviderUnavailable" || code == "UnparsableResponse") return 4;
    return 2;
}

// Every command persists its resolved configuration next to its primary
// output for provenance.
void persist_run_config(const std::string& primary_output, const json& resolved) {
    std::ofstream out(primary_output + ".run.json", std::ios::binary);
    out << resolved.dump(2) << '\n';
}

struct DatasetArgs {
    std::string scenes, annotations, labels;

    grace::data::Dataset load() const {
        std::optional<std::string> lab;
        if (!labels.empty()) lab = labels;
        return grace::data::load_dataset(scenes, annotations, lab);
    }

    void attach(CLI::App* cmd, bool labels_too = true) {
        cmd->add_option("--scenes", scenes, "scenes.csv path")->required();
        cmd->add_option("--annotations", annotations, "annotations.csv path")->required();
        if (labels_too) cmd->add_option("--labels", labels, "explanation_labels.csv path");
    }
};

std::unique_ptr<grace::llm::Provider> make_provider(const std::string& provider_config,
                                                    const std::string& mock_script) {
    if (!mock_script.empty()) {
        std::ifstream in(mock_script, std::ios::binary);
        if (!in) grace::fail("FileNotFound", "cannot open mock script " + mock_script);
        json j = json::parse(in);
        auto mock = std::make_unique<grace::llm::MockProvider>(j.value("id", "mock"));
        for (const auto& [key, completions] : j.at("responses").items()) {
            std::vector<grace::llm::Completion> comps;
            for (const auto& c : completions)
                comps.push_back({c.at("answer").get<std::string>(),
                                 c.at("probability").get<double>()});
            mock->script(key, std::move(comps));
        }
        return mock;
    }
    if (provider_config.empty())
        grace::fail("MissingArtifact", "either --provider or --mock-script is required");
    return grace::llm::make_http_provider(grace::llm::load_provider_config(provider_config));
}

grace::net::NetConfig net_config_from_options(const json& overrides) {
    grace::net::NetConfig cfg;
    if (overrides.contains("alpha")) cfg.alpha = overrides["alpha"].get<double>();
    if (overrides.contains("lr")) cfg.lr = overrides["lr"].get<double>();
    if (overrides.contains("max_epochs")) cfg.max_epochs = overrides["max_epochs"].get<std::size_t>();
    if (overrides.contains("batch_size")) cfg.batch_size = overrides["batch_size"].get<std::size_t>();
    if (overrides.contains("latent_dim")) cfg.latent_dim = overrides["latent_dim"].get<std::size_t>();
    if (overrides.contains("branch_dim")) cfg.branch_dim = overrides["branch_dim"].get<std::size_t>();
    if (overrides.contains("shared_dims"))
        cfg.shared_dims = overrides["shared_dims"].get<std::vector<std::size_t>>();
    if (overrides.contains("seed")) cfg.seed = overrides["seed"].get<std::uint64_t>();
    return cfg;
}

std::vector<double> parse_score_list(const std::string& text) {
    std::vector<double> out;
    std::istringstream in(text);
    std::string token;
    while (in >> token) out.push_back(grace::num::parse(token, "--scores"));
    return out;
}

std::map<std::string, int> load_weak_labels(const std::string& path) {
    auto rows = grace::csv::parse_file(path);
    if (rows.size() < 2) grace::fail("MissingArtifact", "weak labels " + path + " empty");
    std::map<std::string, int> out;
    for (std::size_t i = 1; i < rows.size(); ++i)
        out[rows[i][0]] = static_cast<int>(grace::num::parse(rows[i][1], path));
    return out;
}

int cmd_ingest(const std::string& out_dir, DatasetArgs& ds_args, bool synthetic,
               const std::string& spec_path, std::uint64_t seed) {
    fs::create_directories(out_dir);
    if (synthetic) {
        grace::data::SynthSpec spec;
        if (!spec_path.empty()) {
            std::ifstream in(spec_path, std::ios::binary);
            if (!in) grace::fail("FileNotFound", "cannot open synth spec " + spec_path);
            json j = json::parse(in);
            spec.n_actions = j.value("n_actions", spec.n_actions);
            spec.n_features = j.value("n_features", spec.n_features);
            spec.n_scenes = j.value("n_scenes", spec.n_scenes);
            spec.annotators_per_scene = j.value("annotators_per_scene", spec.annotators_per_scene);
            spec.noise_sigma = j.value("noise_sigma", spec.noise_sigma);
            spec.certain_sigma = j.value("certain_sigma", spec.certain_sigma);
            spec.uncertain_sigma = j.value("uncertain_sigma", spec.uncertain_sigma);
            spec.uncertain_fraction = j.value("uncertain_fraction", spec.uncertain_fraction);
            spec.deterministic_category =
                j.value("deterministic_category", spec.deterministic_category);
            spec.residual_weight_scale =
                j.value("residual_weight_scale", spec.residual_weight_scale);
        }
        auto result = grace::data::synthesize_dataset(spec, seed);
        grace::data::write_dataset(result.dataset, out_dir + "/scenes.csv",
                                   out_dir + "/annotations.csv",
                                   out_dir + "/explanation_labels.csv");
        grace::data::write_score_table(result.truth.llm_scores, result.dataset.action_names,
                                       out_dir + "/llm_scores.csv");
        json truth = {{"residual_weights", result.truth.residual_weights},
                      {"regime", result.truth.regime}};
        std::ofstream tf(out_dir + "/truth.json", std::ios::binary);
        tf << truth.dump(2) << '\n';
        persist_run_config(out_dir + "/scenes.csv",
                           {{"command", "ingest"}, {"synthetic", true}, {"seed", seed}});
        std::cout << "scenes: " << result.dataset.scenes.size()
                  << "\nannotations: " << result.dataset.annotations.size()
                  << "\nactions: " << result.dataset.n_actions()
                  << "\nfeatures: " << result.dataset.n_features() << "\n";
        return 0;
    }
    auto ds = ds_args.load();
    std::cout << "scenes: " << ds.scenes.size() << "\nannotations: " << ds.annotations.size()
              << "\nactions: " << ds.n_actions() << "\nfeatures: " << ds.n_features() << "\n";
    std::cout << "schema actions:";
    for (const auto& a : ds.action_names) std::cout << ' ' << a;
    std::cout << "\nschema features:";
    for (const auto& f : ds.feature_names) std::cout << ' ' << f;
    std::cout << "\n";
    return 0;
}

int cmd_cluster(DatasetArgs& ds_args, std::uint64_t seed, const std::string& out_path) {
    auto ds = ds_args.load();
    auto variances = grace::uncertainty::all_scene_variances(ds);
    if (variances.empty())
        grace::fail("InsufficientAnnotations", "no scene has >= 2 annotations");
    std::vector<std::string> scene_ids;
    grace::uncertainty::FeatureMatrix points;
    for (const auto& [id, v] : variances) {
        scene_ids.push_back(id);
        points.push_back(v);
    }
    auto km = grace::uncertainty::kmeans_pp(points, seed);
    auto labels = grace::uncertainty::weak_labels(km, scene_ids);

    std::ofstream out(out_path, std::ios::binary);
    if (!out) grace::fail("FileNotFound", "cannot write " + out_path);
    grace::csv::write_row(out, {"scene_id", "weak_label"});
    for (const auto& [id, label] : labels)
        grace::csv::write_row(out, {id, std::to_string(label)});
    persist_run_config(out_path, {{"command", "cluster"}, {"seed", seed}});
    std::size_t uncertain = 0;
    for (const auto& [id, label] : labels) uncertain += label;
    std::cout << "scenes clustered: " << labels.size() << "\nuncertain: " << uncertain
              << "\ncertain: " << labels.size() - uncertain << "\nsse: " << km.sse << "\n";
    return 0;
}

int cmd_label(DatasetArgs& ds_args, const std::string& provider_config,
              const std::string& mock_script, const std::string& exemplars_path,
              const std::string& out_path) {
    auto ds = ds_args.load();
    auto provider = make_provider(provider_config, mock_script);
    auto exemplars = exemplars_path.empty() ? grace::llm::default_exemplars()
                                            : grace::llm::load_exemplars(exemplars_path);

    std::ofstream out(out_path, std::ios::binary);
    if (!out) grace::fail("FileNotFound", "cannot write " + out_path);
    std::vector<std::string> header = {"scene_id", "annotator_id"};
    for (const auto& c : grace::data::explanation_categories()) header.push_back(c.slug);
    grace::csv::write_row(out, header);

    std::size_t labeled = 0, skipped = 0;
    for (const auto& ann : ds.annotations) {
        std::vector<int> raw;
        bool ok = true;
        for (const auto& c : grace::data::explanation_categories()) {
            try {
                raw.push_back(grace::llm::label_explanation(*provider, ann.explanation_text,
                                                            c.slug, exemplars));
            } catch (const grace::Error&) {
                ok = false;  // unlabelable annotations are excluded, not imputed
                break;
            }
        }
        if (!ok) {
            ++skipped;
            continue;
        }
        std::vector<std::string> row = {ann.scene_id, ann.annotator_id};
        for (int v : raw) row.push_back(std::to_string(v));
        grace::csv::write_row(out, row);
        ++labeled;
    }
    persist_run_config(out_path, {{"command", "label"}});
    std::cout << "labeled: " << labeled << "\nskipped: " << skipped << "\n";
    return 0;
}

int cmd_llm_score(DatasetArgs& ds_args, const std::string& provider_config,
                  const std::string& mock_script, const std::string& cache_path,
                  const std::string& out_path) {
    auto ds = ds_args.load();
    auto provider = make_provider(provider_config, mock_script);
    std::optional<grace::llm::ResponseCache> cache;
    if (!cache_path.empty()) cache.emplace(cache_path);
    auto table = grace::llm::score_dataset(*provider, cache ? &*cache : nullptr, ds);
    grace::data::write_score_table(table, ds.action_names, out_path);
    persist_run_config(out_path, {{"command", "llm-score"}});
    std::cout << "scored scenes: " << table.size() << "\n";
    return 0;
}

int cmd_train_uncertainty(DatasetArgs& ds_args, const std::string& weak_labels_path,
                          const std::string& kind_str, std::uint64_t seed,
                          std::size_t bagging, bool run_nested_cv,
                          const std::string& out_path) {
    auto ds = ds_args.load();
    auto labels = load_weak_labels(weak_labels_path);
    const auto kind = grace::uncertainty::classifier_kind_from_string(kind_str);

    grace::uncertainty::FeatureMatrix x;
    std::vector<int> y;
    std::vector<std::string> groups;
    for (const auto& [id, label] : labels) {
        auto it = ds.scenes.find(id);
        if (it == ds.scenes.end())
            grace::fail("DanglingSceneReference", "weak label for unknown scene " + id);
        x.push_back(it->second.features);
        y.push_back(label);
        groups.push_back(id);
    }

    if (run_nested_cv) {
        grace::pipeline::NestedCvConfig cv_cfg;
        cv_cfg.seed = seed;
        cv_cfg.kind = kind;
        auto cv = grace::pipeline::nested_cv(x, y, groups, cv_cfg);
        std::cout << "nested-cv balanced accuracy: " << cv.balanced_accuracy.mean << " (+-"
                  << cv.balanced_accuracy.std << ")\nnested-cv macro F1: " << cv.macro_f1.mean
                  << " (+-" << cv.macro_f1.std << ")\nnested-cv macro precision: "
                  << cv.macro_precision.mean << " (+-" << cv.macro_precision.std << ")\n";
    }

    grace::uncertainty::Hyperparams hp;
    std::unique_ptr<grace::uncertainty::Classifier> model;
    if (bagging > 0) {
        model = grace::uncertainty::bagging_ensemble(kind, x, y, hp, bagging, seed);
    } else {
        model = grace::uncertainty::train_classifier(kind, x, y, hp, seed);
    }
    grace::uncertainty::save_classifier(*model, out_path);
    persist_run_config(out_path, {{"command", "train-uncertainty"},
                                  {"kind", kind_str},
                                  {"seed", seed},
                                  {"bagging", bagging}});
    const auto train_scores = grace::metrics::classification_metrics(y, model->predict_all(x));
    std::cout << "train balanced accuracy: " << train_scores.balanced_accuracy << "\n";
    return 0;
}

int cmd_train_grace(DatasetArgs& ds_args, const std::string& llm_scores_path,
                    const std::string& variant_str, std::uint64_t seed, std::uint64_t split_seed,
                    const json& overrides, const std::string& out_path) {
    auto ds = ds_args.load();
    auto llm = grace::data::load_score_table(llm_scores_path, ds.n_actions());
    const auto variant = grace::net::variant_from_string(variant_str);

    grace::net::NetConfig cfg = net_config_from_options(overrides);
    cfg.n = ds.n_actions();
    cfg.seed = seed;

    const bool needs_expl = variant == grace::net::Variant::GRACE ||
                            variant == grace::net::Variant::GRACE_NOISED;
    std::vector<std::size_t> row_ann;
    auto rows = grace::pipeline::assemble_rows(ds, llm, needs_expl, &row_ann);
    if (rows.empty()) grace::fail("MissingArtifact", "no trainable rows after joining artifacts");

    // Fold 0 of the grouped split: train/validation here, test reserved for
    // `evaluate` run with the same --split-seed.
    auto folds = grace::data::group_split(ds, 5, split_seed);
    std::set<std::size_t> train_set(folds[0].train.begin(), folds[0].train.end());
    std::set<std::size_t> val_set(folds[0].validation.begin(), folds[0].validation.end());
    std::vector<grace::net::TrainRow> train_rows, val_rows;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (train_set.count(row_ann[i])) train_rows.push_back(rows[i]);
        else if (val_set.count(row_ann[i])) val_rows.push_back(rows[i]);
    }

    auto model = grace::net::train(variant, train_rows, val_rows, cfg);
    grace::net::save_model(model, out_path);
    json resolved = {{"command", "train-grace"}, {"variant", variant_str},
                     {"seed", seed},           {"split_seed", split_seed},
                     {"overrides", overrides}, {"train_rows", train_rows.size()},
                     {"val_rows", val_rows.size()}};
    persist_run_config(out_path, resolved);
    std::cout << "trained " << variant_str << ": epochs " << model.meta.epochs_run
              << ", best val loss " << model.meta.best_val_loss << "\n";
    return 0;
}

int cmd_evaluate(DatasetArgs& ds_args, const std::string& llm_scores_path,
                 const std::vector<std::string>& model_paths, const std::string& weak_labels_path,
                 std::uint64_t split_seed, const std::string& out_path) {
    auto ds = ds_args.load();
    auto llm = grace::data::load_score_table(llm_scores_path, ds.n_actions());

    std::vector<std::size_t> row_ann;
    auto rows = grace::pipeline::assemble_rows(ds, llm, false, &row_ann);
    auto folds = grace::data::group_split(ds, 5, split_seed);
    std::set<std::size_t> test_set(folds[0].test.begin(), folds[0].test.end());

    std::vector<grace::net::TrainRow> test_rows;
    std::vector<std::string> test_scene_ids;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (!test_set.count(row_ann[i])) continue;
        test_rows.push_back(rows[i]);
        test_scene_ids.push_back(ds.annotations[row_ann[i]].scene_id);
    }
    if (test_rows.empty()) grace::fail("MissingArtifact", "empty test split");

    std::map<std::string, int> weak;
    if (!weak_labels_path.empty()) weak = load_weak_labels(weak_labels_path);

    std::vector<grace::pipeline::RegressionReport> reports;
    auto add_reports = [&](const std::string& name, const std::string& variant,
                           const std::vector<std::vector<double>>& pred,
                           const std::vector<std::vector<double>>& truth) {
        reports.push_back(grace::pipeline::evaluate_scores(name, variant, "whole", pred, truth));
        if (!weak.empty()) {
            std::vector<std::vector<double>> pc, tc, pu, tu;
            for (std::size_t i = 0; i < pred.size(); ++i) {
                auto it = weak.find(test_scene_ids[i]);
                if (it == weak.end()) continue;
                if (it->second == 0) {
                    pc.push_back(pred[i]);
                    tc.push_back(truth[i]);
                } else {
                    pu.push_back(pred[i]);
                    tu.push_back(truth[i]);
                }
            }
            if (!pc.empty())
                reports.push_back(
                    grace::pipeline::evaluate_scores(name, variant, "certain", pc, tc));
            if (!pu.empty())
                reports.push_back(
                    grace::pipeline::evaluate_scores(name, variant, "uncertain", pu, tu));
        }
    };

    std::vector<std::vector<double>> truth, passthrough;
    for (const auto& row : test_rows) {
        truth.push_back(row.s_human);
        passthrough.push_back(row.s_llm);
    }
    add_reports("llm-passthrough", "none", passthrough, truth);

    for (const auto& path : model_paths) {
        auto model = grace::net::load_model(path);
        std::vector<std::vector<double>> pred;
        for (const auto& row : test_rows) {
            if (model.has_condition()) {
                pred.push_back(grace::net::correct_scores(model, row.s_llm, row.e_human));
            } else {
                auto fwd = grace::net::forward(model, 0.0, row.s_llm, {});
                for (auto& v : fwd.s_raw) v = std::clamp(v, 1.0, 5.0);
                pred.push_back(fwd.s_raw);
            }
        }
        add_reports(fs::path(path).stem().string(), grace::net::to_string(model.variant), pred,
                    truth);
    }

    grace::pipeline::emit_report_csv(reports, out_path);
    persist_run_config(out_path, {{"command", "evaluate"}, {"split_seed", split_seed}});
    std::cout << grace::pipeline::format_report_table(reports);
    return 0;
}

int cmd_explain(const std::string& model_path, const std::string& scores_text, std::size_t top_r) {
    auto model = grace::net::load_model(model_path);
    auto scores = parse_score_list(scores_text);
    auto ranked = grace::net::generate_explanation(model, scores, top_r);
    if (ranked.empty()) {
        std::cout << "no explanation category exceeds the confidence threshold\n";
        return 0;
    }
    for (const auto& r : ranked) {
        char line[128];
        std::snprintf(line, sizeof(line), "%s (p: %.2f)\n", r.component.c_str(), r.confidence);
        std::cout << r.category_slug << ": " << line;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"GRACE pipeline: scene uncertainty routing, LLM scoring, and the conditional "
                 "autoencoder for score correction and explanation generation"};
    app.require_subcommand(1);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "validate a dataset or generate a synthetic one");
    DatasetArgs ingest_ds;
    bool synthetic = false;
    std::string synth_spec, ingest_out = ".";
    std::uint64_t ingest_seed = 0;
    ingest->add_option("--scenes", ingest_ds.scenes, "scenes.csv path");
    ingest->add_option("--annotations", ingest_ds.annotations, "annotations.csv path");
    ingest->add_option("--labels", ingest_ds.labels, "explanation_labels.csv path");
    ingest->add_flag("--synthetic", synthetic, "generate a synthetic dataset with oracle truth");
    ingest->add_option("--spec", synth_spec, "synthetic spec JSON");
    ingest->add_option("--out", ingest_out, "output directory for synthetic data");
    ingest->add_option("--seed", ingest_seed, "generation seed");

    // cluster
    auto* cluster = app.add_subcommand("cluster", "variance clustering into weak labels");
    DatasetArgs cluster_ds;
    cluster_ds.attach(cluster, false);
    std::uint64_t cluster_seed = 0;
    std::string cluster_out = "weak_labels.csv";
    cluster->add_option("--seed", cluster_seed, "k-means seed");
    cluster->add_option("--out", cluster_out, "weak labels CSV output")->required();

    // label
    auto* label = app.add_subcommand("label", "LLM-label free-text explanations per category");
    DatasetArgs label_ds;
    label_ds.attach(label, false);
    std::string label_provider, label_mock, label_exemplars, label_out;
    label->add_option("--provider", label_provider, "provider config JSON");
    label->add_option("--mock-script", label_mock, "mock provider script JSON");
    label->add_option("--exemplars", label_exemplars, "two-shot exemplar config JSON");
    label->add_option("--out", label_out, "explanation labels CSV output")->required();

    // llm-score
    auto* llm_score = app.add_subcommand("llm-score", "expected LLM appropriateness scores");
    DatasetArgs score_ds;
    score_ds.attach(llm_score, false);
    std::string score_provider, score_mock, score_cache, score_out;
    llm_score->add_option("--provider", score_provider, "provider config JSON");
    llm_score->add_option("--mock-script", score_mock, "mock provider script JSON");
    llm_score->add_option("--cache", score_cache, "response cache JSONL path");
    llm_score->add_option("--out", score_out, "LLM score table CSV output")->required();

    // train-uncertainty
    auto* train_unc = app.add_subcommand("train-uncertainty", "train the certainty classifier");
    DatasetArgs unc_ds;
    unc_ds.attach(train_unc, false);
    std::string unc_weak, unc_kind = "lr", unc_out;
    std::uint64_t unc_seed = 0;
    std::size_t unc_bagging = 0;
    bool unc_cv = false;
    train_unc->add_option("--weak-labels", unc_weak, "weak labels CSV")->required();
    train_unc->add_option("--kind", unc_kind, "lr|knn|mlp|rf");
    train_unc->add_option("--seed", unc_seed, "training seed");
    train_unc->add_option("--bagging", unc_bagging, "bagging ensemble size (0 = off)");
    train_unc->add_flag("--nested-cv", unc_cv, "run nested cross-validation first");
    train_unc->add_option("--out", unc_out, "classifier model output")->required();

    // train-grace
    auto* train_grace = app.add_subcommand("train-grace", "train GRACE or a baseline");
    DatasetArgs grace_ds;
    grace_ds.attach(train_grace);
    std::string grace_llm_scores, grace_variant = "grace", grace_out;
    std::uint64_t grace_seed = 0, grace_split_seed = 0;
    double opt_alpha = -1.0, opt_lr = -1.0;
    std::int64_t opt_epochs = -1, opt_batch = -1, opt_latent = -1, opt_branch = -1;
    std::vector<std::size_t> opt_shared;
    train_grace->add_option("--llm-scores", grace_llm_scores, "LLM score table CSV")->required();
    train_grace->add_option("--variant", grace_variant, "grace|grace-noised|ae|vae|dae");
    train_grace->add_option("--seed", grace_seed, "training seed");
    train_grace->add_option("--split-seed", grace_split_seed, "group split seed");
    train_grace->add_option("--alpha", opt_alpha, "loss balance weight");
    train_grace->add_option("--lr", opt_lr, "initial learning rate");
    train_grace->add_option("--max-epochs", opt_epochs, "epoch cap");
    train_grace->add_option("--batch-size", opt_batch, "minibatch size");
    train_grace->add_option("--latent-dim", opt_latent, "latent dimensionality");
    train_grace->add_option("--branch-dim", opt_branch, "per-branch encoder width");
    train_grace->add_option("--shared-dims", opt_shared, "shared layer widths");
    train_grace->add_option("--out", grace_out, "model file output")->required();

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "held-out regression report");
    DatasetArgs eval_ds;
    eval_ds.attach(evaluate);
    std::string eval_llm_scores, eval_weak, eval_out;
    std::vector<std::string> eval_models;
    std::uint64_t eval_split_seed = 0;
    evaluate->add_option("--llm-scores", eval_llm_scores, "LLM score table CSV")->required();
    evaluate->add_option("--model", eval_models, "trained model file (repeatable)");
    evaluate->add_option("--weak-labels", eval_weak, "weak labels CSV for per-cluster rows");
    evaluate->add_option("--split-seed", eval_split_seed, "group split seed (match train-grace)");
    evaluate->add_option("--out", eval_out, "report CSV output")->required();

    // explain
    auto* explain = app.add_subcommand("explain", "generate explanations for human scores");
    std::string explain_model, explain_scores;
    std::size_t explain_top = 3;
    explain->add_option("--model", explain_model, "trained GRACE model file")->required();
    explain->add_option("--scores", explain_scores, "human scores, space-separated")->required();
    explain->add_option("--top", explain_top, "number of ranked categories");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest)
            return cmd_ingest(ingest_out, ingest_ds, synthetic, synth_spec, ingest_seed);
        if (*cluster) return cmd_cluster(cluster_ds, cluster_seed, cluster_out);
        if (*label)
            return cmd_label(label_ds, label_provider, label_mock, label_exemplars, label_out);
        if (*llm_score)
            return cmd_llm_score(score_ds, score_provider, score_mock, score_cache, score_out);
        if (*train_unc)
            return cmd_train_uncertainty(unc_ds, unc_weak, unc_kind, unc_seed, unc_bagging,
                                         unc_cv, unc_out);
        if (*train_grace) {
            json overrides;
            if (opt_alpha >= 0.0) overrides["alpha"] = opt_alpha;
            if (opt_lr > 0.0) overrides["lr"] = opt_lr;
            if (opt_epochs > 0) overrides["max_epochs"] = opt_epochs;
            if (opt_batch > 0) overrides["batch_size"] = opt_batch;
            if (opt_latent > 0) overrides["latent_dim"] = opt_latent;
            if (opt_branch > 0) overrides["branch_dim"] = opt_branch;
            if (!opt_shared.empty()) overrides["shared_dims"] = opt_shared;
            return cmd_train_grace(grace_ds, grace_llm_scores, grace_variant, grace_seed,
                                   grace_split_seed, overrides, grace_out);
        }
        if (*evaluate)
            return cmd_evaluate(eval_ds, eval_llm_scores, eval_models, eval_weak, eval_split_seed,
                                eval_out);
        if (*explain) return cmd_explain(explain_model, explain_scores, explain_top);
    } catch (const grace::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
