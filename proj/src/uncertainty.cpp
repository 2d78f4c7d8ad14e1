#include "grace/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "grace/error.hpp"
#include "grace/kernels.hpp"
#include "grace/nn.hpp"
#include "grace/rng.hpp"

#include <json.hpp>

namespace grace::uncertainty {

using json = nlohmann::json;
using kernels::Matrix;

std::vector<double> score_variances(const data::Dataset& ds, const std::string& scene_id) {
    std::vector<const data::AnnotationRecord*> anns;
    for (const auto& a : ds.annotations)
        if (a.scene_id == scene_id) anns.push_back(&a);
    if (anns.size() < 2)
        fail("InsufficientAnnotations", "scene '" + scene_id + "' has " +
                                            std::to_string(anns.size()) + " annotations");
    const std::size_t n = ds.n_actions();
    std::vector<double> vars(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double mean = 0.0;
        for (const auto* a : anns) mean += a->scores.scores[j];
        mean /= static_cast<double>(anns.size());
        double acc = 0.0;
        for (const auto* a : anns) {
            const double d = a->scores.scores[j] - mean;
            acc += d * d;
        }
        vars[j] = acc / static_cast<double>(anns.size() - 1);
    }
    return vars;
}

std::map<std::string, std::vector<double>> all_scene_variances(const data::Dataset& ds) {
    std::map<std::string, std::size_t> counts;
    for (const auto& a : ds.annotations) counts[a.scene_id]++;
    std::map<std::string, std::vector<double>> out;
    for (const auto& [id, c] : counts)
        if (c >= 2) out[id] = score_variances(ds, id);
    return out;
}

namespace {

Matrix to_matrix(const FeatureMatrix& rows) {
    Matrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
    return m;
}

double sse_of(const Matrix& dist, const std::vector<std::size_t>& assign) {
    double acc = 0.0;
    for (std::size_t i = 0; i < assign.size(); ++i) acc += dist(i, assign[i]);
    return acc;
}

struct LloydOutcome {
    FeatureMatrix centroids;
    std::vector<std::size_t> assignments;
    double sse = 0.0;
};

LloydOutcome lloyd_once(const FeatureMatrix& points, std::uint64_t seed_offset, Rng& rng,
                        const KMeansOptions& opts) {
    const std::size_t n = points.size();
    const std::size_t d = points[0].size();
    const std::size_t k = opts.k;
    (void)seed_offset;

    Matrix pts = to_matrix(points);

    // K-means++ seeding.
    FeatureMatrix centroids;
    centroids.push_back(points[rng.index(n)]);
    std::vector<double> d2(n);
    while (centroids.size() < k) {
        Matrix cmat = to_matrix(centroids);
        Matrix dist;
        kernels::pairwise_sqdist(pts, cmat, dist);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = dist(i, 0);
            for (std::size_t c = 1; c < centroids.size(); ++c) best = std::min(best, dist(i, c));
            d2[i] = best;
            total += best;
        }
        std::size_t chosen;
        if (total <= 0.0) {
            chosen = rng.index(n);
        } else {
            double target = rng.uniform() * total;
            chosen = n - 1;
            double run = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                run += d2[i];
                if (run >= target) {
                    chosen = i;
                    break;
                }
            }
        }
        centroids.push_back(points[chosen]);
    }

    std::vector<std::size_t> assign(n, 0);
    Matrix dist;
    for (std::size_t iter = 0; iter < opts.max_iter; ++iter) {
        Matrix cmat = to_matrix(centroids);
        kernels::pairwise_sqdist(pts, cmat, dist);
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            for (std::size_t c = 1; c < k; ++c)
                if (dist(i, c) < dist(i, best)) best = c;
            assign[i] = best;
        }

        FeatureMatrix next(k, FeatureRow(d, 0.0));
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            counts[assign[i]]++;
            for (std::size_t j = 0; j < d; ++j) next[assign[i]][j] += points[i][j];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // Reseed an empty cluster at the point farthest from its centroid.
                std::size_t far = 0;
                double far_d = -1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (dist(i, assign[i]) > far_d) {
                        far_d = dist(i, assign[i]);
                        far = i;
                    }
                }
                next[c] = points[far];
            } else {
                for (std::size_t j = 0; j < d; ++j) next[c][j] /= static_cast<double>(counts[c]);
            }
        }

        double shift = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            double acc = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double dd = next[c][j] - centroids[c][j];
                acc += dd * dd;
            }
            shift = std::max(shift, std::sqrt(acc));
        }
        centroids = std::move(next);
        if (shift < opts.tol) break;
    }

    // Final assignment against the converged centroids.
    Matrix cmat = to_matrix(centroids);
    kernels::pairwise_sqdist(pts, cmat, dist);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < k; ++c)
            if (dist(i, c) < dist(i, best)) best = c;
        assign[i] = best;
    }

    // Hartigan refinement: Lloyd can converge to a fixed point that is not
    // SSE-optimal because moving a boundary point also shifts both centroids.
    // The exact SSE change of moving point x from cluster a (size na) to b
    // (size nb) is nb/(nb+1)*||x-mb||^2 - na/(na-1)*||x-ma||^2; apply every
    // strictly improving move until a full pass finds none.
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) counts[assign[i]]++;
    auto sqdist_to = [&](std::size_t i, const FeatureRow& m) {
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j)
            acc += (points[i][j] - m[j]) * (points[i][j] - m[j]);
        return acc;
    };
    for (std::size_t pass = 0; pass < opts.max_iter; ++pass) {
        bool moved = false;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t a = assign[i];
            if (counts[a] <= 1) continue;
            const double na = static_cast<double>(counts[a]);
            const double removal = na / (na - 1.0) * sqdist_to(i, centroids[a]);
            std::size_t best_c = a;
            double best_delta = -1e-12;
            for (std::size_t c = 0; c < k; ++c) {
                if (c == a) continue;
                const double nc = static_cast<double>(counts[c]);
                const double delta = nc / (nc + 1.0) * sqdist_to(i, centroids[c]) - removal;
                if (delta < best_delta) {
                    best_delta = delta;
                    best_c = c;
                }
            }
            if (best_c == a) continue;
            const double nb = static_cast<double>(counts[best_c]);
            for (std::size_t j = 0; j < d; ++j) {
                centroids[a][j] = (na * centroids[a][j] - points[i][j]) / (na - 1.0);
                centroids[best_c][j] = (nb * centroids[best_c][j] + points[i][j]) / (nb + 1.0);
            }
            counts[a]--;
            counts[best_c]++;
            assign[i] = best_c;
            moved = true;
        }
        if (!moved) break;
    }

    cmat = to_matrix(centroids);
    kernels::pairwise_sqdist(pts, cmat, dist);

    LloydOutcome out;
    out.centroids = std::move(centroids);
    out.sse = sse_of(dist, assign);
    out.assignments = std::move(assign);
    return out;
}

}  // namespace

KMeansResult kmeans_pp(const FeatureMatrix& points, std::uint64_t seed, const KMeansOptions& opts) {
    if (points.empty()) fail("DegenerateInput", "no points");
    FeatureMatrix distinct = points;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < opts.k)
        fail("DegenerateInput", std::to_string(distinct.size()) + " distinct points < k=" +
                                    std::to_string(opts.k));

    Rng rng(seed);
    LloydOutcome best;
    best.sse = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < opts.restarts; ++r) {
        LloydOutcome run = lloyd_once(points, r, rng, opts);
        if (run.sse < best.sse) best = std::move(run);
    }

    KMeansResult result;
    result.centroids = std::move(best.centroids);
    result.assignments = std::move(best.assignments);
    result.sse = best.sse;
    std::size_t lowest = 0;
    double lowest_mean = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < result.centroids.size(); ++c) {
        const double mean =
            std::accumulate(result.centroids[c].begin(), result.centroids[c].end(), 0.0) /
            static_cast<double>(result.centroids[c].size());
        if (mean < lowest_mean) {
            lowest_mean = mean;
            lowest = c;
        }
    }
    result.certain_centroid_index = lowest;
    return result;
}

std::map<std::string, int> weak_labels(const KMeansResult& result,
                                       const std::vector<std::string>& scene_ids) {
    if (scene_ids.size() != result.assignments.size())
        fail("ArityMismatch", "scene_ids and assignments differ in length");
    std::map<std::string, int> out;
    for (std::size_t i = 0; i < scene_ids.size(); ++i)
        out[scene_ids[i]] = result.assignments[i] == result.certain_centroid_index ? 0 : 1;
    return out;
}

void oversample_minority(FeatureMatrix& x, std::vector<int>& y, std::uint64_t seed) {
    std::size_t n0 = 0, n1 = 0;
    for (int label : y) (label == 0 ? n0 : n1)++;
    if (n0 == 0 || n1 == 0) fail("SingleClass", "oversampling needs both classes");
    if (n0 == n1) return;
    const int minority = n0 < n1 ? 0 : 1;
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (y[i] == minority) pool.push_back(i);
    Rng rng(seed);
    std::size_t deficit = (n0 < n1 ? n1 - n0 : n0 - n1);
    while (deficit-- > 0) {
        const std::size_t pick = pool[rng.index(pool.size())];
        x.push_back(x[pick]);
        y.push_back(minority);
    }
}

ClassifierKind classifier_kind_from_string(const std::string& s) {
    if (s == "lr") return ClassifierKind::LR;
    if (s == "knn") return ClassifierKind::KNN;
    if (s == "mlp") return ClassifierKind::MLP;
    if (s == "rf") return ClassifierKind::RF;
    fail("UnknownClassifier", "'" + s + "'");
}

std::string to_string(ClassifierKind kind) {
    switch (kind) {
        case ClassifierKind::LR: return "lr";
        case ClassifierKind::KNN: return "knn";
        case ClassifierKind::MLP: return "mlp";
        case ClassifierKind::RF: return "rf";
    }
    return "lr";
}

namespace {

struct Standardizer {
    std::vector<double> mean, stddev;

    void fit(const FeatureMatrix& x) {
        const std::size_t p = x[0].size();
        mean.assign(p, 0.0);
        stddev.assign(p, 0.0);
        for (const auto& row : x)
            for (std::size_t j = 0; j < p; ++j) mean[j] += row[j];
        for (std::size_t j = 0; j < p; ++j) mean[j] /= static_cast<double>(x.size());
        for (const auto& row : x)
            for (std::size_t j = 0; j < p; ++j)
                stddev[j] += (row[j] - mean[j]) * (row[j] - mean[j]);
        for (std::size_t j = 0; j < p; ++j) {
            stddev[j] = std::sqrt(stddev[j] / static_cast<double>(x.size()));
            if (stddev[j] == 0.0) stddev[j] = 1.0;
        }
    }

    FeatureRow apply(const FeatureRow& row) const {
        FeatureRow out(row.size());
        for (std::size_t j = 0; j < row.size(); ++j) out[j] = (row[j] - mean[j]) / stddev[j];
        return out;
    }

    json to_json() const { return {{"mean", mean}, {"stddev", stddev}}; }
    void from_json(const json& j) {
        mean = j.at("mean").get<std::vector<double>>();
        stddev = j.at("stddev").get<std::vector<double>>();
    }
};

void check_inputs(const FeatureMatrix& x, const std::vector<int>& y) {
    if (x.empty() || x.size() != y.size()) fail("EmptyInput", "training data");
    for (const auto& row : x)
        for (double v : row)
            if (!std::isfinite(v)) fail("NonFiniteFeature", "non-finite value in feature row");
    bool has0 = false, has1 = false;
    for (int label : y) (label == 0 ? has0 : has1) = true;
    if (!has0 || !has1) fail("SingleClass", "training labels contain a single class");
}

class LrClassifier : public Classifier {
public:
    Standardizer std_;
    bool standardize_ = true;
    std::vector<double> w_;
    double b_ = 0.0;

    int predict(const FeatureRow& row) const override {
        const FeatureRow z = standardize_ ? std_.apply(row) : row;
        double acc = b_;
        for (std::size_t j = 0; j < w_.size(); ++j) acc += w_[j] * z[j];
        return acc >= 0.0 ? 1 : 0;
    }

    std::string serialize() const override {
        json j = {{"kind", "lr"},
                  {"standardize", standardize_},
                  {"standardizer", std_.to_json()},
                  {"w", w_},
                  {"b", b_}};
        return j.dump();
    }

    void fit(const FeatureMatrix& x_raw, const std::vector<int>& y, const Hyperparams& hp) {
        standardize_ = hp.get("standardize", 1.0) != 0.0;
        FeatureMatrix x = x_raw;
        if (standardize_) {
            std_.fit(x_raw);
            for (auto& row : x) row = std_.apply(row);
        }
        const std::size_t n = x.size();
        const std::size_t p = x[0].size();
        w_.assign(p, 0.0);
        b_ = 0.0;

        std::vector<double> sample_w(n, 1.0);
        if (hp.get("balanced", 0.0) != 0.0) {
            double n0 = 0, n1 = 0;
            for (int label : y) (label == 0 ? n0 : n1) += 1.0;
            const double w0 = static_cast<double>(n) / (2.0 * n0);
            const double w1 = static_cast<double>(n) / (2.0 * n1);
            for (std::size_t i = 0; i < n; ++i) sample_w[i] = y[i] == 0 ? w0 : w1;
        }

        const double lr = hp.get("lr", 0.5);
        const double l2 = hp.get("l2", 0.0);
        const std::size_t max_iter = static_cast<std::size_t>(hp.get("max_iter", 5000));
        const double tol = hp.get("tol", 1e-8);

        std::vector<double> gw(p);
        for (std::size_t iter = 0; iter < max_iter; ++iter) {
            std::fill(gw.begin(), gw.end(), 0.0);
            double gb = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double z = b_;
                for (std::size_t j = 0; j < p; ++j) z += w_[j] * x[i][j];
                const double err = sample_w[i] * (nn::sigmoid(z) - static_cast<double>(y[i]));
                for (std::size_t j = 0; j < p; ++j) gw[j] += err * x[i][j];
                gb += err;
            }
            double norm2 = gb * gb;
            for (std::size_t j = 0; j < p; ++j) {
                gw[j] = gw[j] / static_cast<double>(n) + l2 * w_[j];
                norm2 += gw[j] * gw[j];
            }
            gb /= static_cast<double>(n);
            for (std::size_t j = 0; j < p; ++j) w_[j] -= lr * gw[j];
            b_ -= lr * gb;
            if (std::sqrt(norm2) < tol) break;
        }
    }
};

class KnnClassifier : public Classifier {
public:
    Standardizer std_;
    FeatureMatrix train_;  // standardized
    std::vector<int> labels_;
    std::size_t k_ = 5;

    int predict(const FeatureRow& row) const override {
        const FeatureRow z = std_.apply(row);
        // (distance, training index); ties broken by lower training index.
        std::vector<std::pair<double, std::size_t>> order;
        order.reserve(train_.size());
        for (std::size_t i = 0; i < train_.size(); ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < z.size(); ++j) {
                const double d = z[j] - train_[i][j];
                acc += d * d;
            }
            order.emplace_back(acc, i);
        }
        std::sort(order.begin(), order.end());
        int votes = 0;
        const std::size_t use = std::min(k_, order.size());
        for (std::size_t i = 0; i < use; ++i) votes += labels_[order[i].second] == 1 ? 1 : -1;
        return votes > 0 ? 1 : 0;
    }

    std::string serialize() const override {
        json j = {{"kind", "knn"},
                  {"standardizer", std_.to_json()},
                  {"train", train_},
                  {"labels", labels_},
                  {"k", k_}};
        return j.dump();
    }
};

class MlpClassifier : public Classifier {
public:
    Standardizer std_;
    nn::DenseLayer hidden_, out_;

    int predict(const FeatureRow& row) const override {
        const FeatureRow z = std_.apply(row);
        kernels::Matrix x(1, z.size());
        x.data = z;
        auto h = nn::dense_forward(hidden_, x, nn::Activation::ReLU);
        auto o = nn::dense_forward(out_, h, nn::Activation::Sigmoid);
        return o.data[0] >= 0.5 ? 1 : 0;
    }

    std::string serialize() const override {
        json j = {{"kind", "mlp"},
                  {"standardizer", std_.to_json()},
                  {"hidden_w", hidden_.w.data},
                  {"hidden_b", hidden_.b},
                  {"hidden_in", hidden_.w.rows},
                  {"hidden_out", hidden_.w.cols},
                  {"out_w", out_.w.data},
                  {"out_b", out_.b}};
        return j.dump();
    }

    void fit(const FeatureMatrix& x_raw, const std::vector<int>& y, const Hyperparams& hp,
             std::uint64_t seed) {
        std_.fit(x_raw);
        const std::size_t n = x_raw.size();
        const std::size_t p = x_raw[0].size();
        const std::size_t hidden = static_cast<std::size_t>(hp.get("hidden", 32));
        const std::size_t epochs = static_cast<std::size_t>(hp.get("epochs", 300));

        Rng rng(seed);
        hidden_ = nn::DenseLayer(p, hidden);
        out_ = nn::DenseLayer(hidden, 1);
        hidden_.init(rng);
        out_.init(rng);

        kernels::Matrix x(n, p);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < p; ++j) x(i, j) = std_.apply(x_raw[i])[j];

        nn::Adam adam;
        adam.lr = hp.get("lr", 1e-2);
        adam.weight_decay = 0.0;

        for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
            nn::DenseCache c1, c2;
            auto h = nn::dense_forward(hidden_, x, nn::Activation::ReLU, &c1);
            auto o = nn::dense_forward(out_, h, nn::Activation::Sigmoid, &c2);
            // dBCE/d(sigmoid output) combined with the sigmoid derivative in
            // dense_backward would double-apply; feed dL/d(out) directly.
            kernels::Matrix d_out(n, 1);
            for (std::size_t i = 0; i < n; ++i) {
                const double pr = std::clamp(o(i, 0), 1e-12, 1.0 - 1e-12);
                const double t = static_cast<double>(y[i]);
                d_out(i, 0) = (-t / pr + (1.0 - t) / (1.0 - pr)) / static_cast<double>(n);
            }
            nn::DenseGrad g2, g1;
            auto dh = nn::dense_backward(out_, nn::Activation::Sigmoid, c2, d_out, g2);
            nn::dense_backward(hidden_, nn::Activation::ReLU, c1, dh, g1);

            std::vector<double> params, grads;
            auto gather = [&](std::vector<double>& dst, const std::vector<double>& src) {
                dst.insert(dst.end(), src.begin(), src.end());
            };
            gather(params, hidden_.w.data);
            gather(params, hidden_.b);
            gather(params, out_.w.data);
            gather(params, out_.b);
            gather(grads, g1.dw.data);
            gather(grads, g1.db);
            gather(grads, g2.dw.data);
            gather(grads, g2.db);
            adam.step(params, grads);
            std::size_t off = 0;
            auto scatter = [&](std::vector<double>& dst) {
                std::copy(params.begin() + off, params.begin() + off + dst.size(), dst.begin());
                off += dst.size();
            };
            scatter(hidden_.w.data);
            scatter(hidden_.b);
            scatter(out_.w.data);
            scatter(out_.b);
        }
    }
};

struct TreeNode {
    int feature = -1;        // -1 for leaf
    double threshold = 0.0;
    int left = -1, right = -1;
    int label = 0;
};

class RfClassifier : public Classifier {
public:
    std::vector<std::vector<TreeNode>> trees_;

    int predict(const FeatureRow& row) const override {
        int votes = 0;
        for (const auto& tree : trees_) {
            int idx = 0;
            while (tree[idx].feature >= 0)
                idx = row[tree[idx].feature] <= tree[idx].threshold ? tree[idx].left
                                                                    : tree[idx].right;
            votes += tree[idx].label == 1 ? 1 : -1;
        }
        return votes > 0 ? 1 : 0;
    }

    std::string serialize() const override {
        json trees = json::array();
        for (const auto& tree : trees_) {
            json nodes = json::array();
            for (const auto& nd : tree)
                nodes.push_back({{"f", nd.feature},
                                 {"t", nd.threshold},
                                 {"l", nd.left},
                                 {"r", nd.right},
                                 {"y", nd.label}});
            trees.push_back(nodes);
        }
        json j = {{"kind", "rf"}, {"trees", trees}};
        return j.dump();
    }

    void fit(const FeatureMatrix& x, const std::vector<int>& y, const Hyperparams& hp,
             std::uint64_t seed) {
        const std::size_t n_trees = static_cast<std::size_t>(hp.get("n_trees", 50));
        const std::size_t max_depth = static_cast<std::size_t>(hp.get("max_depth", 8));
        const std::size_t min_leaf = static_cast<std::size_t>(hp.get("min_leaf", 1));
        const std::size_t p = x[0].size();
        const std::size_t mtry =
            std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(p))));

        Rng rng(seed);
        trees_.clear();
        for (std::size_t t = 0; t < n_trees; ++t) {
            std::vector<std::size_t> sample(x.size());
            for (auto& idx : sample) idx = rng.index(x.size());
            std::vector<TreeNode> tree;
            grow(tree, x, y, sample, 0, max_depth, min_leaf, mtry, rng);
            trees_.push_back(std::move(tree));
        }
    }

private:
    static int majority(const std::vector<int>& y, const std::vector<std::size_t>& idx) {
        int votes = 0;
        for (std::size_t i : idx) votes += y[i] == 1 ? 1 : -1;
        return votes > 0 ? 1 : 0;
    }

    static double gini(std::size_t c0, std::size_t c1) {
        const double total = static_cast<double>(c0 + c1);
        if (total == 0.0) return 0.0;
        const double p0 = static_cast<double>(c0) / total;
        const double p1 = static_cast<double>(c1) / total;
        return 1.0 - p0 * p0 - p1 * p1;
    }

    int grow(std::vector<TreeNode>& tree, const FeatureMatrix& x, const std::vector<int>& y,
             const std::vector<std::size_t>& idx, std::size_t depth, std::size_t max_depth,
             std::size_t min_leaf, std::size_t mtry, Rng& rng) {
        const int node_id = static_cast<int>(tree.size());
        tree.emplace_back();

        std::size_t c0 = 0, c1 = 0;
        for (std::size_t i : idx) (y[i] == 0 ? c0 : c1)++;
        if (depth >= max_depth || c0 == 0 || c1 == 0 || idx.size() < 2 * min_leaf) {
            tree[node_id].label = majority(y, idx);
            return node_id;
        }

        std::vector<std::size_t> features(x[0].size());
        std::iota(features.begin(), features.end(), 0);
        rng.shuffle(features);
        features.resize(std::min(mtry, features.size()));

        double best_gain = 0.0;
        int best_feature = -1;
        double best_threshold = 0.0;
        const double parent = gini(c0, c1);
        for (std::size_t f : features) {
            std::vector<std::pair<double, int>> vals;
            vals.reserve(idx.size());
            for (std::size_t i : idx) vals.emplace_back(x[i][f], y[i]);
            std::sort(vals.begin(), vals.end());
            std::size_t l0 = 0, l1 = 0;
            for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
                (vals[i].second == 0 ? l0 : l1)++;
                if (vals[i].first == vals[i + 1].first) continue;
                const std::size_t left_n = l0 + l1;
                const std::size_t right_n = vals.size() - left_n;
                if (left_n < min_leaf || right_n < min_leaf) continue;
                const double child =
                    (static_cast<double>(left_n) * gini(l0, l1) +
                     static_cast<double>(right_n) * gini(c0 - l0, c1 - l1)) /
                    static_cast<double>(vals.size());
                const double gain = parent - child;
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feature = static_cast<int>(f);
                    best_threshold = 0.5 * (vals[i].first + vals[i + 1].first);
                }
            }
        }

        if (best_feature < 0) {
            tree[node_id].label = majority(y, idx);
            return node_id;
        }

        std::vector<std::size_t> left, right;
        for (std::size_t i : idx)
            (x[i][best_feature] <= best_threshold ? left : right).push_back(i);
        tree[node_id].feature = best_feature;
        tree[node_id].threshold = best_threshold;
        tree[node_id].left = grow(tree, x, y, left, depth + 1, max_depth, min_leaf, mtry, rng);
        tree[node_id].right = grow(tree, x, y, right, depth + 1, max_depth, min_leaf, mtry, rng);
        return node_id;
    }
};

class BaggedClassifier : public Classifier {
public:
    std::vector<std::unique_ptr<Classifier>> members_;

    int predict(const FeatureRow& row) const override {
        int votes = 0;
        for (const auto& m : members_) votes += m->predict(row) == 1 ? 1 : -1;
        return votes > 0 ? 1 : 0;  // tie routes to certain (0)
    }

    std::string serialize() const override {
        json members = json::array();
        for (const auto& m : members_) members.push_back(json::parse(m->serialize()));
        json j = {{"kind", "bagged"}, {"members", members}};
        return j.dump();
    }
};

std::unique_ptr<Classifier> deserialize(const json& j);

std::unique_ptr<Classifier> deserialize(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "lr") {
        auto m = std::make_unique<LrClassifier>();
        m->standardize_ = j.at("standardize").get<bool>();
        m->std_.from_json(j.at("standardizer"));
        m->w_ = j.at("w").get<std::vector<double>>();
        m->b_ = j.at("b").get<double>();
        return m;
    }
    if (kind == "knn") {
        auto m = std::make_unique<KnnClassifier>();
        m->std_.from_json(j.at("standardizer"));
        m->train_ = j.at("train").get<FeatureMatrix>();
        m->labels_ = j.at("labels").get<std::vector<int>>();
        m->k_ = j.at("k").get<std::size_t>();
        return m;
    }
    if (kind == "mlp") {
        auto m = std::make_unique<MlpClassifier>();
        m->std_.from_json(j.at("standardizer"));
        m->hidden_ = nn::DenseLayer(j.at("hidden_in").get<std::size_t>(),
                                    j.at("hidden_out").get<std::size_t>());
        m->hidden_.w.data = j.at("hidden_w").get<std::vector<double>>();
        m->hidden_.b = j.at("hidden_b").get<std::vector<double>>();
        m->out_ = nn::DenseLayer(j.at("hidden_out").get<std::size_t>(), 1);
        m->out_.w.data = j.at("out_w").get<std::vector<double>>();
        m->out_.b = j.at("out_b").get<std::vector<double>>();
        return m;
    }
    if (kind == "rf") {
        auto m = std::make_unique<RfClassifier>();
        for (const auto& tree_json : j.at("trees")) {
            std::vector<TreeNode> tree;
            for (const auto& nd : tree_json) {
                TreeNode node;
                node.feature = nd.at("f").get<int>();
                node.threshold = nd.at("t").get<double>();
                node.left = nd.at("l").get<int>();
                node.right = nd.at("r").get<int>();
                node.label = nd.at("y").get<int>();
                tree.push_back(node);
            }
            m->trees_.push_back(std::move(tree));
        }
        return m;
    }
    if (kind == "bagged") {
        auto m = std::make_unique<BaggedClassifier>();
        for (const auto& member : j.at("members")) m->members_.push_back(deserialize(member));
        return m;
    }
    fail("UnknownClassifier", "kind '" + kind + "' in model file");
}

}  // namespace

std::unique_ptr<Classifier> train_classifier(ClassifierKind kind, const FeatureMatrix& x,
                                             const std::vector<int>& y, const Hyperparams& hp,
                                             std::uint64_t seed) {
    check_inputs(x, y);
    switch (kind) {
        case ClassifierKind::LR: {
            auto m = std::make_unique<LrClassifier>();
            m->fit(x, y, hp);
            return m;
        }
        case ClassifierKind::KNN: {
            auto m = std::make_unique<KnnClassifier>();
            m->std_.fit(x);
            for (const auto& row : x) m->train_.push_back(m->std_.apply(row));
            m->labels_ = y;
            m->k_ = static_cast<std::size_t>(hp.get("k", 5));
            return m;
        }
        case ClassifierKind::MLP: {
            auto m = std::make_unique<MlpClassifier>();
            m->fit(x, y, hp, seed);
            return m;
        }
        case ClassifierKind::RF: {
            auto m = std::make_unique<RfClassifier>();
            m->fit(x, y, hp, seed);
            return m;
        }
    }
    fail("UnknownClassifier", "invalid kind");
}

std::unique_ptr<Classifier> bagging_ensemble(ClassifierKind kind, const FeatureMatrix& x,
                                             const std::vector<int>& y, const Hyperparams& hp,
                                             std::size_t n_estimators, std::uint64_t seed) {
    check_inputs(x, y);
    if (n_estimators == 0) fail("EmptyInput", "n_estimators must be positive");
    auto ensemble = std::make_unique<BaggedClassifier>();
    Rng rng(seed);
    for (std::size_t e = 0; e < n_estimators; ++e) {
        FeatureMatrix bx;
        std::vector<int> by;
        // Resample until both classes are present; a single-class bootstrap
        // cannot train a member.
        for (int attempt = 0; attempt < 100; ++attempt) {
            bx.clear();
            by.clear();
            for (std::size_t i = 0; i < x.size(); ++i) {
                const std::size_t pick = rng.index(x.size());
                bx.push_back(x[pick]);
                by.push_back(y[pick]);
            }
            bool has0 = false, has1 = false;
            for (int label : by) (label == 0 ? has0 : has1) = true;
            if (has0 && has1) break;
        }
        ensemble->members_.push_back(train_classifier(kind, bx, by, hp, rng.next_u64()));
    }
    return ensemble;
}

void save_classifier(const Classifier& model, const std::string& path) {
    json wrapper = {{"format", "grace-classifier"},
                    {"version", 1},
                    {"model", json::parse(model.serialize())}};
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("FileNotFound", "cannot write " + path);
    out << wrapper.dump(2) << '\n';
}

std::unique_ptr<Classifier> load_classifier(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("FileNotFound", "cannot open " + path);
    json wrapper = json::parse(in);
    if (wrapper.value("format", "") != "grace-classifier")
        fail("BadModelFile", path + " is not a classifier file");
    return deserialize(wrapper.at("model"));
}

}  // namespace grace::uncertainty
