#include "grace/net.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "grace/data.hpp"
#include "grace/error.hpp"

#include <json.hpp>

namespace grace::net {

using json = nlohmann::json;
using nn::Activation;
using nn::DenseCache;
using nn::DenseLayer;

Variant variant_from_string(const std::string& s) {
    if (s == "grace") return Variant::GRACE;
    if (s == "grace-noised") return Variant::GRACE_NOISED;
    if (s == "ae") return Variant::AE;
    if (s == "vae") return Variant::VAE;
    if (s == "dae") return Variant::DAE;
    fail("UnknownVariant", "'" + s + "'");
}

std::string to_string(Variant v) {
    switch (v) {
        case Variant::GRACE: return "grace";
        case Variant::GRACE_NOISED: return "grace-noised";
        case Variant::AE: return "ae";
        case Variant::VAE: return "vae";
        case Variant::DAE: return "dae";
    }
    return "grace";
}

namespace {

// Layer indices for a given variant/config. Conditioned variants carry an
// explanation branch and head; score-only variants do not.
struct Layout {
    std::size_t enc_score = 0;
    std::size_t enc_expl = 0;      // valid only when conditioned
    std::size_t enc_chain = 0;     // first shared encoder layer
    std::size_t chain_len = 0;
    std::size_t latent = 0;
    std::size_t dec_chain = 0;
    std::size_t head_score = 0;
    std::size_t head_expl = 0;     // valid only when conditioned
    std::size_t total = 0;
    bool conditioned = false;
};

Layout layout_for(Variant variant, const NetConfig& cfg) {
    Layout lo;
    lo.conditioned = variant == Variant::GRACE || variant == Variant::GRACE_NOISED;
    lo.chain_len = cfg.shared_dims.size();
    std::size_t idx = 0;
    lo.enc_score = idx++;
    if (lo.conditioned) lo.enc_expl = idx++;
    lo.enc_chain = idx;
    idx += lo.chain_len;
    lo.latent = idx++;
    lo.dec_chain = idx;
    idx += lo.chain_len;
    lo.head_score = idx++;
    if (lo.conditioned) lo.head_expl = idx++;
    lo.total = idx;
    return lo;
}

Matrix concat_cols(const std::vector<const Matrix*>& parts) {
    std::size_t cols = 0;
    for (const auto* p : parts) cols += p->cols;
    Matrix out(parts[0]->rows, cols);
    std::size_t off = 0;
    for (const auto* p : parts) {
        for (std::size_t i = 0; i < p->rows; ++i)
            for (std::size_t j = 0; j < p->cols; ++j) out(i, off + j) = (*p)(i, j);
        off += p->cols;
    }
    return out;
}

Matrix slice_cols(const Matrix& m, std::size_t begin, std::size_t count) {
    Matrix out(m.rows, count);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < count; ++j) out(i, j) = m(i, begin + j);
    return out;
}

constexpr double kBceClamp = 1e-7;

double bce_mean(const Matrix& pred, const Matrix& tgt) {
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const double p = std::clamp(pred.data[i], kBceClamp, 1.0 - kBceClamp);
        const double t = tgt.data[i];
        acc += -(t * std::log(p) + (1.0 - t) * std::log(1.0 - p));
    }
    return acc / static_cast<double>(pred.data.size());
}

double mse_mean(const Matrix& pred, const Matrix& tgt) {
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const double d = pred.data[i] - tgt.data[i];
        acc += d * d;
    }
    return acc / static_cast<double>(pred.data.size());
}

}  // namespace

GraceModel init_model(Variant variant, const NetConfig& cfg) {
    if (cfg.alpha < 0.0 || cfg.alpha > 1.0) fail("InvalidSpec", "alpha outside [0,1]");
    if (cfg.n == 0 || cfg.m == 0 || cfg.latent_dim == 0 || cfg.shared_dims.empty())
        fail("InvalidSpec", "all dims must be >= 1");

    GraceModel model;
    model.variant = variant;
    model.cfg = cfg;
    const Layout lo = layout_for(variant, cfg);
    model.layers.resize(lo.total);

    const std::size_t B = cfg.branch_dim;
    model.layers[lo.enc_score] = DenseLayer(cfg.n, B);
    std::size_t enc_in = B;
    if (lo.conditioned) {
        model.layers[lo.enc_expl] = DenseLayer(cfg.m, B);
        enc_in = 1 + 2 * B;
    }
    std::size_t prev = enc_in;
    for (std::size_t i = 0; i < lo.chain_len; ++i) {
        model.layers[lo.enc_chain + i] = DenseLayer(prev, cfg.shared_dims[i]);
        prev = cfg.shared_dims[i];
    }
    const std::size_t latent_out = variant == Variant::VAE ? 2 * cfg.latent_dim : cfg.latent_dim;
    model.layers[lo.latent] = DenseLayer(prev, latent_out);

    prev = lo.conditioned ? 1 + cfg.latent_dim : cfg.latent_dim;
    for (std::size_t i = 0; i < lo.chain_len; ++i) {
        const std::size_t out = cfg.shared_dims[lo.chain_len - 1 - i];
        model.layers[lo.dec_chain + i] = DenseLayer(prev, out);
        prev = out;
    }
    model.layers[lo.head_score] = DenseLayer(prev, cfg.n);
    if (lo.conditioned) model.layers[lo.head_expl] = DenseLayer(prev, cfg.m);

    Rng rng(cfg.seed);
    for (auto& layer : model.layers) layer.init(rng);
    return model;
}

double combined_loss(const Matrix& s_pred, const Matrix& e_pred, const Matrix& s_tgt,
                     const Matrix& e_tgt, double alpha) {
    return alpha * mse_mean(s_pred, s_tgt) + (1.0 - alpha) * bce_mean(e_pred, e_tgt);
}

double forward_backward(const GraceModel& model, const Batch& batch, Gradients* grads) {
    const Layout lo = layout_for(model.variant, model.cfg);
    const NetConfig& cfg = model.cfg;
    const bool cond = lo.conditioned;
    const bool vae = model.variant == Variant::VAE;
    const std::size_t B = batch.s_in.rows;
    if (batch.s_in.cols != cfg.n) fail("ShapeMismatch", "score arity");
    if (cond && batch.e_in.cols != cfg.m) fail("ShapeMismatch", "explanation arity");

    std::vector<DenseCache> caches(lo.total);

    // Encoder.
    Matrix hs = nn::dense_forward(model.layers[lo.enc_score], batch.s_in, Activation::ReLU,
                                  &caches[lo.enc_score]);
    Matrix x;
    if (cond) {
        Matrix he = nn::dense_forward(model.layers[lo.enc_expl], batch.e_in, Activation::ReLU,
                                      &caches[lo.enc_expl]);
        x = concat_cols({&batch.c, &hs, &he});
    } else {
        x = std::move(hs);
    }
    for (std::size_t i = 0; i < lo.chain_len; ++i)
        x = nn::dense_forward(model.layers[lo.enc_chain + i], x, Activation::ReLU,
                              &caches[lo.enc_chain + i]);
    Matrix lat = nn::dense_forward(model.layers[lo.latent], x, Activation::Linear,
                                   &caches[lo.latent]);

    Matrix mu, lv, z;
    if (vae) {
        mu = slice_cols(lat, 0, cfg.latent_dim);
        lv = slice_cols(lat, cfg.latent_dim, cfg.latent_dim);
        z = mu;
        for (std::size_t i = 0; i < z.data.size(); ++i)
            z.data[i] += std::exp(0.5 * lv.data[i]) * batch.eps.data[i];
    } else {
        z = std::move(lat);
    }

    // Decoder.
    Matrix d = cond ? concat_cols({&batch.c, &z}) : z;
    for (std::size_t i = 0; i < lo.chain_len; ++i)
        d = nn::dense_forward(model.layers[lo.dec_chain + i], d, Activation::ReLU,
                              &caches[lo.dec_chain + i]);
    Matrix s_pred = nn::dense_forward(model.layers[lo.head_score], d, Activation::Sigmoid,
                                      &caches[lo.head_score]);
    Matrix e_pred;
    if (cond)
        e_pred = nn::dense_forward(model.layers[lo.head_expl], d, Activation::Sigmoid,
                                   &caches[lo.head_expl]);

    double loss = cond ? combined_loss(s_pred, e_pred, batch.s_tgt, batch.e_tgt, cfg.alpha)
                       : mse_mean(s_pred, batch.s_tgt);
    if (vae) {
        double kl = 0.0;
        for (std::size_t i = 0; i < mu.data.size(); ++i)
            kl += 0.5 * (std::exp(lv.data[i]) + mu.data[i] * mu.data[i] - 1.0 - lv.data[i]);
        loss += kl / static_cast<double>(B);
    }
    if (!grads) return loss;

    grads->layers.assign(lo.total, {});

    const double s_scale = (cond ? cfg.alpha : 1.0) * 2.0 / static_cast<double>(s_pred.data.size());
    Matrix d_s(B, cfg.n);
    for (std::size_t i = 0; i < d_s.data.size(); ++i)
        d_s.data[i] = s_scale * (s_pred.data[i] - batch.s_tgt.data[i]);

    Matrix d_shared = nn::dense_backward(model.layers[lo.head_score], Activation::Sigmoid,
                                         caches[lo.head_score], d_s,
                                         grads->layers[lo.head_score]);
    if (cond) {
        const double e_scale = (1.0 - cfg.alpha) / static_cast<double>(e_pred.data.size());
        Matrix d_e(B, cfg.m);
        for (std::size_t i = 0; i < d_e.data.size(); ++i) {
            const double p = std::clamp(e_pred.data[i], kBceClamp, 1.0 - kBceClamp);
            const double t = batch.e_tgt.data[i];
            d_e.data[i] = e_scale * (-t / p + (1.0 - t) / (1.0 - p));
        }
        Matrix d_from_e = nn::dense_backward(model.layers[lo.head_expl], Activation::Sigmoid,
                                             caches[lo.head_expl], d_e,
                                             grads->layers[lo.head_expl]);
        for (std::size_t i = 0; i < d_shared.data.size(); ++i)
            d_shared.data[i] += d_from_e.data[i];
    }

    for (std::size_t i = lo.chain_len; i-- > 0;)
        d_shared = nn::dense_backward(model.layers[lo.dec_chain + i], Activation::ReLU,
                                      caches[lo.dec_chain + i], d_shared,
                                      grads->layers[lo.dec_chain + i]);

    Matrix d_z = cond ? slice_cols(d_shared, 1, cfg.latent_dim) : std::move(d_shared);

    Matrix d_lat;
    if (vae) {
        // dz/dmu = 1, dz/dlv = 0.5 exp(lv/2) eps, plus the KL gradients.
        d_lat = Matrix(B, 2 * cfg.latent_dim);
        const double inv_b = 1.0 / static_cast<double>(B);
        for (std::size_t i = 0; i < B; ++i) {
            for (std::size_t j = 0; j < cfg.latent_dim; ++j) {
                const double dz = d_z(i, j);
                d_lat(i, j) = dz + inv_b * mu(i, j);
                d_lat(i, cfg.latent_dim + j) =
                    dz * 0.5 * std::exp(0.5 * lv(i, j)) * batch.eps(i, j) +
                    inv_b * 0.5 * (std::exp(lv(i, j)) - 1.0);
            }
        }
    } else {
        d_lat = std::move(d_z);
    }

    Matrix d_enc = nn::dense_backward(model.layers[lo.latent], Activation::Linear,
                                      caches[lo.latent], d_lat, grads->layers[lo.latent]);
    for (std::size_t i = lo.chain_len; i-- > 0;)
        d_enc = nn::dense_backward(model.layers[lo.enc_chain + i], Activation::ReLU,
                                   caches[lo.enc_chain + i], d_enc,
                                   grads->layers[lo.enc_chain + i]);

    if (cond) {
        Matrix d_hs = slice_cols(d_enc, 1, cfg.branch_dim);
        Matrix d_he = slice_cols(d_enc, 1 + cfg.branch_dim, cfg.branch_dim);
        nn::dense_backward(model.layers[lo.enc_score], Activation::ReLU, caches[lo.enc_score],
                           d_hs, grads->layers[lo.enc_score]);
        nn::dense_backward(model.layers[lo.enc_expl], Activation::ReLU, caches[lo.enc_expl],
                           d_he, grads->layers[lo.enc_expl]);
    } else {
        nn::dense_backward(model.layers[lo.enc_score], Activation::ReLU, caches[lo.enc_score],
                           d_enc, grads->layers[lo.enc_score]);
    }
    return loss;
}

ForwardResult forward(const GraceModel& model, double c, const std::vector<double>& s_raw,
                      const std::vector<double>& e) {
    const NetConfig& cfg = model.cfg;
    if (s_raw.size() != cfg.n) fail("ShapeMismatch", "score arity");
    Batch batch;
    batch.c = Matrix(1, 1);
    batch.c(0, 0) = c;
    batch.s_in = Matrix(1, cfg.n);
    for (std::size_t j = 0; j < cfg.n; ++j) batch.s_in(0, j) = to_internal(s_raw[j]);
    batch.e_in = Matrix(1, cfg.m, 0.5);
    if (model.has_condition()) {
        if (e.size() != cfg.m) fail("ShapeMismatch", "explanation arity");
        for (std::size_t j = 0; j < cfg.m; ++j) batch.e_in(0, j) = e[j];
    }
    batch.s_tgt = batch.s_in;
    batch.e_tgt = batch.e_in;
    batch.eps = Matrix(1, cfg.latent_dim, 0.0);  // VAE decodes from the mean

    const Layout lo = layout_for(model.variant, cfg);
    Matrix hs = nn::dense_forward(model.layers[lo.enc_score], batch.s_in, Activation::ReLU);
    Matrix x;
    if (lo.conditioned) {
        Matrix he = nn::dense_forward(model.layers[lo.enc_expl], batch.e_in, Activation::ReLU);
        x = concat_cols({&batch.c, &hs, &he});
    } else {
        x = std::move(hs);
    }
    for (std::size_t i = 0; i < lo.chain_len; ++i)
        x = nn::dense_forward(model.layers[lo.enc_chain + i], x, Activation::ReLU);
    Matrix lat = nn::dense_forward(model.layers[lo.latent], x, Activation::Linear);
    Matrix z = model.variant == Variant::VAE ? slice_cols(lat, 0, cfg.latent_dim)
                                             : std::move(lat);
    ForwardResult result;
    result.latent = z.data;
    Matrix d = lo.conditioned ? concat_cols({&batch.c, &z}) : z;
    for (std::size_t i = 0; i < lo.chain_len; ++i)
        d = nn::dense_forward(model.layers[lo.dec_chain + i], d, Activation::ReLU);
    Matrix s_pred = nn::dense_forward(model.layers[lo.head_score], d, Activation::Sigmoid);
    result.s_internal = s_pred.data;
    for (double v : s_pred.data) result.s_raw.push_back(to_raw(v));
    if (lo.conditioned) {
        Matrix e_pred = nn::dense_forward(model.layers[lo.head_expl], d, Activation::Sigmoid);
        result.e_prob = e_pred.data;
    }
    return result;
}

std::vector<double> salt_pepper(const std::vector<double>& v, double p, Rng& rng) {
    if (p < 0.0 || p > 1.0) fail("OutOfDomain", "noise probability outside [0,1]");
    for (double x : v)
        if (x < 0.0 || x > 1.0) fail("OutOfDomain", "salt_pepper input outside [0,1]");
    std::vector<double> out = v;
    for (auto& x : out)
        if (rng.uniform() < p) x = rng.uniform() < 0.5 ? 0.0 : 1.0;
    return out;
}

namespace {

std::vector<double> flatten_params(const GraceModel& model) {
    std::vector<double> out;
    for (const auto& layer : model.layers) {
        out.insert(out.end(), layer.w.data.begin(), layer.w.data.end());
        out.insert(out.end(), layer.b.begin(), layer.b.end());
    }
    return out;
}

void unflatten_params(GraceModel& model, const std::vector<double>& flat) {
    std::size_t off = 0;
    for (auto& layer : model.layers) {
        std::copy(flat.begin() + off, flat.begin() + off + layer.w.data.size(),
                  layer.w.data.begin());
        off += layer.w.data.size();
        std::copy(flat.begin() + off, flat.begin() + off + layer.b.size(), layer.b.begin());
        off += layer.b.size();
    }
}

std::vector<double> flatten_grads(const Gradients& grads) {
    std::vector<double> out;
    for (const auto& g : grads.layers) {
        out.insert(out.end(), g.dw.data.begin(), g.dw.data.end());
        out.insert(out.end(), g.db.begin(), g.db.end());
    }
    return out;
}

// One training sample on the internal scale.
struct Sample {
    double c = 0.0;
    std::vector<double> s_in, e_in, s_tgt, e_tgt;
};

Batch assemble(const GraceModel& model, const std::vector<Sample>& samples,
               const std::vector<std::size_t>& idx, Rng* noise_rng) {
    const NetConfig& cfg = model.cfg;
    const std::size_t B = idx.size();
    Batch batch;
    batch.c = Matrix(B, 1);
    batch.s_in = Matrix(B, cfg.n);
    batch.e_in = Matrix(B, cfg.m, 0.5);
    batch.s_tgt = Matrix(B, cfg.n);
    batch.e_tgt = Matrix(B, cfg.m, 0.5);
    batch.eps = Matrix(B, cfg.latent_dim, 0.0);

    for (std::size_t r = 0; r < B; ++r) {
        const Sample& s = samples[idx[r]];
        batch.c(r, 0) = s.c;
        std::vector<double> s_in = s.s_in;
        std::vector<double> e_in = s.e_in;
        if (noise_rng && cfg.noise_p > 0.0) {
            if (model.variant == Variant::DAE) {
                s_in = salt_pepper(s_in, cfg.noise_p, *noise_rng);
            } else if (model.variant == Variant::GRACE_NOISED) {
                // Noise the channel the network must reconstruct under this
                // condition: scores under c0, explanations under c1.
                if (s.c == 0.0) s_in = salt_pepper(s_in, cfg.noise_p, *noise_rng);
                else e_in = salt_pepper(e_in, cfg.noise_p, *noise_rng);
            }
        }
        if (noise_rng && model.variant == Variant::VAE)
            for (std::size_t j = 0; j < cfg.latent_dim; ++j)
                batch.eps(r, j) = noise_rng->normal();
        for (std::size_t j = 0; j < cfg.n; ++j) {
            batch.s_in(r, j) = s_in[j];
            batch.s_tgt(r, j) = s.s_tgt[j];
        }
        if (!e_in.empty())
            for (std::size_t j = 0; j < cfg.m; ++j) batch.e_in(r, j) = e_in[j];
        if (!s.e_tgt.empty())
            for (std::size_t j = 0; j < cfg.m; ++j) batch.e_tgt(r, j) = s.e_tgt[j];
    }
    return batch;
}

std::vector<Sample> build_samples(Variant variant, const std::vector<TrainRow>& rows,
                                  const NetConfig& cfg) {
    std::vector<Sample> samples;
    const bool cond = variant == Variant::GRACE || variant == Variant::GRACE_NOISED;
    for (const auto& row : rows) {
        if (row.s_llm.size() != cfg.n || row.s_human.size() != cfg.n)
            fail("ShapeMismatch", "row score arity");
        std::vector<double> llm_internal(cfg.n), human_internal(cfg.n);
        for (std::size_t j = 0; j < cfg.n; ++j) {
            llm_internal[j] = to_internal(row.s_llm[j]);
            human_internal[j] = to_internal(row.s_human[j]);
        }
        if (cond) {
            if (row.e_human.size() != cfg.m) fail("ShapeMismatch", "row explanation arity");
            // Both conditions target (S_human, E_human).
            Sample c0;
            c0.c = 0.0;
            c0.s_in = llm_internal;
            c0.e_in = row.e_human;
            c0.s_tgt = human_internal;
            c0.e_tgt = row.e_human;
            samples.push_back(std::move(c0));
            Sample c1;
            c1.c = 1.0;
            c1.s_in = human_internal;
            c1.e_in = std::vector<double>(cfg.m, 0.5);
            c1.s_tgt = human_internal;
            c1.e_tgt = row.e_human;
            samples.push_back(std::move(c1));
        } else {
            Sample s;
            s.s_in = llm_internal;
            s.s_tgt = human_internal;
            samples.push_back(std::move(s));
        }
    }
    return samples;
}

}  // namespace

GraceModel train(Variant variant, const std::vector<TrainRow>& train_rows,
                 const std::vector<TrainRow>& val_rows, const NetConfig& cfg) {
    if (train_rows.empty() || val_rows.empty()) fail("EmptySplit", "train/validation rows");

    GraceModel model = init_model(variant, cfg);
    const auto train_samples = build_samples(variant, train_rows, cfg);
    const auto val_samples = build_samples(variant, val_rows, cfg);

    std::vector<std::size_t> val_idx(val_samples.size());
    for (std::size_t i = 0; i < val_idx.size(); ++i) val_idx[i] = i;
    // Validation runs clean: no corruption, posterior mean for VAE.
    const Batch val_batch = assemble(model, val_samples, val_idx, nullptr);

    Rng rng(cfg.seed + 0x9e3779b97f4a7c15ull);
    nn::Adam adam;
    adam.beta1 = cfg.beta1;
    adam.beta2 = cfg.beta2;
    adam.weight_decay = cfg.weight_decay;

    std::vector<double> params = flatten_params(model);
    std::vector<double> best_params = params;

    double current_lr = cfg.lr;
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t lr_wait = 0, stop_wait = 0;
    TrainMeta meta;

    std::vector<std::size_t> order(train_samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        meta.lr_trace.push_back(current_lr);
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(start + cfg.batch_size, order.size());
            std::vector<std::size_t> idx(order.begin() + start, order.begin() + end);
            Batch batch = assemble(model, train_samples, idx, &rng);
            Gradients grads;
            const double loss = forward_backward(model, batch, &grads);
            if (!std::isfinite(loss)) fail("DivergedLoss", "non-finite training loss");
            adam.lr = current_lr;
            std::vector<double> flat_grads = flatten_grads(grads);
            adam.step(params, flat_grads);
            unflatten_params(model, params);
        }

        const double val_loss = forward_backward(model, val_batch, nullptr);
        if (!std::isfinite(val_loss)) fail("DivergedLoss", "non-finite validation loss");
        meta.val_loss_trace.push_back(val_loss);
        meta.epochs_run = epoch + 1;

        if (val_loss < best_val - cfg.early_stop_epsilon) {
            best_val = val_loss;
            best_params = params;
            meta.best_epoch = epoch;
            lr_wait = 0;
            stop_wait = 0;
        } else {
            ++lr_wait;
            ++stop_wait;
        }
        if (stop_wait >= cfg.early_stop_patience) break;
        if (lr_wait >= cfg.lr_patience) {
            current_lr *= cfg.lr_decay_factor;
            lr_wait = 0;
        }
    }

    unflatten_params(model, best_params);
    meta.best_val_loss = best_val;
    model.meta = std::move(meta);
    model.trained = true;
    return model;
}

std::vector<double> correct_scores(const GraceModel& model, const std::vector<double>& s_llm,
                                   const std::vector<double>& e_human) {
    if (!model.trained) fail("UntrainedModel", "correct_scores needs a trained model");
    if (!model.has_condition()) fail("UntrainedModel", "variant has no correction mode");
    auto result = forward(model, 0.0, s_llm, e_human);
    for (auto& v : result.s_raw) v = std::clamp(v, 1.0, 5.0);
    return result.s_raw;
}

std::vector<ExplanationRank> generate_explanation(const GraceModel& model,
                                                  const std::vector<double>& s_human,
                                                  std::size_t top_r) {
    if (!model.trained) fail("UntrainedModel", "generate_explanation needs a trained model");
    if (!model.has_condition()) fail("UntrainedModel", "variant has no generation mode");
    const std::vector<double> neutral(model.cfg.m, 0.5);
    auto result = forward(model, 1.0, s_human, neutral);

    std::vector<ExplanationRank> ranks;
    const auto& cats = data::explanation_categories();
    for (std::size_t j = 0; j < result.e_prob.size(); ++j) {
        const double p = result.e_prob[j];
        ExplanationRank r;
        r.category = j;
        r.probability = p;
        r.confidence = std::max(p, 1.0 - p);
        if (j < cats.size()) {
            r.category_slug = cats[j].slug;
            r.component = p >= 0.5 ? cats[j].positive_pole : cats[j].negative_pole;
        } else {
            r.category_slug = "category" + std::to_string(j);
            r.component = p >= 0.5 ? "positive" : "negative";
        }
        if (r.confidence >= 0.55) ranks.push_back(std::move(r));
    }
    std::stable_sort(ranks.begin(), ranks.end(),
                     [](const auto& a, const auto& b) { return a.confidence > b.confidence; });
    if (ranks.size() > top_r) ranks.resize(top_r);
    return ranks;
}

void save_model(const GraceModel& model, const std::string& path) {
    json layers = json::array();
    for (const auto& layer : model.layers)
        layers.push_back({{"in", layer.w.rows},
                          {"out", layer.w.cols},
                          {"w", layer.w.data},
                          {"b", layer.b}});
    json j = {
        {"format", "grace-model"},
        {"version", 1},
        {"variant", to_string(model.variant)},
        {"trained", model.trained},
        {"config",
         {{"n", model.cfg.n},
          {"m", model.cfg.m},
          {"branch_dim", model.cfg.branch_dim},
          {"shared_dims", model.cfg.shared_dims},
          {"latent_dim", model.cfg.latent_dim},
          {"alpha", model.cfg.alpha},
          {"lr", model.cfg.lr},
          {"lr_decay_factor", model.cfg.lr_decay_factor},
          {"lr_patience", model.cfg.lr_patience},
          {"batch_size", model.cfg.batch_size},
          {"max_epochs", model.cfg.max_epochs},
          {"early_stop_epsilon", model.cfg.early_stop_epsilon},
          {"early_stop_patience", model.cfg.early_stop_patience},
          {"beta1", model.cfg.beta1},
          {"beta2", model.cfg.beta2},
          {"weight_decay", model.cfg.weight_decay},
          {"noise_p", model.cfg.noise_p},
          {"seed", model.cfg.seed}}},
        {"meta",
         {{"epochs_run", model.meta.epochs_run},
          {"best_epoch", model.meta.best_epoch},
          {"best_val_loss", model.meta.best_val_loss},
          {"lr_trace", model.meta.lr_trace},
          {"val_loss_trace", model.meta.val_loss_trace}}},
        {"layers", layers},
    };
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("FileNotFound", "cannot write " + path);
    out << j.dump(2) << '\n';
}

GraceModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("FileNotFound", "cannot open " + path);
    json j = json::parse(in);
    if (j.value("format", "") != "grace-model")
        fail("BadModelFile", path + " is not a grace model file");

    GraceModel model;
    model.variant = variant_from_string(j.at("variant").get<std::string>());
    const json& c = j.at("config");
    model.cfg.n = c.at("n").get<std::size_t>();
    model.cfg.m = c.at("m").get<std::size_t>();
    model.cfg.branch_dim = c.at("branch_dim").get<std::size_t>();
    model.cfg.shared_dims = c.at("shared_dims").get<std::vector<std::size_t>>();
    model.cfg.latent_dim = c.at("latent_dim").get<std::size_t>();
    model.cfg.alpha = c.at("alpha").get<double>();
    model.cfg.lr = c.at("lr").get<double>();
    model.cfg.lr_decay_factor = c.at("lr_decay_factor").get<double>();
    model.cfg.lr_patience = c.at("lr_patience").get<std::size_t>();
    model.cfg.batch_size = c.at("batch_size").get<std::size_t>();
    model.cfg.max_epochs = c.at("max_epochs").get<std::size_t>();
    model.cfg.early_stop_epsilon = c.at("early_stop_epsilon").get<double>();
    model.cfg.early_stop_patience = c.at("early_stop_patience").get<std::size_t>();
    model.cfg.beta1 = c.at("beta1").get<double>();
    model.cfg.beta2 = c.at("beta2").get<double>();
    model.cfg.weight_decay = c.at("weight_decay").get<double>();
    model.cfg.noise_p = c.at("noise_p").get<double>();
    model.cfg.seed = c.at("seed").get<std::uint64_t>();
    model.trained = j.value("trained", false);

    const json& meta = j.at("meta");
    model.meta.epochs_run = meta.at("epochs_run").get<std::size_t>();
    model.meta.best_epoch = meta.at("best_epoch").get<std::size_t>();
    model.meta.best_val_loss = meta.at("best_val_loss").get<double>();
    model.meta.lr_trace = meta.at("lr_trace").get<std::vector<double>>();
    model.meta.val_loss_trace = meta.at("val_loss_trace").get<std::vector<double>>();

    for (const auto& lj : j.at("layers")) {
        DenseLayer layer(lj.at("in").get<std::size_t>(), lj.at("out").get<std::size_t>());
        layer.w.data = lj.at("w").get<std::vector<double>>();
        layer.b = lj.at("b").get<std::vector<double>>();
        model.layers.push_back(std::move(layer));
    }
    return model;
}

}  // namespace grace::net
