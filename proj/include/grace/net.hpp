#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "grace/nn.hpp"

namespace grace::net {

using kernels::Matrix;

enum class Variant { GRACE, GRACE_NOISED, AE, VAE, DAE };
Variant variant_from_string(const std::string& s);
std::string to_string(Variant v);

struct NetConfig {
    std::size_t n = 9;   // action count
    std::size_t m = 7;   // explanation dims
    std::size_t branch_dim = 64;
    std::vector<std::size_t> shared_dims = {256, 64};
    std::size_t latent_dim = 32;
    double alpha = 0.6;
    double lr = 1e-3;
    double lr_decay_factor = 0.3;
    std::size_t lr_patience = 10;
    std::size_t batch_size = 32;
    std::size_t max_epochs = 200;
    double early_stop_epsilon = 1e-4;
    std::size_t early_stop_patience = 20;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double weight_decay = 1e-8;
    double noise_p = 0.2;  // DAE and GRACE_NOISED corruption probability
    std::uint64_t seed = 0;
};

struct TrainRow {
    std::vector<double> s_llm;    // n, raw [1,5]
    std::vector<double> s_human;  // n, raw [1,5]
    std::vector<double> e_human;  // m, {0,0.5,1}
};

struct TrainMeta {
    std::size_t epochs_run = 0;
    std::size_t best_epoch = 0;
    double best_val_loss = 0.0;
    std::vector<double> lr_trace;        // learning rate used at each epoch
    std::vector<double> val_loss_trace;
};

struct GraceModel {
    Variant variant = Variant::GRACE;
    NetConfig cfg;
    std::vector<nn::DenseLayer> layers;
    TrainMeta meta;
    bool trained = false;

    bool has_condition() const {
        return variant == Variant::GRACE || variant == Variant::GRACE_NOISED;
    }
};

// Fresh randomly initialized model of the requested variant.
GraceModel init_model(Variant variant, const NetConfig& cfg);

struct ForwardResult {
    std::vector<double> s_raw;       // predicted scores mapped back to [1,5]
    std::vector<double> s_internal;  // [0,1] scale
    std::vector<double> e_prob;      // per-category probabilities
    std::vector<double> latent;
};

// Single-sample forward. For score-only variants e is ignored and c must be 0.
// VAE decodes from the posterior mean.
ForwardResult forward(const GraceModel& model, double c, const std::vector<double>& s_raw,
                      const std::vector<double>& e);

// Combined training loss on the internal scale:
//   alpha * MSE(s_tgt, s_pred) + (1 - alpha) * BCE(e_tgt, e_pred)
// means over batch and dimensions; BCE probabilities clamped at 1e-7.
double combined_loss(const Matrix& s_pred, const Matrix& e_pred, const Matrix& s_tgt,
                     const Matrix& e_tgt, double alpha);

// A fully assembled minibatch on the internal scale.
struct Batch {
    Matrix c;      // B x 1, condition flags (unused by score-only variants)
    Matrix s_in;   // B x n
    Matrix e_in;   // B x m
    Matrix s_tgt;  // B x n
    Matrix e_tgt;  // B x m
    Matrix eps;    // B x latent_dim, VAE reparameterization noise
};

struct Gradients {
    std::vector<nn::DenseGrad> layers;
};

// Forward + analytic gradients of the batch-mean loss. Returns the loss.
// Pass nullptr to skip the backward pass.
double forward_backward(const GraceModel& model, const Batch& batch, Gradients* grads);

GraceModel train(Variant variant, const std::vector<TrainRow>& train_rows,
                 const std::vector<TrainRow>& val_rows, const NetConfig& cfg);

std::vector<double> correct_scores(const GraceModel& model, const std::vector<double>& s_llm,
                                   const std::vector<double>& e_human);

struct ExplanationRank {
    std::size_t category = 0;
    std::string category_slug;
    std::string component;  // pole name
    double confidence = 0.0;
    double probability = 0.0;  // raw p for the positive pole
};

std::vector<ExplanationRank> generate_explanation(const GraceModel& model,
                                                  const std::vector<double>& s_human,
                                                  std::size_t top_r = 3);

// Each entry independently replaced by 0 or 1 (equal odds) with probability p.
std::vector<double> salt_pepper(const std::vector<double>& v, double p, Rng& rng);

void save_model(const GraceModel& model, const std::string& path);
GraceModel load_model(const std::string& path);

inline double to_internal(double raw) { return (raw - 1.0) / 4.0; }
inline double to_raw(double internal) { return 1.0 + 4.0 * internal; }

}  // namespace grace::net
