#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "grace/data.hpp"

namespace grace::llm {

// One provider capability: score a prompt against candidate answers.
struct Completion {
    std::string answer;
    double probability = 0.0;
};

class Provider {
public:
    virtual ~Provider() = default;
    virtual std::string id() const = 0;
    virtual std::vector<Completion> complete(const std::string& prompt,
                                             const std::vector<std::string>& options,
                                             std::size_t top_k) = 0;
};

struct ProviderConfig {
    std::string endpoint;
    std::string model;
    std::string api_key_env = "GRACE_API_KEY";
    std::size_t top_k = 5;
    double temperature = 0.0;
    std::vector<std::string> stop_list;
    std::size_t max_retries = 3;
    std::size_t backoff_ms = 250;
    std::size_t max_in_flight = 4;
};

ProviderConfig load_provider_config(const std::string& path);

// Table-driven offline provider: maps a prompt key (exact prompt text, or a
// substring when keyed with "contains:") to a scripted completion list.
class MockProvider : public Provider {
public:
    explicit MockProvider(std::string id = "mock") : id_(std::move(id)) {}

    void script(const std::string& prompt_key, std::vector<Completion> completions);
    std::size_t calls() const { return calls_; }

    std::string id() const override { return id_; }
    std::vector<Completion> complete(const std::string& prompt,
                                     const std::vector<std::string>& options,
                                     std::size_t top_k) override;

private:
    std::string id_;
    std::map<std::string, std::vector<Completion>> table_;
    std::size_t calls_ = 0;
};

// HTTP provider speaking a minimal JSON protocol with retry/backoff.
std::unique_ptr<Provider> make_http_provider(const ProviderConfig& config);

// Stable content hash (FNV-1a, hex) used as the cache key.
std::string cache_key(const std::string& prompt, const std::string& provider_id,
                      const std::string& params);

// Append-only JSONL response cache; writes are mutex-guarded and flushed per
// record so concurrent scoring threads can share one cache.
class ResponseCache {
public:
    explicit ResponseCache(std::string path);

    std::optional<std::vector<Completion>> lookup(const std::string& key) const;
    void store(const std::string& key, const std::string& provider_id, const std::string& prompt,
               const std::vector<Completion>& completions);

private:
    std::string path_;
    mutable std::mutex mutex_;
    std::map<std::string, std::vector<Completion>> entries_;
};

struct ScoredOptions {
    std::vector<std::pair<int, double>> entries;  // (score 1..5, probability)
};

// Deterministic textual scene summary for one queried action.
std::string describe_scene(const data::SceneRecord& scene,
                           const std::vector<std::string>& feature_names,
                           const std::string& action);

ScoredOptions query_action_score(Provider& provider, ResponseCache* cache,
                                 const data::SceneRecord& scene,
                                 const std::vector<std::string>& feature_names,
                                 const std::string& action);

// Probability-weighted mean score, renormalized over returned options.
double expected_score(const ScoredOptions& options);

// Score all scene/action pairs; at most `max_in_flight` provider calls run
// concurrently.
data::ScoreTable score_dataset(Provider& provider, ResponseCache* cache,
                               const data::Dataset& ds, std::size_t max_in_flight = 4);

// Two-shot explanation labeling. Exemplars per category: one for each pole.
struct CategoryExemplars {
    std::string positive_text;
    std::string negative_text;
};

using ExemplarConfig = std::map<std::string, CategoryExemplars>;
ExemplarConfig default_exemplars();
ExemplarConfig load_exemplars(const std::string& path);

// Returns -1 / 0 / +1 for one category of one free-text explanation.
// Empty text maps to 0 without a provider call.
int label_explanation(Provider& provider, const std::string& text, const std::string& category,
                      const ExemplarConfig& exemplars);

// Affine map {-1,0,1} -> {0,0.5,1} over all 7 categories.
data::ExplanationVector normalize_explanation(const std::vector<int>& raw);
std::vector<int> denormalize_explanation(const data::ExplanationVector& ev);

// Fraction of identical cells between two label matrices of equal shape.
double label_agreement(const std::vector<std::vector<int>>& manual,
                       const std::vector<std::vector<int>>& automatic);

}  // namespace grace::llm
