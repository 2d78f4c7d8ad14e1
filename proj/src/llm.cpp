#include "grace/llm.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "grace/error.hpp"

#include <httplib.h>
#include <json.hpp>

namespace grace::llm {

using json = nlohmann::json;

ProviderConfig load_provider_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("FileNotFound", "cannot open provider config " + path);
    json j = json::parse(in);
    ProviderConfig cfg;
    cfg.endpoint = j.value("endpoint", "");
    cfg.model = j.value("model", "");
    cfg.api_key_env = j.value("api_key_env", cfg.api_key_env);
    cfg.top_k = j.value("top_k", cfg.top_k);
    cfg.temperature = j.value("temperature", cfg.temperature);
    if (j.contains("stop_list")) cfg.stop_list = j["stop_list"].get<std::vector<std::string>>();
    cfg.max_retries = j.value("max_retries", cfg.max_retries);
    cfg.backoff_ms = j.value("backoff_ms", cfg.backoff_ms);
    cfg.max_in_flight = j.value("max_in_flight", cfg.max_in_flight);
    return cfg;
}

void MockProvider::script(const std::string& prompt_key, std::vector<Completion> completions) {
    table_[prompt_key] = std::move(completions);
}

std::vector<Completion> MockProvider::complete(const std::string& prompt,
                                               const std::vector<std::string>& options,
                                               std::size_t top_k) {
    (void)options;
    ++calls_;
    auto it = table_.find(prompt);
    if (it == table_.end()) {
        for (const auto& [key, value] : table_) {
            if (key.rfind("contains:", 0) == 0 && prompt.find(key.substr(9)) != std::string::npos) {
                it = table_.find(key);
                break;
            }
        }
    }
    if (it == table_.end())
        fail("ProviderUnavailable", "mock provider has no script for prompt");
    auto result = it->second;
    if (result.size() > top_k) result.resize(top_k);
    return result;
}

namespace {

class HttpProvider : public Provider {
public:
    explicit HttpProvider(ProviderConfig cfg) : cfg_(std::move(cfg)) {
        if (cfg_.endpoint.empty()) fail("ProviderUnavailable", "empty endpoint");
    }

    std::string id() const override { return cfg_.endpoint + "/" + cfg_.model; }

    std::vector<Completion> complete(const std::string& prompt,
                                     const std::vector<std::string>& options,
                                     std::size_t top_k) override {
        json body = {{"model", cfg_.model},
                     {"prompt", prompt},
                     {"options", options},
                     {"top_k", top_k},
                     {"temperature", cfg_.temperature}};
        if (!cfg_.stop_list.empty()) body["stop"] = cfg_.stop_list;

        httplib::Headers headers;
        if (const char* key = std::getenv(cfg_.api_key_env.c_str()))
            headers.emplace("Authorization", std::string("Bearer ") + key);

        std::string host, path;
        split_endpoint(cfg_.endpoint, host, path);
        httplib::Client client(host);
        client.set_read_timeout(30, 0);

        std::size_t backoff = cfg_.backoff_ms;
        for (std::size_t attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
                backoff *= 2;
            }
            auto res = client.Post(path, headers, body.dump(), "application/json");
            if (!res || res->status >= 500) continue;  // transient
            if (res->status != 200)
                fail("ProviderUnavailable", "provider returned status " +
                                                std::to_string(res->status));
            json reply = json::parse(res->body, nullptr, false);
            if (reply.is_discarded() || !reply.contains("completions"))
                fail("UnparsableResponse", "malformed provider payload");
            std::vector<Completion> out;
            for (const auto& c : reply["completions"])
                out.push_back({c.at("answer").get<std::string>(),
                               c.at("probability").get<double>()});
            return out;
        }
        fail("ProviderUnavailable", "provider unreachable after " +
                                        std::to_string(cfg_.max_retries + 1) + " attempts");
    }

private:
    static void split_endpoint(const std::string& endpoint, std::string& host,
                               std::string& path) {
        auto scheme_end = endpoint.find("://");
        auto path_start = endpoint.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
        if (path_start == std::string::npos) {
            host = endpoint;
            path = "/";
        } else {
            host = endpoint.substr(0, path_start);
            path = endpoint.substr(path_start);
        }
    }

    ProviderConfig cfg_;
};

}  // namespace

std::unique_ptr<Provider> make_http_provider(const ProviderConfig& config) {
    return std::make_unique<HttpProvider>(config);
}

std::string cache_key(const std::string& prompt, const std::string& provider_id,
                      const std::string& params) {
    // FNV-1a 64-bit over the concatenated inputs; stable across runs.
    std::uint64_t h = 14695981039346656037ull;
    auto mix = [&h](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ull;
        }
        h ^= 0x1f;
        h *= 1099511628211ull;
    };
    mix(prompt);
    mix(provider_id);
    mix(params);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

ResponseCache::ResponseCache(std::string path) : path_(std::move(path)) {
    std::ifstream in(path_, std::ios::binary);
    if (!in) return;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) continue;
        std::vector<Completion> comps;
        for (const auto& c : j.at("completions"))
            comps.push_back({c.at("answer").get<std::string>(),
                             c.at("probability").get<double>()});
        entries_[j.at("key").get<std::string>()] = std::move(comps);
    }
}

std::optional<std::vector<Completion>> ResponseCache::lookup(const std::string& key) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void ResponseCache::store(const std::string& key, const std::string& provider_id,
                          const std::string& prompt,
                          const std::vector<Completion>& completions) {
    std::lock_guard lock(mutex_);
    if (entries_.count(key)) return;  // idempotent
    entries_[key] = completions;
    json comps = json::array();
    for (const auto& c : completions)
        comps.push_back({{"answer", c.answer}, {"probability", c.probability}});
    json record = {{"key", key},
                   {"provider", provider_id},
                   {"prompt", prompt},
                   {"completions", comps},
                   {"timestamp", static_cast<std::int64_t>(std::time(nullptr))}};
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    out << record.dump() << '\n';
    out.flush();
}

std::string describe_scene(const data::SceneRecord& scene,
                           const std::vector<std::string>& feature_names,
                           const std::string& action) {
    if (scene.features.size() != feature_names.size())
        fail("UnknownFeature", "feature vector arity " + std::to_string(scene.features.size()) +
                                   " does not match " + std::to_string(feature_names.size()) +
                                   " feature names");
    std::ostringstream out;
    out << "A " << data::to_string(scene.robot_type) << " robot is in a household scene.\n";
    out << "Scene attributes:\n";
    for (std::size_t i = 0; i < feature_names.size(); ++i) {
        const double v = scene.features[i];
        if (v == 0.0 || v == 1.0) {
            out << "- " << feature_names[i] << ": " << (v == 1.0 ? "yes" : "no") << "\n";
        } else {
            out << "- " << feature_names[i] << ": " << v << "\n";
        }
    }
    out << "How socially appropriate would it be for the robot to perform the action '" << action
        << "' in this scene?\n";
    out << "Answer with a single number: 1 (very inappropriate), 2, 3, 4, or 5 (very "
           "appropriate).";
    return out.str();
}

namespace {

std::optional<int> parse_score_answer(const std::string& answer) {
    for (char c : answer)
        if (c >= '1' && c <= '5') return c - '0';
    return std::nullopt;
}

}  // namespace

ScoredOptions query_action_score(Provider& provider, ResponseCache* cache,
                                 const data::SceneRecord& scene,
                                 const std::vector<std::string>& feature_names,
                                 const std::string& action) {
    const std::string prompt = describe_scene(scene, feature_names, action);
    const std::vector<std::string> options = {"1", "2", "3", "4", "5"};
    const std::string key = cache_key(prompt, provider.id(), "top_k=5");

    std::vector<Completion> completions;
    if (cache) {
        if (auto hit = cache->lookup(key)) {
            completions = *hit;
        }
    }
    if (completions.empty()) {
        completions = provider.complete(prompt, options, 5);
        if (cache) cache->store(key, provider.id(), prompt, completions);
    }

    ScoredOptions out;
    for (const auto& c : completions) {
        if (c.probability < 0.0 || c.probability > 1.0)
            fail("UnparsableResponse", "probability out of [0,1]");
        if (auto score = parse_score_answer(c.answer)) {
            bool dup = false;
            for (const auto& [s, p] : out.entries)
                if (s == *score) dup = true;
            if (!dup) out.entries.emplace_back(*score, c.probability);
        }
    }
    if (out.entries.empty())
        fail("UnparsableResponse", "no completion maps to a score 1-5");
    return out;
}

double expected_score(const ScoredOptions& options) {
    if (options.entries.empty()) fail("EmptyInput", "expected_score");
    double mass = 0.0, acc = 0.0;
    for (const auto& [score, p] : options.entries) {
        mass += p;
        acc += static_cast<double>(score) * p;
    }
    if (mass <= 0.0) fail("ZeroMass", "all option probabilities are zero");
    return acc / mass;
}

data::ScoreTable score_dataset(Provider& provider, ResponseCache* cache, const data::Dataset& ds,
                               std::size_t max_in_flight) {
    struct Task {
        const data::SceneRecord* scene;
        std::size_t action;
    };
    std::vector<Task> tasks;
    for (const auto& [id, scene] : ds.scenes)
        for (std::size_t a = 0; a < ds.action_names.size(); ++a) tasks.push_back({&scene, a});

    data::ScoreTable table;
    for (const auto& [id, scene] : ds.scenes)
        table[id] = std::vector<double>(ds.action_names.size(), 0.0);

    std::mutex table_mutex;
    std::atomic<std::size_t> next{0};
    std::string first_error;
    std::mutex error_mutex;

    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            try {
                auto scored = query_action_score(provider, cache, *tasks[i].scene,
                                                 ds.feature_names,
                                                 ds.action_names[tasks[i].action]);
                const double v = expected_score(scored);
                std::lock_guard lock(table_mutex);
                table[tasks[i].scene->scene_id][tasks[i].action] = v;
            } catch (const Error& e) {
                std::lock_guard lock(error_mutex);
                if (first_error.empty()) first_error = e.what();
            }
        }
    };

    const std::size_t threads = std::max<std::size_t>(1, std::min(max_in_flight, tasks.size()));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (!first_error.empty()) throw Error("ProviderUnavailable", first_error);
    return table;
}

ExemplarConfig default_exemplars() {
    ExemplarConfig cfg;
    cfg["human_state"] = {"The person is free and just relaxing on the couch",
                          "The person is busy working at their desk"};
    cfg["safety"] = {"The area is clear and safe for the robot to operate",
                     "There is a hazard, the robot could hurt someone"};
    cfg["robot_direction"] = {"The robot is facing the people in the room",
                              "The robot is turned away from everyone"};
    cfg["working_area"] = {"There is plenty of open space to work in",
                           "The room is cramped with no space to move"};
    cfg["robot_capability"] = {"The robot is well suited to do this task",
                               "The robot is not capable of doing this properly"};
    cfg["robot_proximity"] = {"The robot is far away from everyone",
                              "The robot is too close to the people"};
    cfg["crowd"] = {"The room is crowded with many people",
                    "The room is empty, nobody is around"};
    return cfg;
}

ExemplarConfig load_exemplars(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("FileNotFound", "cannot open exemplar config " + path);
    json j = json::parse(in);
    ExemplarConfig cfg;
    for (const auto& [category, value] : j.items())
        cfg[category] = {value.at("positive").get<std::string>(),
                         value.at("negative").get<std::string>()};
    return cfg;
}

int label_explanation(Provider& provider, const std::string& text, const std::string& category,
                      const ExemplarConfig& exemplars) {
    bool known = false;
    for (const auto& c : data::explanation_categories())
        if (c.slug == category) known = true;
    if (!known) fail("UnknownFeature", "unknown explanation category '" + category + "'");
    if (text.empty()) return 0;

    auto it = exemplars.find(category);
    if (it == exemplars.end()) fail("UnknownFeature", "no exemplars for '" + category + "'");

    std::ostringstream prompt;
    prompt << "Classify the explanation for the category '" << category << "'.\n";
    prompt << "Example: \"" << it->second.positive_text << "\" -> positive\n";
    prompt << "Example: \"" << it->second.negative_text << "\" -> negative\n";
    prompt << "Answer positive, negative, or neutral.\n";
    prompt << "Explanation: \"" << text << "\"";

    auto completions = provider.complete(prompt.str(), {"positive", "negative", "neutral"}, 1);
    if (completions.empty()) fail("UnparsableResponse", "empty completion list");
    const std::string& answer = completions[0].answer;
    if (answer.find("positive") != std::string::npos) return 1;
    if (answer.find("negative") != std::string::npos) return -1;
    if (answer.find("neutral") != std::string::npos) return 0;
    fail("UnparsableResponse", "answer '" + answer + "' maps to no pole");
}

data::ExplanationVector normalize_explanation(const std::vector<int>& raw) {
    if (raw.size() != data::kExplanationDims)
        fail("OutOfDomain", "expected " + std::to_string(data::kExplanationDims) + " values");
    data::ExplanationVector ev;
    for (int v : raw) {
        if (v < -1 || v > 1) fail("OutOfDomain", "raw label " + std::to_string(v));
        ev.values.push_back((static_cast<double>(v) + 1.0) / 2.0);
    }
    return ev;
}

std::vector<int> denormalize_explanation(const data::ExplanationVector& ev) {
    std::vector<int> out;
    for (double v : ev.values) {
        if (v == 0.0) out.push_back(-1);
        else if (v == 0.5) out.push_back(0);
        else if (v == 1.0) out.push_back(1);
        else fail("OutOfDomain", "normalized value not in {0,0.5,1}");
    }
    return out;
}

double label_agreement(const std::vector<std::vector<int>>& manual,
                       const std::vector<std::vector<int>>& automatic) {
    if (manual.size() != automatic.size()) fail("ArityMismatch", "row counts differ");
    std::size_t total = 0, match = 0;
    for (std::size_t i = 0; i < manual.size(); ++i) {
        if (manual[i].size() != automatic[i].size()) fail("ArityMismatch", "row widths differ");
        for (std::size_t j = 0; j < manual[i].size(); ++j) {
            ++total;
            if (manual[i][j] == automatic[i][j]) ++match;
        }
    }
    if (total == 0) fail("ArityMismatch", "empty label sets");
    return static_cast<double>(match) / static_cast<double>(total);
}

}  // namespace grace::llm
