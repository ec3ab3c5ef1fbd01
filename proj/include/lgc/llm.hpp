#pragma once

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>

#include <json.hpp>

#include "lgc/util.hpp"

namespace lgc {

enum class LlmRole { Planner, Critic, RewardGen, GraphGen };
inline const char* role_name(LlmRole r) {
    switch (r) {
        case LlmRole::Planner: return "planner";
        case LlmRole::Critic: return "critic";
        case LlmRole::RewardGen: return "rewardgen";
        case LlmRole::GraphGen: return "graphgen";
    }
    return "?";
}
inline constexpr int kNumRoles = 4;

struct ChatRequest {
    LlmRole role_tag = LlmRole::Planner;
    std::string system_prompt;
    std::string user_prompt;
    double temperature = 0.0;
    int max_tokens = 2048;
};

enum class BackendKind { Scripted, Remote };

struct ChatResponse {
    std::string text;
    int prompt_tokens = 0;
    int completion_tokens = 0;
    BackendKind backend = BackendKind::Scripted;
};

struct LlmError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct FixtureMiss : LlmError {
    FixtureMiss(LlmRole role, const std::string& hash)
        : LlmError(std::string("scripted fixture miss: role=") + role_name(role) +
                   " prompt_hash=" + hash) {}
};
struct RemoteError : LlmError {
    using LlmError::LlmError;
};

struct TokenLedger {
    struct Counter {
        long calls = 0;
        long prompt_tokens = 0;
        long completion_tokens = 0;
        long total() const { return prompt_tokens + completion_tokens; }
    };
    Counter per_role[kNumRoles];

    void add(LlmRole role, int prompt, int completion) {
        auto& c = per_role[static_cast<int>(role)];
        c.calls += 1;
        c.prompt_tokens += prompt;
        c.completion_tokens += completion;
    }
    Counter role(LlmRole r) const { return per_role[static_cast<int>(r)]; }
    long total_tokens() const {
        long t = 0;
        for (const auto& c : per_role) t += c.total();
        return t;
    }
    long total_calls() const {
        long t = 0;
        for (const auto& c : per_role) t += c.calls;
        return t;
    }
};

inline int word_count(const std::string& s) {
    int n = 0;
    bool in = false;
    for (char c : s) {
        bool ws = c == ' ' || c == '\t' || c == '\n' || c == '\r';
        if (!ws && !in) { ++n; in = true; }
        if (ws) in = false;
    }
    return n;
}

class LlmBackend {
public:
    virtual ~LlmBackend() = default;
    virtual ChatResponse complete(const ChatRequest& req) = 0;
    virtual BackendKind kind() const = 0;
};

// Fixture-table backend keyed by (role, FNV-1a of user prompt). Token
// counts use a whitespace word-count proxy.
class ScriptedBackend : public LlmBackend {
public:
    ScriptedBackend() = default;
    explicit ScriptedBackend(const std::string& fixture_dir) { load_dir(fixture_dir); }

    void add_fixture(LlmRole role, const std::string& user_prompt, const std::string& response) {
        table_[key(role, user_prompt)] = response;
    }

    static std::string fixture_filename(LlmRole role, const std::string& user_prompt) {
        return std::string(role_name(role)) + "_" + hex64(fnv1a64(user_prompt)) + ".json";
    }

    void save_fixture(const std::string& dir, LlmRole role, const std::string& user_prompt,
                      const std::string& response) const {
        std::filesystem::create_directories(dir);
        nlohmann::json j;
        j["role"] = role_name(role);
        j["prompt_hash"] = hex64(fnv1a64(user_prompt));
        j["text"] = response;
        std::ofstream out(std::filesystem::path(dir) / fixture_filename(role, user_prompt));
        out << j.dump(2) << "\n";
    }

    void load_dir(const std::string& dir) {
        if (!std::filesystem::exists(dir)) return;
        for (const auto& e : std::filesystem::directory_iterator(dir)) {
            if (e.path().extension() != ".json") continue;
            std::ifstream in(e.path());
            nlohmann::json j;
            in >> j;
            table_[j.at("role").get<std::string>() + ":" + j.at("prompt_hash").get<std::string>()] =
                j.at("text").get<std::string>();
        }
    }

    bool has_fixture(LlmRole role, const std::string& user_prompt) const {
        return table_.count(key(role, user_prompt)) > 0;
    }

    ChatResponse complete(const ChatRequest& req) override {
        auto it = table_.find(key(req.role_tag, req.user_prompt));
        if (it == table_.end())
            throw FixtureMiss(req.role_tag, hex64(fnv1a64(req.user_prompt)));
        ChatResponse r;
        r.text = it->second;
        r.prompt_tokens = word_count(req.system_prompt) + word_count(req.user_prompt);
        r.completion_tokens = word_count(r.text);
        r.backend = BackendKind::Scripted;
        return r;
    }
    BackendKind kind() const override { return BackendKind::Scripted; }

private:
    static std::string key(LlmRole role, const std::string& prompt) {
        return std::string(role_name(role)) + ":" + hex64(fnv1a64(prompt));
    }
    std::map<std::string, std::string> table_;
};

struct RemoteConfig {
    std::string base_url;  // e.g. https://api.example.com/v1
    std::string model;
    double timeout_s = 60.0;
    int max_retries = 3;
    std::string api_key_env = "LGC_API_KEY";
};

// OpenAI-compatible chat-completions client. Declared here, defined in
// llm_remote.hpp so tests that never touch the network do not pull in
// the HTTP stack.
class RemoteBackend : public LlmBackend {
public:
    explicit RemoteBackend(RemoteConfig cfg) : cfg_(std::move(cfg)) {}
    ChatResponse complete(const ChatRequest& req) override;
    BackendKind kind() const override { return BackendKind::Remote; }

private:
    RemoteConfig cfg_;
};

// Ledger-owning front door; all three LLM roles call through here.
class LlmClient {
public:
    explicit LlmClient(std::shared_ptr<LlmBackend> backend) : backend_(std::move(backend)) {}

    ChatResponse complete(const ChatRequest& req) {
        if (req.user_prompt.empty() || req.system_prompt.empty())
            throw LlmError("prompts must be non-empty");
        ChatResponse r = backend_->complete(req);
        ledger_.add(req.role_tag, r.prompt_tokens, r.completion_tokens);
        return r;
    }

    TokenLedger ledger_snapshot() const { return ledger_; }
    BackendKind kind() const { return backend_->kind(); }
    LlmBackend& backend() { return *backend_; }

private:
    std::shared_ptr<LlmBackend> backend_;
    TokenLedger ledger_;
};

}  // namespace lgc
