#pragma once

// RemoteBackend::complete definition. Include this translation-unit-side
// header only where remote access is actually wired up (the CLI).

#include <httplib.h>

#include "lgc/llm.hpp"

namespace lgc {

inline ChatResponse RemoteBackend::complete(const ChatRequest& req) {
    const char* key = std::getenv(cfg_.api_key_env.c_str());

    nlohmann::json body;
    body["model"] = cfg_.model;
    body["temperature"] = req.temperature;
    body["max_tokens"] = req.max_tokens;
    body["messages"] = nlohmann::json::array({
        {{"role", "system"}, {"content", req.system_prompt}},
        {{"role", "user"}, {"content", req.user_prompt}},
    });
    const std::string payload = body.dump();

    std::string last_error;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
        if (attempt > 0) {
            auto backoff = std::chrono::milliseconds(500 * (1 << (attempt - 1)));
            std::this_thread::sleep_for(backoff);
        }
        httplib::Client cli(cfg_.base_url);
        cli.set_read_timeout(static_cast<time_t>(cfg_.timeout_s), 0);
        cli.set_connection_timeout(static_cast<time_t>(cfg_.timeout_s), 0);
        httplib::Headers headers;
        if (key) headers.emplace("Authorization", std::string("Bearer ") + key);

        auto res = cli.Post("/chat/completions", headers, payload, "application/json");
        if (!res) {
            last_error = "transport error / timeout";
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        try {
            auto j = nlohmann::json::parse(res->body);
            ChatResponse out;
            out.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
            out.prompt_tokens = j.at("usage").at("prompt_tokens").get<int>();
            out.completion_tokens = j.at("usage").at("completion_tokens").get<int>();
            out.backend = BackendKind::Remote;
            return out;
        } catch (const std::exception& e) {
            last_error = std::string("malformed body: ") + e.what();
            continue;
        }
    }
    throw RemoteError("remote completion failed after " + std::to_string(cfg_.max_retries + 1) +
                      " attempts: " + last_error);
}

}  // namespace lgc
