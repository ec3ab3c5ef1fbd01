#include <doctest.h>

#include <filesystem>

#include "lgc/llm.hpp"

using namespace lgc;

TEST_CASE("word_count matches whitespace splitting") {
    CHECK(word_count("") == 0);
    CHECK(word_count("one") == 1);
    CHECK(word_count("  a  b\tc\nd ") == 4);
}

TEST_CASE("scripted backend returns fixtures and counts tokens") {
    auto backend = std::make_shared<ScriptedBackend>();
    backend->add_fixture(LlmRole::Planner, "hello world", "the reply has four words");
    LlmClient client(backend);
    ChatRequest req;
    req.role_tag = LlmRole::Planner;
    req.system_prompt = "sys prompt";
    req.user_prompt = "hello world";
    auto r = client.complete(req);
    CHECK(r.text == "the reply has four words");
    CHECK(r.prompt_tokens == 4);  // 2 sys + 2 user
    CHECK(r.completion_tokens == 5);
    auto led = client.ledger_snapshot();
    CHECK(led.role(LlmRole::Planner).calls == 1);
    CHECK(led.role(LlmRole::Planner).total() == 9);
    CHECK(led.role(LlmRole::Critic).calls == 0);
}

TEST_CASE("fixture miss raises, and keys are role-scoped") {
    auto backend = std::make_shared<ScriptedBackend>();
    backend->add_fixture(LlmRole::Planner, "p", "x");
    LlmClient client(backend);
    ChatRequest req;
    req.role_tag = LlmRole::Critic;
    req.system_prompt = "s";
    req.user_prompt = "p";  // same prompt, wrong role
    CHECK_THROWS_AS(client.complete(req), FixtureMiss);
    CHECK(backend->has_fixture(LlmRole::Planner, "p"));
    CHECK_FALSE(backend->has_fixture(LlmRole::Critic, "p"));
}

TEST_CASE("empty prompts are rejected before hitting the backend") {
    LlmClient client(std::make_shared<ScriptedBackend>());
    ChatRequest req;
    req.user_prompt = "u";
    CHECK_THROWS_AS(client.complete(req), LlmError);  // empty system prompt
    req.system_prompt = "s";
    req.user_prompt = "";
    CHECK_THROWS_AS(client.complete(req), LlmError);
}

TEST_CASE("fixtures round-trip through the on-disk format") {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / "lgc_fixture_test";
    fs::remove_all(dir);
    ScriptedBackend writer;
    writer.save_fixture(dir.string(), LlmRole::RewardGen, "make rewards", "REWARD: ...");
    ScriptedBackend reader(dir.string());
    CHECK(reader.has_fixture(LlmRole::RewardGen, "make rewards"));
    ChatRequest req;
    req.role_tag = LlmRole::RewardGen;
    req.system_prompt = "s";
    req.user_prompt = "make rewards";
    CHECK(reader.complete(req).text == "REWARD: ...");
    fs::remove_all(dir);
}

TEST_CASE("ledger accumulates across roles") {
    TokenLedger led;
    led.add(LlmRole::Planner, 10, 5);
    led.add(LlmRole::Planner, 1, 1);
    led.add(LlmRole::GraphGen, 2, 3);
    CHECK(led.role(LlmRole::Planner).calls == 2);
    CHECK(led.role(LlmRole::Planner).total() == 17);
    CHECK(led.total_tokens() == 22);
    CHECK(led.total_calls() == 3);
}
