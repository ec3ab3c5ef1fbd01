#pragma once

// Writes scripted-backend fixture files for a scene/task pair: a correct
// plan, the dependency edges, the canonical reward program, and an
// approving critic note. Used by the gen-fixtures CLI and by tests.

#include <sstream>
#include <string>
#include <vector>

#include "lgc/planner.hpp"
#include "lgc/reward.hpp"

namespace lgc {

// Round-robin assignment of goal predicates to agents; each predicate
// becomes a Pickup + Put pair. Dependency edges chain the agents that
// actually participate (agent 0 leads).
inline std::string reference_plan_text(const TaskSpec& task, int n_agents) {
    std::ostringstream os;
    int line = 1;
    std::vector<bool> used(n_agents, false);
    for (std::size_t g = 0; g < task.goal.size(); ++g) {
        int agent = static_cast<int>(g) % n_agents;
        used[agent] = true;
        os << "L" << line++ << ": Pickup " << task.goal[g].object_id << " @agent " << agent << "\n";
        os << "L" << line++ << ": Put " << task.goal[g].object_id << " -> "
           << task.goal[g].receptacle_id << " @agent " << agent << "\n";
    }
    os << "GRAPH:\n";
    bool any = false;
    int prev = -1;
    for (int i = 0; i < n_agents; ++i) {
        if (!used[i]) continue;
        if (prev >= 0) {
            os << prev << "->" << i << "\n";
            any = true;
        }
        prev = i;
    }
    if (!any) os << "(none)\n";
    return os.str();
}

inline std::string reference_edge_text(const TaskSpec& task, int n_agents) {
    auto [plan, edges] = parse_plan(reference_plan_text(task, n_agents));
    (void)plan;
    std::string out;
    for (auto [i, j] : edges) out += std::to_string(i) + "->" + std::to_string(j) + "\n";
    if (out.empty()) out = "(none)\n";
    return out;
}

// Registers all fixtures this env needs for a scripted planning pass and
// optionally persists them under `dir`.
inline void install_task_fixtures(ScriptedBackend& backend, const Env& env, int n_agents,
                                  const std::string& dir = "") {
    GlobalState st0 = env.reset();
    const std::string plan_text = reference_plan_text(env.task(), n_agents);
    auto [plan, edges] = parse_plan(plan_text);

    auto put = [&](LlmRole role, const std::string& prompt, const std::string& text) {
        backend.add_fixture(role, prompt, text);
        if (!dir.empty()) backend.save_fixture(dir, role, prompt, text);
    };

    put(LlmRole::Planner, build_planner_prompt(env, st0, n_agents).user_prompt, plan_text);
    put(LlmRole::Critic, build_critic_prompt(plan, edges, env, st0).user_prompt,
        "APPROVE\nplan covers every goal predicate and the graph is acyclic");
    put(LlmRole::RewardGen, build_reward_prompt(env, st0).user_prompt, canonical_reward_text());
    put(LlmRole::GraphGen, build_graph_prompt(env.state_summary(st0), plan, n_agents).user_prompt,
        reference_edge_text(env.task(), n_agents));
}

}  // namespace lgc
