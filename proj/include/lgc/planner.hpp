#pragma once

#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lgc/env.hpp"
#include "lgc/graph.hpp"
#include "lgc/llm.hpp"

namespace lgc {

struct PlanSequence {
    std::vector<Subtask> subtasks;
    int source_revision = 0;  // critic rounds consumed producing it
};

struct CritiqueVerdict {
    bool approved = false;
    std::vector<std::string> reasons;  // empty iff approved
};

struct PlanError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MalformedPlan : PlanError {
    int line;
    MalformedPlan(int line_, const std::string& reason)
        : PlanError("line " + std::to_string(line_) + ": " + reason), line(line_) {}
};
struct EmptyPlan : PlanError {
    EmptyPlan() : PlanError("plan has no subtask lines") {}
};
struct MalformedVerdict : PlanError {
    using PlanError::PlanError;
};
struct PlanningFailed : PlanError {
    std::vector<std::string> last_reasons;
    explicit PlanningFailed(std::vector<std::string> reasons)
        : PlanError("planning failed; last critic reasons: " + join(reasons)),
          last_reasons(std::move(reasons)) {}
    static std::string join(const std::vector<std::string>& v) {
        std::string s;
        for (const auto& r : v) s += (s.empty() ? "" : "; ") + r;
        return s;
    }
};

inline const char* kPlannerSystemPrompt =
    "You are a task planner for a team of household robots on a grid. "
    "Decompose the task into executable subtasks and emit an agent "
    "dependency graph. Follow the output grammar exactly.";

inline const char* kCriticSystemPrompt =
    "You are a plan critic. Check the plan for missing objects, ordering "
    "errors, invalid agents, and graph cycles. Answer APPROVE or REJECT "
    "followed by one reason per line.";

inline std::string plan_grammar_help(int n_agents) {
    std::ostringstream os;
    os << "Output grammar:\n"
       << "  one line per subtask: L<idx>: <verb> <object> [-> <receptacle>] [@agent <i>]\n"
       << "  verbs: Goto | Pickup | Put\n"
       << "  then a line 'GRAPH:' followed by edges 'i->j' (agent j waits on agent i),\n"
       << "  agent indices 0.." << n_agents - 1 << ". Emit nothing else.\n";
    return os.str();
}

inline ChatRequest build_planner_prompt(const Env& env, const GlobalState& state, int n_agents,
                                        const std::vector<std::vector<std::string>>& feedback = {}) {
    ChatRequest req;
    req.role_tag = LlmRole::Planner;
    req.system_prompt = kPlannerSystemPrompt;
    std::ostringstream os;
    os << "Agents available: " << n_agents << "\n";
    os << env.state_summary(state);
    os << plan_grammar_help(n_agents);
    for (const auto& round : feedback) {
        os << "CRITIC FEEDBACK:\n";
        for (const auto& r : round) os << "- " << r << "\n";
    }
    req.user_prompt = os.str();
    return req;
}

namespace detail {
inline std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}
inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}
}  // namespace detail

// Strict parse of the planner output grammar. Unknown verbs and garbage
// lines are errors, never silent drops.
inline std::pair<PlanSequence, std::vector<std::pair<int, int>>> parse_plan(
    const std::string& text) {
    PlanSequence plan;
    std::vector<std::pair<int, int>> edges;
    bool in_graph = false;
    int lineno = 0;
    for (const auto& raw : detail::split_lines(text)) {
        ++lineno;
        std::string line = detail::trim(raw);
        if (line.empty()) continue;
        if (line == "GRAPH:") {
            in_graph = true;
            continue;
        }
        if (in_graph) {
            if (line == "(none)") continue;
            int i, j;
            char extra;
            if (std::sscanf(line.c_str(), "%d->%d %c", &i, &j, &extra) == 2 ||
                std::sscanf(line.c_str(), "%d -> %d %c", &i, &j, &extra) == 2) {
                edges.emplace_back(i, j);
            } else {
                throw MalformedPlan(lineno, "bad edge line: " + line);
            }
            continue;
        }
        // subtask line: L<idx>: <verb> <target> [-> <receptacle>] [@agent <i>]
        if (line[0] != 'L') throw MalformedPlan(lineno, "expected 'L<idx>:' prefix");
        auto colon = line.find(':');
        if (colon == std::string::npos) throw MalformedPlan(lineno, "missing ':'");
        std::string body = detail::trim(line.substr(colon + 1));

        Subtask z;
        std::optional<AgentId> agent;
        auto at = body.find("@agent");
        if (at != std::string::npos) {
            int a;
            if (std::sscanf(body.c_str() + at, "@agent %d", &a) != 1)
                throw MalformedPlan(lineno, "bad @agent clause");
            agent = a;
            body = detail::trim(body.substr(0, at));
        }
        std::optional<std::string> recep;
        auto arrow = body.find("->");
        if (arrow != std::string::npos) {
            recep = detail::trim(body.substr(arrow + 2));
            if (recep->empty()) throw MalformedPlan(lineno, "empty receptacle after '->'");
            body = detail::trim(body.substr(0, arrow));
        }
        std::istringstream bs(body);
        std::string verb, target;
        bs >> verb >> target;
        std::string rest;
        bs >> rest;
        if (!rest.empty()) throw MalformedPlan(lineno, "trailing tokens: " + rest);

        if (verb == "Goto") z.verb = Verb::Goto;
        else if (verb == "Pickup") z.verb = Verb::Pickup;
        else if (verb == "Put") z.verb = Verb::Put;
        else throw MalformedPlan(lineno, "unknown verb: " + verb);

        if (target.empty()) throw MalformedPlan(lineno, "missing target");
        int x, y;
        if (z.verb == Verb::Goto && std::sscanf(target.c_str(), "(%d,%d)", &x, &y) == 2) {
            z.cell = Pos{x, y};
        } else {
            z.object_id = target;
        }
        z.receptacle_id = recep;
        z.assigned_agent = agent;
        if (z.verb == Verb::Put && !z.receptacle_id)
            throw MalformedPlan(lineno, "Put requires '-> <receptacle>'");
        plan.subtasks.push_back(z);
    }
    if (plan.subtasks.empty()) throw EmptyPlan();
    return {plan, edges};
}

inline std::string print_plan(const PlanSequence& plan,
                              const std::vector<std::pair<int, int>>& edges) {
    std::ostringstream os;
    for (std::size_t l = 0; l < plan.subtasks.size(); ++l) {
        const auto& z = plan.subtasks[l];
        os << "L" << l + 1 << ": " << verb_name(z.verb);
        if (z.cell) os << " (" << z.cell->x << "," << z.cell->y << ")";
        else if (z.object_id) os << " " << *z.object_id;
        else if (z.receptacle_id && z.verb == Verb::Goto) os << " " << *z.receptacle_id;
        if (z.receptacle_id && z.verb != Verb::Goto) os << " -> " << *z.receptacle_id;
        if (z.assigned_agent) os << " @agent " << *z.assigned_agent;
        os << "\n";
    }
    os << "GRAPH:\n";
    if (edges.empty()) os << "(none)\n";
    for (auto [i, j] : edges) os << i << "->" << j << "\n";
    return os.str();
}

// Deterministic rule checker behind the critic. Also the hard gate for
// remote critics: a rule rejection always rejects.
inline CritiqueVerdict rule_check(const PlanSequence& plan,
                                  const std::vector<std::pair<int, int>>& edges,
                                  const Scene& scene, const TaskSpec& task, int n_agents) {
    CritiqueVerdict v;
    std::set<std::string> picked_before;
    for (std::size_t l = 0; l < plan.subtasks.size(); ++l) {
        const auto& z = plan.subtasks[l];
        std::string tag = "L" + std::to_string(l + 1);
        if (z.object_id && scene.object_index(*z.object_id) < 0 &&
            !(z.verb == Verb::Goto && scene.receptacle_index(*z.object_id) >= 0))
            v.reasons.push_back(tag + ": unknown object '" + *z.object_id + "'");
        if (z.receptacle_id && scene.receptacle_index(*z.receptacle_id) < 0 &&
            z.verb != Verb::Goto)
            v.reasons.push_back(tag + ": unknown receptacle '" + *z.receptacle_id + "'");
        if (z.assigned_agent && (*z.assigned_agent < 0 || *z.assigned_agent >= n_agents))
            v.reasons.push_back(tag + ": agent " + std::to_string(*z.assigned_agent) +
                                " out of range");
        if (z.verb == Verb::Pickup && z.object_id) picked_before.insert(*z.object_id);
        if (z.verb == Verb::Put && z.object_id && !picked_before.count(*z.object_id))
            v.reasons.push_back(tag + ": Put before Pickup for " + *z.object_id);
        if (z.cell && (!scene.in_bounds(*z.cell) || scene.is_wall(*z.cell)))
            v.reasons.push_back(tag + ": target cell is a wall or out of bounds");
    }
    // every goal predicate must be covered by a matching Put
    for (const auto& g : task.goal) {
        bool covered = false;
        for (const auto& z : plan.subtasks)
            if (z.verb == Verb::Put && z.object_id == g.object_id &&
                z.receptacle_id == g.receptacle_id)
                covered = true;
        if (!covered)
            v.reasons.push_back("goal 'put " + g.object_id + " in " + g.receptacle_id +
                                "' not covered by any Put subtask");
    }
    // dependency edges must form a DAG over agents
    try {
        validate_dag(n_agents, std::set<std::pair<int, int>>(edges.begin(), edges.end()));
    } catch (const GraphError& e) {
        v.reasons.push_back(std::string("dependency graph invalid: ") + e.what());
    }
    v.approved = v.reasons.empty();
    return v;
}

inline ChatRequest build_critic_prompt(const PlanSequence& plan,
                                       const std::vector<std::pair<int, int>>& edges,
                                       const Env& env, const GlobalState& state) {
    ChatRequest req;
    req.role_tag = LlmRole::Critic;
    req.system_prompt = kCriticSystemPrompt;
    req.user_prompt = env.state_summary(state) + "Proposed plan:\n" + print_plan(plan, edges);
    return req;
}

// Scripted: verdict comes from the rule checker; the backend response is
// advisory text only (a fixture miss is tolerated). Remote: the model's
// APPROVE/REJECT is intersected with the rule checker.
inline CritiqueVerdict critic_review(const PlanSequence& plan,
                                     const std::vector<std::pair<int, int>>& edges, const Env& env,
                                     const GlobalState& state, LlmClient& client, int n_agents) {
    CritiqueVerdict rules = rule_check(plan, edges, env.scene(), env.task(), n_agents);
    ChatRequest req = build_critic_prompt(plan, edges, env, state);

    if (client.kind() == BackendKind::Scripted) {
        try {
            client.complete(req);  // advisory only; keeps token accounting realistic
        } catch (const FixtureMiss&) {
        }
        return rules;
    }

    ChatResponse resp = client.complete(req);
    auto lines = detail::split_lines(resp.text);
    if (lines.empty()) throw MalformedVerdict("empty critic output");
    std::string head = detail::trim(lines[0]);
    CritiqueVerdict model;
    if (head.rfind("APPROVE", 0) == 0) {
        model.approved = true;
    } else if (head.rfind("REJECT", 0) == 0) {
        for (std::size_t i = 1; i < lines.size(); ++i) {
            std::string r = detail::trim(lines[i]);
            if (!r.empty()) model.reasons.push_back(r);
        }
        if (model.reasons.empty()) model.reasons.push_back("rejected by critic");
    } else {
        throw MalformedVerdict("critic output must start with APPROVE or REJECT: " + head);
    }
    // a rule-checker rejection always rejects
    CritiqueVerdict out;
    out.approved = model.approved && rules.approved;
    out.reasons = rules.reasons;
    if (!model.approved)
        out.reasons.insert(out.reasons.end(), model.reasons.begin(), model.reasons.end());
    return out;
}

struct PlanResult {
    PlanSequence plan;
    DependencyGraph graph;
    int planner_calls = 0;
    int critic_calls = 0;
};

inline PlanResult plan_with_critique(const Env& env, const GlobalState& state, int n_agents,
                                     LlmClient& client, int max_revisions = 3) {
    if (max_revisions < 1) throw PlanError("max_revisions must be >= 1");
    std::vector<std::vector<std::string>> feedback;
    PlanResult res;
    for (int round = 0; round < max_revisions; ++round) {
        ChatRequest prompt = build_planner_prompt(env, state, n_agents, feedback);
        ChatResponse resp = client.complete(prompt);
        ++res.planner_calls;

        PlanSequence plan;
        std::vector<std::pair<int, int>> edges;
        try {
            std::tie(plan, edges) = parse_plan(resp.text);
        } catch (const PlanError& e) {
            feedback.push_back({std::string("plan did not parse: ") + e.what()});
            continue;
        }
        CritiqueVerdict verdict = critic_review(plan, edges, env, state, client, n_agents);
        ++res.critic_calls;
        if (verdict.approved) {
            plan.source_revision = round;
            res.plan = plan;
            res.graph = validate_dag(n_agents,
                                     std::set<std::pair<int, int>>(edges.begin(), edges.end()));
            return res;
        }
        feedback.push_back(verdict.reasons);
    }
    throw PlanningFailed(feedback.empty() ? std::vector<std::string>{} : feedback.back());
}

// ---- LLM graph generation (refresh between subtasks) ---------------------

inline ChatRequest build_graph_prompt(const std::string& state_summary, const PlanSequence& plan,
                                      int n_agents) {
    ChatRequest req;
    req.role_tag = LlmRole::GraphGen;
    req.system_prompt =
        "You coordinate household robots. Given the state and plan, emit the "
        "agent action dependency edges, one 'i->j' per line ('(none)' if "
        "independent). Emit nothing else.";
    std::ostringstream os;
    os << "Agents: " << n_agents << "\n" << state_summary << "Plan:\n";
    os << print_plan(plan, {});
    req.user_prompt = os.str();
    return req;
}

// Prompts the GraphGen role and validates the edges; one retry with the
// error appended, then falls back to the last approved graph.
inline DependencyGraph graph_from_llm(const std::string& state_summary, const PlanSequence& plan,
                                      int n_agents, LlmClient& client,
                                      const DependencyGraph& fallback) {
    ChatRequest req = build_graph_prompt(state_summary, plan, n_agents);
    std::string error;
    for (int attempt = 0; attempt < 2; ++attempt) {
        ChatRequest r = req;
        if (!error.empty()) r.user_prompt += "Previous answer was invalid: " + error + "\n";
        try {
            ChatResponse resp = client.complete(r);
            auto edges = parse_edge_list(resp.text);
            return validate_dag(n_agents, edges);
        } catch (const FixtureMiss&) {
            break;  // scripted table has no entry; use the approved graph
        } catch (const std::exception& e) {
            error = e.what();
        }
    }
    return fallback;
}

}  // namespace lgc
