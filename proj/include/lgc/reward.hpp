#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lgc/env.hpp"
#include "lgc/llm.hpp"
#include "lgc/planner.hpp"

namespace lgc {

struct RewardError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MalformedReward : RewardError {
    int line;
    MalformedReward(int line_, const std::string& reason)
        : RewardError("line " + std::to_string(line_) + ": " + reason), line(line_) {}
};
struct MissingSection : RewardError {
    using RewardError::RewardError;
};
struct InvariantViolation : RewardError {
    using RewardError::RewardError;
};
struct RewardGenFailed : RewardError {
    using RewardError::RewardError;
};

enum class RewardPrimitive {
    StepPenalty,
    DistanceDelta,  // arg: target kind, only "subtask" is defined
    Event,          // arg: event name from the environment vocabulary
    SubtaskComplete,
    AllSubtasksComplete,
    CollisionPenalty,
    GoalReached,
};

inline const std::vector<std::string>& event_vocabulary() {
    static const std::vector<std::string> v = {
        "moved", "bumped_wall", "picked", "placed", "collided", "subtask_completed",
        "goal_reached"};
    return v;
}

struct RewardTerm {
    std::string name;
    double weight = 0.0;
    RewardPrimitive primitive = RewardPrimitive::StepPenalty;
    std::string arg;  // DistanceDelta target kind or Event name
};

struct RewardProgram {
    std::vector<RewardTerm> individual_terms;
    std::vector<RewardTerm> team_terms;
    std::string rationale;  // model's reasoning, kept verbatim
};

namespace reward_detail {

inline std::optional<std::pair<RewardPrimitive, std::string>> parse_primitive(
    const std::string& tok) {
    auto paren = tok.find('(');
    std::string head = tok, arg;
    if (paren != std::string::npos) {
        if (tok.back() != ')') return std::nullopt;
        head = tok.substr(0, paren);
        arg = tok.substr(paren + 1, tok.size() - paren - 2);
    }
    if (head == "StepPenalty") return {{RewardPrimitive::StepPenalty, ""}};
    if (head == "SubtaskComplete") return {{RewardPrimitive::SubtaskComplete, ""}};
    if (head == "AllSubtasksComplete") return {{RewardPrimitive::AllSubtasksComplete, ""}};
    if (head == "CollisionPenalty") return {{RewardPrimitive::CollisionPenalty, ""}};
    if (head == "GoalReached") return {{RewardPrimitive::GoalReached, ""}};
    if (head == "DistanceDelta") {
        if (arg.empty()) arg = "subtask";
        if (arg != "subtask") return std::nullopt;
        return {{RewardPrimitive::DistanceDelta, arg}};
    }
    if (head == "Event") {
        for (const auto& e : event_vocabulary())
            if (e == arg) return {{RewardPrimitive::Event, arg}};
        return std::nullopt;
    }
    return std::nullopt;
}

inline std::string primitive_text(const RewardTerm& t) {
    switch (t.primitive) {
        case RewardPrimitive::StepPenalty: return "StepPenalty";
        case RewardPrimitive::DistanceDelta: return "DistanceDelta(" + t.arg + ")";
        case RewardPrimitive::Event: return "Event(" + t.arg + ")";
        case RewardPrimitive::SubtaskComplete: return "SubtaskComplete";
        case RewardPrimitive::AllSubtasksComplete: return "AllSubtasksComplete";
        case RewardPrimitive::CollisionPenalty: return "CollisionPenalty";
        case RewardPrimitive::GoalReached: return "GoalReached";
    }
    return "?";
}

}  // namespace reward_detail

inline RewardProgram parse_reward(const std::string& text) {
    RewardProgram p;
    enum { Preamble, Rationale, Reward } section = Preamble;
    bool saw_rationale = false, saw_reward = false;
    int lineno = 0;
    std::istringstream is(text);
    std::string raw;
    std::vector<std::string> names;
    while (std::getline(is, raw)) {
        ++lineno;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        std::string line = detail::trim(raw);
        if (line == "RATIONALE:") {
            section = Rationale;
            saw_rationale = true;
            continue;
        }
        if (line == "REWARD:") {
            section = Reward;
            saw_reward = true;
            continue;
        }
        if (section == Rationale) {
            p.rationale += raw + "\n";
            continue;
        }
        if (section == Preamble) {
            if (line.empty()) continue;
            throw MalformedReward(lineno, "text before RATIONALE: section");
        }
        if (line.empty()) continue;
        // (individual|team) <name> = <weight> * <primitive>[(arg)]
        std::istringstream ls(line);
        std::string kind, name, eq, weight_tok, star, prim_tok, rest;
        ls >> kind >> name >> eq >> weight_tok >> star >> prim_tok;
        ls >> rest;
        if (!rest.empty()) throw MalformedReward(lineno, "trailing tokens: " + rest);
        if (kind != "individual" && kind != "team")
            throw MalformedReward(lineno, "term must start with 'individual' or 'team'");
        if (eq != "=" || star != "*")
            throw MalformedReward(lineno, "expected '<name> = <weight> * <primitive>'");
        char* end = nullptr;
        double w = std::strtod(weight_tok.c_str(), &end);
        if (end == weight_tok.c_str() || *end != '\0')
            throw MalformedReward(lineno, "bad weight: " + weight_tok);
        if (!std::isfinite(w)) throw InvariantViolation("non-finite weight in term " + name);
        auto prim = reward_detail::parse_primitive(prim_tok);
        if (!prim) throw MalformedReward(lineno, "unknown primitive: " + prim_tok);
        for (const auto& n : names)
            if (n == name) throw InvariantViolation("duplicate term name " + name);
        names.push_back(name);
        RewardTerm t{name, w, prim->first, prim->second};
        (kind == "individual" ? p.individual_terms : p.team_terms).push_back(t);
    }
    if (!saw_rationale || !saw_reward)
        throw MissingSection("program needs RATIONALE: and REWARD: sections");
    if (p.individual_terms.empty() || p.team_terms.empty())
        throw InvariantViolation("program needs at least one individual and one team term");
    // trim the single trailing newline added by the last rationale line
    if (!p.rationale.empty() && p.rationale.back() == '\n') p.rationale.pop_back();
    return p;
}

inline std::string print_reward(const RewardProgram& p) {
    std::ostringstream os;
    os << "RATIONALE:\n" << p.rationale << "\nREWARD:\n";
    for (const auto& t : p.individual_terms)
        os << "individual " << t.name << " = " << format_double(t.weight) << " * "
           << reward_detail::primitive_text(t) << "\n";
    for (const auto& t : p.team_terms)
        os << "team " << t.name << " = " << format_double(t.weight) << " * "
           << reward_detail::primitive_text(t) << "\n";
    return os.str();
}

namespace reward_detail {

inline bool event_fired(const std::string& name, const EventSet& ev, AgentId agent) {
    const auto& a = ev.agents[agent];
    if (name == "moved") return a.moved;
    if (name == "bumped_wall") return a.bumped_wall;
    if (name == "picked") return a.picked >= 0;
    if (name == "placed") return a.placed >= 0;
    if (name == "collided") return a.collided;
    if (name == "subtask_completed") return !a.subtasks_completed.empty();
    if (name == "goal_reached") return ev.goal_reached;
    return false;
}

inline bool event_fired_any(const std::string& name, const EventSet& ev) {
    for (std::size_t i = 0; i < ev.agents.size(); ++i)
        if (event_fired(name, ev, static_cast<int>(i))) return true;
    return false;
}

}  // namespace reward_detail

// Per-agent individual reward plus a team reward identical across agents.
// The scalar a learner consumes is exactly individual + team.
inline std::pair<double, double> eval_reward(const RewardProgram& p, const EventSet& events,
                                             const GlobalState& state,
                                             const GlobalState& next_state, AgentId agent,
                                             const Env& env) {
    auto individual_value = [&](const RewardTerm& t) -> double {
        switch (t.primitive) {
            case RewardPrimitive::StepPenalty: return 1.0;
            case RewardPrimitive::Event:
                return reward_detail::event_fired(t.arg, events, agent) ? 1.0 : 0.0;
            case RewardPrimitive::DistanceDelta: {
                int code = env.current_subtask(state, agent);
                if (code < 0) return 0.0;
                auto target = env.subtask_target(state, env.plan()[code]);
                if (!target) return 0.0;
                int before = manhattan(state.agents[agent].pos, *target);
                int after = manhattan(next_state.agents[agent].pos, *target);
                return static_cast<double>(before - after);
            }
            case RewardPrimitive::SubtaskComplete:
                return events.agents[agent].subtasks_completed.empty() ? 0.0 : 1.0;
            case RewardPrimitive::AllSubtasksComplete:
                return events.all_subtasks_completed ? 1.0 : 0.0;
            case RewardPrimitive::CollisionPenalty: return events.collision ? 1.0 : 0.0;
            case RewardPrimitive::GoalReached: return events.goal_reached ? 1.0 : 0.0;
        }
        return 0.0;
    };
    auto team_value = [&](const RewardTerm& t) -> double {
        switch (t.primitive) {
            case RewardPrimitive::StepPenalty: return 1.0;
            case RewardPrimitive::Event:
                return reward_detail::event_fired_any(t.arg, events) ? 1.0 : 0.0;
            case RewardPrimitive::DistanceDelta: return 0.0;  // undefined for the team
            case RewardPrimitive::SubtaskComplete:
                return events.any_subtask_completed ? 1.0 : 0.0;
            case RewardPrimitive::AllSubtasksComplete:
                return events.all_subtasks_completed ? 1.0 : 0.0;
            case RewardPrimitive::CollisionPenalty: return events.collision ? 1.0 : 0.0;
            case RewardPrimitive::GoalReached: return events.goal_reached ? 1.0 : 0.0;
        }
        return 0.0;
    };
    double ind = 0.0, team = 0.0;
    for (const auto& t : p.individual_terms) ind += t.weight * individual_value(t);
    for (const auto& t : p.team_terms) team += t.weight * team_value(t);
    return {ind, team};
}

// Dense shaping program used by all desk-scale runs (scripted backend
// fixture content) and by tests as the canonical reference.
inline std::string canonical_reward_text() {
    return "RATIONALE:\n"
           "Dense shaping: penalize wasted steps, reward approaching the\n"
           "current subtask target, reward each completed subtask, punish\n"
           "collisions hard. Team terms pay off joint completion so agents\n"
           "share credit for the final goal.\n"
           "REWARD:\n"
           "individual step_cost = -0.01 * StepPenalty\n"
           "individual approach = 0.1 * DistanceDelta(subtask)\n"
           "individual subtask_done = 1 * SubtaskComplete\n"
           "individual collision = -1 * CollisionPenalty\n"
           "team all_subtasks = 5 * AllSubtasksComplete\n"
           "team goal = 10 * GoalReached\n";
}
inline RewardProgram canonical_reward_program() { return parse_reward(canonical_reward_text()); }

// Sparse success-only substitute used by the wo_reward ablation.
inline RewardProgram sparse_reward_program() {
    return parse_reward(
        "RATIONALE:\n"
        "Sparse baseline: success bonus and a step cost only.\n"
        "REWARD:\n"
        "individual step_cost = -0.01 * StepPenalty\n"
        "team goal = 10 * GoalReached\n");
}

inline ChatRequest build_reward_prompt(const Env& env, const GlobalState& state,
                                       const std::string& error = "") {
    ChatRequest req;
    req.role_tag = LlmRole::RewardGen;
    req.system_prompt =
        "You design modular reward functions for cooperative grid robots. "
        "Think step by step in a RATIONALE: section, then emit a REWARD: "
        "section of lines '(individual|team) <name> = <weight> * <primitive>'. "
        "Primitives: StepPenalty, DistanceDelta(subtask), Event(<name>), "
        "SubtaskComplete, AllSubtasksComplete, CollisionPenalty, GoalReached. "
        "Include at least one individual and one team term.";
    req.user_prompt = env.state_summary(state);
    if (!error.empty()) req.user_prompt += "Previous program was invalid: " + error + "\n";
    return req;
}

inline RewardProgram generate_reward(const Env& env, const GlobalState& state, LlmClient& client,
                                     int max_attempts = 3) {
    if (max_attempts < 1) throw RewardError("max_attempts must be >= 1");
    std::string error;
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        ChatRequest req = build_reward_prompt(env, state, error);
        ChatResponse resp = client.complete(req);
        try {
            return parse_reward(resp.text);
        } catch (const RewardError& e) {
            error = e.what();
        }
    }
    throw RewardGenFailed("no valid reward program after " + std::to_string(max_attempts) +
                          " attempts; last error: " + error);
}

}  // namespace lgc
