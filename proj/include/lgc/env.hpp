#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lgc/core.hpp"

namespace lgc {

struct EnvError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SceneTaskMismatch : EnvError {
    SceneTaskMismatch(const std::string& task_scene, const std::string& scene)
        : EnvError("task targets scene '" + task_scene + "' but env scene is '" + scene + "'") {}
};
struct InvalidActionArity : EnvError {
    InvalidActionArity(std::size_t got, std::size_t want)
        : EnvError("joint action has " + std::to_string(got) + " entries, expected " +
                   std::to_string(want)) {}
};

struct SceneObject {
    std::string id;
    std::string type;
    Pos pos;
};
struct Receptacle {
    std::string id;
    std::string type;
    Pos pos;
    int capacity = 1;
};

struct Scene {
    std::string name;
    int width = 0, height = 0;
    std::set<std::pair<int, int>> walls;
    std::vector<SceneObject> objects;
    std::vector<Receptacle> receptacles;
    std::vector<Pos> agent_starts;
    int max_steps = 1;

    bool is_wall(Pos p) const { return walls.count({p.x, p.y}) > 0; }
    bool in_bounds(Pos p) const { return p.x >= 0 && p.x < width && p.y >= 0 && p.y < height; }

    int object_index(const std::string& id) const {
        for (std::size_t i = 0; i < objects.size(); ++i)
            if (objects[i].id == id) return static_cast<int>(i);
        return -1;
    }
    int receptacle_index(const std::string& id) const {
        for (std::size_t i = 0; i < receptacles.size(); ++i)
            if (receptacles[i].id == id) return static_cast<int>(i);
        return -1;
    }
};

enum class Verb { Goto, Pickup, Put };
inline const char* verb_name(Verb v) {
    switch (v) {
        case Verb::Goto: return "Goto";
        case Verb::Pickup: return "Pickup";
        case Verb::Put: return "Put";
    }
    return "?";
}

struct Subtask {
    Verb verb = Verb::Goto;
    std::optional<std::string> object_id;
    std::optional<std::string> receptacle_id;
    std::optional<Pos> cell;  // Goto may target a raw cell
    std::optional<AgentId> assigned_agent;
};

struct GoalPredicate {
    std::string object_id;
    std::string receptacle_id;  // object must end up inside this receptacle
};

struct TaskSpec {
    std::string task_id;
    std::string scene;  // scene name
    std::vector<GoalPredicate> goal;
    std::string description;
};

// ---- strict JSON loaders ------------------------------------------------

namespace detail {
inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> keys,
                           const std::string& what) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : keys)
            if (it.key() == k) known = true;
        if (!known) throw EnvError(what + ": unknown field '" + it.key() + "'");
    }
}
inline Pos pos_from(const nlohmann::json& j) {
    return Pos{j.at(0).get<int>(), j.at(1).get<int>()};
}
}  // namespace detail

inline Scene scene_from_json(const nlohmann::json& j) {
    detail::reject_unknown(j, {"name", "width", "height", "walls", "objects",
                               "receptacles", "agent_starts", "max_steps"}, "scene");
    Scene s;
    s.name = j.at("name").get<std::string>();
    s.width = j.at("width").get<int>();
    s.height = j.at("height").get<int>();
    s.max_steps = j.at("max_steps").get<int>();
    if (s.max_steps < 1) throw EnvError("scene: max_steps must be >= 1");
    for (const auto& w : j.value("walls", nlohmann::json::array()))
        s.walls.insert({w.at(0).get<int>(), w.at(1).get<int>()});
    for (const auto& o : j.value("objects", nlohmann::json::array())) {
        detail::reject_unknown(o, {"object_id", "type", "pos"}, "object");
        s.objects.push_back({o.at("object_id").get<std::string>(),
                             o.at("type").get<std::string>(), detail::pos_from(o.at("pos"))});
    }
    for (const auto& r : j.value("receptacles", nlohmann::json::array())) {
        detail::reject_unknown(r, {"receptacle_id", "type", "pos", "capacity"}, "receptacle");
        s.receptacles.push_back({r.at("receptacle_id").get<std::string>(),
                                 r.at("type").get<std::string>(), detail::pos_from(r.at("pos")),
                                 r.value("capacity", 1)});
    }
    for (const auto& a : j.at("agent_starts")) s.agent_starts.push_back(detail::pos_from(a));

    std::set<std::pair<int, int>> seen;
    for (Pos p : s.agent_starts) {
        if (!s.in_bounds(p) || s.is_wall(p)) throw EnvError("scene: bad agent start");
        if (!seen.insert({p.x, p.y}).second) throw EnvError("scene: duplicate agent start");
    }
    for (const auto& o : s.objects)
        if (!s.in_bounds(o.pos) || s.is_wall(o.pos)) throw EnvError("scene: bad object pos");
    for (const auto& r : s.receptacles)
        if (!s.in_bounds(r.pos) || s.is_wall(r.pos)) throw EnvError("scene: bad receptacle pos");
    return s;
}

inline TaskSpec task_from_json(const nlohmann::json& j) {
    detail::reject_unknown(j, {"task_id", "scene", "goal", "description"}, "task");
    TaskSpec t;
    t.task_id = j.at("task_id").get<std::string>();
    t.scene = j.at("scene").get<std::string>();
    t.description = j.at("description").get<std::string>();
    for (const auto& g : j.at("goal")) {
        detail::reject_unknown(g, {"object", "receptacle"}, "goal predicate");
        t.goal.push_back({g.at("object").get<std::string>(), g.at("receptacle").get<std::string>()});
    }
    return t;
}

inline nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw EnvError("cannot open " + path);
    nlohmann::json j;
    in >> j;
    return j;
}
inline Scene load_scene(const std::string& path) { return scene_from_json(load_json_file(path)); }
inline TaskSpec load_task(const std::string& path) { return task_from_json(load_json_file(path)); }

// ---- forward decl: the plan lives in planner.hpp ------------------------
struct PlanSequence;

// Deterministic multi-agent gridworld. One instance per rollout; holds
// scene/task/plan context, while GlobalState carries all mutable state.
class Env {
public:
    Env(Scene scene, TaskSpec task, int k_window = 5)
        : scene_(std::move(scene)), task_(std::move(task)), k_(k_window) {
        if (task_.scene != scene_.name) throw SceneTaskMismatch(task_.scene, scene_.name);
        for (const auto& g : task_.goal) {
            if (scene_.object_index(g.object_id) < 0)
                throw EnvError("goal references unknown object " + g.object_id);
            if (scene_.receptacle_index(g.receptacle_id) < 0)
                throw EnvError("goal references unknown receptacle " + g.receptacle_id);
        }
    }

    const Scene& scene() const { return scene_; }
    const TaskSpec& task() const { return task_; }
    int n_agents() const { return static_cast<int>(scene_.agent_starts.size()); }
    int k_window() const { return k_; }

    // Per-agent subtask targets come from the attached plan.
    void attach_plan(const std::vector<Subtask>& subtasks) { plan_ = subtasks; }
    const std::vector<Subtask>& plan() const { return plan_; }

    // Reset is seed-independent; the seed only feeds downstream sampling.
    GlobalState reset(int /*seed*/ = 0) const {
        GlobalState st;
        for (Pos p : scene_.agent_starts) st.agents.push_back({p, -1});
        for (const auto& o : scene_.objects) st.objects.push_back({ObjLoc::Floor, o.pos, -1, -1});
        st.subtask_status.assign(plan_.size(), false);
        st.step = 0;
        return st;
    }

    struct StepResult {
        GlobalState state;
        EventSet events;
        bool done = false;
        Failure failure = Failure::None;
    };

    StepResult step(const GlobalState& state, const JointAction& joint) const {
        const int n = n_agents();
        if (static_cast<int>(joint.size()) != n)
            throw InvalidActionArity(joint.size(), n);

        StepResult res;
        res.state = state;
        res.state.subtask_status.resize(plan_.size(), false);
        res.events.agents.resize(n);
        GlobalState& st = res.state;

        // 1. resolve movement targets simultaneously
        std::vector<Pos> target(n);
        for (int i = 0; i < n; ++i) {
            Pos p = state.agents[i].pos;
            Pos q = p;
            switch (joint[i]) {
                case Action::MoveAhead: q.y += 1; break;
                case Action::MoveBack: q.y -= 1; break;
                case Action::MoveLeft: q.x -= 1; break;
                case Action::MoveRight: q.x += 1; break;
                default: break;
            }
            if (q != p && (!scene_.in_bounds(q) || scene_.is_wall(q))) {
                res.events.agents[i].bumped_wall = true;
                q = p;
            }
            target[i] = q;
        }

        // 2. detect collisions: two agents in the same cell, or a swap
        for (int i = 0; i < n && !res.events.collision; ++i) {
            for (int j = i + 1; j < n; ++j) {
                bool same_cell = target[i] == target[j];
                bool swap = target[i] == state.agents[j].pos && target[j] == state.agents[i].pos &&
                            !(target[i] == state.agents[i].pos);
                if (same_cell || swap) {
                    res.events.collision = true;
                    res.events.agents[i].collided = true;
                    res.events.agents[j].collided = true;
                    break;
                }
            }
        }
        if (res.events.collision) {
            st.step += 1;
            res.done = true;
            res.failure = Failure::Collision;
            return res;
        }

        // 3. apply moves
        for (int i = 0; i < n; ++i) {
            if (target[i] != state.agents[i].pos) res.events.agents[i].moved = true;
            st.agents[i].pos = target[i];
        }

        // 4. pickup / put (sequential by agent index; moves already final)
        for (int i = 0; i < n; ++i) {
            if (joint[i] == Action::PickupObject && st.agents[i].held < 0) {
                int obj = pick_candidate(st, i);
                if (obj >= 0) {
                    st.objects[obj] = {ObjLoc::Held, {}, i, -1};
                    st.agents[i].held = obj;
                    res.events.agents[i].picked = obj;
                }
            } else if (joint[i] == Action::PutObject && st.agents[i].held >= 0) {
                int rec = put_candidate(st, i);
                if (rec >= 0) {
                    int obj = st.agents[i].held;
                    st.objects[obj] = {ObjLoc::InReceptacle, {}, -1, rec};
                    st.agents[i].held = -1;
                    res.events.agents[i].placed = obj;
                    res.events.agents[i].placed_in = rec;
                }
            }
        }

        st.step += 1;

        // 5. subtask completion (monotone flags)
        bool had_incomplete = false;
        for (std::size_t l = 0; l < plan_.size(); ++l) {
            if (st.subtask_status[l]) continue;
            had_incomplete = true;
            if (subtask_satisfied(st, plan_[l])) {
                st.subtask_status[l] = true;
                res.events.any_subtask_completed = true;
                int who = plan_[l].assigned_agent.value_or(0);
                res.events.agents[who].subtasks_completed.push_back(static_cast<int>(l));
            }
        }
        if (had_incomplete && !plan_.empty() &&
            std::all_of(st.subtask_status.begin(), st.subtask_status.end(),
                        [](bool b) { return b; }))
            res.events.all_subtasks_completed = true;

        // 6. goal / timeout
        if (goal_holds(st)) {
            res.events.goal_reached = true;
            res.done = true;
        } else if (st.step >= scene_.max_steps) {
            res.done = true;
            res.failure = Failure::Timeout;
        }
        return res;
    }

    bool goal_holds(const GlobalState& st) const {
        for (const auto& g : task_.goal) {
            int obj = scene_.object_index(g.object_id);
            int rec = scene_.receptacle_index(g.receptacle_id);
            if (st.objects[obj].loc != ObjLoc::InReceptacle || st.objects[obj].receptacle != rec)
                return false;
        }
        return true;
    }

    // The first incomplete subtask assigned to this agent (unassigned
    // subtasks belong to every agent), or the idle sentinel.
    int current_subtask(const GlobalState& st, AgentId agent) const {
        for (std::size_t l = 0; l < plan_.size(); ++l) {
            if (l < st.subtask_status.size() && st.subtask_status[l]) continue;
            const auto& z = plan_[l];
            if (!z.assigned_agent || *z.assigned_agent == agent) return static_cast<int>(l);
        }
        return kIdleSubtask;
    }

    // Manhattan-distance target of a subtask in a given state (nullopt
    // when the target is not on the floor / not locatable).
    std::optional<Pos> subtask_target(const GlobalState& st, const Subtask& z) const {
        switch (z.verb) {
            case Verb::Goto:
                if (z.cell) return z.cell;
                if (z.object_id) {
                    int o = scene_.object_index(*z.object_id);
                    if (o >= 0) {
                        if (st.objects[o].loc == ObjLoc::Floor) return st.objects[o].pos;
                        return std::nullopt;
                    }
                    // Goto may name a receptacle in the object slot
                    int r = scene_.receptacle_index(*z.object_id);
                    if (r >= 0) return scene_.receptacles[r].pos;
                    return std::nullopt;
                }
                if (z.receptacle_id) {
                    int r = scene_.receptacle_index(*z.receptacle_id);
                    if (r >= 0) return scene_.receptacles[r].pos;
                }
                return std::nullopt;
            case Verb::Pickup: {
                int o = z.object_id ? scene_.object_index(*z.object_id) : -1;
                if (o >= 0 && st.objects[o].loc == ObjLoc::Floor) return st.objects[o].pos;
                return std::nullopt;
            }
            case Verb::Put: {
                int r = z.receptacle_id ? scene_.receptacle_index(*z.receptacle_id) : -1;
                if (r >= 0) return scene_.receptacles[r].pos;
                return std::nullopt;
            }
        }
        return std::nullopt;
    }

    Observation observe(const GlobalState& st, AgentId agent) const {
        Observation o;
        const Pos c = st.agents[agent].pos;
        const int half = k_ / 2;
        o.local_window.reserve(k_ * k_);
        for (int dy = -half; dy <= half; ++dy) {
            for (int dx = -half; dx <= half; ++dx) {
                o.local_window.push_back(cell_code(st, Pos{c.x + dx, c.y + dy}));
            }
        }
        o.self_pos = c;
        o.held = st.agents[agent].held;
        o.subtask_code = current_subtask(st, agent);
        o.step_frac = static_cast<double>(st.step) / scene_.max_steps;
        return o;
    }

    std::vector<Observation> observe_all(const GlobalState& st) const {
        std::vector<Observation> out;
        for (int i = 0; i < n_agents(); ++i) out.push_back(observe(st, i));
        return out;
    }

    // Flattened feature dimensions for policy/critic inputs.
    int obs_feature_dim() const { return k_ * k_ * 5 + 13; }
    int state_feature_dim() const {
        return scene_.width * scene_.height * 5 + 3 * n_agents() + 8 + 1;
    }

    // Full-state encoding for the centralized critics: grid one-hot,
    // per-agent (x, y, held), subtask flags (8 slots), step fraction.
    std::vector<double> state_features(const GlobalState& st) const {
        std::vector<double> out;
        out.reserve(state_feature_dim());
        for (int y = 0; y < scene_.height; ++y) {
            for (int x = 0; x < scene_.width; ++x) {
                int c = cell_code(st, Pos{x, y});
                for (int v = 0; v < 5; ++v) out.push_back(c == v ? 1.0 : 0.0);
            }
        }
        for (const auto& a : st.agents) {
            out.push_back(static_cast<double>(a.pos.x) / scene_.width);
            out.push_back(static_cast<double>(a.pos.y) / scene_.height);
            out.push_back(a.held >= 0 ? 1.0 : 0.0);
        }
        for (int s = 0; s < 8; ++s) {
            bool done = s < static_cast<int>(st.subtask_status.size()) && st.subtask_status[s];
            out.push_back(done ? 1.0 : 0.0);
        }
        out.push_back(static_cast<double>(st.step) / scene_.max_steps);
        return out;
    }

    // Canonical byte-stable text view of a state; feeds LLM prompts.
    std::string state_summary(const GlobalState& st) const {
        std::ostringstream os;
        os << "scene: " << scene_.name << " (" << scene_.width << "x" << scene_.height << ")\n";
        os << "agents:";
        for (int i = 0; i < n_agents(); ++i) {
            os << (i ? ";" : "") << " agent " << i << " at (" << st.agents[i].pos.x << ","
               << st.agents[i].pos.y << ") holding "
               << (st.agents[i].held >= 0 ? scene_.objects[st.agents[i].held].id : "none");
        }
        os << "\nobjects:";
        if (scene_.objects.empty()) {
            os << " none";
        } else {
            for (std::size_t i = 0; i < scene_.objects.size(); ++i) {
                os << (i ? ";" : "") << " " << scene_.objects[i].id << " ";
                const auto& ob = st.objects[i];
                switch (ob.loc) {
                    case ObjLoc::Floor: os << "at (" << ob.pos.x << "," << ob.pos.y << ")"; break;
                    case ObjLoc::Held: os << "held by agent " << ob.holder; break;
                    case ObjLoc::InReceptacle:
                        os << "in " << scene_.receptacles[ob.receptacle].id;
                        break;
                }
            }
        }
        os << "\nreceptacles:";
        if (scene_.receptacles.empty()) {
            os << " none";
        } else {
            for (std::size_t i = 0; i < scene_.receptacles.size(); ++i) {
                const auto& r = scene_.receptacles[i];
                os << (i ? ";" : "") << " " << r.id << " at (" << r.pos.x << "," << r.pos.y
                   << ") capacity " << r.capacity;
            }
        }
        os << "\ngoal:";
        if (task_.goal.empty()) {
            os << " none";
        } else {
            for (std::size_t i = 0; i < task_.goal.size(); ++i)
                os << (i ? ";" : "") << " put " << task_.goal[i].object_id << " in "
                   << task_.goal[i].receptacle_id;
        }
        os << "\ntask: " << task_.description << "\n";
        os << "step: " << st.step << "\n";
        return os.str();
    }

private:
    // cell codes: 0 empty, 1 wall, 2 object, 3 receptacle, 4 agent
    int cell_code(const GlobalState& st, Pos p) const {
        if (!scene_.in_bounds(p) || scene_.is_wall(p)) return 1;
        for (const auto& a : st.agents)
            if (a.pos == p) return 4;
        for (const auto& ob : st.objects)
            if (ob.loc == ObjLoc::Floor && ob.pos == p) return 2;
        for (const auto& r : scene_.receptacles)
            if (r.pos == p) return 3;
        return 0;
    }

    static bool adjacent_or_same(Pos a, Pos b) { return manhattan(a, b) <= 1; }

    // Prefer the agent's current subtask object; otherwise lowest index
    // floor object in reach.
    int pick_candidate(const GlobalState& st, AgentId agent) const {
        int code = current_subtask(st, agent);
        if (code >= 0 && plan_[code].verb == Verb::Pickup && plan_[code].object_id) {
            int o = scene_.object_index(*plan_[code].object_id);
            if (o >= 0 && st.objects[o].loc == ObjLoc::Floor &&
                adjacent_or_same(st.agents[agent].pos, st.objects[o].pos))
                return o;
        }
        for (std::size_t o = 0; o < st.objects.size(); ++o) {
            if (st.objects[o].loc == ObjLoc::Floor &&
                adjacent_or_same(st.agents[agent].pos, st.objects[o].pos))
                return static_cast<int>(o);
        }
        return -1;
    }

    int receptacle_load(const GlobalState& st, int rec) const {
        int n = 0;
        for (const auto& ob : st.objects)
            if (ob.loc == ObjLoc::InReceptacle && ob.receptacle == rec) ++n;
        return n;
    }

    int put_candidate(const GlobalState& st, AgentId agent) const {
        int code = current_subtask(st, agent);
        if (code >= 0 && plan_[code].verb == Verb::Put && plan_[code].receptacle_id) {
            int r = scene_.receptacle_index(*plan_[code].receptacle_id);
            if (r >= 0 && adjacent_or_same(st.agents[agent].pos, scene_.receptacles[r].pos) &&
                receptacle_load(st, r) < scene_.receptacles[r].capacity)
                return r;
        }
        for (std::size_t r = 0; r < scene_.receptacles.size(); ++r) {
            if (adjacent_or_same(st.agents[agent].pos, scene_.receptacles[r].pos) &&
                receptacle_load(st, static_cast<int>(r)) < scene_.receptacles[r].capacity)
                return static_cast<int>(r);
        }
        return -1;
    }

    bool subtask_satisfied(const GlobalState& st, const Subtask& z) const {
        switch (z.verb) {
            case Verb::Goto: {
                auto t = subtask_target(st, z);
                if (!t) return true;  // target gone (e.g. object picked) counts as moot
                if (z.assigned_agent) return adjacent_or_same(st.agents[*z.assigned_agent].pos, *t);
                for (const auto& a : st.agents)
                    if (adjacent_or_same(a.pos, *t)) return true;
                return false;
            }
            case Verb::Pickup: {
                int o = scene_.object_index(*z.object_id);
                if (o < 0) return false;
                const auto& ob = st.objects[o];
                if (ob.loc == ObjLoc::InReceptacle) return true;  // already delivered
                if (ob.loc != ObjLoc::Held) return false;
                return !z.assigned_agent || ob.holder == *z.assigned_agent;
            }
            case Verb::Put: {
                int o = scene_.object_index(*z.object_id);
                int r = scene_.receptacle_index(*z.receptacle_id);
                if (o < 0 || r < 0) return false;
                return st.objects[o].loc == ObjLoc::InReceptacle && st.objects[o].receptacle == r;
            }
        }
        return false;
    }

    Scene scene_;
    TaskSpec task_;
    int k_;
    std::vector<Subtask> plan_;
};

// Declared AT step duration: the simulator is step-based, seconds are
// reported as steps * 0.25.
inline constexpr double kSecondsPerStep = 0.25;

}  // namespace lgc
