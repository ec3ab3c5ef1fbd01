#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lgc {

using AgentId = int;

enum class Action : int {
    MoveAhead = 0,   // +y
    MoveBack = 1,    // -y
    MoveLeft = 2,    // -x
    MoveRight = 3,   // +x
    PickupObject = 4,
    PutObject = 5,
    NoOp = 6,
};
inline constexpr int kNumActions = 7;

inline const char* action_name(Action a) {
    switch (a) {
        case Action::MoveAhead: return "MoveAhead";
        case Action::MoveBack: return "MoveBack";
        case Action::MoveLeft: return "MoveLeft";
        case Action::MoveRight: return "MoveRight";
        case Action::PickupObject: return "PickupObject";
        case Action::PutObject: return "PutObject";
        case Action::NoOp: return "NoOp";
    }
    return "?";
}

using JointAction = std::vector<Action>;  // length N

struct Pos {
    int x = 0;
    int y = 0;
    friend bool operator==(const Pos&, const Pos&) = default;
};
inline int manhattan(Pos a, Pos b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y); }

// Sentinel for "no subtask assigned / all done".
inline constexpr int kIdleSubtask = -1;

struct Observation {
    std::vector<int> local_window;  // k*k cell codes, row-major, wall-padded
    Pos self_pos;
    int held = -1;            // object index or -1
    int subtask_code = kIdleSubtask;
    double step_frac = 0.0;

    // Deterministic flattened feature vector consumed by policies and
    // frozen in golden-file tests. Window cells are one-hot over the
    // 5-code vocabulary; subtask_code is one-hot over 8 slots + idle.
    std::vector<double> flatten(int grid_w, int grid_h) const {
        std::vector<double> out;
        out.reserve(local_window.size() * 5 + 14);
        for (int c : local_window) {
            for (int v = 0; v < 5; ++v) out.push_back(c == v ? 1.0 : 0.0);
        }
        out.push_back(static_cast<double>(self_pos.x) / grid_w);
        out.push_back(static_cast<double>(self_pos.y) / grid_h);
        out.push_back(held >= 0 ? 1.0 : 0.0);
        for (int s = 0; s < 8; ++s)
            out.push_back((subtask_code >= 0 && subtask_code % 8 == s) ? 1.0 : 0.0);
        out.push_back(subtask_code == kIdleSubtask ? 1.0 : 0.0);
        out.push_back(step_frac);
        return out;
    }

    friend bool operator==(const Observation&, const Observation&) = default;
};

enum class Failure { None, Collision, Timeout };

inline const char* failure_name(Failure f) {
    switch (f) {
        case Failure::None: return "none";
        case Failure::Collision: return "collision";
        case Failure::Timeout: return "timeout";
    }
    return "?";
}

struct AgentState {
    Pos pos;
    int held = -1;  // object index or -1
    friend bool operator==(const AgentState&, const AgentState&) = default;
};

// Where each object currently is: on the floor, in a hand, or placed.
enum class ObjLoc { Floor, Held, InReceptacle };

struct ObjectState {
    ObjLoc loc = ObjLoc::Floor;
    Pos pos;            // valid when loc == Floor
    int holder = -1;    // agent index when Held
    int receptacle = -1;  // receptacle index when InReceptacle
    friend bool operator==(const ObjectState&, const ObjectState&) = default;
};

struct GlobalState {
    std::vector<AgentState> agents;
    std::vector<ObjectState> objects;
    std::vector<bool> subtask_status;  // one flag per plan subtask
    int step = 0;
    friend bool operator==(const GlobalState&, const GlobalState&) = default;
};

// Per-step events reported by the environment.
struct EventSet {
    struct PerAgent {
        bool moved = false;
        bool bumped_wall = false;
        int picked = -1;   // object index
        int placed = -1;   // object index
        int placed_in = -1;  // receptacle index
        bool collided = false;
        std::vector<int> subtasks_completed;  // plan indices
    };
    std::vector<PerAgent> agents;
    bool any_subtask_completed = false;
    bool all_subtasks_completed = false;  // fires on the completing step only
    bool goal_reached = false;            // fires on the goal step only
    bool collision = false;
};

struct AdjacencyMatrix;  // graph.hpp

struct Transition {
    std::vector<Observation> obs;
    GlobalState state;
    JointAction joint_action;
    std::vector<double> reward_individual;  // per agent
    double reward_team = 0.0;               // identical across agents
    std::vector<Observation> next_obs;
    GlobalState next_state;
    EventSet events;
    std::vector<std::vector<int>> adjacency;  // matrix in force at this step
    bool done = false;
    Failure failure = Failure::None;
};

struct Discount {
    double gamma = 0.99;
    explicit Discount(double g) : gamma(g) {
        if (!(g >= 0.0 && g < 1.0)) throw std::invalid_argument("discount must be in [0,1)");
    }
};

// Sum_k gamma^k r_k; empty sequence -> 0.
inline double discounted_return(const std::vector<double>& rewards, Discount gamma) {
    double acc = 0.0;
    double g = 1.0;
    for (double r : rewards) {
        acc += g * r;
        g *= gamma.gamma;
    }
    return acc;
}

}  // namespace lgc
