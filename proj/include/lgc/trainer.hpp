#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lgc/env.hpp"
#include "lgc/llm.hpp"
#include "lgc/metrics.hpp"
#include "lgc/planner.hpp"
#include "lgc/policy.hpp"
#include "lgc/reward.hpp"

namespace lgc {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class GraphCadence { PerStep, PerSubtask, PerEpisode };

struct RunConfig {
    std::vector<std::string> scene_files;
    std::vector<std::string> task_files;
    int n_agents = 2;
    std::uint64_t seed = 0;
    double gamma = 0.99;
    int warmup_episodes = 20;   // L
    int sync_period = 100;      // C, in update steps
    int batch_episodes = 16;    // B
    int updates_per_episode = 1;
    int buffer_capacity = 256;
    int max_episodes = 500;
    long max_env_steps = 0;     // 0 = unlimited
    GraphCadence graph_cadence = GraphCadence::PerSubtask;
    std::string backend = "scripted";  // scripted | remote
    std::string fixtures_dir = "fixtures";
    RemoteConfig remote;
    bool wo_critic = false;
    bool wo_reward = false;
    bool wo_graph = false;
    int eval_every = 50;       // episodes; 0 = only at start/end
    int eval_episodes = 100;
    double stop_at_sr = -1.0;  // stop once greedy eval SR reaches this (< 0: never)
    int k_window = 5;
    int max_revisions = 3;
    int checkpoint_every = 0;  // episodes; 0 = only final
    PolicyConfig policy;       // obs/state dims filled at setup

    std::uint64_t hash() const;
    nlohmann::json to_json() const;
};

inline GraphCadence cadence_from_string(const std::string& s) {
    if (s == "per-step") return GraphCadence::PerStep;
    if (s == "per-subtask") return GraphCadence::PerSubtask;
    if (s == "per-episode") return GraphCadence::PerEpisode;
    throw ConfigError("bad graph_cadence: " + s);
}
inline const char* cadence_to_string(GraphCadence c) {
    switch (c) {
        case GraphCadence::PerStep: return "per-step";
        case GraphCadence::PerSubtask: return "per-subtask";
        case GraphCadence::PerEpisode: return "per-episode";
    }
    return "?";
}

inline nlohmann::json RunConfig::to_json() const {
    nlohmann::json j;
    j["scenes"] = scene_files;
    j["tasks"] = task_files;
    j["n_agents"] = n_agents;
    j["seed"] = seed;
    j["gamma"] = gamma;
    j["warmup_episodes"] = warmup_episodes;
    j["sync_period"] = sync_period;
    j["batch_episodes"] = batch_episodes;
    j["updates_per_episode"] = updates_per_episode;
    j["buffer_capacity"] = buffer_capacity;
    j["max_episodes"] = max_episodes;
    j["max_env_steps"] = max_env_steps;
    j["graph_cadence"] = cadence_to_string(graph_cadence);
    j["backend"] = backend;
    j["fixtures_dir"] = fixtures_dir;
    j["remote"] = {{"base_url", remote.base_url}, {"model", remote.model},
                   {"timeout_s", remote.timeout_s}, {"max_retries", remote.max_retries}};
    j["wo_critic"] = wo_critic;
    j["wo_reward"] = wo_reward;
    j["wo_graph"] = wo_graph;
    j["eval_every"] = eval_every;
    j["eval_episodes"] = eval_episodes;
    j["stop_at_sr"] = stop_at_sr;
    j["k_window"] = k_window;
    j["max_revisions"] = max_revisions;
    j["checkpoint_every"] = checkpoint_every;
    j["lr_actor"] = policy.lr_actor;
    j["lr_critic"] = policy.lr_critic;
    j["grad_clip"] = policy.grad_clip;
    j["entropy_coef"] = policy.entropy_coef;
    j["eps_explore"] = policy.eps_explore;
    j["expected_pg"] = policy.expected_pg;
    j["baseline"] = policy.baseline;
    j["hidden"] = policy.hidden;
    j["embed_dim"] = policy.embed_dim;
    return j;
}

inline std::uint64_t RunConfig::hash() const { return fnv1a64(to_json().dump()); }

inline RunConfig config_from_json(const nlohmann::json& j) {
    RunConfig c;
    for (const auto& s : j.at("scenes")) c.scene_files.push_back(s.get<std::string>());
    for (const auto& t : j.at("tasks")) c.task_files.push_back(t.get<std::string>());
    if (c.scene_files.empty() || c.task_files.empty())
        throw ConfigError("config needs at least one scene and one task");
    c.n_agents = j.value("n_agents", 2);
    c.seed = j.value("seed", 0ULL);
    c.gamma = j.value("gamma", 0.99);
    c.warmup_episodes = j.value("warmup_episodes", 20);
    c.sync_period = j.value("sync_period", 100);
    c.batch_episodes = j.value("batch_episodes", 16);
    c.updates_per_episode = j.value("updates_per_episode", 1);
    c.buffer_capacity = j.value("buffer_capacity", 256);
    c.max_episodes = j.value("max_episodes", 500);
    c.max_env_steps = j.value("max_env_steps", 0L);
    c.graph_cadence = cadence_from_string(j.value("graph_cadence", "per-subtask"));
    c.backend = j.value("backend", "scripted");
    c.fixtures_dir = j.value("fixtures_dir", "fixtures");
    if (j.contains("remote")) {
        const auto& r = j.at("remote");
        c.remote.base_url = r.value("base_url", "");
        c.remote.model = r.value("model", "");
        c.remote.timeout_s = r.value("timeout_s", 60.0);
        c.remote.max_retries = r.value("max_retries", 3);
    }
    c.wo_critic = j.value("wo_critic", false);
    c.wo_reward = j.value("wo_reward", false);
    c.wo_graph = j.value("wo_graph", false);
    c.eval_every = j.value("eval_every", 50);
    c.eval_episodes = j.value("eval_episodes", 100);
    c.stop_at_sr = j.value("stop_at_sr", -1.0);
    c.k_window = j.value("k_window", 5);
    c.max_revisions = j.value("max_revisions", 3);
    c.checkpoint_every = j.value("checkpoint_every", 0);
    c.policy.lr_actor = j.value("lr_actor", 3e-4);
    c.policy.lr_critic = j.value("lr_critic", 1e-3);
    c.policy.grad_clip = j.value("grad_clip", 1.0);
    c.policy.entropy_coef = j.value("entropy_coef", 0.01);
    c.policy.eps_explore = j.value("eps_explore", 0.0);
    c.policy.expected_pg = j.value("expected_pg", true);
    c.policy.baseline = j.value("baseline", true);
    c.policy.hidden = j.value("hidden", 64);
    c.policy.embed_dim = j.value("embed_dim", 8);
    if (c.sync_period < 1 || c.batch_episodes < 1 || c.buffer_capacity < 1 ||
        c.eval_episodes < 1 || c.max_revisions < 1)
        throw ConfigError("all periods/sizes must be >= 1");
    return c;
}

inline RunConfig load_config(const std::string& path) {
    return config_from_json(load_json_file(path));
}

// Applies "key=value" overrides to the JSON form of a config.
inline nlohmann::json apply_overrides(nlohmann::json j,
                                      const std::vector<std::string>& overrides) {
    for (const auto& kv : overrides) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got " + kv);
        std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
        try {
            j[key] = nlohmann::json::parse(val);
        } catch (const nlohmann::json::parse_error&) {
            j[key] = val;  // bare string
        }
    }
    return j;
}

// ---- run context ----------------------------------------------------------

struct TaskContext {
    std::shared_ptr<Env> env;
    PlanSequence plan;
    DependencyGraph graph;
    RewardProgram reward;
    bool planned = false;
};

struct TrainResult {
    PolicyParams params;
    RunLog log;
    TokenLedger ledger;
    long env_steps = 0;
    long updates = 0;
};

struct ReplayRecord {
    std::string task_id;
    long episode = 0;
    std::vector<JointAction> actions;
    std::uint64_t final_state_digest = 0;
};

inline std::uint64_t state_digest(const GlobalState& st) {
    std::ostringstream os;
    for (const auto& a : st.agents) os << a.pos.x << "," << a.pos.y << "," << a.held << ";";
    for (const auto& o : st.objects)
        os << static_cast<int>(o.loc) << "," << o.pos.x << "," << o.pos.y << "," << o.holder
           << "," << o.receptacle << ";";
    for (bool b : st.subtask_status) os << (b ? 1 : 0);
    os << "|" << st.step;
    return fnv1a64(os.str());
}

class Trainer {
public:
    explicit Trainer(RunConfig cfg) : cfg_(std::move(cfg)), rng_(cfg_.seed) {
        if (cfg_.backend == "scripted") {
            client_ = std::make_unique<LlmClient>(
                std::make_shared<ScriptedBackend>(cfg_.fixtures_dir));
        } else if (cfg_.backend == "remote") {
            client_ = std::make_unique<LlmClient>(std::make_shared<RemoteBackend>(cfg_.remote));
        } else {
            throw ConfigError("unknown backend: " + cfg_.backend);
        }
        setup_tasks();
    }

    Trainer(RunConfig cfg, std::shared_ptr<LlmBackend> backend)
        : cfg_(std::move(cfg)), rng_(cfg_.seed) {
        client_ = std::make_unique<LlmClient>(std::move(backend));
        setup_tasks();
    }

    const RunConfig& config() const { return cfg_; }
    LlmClient& client() { return *client_; }
    const std::vector<TaskContext>& task_contexts() const { return contexts_; }

    PolicyParams init_params() {
        Rng init_rng(cfg_.seed ^ 0x9e3779b97f4a7c15ULL);
        std::vector<std::string> ids;
        for (const auto& c : contexts_) ids.push_back(c.env->task().task_id);
        return PolicyParams::init(cfg_.policy, ids, init_rng);
    }

    // Algorithm-1 loop: plan, generate reward, roll out, learn.
    TrainResult train() {
        TrainResult res{init_params(), {}, {}, 0, 0};
        ReplayBuffer buffer(cfg_.buffer_capacity);
        TokenLedger prev = client_->ledger_snapshot();
        bool stop = false;

        maybe_eval(res, 0);
        for (long episode = 0; episode < cfg_.max_episodes && !stop; ++episode) {
            TaskContext& ctx = contexts_[episode % contexts_.size()];
            EpisodeRow row;
            row.episode = episode;
            row.task_id = ctx.env->task().task_id;

            bool planned = ensure_planned(ctx);
            if (!planned) {
                row.failure = "planning";
                account_tokens(row, prev);
                res.log.episodes.push_back(row);
                continue;  // failed planning counts as a failed episode, no buffer write
            }

            auto [encoded, record, steps, success, failure] =
                rollout(ctx, res.params, SelectMode::Sample, &rng_);
            res.env_steps += steps;
            row.steps = steps;
            row.success = success;
            row.failure = failure;
            row.ret = episode_return(encoded);
            buffer.push(std::move(encoded));
            record.episode = episode;
            replays_.push_back(std::move(record));

            // During the warmup phase only the critic trains; the actor
            // joins once its advantage estimates have something to stand on.
            const bool in_warmup = episode + 1 <= cfg_.warmup_episodes;
            if (buffer.size() > 0) {
                for (int u = 0; u < cfg_.updates_per_episode; ++u) {
                    auto batch = buffer.sample(cfg_.batch_episodes, rng_);
                    row.critic_loss = critic_update(res.params, batch, cfg_.gamma);
                    if (!in_warmup) actor_update(res.params, batch);
                    ++res.updates;
                    if (res.updates % cfg_.sync_period == 0) res.params.sync_targets();
                }
            }

            account_tokens(row, prev);
            res.log.episodes.push_back(row);

            if (cfg_.eval_every > 0 && (episode + 1) % cfg_.eval_every == 0)
                stop = maybe_eval(res, episode + 1);
            if (cfg_.max_env_steps > 0 && res.env_steps >= cfg_.max_env_steps) stop = true;
            if (cfg_.checkpoint_every > 0 && (episode + 1) % cfg_.checkpoint_every == 0 &&
                !out_dir_.empty())
                save_checkpoint(out_dir_ + "/checkpoint.bin", res.params, rng_, cfg_.hash());
        }
        if (res.log.evals.empty() ||
            res.log.evals.back().episode != static_cast<long>(res.log.episodes.size()))
            maybe_eval(res, static_cast<long>(res.log.episodes.size()), /*force=*/true);
        res.ledger = client_->ledger_snapshot();
        return res;
    }

    struct EvalResult {
        double sr = 0.0;
        double at_steps = std::numeric_limits<double>::quiet_NaN();
        double at_seconds = std::numeric_limits<double>::quiet_NaN();
        std::vector<EpisodeRow> rows;
    };

    // Greedy rollouts, no learning, no buffer writes. AT is averaged over
    // successful episodes only (NaN sentinel when SR = 0).
    EvalResult evaluate(PolicyParams& params, int n_episodes) {
        EvalResult out;
        int successes = 0;
        double step_sum = 0.0;
        for (int e = 0; e < n_episodes; ++e) {
            TaskContext& ctx = contexts_[e % contexts_.size()];
            EpisodeRow row;
            row.episode = e;
            row.task_id = ctx.env->task().task_id;
            if (!ensure_planned(ctx)) {
                row.failure = "planning";
                out.rows.push_back(row);
                continue;
            }
            auto [encoded, record, steps, success, failure] =
                rollout(ctx, params, SelectMode::Greedy, nullptr);
            (void)encoded;
            (void)record;
            row.steps = steps;
            row.success = success;
            row.failure = failure;
            if (success) {
                ++successes;
                step_sum += steps;
            }
            out.rows.push_back(row);
        }
        out.sr = static_cast<double>(successes) / n_episodes;
        if (successes > 0) {
            out.at_steps = step_sum / successes;
            out.at_seconds = out.at_steps * kSecondsPerStep;
        }
        return out;
    }

    // Replays a recorded action sequence; true iff the final state digest
    // matches the record.
    bool verify_replay(const ReplayRecord& rec) {
        for (auto& ctx : contexts_) {
            if (ctx.env->task().task_id != rec.task_id) continue;
            if (!ensure_planned(ctx)) return false;
            GlobalState st = ctx.env->reset();
            for (const auto& ja : rec.actions) {
                auto r = ctx.env->step(st, ja);
                st = r.state;
                if (r.done) break;
            }
            return state_digest(st) == rec.final_state_digest;
        }
        return false;
    }

    const std::vector<ReplayRecord>& replays() const { return replays_; }
    void set_out_dir(const std::string& dir) { out_dir_ = dir; }

    void save_replays(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot write " + path);
        for (const auto& r : replays_) {
            nlohmann::json j;
            j["task_id"] = r.task_id;
            j["episode"] = r.episode;
            j["digest"] = hex64(r.final_state_digest);
            auto acts = nlohmann::json::array();
            for (const auto& ja : r.actions) {
                auto row = nlohmann::json::array();
                for (Action a : ja) row.push_back(static_cast<int>(a));
                acts.push_back(row);
            }
            j["actions"] = acts;
            out << j.dump() << "\n";
        }
    }

    static std::vector<ReplayRecord> load_replays(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot read " + path);
        std::vector<ReplayRecord> out;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto j = nlohmann::json::parse(line);
            ReplayRecord r;
            r.task_id = j.at("task_id").get<std::string>();
            r.episode = j.at("episode").get<long>();
            r.final_state_digest = std::stoull(j.at("digest").get<std::string>(), nullptr, 16);
            for (const auto& row : j.at("actions")) {
                JointAction ja;
                for (const auto& a : row) ja.push_back(static_cast<Action>(a.get<int>()));
                r.actions.push_back(ja);
            }
            out.push_back(r);
        }
        return out;
    }

private:
    void setup_tasks() {
        std::map<std::string, Scene> scenes;
        for (const auto& f : cfg_.scene_files) {
            Scene s = load_scene(f);
            scenes[s.name] = s;
        }
        for (const auto& f : cfg_.task_files) {
            TaskSpec t = load_task(f);
            auto it = scenes.find(t.scene);
            if (it == scenes.end())
                throw SceneTaskMismatch(t.scene, "(no loaded scene)");
            TaskContext ctx;
            ctx.env = std::make_shared<Env>(it->second, t, cfg_.k_window);
            if (ctx.env->n_agents() != cfg_.n_agents)
                throw ConfigError("scene " + t.scene + " declares " +
                                  std::to_string(ctx.env->n_agents()) + " agent starts, config " +
                                  std::to_string(cfg_.n_agents));
            contexts_.push_back(std::move(ctx));
        }
        // all scenes in a run must share feature dimensions
        cfg_.policy.n_agents = cfg_.n_agents;
        cfg_.policy.obs_dim = contexts_[0].env->obs_feature_dim();
        cfg_.policy.state_dim = contexts_[0].env->state_feature_dim();
        for (const auto& c : contexts_) {
            if (c.env->obs_feature_dim() != cfg_.policy.obs_dim ||
                c.env->state_feature_dim() != cfg_.policy.state_dim)
                throw ConfigError("scenes in one run must share grid dimensions");
        }
    }

    // Plan + reward generation, cached per task under scripted backends
    // (remote re-plans are still cached here; one planning pass per task
    // per run keeps token cost comparable across variants).
    bool ensure_planned(TaskContext& ctx) {
        if (ctx.planned) return true;
        Env& env = *ctx.env;
        GlobalState st0 = env.reset();
        try {
            if (cfg_.wo_critic) {
                // accept the first parse, no critic round
                ChatRequest prompt = build_planner_prompt(env, st0, cfg_.n_agents);
                ChatResponse resp = client_->complete(prompt);
                auto [plan, edges] = parse_plan(resp.text);
                ctx.plan = plan;
                ctx.graph = validate_dag(cfg_.n_agents,
                                         std::set<std::pair<int, int>>(edges.begin(), edges.end()));
            } else {
                PlanResult pr = plan_with_critique(env, st0, cfg_.n_agents, *client_,
                                                   cfg_.max_revisions);
                ctx.plan = pr.plan;
                ctx.graph = pr.graph;
            }
            env.attach_plan(ctx.plan.subtasks);
            if (cfg_.wo_reward) {
                ctx.reward = sparse_reward_program();
            } else {
                ctx.reward = generate_reward(env, st0, *client_);
            }
            ctx.planned = true;
            return true;
        } catch (const PlanError&) {
            return false;
        } catch (const GraphError&) {
            return false;
        } catch (const RewardError&) {
            return false;
        } catch (const FixtureMiss&) {
            return false;
        }
    }

    struct RolloutOut {
        EncodedEpisode encoded;
        ReplayRecord record;
        int steps = 0;
        bool success = false;
        std::string failure = "none";
    };

    RolloutOut rollout(TaskContext& ctx, PolicyParams& params, SelectMode mode, Rng* rng) {
        Env& env = *ctx.env;
        const int n = cfg_.n_agents;
        RolloutOut out;
        out.record.task_id = env.task().task_id;
        out.encoded.task_id = env.task().task_id;
        out.encoded.task_idx = params.task_index(env.task().task_id);

        GlobalState st = env.reset();
        AdjacencyMatrix adj = AdjacencyMatrix::zero(n);
        if (!cfg_.wo_graph)
            adj = to_adjacency(graph_from_llm(env.state_summary(st), ctx.plan, n, *client_,
                                              ctx.graph));
        RecurrentState rec = RecurrentState::zeros(n, cfg_.policy.hidden);

        while (true) {
            std::vector<Vec> obs_feats;
            std::vector<Observation> obs;
            for (int i = 0; i < n; ++i) {
                obs.push_back(env.observe(st, i));
                obs_feats.push_back(
                    to_vec(obs.back().flatten(env.scene().width, env.scene().height)));
            }
            JointSelection sel =
                select_joint_action(params, obs_feats, adj, out.encoded.task_idx, rec, mode, rng);
            auto sr = env.step(st, sel.actions);

            std::vector<double> rews(n);
            for (int i = 0; i < n; ++i) {
                auto [ind, team] = eval_reward(ctx.reward, sr.events, st, sr.state, i, env);
                rews[i] = ind + team;
            }

            out.encoded.obs.push_back(obs_feats);
            out.encoded.state.push_back(to_vec(env.state_features(st)));
            out.encoded.actions.push_back(sel.actions);
            out.encoded.reward.push_back(rews);
            out.encoded.adj.push_back(adj);
            out.encoded.done.push_back(sr.done);
            out.record.actions.push_back(sel.actions);

            st = sr.state;
            rec = sel.rec;
            ++out.steps;
            if (sr.done) {
                out.success = sr.failure == Failure::None && env.goal_holds(st);
                out.failure = failure_name(sr.failure);
                break;
            }
            if (!cfg_.wo_graph &&
                (cfg_.graph_cadence == GraphCadence::PerStep ||
                 (cfg_.graph_cadence == GraphCadence::PerSubtask && sr.events.any_subtask_completed)))
                adj = to_adjacency(
                    graph_from_llm(env.state_summary(st), ctx.plan, n, *client_, ctx.graph));
        }
        out.record.final_state_digest = state_digest(st);
        return out;
    }

    static double episode_return(const EncodedEpisode& ep) {
        double r = 0.0;
        for (const auto& step : ep.reward) {
            double mean = 0.0;
            for (double x : step) mean += x;
            r += mean / static_cast<double>(step.size());
        }
        return r;
    }

    void account_tokens(EpisodeRow& row, TokenLedger& prev) {
        TokenLedger now = client_->ledger_snapshot();
        row.tokens_planner = now.role(LlmRole::Planner).total() - prev.role(LlmRole::Planner).total();
        row.tokens_critic = now.role(LlmRole::Critic).total() - prev.role(LlmRole::Critic).total();
        row.tokens_graph = now.role(LlmRole::GraphGen).total() - prev.role(LlmRole::GraphGen).total();
        row.tokens_reward = now.role(LlmRole::RewardGen).total() - prev.role(LlmRole::RewardGen).total();
        prev = now;
    }

    // Runs a greedy eval and records it; returns true when the stop
    // threshold is reached.
    bool maybe_eval(TrainResult& res, long episode, bool force = false) {
        (void)force;
        EvalResult ev = evaluate(res.params, cfg_.eval_episodes);
        EvalRow row;
        row.episode = episode;
        row.sr = ev.sr;
        row.at_steps = ev.at_steps;
        row.at_seconds = ev.at_seconds;
        res.log.evals.push_back(row);
        return cfg_.stop_at_sr >= 0.0 && ev.sr >= cfg_.stop_at_sr;
    }

    RunConfig cfg_;
    Rng rng_;
    std::unique_ptr<LlmClient> client_;
    std::vector<TaskContext> contexts_;
    std::vector<ReplayRecord> replays_;
    std::string out_dir_;
};

// ---- ablation suite ---------------------------------------------------------

struct AblationCell {
    double sr_mean = 0.0, sr_sd = 0.0;
    double at_mean = std::numeric_limits<double>::quiet_NaN();
    double at_sd = std::numeric_limits<double>::quiet_NaN();
    double tokens_mean = 0.0;
    double tc = 0.0;  // normalized vs the other variants
    long graphgen_calls = 0;
    long rewardgen_calls = 0;
    long critic_calls = 0;
};

struct AblationTable {
    std::vector<std::string> variants;  // full, wo_critic, wo_reward, wo_graph
    std::vector<AblationCell> cells;    // aligned with variants
    std::string scene_name;
};

// Trains the full method plus the three ablations under identical
// seeds/budgets (Table-1 row structure).
inline AblationTable run_ablation_suite(const RunConfig& base,
                                        const std::vector<std::uint64_t>& seeds) {
    if (seeds.size() < 3) throw ConfigError("ablation suite needs >= 3 seeds");
    AblationTable table;
    table.variants = {"full", "wo_critic", "wo_reward", "wo_graph"};
    table.scene_name = load_scene(base.scene_files[0]).name;

    std::vector<double> token_means;
    for (const auto& variant : table.variants) {
        std::vector<double> srs, ats;
        double tokens = 0.0;
        AblationCell cell;
        for (std::uint64_t seed : seeds) {
            RunConfig cfg = base;
            cfg.seed = seed;
            cfg.wo_critic = variant == "wo_critic";
            cfg.wo_reward = variant == "wo_reward";
            cfg.wo_graph = variant == "wo_graph";
            Trainer tr(cfg);
            TrainResult res = tr.train();
            const EvalRow& last = res.log.evals.back();
            srs.push_back(last.sr);
            if (!std::isnan(last.at_seconds)) ats.push_back(last.at_seconds);
            tokens += static_cast<double>(res.ledger.total_tokens());
            cell.graphgen_calls += res.ledger.role(LlmRole::GraphGen).calls;
            cell.rewardgen_calls += res.ledger.role(LlmRole::RewardGen).calls;
            cell.critic_calls += res.ledger.role(LlmRole::Critic).calls;
        }
        auto mean_sd = [](const std::vector<double>& v) -> std::pair<double, double> {
            if (v.empty()) return {std::numeric_limits<double>::quiet_NaN(),
                                   std::numeric_limits<double>::quiet_NaN()};
            double m = 0.0;
            for (double x : v) m += x;
            m /= v.size();
            double s = 0.0;
            for (double x : v) s += (x - m) * (x - m);
            s = v.size() > 1 ? std::sqrt(s / (v.size() - 1)) : 0.0;
            return {m, s};
        };
        std::tie(cell.sr_mean, cell.sr_sd) = mean_sd(srs);
        std::tie(cell.at_mean, cell.at_sd) = mean_sd(ats);
        cell.tokens_mean = tokens / seeds.size();
        token_means.push_back(cell.tokens_mean);
        table.cells.push_back(cell);
    }
    auto tcs = normalize_token_costs(token_means);
    for (std::size_t i = 0; i < tcs.size(); ++i) table.cells[i].tc = tcs[i];
    return table;
}

inline std::string ablation_table_text(const AblationTable& t) {
    std::ostringstream os;
    os << "scene: " << t.scene_name << "\n";
    os << "metric";
    for (const auto& v : t.variants) os << "\t" << v;
    os << "\n";
    auto fmt = [](double v) {
        if (std::isnan(v)) return std::string("nan");
        char b[32];
        std::snprintf(b, sizeof(b), "%.3f", v);
        return std::string(b);
    };
    os << "SR";
    for (const auto& c : t.cells) os << "\t" << fmt(c.sr_mean) << "±" << fmt(c.sr_sd);
    os << "\nAT(s)";
    for (const auto& c : t.cells) os << "\t" << fmt(c.at_mean) << "±" << fmt(c.at_sd);
    os << "\nTC";
    for (const auto& c : t.cells) os << "\t" << fmt(c.tc);
    os << "\n";
    return os.str();
}

}  // namespace lgc
