#pragma once

#include <deque>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lgc/core.hpp"
#include "lgc/graph.hpp"
#include "lgc/nn.hpp"

namespace lgc {

using nn::Mat;
using nn::Vec;

struct DuplicateTask : std::runtime_error {
    explicit DuplicateTask(const std::string& id)
        : std::runtime_error("task id already present: " + id) {}
};

struct PolicyConfig {
    int n_agents = 2;
    int obs_dim = 0;
    int state_dim = 0;
    int n_actions = kNumActions;
    int hidden = 64;
    int embed_dim = 8;
    double lr_actor = 3e-4;
    double lr_critic = 1e-3;
    double grad_clip = 1.0;
    double entropy_coef = 0.01;  // entropy bonus in the actor objective
    double eps_explore = 0.0;    // uniform-random action rate in sampled rollouts
    // When true the actor gradient takes the exact expectation over the
    // agent's own action (others fixed to the recorded joint action), using
    // the same per-action critic queries as the counterfactual baseline.
    // When false it uses the classic sampled score-function estimator.
    bool expected_pg = true;
    bool baseline = true;  // counterfactual own-action baseline in the actor update
};

// Per-agent recurrent actors and centralized critics plus target copies
// and the task-embedding table.
struct PolicyParams {
    PolicyConfig cfg;
    std::vector<nn::RecurrentNet> actors, critics;
    std::vector<nn::RecurrentNet> target_actors, target_critics;
    std::vector<std::string> task_ids;
    std::vector<Vec> embeddings, target_embeddings;
    std::vector<nn::Adam> actor_opt, critic_opt;
    nn::Adam embed_opt_actor, embed_opt_critic;

    static PolicyParams init(const PolicyConfig& cfg, const std::vector<std::string>& tasks,
                             Rng& rng) {
        PolicyParams p;
        p.cfg = cfg;
        const int actor_in = cfg.obs_dim + cfg.n_actions + cfg.embed_dim;
        const int critic_in = cfg.state_dim + cfg.n_agents * cfg.n_actions + cfg.embed_dim;
        for (int i = 0; i < cfg.n_agents; ++i) {
            nn::RecurrentNet a, c;
            a.init(actor_in, cfg.hidden, cfg.n_actions, rng);
            c.init(critic_in, cfg.hidden, 1, rng);
            p.actors.push_back(a);
            p.critics.push_back(c);
            p.actor_opt.emplace_back(cfg.lr_actor, 0.9, 0.999, 1e-8, cfg.grad_clip);
            p.critic_opt.emplace_back(cfg.lr_critic, 0.9, 0.999, 1e-8, cfg.grad_clip);
        }
        for (const auto& t : tasks) {
            p.task_ids.push_back(t);
            p.embeddings.push_back(
                Vec::NullaryExpr(cfg.embed_dim, [&]() { return rng.uniform(-0.1, 0.1); }));
        }
        p.embed_opt_actor = nn::Adam(cfg.lr_actor, 0.9, 0.999, 1e-8, cfg.grad_clip);
        p.embed_opt_critic = nn::Adam(cfg.lr_critic, 0.9, 0.999, 1e-8, cfg.grad_clip);
        p.target_actors = p.actors;
        p.target_critics = p.critics;
        p.target_embeddings = p.embeddings;
        return p;
    }

    int task_index(const std::string& id) const {
        for (std::size_t i = 0; i < task_ids.size(); ++i)
            if (task_ids[i] == id) return static_cast<int>(i);
        throw std::runtime_error("unknown task id: " + id);
    }

    void sync_targets() {
        target_actors = actors;
        target_critics = critics;
        target_embeddings = embeddings;
    }

    // Warm-starts a new task embedding; network weights untouched.
    // Optimizer moments are reset since the parameter list changes shape.
    enum class EmbedInit { MeanEmbed, Zero };
    void adapt_to_task(const std::string& new_task_id, EmbedInit init) {
        for (const auto& t : task_ids)
            if (t == new_task_id) throw DuplicateTask(new_task_id);
        Vec row = Vec::Zero(cfg.embed_dim);
        if (init == EmbedInit::MeanEmbed && !embeddings.empty()) {
            for (const auto& e : embeddings) row += e;
            row /= static_cast<double>(embeddings.size());
        }
        task_ids.push_back(new_task_id);
        embeddings.push_back(row);
        target_embeddings.push_back(row);
        embed_opt_actor = nn::Adam(cfg.lr_actor, 0.9, 0.999, 1e-8, cfg.grad_clip);
        embed_opt_critic = nn::Adam(cfg.lr_critic, 0.9, 0.999, 1e-8, cfg.grad_clip);
    }
};

struct RecurrentState {
    std::vector<Vec> actor_h;   // one per agent
    std::vector<Vec> critic_h;

    static RecurrentState zeros(int n_agents, int hidden) {
        RecurrentState s;
        s.actor_h.assign(n_agents, Vec::Zero(hidden));
        s.critic_h.assign(n_agents, Vec::Zero(hidden));
        return s;
    }
};

inline Vec one_hot_action(Action a, int n_actions) {
    Vec v = Vec::Zero(n_actions);
    v[static_cast<int>(a)] = 1.0;
    return v;
}

// Sum of parent action one-hots under M (zero vector when no parents).
inline Vec parent_encoding(const AdjacencyMatrix& m, AgentId i, const JointAction& joint,
                           int n_actions) {
    Vec v = Vec::Zero(n_actions);
    for (int j = 0; j < m.n; ++j)
        if (m.m[j][i]) v += one_hot_action(joint[j], n_actions);
    return v;
}

inline Vec to_vec(const std::vector<double>& v) {
    return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline Vec actor_input(const PolicyConfig& cfg, const Vec& obs_feat, const Vec& parent_enc,
                       const Vec& task_embed) {
    Vec x(cfg.obs_dim + cfg.n_actions + cfg.embed_dim);
    x << obs_feat, parent_enc, task_embed;
    return x;
}
inline Vec critic_input(const PolicyConfig& cfg, const Vec& state_feat, const JointAction& joint,
                        const Vec& task_embed) {
    Vec x(cfg.state_dim + cfg.n_agents * cfg.n_actions + cfg.embed_dim);
    Vec acts = Vec::Zero(cfg.n_agents * cfg.n_actions);
    for (int i = 0; i < cfg.n_agents; ++i)
        acts[i * cfg.n_actions + static_cast<int>(joint[i])] = 1.0;
    x << state_feat, acts, task_embed;
    return x;
}

// Categorical distribution over actions plus next hidden state.
inline std::pair<Vec, Vec> actor_forward(const nn::RecurrentNet& actor, const PolicyConfig& cfg,
                                         const Vec& obs_feat, const Vec& parent_enc,
                                         const Vec& task_embed, const Vec& h_prev,
                                         nn::RecurrentNet::Cache* cache = nullptr) {
    auto [logits, h] = actor.forward(actor_input(cfg, obs_feat, parent_enc, task_embed), h_prev, cache);
    return {nn::softmax(logits), h};
}

inline std::pair<double, Vec> critic_forward(const nn::RecurrentNet& critic,
                                             const PolicyConfig& cfg, const Vec& state_feat,
                                             const JointAction& joint, const Vec& task_embed,
                                             const Vec& h_prev,
                                             nn::RecurrentNet::Cache* cache = nullptr) {
    auto [q, h] = critic.forward(critic_input(cfg, state_feat, joint, task_embed), h_prev, cache);
    return {q[0], h};
}

enum class SelectMode { Sample, Greedy };

struct JointSelection {
    JointAction actions;
    RecurrentState rec;
    std::vector<double> log_probs;  // per agent, of the chosen action
};

// Iterates agents in topo order; each conditions on already-chosen
// parent actions. Greedy ties break toward the lowest action index.
inline JointSelection select_joint_action(const PolicyParams& p,
                                          const std::vector<Vec>& obs_feats,
                                          const AdjacencyMatrix& m, int task_idx,
                                          const RecurrentState& rec, SelectMode mode,
                                          Rng* rng = nullptr, bool use_targets = false) {
    const int n = p.cfg.n_agents;
    if (static_cast<int>(obs_feats.size()) != n)
        throw nn::ShapeMismatch("select_joint_action: obs count != n_agents");
    JointSelection out;
    out.actions.assign(n, Action::NoOp);
    out.rec = rec;
    out.log_probs.assign(n, 0.0);
    const auto& actors = use_targets ? p.target_actors : p.actors;
    const auto& embeds = use_targets ? p.target_embeddings : p.embeddings;
    for (AgentId i : topo_order(m)) {
        Vec penc = parent_encoding(m, i, out.actions, p.cfg.n_actions);
        auto [probs, h] = actor_forward(actors[i], p.cfg, obs_feats[i], penc, embeds[task_idx],
                                        rec.actor_h[i]);
        int a = 0;
        if (mode == SelectMode::Greedy) {
            for (int k = 1; k < p.cfg.n_actions; ++k)
                if (probs[k] > probs[a]) a = k;
        } else if (p.cfg.eps_explore > 0.0 && rng->uniform() < p.cfg.eps_explore) {
            a = static_cast<int>(rng->index(static_cast<std::size_t>(p.cfg.n_actions)));
        } else {
            double u = rng->uniform();
            double acc = 0.0;
            a = p.cfg.n_actions - 1;
            for (int k = 0; k < p.cfg.n_actions; ++k) {
                acc += probs[k];
                if (u < acc) { a = k; break; }
            }
        }
        out.actions[i] = static_cast<Action>(a);
        out.rec.actor_h[i] = h;
        out.log_probs[i] = std::log(std::max(probs[a], 1e-300));
    }
    return out;
}

// r + gamma * max(q_next) unless terminal.
inline double td_target(double r, bool done, double gamma, const std::vector<double>& q_next) {
    if (done) return r;
    if (q_next.empty()) throw std::invalid_argument("td_target: empty q_next");
    double m = q_next[0];
    for (double q : q_next) m = std::max(m, q);
    return r + gamma * m;
}

// ---- episode storage -----------------------------------------------------

// Feature-encoded episode, the unit stored in the replay buffer.
struct EncodedEpisode {
    std::string task_id;
    int task_idx = 0;
    std::vector<std::vector<Vec>> obs;    // [t][agent]
    std::vector<Vec> state;               // [t]
    std::vector<JointAction> actions;     // [t]
    std::vector<std::vector<double>> reward;  // [t][agent], individual + team
    std::vector<AdjacencyMatrix> adj;     // [t]
    std::vector<bool> done;               // [t], true only at the end

    int length() const { return static_cast<int>(actions.size()); }
};

class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

    void push(EncodedEpisode ep) {
        episodes_.push_back(std::move(ep));
        if (episodes_.size() > capacity_) episodes_.pop_front();
    }
    std::size_t size() const { return episodes_.size(); }
    const EncodedEpisode& at(std::size_t i) const { return episodes_[i]; }

    // Uniform sampling with a fresh-data bias: half of each batch comes
    // from the newest quarter of the buffer.
    std::vector<const EncodedEpisode*> sample(std::size_t batch, Rng& rng) const {
        std::vector<const EncodedEpisode*> out;
        if (episodes_.empty()) return out;
        std::size_t fresh_lo = episodes_.size() - std::max<std::size_t>(1, episodes_.size() / 4);
        for (std::size_t b = 0; b < batch; ++b) {
            std::size_t idx;
            if (b * 2 < batch) {
                idx = fresh_lo + rng.index(episodes_.size() - fresh_lo);
            } else {
                idx = rng.index(episodes_.size());
            }
            out.push_back(&episodes_[idx]);
        }
        return out;
    }

private:
    std::size_t capacity_;
    std::deque<EncodedEpisode> episodes_;
};

// ---- learning updates ------------------------------------------------------

namespace policy_detail {

// Unrolls an actor over recorded inputs; returns hiddens h[t] (post-step)
// and optionally caches. h[-1] is implicit zeros.
inline std::vector<Vec> unroll_actor_hiddens(const nn::RecurrentNet& actor,
                                             const PolicyConfig& cfg, const EncodedEpisode& ep,
                                             AgentId i, const Vec& embed,
                                             std::vector<nn::RecurrentNet::Cache>* caches) {
    std::vector<Vec> hs;
    Vec h = Vec::Zero(cfg.hidden);
    for (int t = 0; t < ep.length(); ++t) {
        Vec penc = parent_encoding(ep.adj[t], i, ep.actions[t], cfg.n_actions);
        nn::RecurrentNet::Cache cache;
        auto [logits, hn] =
            actor.forward(actor_input(cfg, ep.obs[t][i], penc, embed), h, caches ? &cache : nullptr);
        (void)logits;
        if (caches) caches->push_back(cache);
        h = hn;
        hs.push_back(h);
    }
    return hs;
}

// Greedy joint actions of the target actor at every step, conditioning
// on greedy parent actions within the step; hidden states evolve on the
// recorded trajectory.
inline std::vector<JointAction> target_greedy_actions(const PolicyParams& p,
                                                      const EncodedEpisode& ep) {
    const int n = p.cfg.n_agents;
    const Vec& embed = p.target_embeddings[ep.task_idx];
    std::vector<std::vector<Vec>> hs(n);
    for (int i = 0; i < n; ++i)
        hs[i] = unroll_actor_hiddens(p.target_actors[i], p.cfg, ep, i, embed, nullptr);

    std::vector<JointAction> greedy(ep.length(), JointAction(n, Action::NoOp));
    for (int t = 0; t < ep.length(); ++t) {
        auto order = topo_order(ep.adj[t]);
        for (AgentId i : order) {
            Vec penc = parent_encoding(ep.adj[t], i, greedy[t], p.cfg.n_actions);
            Vec h_prev = t == 0 ? Vec(Vec::Zero(p.cfg.hidden)) : hs[i][t - 1];
            auto [probs, hn] = actor_forward(p.target_actors[i], p.cfg, ep.obs[t][i], penc, embed,
                                             h_prev);
            (void)hn;
            int a = 0;
            for (int k = 1; k < p.cfg.n_actions; ++k)
                if (probs[k] > probs[a]) a = k;
            greedy[t][i] = static_cast<Action>(a);
        }
    }
    return greedy;
}

}  // namespace policy_detail

// TD targets for agent i along an episode, computed entirely from
// target networks (Eq.-7 reading: max over agent i's own next action,
// other agents fixed to target-actor greedy choices).
inline std::vector<double> td_targets_for_agent(const PolicyParams& p, const EncodedEpisode& ep,
                                                AgentId i, double gamma) {
    const int T = ep.length();
    const Vec& tembed = p.target_embeddings[ep.task_idx];
    auto greedy = policy_detail::target_greedy_actions(p, ep);

    // target-critic hidden trajectory on recorded inputs
    std::vector<Vec> hc(T);
    Vec h = Vec::Zero(p.cfg.hidden);
    for (int t = 0; t < T; ++t) {
        auto [q, hn] = critic_forward(p.target_critics[i], p.cfg, ep.state[t], ep.actions[t],
                                      tembed, h);
        (void)q;
        h = hn;
        hc[t] = h;
    }

    std::vector<double> ys(T);
    for (int t = 0; t < T; ++t) {
        double r = ep.reward[t][i];
        if (ep.done[t] || t + 1 >= T) {
            ys[t] = td_target(r, true, gamma, {});
            continue;
        }
        std::vector<double> q_next(p.cfg.n_actions);
        for (int a = 0; a < p.cfg.n_actions; ++a) {
            JointAction ja = greedy[t + 1];
            ja[i] = static_cast<Action>(a);
            auto [q, hn] =
                critic_forward(p.target_critics[i], p.cfg, ep.state[t + 1], ja, tembed, hc[t]);
            (void)hn;
            q_next[a] = q;
        }
        ys[t] = td_target(r, false, gamma, q_next);
    }
    return ys;
}

// Mean squared TD error (Eq.-6 form) and its gradients, unrolled
// recurrently per episode; targets come from the target networks and
// gradients are blocked through them. Fills `grads` (one net of
// accumulators per critic) and `embed_grads`; returns the loss.
inline double critic_backward(PolicyParams& p, const std::vector<const EncodedEpisode*>& batch,
                              double gamma, std::vector<nn::RecurrentNet>& grads,
                              std::vector<Vec>& embed_grads) {
    const int n = p.cfg.n_agents;
    grads.clear();
    for (int i = 0; i < n; ++i) grads.push_back(nn::RecurrentNet::zeros_like(p.critics[i]));
    embed_grads.assign(p.embeddings.size(), Vec::Zero(p.cfg.embed_dim));

    long count = 0;
    for (const auto* ep : batch) count += static_cast<long>(ep->length()) * n;
    if (count == 0) return 0.0;

    double loss = 0.0;
    for (const auto* ep : batch) {
        const int T = ep->length();
        const Vec& embed = p.embeddings[ep->task_idx];
        for (int i = 0; i < n; ++i) {
            std::vector<double> ys = td_targets_for_agent(p, *ep, i, gamma);

            std::vector<nn::RecurrentNet::Cache> caches(T);
            std::vector<double> qs(T);
            Vec h = Vec::Zero(p.cfg.hidden);
            for (int t = 0; t < T; ++t) {
                auto [q, hn] = critic_forward(p.critics[i], p.cfg, ep->state[t], ep->actions[t],
                                              embed, h, &caches[t]);
                qs[t] = q;
                h = hn;
            }
            Vec dh = Vec::Zero(p.cfg.hidden);
            for (int t = T - 1; t >= 0; --t) {
                double err = qs[t] - ys[t];
                loss += err * err;
                Vec dout = Vec::Constant(1, 2.0 * err / static_cast<double>(count));
                auto [dx, dh_prev] = p.critics[i].backward(caches[t], dout, dh, grads[i]);
                dh = dh_prev;
                embed_grads[ep->task_idx] += dx.tail(p.cfg.embed_dim);
            }
        }
    }
    loss /= static_cast<double>(count);
    return loss;
}

// One optimizer step on the Eq.-6 loss. Returns the (pre-step) loss.
inline double critic_update(PolicyParams& p, const std::vector<const EncodedEpisode*>& batch,
                            double gamma) {
    std::vector<nn::RecurrentNet> grads;
    std::vector<Vec> embed_grads;
    double loss = critic_backward(p, batch, gamma, grads, embed_grads);
    for (int i = 0; i < p.cfg.n_agents; ++i) {
        std::vector<nn::ParamSpan> ps, gs;
        p.critics[i].spans(ps);
        grads[i].spans(gs);
        p.critic_opt[i].step(ps, gs);
    }
    std::vector<nn::ParamSpan> ps, gs;
    for (auto& e : p.embeddings) ps.push_back({e.data(), e.size()});
    for (auto& g : embed_grads) gs.push_back({g.data(), g.size()});
    p.embed_opt_critic.step(ps, gs);
    return loss;
}

// Policy-gradient objective (Eq.-5 form, negated for descent) with an
// optional counterfactual own-action baseline and entropy bonus; Q comes
// from the online critic with gradients blocked. Task embeddings receive
// gradients through the actor path. Fills `grads`/`embed_grads`; returns
// the scalar objective mean(-log pi * w - beta * H).
inline double actor_backward(PolicyParams& p, const std::vector<const EncodedEpisode*>& batch,
                             std::vector<nn::RecurrentNet>& grads,
                             std::vector<Vec>& embed_grads) {
    const int n = p.cfg.n_agents;
    grads.clear();
    for (int i = 0; i < n; ++i) grads.push_back(nn::RecurrentNet::zeros_like(p.actors[i]));
    embed_grads.assign(p.embeddings.size(), Vec::Zero(p.cfg.embed_dim));

    long count = 0;
    for (const auto* ep : batch) count += static_cast<long>(ep->length()) * n;
    if (count == 0) return 0.0;
    double loss = 0.0;

    for (const auto* ep : batch) {
        const int T = ep->length();
        const Vec& embed = p.embeddings[ep->task_idx];
        for (int i = 0; i < n; ++i) {
            // advantage weights from the online critic (treated as constants):
            // w[t] for the recorded action, wk[t] per own action when the
            // exact expectation is requested
            std::vector<double> w(T);
            std::vector<Vec> wk(T);
            Vec hc = Vec::Zero(p.cfg.hidden);
            for (int t = 0; t < T; ++t) {
                auto [q, hn] =
                    critic_forward(p.critics[i], p.cfg, ep->state[t], ep->actions[t], embed, hc);
                double b = 0.0;
                Vec qs = Vec::Zero(p.cfg.n_actions);
                if (p.cfg.baseline || p.cfg.expected_pg) {
                    for (int a = 0; a < p.cfg.n_actions; ++a) {
                        JointAction ja = ep->actions[t];
                        ja[i] = static_cast<Action>(a);
                        auto [qa, hx] =
                            critic_forward(p.critics[i], p.cfg, ep->state[t], ja, embed, hc);
                        (void)hx;
                        qs[a] = qa;
                    }
                    if (p.cfg.baseline) b = qs.mean();
                }
                w[t] = q - b;
                wk[t] = qs.array() - b;
                hc = hn;
            }

            // actor unroll + BPTT on -mean(logpi * w)
            std::vector<nn::RecurrentNet::Cache> caches(T);
            std::vector<Vec> probs(T);
            Vec h = Vec::Zero(p.cfg.hidden);
            for (int t = 0; t < T; ++t) {
                Vec penc = parent_encoding(ep->adj[t], i, ep->actions[t], p.cfg.n_actions);
                auto [logits, hn] = p.actors[i].forward(
                    actor_input(p.cfg, ep->obs[t][i], penc, embed), h, &caches[t]);
                probs[t] = nn::softmax(logits);
                h = hn;
            }
            Vec dh = Vec::Zero(p.cfg.hidden);
            for (int t = T - 1; t >= 0; --t) {
                int a = static_cast<int>(ep->actions[t][i]);
                Vec dlogits;
                if (p.cfg.expected_pg) {
                    // descend -E_pi[Q - b]: dL/dz_j = -pi_j (w_j - sum_k pi_k w_k)
                    double vbar = probs[t].dot(wk[t]);
                    loss += -vbar;
                    Vec adv = (wk[t].array() - vbar).matrix();
                    dlogits = -probs[t].cwiseProduct(adv) / static_cast<double>(count);
                } else {
                    loss += -std::log(std::max(probs[t][a], 1e-300)) * w[t];
                    dlogits = probs[t] * (w[t] / static_cast<double>(count));
                    dlogits[a] -= w[t] / static_cast<double>(count);
                }
                if (p.cfg.entropy_coef > 0.0) {
                    // descend -beta*H: dH/dz_k = -p_k (log p_k + H)
                    double ent = 0.0;
                    for (int k = 0; k < p.cfg.n_actions; ++k)
                        ent -= probs[t][k] * std::log(std::max(probs[t][k], 1e-300));
                    loss += -p.cfg.entropy_coef * ent;
                    for (int k = 0; k < p.cfg.n_actions; ++k)
                        dlogits[k] += p.cfg.entropy_coef * probs[t][k] *
                                      (std::log(std::max(probs[t][k], 1e-300)) + ent) /
                                      static_cast<double>(count);
                }
                auto [dx, dh_prev] = p.actors[i].backward(caches[t], dlogits, dh, grads[i]);
                dh = dh_prev;
                embed_grads[ep->task_idx] += dx.tail(p.cfg.embed_dim);
            }
        }
    }
    return loss / static_cast<double>(count);
}

// One optimizer step of policy-gradient descent on the Eq.-5 objective.
inline void actor_update(PolicyParams& p, const std::vector<const EncodedEpisode*>& batch) {
    std::vector<nn::RecurrentNet> grads;
    std::vector<Vec> embed_grads;
    actor_backward(p, batch, grads, embed_grads);
    if (grads.empty()) return;
    for (int i = 0; i < p.cfg.n_agents; ++i) {
        std::vector<nn::ParamSpan> ps, gs;
        p.actors[i].spans(ps);
        grads[i].spans(gs);
        p.actor_opt[i].step(ps, gs);
    }
    std::vector<nn::ParamSpan> ps, gs;
    for (auto& e : p.embeddings) ps.push_back({e.data(), e.size()});
    for (auto& g : embed_grads) gs.push_back({g.data(), g.size()});
    p.embed_opt_actor.step(ps, gs);
}

// ---- checkpoint ------------------------------------------------------------

namespace policy_detail {

inline void write_bytes(std::ostream& os, const void* p, std::size_t n) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}
inline void read_bytes(std::istream& is, void* p, std::size_t n) {
    is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!is) throw std::runtime_error("checkpoint: truncated file");
}
inline void write_vec(std::ostream& os, const Vec& v) {
    std::int64_t n = v.size();
    write_bytes(os, &n, sizeof(n));
    write_bytes(os, v.data(), sizeof(double) * static_cast<std::size_t>(n));
}
inline Vec read_vec(std::istream& is) {
    std::int64_t n;
    read_bytes(is, &n, sizeof(n));
    Vec v(n);
    read_bytes(is, v.data(), sizeof(double) * static_cast<std::size_t>(n));
    return v;
}
inline void write_string(std::ostream& os, const std::string& s) {
    std::int64_t n = static_cast<std::int64_t>(s.size());
    write_bytes(os, &n, sizeof(n));
    write_bytes(os, s.data(), s.size());
}
inline std::string read_string(std::istream& is) {
    std::int64_t n;
    read_bytes(is, &n, sizeof(n));
    std::string s(static_cast<std::size_t>(n), '\0');
    read_bytes(is, s.data(), s.size());
    return s;
}
inline void write_net(std::ostream& os, nn::RecurrentNet& net) {
    std::vector<nn::ParamSpan> ps;
    net.spans(ps);
    for (const auto& s : ps) write_bytes(os, s.data, sizeof(double) * s.size);
}
inline void read_net(std::istream& is, nn::RecurrentNet& net) {
    std::vector<nn::ParamSpan> ps;
    net.spans(ps);
    for (const auto& s : ps) read_bytes(is, s.data, sizeof(double) * s.size);
}
inline void write_adam(std::ostream& os, nn::Adam& a) {
    std::int64_t t = a.t();
    write_bytes(os, &t, sizeof(t));
    std::int64_t k = static_cast<std::int64_t>(a.m().size());
    write_bytes(os, &k, sizeof(k));
    for (auto& v : a.m()) write_vec(os, v);
    for (auto& v : a.v()) write_vec(os, v);
}
inline void read_adam(std::istream& is, nn::Adam& a) {
    std::int64_t t, k;
    read_bytes(is, &t, sizeof(t));
    read_bytes(is, &k, sizeof(k));
    a.set_t(t);
    a.m().clear();
    a.v().clear();
    for (std::int64_t i = 0; i < k; ++i) a.m().push_back(read_vec(is));
    for (std::int64_t i = 0; i < k; ++i) a.v().push_back(read_vec(is));
}

inline constexpr std::uint32_t kCheckpointMagic = 0x4c47434bu;  // "LGCK"
inline constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace policy_detail

// Bit-exact parameter/optimizer/RNG snapshot.
inline void save_checkpoint(const std::string& path, PolicyParams& p, const Rng& rng,
                            std::uint64_t config_hash) {
    using namespace policy_detail;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write checkpoint " + path);
    write_bytes(os, &kCheckpointMagic, sizeof(kCheckpointMagic));
    write_bytes(os, &kCheckpointVersion, sizeof(kCheckpointVersion));
    write_bytes(os, &config_hash, sizeof(config_hash));
    write_string(os, rng.save());
    std::int32_t n = p.cfg.n_agents;
    write_bytes(os, &n, sizeof(n));
    for (int i = 0; i < n; ++i) write_net(os, p.actors[i]);
    for (int i = 0; i < n; ++i) write_net(os, p.critics[i]);
    for (int i = 0; i < n; ++i) write_net(os, p.target_actors[i]);
    for (int i = 0; i < n; ++i) write_net(os, p.target_critics[i]);
    std::int64_t nt = static_cast<std::int64_t>(p.task_ids.size());
    write_bytes(os, &nt, sizeof(nt));
    for (std::int64_t i = 0; i < nt; ++i) {
        write_string(os, p.task_ids[i]);
        write_vec(os, p.embeddings[i]);
        write_vec(os, p.target_embeddings[i]);
    }
    for (int i = 0; i < n; ++i) write_adam(os, p.actor_opt[i]);
    for (int i = 0; i < n; ++i) write_adam(os, p.critic_opt[i]);
    write_adam(os, p.embed_opt_actor);
    write_adam(os, p.embed_opt_critic);
}

// Loads into an initialized PolicyParams of matching shape.
inline std::uint64_t load_checkpoint(const std::string& path, PolicyParams& p, Rng& rng) {
    using namespace policy_detail;
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read checkpoint " + path);
    std::uint32_t magic, version;
    read_bytes(is, &magic, sizeof(magic));
    read_bytes(is, &version, sizeof(version));
    if (magic != kCheckpointMagic || version != kCheckpointVersion)
        throw std::runtime_error("checkpoint: bad magic/version");
    std::uint64_t config_hash;
    read_bytes(is, &config_hash, sizeof(config_hash));
    rng.restore(read_string(is));
    std::int32_t n;
    read_bytes(is, &n, sizeof(n));
    if (n != p.cfg.n_agents) throw std::runtime_error("checkpoint: agent count mismatch");
    for (int i = 0; i < n; ++i) read_net(is, p.actors[i]);
    for (int i = 0; i < n; ++i) read_net(is, p.critics[i]);
    for (int i = 0; i < n; ++i) read_net(is, p.target_actors[i]);
    for (int i = 0; i < n; ++i) read_net(is, p.target_critics[i]);
    std::int64_t nt;
    read_bytes(is, &nt, sizeof(nt));
    p.task_ids.clear();
    p.embeddings.clear();
    p.target_embeddings.clear();
    for (std::int64_t i = 0; i < nt; ++i) {
        p.task_ids.push_back(read_string(is));
        p.embeddings.push_back(read_vec(is));
        p.target_embeddings.push_back(read_vec(is));
    }
    for (int i = 0; i < n; ++i) read_adam(is, p.actor_opt[i]);
    for (int i = 0; i < n; ++i) read_adam(is, p.critic_opt[i]);
    read_adam(is, p.embed_opt_actor);
    read_adam(is, p.embed_opt_critic);
    return config_hash;
}

}  // namespace lgc
