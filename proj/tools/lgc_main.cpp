// lgc — command-line front end: planning, reward generation, training,
// evaluation, ablations, plots, and deterministic episode replay.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "lgc/fixtures.hpp"
#include "lgc/lgc.hpp"
#include "lgc/llm_remote.hpp"

namespace fs = std::filesystem;
using namespace lgc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitBackend = 3;
constexpr int kExitAssert = 4;

struct CommonOpts {
    std::string config_file;
    std::vector<std::string> overrides;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::string backend;
};

RunConfig make_config(const CommonOpts& o) {
    nlohmann::json j = load_json_file(o.config_file);
    j = apply_overrides(j, o.overrides);
    RunConfig cfg = config_from_json(j);
    if (o.seed) cfg.seed = *o.seed;
    if (!o.backend.empty()) cfg.backend = o.backend;
    return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_file, "run config JSON")->required();
    cmd->add_option("--set", o.overrides, "config override key=value (repeatable)");
    cmd->add_option("--out", o.out_dir, "output directory");
    cmd->add_option("--seed", o.seed, "override run seed");
    cmd->add_option("--backend", o.backend, "scripted | remote");
}

void write_eval_csv(const RunLog& log, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    out << "episode,sr,at_steps,at_seconds\n";
    for (const auto& e : log.evals)
        out << e.episode << "," << format_double(e.sr) << "," << format_double(e.at_steps) << ","
            << format_double(e.at_seconds) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"LLM-planned graph-coordinated multi-agent RL"};
    app.require_subcommand(1);

    CommonOpts opt;
    double assert_sr = -1.0;
    std::string checkpoint_file, replay_file;
    std::vector<std::string> plot_inputs;
    std::string plot_out = "curves.svg";
    std::vector<std::uint64_t> ablate_seeds = {0, 1, 2};

    auto* c_plan = app.add_subcommand("plan", "run planner + critic once and print the plan");
    add_common(c_plan, opt);
    auto* c_reward = app.add_subcommand("gen-reward", "generate and print the reward program");
    add_common(c_reward, opt);
    auto* c_train = app.add_subcommand("train", "train and write logs/checkpoint");
    add_common(c_train, opt);
    auto* c_eval = app.add_subcommand("eval", "greedy evaluation");
    add_common(c_eval, opt);
    c_eval->add_option("--checkpoint", checkpoint_file, "checkpoint to evaluate");
    c_eval->add_option("--assert", assert_sr, "exit 4 unless SR >= this value");
    auto* c_ablate = app.add_subcommand("ablate", "full + three ablations, Table-style output");
    add_common(c_ablate, opt);
    c_ablate->add_option("--seeds", ablate_seeds, "seeds (>= 3)");
    auto* c_plot = app.add_subcommand("plot", "render training curves SVG from run CSVs");
    c_plot->add_option("--in", plot_inputs, "label=path/to/runlog.csv (repeatable)")->required();
    c_plot->add_option("--svg", plot_out, "output SVG path");
    auto* c_replay = app.add_subcommand("replay", "re-simulate logged episodes, verify determinism");
    add_common(c_replay, opt);
    c_replay->add_option("--log", replay_file, "replay JSONL written by train")->required();
    auto* c_fix = app.add_subcommand("gen-fixtures", "write scripted fixtures for a config");
    add_common(c_fix, opt);

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_plot->parsed()) {
            std::vector<RunLog> logs;
            std::vector<std::pair<std::string, const RunLog*>> labelled;
            logs.reserve(plot_inputs.size());
            for (const auto& spec : plot_inputs) {
                auto eq = spec.find('=');
                if (eq == std::string::npos) throw ConfigError("--in expects label=path");
                logs.push_back(load_csv(spec.substr(eq + 1)));
            }
            for (std::size_t i = 0; i < plot_inputs.size(); ++i)
                labelled.emplace_back(plot_inputs[i].substr(0, plot_inputs[i].find('=')),
                                      &logs[i]);
            emit_curves(labelled, plot_out);
            std::cout << "wrote " << plot_out << "\n";
            return kExitOk;
        }

        RunConfig cfg = make_config(opt);
        fs::create_directories(opt.out_dir);

        if (c_fix->parsed()) {
            ScriptedBackend backend;
            for (const auto& tf : cfg.task_files) {
                TaskSpec t = load_task(tf);
                for (const auto& sf : cfg.scene_files) {
                    Scene s = load_scene(sf);
                    if (s.name != t.scene) continue;
                    Env env(s, t, cfg.k_window);
                    install_task_fixtures(backend, env, cfg.n_agents, cfg.fixtures_dir);
                    std::cout << "fixtures for task " << t.task_id << " -> " << cfg.fixtures_dir
                              << "\n";
                }
            }
            return kExitOk;
        }

        Trainer trainer(cfg);

        if (c_plan->parsed()) {
            auto& ctx = const_cast<TaskContext&>(trainer.task_contexts()[0]);
            GlobalState st0 = ctx.env->reset();
            PlanResult pr =
                plan_with_critique(*ctx.env, st0, cfg.n_agents, trainer.client(), cfg.max_revisions);
            std::vector<std::pair<int, int>> edges(pr.graph.edges.begin(), pr.graph.edges.end());
            std::cout << print_plan(pr.plan, edges);
            std::cout << "revisions: " << pr.plan.source_revision << "\n";
            return kExitOk;
        }
        if (c_reward->parsed()) {
            auto& ctx = const_cast<TaskContext&>(trainer.task_contexts()[0]);
            GlobalState st0 = ctx.env->reset();
            RewardProgram p = generate_reward(*ctx.env, st0, trainer.client());
            std::cout << print_reward(p);
            return kExitOk;
        }
        if (c_train->parsed()) {
            trainer.set_out_dir(opt.out_dir);
            TrainResult res = trainer.train();
            emit_csv(res.log, opt.out_dir + "/runlog.csv");
            write_eval_csv(res.log, opt.out_dir + "/evals.csv");
            trainer.save_replays(opt.out_dir + "/replay.jsonl");
            Rng rng(cfg.seed);
            save_checkpoint(opt.out_dir + "/checkpoint.bin", res.params, rng, cfg.hash());
            emit_curves({{"train", &res.log}}, opt.out_dir + "/curves.svg");
            const EvalRow& last = res.log.evals.back();
            std::cout << "episodes: " << res.log.episodes.size() << "  env steps: " << res.env_steps
                      << "  final SR: " << last.sr << "  tokens: " << res.ledger.total_tokens()
                      << "\n";
            return kExitOk;
        }
        if (c_eval->parsed()) {
            PolicyParams params = trainer.init_params();
            if (!checkpoint_file.empty()) {
                Rng rng(cfg.seed);
                load_checkpoint(checkpoint_file, params, rng);
            }
            auto ev = trainer.evaluate(params, cfg.eval_episodes);
            std::cout << "SR: " << ev.sr << "  AT_steps: " << ev.at_steps
                      << "  AT_seconds: " << ev.at_seconds << "\n";
            if (assert_sr >= 0.0 && !(ev.sr >= assert_sr)) {
                std::cerr << "assertion failed: SR " << ev.sr << " < " << assert_sr << "\n";
                return kExitAssert;
            }
            return kExitOk;
        }
        if (c_ablate->parsed()) {
            AblationTable table = run_ablation_suite(cfg, ablate_seeds);
            std::string text = ablation_table_text(table);
            std::cout << text;
            std::ofstream(opt.out_dir + "/ablation.txt") << text;
            return kExitOk;
        }
        if (c_replay->parsed()) {
            auto records = Trainer::load_replays(replay_file);
            long ok = 0;
            for (const auto& r : records)
                if (trainer.verify_replay(r)) ++ok;
            std::cout << ok << "/" << records.size() << " episodes reproduced exactly\n";
            return ok == static_cast<long>(records.size()) ? kExitOk : kExitAssert;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const EnvError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const LlmError& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
