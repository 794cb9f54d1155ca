#pragma once

// Subcommand implementations for the graphnav tool. Each cmd_* function takes
// plain values so tests can call them without going through argv; run_cli is
// the argv-facing wrapper with the exit-code contract:
//   0 success, 1 usage error (bad flags/arguments), 2 runtime failure.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "graphnav/checkpoint.hpp"
#include "graphnav/config.hpp"
#include "graphnav/evaluator.hpp"
#include "graphnav/training.hpp"
#include "graphnav/world_io.hpp"

namespace graphnav {

namespace detail {

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), "cannot open " + path + " for writing");
    out << text;
    require(static_cast<bool>(out), "write failed for " + path);
}

inline nlohmann::json parse_meta(const std::string& meta_json, const std::string& path) {
    try {
        return nlohmann::json::parse(meta_json);
    } catch (const std::exception& e) {
        throw error("checkpoint " + path + ": bad metadata: " + e.what());
    }
}

// Effective config for a trained model comes from its checkpoint, so eval and
// inspect reproduce the training-time dimensions without extra flags.
inline AppConfig config_from_meta(const nlohmann::json& meta, const std::string& path) {
    require(meta.contains("config"), "checkpoint " + path + ": metadata lacks config echo");
    return config_from_json(meta.at("config"));
}

inline std::ostream& out_stream(std::ofstream& file, const std::string& path) {
    if (path.empty()) return std::cout;
    file.open(path, std::ios::binary);
    require(static_cast<bool>(file), "cannot open " + path + " for writing");
    return file;
}

}  // namespace detail

// Dataset generation: two disjoint splits plus the vocabulary and the
// effective config, all under one directory. Refuses to touch an existing
// run unless forced, so a stray rerun cannot clobber results.
inline void cmd_genworld(const AppConfig& cfg, const std::string& out_dir, bool force,
                         std::ostream& os = std::cout) {
    namespace fs = std::filesystem;
    require(!out_dir.empty(), "genworld: empty output directory");
    const fs::path out(out_dir);
    if (fs::exists(out) && !fs::is_empty(out) && !force)
        throw error("genworld: " + out_dir + " already exists; pass --force to overwrite");
    fs::create_directories(out);

    AppConfig eff = cfg;
    eff.out_dir = out_dir;

    DatasetFile train_df;
    train_df.world_id_offset = 0;
    train_df.data = make_dataset(eff.seed, eff.dataset_config(eff.n_train_worlds));
    DatasetFile unseen_df;
    unseen_df.world_id_offset = eff.n_train_worlds;
    unseen_df.data = make_dataset(mix_seed({eff.seed, fnv1a64("unseen")}),
                                  eff.dataset_config(eff.n_unseen_worlds));

    save_dataset(out_dir + "/train.json", train_df);
    save_dataset(out_dir + "/unseen.json", unseen_df);
    build_world_vocab().save(out_dir + "/vocab.txt");
    detail::write_text(out_dir + "/config.json", config_to_json(eff).dump(2) + "\n");

    os << "wrote " << out_dir << "/train.json (" << train_df.data.worlds.size() << " worlds, "
       << train_df.data.episodes.size() << " episodes)\n";
    os << "wrote " << out_dir << "/unseen.json (" << unseen_df.data.worlds.size()
       << " worlds, " << unseen_df.data.episodes.size() << " episodes)\n";
    os << "wrote " << out_dir << "/vocab.txt (" << build_world_vocab().size() << " words)\n";
    os << "wrote " << out_dir << "/config.json\n";
}

struct AblationFlags {
    bool no_graph_edges = false;
    bool no_object_node = false;
    bool no_scene_node = false;
    bool no_language_graph = false;

    // Flags override whatever the config file says; dropping the graph edges
    // also removes the language relations they would be gated by.
    void apply(AppConfig& cfg) const {
        if (no_graph_edges) {
            cfg.ablation.edges = false;
            cfg.language_relations = false;
        }
        if (no_object_node) cfg.ablation.object_node = false;
        if (no_scene_node) cfg.ablation.scene_node = false;
        if (no_language_graph) cfg.language_relations = false;
    }
    nlohmann::json to_json() const {
        return {{"no_graph_edges", no_graph_edges},
                {"no_object_node", no_object_node},
                {"no_scene_node", no_scene_node},
                {"no_language_graph", no_language_graph}};
    }
};

inline TrainResult cmd_train(AppConfig cfg, const std::string& data_dir,
                             const std::string& out_dir, const AblationFlags& flags,
                             bool resume, std::ostream& os = std::cout) {
    namespace fs = std::filesystem;
    require(!data_dir.empty() && !out_dir.empty(), "train: data and output directories required");
    const auto train_df = load_dataset(data_dir + "/train.json");
    const auto unseen_df = load_dataset(data_dir + "/unseen.json");

    ParameterStore ps(cfg.seed);
    AdamOptimizer opt;
    int start_iter = 0;
    nlohmann::json flags_json = flags.to_json();
    if (resume) {
        const std::string snap = out_dir + "/snapshot.ckpt";
        const auto loaded = checkpoint::load(snap, ps, &opt);
        require(loaded.has_optimizer, "train: snapshot " + snap + " lacks optimizer state");
        const auto meta = detail::parse_meta(loaded.meta_json, snap);
        cfg = detail::config_from_meta(meta, snap);  // snapshot config is authoritative
        start_iter = meta.at("iter").get<int>();
        if (meta.contains("ablation_flags")) flags_json = meta.at("ablation_flags");
    } else {
        flags.apply(cfg);
    }
    cfg.out_dir = out_dir;
    fs::create_directories(fs::path(out_dir));

    cfg.agent_config().validate();
    detail::write_text(out_dir + "/config.json", config_to_json(cfg).dump(2) + "\n");

    nlohmann::json meta_extra;
    meta_extra["config"] = config_to_json(cfg);
    meta_extra["ablation_flags"] = flags_json;

    os << "training " << (resume ? "resumes at iteration " + std::to_string(start_iter)
                                 : "starts")
       << ": " << train_df.data.episodes.size() << " train episodes, "
       << unseen_df.data.episodes.size() << " unseen episodes\n";
    const auto res = train(cfg.train_config(), cfg.agent_config(), cfg.rollout_config(),
                           train_df.data, unseen_df.data, ps, opt, out_dir, start_iter,
                           meta_extra);
    os << "done: " << res.end_iter << " iterations, best unseen spl " << res.best_unseen_spl
       << " at iteration " << res.best_iter << "\n";
    os << "train sr " << res.final_train.sr << " spl " << res.final_train.spl << " | unseen sr "
       << res.final_unseen.sr << " spl " << res.final_unseen.spl << "\n";
    return res;
}

// One JSONL row per episode plus a trailing summary row; identical inputs give
// byte-identical output.
inline EvalResult cmd_eval(const std::string& ckpt_path, const std::string& data_dir,
                           const std::string& split, const std::string& policy,
                           uint64_t random_seed, int max_episodes, const std::string& out_path,
                           const std::string& config_path = "") {
    require(split == "train" || split == "unseen",
            "eval: unknown split '" + split + "' (expected train|unseen)");
    const auto df = load_dataset(data_dir + "/" + split + ".json");
    const EvalPolicy pol = eval_policy_from_string(policy);

    ParameterStore ps;
    AppConfig cfg;
    if (pol == EvalPolicy::kModel) {
        require(!ckpt_path.empty(), "eval: model policy needs --ckpt");
        const auto loaded = checkpoint::load(ckpt_path, ps);
        cfg = detail::config_from_meta(detail::parse_meta(loaded.meta_json, ckpt_path),
                                       ckpt_path);
    }
    // An explicit config overrides the checkpoint's; if its dimensions disagree
    // with the stored parameters the first parameter lookup reports both shapes.
    if (!config_path.empty()) cfg = load_config(config_path);
    const AgentConfig acfg = cfg.agent_config();
    const auto res = evaluate(df.data, pol, cfg.rollout_config(),
                              pol == EvalPolicy::kModel ? &ps : nullptr,
                              pol == EvalPolicy::kModel ? &acfg : nullptr, random_seed,
                              max_episodes);

    std::ofstream file;
    std::ostream& os = detail::out_stream(file, out_path);
    for (const auto& row : res.rows) {
        nlohmann::json j = graphnav::detail::metrics_json(row.m);
        j["episode"] = row.episode;
        j["traj"] = row.traj;
        os << j.dump() << "\n";
    }
    nlohmann::json summary = graphnav::detail::metrics_json(res.mean);
    summary["split"] = split;
    summary["policy"] = policy;
    summary["episodes"] = res.rows.size();
    os << summary.dump() << "\n";
    require(static_cast<bool>(os), "eval: write failed");
    return res;
}

// Per-step dump of the attention state for one episode: the six language rows,
// the per-candidate object attention, the action distribution, and the chosen
// action. Greedy policy, so the dump is reproducible.
inline nlohmann::json cmd_inspect(const std::string& ckpt_path, const std::string& data_dir,
                                  const std::string& split, int episode_idx,
                                  const std::string& out_path) {
    require(split == "train" || split == "unseen",
            "inspect: unknown split '" + split + "' (expected train|unseen)");
    const auto df = load_dataset(data_dir + "/" + split + ".json");
    require(episode_idx >= 0 && episode_idx < static_cast<int>(df.data.episodes.size()),
            "inspect: episode " + std::to_string(episode_idx) + " not in " + split +
                " split of " + std::to_string(df.data.episodes.size()) + " episodes");

    ParameterStore ps;
    const auto loaded = checkpoint::load(ckpt_path, ps);
    const AppConfig cfg =
        detail::config_from_meta(detail::parse_meta(loaded.meta_json, ckpt_path), ckpt_path);
    const AgentConfig acfg = cfg.agent_config();
    const RolloutConfig rc = cfg.rollout_config();

    const auto& ep = df.data.episodes[static_cast<size_t>(episode_idx)];
    const auto& w = df.data.worlds[static_cast<size_t>(ep.world_idx)];
    Graph g;
    const auto enc = encode_for_episode(g, ps, acfg, ep);
    std::vector<StepTrace> traces;
    const auto ro = rollout(g, ps, acfg, rc, w, ep, enc, PolicyMode::kArgmax, nullptr, &traces);

    nlohmann::json j;
    j["episode"] = episode_idx;
    j["split"] = split;
    j["instruction"] = ep.instruction;
    j["start"] = ep.start;
    j["goal"] = ep.goal;
    j["traj"] = ro.traj;
    j["stopped"] = ro.stopped;
    j["steps"] = nlohmann::json::array();
    for (const auto& t : traces) {
        nlohmann::json s;
        s["viewpoint"] = t.viewpoint;
        s["chosen"] = t.chosen;
        s["p"] = t.p;
        s["global_view_attn"] = t.global_view_attn;
        s["attn"] = {{"scene", t.attn_scene},   {"object", t.attn_object},
                     {"direction", t.attn_dir}, {"rel_scene_direction", t.attn_rel_sd},
                     {"rel_scene_object", t.attn_rel_so},
                     {"rel_object_direction", t.attn_rel_od}};
        s["object_attn"] = t.object_attn;
        j["steps"].push_back(s);
    }

    std::ofstream file;
    std::ostream& os = detail::out_stream(file, out_path);
    os << j.dump(2) << "\n";
    require(static_cast<bool>(os), "inspect: write failed");
    return j;
}

// argv-level dispatcher. `args` excludes the program name.
inline int run_cli(std::vector<std::string> args, std::ostream& os = std::cout,
                   std::ostream& err = std::cerr) {
    CLI::App app{"entity-graph navigation agent on synthetic worlds"};
    app.require_subcommand(1);
    const std::string root = default_out_root();

    std::string config_path;
    uint64_t seed_override = 0;
    bool seed_given = false;

    auto load_effective = [&]() {
        AppConfig cfg = config_path.empty() ? AppConfig{} : load_config(config_path);
        if (seed_given) cfg.seed = seed_override;
        return cfg;
    };

    auto* gen = app.add_subcommand("genworld", "generate train/unseen dataset splits");
    std::string gen_out = root + "/data";
    bool gen_force = false;
    gen->add_option("--config", config_path, "config file (JSON)");
    gen->add_option("--seed", seed_override, "override config seed")
        ->each([&](const std::string&) { seed_given = true; });
    gen->add_option("--out", gen_out, "output directory")->capture_default_str();
    gen->add_flag("--force", gen_force, "overwrite an existing output directory");

    auto* tr = app.add_subcommand("train", "train the agent on a generated dataset");
    std::string tr_data = root + "/data";
    std::string tr_out = root + "/train";
    bool tr_resume = false;
    AblationFlags flags;
    tr->add_option("--config", config_path, "config file (JSON); defaults to the dataset's");
    tr->add_option("--seed", seed_override, "override config seed")
        ->each([&](const std::string&) { seed_given = true; });
    tr->add_option("--data", tr_data, "dataset directory from genworld")->capture_default_str();
    tr->add_option("--out", tr_out, "output directory for logs and checkpoints")->capture_default_str();
    tr->add_flag("--resume", tr_resume, "continue from <out>/snapshot.ckpt");
    tr->add_flag("--no-graph-edges", flags.no_graph_edges,
                 "ablation: drop graph edges (language relations and visual messages)");
    tr->add_flag("--no-object-node", flags.no_object_node, "ablation: drop the object node");
    tr->add_flag("--no-scene-node", flags.no_scene_node, "ablation: drop the scene node");
    tr->add_flag("--no-language-graph", flags.no_language_graph,
                 "ablation: replace relation gates with specialized contexts");

    auto* ev = app.add_subcommand("eval", "evaluate a policy on one split");
    std::string ev_ckpt = root + "/train/best.ckpt";
    std::string ev_data = root + "/data";
    std::string ev_split = "unseen";
    std::string ev_policy = "model";
    std::string ev_out;
    std::string ev_config;
    uint64_t ev_seed = 0;
    int ev_max = 0;
    ev->add_option("--ckpt", ev_ckpt, "checkpoint for the model policy")->capture_default_str();
    ev->add_option("--config", ev_config, "override the checkpoint's embedded config");
    ev->add_option("--data", ev_data, "dataset directory")->capture_default_str();
    ev->add_option("--split", ev_split, "train|unseen")->capture_default_str();
    ev->add_option("--policy", ev_policy, "model|teacher|random")->capture_default_str();
    ev->add_option("--seed", ev_seed, "seed for the random policy")->capture_default_str();
    ev->add_option("--max-episodes", ev_max, "cap evaluated episodes (0 = all)")->capture_default_str();
    ev->add_option("--out", ev_out, "write JSONL here instead of stdout");

    auto* in = app.add_subcommand("inspect", "dump per-step attention for one episode");
    std::string in_ckpt = root + "/train/best.ckpt";
    std::string in_data = root + "/data";
    std::string in_split = "train";
    std::string in_out;
    int in_episode = -1;
    in->add_option("--ckpt", in_ckpt, "checkpoint to inspect")->capture_default_str();
    in->add_option("--data", in_data, "dataset directory")->capture_default_str();
    in->add_option("--split", in_split, "train|unseen")->capture_default_str();
    in->add_option("--episode", in_episode, "episode index within the split")->required();
    in->add_option("--out", in_out, "write JSON here instead of stdout");

    try {
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            os << app.help();
            return 0;
        }
        err << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (gen->parsed()) {
            cmd_genworld(load_effective(), gen_out, gen_force, os);
        } else if (tr->parsed()) {
            if (config_path.empty()) config_path = tr_data + "/config.json";
            cmd_train(load_effective(), tr_data, tr_out, flags, tr_resume, os);
        } else if (ev->parsed()) {
            cmd_eval(ev_ckpt, ev_data, ev_split, ev_policy, ev_seed, ev_max, ev_out, ev_config);
        } else if (in->parsed()) {
            cmd_inspect(in_ckpt, in_data, in_split, in_episode, in_out);
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

}  // namespace graphnav
