#pragma once

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "graphnav/agent.hpp"
#include "graphnav/checkpoint.hpp"
#include "graphnav/evaluator.hpp"
#include "graphnav/optimizer.hpp"

namespace graphnav {

// R_t = r_t + gamma * R_{t+1}
inline std::vector<double> discounted_returns(const Rollout& ro, double gamma) {
    std::vector<double> ret(ro.steps.size(), 0.0);
    double acc = 0.0;
    for (size_t i = ro.steps.size(); i-- > 0;) {
        acc = ro.steps[i].reward + gamma * acc;
        ret[i] = acc;
    }
    return ret;
}

struct LossParts {
    Var total;       // lambda * il + rl + value
    Var il_term;     // cross-entropy vs teacher, before lambda
    Var rl_term;     // policy gradient surrogate with detached advantage
    Var value_term;  // 0.5 * squared error of the value head
    double il = 0.0, rl = 0.0, value = 0.0;  // numeric diagnostics
};

// Mixed imitation + reinforcement objective for one episode: cross-entropy
// against the teacher over the teacher rollout, plus a policy-gradient term
// over the sampled rollout whose advantage R_t - V(h_t) is a plain number
// (no gradient flows through it), plus the value head's squared error.
// `freeze_adv` substitutes recorded advantages, so a replayed rollout can be
// differentiated under perturbed parameters without the detached advantage
// drifting.
inline LossParts episode_loss(Graph& g, const Rollout& teacher_ro, const Rollout& sample_ro,
                              double lambda, double gamma,
                              const std::vector<double>* freeze_adv = nullptr) {
    require(lambda >= 0.0, "loss: lambda must be nonnegative");
    require(gamma > 0.0 && gamma <= 1.0, "loss: gamma must be in (0, 1]");
    require(!teacher_ro.steps.empty() && !sample_ro.steps.empty(), "loss: empty rollout");
    require(!freeze_adv || freeze_adv->size() == sample_ro.steps.size(),
            "loss: frozen advantage length mismatch");

    LossParts parts;
    std::vector<Var> il;
    for (const auto& st : teacher_ro.steps) il.push_back(g.scale(st.log_p_chosen, -1.0));
    parts.il_term = g.sum(g.concat(il));

    const auto returns = discounted_returns(sample_ro, gamma);
    std::vector<Var> rl, vl;
    for (size_t t = 0; t < sample_ro.steps.size(); ++t) {
        const auto& st = sample_ro.steps[t];
        const double advantage =
            freeze_adv ? (*freeze_adv)[t] : returns[t] - g.val0(st.value);  // detached
        rl.push_back(g.scale(st.log_p_chosen, -advantage));
        const Var diff = g.sub(st.value, g.scalar(returns[t]));
        vl.push_back(g.scale(g.mul(diff, diff), 0.5));
    }
    parts.rl_term = g.sum(g.concat(rl));
    parts.value_term = g.sum(g.concat(vl));

    parts.total = g.add(g.add(g.scale(parts.il_term, lambda), parts.rl_term), parts.value_term);
    parts.il = g.val0(parts.il_term);
    parts.rl = g.val0(parts.rl_term);
    parts.value = g.val0(parts.value_term);
    require(std::isfinite(g.val0(parts.total)), "loss: non-finite value");
    return parts;
}

struct TrainConfig {
    uint64_t seed = 1;
    double lambda = 0.2;
    double gamma = 0.9;
    double lr = 1e-3;
    double grad_clip = 5.0;
    int batch = 8;
    int iterations = 1500;
    int eval_every = 150;
    int snapshot_every = 500;
    int eval_max_episodes = 0;  // 0 = full splits

    void validate() const {
        require(lambda >= 0.0, "train config: lambda must be nonnegative");
        require(gamma > 0.0 && gamma <= 1.0, "train config: gamma must be in (0, 1]");
        require(lr > 0.0, "train config: lr must be positive");
        require(batch >= 1 && iterations >= 1, "train config: batch and iterations positive");
        require(eval_every >= 1 && snapshot_every >= 1, "train config: periods positive");
    }
};

struct TrainResult {
    int end_iter = 0;
    double best_unseen_spl = -1.0;
    int best_iter = -1;
    EpisodeMetrics final_train, final_unseen;
    std::vector<std::string> log;  // line-delimited records, also streamed to disk
};

namespace detail {

inline nlohmann::json metrics_json(const EpisodeMetrics& m) {
    return {{"tl", m.tl},     {"ne", m.ne},     {"sr", m.sr},   {"spl", m.spl},
            {"ndtw", m.ndtw}, {"sdtw", m.sdtw}, {"cls", m.cls}};
}

}  // namespace detail

// One optimization run. Batches share a single tape: per episode one teacher
// rollout and one sampled rollout reuse the same instruction encoding; the
// batch-mean loss takes one backward pass and one optimizer step. Periodic
// greedy evaluation on both splits drives the best-checkpoint selection by
// unseen SPL. All randomness comes from one generator seeded by the config,
// so identical configs give identical logs and checkpoints. `meta_extra` is
// merged into checkpoint metadata (the caller records its effective config
// there). Resuming: load store+optimizer, pass the saved iteration as
// start_iter.
inline TrainResult train(const TrainConfig& tc, const AgentConfig& acfg,
                         const RolloutConfig& rc, const Dataset& train_ds,
                         const Dataset& unseen_ds, ParameterStore& ps, AdamOptimizer& opt,
                         const std::string& out_dir = "", int start_iter = 0,
                         const nlohmann::json& meta_extra = nlohmann::json::object()) {
    tc.validate();
    acfg.validate();
    require(!train_ds.episodes.empty(), "train: empty train split");
    require(!unseen_ds.episodes.empty(), "train: empty unseen split");
    require(start_iter >= 0 && start_iter <= tc.iterations, "train: bad start iteration");

    std::mt19937_64 rng(mix_seed({tc.seed, fnv1a64("train.loop"), static_cast<uint64_t>(start_iter)}));
    TrainResult res;
    res.best_unseen_spl = -1.0;
    res.end_iter = start_iter;  // stays put when there is nothing left to run

    std::ofstream log_file;
    if (!out_dir.empty()) {
        log_file.open(out_dir + "/metrics.jsonl",
                      start_iter == 0 ? std::ios::trunc : std::ios::app);
        require(static_cast<bool>(log_file), "train: cannot open metric log in " + out_dir);
    }
    auto emit = [&](const nlohmann::json& j) {
        res.log.push_back(j.dump());
        if (log_file.is_open()) log_file << res.log.back() << "\n";
    };
    auto save_ckpt = [&](const std::string& name, int iter, double unseen_spl) {
        if (out_dir.empty()) return;
        nlohmann::json meta = meta_extra;
        meta["iter"] = iter;
        meta["unseen_spl"] = unseen_spl;
        checkpoint::save(out_dir + "/" + name, ps, meta.dump(), &opt);
    };
    auto run_eval = [&](int iter) {
        const auto tr = evaluate(train_ds, EvalPolicy::kModel, rc, &ps, &acfg, 0,
                                 tc.eval_max_episodes);
        const auto un = evaluate(unseen_ds, EvalPolicy::kModel, rc, &ps, &acfg, 0,
                                 tc.eval_max_episodes);
        auto jt = detail::metrics_json(tr.mean);
        jt["iter"] = iter;
        jt["split"] = "train";
        emit(jt);
        auto ju = detail::metrics_json(un.mean);
        ju["iter"] = iter;
        ju["split"] = "unseen";
        emit(ju);
        res.final_train = tr.mean;
        res.final_unseen = un.mean;
        if (un.mean.spl > res.best_unseen_spl) {
            res.best_unseen_spl = un.mean.spl;
            res.best_iter = iter;
            save_ckpt("best.ckpt", iter, un.mean.spl);
            emit({{"iter", iter}, {"split", "best"}, {"spl", un.mean.spl}});
        }
    };

    Graph g;
    AdamOptimizer::Hyper hp;
    hp.grad_clip_norm = tc.grad_clip;
    opt.set_hyper(hp);

    for (int iter = start_iter; iter < tc.iterations; ++iter) {
        g.reset();
        std::vector<Var> totals;
        double il = 0.0, rl = 0.0, vl = 0.0;
        for (int b = 0; b < tc.batch; ++b) {
            const int pick = uniform_int(rng, 0, static_cast<int>(train_ds.episodes.size()) - 1);
            const auto& ep = train_ds.episodes[static_cast<size_t>(pick)];
            const auto& w = train_ds.worlds[static_cast<size_t>(ep.world_idx)];
            const auto enc = encode_for_episode(g, ps, acfg, ep);
            const auto ro_t = rollout(g, ps, acfg, rc, w, ep, enc, PolicyMode::kTeacher);
            const auto ro_s = rollout(g, ps, acfg, rc, w, ep, enc, PolicyMode::kSample, &rng);
            auto parts = episode_loss(g, ro_t, ro_s, tc.lambda, tc.gamma);
            totals.push_back(parts.total);
            il += parts.il;
            rl += parts.rl;
            vl += parts.value;
        }
        const Var loss = g.scale(g.sum(g.concat(totals)), 1.0 / tc.batch);
        const double loss_val = g.val0(loss);
        if (!std::isfinite(loss_val))
            throw error("train: loss diverged (non-finite) at iteration " + std::to_string(iter));
        g.backward(loss);
        opt.step(ps, tc.lr);

        const int done = iter + 1;
        emit({{"iter", done},
              {"split", "batch"},
              {"loss", loss_val},
              {"il", il / tc.batch},
              {"rl", rl / tc.batch},
              {"value", vl / tc.batch}});
        if (done % tc.eval_every == 0 || done == tc.iterations) run_eval(done);
        if (done % tc.snapshot_every == 0 || done == tc.iterations)
            save_ckpt("snapshot.ckpt", done, res.best_unseen_spl);
        res.end_iter = done;
    }
    return res;
}

}  // namespace graphnav
