#include "mpcbandit/privacy.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <limits>

namespace mpcbandit {

double privacy_loss(double epsilon, int arms) {
    if (arms < 2) throw ConfigError("privacy loss needs at least two arms");
    if (epsilon < 0.0 || epsilon > 1.0) throw ConfigError("exploration rate outside [0,1]");
    if (epsilon == 0.0) return std::numeric_limits<double>::infinity();
    return std::log(double(arms) / epsilon);
}

DpRatioEstimate verify_dp_ratio(double epsilon, int arms, std::size_t trials, u64 seed) {
    if (arms < 2) throw ConfigError("channel needs at least two arms");
    if (epsilon < 0.0 || epsilon > 1.0) throw ConfigError("exploration rate outside [0,1]");

    Prng rng(mix_seed(seed, 0x44505243));
    auto sample = [&](int greedy, std::vector<double>& freq) {
        std::vector<u64> counts(arms, 0);
        for (std::size_t t = 0; t < trials; ++t) {
            int a = rng.real01() < epsilon ? int(rng.below(u64(arms))) : greedy;
            ++counts[a];
        }
        freq.resize(arms);
        for (int a = 0; a < arms; ++a) freq[a] = double(counts[a]) / double(trials);
    };

    // Neighboring inputs: the greedy arm flips from 0 to 1, every other
    // action probability is untouched.
    std::vector<double> p, q;
    sample(0, p);
    sample(1, q);

    auto ratio = [](double a, double b) {
        if (a == b) return 0.0;
        if (a == 0.0 || b == 0.0) return std::numeric_limits<double>::infinity();
        return std::abs(std::log(a / b));
    };

    DpRatioEstimate est;
    est.greedy_freq = p[0];
    for (int a = 0; a < arms; ++a) {
        est.max_log_ratio = std::max(est.max_log_ratio, ratio(p[a], q[a]));
        if (a >= 2) est.cross_log_ratio = std::max(est.cross_log_ratio, ratio(p[a], q[a]));
    }
    return est;
}

std::vector<double> snapshot_scores(const PolicySnapshot& snap, const std::vector<double>& x) {
    const int A = int(snap.winv.size());
    const int D = int(snap.bias.empty() ? 0 : snap.bias[0].size());
    if ((int)x.size() != D) throw ShapeError("context dimension mismatch");
    std::vector<double> s(A, 0.0);
    for (int a = 0; a < A; ++a) {
        for (int i = 0; i < D; ++i) {
            double wi = 0;
            for (int j = 0; j < D; ++j) wi += snap.winv[a][std::size_t(i) * D + j] * snap.bias[a][j];
            s[a] += wi * x[i];
        }
    }
    return s;
}

int snapshot_action(const PolicySnapshot& snap, const std::vector<double>& x) {
    auto s = snapshot_scores(snap, x);
    int best = 0;
    for (int a = 1; a < (int)s.size(); ++a)
        if (s[a] > s[best]) best = a;
    return best;
}

namespace {

// Smoothed conditional reward tables: cell (a, r) with add-one smoothing so
// rare pairs never produce an undefined comparison.
struct RewardTable {
    std::vector<std::array<double, 2>> counts;

    explicit RewardTable(int arms) : counts(arms, {0.0, 0.0}) {}
    void add(int a, int r) { counts[a][r] += 1.0; }
    double cond(int r, int a) const {
        return (counts[a][r] + 1.0) / (counts[a][0] + counts[a][1] + 2.0);
    }
};

RewardTable build_table(Env& env, const PolicySnapshot& snap,
                        const std::vector<std::size_t>& idx) {
    RewardTable t(env.arms());
    for (std::size_t i : idx) {
        int a = snapshot_action(snap, env.context(i));
        t.add(a, env.reward(i, a));
    }
    return t;
}

// Training view of a contiguous slice starting at `off` (cycled).
class SliceEnv : public Env {
  public:
    SliceEnv(Env& base, std::size_t off) : base_(base), off_(off) {}
    int dim() const override { return base_.dim(); }
    int arms() const override { return base_.arms(); }
    std::size_t size() const override { return base_.size(); }
    const std::vector<double>& context(std::size_t t) override {
        return base_.context(off_ + t);
    }
    int reward(std::size_t t, int arm) override { return base_.reward(off_ + t, arm); }

  private:
    Env& base_;
    std::size_t off_;
};

} // namespace

std::vector<double> membership_attack(Env& env, const std::vector<PolicySnapshot>& checkpoints,
                                      const std::vector<std::size_t>& members,
                                      const std::vector<std::size_t>& nonmembers,
                                      std::size_t probes, u64 seed) {
    if (members.empty() || nonmembers.empty())
        throw ConfigError("attack needs non-empty member and held-out sets");
    if (probes == 0) throw ConfigError("attack needs at least one probe");

    Prng rng(mix_seed(seed, 0x41545443));
    std::vector<double> out;
    out.reserve(checkpoints.size());
    for (const PolicySnapshot& snap : checkpoints) {
        RewardTable train = build_table(env, snap, members);
        RewardTable test = build_table(env, snap, nonmembers);

        auto guess_rate = [&](const std::vector<std::size_t>& pool) {
            std::size_t hits = 0;
            for (std::size_t k = 0; k < probes; ++k) {
                std::size_t i = pool[rng.below(pool.size())];
                int a = snapshot_action(snap, env.context(i));
                int r = env.reward(i, a);
                if (train.cond(r, a) > test.cond(r, a)) ++hits;
            }
            return double(hits) / double(probes);
        };
        double tpr = guess_rate(members);
        double fpr = guess_rate(nonmembers);
        out.push_back(tpr - fpr);
    }
    return out;
}

AttackResult membership_experiment(Env& env, const AttackExperiment& cfg) {
    const std::size_t T = cfg.horizon;
    if (cfg.runs < 1) throw ConfigError("attack experiment needs at least one run");
    if (T == 0 || cfg.checkpoint_every == 0)
        throw ConfigError("attack experiment needs a horizon and a checkpoint interval");
    if (2 * T > env.size())
        throw EnvError("environment too small for disjoint member and held-out slices");

    AttackResult res;
    for (int r = 0; r < cfg.runs; ++r) {
        std::size_t off = (std::size_t(r) * 2 * T) % env.size();
        SliceEnv view(env, off);
        PlainResult train =
            plaintext_reference(view, T, cfg.epsilon, mix_seed(cfg.seed, u64(r) + 1), nullptr,
                                cfg.checkpoint_every);
        std::vector<PolicySnapshot> snaps = train.checkpoints;
        if (snaps.empty() || snaps.back().step != T) snaps.push_back(train.final_state);

        // A checkpoint's training set is the prefix it has actually consumed;
        // the held-out set is size-matched so both tables see equal counts.
        std::vector<double> adv;
        adv.reserve(snaps.size());
        for (std::size_t c = 0; c < snaps.size(); ++c) {
            std::size_t seen = std::min(snaps[c].step, T);
            std::vector<std::size_t> members(seen), heldout(seen);
            for (std::size_t i = 0; i < seen; ++i) {
                members[i] = (off + i) % env.size();
                heldout[i] = (off + T + i) % env.size();
            }
            adv.push_back(membership_attack(env, {snaps[c]}, members, heldout, cfg.probes,
                                            mix_seed(cfg.seed, 0x1000 + u64(r) * 131 + c))
                              .front());
        }
        if (res.steps.empty())
            for (const auto& s : snaps) res.steps.push_back(s.step);
        res.advantage.push_back(std::move(adv));
    }

    const std::size_t C = res.steps.size();
    res.mean.assign(C, 0.0);
    res.ci95.assign(C, 0.0);
    for (std::size_t c = 0; c < C; ++c) {
        double m = 0;
        for (const auto& row : res.advantage) m += row[c];
        m /= double(cfg.runs);
        double var = 0;
        for (const auto& row : res.advantage) var += (row[c] - m) * (row[c] - m);
        var = cfg.runs > 1 ? var / double(cfg.runs - 1) : 0.0;
        res.mean[c] = m;
        res.ci95[c] = 1.96 * std::sqrt(var / double(cfg.runs));
    }
    return res;
}

void write_attack_csv(const std::string& path, const AttackResult& r, double epsilon) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw ConfigError("cannot write csv: " + path);
    std::fprintf(f, "step,epsilon,advantage,ci95\n");
    for (std::size_t c = 0; c < r.steps.size(); ++c)
        std::fprintf(f, "%zu,%.6f,%.6f,%.6f\n", r.steps[c], epsilon, r.mean[c], r.ci95[c]);
    std::fclose(f);
}

} // namespace mpcbandit
