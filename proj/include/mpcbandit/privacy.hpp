// Differential-privacy accounting for the exploration mechanism and the
// membership-inference attack harness that probes saved policy checkpoints.
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mpcbandit/bandit.hpp"
#include "mpcbandit/envs.hpp"

namespace mpcbandit {

// Per-step privacy loss of the action channel: log(arms / epsilon), infinite
// at epsilon = 0 (the non-private setting). Throws on arms < 2 or an
// exploration rate outside [0, 1].
double privacy_loss(double epsilon, int arms);

// Monte-Carlo check of the action-channel privacy bound: simulate the
// epsilon-greedy output distribution under two neighboring inputs whose
// greedy arms differ (arm 0 vs arm 1) and report the worst empirical
// log-probability ratio. Meaningful from about 10^4 trials up.
struct DpRatioEstimate {
    double max_log_ratio = 0;   // worst ratio across all actions
    double cross_log_ratio = 0; // worst ratio across arms greedy in neither
    double greedy_freq = 0;     // observed frequency of the greedy arm
};
DpRatioEstimate verify_dp_ratio(double epsilon, int arms, std::size_t trials, u64 seed = 1);

// Greedy scores/action of a decoded policy snapshot on one context.
std::vector<double> snapshot_scores(const PolicySnapshot& snap, const std::vector<double>& x);
int snapshot_action(const PolicySnapshot& snap, const std::vector<double>& x);

// Membership-inference adversary on one trained trajectory: for each
// checkpoint, build smoothed conditional reward tables p(r | action) on the
// member and held-out index sets, then classify probe examples as members
// when the member table assigns their observed (action, reward) pair higher
// probability. Returns TPR - FPR per checkpoint, each in [-1, 1].
std::vector<double> membership_attack(Env& env, const std::vector<PolicySnapshot>& checkpoints,
                                      const std::vector<std::size_t>& members,
                                      const std::vector<std::size_t>& nonmembers,
                                      std::size_t probes, u64 seed);

// Repeated attack runs: each run trains a fresh reference learner on its own
// slice of the environment, saves checkpoints, and attacks them with the
// following slice as the held-out set. A checkpoint is attacked on the prefix
// it has actually trained on, against an equal-sized held-out set. Runs are
// independent; they execute sequentially because Env contexts may share
// scratch state.
struct AttackExperiment {
    std::size_t horizon = 500;        // training steps per run
    double epsilon = 0.1;
    std::size_t checkpoint_every = 100;
    int runs = 20;
    std::size_t probes = 200;         // probe examples per class per run
    u64 seed = 1;
};

struct AttackResult {
    std::vector<std::size_t> steps;             // checkpoint steps
    std::vector<std::vector<double>> advantage; // runs x checkpoints
    std::vector<double> mean;                   // per checkpoint
    std::vector<double> ci95;                   // 1.96 * stderr per checkpoint
};

AttackResult membership_experiment(Env& env, const AttackExperiment& cfg);

// step,epsilon,advantage,ci95 rows, one per checkpoint.
void write_attack_csv(const std::string& path, const AttackResult& r, double epsilon);

} // namespace mpcbandit
