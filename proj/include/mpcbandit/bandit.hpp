// The linear contextual bandit on shared state: per-step scoring, the
// exploration blend, oblivious argmax action selection, and a rank-one
// inverse update applied to every arm. A floating-point reference learner
// with the same update rule serves as the correctness oracle.
#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mpcbandit/dealer.hpp"
#include "mpcbandit/envs.hpp"
#include "mpcbandit/protocols.hpp"
#include "mpcbandit/transport.hpp"

namespace mpcbandit {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shared policy: per-arm inverse covariance [W_a^-1] and bias [b_a].
struct PolicyState {
    int arms = 0;
    int dim = 0;
    std::vector<RingTensor> winv; // arms x (D x D) shares
    std::vector<RingTensor> bias; // arms x (D x 1) shares
};

// W^-1 = I, b = 0. The identity lives on the leader's share.
PolicyState policy_init(Session& s, int arms, int dim);

// s_a = (W_a^-1 b_a) . x for every arm, batched. Four rounds.
std::vector<u64> score_arms(Session& s, const PolicyState& st, const RingTensor& x);

// Exploration blend y*v_a + (1-y)*s_a with a shared Bernoulli y in {0, B} and
// shared uniform scores v. Exact pass-through at y=0 and y=1. Two rounds.
std::vector<u64> dp_blend(Session& s, const std::vector<u64>& scores, u64 y,
                          const std::vector<u64>& v);

// Argmax over blended scores; the winning one-hot is revealed to the arm
// puller role only and the shares are returned for the update. The compute
// parties never see the chosen arm.
std::vector<u64> select_action(Session& s, const std::vector<u64>& blended);

// Rank-one refresh of every arm, gated by the one-hot: the selected arm gets
// the inverse-covariance downdate and reward accumulation, non-selected arms
// are multiplied by exact-zero gates. 42 rounds at the default 7 iterations.
void policy_update(Session& s, PolicyState& st, const RingTensor& x,
                   const std::vector<u64>& onehot, u64 reward_share, int nr_iters);

// Reconstructed, decoded policy (tests and evaluation only).
struct PolicySnapshot {
    std::size_t step = 0;
    std::vector<std::vector<double>> winv; // arms x D*D row-major
    std::vector<std::vector<double>> bias; // arms x D
};
PolicySnapshot open_policy(Session& s, const PolicyState& st, std::size_t step);

// Plaintext of the dealer's sampled randomness for one episode, in step
// order: the tape the reference learner replays for lockstep comparisons.
struct PlainDraws {
    std::vector<int> bern;                          // y_t per step
    std::vector<double> unif;                       // v_{t,a}, arms per step
    std::vector<std::vector<std::uint32_t>> gamma;  // tie-break ranks per step
};

struct EpisodeConfig {
    std::size_t horizon = 0;
    int parties = 2;
    double epsilon = 0.1;
    int lbits = 20;
    int nr_iters = 7;
    u64 seed = 1;
    std::vector<int> party_dims;    // empty: near-even contiguous split
    std::size_t block_steps = 50;   // offline material dealt in blocks
    bool export_draws = false;      // collect the randomness tape
    bool open_final_state = false;  // decode the final policy (tests)
    std::size_t checkpoint_every = 0;
    bool record_transcript = false; // keep compute-party frame logs (tests)
    std::string transport = "local"; // "local" or "tcp" (loopback)
    int tcp_base_port = 47400;
};

struct EpisodeRecord {
    std::size_t t = 0;
    int arm = -1;
    double reward = 0;
};

struct EpisodeResult {
    std::vector<EpisodeRecord> steps;
    std::vector<double> avg_reward;    // cumulative mean after each step
    std::vector<u64> rounds_after;     // leader's total rounds after each step
    std::vector<double> seconds_after;
    std::map<std::string, RoundStat> op_rounds; // leader ledger by label
    u64 total_rounds = 0;
    u64 total_bytes = 0;
    double seconds = 0;
    StoreCounts consumed;              // leader store consumption
    PlainDraws draws;                  // when export_draws
    std::vector<PolicySnapshot> checkpoints;
    std::optional<PolicySnapshot> final_state;
    std::vector<std::vector<TranscriptFrame>> transcripts; // per compute party
};

// Full multi-party episode: spawns the compute parties plus the arm puller
// and reward receiver roles, deals offline material in blocks, runs `horizon`
// steps, and gathers per-step records from the outside roles.
EpisodeResult run_episode(Env& env, const EpisodeConfig& cfg);

// Floating-point learner with the identical update rule and tie-break.
struct PlainStep {
    std::size_t t = 0;
    int arm = -1;
    double reward = 0;
    int explored = 0;
    std::vector<double> scores; // blended scores that drove the choice
};

struct PlainResult {
    std::vector<PlainStep> steps;
    std::vector<double> avg_reward;
    std::vector<PolicySnapshot> checkpoints;
    PolicySnapshot final_state;
};

PlainResult plaintext_reference(Env& env, std::size_t horizon, double epsilon, u64 seed,
                                const PlainDraws* inject = nullptr,
                                std::size_t checkpoint_every = 0);

// step,avg_reward,rounds rows, deterministic in the seed (plaintext runs
// write zero rounds). Timing lives in the manifest, not the curve.
void write_reward_csv(const std::string& path, const EpisodeResult& r);
void write_reward_csv(const std::string& path, const PlainResult& r);
// Flat key=value manifest, order preserved.
void write_manifest(const std::string& path,
                    const std::vector<std::pair<std::string, std::string>>& kv);

} // namespace mpcbandit
