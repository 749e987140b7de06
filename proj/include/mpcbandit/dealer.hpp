// Trusted dealer: offline generation of correlated randomness.
//
// The dealer runs before the protocol, produces one store per endpoint, and
// is never consulted online. Every item is single-use; drawing from an empty
// stream is a hard error so that offline/online phase separation violations
// surface immediately instead of silently regenerating material.
#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "mpcbandit/ring.hpp"
#include "mpcbandit/rng.hpp"

namespace mpcbandit {

struct DealerError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Per-party shares of one multiplication mask triple: c = a * b in the ring.
struct MulTriple {
    u64 a = 0, b = 0, c = 0;
};

// b = a * a; used to square in one masked opening instead of two.
struct SquarePair {
    u64 a = 0, b = 0;
};

// Matrix-shaped triple: C = A (m x k) times B (k x n). Matching the operand
// shape keeps a secure matrix product at one opening regardless of size.
struct MatTriple {
    RingTensor a, b, c;
};

// XOR-shared AND triple on packed 64-bit words: c = a & b bitwise.
struct BinTriple {
    u64 a = 0, b = 0, c = 0;
};

// Masks plus all AND-subset-products for 3- and 4-input AND gates; lets a
// higher fan-in gate open all masked inputs in a single round.
struct Bin3 {
    u64 a = 0, b = 0, c = 0;
    u64 ab = 0, ac = 0, bc = 0, abc = 0;
};
struct Bin4 {
    u64 a = 0, b = 0, c = 0, d = 0;
    u64 ab = 0, ac = 0, ad = 0, bc = 0, bd = 0, cd = 0;
    u64 abc = 0, abd = 0, acd = 0, bcd = 0, abcd = 0;
};

// One random bit shared both ways: XOR-shared word (value 0 or 1) and an
// additive share of the same bit. Converts a binary bit to arithmetic in one
// masked opening.
struct DaBit {
    u64 bin = 0;
    u64 arith = 0;
};

// 64 random bits packed in one XOR-shared word, with additive shares of each
// individual bit; converts a full word in one opening.
struct DaBit64 {
    u64 bin = 0;
    std::array<u64, 64> arith{};
};

// Additive mask r with shares of its wrap counts. theta_u counts carries of
// the unsigned share sum past 2^64; theta_s counts signed-representative
// wraps (used by truncation, where values may be negative).
struct WrapHelper {
    u64 r = 0;
    u64 theta_u = 0;
    u64 theta_s = 0;
};

struct MatKey {
    std::uint32_t m = 0, k = 0, n = 0;
    bool operator<(const MatKey& o) const {
        if (m != o.m) return m < o.m;
        if (k != o.k) return k < o.k;
        return n < o.n;
    }
    bool operator==(const MatKey& o) const { return m == o.m && k == o.k && n == o.n; }
};

// How many of each correlated item to generate (or how many were consumed).
struct StoreCounts {
    u64 mul = 0, square = 0, bin = 0, bin3 = 0, bin4 = 0;
    u64 dabit = 0, dabit64 = 0, wrap = 0, bern = 0, unif = 0;
    std::map<MatKey, u64> mats;
    std::map<std::uint32_t, u64> perms;

    StoreCounts& operator+=(const StoreCounts& o);
    StoreCounts scaled(u64 times) const;
    bool operator==(const StoreCounts& o) const;
};

// One endpoint's slice of the dealer output. Compute parties get correlation
// streams; the outside roles (arm puller, reward receiver) only get pairwise
// seeds for mask-based sharing.
class PartyStore {
  public:
    int party = 0;
    int parties = 0;
    int lbits = 0;
    u64 seed_commitment = 0;
    std::map<int, u64> pair_seeds;

    std::deque<MulTriple> muls;
    std::deque<SquarePair> squares;
    std::map<MatKey, std::deque<MatTriple>> mats;
    std::deque<BinTriple> bins;
    std::deque<Bin3> bin3s;
    std::deque<Bin4> bin4s;
    std::deque<DaBit> dabits;
    std::deque<DaBit64> dabit64s;
    std::deque<WrapHelper> wraps;
    std::deque<u64> bernoulli;   // encoded {0, B} share
    std::deque<u64> uniforms;    // encoded [0, 1) share
    std::map<std::uint32_t, std::deque<RingTensor>> permutations;

    MulTriple take_mul();
    std::vector<MulTriple> take_muls(std::size_t n);
    SquarePair take_square();
    std::vector<SquarePair> take_squares(std::size_t n);
    MatTriple take_mat(MatKey key);
    BinTriple take_bin();
    std::vector<BinTriple> take_bins(std::size_t n);
    Bin3 take_bin3();
    Bin4 take_bin4();
    DaBit take_dabit();
    std::vector<DaBit> take_dabits(std::size_t n);
    DaBit64 take_dabit64();
    WrapHelper take_wrap();
    std::vector<WrapHelper> take_wraps(std::size_t n);
    u64 take_bernoulli();
    u64 take_uniform();
    RingTensor take_permutation(std::uint32_t n);

    const StoreCounts& consumed() const { return consumed_; }

    // Splice another dealt batch for the same party onto the back of every
    // stream. Long runs deal material in blocks to bound memory.
    void append(PartyStore&& more);

  private:
    StoreCounts consumed_;
};

struct DealerOptions {
    int parties = 2;
    int lbits = 20;
    u64 seed = 1;
    bool deterministic = true;   // false: reseed from OS entropy
    bool export_plain = false;   // retain plaintext of sampled draws (reference runs)
    double bern_p = 0.1;         // exploration probability for Bernoulli draws
};

// Plaintext of the sampled randomness, in draw order. Only populated with
// export_plain; the reference learner replays exactly these draws.
struct PlainSamples {
    std::vector<int> bernoulli;
    std::vector<double> uniform;   // quantized to the encoding lattice
    std::map<std::uint32_t, std::vector<std::vector<std::uint32_t>>> perms;
};

struct DealerOutput {
    std::vector<PartyStore> stores;   // size parties + 2 (arm puller, reward receiver)
    PlainSamples plain;
};

DealerOutput deal(const DealerOptions& opt, const StoreCounts& want);

// Episode shape -> exact per-kind dealer demand. The planner must match the
// protocol's consumption exactly; a dedicated test locks the two together.
struct EpisodeShape {
    std::size_t horizon = 0;
    int arms = 0;
    int dim = 0;
    int parties = 2;
    int nr_iters = 7;
};

StoreCounts plan_episode(const EpisodeShape& shape);

// Dealer demand of single protocol ops (used by benches and op-level tests).
StoreCounts plan_mul(std::size_t lanes, bool truncate);
StoreCounts plan_square(std::size_t lanes, bool truncate);
StoreCounts plan_matmul(std::size_t m, std::size_t k, std::size_t n, bool truncate);
StoreCounts plan_ge(std::size_t lanes, int parties);
StoreCounts plan_argmax(std::size_t arms, int parties);
StoreCounts plan_reciprocal(std::size_t lanes, int iters, int parties);
StoreCounts plan_a2b(std::size_t lanes, int parties);
StoreCounts plan_b2a(std::size_t lanes);

void save_store(const std::string& path, const PartyStore& store);
PartyStore load_store(const std::string& path);

} // namespace mpcbandit
