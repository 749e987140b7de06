// Secure computation kernels on additive shares over Z/2^64: open, multiply,
// square, matrix products, truncation with wrap correction, share conversion,
// comparison, argmax, reciprocal. Every operation takes a ledger label; all
// rounds an operation spends are attributed to that label. All vector inputs
// are batched: one call costs the same rounds regardless of lane count.
//
// Scale convention: Encoded operands carry a factor B = 2^L (fixed point);
// multiplying two encoded values needs a post-product truncation by B.
// Integer operands are plain ring integers (bits, one-hot flags, permutation
// values); their products skip truncation and cost one round instead of two.
#pragma once

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mpcbandit/dealer.hpp"
#include "mpcbandit/ring.hpp"
#include "mpcbandit/rng.hpp"
#include "mpcbandit/transport.hpp"

namespace mpcbandit {

enum class Scale { Encoded, Integer };

class Session {
  public:
    Session(std::shared_ptr<Endpoint> ep, PartyStore* store);

    int party() const { return ep_->id(); }
    int parties() const { return ep_->parties(); }
    // Party 0 adds public constants so they enter the sum exactly once.
    bool leader() const { return ep_->id() == 0; }
    FixedPoint& fx() { return fx_; }
    Endpoint& net() { return *ep_; }
    PartyStore& store() { return *store_; }

    // Reconstruct among all compute parties. One round.
    std::vector<u64> open(const std::string& label, const std::vector<u64>& sh);
    u64 open1(const std::string& label, u64 sh);
    RingTensor open_tensor(const std::string& label, const RingTensor& sh);

    // Reveal to an outside role only (arm puller / reward receiver); compute
    // parties learn nothing. One round. Rejects compute-party recipients.
    void open_to(const std::string& label, int recipient, const std::vector<u64>& sh);

    // Share a value held by `holder` into the computation. Compute-party
    // holders cost zero rounds (masks come from pairwise seeds); outside-role
    // holders cost one directed corrector message (see OutsideParty). Every
    // compute party calls this; only the holder passes values.
    std::vector<u64> share_in(const std::string& tag, int holder, const std::vector<u64>& values,
                              std::size_t n);

    std::vector<u64> sec_add(const std::vector<u64>& x, const std::vector<u64>& y) const;
    std::vector<u64> sec_sub(const std::vector<u64>& x, const std::vector<u64>& y) const;
    std::vector<u64> sec_add_public(const std::vector<u64>& x, u64 c) const;

    std::vector<u64> sec_mul(const std::string& label, const std::vector<u64>& x,
                             const std::vector<u64>& y, Scale scale);
    std::vector<u64> sec_square(const std::string& label, const std::vector<u64>& x, Scale scale);

    RingTensor sec_matmul(const std::string& label, const RingTensor& x, const RingTensor& y,
                          Scale scale);
    std::vector<RingTensor> sec_matmul_batch(const std::string& label,
                                             const std::vector<std::pair<RingTensor, RingTensor>>& xy,
                                             Scale scale);

    // Public division by 2^k with wrap correction; exact on multiples of 2^k,
    // otherwise within parties-1 ulp. Fails (wraps) with probability about
    // |value| / 2^64. One round regardless of group count.
    std::vector<u64> truncate(const std::string& label, const std::vector<u64>& x, int k);
    struct TruncGroup {
        std::vector<u64>* x;
        int k;
    };
    void truncate_multi(const std::string& label, const std::vector<TruncGroup>& groups);

    // Shares of the unsigned wrap count of x's shares. One round.
    std::vector<u64> count_wraps(const std::string& label, const std::vector<u64>& x);

    // Arithmetic -> packed binary sharing (7 rounds at 2 parties).
    std::vector<u64> a2b(const std::string& label, const std::vector<u64>& x);
    // Packed binary -> arithmetic (1 round).
    std::vector<u64> b2a(const std::string& label, const std::vector<u64>& xbin);
    // Single XOR-shared bits (LSB of each lane) -> arithmetic {0,1} shares.
    std::vector<u64> b2a_bits(const std::string& label, const std::vector<u64>& bits);

    // Arithmetic shares of [decode(x) >= decode(y)], signed interpretation,
    // output unscaled {0,1}. Seven rounds at 2 parties.
    std::vector<u64> sec_ge(const std::string& label, const std::vector<u64>& x,
                            const std::vector<u64>& y);

    // One-hot share vector marking a maximum entry; ties broken uniformly by
    // a dealer permutation. Output unscaled {0,1} bits.
    std::vector<u64> sec_argmax(const std::string& label, const std::vector<u64>& x);

    // 1/decode(x) for decode(x) in [1, 10] (caller contract, unchecked).
    // 30 rounds with the default 7 iterations.
    std::vector<u64> sec_reciprocal(const std::string& label, const std::vector<u64>& x,
                                    int iterations = 7);

  private:
    std::shared_ptr<Endpoint> ep_;
    PartyStore* store_;
    FixedPoint fx_;
    std::map<std::pair<int, u64>, Prng> mask_streams_;

    Prng& mask_stream(int other, int holder, const std::string& tag);
    std::vector<u64> open_raw(const std::string& label, const std::vector<u64>& sh);
    // Batched AND of XOR-shared words; one round, one binary triple per lane.
    std::vector<u64> bin_and(const std::string& label, const std::vector<u64>& x,
                             const std::vector<u64>& y);
    // Full 64-bit adder on two packed binary sharings (7 rounds).
    std::vector<u64> bin_add(const std::string& label, const std::vector<u64>& u,
                             const std::vector<u64>& v);
    // MSB of u + v only (6 rounds): shortened carry circuit with one wide
    // combine round using 3- and 4-input AND gates.
    std::vector<u64> bin_msb(const std::string& label, const std::vector<u64>& u,
                             const std::vector<u64>& v);
    // Re-share each party's arithmetic share as a binary sharing (0 rounds).
    // Result: one packed binary sharing per source party.
    std::vector<std::vector<u64>> reshare_binary(const std::string& tag,
                                                 const std::vector<u64>& x);
    // Reduce several packed binary sharings to `stop_at` operands with a
    // balanced tree of full adders.
    std::vector<std::vector<u64>> add_tree(const std::string& label,
                                           std::vector<std::vector<u64>> ops, std::size_t stop_at);
    // AND-product tree over groups of arithmetic {0,1} bits.
    std::vector<u64> tree_and_bits(const std::string& label, const std::vector<u64>& bits,
                                   std::size_t groups, std::size_t group_size);
};

// Runtime for the two non-compute roles. The arm puller receives opened
// actions; the reward receiver shares observed rewards into the computation.
class OutsideParty {
  public:
    OutsideParty(std::shared_ptr<Endpoint> ep, PartyStore* store);

    int id() const { return ep_->id(); }
    Endpoint& net() { return *ep_; }

    // Receive one share frame from every compute party and reconstruct.
    std::vector<u64> receive_opened(const std::string& label);
    // Counterpart of Session::share_in for an outside holder: derive each
    // compute party's mask share, send the corrector to party 0.
    void share_out(const std::string& tag, const std::vector<u64>& values);

  private:
    std::shared_ptr<Endpoint> ep_;
    PartyStore* store_;
    std::map<std::pair<int, u64>, Prng> mask_streams_;
    Prng& mask_stream(int other, int holder, const std::string& tag);
};

} // namespace mpcbandit
