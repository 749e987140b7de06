// Additive and XOR secret sharing over Z/2^64.
//
// Arithmetic sharing: x = sum_p share_p mod 2^64. Binary sharing: each of the
// 64 bits is shared by XOR, packed in one word. These helpers are the local
// (communication-free) half; the share-conversion protocols that need rounds
// live in protocols.hpp.
#pragma once

#include <vector>

#include "mpcbandit/ring.hpp"
#include "mpcbandit/rng.hpp"

namespace mpcbandit {

inline std::vector<u64> share_value(u64 x, std::size_t parties, Prng& rng) {
    std::vector<u64> sh(parties);
    u64 acc = 0;
    for (std::size_t p = 1; p < parties; ++p) {
        sh[p] = rng.word();
        acc += sh[p];
    }
    sh[0] = x - acc;
    return sh;
}

inline u64 reconstruct_value(const std::vector<u64>& sh) {
    u64 x = 0;
    for (u64 s : sh) x += s;
    return x;
}

inline std::vector<RingTensor> share_tensor(const RingTensor& x, std::size_t parties, Prng& rng) {
    std::vector<RingTensor> sh(parties, RingTensor(x.rows, x.cols));
    for (std::size_t i = 0; i < x.v.size(); ++i) {
        u64 acc = 0;
        for (std::size_t p = 1; p < parties; ++p) {
            u64 r = rng.word();
            sh[p].v[i] = r;
            acc += r;
        }
        sh[0].v[i] = x.v[i] - acc;
    }
    return sh;
}

inline RingTensor reconstruct_tensor(const std::vector<RingTensor>& sh) {
    RingTensor x = sh.at(0);
    for (std::size_t p = 1; p < sh.size(); ++p) x = rt_add(x, sh[p]);
    return x;
}

inline std::vector<u64> share_binary(u64 x, std::size_t parties, Prng& rng) {
    std::vector<u64> sh(parties);
    u64 acc = 0;
    for (std::size_t p = 1; p < parties; ++p) {
        sh[p] = rng.word();
        acc ^= sh[p];
    }
    sh[0] = x ^ acc;
    return sh;
}

inline u64 reconstruct_binary(const std::vector<u64>& sh) {
    u64 x = 0;
    for (u64 s : sh) x ^= s;
    return x;
}

} // namespace mpcbandit
