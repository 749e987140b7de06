#include "mpcbandit/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mpcbandit {

namespace {

using i128 = __int128;

// Reciprocal initializer x0 = q0 + q1*x + q2*x^2, a quadratic fit of 1/x on
// [1, 10] with q2 pinned to a dyadic value so the x^2 term is an integer
// multiply after a power-of-two truncation. Max |1 - x*x0| = 0.2761 on the
// domain, well inside the Newton-Raphson basin.
constexpr double kRecipQ0 = 0.91005044050132156;
constexpr double kRecipQ1 = -0.19808419585856465;
constexpr int kRecipQ2Num = 49;    // q2 = 49 / 4096
constexpr int kRecipQ2Shift = 12;  // log2(4096)

u64 bit_at(u64 w, int i) { return (w >> i) & 1; }

std::vector<u64> shl(const std::vector<u64>& v, int s) {
    std::vector<u64> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) r[i] = v[i] << s;
    return r;
}

std::vector<u64> concat(const std::vector<u64>& a, const std::vector<u64>& b) {
    std::vector<u64> r = a;
    r.insert(r.end(), b.begin(), b.end());
    return r;
}

} // namespace

Session::Session(std::shared_ptr<Endpoint> ep, PartyStore* store)
    : ep_(std::move(ep)), store_(store), fx_(store->lbits) {
    if (!ep_->is_compute()) throw TransportError("Session requires a compute-party endpoint");
    if (store_->party != ep_->id()) throw TransportError("dealer store belongs to another party");
}

Prng& Session::mask_stream(int other, int holder, const std::string& tag) {
    u64 key = mix64(label_hash(tag) + 0x9E3779B97F4A7C15ull * u64(holder + 1));
    auto it = mask_streams_.find({other, key});
    if (it == mask_streams_.end()) {
        u64 seed = mix_seed(store_->pair_seeds.at(other), key);
        it = mask_streams_.emplace(std::make_pair(other, key), Prng(seed)).first;
    }
    return it->second;
}

std::vector<u64> Session::open_raw(const std::string& label, const std::vector<u64>& sh) {
    auto got = ep_->broadcast(label, sh);
    std::vector<u64> out = sh;
    for (int p = 0; p < parties(); ++p) {
        if (p == party()) continue;
        if (got[p].size() != sh.size()) throw TransportError("open: share count mismatch");
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += got[p][i];
    }
    return out;
}

std::vector<u64> Session::open(const std::string& label, const std::vector<u64>& sh) {
    return open_raw(label, sh);
}

u64 Session::open1(const std::string& label, u64 sh) { return open_raw(label, {sh})[0]; }

RingTensor Session::open_tensor(const std::string& label, const RingTensor& sh) {
    RingTensor out(sh.rows, sh.cols);
    out.v = open_raw(label, sh.v);
    return out;
}

void Session::open_to(const std::string& label, int recipient, const std::vector<u64>& sh) {
    if (recipient < parties())
        throw TransportError("open_to recipient must be an outside role, not a compute party");
    ep_->send(label, recipient, sh);
    ep_->ledger().add_round(label);
}

std::vector<u64> Session::share_in(const std::string& tag, int holder,
                                   const std::vector<u64>& values, std::size_t n) {
    std::vector<u64> sh(n, 0);
    if (holder == party()) {
        if (values.size() != n) throw TransportError("share_in: holder value count mismatch");
        sh = values;
        for (int q = 0; q < parties(); ++q) {
            if (q == party()) continue;
            Prng& st = mask_stream(q, holder, tag);
            for (std::size_t i = 0; i < n; ++i) sh[i] -= st.word();
        }
    } else if (holder < parties()) {
        Prng& st = mask_stream(holder, holder, tag);
        for (std::size_t i = 0; i < n; ++i) sh[i] = st.word();
    } else {
        // Outside holder: mask share from the pairwise stream, corrector
        // lands at party 0.
        Prng& st = mask_stream(holder, holder, tag);
        for (std::size_t i = 0; i < n; ++i) sh[i] = st.word();
        if (leader()) {
            auto corr = ep_->recv(tag, holder);
            if (corr.size() != n) throw TransportError("share_in: corrector size mismatch");
            for (std::size_t i = 0; i < n; ++i) sh[i] += corr[i];
        }
        ep_->ledger().add_round(tag);
    }
    return sh;
}

std::vector<u64> Session::sec_add(const std::vector<u64>& x, const std::vector<u64>& y) const {
    std::vector<u64> r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] + y[i];
    return r;
}

std::vector<u64> Session::sec_sub(const std::vector<u64>& x, const std::vector<u64>& y) const {
    std::vector<u64> r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] - y[i];
    return r;
}

std::vector<u64> Session::sec_add_public(const std::vector<u64>& x, u64 c) const {
    std::vector<u64> r = x;
    if (ep_->id() == 0)
        for (auto& v : r) v += c;
    return r;
}

std::vector<u64> Session::sec_mul(const std::string& label, const std::vector<u64>& x,
                                  const std::vector<u64>& y, Scale scale) {
    if (x.size() != y.size()) throw ShapeError("sec_mul operand lanes differ");
    std::size_t n = x.size();
    auto triples = store_->take_muls(n);
    std::vector<u64> masked(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        masked[i] = x[i] - triples[i].a;
        masked[n + i] = y[i] - triples[i].b;
    }
    auto opened = open_raw(label, masked);
    std::vector<u64> z(n);
    for (std::size_t i = 0; i < n; ++i) {
        u64 alpha = opened[i], beta = opened[n + i];
        z[i] = triples[i].c + alpha * triples[i].b + beta * triples[i].a;
        if (leader()) z[i] += alpha * beta;
    }
    if (scale == Scale::Encoded) z = truncate(label, z, fx_.lbits);
    return z;
}

std::vector<u64> Session::sec_square(const std::string& label, const std::vector<u64>& x,
                                     Scale scale) {
    std::size_t n = x.size();
    auto pairs = store_->take_squares(n);
    std::vector<u64> masked(n);
    for (std::size_t i = 0; i < n; ++i) masked[i] = x[i] - pairs[i].a;
    auto opened = open_raw(label, masked);
    std::vector<u64> z(n);
    for (std::size_t i = 0; i < n; ++i) {
        u64 alpha = opened[i];
        z[i] = pairs[i].b + 2 * alpha * pairs[i].a;
        if (leader()) z[i] += alpha * alpha;
    }
    if (scale == Scale::Encoded) z = truncate(label, z, fx_.lbits);
    return z;
}

RingTensor Session::sec_matmul(const std::string& label, const RingTensor& x, const RingTensor& y,
                               Scale scale) {
    std::vector<std::pair<RingTensor, RingTensor>> xy{{x, y}};
    return sec_matmul_batch(label, xy, scale)[0];
}

std::vector<RingTensor> Session::sec_matmul_batch(
    const std::string& label, const std::vector<std::pair<RingTensor, RingTensor>>& xy,
    Scale scale) {
    std::vector<MatTriple> triples;
    triples.reserve(xy.size());
    std::vector<u64> masked;
    for (const auto& [x, y] : xy) {
        if (x.cols != y.rows) throw ShapeError("sec_matmul shapes not conformable");
        MatKey key{(std::uint32_t)x.rows, (std::uint32_t)x.cols, (std::uint32_t)y.cols};
        triples.push_back(store_->take_mat(key));
        const MatTriple& t = triples.back();
        for (std::size_t i = 0; i < x.v.size(); ++i) masked.push_back(x.v[i] - t.a.v[i]);
        for (std::size_t i = 0; i < y.v.size(); ++i) masked.push_back(y.v[i] - t.b.v[i]);
    }
    auto opened = open_raw(label, masked);

    std::vector<RingTensor> out;
    out.reserve(xy.size());
    std::size_t off = 0;
    for (std::size_t j = 0; j < xy.size(); ++j) {
        const auto& [x, y] = xy[j];
        const MatTriple& t = triples[j];
        RingTensor alpha(x.rows, x.cols), beta(y.rows, y.cols);
        std::copy(opened.begin() + off, opened.begin() + off + x.v.size(), alpha.v.begin());
        off += x.v.size();
        std::copy(opened.begin() + off, opened.begin() + off + y.v.size(), beta.v.begin());
        off += y.v.size();
        RingTensor z = rt_add(t.c, rt_add(rt_matmul(alpha, t.b), rt_matmul(t.a, beta)));
        if (leader()) z = rt_add(z, rt_matmul(alpha, beta));
        out.push_back(std::move(z));
    }

    if (scale == Scale::Encoded) {
        std::vector<TruncGroup> groups;
        groups.reserve(out.size());
        for (auto& z : out) groups.push_back({&z.v, fx_.lbits});
        truncate_multi(label, groups);
    }
    return out;
}

std::vector<u64> Session::truncate(const std::string& label, const std::vector<u64>& x, int k) {
    std::vector<u64> r = x;
    truncate_multi(label, {{&r, k}});
    return r;
}

void Session::truncate_multi(const std::string& label, const std::vector<TruncGroup>& groups) {
    struct Lane {
        u64 beta;    // this party's signed-overflow flag for x + r
        u64 theta_r; // share of the mask's signed wrap count
    };
    std::vector<Lane> lanes;
    std::vector<u64> zshare;
    for (const auto& g : groups) {
        if (g.k <= 0 || g.k >= 64) throw ShapeError("truncate shift out of range");
        auto helpers = store_->take_wraps(g.x->size());
        for (std::size_t i = 0; i < g.x->size(); ++i) {
            u64 xs = (*g.x)[i], rs = helpers[i].r;
            u64 wrapped = xs + rs;
            i128 exact = i128(i64(xs)) + i128(i64(rs));
            u64 beta = u64(i64((exact - i128(i64(wrapped))) >> 64));
            lanes.push_back({beta, helpers[i].theta_s});
            zshare.push_back(wrapped);
        }
    }

    // One opening for every group: collect each peer's z shares.
    auto got = ep_->broadcast(label, zshare);
    std::vector<u64> zring = zshare;
    std::vector<i128> zsigned(zshare.size());
    for (std::size_t i = 0; i < zshare.size(); ++i) zsigned[i] = i64(zshare[i]);
    for (int p = 0; p < parties(); ++p) {
        if (p == party()) continue;
        if (got[p].size() != zshare.size()) throw TransportError("truncate: share count mismatch");
        for (std::size_t i = 0; i < zshare.size(); ++i) {
            zring[i] += got[p][i];
            zsigned[i] += i64(got[p][i]);
        }
    }

    std::size_t idx = 0;
    for (const auto& g : groups) {
        u64 big = 1ull << (64 - g.k);
        for (std::size_t i = 0; i < g.x->size(); ++i, ++idx) {
            u64 theta_z = u64(i64((zsigned[idx] - i128(i64(zring[idx]))) >> 64));
            u64 theta = lanes[idx].beta - lanes[idx].theta_r;
            if (leader()) theta += theta_z;
            i128 s = i64((*g.x)[i]);
            i128 q;
            if (leader())
                q = s >> g.k; // floor
            else
                q = (s + ((i128(1) << g.k) - 1)) >> g.k; // ceil
            (*g.x)[i] = u64(i64(q)) - theta * big;
        }
    }
}

std::vector<u64> Session::count_wraps(const std::string& label, const std::vector<u64>& x) {
    auto helpers = store_->take_wraps(x.size());
    std::vector<u64> zshare(x.size());
    std::vector<u64> beta(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        zshare[i] = x[i] + helpers[i].r;
        beta[i] = zshare[i] < x[i] ? 1 : 0; // unsigned carry
    }
    auto got = ep_->broadcast(label, zshare);
    std::vector<unsigned __int128> zsum(x.size());
    std::vector<u64> zring = zshare;
    for (std::size_t i = 0; i < x.size(); ++i) zsum[i] = zshare[i];
    for (int p = 0; p < parties(); ++p) {
        if (p == party()) continue;
        for (std::size_t i = 0; i < x.size(); ++i) {
            zring[i] += got[p][i];
            zsum[i] += got[p][i];
        }
    }
    std::vector<u64> theta(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        u64 theta_z = u64(zsum[i] >> 64);
        theta[i] = beta[i] - helpers[i].theta_u;
        if (leader()) theta[i] += theta_z;
    }
    return theta;
}

std::vector<std::vector<u64>> Session::reshare_binary(const std::string& tag,
                                                      const std::vector<u64>& x) {
    std::size_t n = x.size();
    std::vector<std::vector<u64>> ops(parties(), std::vector<u64>(n));
    for (int q = 0; q < parties(); ++q) {
        if (q == party()) {
            ops[q] = x;
            for (int r = 0; r < parties(); ++r) {
                if (r == q) continue;
                Prng& st = mask_stream(r, q, tag);
                for (std::size_t i = 0; i < n; ++i) ops[q][i] ^= st.word();
            }
        } else {
            Prng& st = mask_stream(q, q, tag);
            for (std::size_t i = 0; i < n; ++i) ops[q][i] = st.word();
        }
    }
    return ops;
}

std::vector<u64> Session::bin_and(const std::string& label, const std::vector<u64>& x,
                                  const std::vector<u64>& y) {
    std::size_t n = x.size();
    auto triples = store_->take_bins(n);
    std::vector<u64> masked(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        masked[i] = x[i] ^ triples[i].a;
        masked[n + i] = y[i] ^ triples[i].b;
    }
    auto got = ep_->broadcast(label, masked);
    std::vector<u64> opened = masked;
    for (int p = 0; p < parties(); ++p) {
        if (p == party()) continue;
        for (std::size_t i = 0; i < masked.size(); ++i) opened[i] ^= got[p][i];
    }
    std::vector<u64> z(n);
    for (std::size_t i = 0; i < n; ++i) {
        u64 d1 = opened[i], d2 = opened[n + i];
        z[i] = triples[i].c ^ (d1 & triples[i].b) ^ (d2 & triples[i].a);
        if (leader()) z[i] ^= d1 & d2;
    }
    return z;
}

std::vector<u64> Session::bin_add(const std::string& label, const std::vector<u64>& u,
                                  const std::vector<u64>& v) {
    std::size_t n = u.size();
    std::vector<u64> g = bin_and(label, u, v);
    std::vector<u64> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = u[i] ^ v[i];
    std::vector<u64> G = g, P = p;
    for (int s : {1, 2, 4, 8, 16, 32}) {
        auto t = bin_and(label, concat(P, P), concat(shl(G, s), shl(P, s)));
        for (std::size_t i = 0; i < n; ++i) {
            G[i] ^= t[i];
            P[i] = t[n + i];
        }
    }
    std::vector<u64> sum(n);
    for (std::size_t i = 0; i < n; ++i) sum[i] = p[i] ^ (G[i] << 1);
    return sum;
}

std::vector<u64> Session::bin_msb(const std::string& label, const std::vector<u64>& u,
                                  const std::vector<u64>& v) {
    std::size_t n = u.size();
    std::vector<u64> g = bin_and(label, u, v);
    std::vector<u64> p0(n);
    for (std::size_t i = 0; i < n; ++i) p0[i] = u[i] ^ v[i];
    std::vector<u64> G = g, P = p0;
    for (int s : {1, 2, 4, 8}) {
        auto t = bin_and(label, concat(P, P), concat(shl(G, s), shl(P, s)));
        for (std::size_t i = 0; i < n; ++i) {
            G[i] ^= t[i];
            P[i] = t[n + i];
        }
    }

    // Wide combine: carry into bit 63 is the generate over bits 62..0, folded
    // over four 16-bit segments with one 2-, one 3- and one 4-input AND gate,
    // all opened in a single round.
    auto t2 = store_->take_bins(n);
    std::vector<Bin3> t3;
    std::vector<Bin4> t4;
    t3.reserve(n);
    t4.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        t3.push_back(store_->take_bin3());
        t4.push_back(store_->take_bin4());
    }
    std::vector<u64> masked(9 * n);
    for (std::size_t i = 0; i < n; ++i) {
        u64 Pa = bit_at(P[i], 62);
        u64 Gb = bit_at(G[i], 46), Pb = bit_at(P[i], 46);
        u64 Gc = bit_at(G[i], 30), Pc = bit_at(P[i], 30);
        u64 Gd = bit_at(G[i], 14);
        masked[9 * i + 0] = Pa ^ (t2[i].a & 1);
        masked[9 * i + 1] = Gb ^ (t2[i].b & 1);
        masked[9 * i + 2] = Pa ^ (t3[i].a & 1);
        masked[9 * i + 3] = Pb ^ (t3[i].b & 1);
        masked[9 * i + 4] = Gc ^ (t3[i].c & 1);
        masked[9 * i + 5] = Pa ^ (t4[i].a & 1);
        masked[9 * i + 6] = Pb ^ (t4[i].b & 1);
        masked[9 * i + 7] = Pc ^ (t4[i].c & 1);
        masked[9 * i + 8] = Gd ^ (t4[i].d & 1);
    }
    auto got = ep_->broadcast(label, masked);
    std::vector<u64> d = masked;
    for (int q = 0; q < parties(); ++q) {
        if (q == party()) continue;
        for (std::size_t i = 0; i < d.size(); ++i) d[i] ^= got[q][i];
    }

    std::vector<u64> msb(n);
    for (std::size_t i = 0; i < n; ++i) {
        u64 Ga = bit_at(G[i], 62);
        // 2-input AND: Pa & Gb.
        u64 da = d[9 * i + 0] & 1, db = d[9 * i + 1] & 1;
        u64 and2 = (t2[i].c & 1) ^ (da & t2[i].b) ^ (db & t2[i].a);
        if (leader()) and2 ^= da & db;
        // 3-input AND: Pa & Pb & Gc.
        u64 e1 = d[9 * i + 2] & 1, e2 = d[9 * i + 3] & 1, e3 = d[9 * i + 4] & 1;
        const Bin3& b3 = t3[i];
        u64 and3 = (e1 & e2 & b3.c) ^ (e1 & e3 & b3.b) ^ (e2 & e3 & b3.a) ^ (e1 & b3.bc) ^
                   (e2 & b3.ac) ^ (e3 & b3.ab) ^ b3.abc;
        if (leader()) and3 ^= e1 & e2 & e3;
        // 4-input AND: Pa & Pb & Pc & Gd.
        u64 f1 = d[9 * i + 5] & 1, f2 = d[9 * i + 6] & 1, f3 = d[9 * i + 7] & 1,
            f4 = d[9 * i + 8] & 1;
        const Bin4& b4 = t4[i];
        u64 and4 = (f2 & f3 & f4 & b4.a) ^ (f1 & f3 & f4 & b4.b) ^ (f1 & f2 & f4 & b4.c) ^
                   (f1 & f2 & f3 & b4.d) ^ (f3 & f4 & b4.ab) ^ (f2 & f4 & b4.ac) ^
                   (f2 & f3 & b4.ad) ^ (f1 & f4 & b4.bc) ^ (f1 & f3 & b4.bd) ^
                   (f1 & f2 & b4.cd) ^ (f4 & b4.abc) ^ (f3 & b4.abd) ^ (f2 & b4.acd) ^
                   (f1 & b4.bcd) ^ b4.abcd;
        if (leader()) and4 ^= f1 & f2 & f3 & f4;
        u64 c63 = (Ga ^ and2 ^ and3 ^ and4) & 1;
        msb[i] = (bit_at(p0[i], 63) ^ c63) & 1;
    }
    return msb;
}

std::vector<std::vector<u64>> Session::add_tree(const std::string& label,
                                                std::vector<std::vector<u64>> ops,
                                                std::size_t stop_at) {
    while (ops.size() > stop_at) {
        std::size_t pairs = ops.size() / 2;
        std::size_t n = ops[0].size();
        std::vector<u64> u, v;
        u.reserve(pairs * n);
        v.reserve(pairs * n);
        for (std::size_t j = 0; j < pairs; ++j) {
            u.insert(u.end(), ops[2 * j].begin(), ops[2 * j].end());
            v.insert(v.end(), ops[2 * j + 1].begin(), ops[2 * j + 1].end());
        }
        auto sums = bin_add(label, u, v);
        std::vector<std::vector<u64>> next;
        for (std::size_t j = 0; j < pairs; ++j)
            next.emplace_back(sums.begin() + j * n, sums.begin() + (j + 1) * n);
        if (ops.size() % 2) next.push_back(std::move(ops.back()));
        ops = std::move(next);
    }
    return ops;
}

std::vector<u64> Session::a2b(const std::string& label, const std::vector<u64>& x) {
    auto ops = reshare_binary(label + ".reshare", x);
    ops = add_tree(label, std::move(ops), 1);
    return ops[0];
}

std::vector<u64> Session::b2a(const std::string& label, const std::vector<u64>& xbin) {
    std::size_t n = xbin.size();
    std::vector<DaBit64> db;
    db.reserve(n);
    std::vector<u64> masked(n);
    for (std::size_t i = 0; i < n; ++i) {
        db.push_back(store_->take_dabit64());
        masked[i] = xbin[i] ^ db[i].bin;
    }
    auto got = ep_->broadcast(label, masked);
    std::vector<u64> y = masked;
    for (int q = 0; q < parties(); ++q) {
        if (q == party()) continue;
        for (std::size_t i = 0; i < n; ++i) y[i] ^= got[q][i];
    }
    std::vector<u64> out(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        u64 acc = leader() ? y[i] : 0;
        for (int b = 0; b < 64; ++b) {
            u64 term = db[i].arith[b] << b;
            if ((y[i] >> b) & 1)
                acc -= term;
            else
                acc += term;
        }
        out[i] = acc;
    }
    return out;
}

std::vector<u64> Session::b2a_bits(const std::string& label, const std::vector<u64>& bits) {
    std::size_t n = bits.size();
    auto db = store_->take_dabits(n);
    std::vector<u64> masked(n);
    for (std::size_t i = 0; i < n; ++i) masked[i] = (bits[i] ^ db[i].bin) & 1;
    auto got = ep_->broadcast(label, masked);
    std::vector<u64> c = masked;
    for (int q = 0; q < parties(); ++q) {
        if (q == party()) continue;
        for (std::size_t i = 0; i < n; ++i) c[i] ^= got[q][i];
    }
    std::vector<u64> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (c[i] & 1)
            out[i] = (leader() ? 1 : 0) - db[i].arith;
        else
            out[i] = db[i].arith;
    }
    return out;
}

std::vector<u64> Session::sec_ge(const std::string& label, const std::vector<u64>& x,
                                 const std::vector<u64>& y) {
    if (x.size() != y.size()) throw ShapeError("sec_ge operand lanes differ");
    std::vector<u64> d(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) d[i] = x[i] - y[i];
    auto ops = reshare_binary(label + ".reshare", d);
    ops = add_tree(label, std::move(ops), 2);
    auto msb = bin_msb(label, ops[0], ops[1]);
    auto neg = b2a_bits(label, msb);
    // x >= y iff the signed difference is non-negative.
    std::vector<u64> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = (leader() ? 1 : 0) - neg[i];
    return out;
}

std::vector<u64> Session::tree_and_bits(const std::string& label, const std::vector<u64>& bits,
                                        std::size_t groups, std::size_t group_size) {
    std::vector<std::vector<u64>> work(groups);
    for (std::size_t g = 0; g < groups; ++g)
        work[g] = std::vector<u64>(bits.begin() + g * group_size,
                                   bits.begin() + (g + 1) * group_size);
    for (;;) {
        std::size_t total_pairs = 0;
        for (auto& w : work) total_pairs += w.size() / 2;
        if (total_pairs == 0) break;
        std::vector<u64> xs, ys;
        xs.reserve(total_pairs);
        ys.reserve(total_pairs);
        for (auto& w : work) {
            for (std::size_t j = 0; j + 1 < w.size(); j += 2) {
                xs.push_back(w[j]);
                ys.push_back(w[j + 1]);
            }
        }
        auto prod = sec_mul(label, xs, ys, Scale::Integer);
        std::size_t off = 0;
        for (auto& w : work) {
            std::vector<u64> next;
            for (std::size_t j = 0; j + 1 < w.size(); j += 2) next.push_back(prod[off++]);
            if (w.size() % 2) next.push_back(w.back());
            w = std::move(next);
        }
    }
    std::vector<u64> out(groups);
    for (std::size_t g = 0; g < groups; ++g) out[g] = work[g][0];
    return out;
}

std::vector<u64> Session::sec_argmax(const std::string& label, const std::vector<u64>& x) {
    std::size_t A = x.size();
    if (A == 0) throw ShapeError("argmax of an empty vector");

    auto all_pairs_max = [&](const std::vector<u64>& v) {
        std::vector<u64> xs(A * A), ys(A * A);
        for (std::size_t i = 0; i < A; ++i)
            for (std::size_t j = 0; j < A; ++j) {
                xs[i * A + j] = v[i];
                ys[i * A + j] = v[j];
            }
        auto ge = sec_ge(label, xs, ys);
        // v[i] is maximal iff it is >= every entry (self-comparison included,
        // always true, kept for uniform shape).
        return tree_and_bits(label, ge, A, A);
    };

    auto y = all_pairs_max(x);
    // Blind the tied maxima with a shared random permutation of 1..A; the
    // largest blinded value is then unique, and the winner is uniform among
    // the tied entries.
    RingTensor gamma = store_->take_permutation((std::uint32_t)A);
    auto w = sec_mul(label, y, gamma.v, Scale::Integer);
    return all_pairs_max(w);
}

std::vector<u64> Session::sec_reciprocal(const std::string& label, const std::vector<u64>& x,
                                         int iterations) {
    std::size_t n = x.size();
    const int L = fx_.lbits;

    // Initializer: open one masked square, then truncate the two quadratic
    // pieces in a single shared round.
    auto pairs = store_->take_squares(n);
    std::vector<u64> masked(n);
    for (std::size_t i = 0; i < n; ++i) masked[i] = x[i] - pairs[i].a;
    auto opened = open_raw(label, masked);
    std::vector<u64> xsq(n); // scale 2L, untruncated
    for (std::size_t i = 0; i < n; ++i) {
        u64 alpha = opened[i];
        xsq[i] = pairs[i].b + 2 * alpha * pairs[i].a;
        if (leader()) xsq[i] += alpha * alpha;
    }

    u64 q1enc = u64(i64(std::llrint(std::ldexp(kRecipQ1, L))));
    u64 q0big = u64(i64(std::llrint(std::ldexp(kRecipQ0, 2 * L))));
    std::vector<u64> piece_a = xsq; // -> * q2 after truncation by L + shift
    std::vector<u64> piece_b(n);    // q1*x + q0 at scale 2L
    for (std::size_t i = 0; i < n; ++i) {
        piece_b[i] = q1enc * x[i];
        if (leader()) piece_b[i] += q0big;
    }
    truncate_multi(label, {{&piece_a, L + kRecipQ2Shift}, {&piece_b, L}});
    std::vector<u64> x0(n);
    for (std::size_t i = 0; i < n; ++i) x0[i] = u64(kRecipQ2Num) * piece_a[i] + piece_b[i];

    // Newton-Raphson: x_{t+1} = 2 x_t - x * x_t^2.
    for (int t = 0; t < iterations; ++t) {
        auto sq = sec_square(label, x0, Scale::Encoded);
        auto m = sec_mul(label, x, sq, Scale::Encoded);
        for (std::size_t i = 0; i < n; ++i) x0[i] = 2 * x0[i] - m[i];
    }
    return x0;
}

OutsideParty::OutsideParty(std::shared_ptr<Endpoint> ep, PartyStore* store)
    : ep_(std::move(ep)), store_(store) {
    if (ep_->is_compute()) throw TransportError("OutsideParty requires a non-compute endpoint");
}

Prng& OutsideParty::mask_stream(int other, int holder, const std::string& tag) {
    u64 key = mix64(label_hash(tag) + 0x9E3779B97F4A7C15ull * u64(holder + 1));
    auto it = mask_streams_.find({other, key});
    if (it == mask_streams_.end()) {
        u64 seed = mix_seed(store_->pair_seeds.at(other), key);
        it = mask_streams_.emplace(std::make_pair(other, key), Prng(seed)).first;
    }
    return it->second;
}

std::vector<u64> OutsideParty::receive_opened(const std::string& label) {
    std::vector<u64> total;
    for (int p = 0; p < ep_->parties(); ++p) {
        auto sh = ep_->recv(label, p);
        if (total.empty()) total.assign(sh.size(), 0);
        if (sh.size() != total.size()) throw TransportError("opened share size mismatch");
        for (std::size_t i = 0; i < sh.size(); ++i) total[i] += sh[i];
    }
    ep_->ledger().add_round(label);
    return total;
}

void OutsideParty::share_out(const std::string& tag, const std::vector<u64>& values) {
    std::vector<u64> corr = values;
    for (int p = 0; p < ep_->parties(); ++p) {
        Prng& st = mask_stream(p, ep_->id(), tag);
        for (std::size_t i = 0; i < corr.size(); ++i) corr[i] -= st.word();
    }
    ep_->send(tag, 0, corr);
    ep_->ledger().add_round(tag);
}

} // namespace mpcbandit
