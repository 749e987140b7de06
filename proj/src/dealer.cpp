#include "mpcbandit/dealer.hpp"

#include <cstdio>
#include <iterator>
#include <numeric>

#include "mpcbandit/sharing.hpp"

namespace mpcbandit {

StoreCounts& StoreCounts::operator+=(const StoreCounts& o) {
    mul += o.mul;
    square += o.square;
    bin += o.bin;
    bin3 += o.bin3;
    bin4 += o.bin4;
    dabit += o.dabit;
    dabit64 += o.dabit64;
    wrap += o.wrap;
    bern += o.bern;
    unif += o.unif;
    for (auto& [k, n] : o.mats) mats[k] += n;
    for (auto& [k, n] : o.perms) perms[k] += n;
    return *this;
}

StoreCounts StoreCounts::scaled(u64 times) const {
    StoreCounts r = *this;
    r.mul *= times;
    r.square *= times;
    r.bin *= times;
    r.bin3 *= times;
    r.bin4 *= times;
    r.dabit *= times;
    r.dabit64 *= times;
    r.wrap *= times;
    r.bern *= times;
    r.unif *= times;
    for (auto& [k, n] : r.mats) n *= times;
    for (auto& [k, n] : r.perms) n *= times;
    return r;
}

bool StoreCounts::operator==(const StoreCounts& o) const {
    return mul == o.mul && square == o.square && bin == o.bin && bin3 == o.bin3 &&
           bin4 == o.bin4 && dabit == o.dabit && dabit64 == o.dabit64 && wrap == o.wrap &&
           bern == o.bern && unif == o.unif && mats == o.mats && perms == o.perms;
}

namespace {

template <typename T>
T take_front(std::deque<T>& q, const char* what) {
    if (q.empty()) throw DealerError(std::string("dealer stream exhausted: ") + what);
    T item = std::move(q.front());
    q.pop_front();
    return item;
}

} // namespace

MulTriple PartyStore::take_mul() {
    ++consumed_.mul;
    return take_front(muls, "mul triple");
}

std::vector<MulTriple> PartyStore::take_muls(std::size_t n) {
    std::vector<MulTriple> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(take_mul());
    return out;
}

SquarePair PartyStore::take_square() {
    ++consumed_.square;
    return take_front(squares, "square pair");
}

std::vector<SquarePair> PartyStore::take_squares(std::size_t n) {
    std::vector<SquarePair> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(take_square());
    return out;
}

MatTriple PartyStore::take_mat(MatKey key) {
    ++consumed_.mats[key];
    auto it = mats.find(key);
    if (it == mats.end() || it->second.empty())
        throw DealerError("dealer stream exhausted: matrix triple " + std::to_string(key.m) + "x" +
                          std::to_string(key.k) + "x" + std::to_string(key.n));
    MatTriple t = std::move(it->second.front());
    it->second.pop_front();
    return t;
}

BinTriple PartyStore::take_bin() {
    ++consumed_.bin;
    return take_front(bins, "binary triple");
}

std::vector<BinTriple> PartyStore::take_bins(std::size_t n) {
    std::vector<BinTriple> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(take_bin());
    return out;
}

Bin3 PartyStore::take_bin3() {
    ++consumed_.bin3;
    return take_front(bin3s, "3-input binary correlation");
}

Bin4 PartyStore::take_bin4() {
    ++consumed_.bin4;
    return take_front(bin4s, "4-input binary correlation");
}

DaBit PartyStore::take_dabit() {
    ++consumed_.dabit;
    return take_front(dabits, "dabit");
}

std::vector<DaBit> PartyStore::take_dabits(std::size_t n) {
    std::vector<DaBit> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(take_dabit());
    return out;
}

DaBit64 PartyStore::take_dabit64() {
    ++consumed_.dabit64;
    return take_front(dabit64s, "packed dabit");
}

WrapHelper PartyStore::take_wrap() {
    ++consumed_.wrap;
    return take_front(wraps, "wrap helper");
}

std::vector<WrapHelper> PartyStore::take_wraps(std::size_t n) {
    std::vector<WrapHelper> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(take_wrap());
    return out;
}

u64 PartyStore::take_bernoulli() {
    ++consumed_.bern;
    return take_front(bernoulli, "bernoulli sample");
}

u64 PartyStore::take_uniform() {
    ++consumed_.unif;
    return take_front(uniforms, "uniform sample");
}

RingTensor PartyStore::take_permutation(std::uint32_t n) {
    ++consumed_.perms[n];
    auto it = permutations.find(n);
    if (it == permutations.end() || it->second.empty())
        throw DealerError("dealer stream exhausted: permutation of " + std::to_string(n));
    RingTensor t = std::move(it->second.front());
    it->second.pop_front();
    return t;
}

namespace {
template <typename T>
void splice(std::deque<T>& dst, std::deque<T>& src) {
    dst.insert(dst.end(), std::make_move_iterator(src.begin()), std::make_move_iterator(src.end()));
    src.clear();
}
} // namespace

void PartyStore::append(PartyStore&& more) {
    if (more.party != party || more.parties != parties || more.lbits != lbits)
        throw DealerError("append: store shape mismatch");
    splice(muls, more.muls);
    splice(squares, more.squares);
    for (auto& [key, q] : more.mats) splice(mats[key], q);
    splice(bins, more.bins);
    splice(bin3s, more.bin3s);
    splice(bin4s, more.bin4s);
    splice(dabits, more.dabits);
    splice(dabit64s, more.dabit64s);
    splice(wraps, more.wraps);
    splice(bernoulli, more.bernoulli);
    splice(uniforms, more.uniforms);
    for (auto& [n, q] : more.permutations) splice(permutations[n], q);
}

namespace {

// Signed wrap count: sum of shares as signed 64-bit integers minus the signed
// representative of the reconstruction, in units of 2^64.
u64 signed_wraps(const std::vector<u64>& sh) {
    __int128 total = 0;
    u64 ring = 0;
    for (u64 s : sh) {
        total += static_cast<i64>(s);
        ring += s;
    }
    __int128 v = static_cast<i64>(ring);
    __int128 q = (__int128)1 << 64;
    return static_cast<u64>(static_cast<i64>((total - v) / q));
}

u64 unsigned_wraps(const std::vector<u64>& sh) {
    unsigned __int128 total = 0;
    for (u64 s : sh) total += s;
    return static_cast<u64>(total >> 64);
}

} // namespace

DealerOutput deal(const DealerOptions& opt, const StoreCounts& want) {
    if (opt.parties < 2) throw DealerError("need at least 2 compute parties");
    const int P = opt.parties;
    const int endpoints = P + 2;
    u64 seed = opt.deterministic ? opt.seed : entropy_seed();

    DealerOutput out;
    out.stores.resize(endpoints);
    for (int e = 0; e < endpoints; ++e) {
        auto& st = out.stores[e];
        st.party = e;
        st.parties = P;
        st.lbits = opt.lbits;
        st.seed_commitment = mix64(seed);
    }

    // Pairwise seeds for mask-based sharing, identical at both endpoints.
    for (int a = 0; a < endpoints; ++a)
        for (int b = a + 1; b < endpoints; ++b) {
            u64 s = mix_seed(seed, 0x5041 + u64(a) * 1009 + u64(b));
            out.stores[a].pair_seeds[b] = s;
            out.stores[b].pair_seeds[a] = s;
        }

    FixedPoint fx(opt.lbits);
    auto stream = [&](u64 tag) { return Prng(mix_seed(seed, tag)); };

    {
        Prng rng = stream(0x4D554Cull);
        for (u64 i = 0; i < want.mul; ++i) {
            u64 a = rng.word(), b = rng.word(), c = a * b;
            auto sa = share_value(a, P, rng), sb = share_value(b, P, rng), sc = share_value(c, P, rng);
            for (int p = 0; p < P; ++p) out.stores[p].muls.push_back({sa[p], sb[p], sc[p]});
        }
    }
    {
        Prng rng = stream(0x535155ull);
        for (u64 i = 0; i < want.square; ++i) {
            u64 a = rng.word(), b = a * a;
            auto sa = share_value(a, P, rng), sb = share_value(b, P, rng);
            for (int p = 0; p < P; ++p) out.stores[p].squares.push_back({sa[p], sb[p]});
        }
    }
    {
        Prng rng = stream(0x4D4154ull);
        for (const auto& [key, count] : want.mats) {
            for (u64 i = 0; i < count; ++i) {
                RingTensor a = rng.tensor(key.m, key.k);
                RingTensor b = rng.tensor(key.k, key.n);
                RingTensor c = rt_matmul(a, b);
                auto sa = share_tensor(a, P, rng);
                auto sb = share_tensor(b, P, rng);
                auto sc = share_tensor(c, P, rng);
                for (int p = 0; p < P; ++p)
                    out.stores[p].mats[key].push_back({std::move(sa[p]), std::move(sb[p]), std::move(sc[p])});
            }
        }
    }
    {
        Prng rng = stream(0x42494Eull);
        for (u64 i = 0; i < want.bin; ++i) {
            u64 a = rng.word(), b = rng.word(), c = a & b;
            auto sa = share_binary(a, P, rng), sb = share_binary(b, P, rng), sc = share_binary(c, P, rng);
            for (int p = 0; p < P; ++p) out.stores[p].bins.push_back({sa[p], sb[p], sc[p]});
        }
    }
    {
        Prng rng = stream(0x42333ull);
        for (u64 i = 0; i < want.bin3; ++i) {
            u64 a = rng.word(), b = rng.word(), c = rng.word();
            u64 vals[7] = {a, b, c, a & b, a & c, b & c, a & b & c};
            std::vector<u64> sh[7];
            for (int j = 0; j < 7; ++j) sh[j] = share_binary(vals[j], P, rng);
            for (int p = 0; p < P; ++p)
                out.stores[p].bin3s.push_back({sh[0][p], sh[1][p], sh[2][p], sh[3][p], sh[4][p], sh[5][p], sh[6][p]});
        }
    }
    {
        Prng rng = stream(0x42344ull);
        for (u64 i = 0; i < want.bin4; ++i) {
            u64 a = rng.word(), b = rng.word(), c = rng.word(), d = rng.word();
            u64 vals[15] = {a,      b,      c,      d,      a & b,  a & c,  a & d,  b & c,
                            b & d,  c & d,  a & b & c, a & b & d, a & c & d, b & c & d, a & b & c & d};
            std::vector<u64> sh[15];
            for (int j = 0; j < 15; ++j) sh[j] = share_binary(vals[j], P, rng);
            for (int p = 0; p < P; ++p) {
                Bin4 item{sh[0][p], sh[1][p], sh[2][p],  sh[3][p],  sh[4][p],  sh[5][p],  sh[6][p], sh[7][p],
                          sh[8][p], sh[9][p], sh[10][p], sh[11][p], sh[12][p], sh[13][p], sh[14][p]};
                out.stores[p].bin4s.push_back(item);
            }
        }
    }
    {
        Prng rng = stream(0x444142ull);
        for (u64 i = 0; i < want.dabit; ++i) {
            u64 r = rng.bit();
            auto sb = share_binary(r, P, rng);
            auto sa = share_value(r, P, rng);
            for (int p = 0; p < P; ++p) out.stores[p].dabits.push_back({sb[p], sa[p]});
        }
    }
    {
        Prng rng = stream(0x444234ull);
        for (u64 i = 0; i < want.dabit64; ++i) {
            u64 r = rng.word();
            auto sb = share_binary(r, P, rng);
            std::vector<std::vector<u64>> bits(64);
            for (int b = 0; b < 64; ++b) bits[b] = share_value((r >> b) & 1, P, rng);
            for (int p = 0; p < P; ++p) {
                DaBit64 item;
                item.bin = sb[p];
                for (int b = 0; b < 64; ++b) item.arith[b] = bits[b][p];
                out.stores[p].dabit64s.push_back(item);
            }
        }
    }
    {
        Prng rng = stream(0x575250ull);
        for (u64 i = 0; i < want.wrap; ++i) {
            std::vector<u64> sh(P);
            for (int p = 0; p < P; ++p) sh[p] = rng.word();
            u64 tu = unsigned_wraps(sh);
            u64 ts = signed_wraps(sh);
            auto stu = share_value(tu, P, rng);
            auto sts = share_value(ts, P, rng);
            for (int p = 0; p < P; ++p) out.stores[p].wraps.push_back({sh[p], stu[p], sts[p]});
        }
    }
    {
        Prng rng = stream(0x4245524Eull);
        for (u64 i = 0; i < want.bern; ++i) {
            int y = rng.real01() < opt.bern_p ? 1 : 0;
            u64 enc = y ? fx.scale() : 0;
            auto sh = share_value(enc, P, rng);
            for (int p = 0; p < P; ++p) out.stores[p].bernoulli.push_back(sh[p]);
            if (opt.export_plain) out.plain.bernoulli.push_back(y);
        }
    }
    {
        Prng rng = stream(0x554E49ull);
        for (u64 i = 0; i < want.unif; ++i) {
            double u = rng.real01();
            u64 enc = static_cast<u64>(u * static_cast<double>(fx.scale()));
            auto sh = share_value(enc, P, rng);
            for (int p = 0; p < P; ++p) out.stores[p].uniforms.push_back(sh[p]);
            if (opt.export_plain)
                out.plain.uniform.push_back(static_cast<double>(enc) / static_cast<double>(fx.scale()));
        }
    }
    {
        Prng rng = stream(0x5045524Dull);
        for (const auto& [n, count] : want.perms) {
            for (u64 i = 0; i < count; ++i) {
                std::vector<std::uint32_t> perm(n);
                std::iota(perm.begin(), perm.end(), 1u);
                for (std::uint32_t j = n; j > 1; --j) {
                    u64 k = rng.below(j);
                    std::swap(perm[j - 1], perm[k]);
                }
                RingTensor t(1, n);
                for (std::uint32_t j = 0; j < n; ++j) t.v[j] = perm[j];
                auto sh = share_tensor(t, P, rng);
                for (int p = 0; p < P; ++p) out.stores[p].permutations[n].push_back(std::move(sh[p]));
                if (opt.export_plain) out.plain.perms[n].push_back(perm);
            }
        }
    }

    return out;
}

StoreCounts plan_mul(std::size_t lanes, bool truncate) {
    StoreCounts c;
    c.mul = lanes;
    if (truncate) c.wrap = lanes;
    return c;
}

StoreCounts plan_square(std::size_t lanes, bool truncate) {
    StoreCounts c;
    c.square = lanes;
    if (truncate) c.wrap = lanes;
    return c;
}

StoreCounts plan_matmul(std::size_t m, std::size_t k, std::size_t n, bool truncate) {
    StoreCounts c;
    c.mats[{(std::uint32_t)m, (std::uint32_t)k, (std::uint32_t)n}] = 1;
    if (truncate) c.wrap = m * n;
    return c;
}

StoreCounts plan_a2b(std::size_t lanes, int parties) {
    // Tree-reducing |P| binary sharings costs |P|-1 full word adders; a full
    // adder spends 1 AND level on generate bits and 6 doubling levels of 2
    // ANDs each, all on packed words.
    StoreCounts c;
    c.bin = lanes * 13u * u64(parties - 1);
    return c;
}

StoreCounts plan_b2a(std::size_t lanes) {
    StoreCounts c;
    c.dabit64 = lanes;
    return c;
}

StoreCounts plan_ge(std::size_t lanes, int parties) {
    // Reduce to 2 operands with full adders, then the carry-only circuit:
    // 1 generate level + 4 doubling levels (span 16) + one wide combine with
    // 2-, 3- and 4-input gates, then one dabit opening.
    StoreCounts c;
    c.bin = lanes * (13u * u64(parties - 2) + 10u);
    c.bin3 = lanes;
    c.bin4 = lanes;
    c.dabit = lanes;
    return c;
}

StoreCounts plan_argmax(std::size_t arms, int parties) {
    StoreCounts c;
    c += plan_ge(arms * arms, parties);
    c += plan_ge(arms * arms, parties);
    // Two max-indicator product trees (arms-1 bit products per lane) plus the
    // elementwise blind with the shared permutation.
    c.mul += 2 * arms * (arms - 1) + arms;
    c.perms[(std::uint32_t)arms] += 1;
    return c;
}

StoreCounts plan_reciprocal(std::size_t lanes, int iters, int parties) {
    (void)parties;
    StoreCounts c;
    // Initializer: one square opening plus one batched truncation round that
    // truncates two pieces per lane. Each iteration: square + multiply, both
    // truncated.
    c.square = lanes * u64(1 + iters);
    c.mul = lanes * u64(iters);
    c.wrap = lanes * u64(2 + 2 * iters);
    return c;
}

StoreCounts plan_episode(const EpisodeShape& s) {
    const u64 A = u64(s.arms), D = u64(s.dim);
    StoreCounts step;

    // Scores: w_a = Winv_a b_a then s_a = w_a . x, all arms batched.
    for (u64 a = 0; a < A; ++a) {
        step += plan_matmul(D, D, 1, true);
        step += plan_matmul(1, D, 1, true);
    }
    // Exploration blend: one Bernoulli draw, |A| uniform scores, two products
    // per arm sharing one truncation round.
    step.bern += 1;
    step.unif += A;
    step += plan_mul(2 * A, true);
    step += plan_argmax(A, s.parties);
    // Update: u = Winv x, d = x . u, rho = 1/(1+d), Winv -= (o rho) u u^T,
    // b += o (r x).
    for (u64 a = 0; a < A; ++a) {
        step += plan_matmul(D, D, 1, true);
        step += plan_matmul(1, D, 1, true);
        step += plan_matmul(D, 1, D, true);
    }
    step += plan_reciprocal(A, s.nr_iters, s.parties);
    step += plan_mul(A, false);         // o_a * rho_a, integer scale
    step += plan_mul(A * D * D, true);  // scale the outer products
    step += plan_mul(D, true);          // r * x
    step += plan_mul(A * D, false);     // o_a * (r x), integer scale

    return step.scaled(s.horizon);
}

namespace {

struct Writer {
    std::FILE* f;
    explicit Writer(const std::string& path) : f(std::fopen(path.c_str(), "wb")) {
        if (!f) throw DealerError("cannot open for write: " + path);
    }
    ~Writer() {
        if (f) std::fclose(f);
    }
    void u32v(std::uint32_t x) { put(&x, sizeof x); }
    void u64v(u64 x) { put(&x, sizeof x); }
    void i32v(std::int32_t x) { put(&x, sizeof x); }
    void put(const void* p, std::size_t n) {
        if (std::fwrite(p, 1, n, f) != n) throw DealerError("short write");
    }
};

struct Reader {
    std::FILE* f;
    explicit Reader(const std::string& path) : f(std::fopen(path.c_str(), "rb")) {
        if (!f) throw DealerError("cannot open for read: " + path);
    }
    ~Reader() {
        if (f) std::fclose(f);
    }
    std::uint32_t u32v() {
        std::uint32_t x;
        get(&x, sizeof x);
        return x;
    }
    u64 u64v() {
        u64 x;
        get(&x, sizeof x);
        return x;
    }
    std::int32_t i32v() {
        std::int32_t x;
        get(&x, sizeof x);
        return x;
    }
    void get(void* p, std::size_t n) {
        if (std::fread(p, 1, n, f) != n) throw DealerError("short read");
    }
};

constexpr std::uint32_t kMagic = 0x4D504253u; // "SBPM" little-endian
constexpr std::uint32_t kVersion = 1;

} // namespace

void save_store(const std::string& path, const PartyStore& st) {
    Writer w(path);
    w.u32v(kMagic);
    w.u32v(kVersion);
    w.i32v(st.party);
    w.i32v(st.parties);
    w.i32v(st.lbits);
    w.u64v(st.seed_commitment);
    w.u32v((std::uint32_t)st.pair_seeds.size());
    for (auto& [id, s] : st.pair_seeds) {
        w.i32v(id);
        w.u64v(s);
    }
    w.u64v(st.muls.size());
    for (auto& t : st.muls) {
        w.u64v(t.a);
        w.u64v(t.b);
        w.u64v(t.c);
    }
    w.u64v(st.squares.size());
    for (auto& t : st.squares) {
        w.u64v(t.a);
        w.u64v(t.b);
    }
    w.u64v(st.bins.size());
    for (auto& t : st.bins) {
        w.u64v(t.a);
        w.u64v(t.b);
        w.u64v(t.c);
    }
    w.u64v(st.bin3s.size());
    for (auto& t : st.bin3s) {
        u64 vals[7] = {t.a, t.b, t.c, t.ab, t.ac, t.bc, t.abc};
        w.put(vals, sizeof vals);
    }
    w.u64v(st.bin4s.size());
    for (auto& t : st.bin4s) {
        u64 vals[15] = {t.a,  t.b,  t.c,  t.d,  t.ab,  t.ac,  t.ad, t.bc,
                        t.bd, t.cd, t.abc, t.abd, t.acd, t.bcd, t.abcd};
        w.put(vals, sizeof vals);
    }
    w.u64v(st.dabits.size());
    for (auto& t : st.dabits) {
        w.u64v(t.bin);
        w.u64v(t.arith);
    }
    w.u64v(st.dabit64s.size());
    for (auto& t : st.dabit64s) {
        w.u64v(t.bin);
        w.put(t.arith.data(), sizeof(u64) * 64);
    }
    w.u64v(st.wraps.size());
    for (auto& t : st.wraps) {
        w.u64v(t.r);
        w.u64v(t.theta_u);
        w.u64v(t.theta_s);
    }
    w.u64v(st.bernoulli.size());
    for (u64 x : st.bernoulli) w.u64v(x);
    w.u64v(st.uniforms.size());
    for (u64 x : st.uniforms) w.u64v(x);
    w.u32v((std::uint32_t)st.mats.size());
    for (auto& [key, q] : st.mats) {
        w.u32v(key.m);
        w.u32v(key.k);
        w.u32v(key.n);
        w.u64v(q.size());
        for (auto& t : q) {
            w.put(t.a.v.data(), sizeof(u64) * t.a.v.size());
            w.put(t.b.v.data(), sizeof(u64) * t.b.v.size());
            w.put(t.c.v.data(), sizeof(u64) * t.c.v.size());
        }
    }
    w.u32v((std::uint32_t)st.permutations.size());
    for (auto& [n, q] : st.permutations) {
        w.u32v(n);
        w.u64v(q.size());
        for (auto& t : q) w.put(t.v.data(), sizeof(u64) * t.v.size());
    }
}

PartyStore load_store(const std::string& path) {
    Reader r(path);
    if (r.u32v() != kMagic) throw DealerError("bad store file magic: " + path);
    if (r.u32v() != kVersion) throw DealerError("unsupported store file version: " + path);
    PartyStore st;
    st.party = r.i32v();
    st.parties = r.i32v();
    st.lbits = r.i32v();
    st.seed_commitment = r.u64v();
    std::uint32_t nps = r.u32v();
    for (std::uint32_t i = 0; i < nps; ++i) {
        int id = r.i32v();
        st.pair_seeds[id] = r.u64v();
    }
    u64 n;
    n = r.u64v();
    for (u64 i = 0; i < n; ++i) {
        MulTriple t{r.u64v(), r.u64v(), r.u64v()};
        st.muls.push_back(t);
    }
    n = r.u64v();
    for (u64 i = 0; i < n; ++i) {
        SquarePair t{r.u64v(), r.u64v()};
        st.squares.push_back(t);
    }
    n = r.u64v();
    for (u64 i = 0; i < n; ++i) {
        BinTriple t{r.u64v(), r.u64v(), r.u64v()};
        st.bins.push_back(t);
    }
    n = r.u64v();
    for (u64 i = 0; i < n; ++i) {
        u64 v[7];
        r.get(v, sizeof v);
        st.bin3s.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6]});
    }
    n = r.u64v();
    for (u64 i = 0; i < n; ++i) {
        u64 v[15];
        r.get(v, sizeof v);
        st.bin4s.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9], v[10], v[11],
                            v[12], v[13], v[14]});
    }
    n = r.u64v();
    for (u64 i = 0; i < n; ++i) {
        DaBit t{r.u64v(), r.u64v()};
        st.dabits.push_back(t);
    }
    n = r.u64v();
    for (u64 i = 0; i < n; ++i) {
        DaBit64 t;
        t.bin = r.u64v();
        r.get(t.arith.data(), sizeof(u64) * 64);
        st.dabit64s.push_back(t);
    }
    n = r.u64v();
    for (u64 i = 0; i < n; ++i) {
        WrapHelper t{r.u64v(), r.u64v(), r.u64v()};
        st.wraps.push_back(t);
    }
    n = r.u64v();
    for (u64 i = 0; i < n; ++i) st.bernoulli.push_back(r.u64v());
    n = r.u64v();
    for (u64 i = 0; i < n; ++i) st.uniforms.push_back(r.u64v());
    std::uint32_t nmat = r.u32v();
    for (std::uint32_t i = 0; i < nmat; ++i) {
        MatKey key{r.u32v(), r.u32v(), r.u32v()};
        u64 count = r.u64v();
        for (u64 j = 0; j < count; ++j) {
            MatTriple t;
            t.a = RingTensor(key.m, key.k);
            t.b = RingTensor(key.k, key.n);
            t.c = RingTensor(key.m, key.n);
            r.get(t.a.v.data(), sizeof(u64) * t.a.v.size());
            r.get(t.b.v.data(), sizeof(u64) * t.b.v.size());
            r.get(t.c.v.data(), sizeof(u64) * t.c.v.size());
            st.mats[key].push_back(std::move(t));
        }
    }
    std::uint32_t nperm = r.u32v();
    for (std::uint32_t i = 0; i < nperm; ++i) {
        std::uint32_t len = r.u32v();
        u64 count = r.u64v();
        for (u64 j = 0; j < count; ++j) {
            RingTensor t(1, len);
            r.get(t.v.data(), sizeof(u64) * len);
            st.permutations[len].push_back(std::move(t));
        }
    }
    return st;
}

} // namespace mpcbandit
