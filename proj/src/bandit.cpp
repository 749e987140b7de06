#include "mpcbandit/bandit.hpp"

#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <deque>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <numeric>
#include <thread>

namespace mpcbandit {

PolicyState policy_init(Session& s, int arms, int dim) {
    if (arms < 1 || dim < 1) throw ConfigError("policy needs at least one arm and one feature");
    PolicyState st;
    st.arms = arms;
    st.dim = dim;
    u64 one = s.fx().encode(1.0);
    for (int a = 0; a < arms; ++a) {
        RingTensor w(dim, dim);
        if (s.leader())
            for (int i = 0; i < dim; ++i) w.at(i, i) = one;
        st.winv.push_back(std::move(w));
        st.bias.emplace_back(dim, 1);
    }
    return st;
}

std::vector<u64> score_arms(Session& s, const PolicyState& st, const RingTensor& x) {
    if ((int)x.rows != st.dim || x.cols != 1) throw ShapeError("context shape mismatch");
    std::vector<std::pair<RingTensor, RingTensor>> wb;
    wb.reserve(st.arms);
    for (int a = 0; a < st.arms; ++a) wb.emplace_back(st.winv[a], st.bias[a]);
    auto w = s.sec_matmul_batch("scores", wb, Scale::Encoded); // D x 1 per arm

    RingTensor xt = rt_transpose(x);
    std::vector<std::pair<RingTensor, RingTensor>> sx;
    sx.reserve(st.arms);
    for (int a = 0; a < st.arms; ++a) sx.emplace_back(xt, w[a]);
    auto dots = s.sec_matmul_batch("scores", sx, Scale::Encoded); // 1 x 1 per arm

    std::vector<u64> scores(st.arms);
    for (int a = 0; a < st.arms; ++a) scores[a] = dots[a].v[0];
    return scores;
}

std::vector<u64> dp_blend(Session& s, const std::vector<u64>& scores, u64 y,
                          const std::vector<u64>& v) {
    const std::size_t A = scores.size();
    if (v.size() != A) throw ShapeError("one uniform per arm required");
    // z[0..A) = y*s_a, z[A..2A) = y*v_a; blended = s - y*s + y*v. Exact at the
    // endpoints: y in {0, B} makes both products lattice multiples.
    std::vector<u64> ys(2 * A, y), sv;
    sv.reserve(2 * A);
    sv.insert(sv.end(), scores.begin(), scores.end());
    sv.insert(sv.end(), v.begin(), v.end());
    auto z = s.sec_mul("blend", ys, sv, Scale::Encoded);
    std::vector<u64> out(A);
    for (std::size_t a = 0; a < A; ++a) out[a] = scores[a] - z[a] + z[A + a];
    return out;
}

std::vector<u64> select_action(Session& s, const std::vector<u64>& blended) {
    auto onehot = s.sec_argmax("argmax", blended);
    s.open_to("action", s.net().arm_puller(), onehot);
    return onehot;
}

void policy_update(Session& s, PolicyState& st, const RingTensor& x,
                   const std::vector<u64>& onehot, u64 reward_share, int nr_iters) {
    const int A = st.arms, D = st.dim;
    if ((int)onehot.size() != A) throw ShapeError("one-hot length mismatch");

    // u_a = W_a^-1 x
    std::vector<std::pair<RingTensor, RingTensor>> wx;
    wx.reserve(A);
    for (int a = 0; a < A; ++a) wx.emplace_back(st.winv[a], x);
    auto u = s.sec_matmul_batch("update", wx, Scale::Encoded);

    // d_a = x . u_a
    RingTensor xt = rt_transpose(x);
    std::vector<std::pair<RingTensor, RingTensor>> xu;
    xu.reserve(A);
    for (int a = 0; a < A; ++a) xu.emplace_back(xt, u[a]);
    auto d = s.sec_matmul_batch("update", xu, Scale::Encoded);

    // rho_a = 1 / (1 + d_a); gate by the one-hot with an exact integer product
    // so non-selected arms contribute exact zero.
    std::vector<u64> denom(A);
    for (int a = 0; a < A; ++a) denom[a] = d[a].v[0];
    denom = s.sec_add_public(denom, s.fx().encode(1.0));
    auto rho = s.sec_reciprocal("update", denom, nr_iters);
    auto gated = s.sec_mul("update", onehot, rho, Scale::Integer);

    // outer_a = u_a u_a^T
    std::vector<std::pair<RingTensor, RingTensor>> uu;
    uu.reserve(A);
    for (int a = 0; a < A; ++a) uu.emplace_back(u[a], rt_transpose(u[a]));
    auto outer = s.sec_matmul_batch("update", uu, Scale::Encoded);

    // W_a^-1 -= gated_a * outer_a
    std::vector<u64> gs(std::size_t(A) * D * D), os(std::size_t(A) * D * D);
    for (int a = 0; a < A; ++a)
        for (int i = 0; i < D * D; ++i) {
            gs[std::size_t(a) * D * D + i] = gated[a];
            os[std::size_t(a) * D * D + i] = outer[a].v[i];
        }
    auto dw = s.sec_mul("update", gs, os, Scale::Encoded);
    for (int a = 0; a < A; ++a)
        for (int i = 0; i < D * D; ++i) st.winv[a].v[i] -= dw[std::size_t(a) * D * D + i];

    // b_a += o_a * (r x)
    auto rx = s.sec_mul("update", std::vector<u64>(D, reward_share), x.v, Scale::Encoded);
    std::vector<u64> ob(std::size_t(A) * D), rxs(std::size_t(A) * D);
    for (int a = 0; a < A; ++a)
        for (int i = 0; i < D; ++i) {
            ob[std::size_t(a) * D + i] = onehot[a];
            rxs[std::size_t(a) * D + i] = rx[i];
        }
    auto orx = s.sec_mul("update", ob, rxs, Scale::Integer);
    for (int a = 0; a < A; ++a)
        for (int i = 0; i < D; ++i) st.bias[a].v[i] += orx[std::size_t(a) * D + i];
}

PolicySnapshot open_policy(Session& s, const PolicyState& st, std::size_t step) {
    const int A = st.arms, D = st.dim;
    std::vector<u64> all;
    all.reserve(std::size_t(A) * (D * D + D));
    for (int a = 0; a < A; ++a) all.insert(all.end(), st.winv[a].v.begin(), st.winv[a].v.end());
    for (int a = 0; a < A; ++a) all.insert(all.end(), st.bias[a].v.begin(), st.bias[a].v.end());
    auto opened = s.open("checkpoint", all);

    PolicySnapshot snap;
    snap.step = step;
    snap.winv.assign(A, std::vector<double>(std::size_t(D) * D));
    snap.bias.assign(A, std::vector<double>(D));
    std::size_t at = 0;
    for (int a = 0; a < A; ++a)
        for (int i = 0; i < D * D; ++i) snap.winv[a][i] = s.fx().decode(opened[at++]);
    for (int a = 0; a < A; ++a)
        for (int i = 0; i < D; ++i) snap.bias[a][i] = s.fx().decode(opened[at++]);
    return snap;
}

namespace {

void run_threads(int count, const std::function<void(int)>& body) {
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errs(count);
    threads.reserve(count);
    for (int i = 0; i < count; ++i)
        threads.emplace_back([&, i] {
            try {
                body(i);
            } catch (...) {
                errs[i] = std::current_exception();
            }
        });
    for (auto& t : threads) t.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

// Offline material, dealt block by block on demand by whichever party thread
// reaches the boundary first. Bounds dealer memory on long runs.
struct BlockSource {
    std::mutex m;
    const EpisodeConfig* cfg = nullptr;
    int arms = 0, dim = 0;
    std::size_t nblocks = 0;
    std::vector<std::unique_ptr<DealerOutput>> blocks;
    PlainDraws draws;
    std::size_t draws_done = 0; // blocks folded into the tape, in order

    std::size_t block_horizon(std::size_t b) const {
        std::size_t lo = b * cfg->block_steps;
        std::size_t hi = std::min(cfg->horizon, lo + cfg->block_steps);
        return hi > lo ? hi - lo : 0;
    }

    PartyStore take(std::size_t b, int id) {
        std::lock_guard<std::mutex> g(m);
        if (b >= nblocks) throw DealerError("block index out of range");
        if (blocks.size() <= b) blocks.resize(b + 1);
        if (!blocks[b]) {
            DealerOptions opt;
            opt.parties = cfg->parties;
            opt.lbits = cfg->lbits;
            opt.seed = mix_seed(cfg->seed, b + 1);
            opt.deterministic = true;
            opt.export_plain = cfg->export_draws;
            opt.bern_p = cfg->epsilon;
            EpisodeShape shape{block_horizon(b), arms, dim, cfg->parties, cfg->nr_iters};
            blocks[b] = std::make_unique<DealerOutput>(deal(opt, plan_episode(shape)));
        }
        if (cfg->export_draws && b == draws_done && blocks[b]) {
            const PlainSamples& p = blocks[b]->plain;
            draws.bern.insert(draws.bern.end(), p.bernoulli.begin(), p.bernoulli.end());
            draws.unif.insert(draws.unif.end(), p.uniform.begin(), p.uniform.end());
            auto it = p.perms.find(std::uint32_t(arms));
            if (it != p.perms.end())
                draws.gamma.insert(draws.gamma.end(), it->second.begin(), it->second.end());
            ++draws_done;
        }
        return std::move(blocks[b]->stores[id]);
    }
};

// Single-producer single-consumer step handoff from the arm puller to the
// reward receiver.
struct RewardQueue {
    std::mutex m;
    std::condition_variable cv;
    std::deque<int> q;
    void push(int r) {
        {
            std::lock_guard<std::mutex> g(m);
            q.push_back(r);
        }
        cv.notify_one();
    }
    int pop() {
        std::unique_lock<std::mutex> g(m);
        cv.wait(g, [&] { return !q.empty(); });
        int r = q.front();
        q.pop_front();
        return r;
    }
};

} // namespace

EpisodeResult run_episode(Env& env, const EpisodeConfig& cfg) {
    const int P = cfg.parties, A = env.arms(), D = env.dim();
    const std::size_t T = cfg.horizon;
    if (P < 2) throw ConfigError("need at least two compute parties");
    if (cfg.epsilon < 0.0 || cfg.epsilon > 1.0) throw ConfigError("exploration rate outside [0,1]");
    if (cfg.lbits <= 0 || cfg.lbits >= 32) throw ConfigError("precision bits outside (0,32)");
    if (cfg.nr_iters < 1) throw ConfigError("need at least one reciprocal iteration");
    if (cfg.block_steps < 1) throw ConfigError("block size must be positive");
    if (cfg.transport != "local" && cfg.transport != "tcp")
        throw ConfigError("transport must be local or tcp");
    std::vector<int> dims = cfg.party_dims.empty() ? even_split(D, P) : cfg.party_dims;
    if ((int)dims.size() != P) throw ConfigError("one feature block per compute party required");
    if (std::accumulate(dims.begin(), dims.end(), 0) != D)
        throw ConfigError("party feature blocks must cover every feature");

    // Extract the contexts once: Env rows may be backed by shared scratch.
    std::vector<std::vector<double>> ctxs(T);
    for (std::size_t t = 0; t < T; ++t) ctxs[t] = env.context(t);

    BlockSource blocks;
    blocks.cfg = &cfg;
    blocks.arms = A;
    blocks.dim = D;
    blocks.nblocks = std::max<std::size_t>(1, (T + cfg.block_steps - 1) / cfg.block_steps);

    EpisodeResult res;
    res.steps.resize(T);
    res.avg_reward.resize(T);
    res.rounds_after.resize(T, 0);
    res.seconds_after.resize(T, 0.0);
    if (cfg.record_transcript) res.transcripts.resize(P);

    std::shared_ptr<LocalFabric> lf;
    if (cfg.transport == "local") lf = std::make_shared<LocalFabric>(P, 60000);
    std::vector<TcpPeer> peers;
    if (cfg.transport == "tcp")
        for (int i = 0; i < P + 2; ++i) peers.push_back({"127.0.0.1", cfg.tcp_base_port + i});

    RewardQueue rq;
    auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    run_threads(P + 2, [&](int id) {
        std::unique_ptr<TcpFabric> tf;
        std::shared_ptr<Endpoint> ep;
        if (lf) {
            ep = lf->endpoint(id);
        } else {
            tf = std::make_unique<TcpFabric>(P, id, peers, cfg.seed | 1);
            ep = tf->endpoint();
        }

        if (id >= P) {
            PartyStore store = blocks.take(0, id);
            OutsideParty role(ep, &store);
            if (id == P) { // arm puller: learns each action, observes the reward
                for (std::size_t t = 0; t < T; ++t) {
                    auto oh = role.receive_opened("action");
                    int arm = -1;
                    for (std::size_t a = 0; a < oh.size(); ++a) {
                        if (oh[a] == 1 && arm < 0)
                            arm = int(a);
                        else if (oh[a] != 0)
                            throw TransportError("opened action is not a one-hot");
                    }
                    if (arm < 0) throw TransportError("opened action is not a one-hot");
                    int rwd = env.reward(t, arm);
                    if (rwd < 0 || rwd > 1) throw EnvError("reward outside [0,1]");
                    res.steps[t] = {t, arm, double(rwd)};
                    rq.push(rwd);
                }
            } else { // reward receiver: shares each observation back in
                FixedPoint fx(cfg.lbits);
                for (std::size_t t = 0; t < T; ++t) {
                    int rwd = rq.pop();
                    role.share_out("reward", {fx.encode(double(rwd))});
                }
            }
            return;
        }

        // Compute party.
        if (cfg.record_transcript) ep->record_transcript(true);
        PartyStore store = blocks.take(0, id);
        Session s(ep, &store);
        FixedPoint fx(cfg.lbits);
        PolicyState st = policy_init(s, A, D);
        int off = 0;
        for (int q = 0; q < id; ++q) off += dims[q];

        for (std::size_t t = 0; t < T; ++t) {
            std::size_t b = t / cfg.block_steps;
            if (b > 0 && t % cfg.block_steps == 0) store.append(blocks.take(b, id));

            std::vector<u64> xsh;
            xsh.reserve(D);
            for (int q = 0, qoff = 0; q < P; qoff += dims[q], ++q) {
                std::vector<u64> mine;
                if (q == id) {
                    mine.resize(dims[q]);
                    for (int i = 0; i < dims[q]; ++i) mine[i] = fx.encode(ctxs[t][off + i]);
                }
                auto part = s.share_in("context", q, mine, std::size_t(dims[q]));
                xsh.insert(xsh.end(), part.begin(), part.end());
            }
            RingTensor x(D, 1);
            x.v = std::move(xsh);

            auto scores = score_arms(s, st, x);
            u64 y = s.store().take_bernoulli();
            std::vector<u64> v(A);
            for (int a = 0; a < A; ++a) v[a] = s.store().take_uniform();
            auto blended = dp_blend(s, scores, y, v);
            auto onehot = select_action(s, blended);
            auto rsh = s.share_in("reward", s.net().reward_receiver(), {}, 1);
            policy_update(s, st, x, onehot, rsh[0], cfg.nr_iters);

            if (id == 0) {
                res.rounds_after[t] = ep->ledger().total_rounds();
                res.seconds_after[t] = elapsed();
            }
            if (cfg.checkpoint_every && (t + 1) % cfg.checkpoint_every == 0) {
                PolicySnapshot snap = open_policy(s, st, t + 1);
                if (id == 0) res.checkpoints.push_back(std::move(snap));
            }
        }
        if (cfg.open_final_state) {
            PolicySnapshot snap = open_policy(s, st, T);
            if (id == 0) res.final_state = std::move(snap);
        }
        if (id == 0) {
            res.op_rounds = ep->ledger().stats();
            res.total_rounds = ep->ledger().total_rounds();
            res.total_bytes = ep->ledger().total_bytes();
            res.consumed = store.consumed();
        }
        if (cfg.record_transcript) res.transcripts[id] = ep->transcript();
    });

    double cum = 0;
    for (std::size_t t = 0; t < T; ++t) {
        cum += res.steps[t].reward;
        res.avg_reward[t] = cum / double(t + 1);
    }
    res.seconds = elapsed();
    res.draws = std::move(blocks.draws);
    return res;
}

PlainResult plaintext_reference(Env& env, std::size_t horizon, double epsilon, u64 seed,
                                const PlainDraws* inject, std::size_t checkpoint_every) {
    const int A = env.arms(), D = env.dim();
    if (epsilon < 0.0 || epsilon > 1.0) throw ConfigError("exploration rate outside [0,1]");
    if (inject &&
        (inject->bern.size() < horizon || inject->unif.size() < horizon * std::size_t(A) ||
         inject->gamma.size() < horizon))
        throw ConfigError("injected randomness tape shorter than the horizon");

    std::vector<std::vector<double>> W(A, std::vector<double>(std::size_t(D) * D, 0.0));
    std::vector<std::vector<double>> b(A, std::vector<double>(D, 0.0));
    for (int a = 0; a < A; ++a)
        for (int i = 0; i < D; ++i) W[a][std::size_t(i) * D + i] = 1.0;

    Prng rng(mix_seed(seed, 0x504C4E52));
    PlainResult res;
    double cum = 0;

    auto snapshot = [&](std::size_t step) {
        PolicySnapshot s;
        s.step = step;
        s.winv = W;
        s.bias = b;
        return s;
    };

    for (std::size_t t = 0; t < horizon; ++t) {
        std::vector<double> x = env.context(t);

        std::vector<double> scores(A, 0.0);
        for (int a = 0; a < A; ++a) {
            double dot = 0;
            for (int i = 0; i < D; ++i) {
                double wi = 0;
                for (int j = 0; j < D; ++j) wi += W[a][std::size_t(i) * D + j] * b[a][j];
                dot += wi * x[i];
            }
            scores[a] = dot;
        }

        int y = inject ? inject->bern[t] : (rng.real01() < epsilon ? 1 : 0);
        std::vector<double> blended(A);
        for (int a = 0; a < A; ++a) {
            double va = inject ? inject->unif[t * std::size_t(A) + a] : rng.real01();
            blended[a] = y ? va : scores[a];
        }
        std::vector<std::uint32_t> gamma;
        if (inject) {
            gamma = inject->gamma[t];
        } else {
            gamma.resize(A);
            for (int a = 0; a < A; ++a) gamma[a] = std::uint32_t(a) + 1;
            for (int a = A - 1; a > 0; --a)
                std::swap(gamma[a], gamma[rng.below(std::size_t(a) + 1)]);
        }

        // Maximum score; exact ties go to the larger tie-break rank.
        int arm = 0;
        for (int a = 1; a < A; ++a)
            if (blended[a] > blended[arm] ||
                (blended[a] == blended[arm] && gamma[a] > gamma[arm]))
                arm = a;

        double r = env.reward(t, arm);
        if (r < 0.0 || r > 1.0) throw EnvError("reward outside [0,1]");

        std::vector<double> u(D, 0.0);
        for (int i = 0; i < D; ++i)
            for (int j = 0; j < D; ++j) u[i] += W[arm][std::size_t(i) * D + j] * x[j];
        double d = 0;
        for (int i = 0; i < D; ++i) d += x[i] * u[i];
        double rho = 1.0 / (1.0 + d);
        for (int i = 0; i < D; ++i)
            for (int j = 0; j < D; ++j) W[arm][std::size_t(i) * D + j] -= rho * u[i] * u[j];
        for (int i = 0; i < D; ++i) b[arm][i] += r * x[i];

        cum += r;
        res.avg_reward.push_back(cum / double(t + 1));
        res.steps.push_back({t, arm, r, y, blended});
        if (checkpoint_every && (t + 1) % checkpoint_every == 0)
            res.checkpoints.push_back(snapshot(t + 1));
    }
    res.final_state = snapshot(horizon);
    return res;
}

namespace {

void write_rows(const std::string& path, std::size_t n,
                const std::function<void(std::FILE*, std::size_t)>& row) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw ConfigError("cannot write csv: " + path);
    std::fprintf(f, "step,avg_reward,rounds\n");
    for (std::size_t i = 0; i < n; ++i) row(f, i);
    std::fclose(f);
}

} // namespace

void write_reward_csv(const std::string& path, const EpisodeResult& r) {
    write_rows(path, r.steps.size(), [&](std::FILE* f, std::size_t i) {
        std::fprintf(f, "%zu,%.9f,%llu\n", r.steps[i].t, r.avg_reward[i],
                     (unsigned long long)r.rounds_after[i]);
    });
}

void write_reward_csv(const std::string& path, const PlainResult& r) {
    write_rows(path, r.steps.size(), [&](std::FILE* f, std::size_t i) {
        std::fprintf(f, "%zu,%.9f,0\n", r.steps[i].t, r.avg_reward[i]);
    });
}

void write_manifest(const std::string& path,
                    const std::vector<std::pair<std::string, std::string>>& kv) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw ConfigError("cannot write manifest: " + path);
    for (const auto& [k, v] : kv) std::fprintf(f, "%s=%s\n", k.c_str(), v.c_str());
    std::fclose(f);
}

} // namespace mpcbandit
