// End-to-end acceptance checks, one PASS/FAIL line each:
//   1. lockstep equivalence of the secure and reference learners
//   2. exact per-op round counts and the argmax round-growth fit
//   3. Monte-Carlo privacy bound of the action channel
//   4. numerical kernels: codec, reciprocal, rank-one inverse recursion
//   5. reward vs fixed-point precision (interior maximum)
//   6. reward vs privacy loss (exploration beats the greedy baseline)
//   7. membership-inference advantage (small and shrinking)
//   8. obliviousness: transcripts, untouched arms, uniform tie-breaks
//   9. truncation failure rate model
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "mpcbandit/bandit.hpp"
#include "mpcbandit/privacy.hpp"
#include "mpcbandit/sharing.hpp"
#include "support/harness.hpp"

using namespace mpcbandit;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Two-party session driver over dealt stores.
void run_pair(const StoreCounts& want, u64 seed, const std::function<void(Session&)>& body) {
    DealerOptions opt;
    opt.parties = 2;
    opt.seed = seed;
    DealerOutput out = deal(opt, want);
    LocalFabric fab(2, 60000);
    run_endpoints(2, [&](int p) {
        Session s(fab.endpoint(p), &out.stores[p]);
        body(s);
    });
}

std::vector<std::vector<u64>> split2(const std::vector<u64>& vals, Prng& rng) {
    std::vector<std::vector<u64>> per(2, std::vector<u64>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) {
        auto sh = share_value(vals[i], 2, rng);
        per[0][i] = sh[0];
        per[1][i] = sh[1];
    }
    return per;
}

KmeansEnv make_blobs(int arms, int dim, std::size_t n, u64 seed, double sigma, double spread,
                     double noise) {
    KmeansConfig kc;
    kc.k = arms;
    kc.sigma = sigma;
    kc.seed = seed;
    return KmeansEnv(gaussian_blobs(arms, dim, n, spread, noise, seed), n, dim, kc);
}

// ---------------------------------------------------------------- criterion 1

Outcome c1_lockstep() {
    auto env = make_blobs(10, 20, 2000, 41, 0.5, 2.0, 0.05);
    EpisodeConfig cfg;
    cfg.horizon = 1000;
    cfg.epsilon = 0.1;
    cfg.seed = 11;
    cfg.export_draws = true;
    EpisodeResult mpc = run_episode(env, cfg);
    PlainResult ref = plaintext_reference(env, cfg.horizon, cfg.epsilon, 1, &mpc.draws);

    std::size_t same = 0;
    std::size_t first_diff = cfg.horizon;
    for (std::size_t t = 0; t < cfg.horizon; ++t) {
        if (mpc.steps[t].arm == ref.steps[t].arm)
            ++same;
        else if (first_diff == cfg.horizon)
            first_diff = t;
    }
    bool curves = mpc.avg_reward == ref.avg_reward;
    Outcome o;
    o.pass = same == cfg.horizon && curves;
    if (o.pass)
        o.detail = fmt("%zu/%zu identical actions, reward curves identical", same, cfg.horizon);
    else
        o.detail = fmt("%zu/%zu identical actions, first divergence at t=%zu, curves %s", same,
                       cfg.horizon, first_diff, curves ? "identical" : "differ");
    return o;
}

// ---------------------------------------------------------------- criterion 2

Outcome c2_rounds() {
    u64 add_rounds = 1, mul_rounds = 0, ge_rounds = 0, rec_rounds = 0;
    std::map<int, u64> amax_rounds;
    const std::vector<int> arm_grid = {4, 16, 64};

    StoreCounts want;
    want += plan_mul(8, true);
    want += plan_ge(8, 2);
    want += plan_reciprocal(8, 7, 2);
    for (int a : arm_grid) want += plan_argmax(std::size_t(a), 2);

    run_pair(want, 7, [&](Session& s) {
        FixedPoint fx(20);
        Prng rng(5);
        std::vector<u64> x(8, fx.encode(1.5)), y(8, fx.encode(2.5));

        u64 before = s.net().ledger().total_rounds();
        auto sum = s.sec_add(x, y);
        (void)sum;
        u64 after = s.net().ledger().total_rounds();
        s.sec_mul("mul_probe", x, y, Scale::Encoded);
        s.sec_ge("ge_probe", x, y);
        s.sec_reciprocal("rec_probe", y, 7);
        for (int a : arm_grid) {
            std::string label = "amax_probe_" + std::to_string(a);
            std::vector<u64> vals(a);
            for (int i = 0; i < a; ++i) vals[i] = s.leader() ? fx.encode(0.01 * i) : 0;
            s.sec_argmax(label, vals);
            if (s.leader()) amax_rounds[a] = s.net().ledger().rounds(label);
        }
        if (s.leader()) {
            add_rounds = after - before;
            mul_rounds = s.net().ledger().rounds("mul_probe");
            ge_rounds = s.net().ledger().rounds("ge_probe");
            rec_rounds = s.net().ledger().rounds("rec_probe");
        }
    });

    // Least-squares fit of argmax rounds against log2(arms).
    double sx = 0, sy = 0, sxx = 0, sxy = 0, n = double(arm_grid.size());
    for (int a : arm_grid) {
        double lx = std::log2(double(a)), ly = double(amax_rounds[a]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    double icept = (sy - slope * sx) / n;
    double ss_res = 0, ss_tot = 0;
    for (int a : arm_grid) {
        double lx = std::log2(double(a)), ly = double(amax_rounds[a]);
        ss_res += (ly - icept - slope * lx) * (ly - icept - slope * lx);
        ss_tot += (ly - sy / n) * (ly - sy / n);
    }
    double r2 = 1.0 - ss_res / ss_tot;

    Outcome o;
    o.pass = add_rounds == 0 && mul_rounds == 2 && rec_rounds == 30 && ge_rounds == 7 && r2 > 0.95;
    o.detail = fmt("add=%llu mul=%llu recip=%llu compare=%llu argmax{4,16,64}={%llu,%llu,%llu} "
                   "fit R2=%.4f",
                   (unsigned long long)add_rounds, (unsigned long long)mul_rounds,
                   (unsigned long long)rec_rounds, (unsigned long long)ge_rounds,
                   (unsigned long long)amax_rounds[4], (unsigned long long)amax_rounds[16],
                   (unsigned long long)amax_rounds[64], r2);
    return o;
}

// ---------------------------------------------------------------- criterion 3

Outcome c3_dp_bound() {
    const std::size_t N = 100000;
    bool pass = true;
    std::ostringstream ss;
    for (double e : {0.1, 0.5, 1.0})
        for (int a : {2, 10}) {
            DpRatioEstimate est = verify_dp_ratio(e, a, N, 13);
            double pmin = e / a;
            double slack = 3.0 * std::sqrt(2.0 * (1.0 - pmin) / (double(N) * pmin));
            double bound = std::log(double(a) / e);
            double g = 1.0 - e + e / a;
            double gslack = 3.0 * std::sqrt(g * (1.0 - g) / double(N));
            bool ok = est.max_log_ratio <= bound + slack && std::abs(est.greedy_freq - g) <= gslack;
            if (!ok)
                ss << fmt(" VIOLATION(e=%.1f,A=%d ratio=%.3f bound=%.3f freq=%.4f want=%.4f)", e,
                          a, est.max_log_ratio, bound + slack, est.greedy_freq, g);
            pass = pass && ok;
        }
    Outcome o;
    o.pass = pass;
    o.detail = pass ? fmt("6 grid cells within bound+3sigma at %zu trials each", N)
                    : "bound exceeded:" + ss.str();
    return o;
}

// ---------------------------------------------------------------- criterion 4

Outcome c4_kernels() {
    // Codec round trip.
    FixedPoint fx(20);
    double worst_codec = 0;
    for (int i = 0; i <= 2000; ++i) {
        double x = -100.0 + 0.1 * i;
        worst_codec = std::max(worst_codec, std::abs(fx.decode(fx.encode(x)) - x));
    }
    bool codec_ok = worst_codec <= std::ldexp(1.0, -21);

    // Secure reciprocal at 7 and 3 iterations over [1, 10].
    double rel7 = 0, rel3 = 0;
    {
        StoreCounts want;
        want += plan_reciprocal(100, 7, 2);
        want += plan_reciprocal(100, 3, 2);
        std::vector<double> pts(100);
        for (int i = 0; i < 100; ++i) pts[i] = 1.0 + 9.0 * i / 99.0;
        std::vector<u64> enc(100);
        for (int i = 0; i < 100; ++i) enc[i] = fx.encode(pts[i]);
        Prng rng(3);
        auto sh = split2(enc, rng);
        run_pair(want, 17, [&](Session& s) {
            auto r7 = s.open("r7", s.sec_reciprocal("rec7", sh[s.party()], 7));
            auto r3 = s.open("r3", s.sec_reciprocal("rec3", sh[s.party()], 3));
            if (!s.leader()) return;
            for (int i = 0; i < 100; ++i) {
                rel7 = std::max(rel7, std::abs(fx.decode(r7[i]) - 1.0 / pts[i]) * pts[i]);
                rel3 = std::max(rel3, std::abs(fx.decode(r3[i]) - 1.0 / pts[i]) * pts[i]);
            }
        });
    }
    bool rec_ok = rel7 < 1e-3 && rel3 < 1e-2;

    // Rank-one inverse recursion against the float mirror, 100 updates.
    double sm_worst = 0;
    {
        const int A = 2, D = 4, N = 100;
        StoreCounts want;
        for (int a = 0; a < A; ++a) {
            want += plan_matmul(D, D, 1, true);
            want += plan_matmul(1, D, 1, true);
            want += plan_matmul(D, 1, D, true);
        }
        want += plan_reciprocal(A, 7, 2);
        want += plan_mul(A, false);
        want += plan_mul(std::size_t(A) * D * D, true);
        want += plan_mul(D, true);
        want += plan_mul(std::size_t(A) * D, false);
        want = want.scaled(N);

        Prng rng(23);
        std::vector<std::vector<double>> xs(N, std::vector<double>(D));
        std::vector<int> arm(N);
        std::vector<double> rew(N);
        for (int t = 0; t < N; ++t) {
            double n2 = 0;
            for (int i = 0; i < D; ++i) {
                xs[t][i] = rng.normal();
                n2 += xs[t][i] * xs[t][i];
            }
            for (int i = 0; i < D; ++i) xs[t][i] /= std::sqrt(n2);
            arm[t] = int(rng.below(A));
            rew[t] = double(rng.below(2));
        }
        std::vector<std::vector<double>> W(A, std::vector<double>(D * D, 0.0));
        std::vector<std::vector<double>> b(A, std::vector<double>(D, 0.0));
        for (int a = 0; a < A; ++a)
            for (int i = 0; i < D; ++i) W[a][i * D + i] = 1.0;
        for (int t = 0; t < N; ++t) {
            int a = arm[t];
            std::vector<double> u(D, 0.0);
            for (int i = 0; i < D; ++i)
                for (int j = 0; j < D; ++j) u[i] += W[a][i * D + j] * xs[t][j];
            double d = 0;
            for (int i = 0; i < D; ++i) d += xs[t][i] * u[i];
            double rho = 1.0 / (1.0 + d);
            for (int i = 0; i < D; ++i)
                for (int j = 0; j < D; ++j) W[a][i * D + j] -= rho * u[i] * u[j];
            for (int i = 0; i < D; ++i) b[a][i] += rew[t] * xs[t][i];
        }

        std::vector<std::vector<std::vector<u64>>> xsh(N), ohsh(N), rssh(N);
        for (int t = 0; t < N; ++t) {
            std::vector<u64> e(D);
            for (int i = 0; i < D; ++i) e[i] = fx.encode(xs[t][i]);
            xsh[t] = split2(e, rng);
            std::vector<u64> oh(A, 0);
            oh[arm[t]] = 1;
            ohsh[t] = split2(oh, rng);
            rssh[t] = split2({fx.encode(rew[t])}, rng);
        }
        run_pair(want, 29, [&](Session& s) {
            PolicyState st = policy_init(s, A, D);
            int p = s.party();
            for (int t = 0; t < N; ++t) {
                RingTensor x(D, 1);
                x.v = xsh[t][p];
                policy_update(s, st, x, ohsh[t][p], rssh[t][p][0], 7);
            }
            PolicySnapshot snap = open_policy(s, st, N);
            if (!s.leader()) return;
            for (int a = 0; a < A; ++a) {
                for (int i = 0; i < D * D; ++i)
                    sm_worst = std::max(sm_worst, std::abs(snap.winv[a][i] - W[a][i]));
                for (int i = 0; i < D; ++i)
                    sm_worst = std::max(sm_worst, std::abs(snap.bias[a][i] - b[a][i]));
            }
        });
    }
    bool sm_ok = sm_worst < 1e-2;

    Outcome o;
    o.pass = codec_ok && rec_ok && sm_ok;
    o.detail = fmt("codec err=%.2e (<=2^-21) recip rel err 7it=%.2e (<1e-3) 3it=%.2e (<1e-2) "
                   "rank-one drift=%.2e (<1e-2)",
                   worst_codec, rel7, rel3, sm_worst);
    return o;
}

// ---------------------------------------------------------------- criterion 5

Outcome c5_precision() {
    // The sweep includes L=10 so the curve's actual low-precision breakpoint
    // is visible next to the pinned L=14 check.
    const std::vector<int> grid = {10, 14, 18, 20, 22, 26};
    const std::vector<u64> seeds = {31, 77, 113};
    std::map<int, double> reward;
    for (int L : grid) {
        double sum = 0;
        for (u64 s : seeds) {
            auto env = make_blobs(5, 8, 2000, 47, 0.3, 1.6, 0.25);
            EpisodeConfig cfg;
            cfg.horizon = 2000;
            cfg.epsilon = 0.1;
            cfg.lbits = L;
            cfg.seed = s;
            EpisodeResult res = run_episode(env, cfg);
            sum += res.avg_reward.back();
        }
        reward[L] = sum / double(seeds.size());
    }
    double rmax = 0;
    for (int L : grid) rmax = std::max(rmax, reward[L]);
    // Maximal in the window means the window attains the global maximum
    // (exact ties with points outside the window count as attained).
    bool interior = std::max({reward[18], reward[20], reward[22]}) >= rmax;
    bool low_bad = reward[14] < 0.8 * rmax;
    bool high_bad = reward[26] < 0.8 * rmax;

    Outcome o;
    o.pass = interior && low_bad && high_bad;
    o.detail = fmt("reward{10,14,18,20,22,26}={%.3f,%.3f,%.3f,%.3f,%.3f,%.3f}, window 18..22 "
                   "%s max, drop at 14: %.0f%% (need >20), drop at 26: %.0f%% (need >20)",
                   reward[10], reward[14], reward[18], reward[20], reward[22], reward[26],
                   interior ? "attains" : "misses", 100.0 * (1.0 - reward[14] / rmax),
                   100.0 * (1.0 - reward[26] / rmax));
    return o;
}

// ---------------------------------------------------------------- criterion 6

std::string digit_dir() {
    auto dir = std::filesystem::temp_directory_path() / "mpcb_accept_digits";
    std::filesystem::create_directories(dir);
    ensure_idx_dataset(dir.string(), 6000, 9);
    return dir.string();
}

Outcome c6_privacy_reward() {
    MnistPcaEnv env(digit_dir(), 20, 0, digit_dir() + "/pca_20.bin");
    const std::size_t T = 2000;
    int wins = 0;
    std::ostringstream ss;
    for (int k = 0; k < 5; ++k) {
        EpisodeConfig cfg;
        cfg.horizon = T;
        cfg.epsilon = 0.1;
        cfg.seed = mix_seed(61, u64(k) + 1);
        EpisodeResult sec = run_episode(env, cfg);
        PlainResult greedy = plaintext_reference(env, T, 0.0, mix_seed(62, u64(k) + 1));
        double a = sec.avg_reward.back(), b = greedy.avg_reward.back();
        wins += a >= b ? 1 : 0;
        ss << fmt(" %.3f>=%.3f", a, b);
    }
    // One-sided sign test: 5/5 wins gives p = 2^-5 ~ 0.031 < 0.1.
    Outcome o;
    o.pass = wins == 5;
    o.detail = fmt("explore(eta=4.6) vs greedy(eta=inf) pairs:%s -> %d/5 wins", ss.str().c_str(),
                   wins);
    return o;
}

// ---------------------------------------------------------------- criterion 7

Outcome c7_membership() {
    MnistPcaEnv env(digit_dir(), 20, 0, digit_dir() + "/pca_20.bin");
    AttackExperiment cfg;
    cfg.horizon = 1000;
    cfg.epsilon = 0.1;
    cfg.checkpoint_every = 125;
    cfg.runs = 24;
    cfg.probes = 300;
    cfg.seed = 71;
    AttackResult res = membership_experiment(env, cfg);

    std::size_t last = res.steps.size() - 1;
    std::vector<double> early, late;
    for (const auto& row : res.advantage) {
        early.push_back(row[0]);
        late.push_back(row[last]);
    }
    double final_mean = res.mean[last];
    double med_early = median(early), med_late = median(late);

    Outcome o;
    o.pass = std::abs(final_mean) < 0.05 && med_early > med_late;
    o.detail = fmt("final advantage=%.4f (|.|<0.05), median early=%.4f > late=%.4f over %d runs",
                   final_mean, med_early, med_late, cfg.runs);
    return o;
}

// ---------------------------------------------------------------- criterion 8

Outcome c8_obliviousness() {
    // (a) transcript scanner on a recorded episode.
    auto env = make_blobs(4, 6, 400, 83, 0.5, 2.0, 0.05);
    EpisodeConfig cfg;
    cfg.horizon = 50;
    cfg.epsilon = 0.2;
    cfg.seed = 19;
    cfg.record_transcript = true;
    EpisodeResult res = run_episode(env, cfg);

    FixedPoint fx(20);
    std::vector<u64> action_raw, action_enc, reward_enc;
    for (const auto& st : res.steps) {
        action_raw.push_back(u64(st.arm));
        action_enc.push_back(fx.encode(double(st.arm)));
        reward_enc.push_back(fx.encode(st.reward));
    }
    // Windows below min_distinct values are not identifying: a binary action
    // window is indistinguishable from the masked bit vectors the comparison
    // tree legitimately exchanges.
    auto window_match = [](const std::vector<u64>& hay, const std::vector<u64>& needle,
                           std::size_t min_distinct) {
        const std::size_t W = 8;
        if (hay.size() < W || needle.size() < W) return false;
        for (std::size_t j = 0; j + W <= needle.size(); ++j) {
            std::vector<u64> win(needle.begin() + j, needle.begin() + j + W);
            std::vector<u64> uniq = win;
            std::sort(uniq.begin(), uniq.end());
            uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
            if (uniq.size() < min_distinct) continue;
            for (std::size_t i = 0; i + W <= hay.size(); ++i)
                if (std::equal(hay.begin() + i, hay.begin() + i + W, win.begin())) return true;
        }
        return false;
    };
    bool leak = false, misrouted = false;
    std::size_t action_frames = 0;
    for (const auto& party : res.transcripts)
        for (const auto& f : party) {
            if (f.label == "action") {
                ++action_frames;
                if (!f.outgoing || f.peer != 2) misrouted = true;
                continue;
            }
            if (f.peer < 2)
                leak = leak || window_match(f.payload, action_raw, 3) ||
                       window_match(f.payload, action_enc, 2) ||
                       window_match(f.payload, reward_enc, 2);
        }
    bool scan_ok = !leak && !misrouted && action_frames == 2 * cfg.horizon;

    // (b) per-step state deltas of arms the step did not select.
    double untouched = 0;
    {
        auto env2 = make_blobs(3, 4, 200, 89, 0.5, 2.0, 0.05);
        EpisodeConfig c2;
        c2.horizon = 15;
        c2.epsilon = 0.3;
        c2.seed = 23;
        c2.checkpoint_every = 1;
        EpisodeResult r2 = run_episode(env2, c2);
        PolicySnapshot prev;
        prev.step = 0;
        prev.winv.assign(3, std::vector<double>(16, 0.0));
        prev.bias.assign(3, std::vector<double>(4, 0.0));
        for (int a = 0; a < 3; ++a)
            for (int i = 0; i < 4; ++i) prev.winv[a][i * 4 + i] = 1.0;
        for (std::size_t t = 0; t < r2.checkpoints.size(); ++t) {
            const PolicySnapshot& cur = r2.checkpoints[t];
            for (int a = 0; a < 3; ++a) {
                if (a == r2.steps[t].arm) continue;
                for (int i = 0; i < 16; ++i)
                    untouched = std::max(untouched, std::abs(cur.winv[a][i] - prev.winv[a][i]));
                for (int i = 0; i < 4; ++i)
                    untouched = std::max(untouched, std::abs(cur.bias[a][i] - prev.bias[a][i]));
            }
            prev = cur;
        }
    }
    bool gate_ok = untouched < 1e-4;

    // (c) tie-break uniformity over 10^4 oblivious argmax calls.
    const int A = 4, N = 10000;
    std::vector<u64> counts(A, 0);
    {
        StoreCounts want = plan_argmax(A, 2).scaled(N);
        run_pair(want, 97, [&](Session& s) {
            FixedPoint f2(20);
            std::vector<u64> tied(A);
            for (int i = 0; i < A; ++i) tied[i] = s.leader() ? f2.encode(0.5) : 0;
            std::vector<u64> local(A, 0);
            for (int t = 0; t < N; ++t) {
                auto oh = s.open("tie", s.sec_argmax("amax_tie", tied));
                for (int a = 0; a < A; ++a) local[a] += oh[a];
            }
            if (s.leader()) counts = local;
        });
    }
    double chi2 = 0, expect = double(N) / A;
    for (int a = 0; a < A; ++a) chi2 += (counts[a] - expect) * (counts[a] - expect) / expect;
    bool tie_ok = chi2 < 11.345; // dof 3, p = 0.01

    Outcome o;
    o.pass = scan_ok && gate_ok && tie_ok;
    o.detail = fmt("scanner %s (%zu action frames), untouched-arm delta=%.1e (<1e-4), "
                   "tie chi2=%.2f (<11.35) counts={%llu,%llu,%llu,%llu}",
                   scan_ok ? "clean" : "LEAK", action_frames, untouched, chi2,
                   (unsigned long long)counts[0], (unsigned long long)counts[1],
                   (unsigned long long)counts[2], (unsigned long long)counts[3]);
    return o;
}

// ---------------------------------------------------------------- criterion 9

Outcome c9_truncation() {
    // Encoded 8 x 8 at L=20: product 64 B^2 before truncation, so the model
    // failure rate is 64 B^2 / 2^64 = 2^-18 per lane.
    const std::size_t lanes = 100000;
    const int chunks = 200;
    FixedPoint fx(20);
    const u64 e8 = fx.encode(8.0);
    u64 failures = 0;
    for (int c = 0; c < chunks; ++c) {
        Prng rng(mix_seed(991, u64(c)));
        auto xs = split2(std::vector<u64>(lanes, e8), rng);
        auto ys = split2(std::vector<u64>(lanes, e8), rng);
        u64 local = 0;
        run_pair(plan_mul(lanes, true), mix_seed(313, u64(c)), [&](Session& s) {
            auto z = s.open("chk", s.sec_mul("m", xs[s.party()], ys[s.party()], Scale::Encoded));
            if (!s.leader()) return;
            for (u64 v : z)
                if (std::abs(fx.decode(v) - 64.0) > 1.0) ++local;
        });
        failures += local;
    }
    double total = double(lanes) * chunks;
    double rate = std::ldexp(1.0, -18);
    double expected = total * rate;
    double sigma = std::sqrt(expected * (1.0 - rate));
    Outcome o;
    o.pass = std::abs(double(failures) - expected) <= 3.0 * sigma;
    o.detail = fmt("failures=%llu expected=%.1f +-%.1f (3sigma) over %.0f lanes",
                   (unsigned long long)failures, expected, 3.0 * sigma, total);
    return o;
}

} // namespace

int main(int argc, char** argv) {
    struct Item {
        int id;
        const char* name;
        std::function<Outcome()> fn;
    };
    const std::vector<Item> items = {
        {1, "lockstep equivalence", c1_lockstep},
        {2, "protocol round counts", c2_rounds},
        {3, "action-channel privacy bound", c3_dp_bound},
        {4, "numerical kernels", c4_kernels},
        {5, "precision sweep interior maximum", c5_precision},
        {6, "exploration beats greedy baseline", c6_privacy_reward},
        {7, "membership-inference advantage", c7_membership},
        {8, "obliviousness", c8_obliviousness},
        {9, "truncation failure model", c9_truncation},
    };

    std::vector<int> only;
    for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));

    int failures = 0, ran = 0;
    for (const auto& it : items) {
        if (!only.empty() && std::find(only.begin(), only.end(), it.id) == only.end()) continue;
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = it.fn();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s  %d. %s: %s  [%.1fs]\n", o.pass ? "PASS" : "FAIL", it.id, it.name,
                    o.detail.c_str(), sec);
        std::fflush(stdout);
        if (!o.pass) ++failures;
        ++ran;
    }
    if (failures) std::printf("%d of %d criteria failed\n", failures, ran);
    else std::printf("all %d criteria passed\n", ran);
    return failures;
}
