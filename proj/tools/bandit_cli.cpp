// Experiment runner: secure episodes, parameter sweeps, communication
// benches, and the membership-inference attack, all emitting CSV artifacts
// plus a manifest that echoes the full configuration.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "mpcbandit/bandit.hpp"
#include "mpcbandit/privacy.hpp"

using namespace mpcbandit;
namespace fs = std::filesystem;

namespace {

struct Options {
    std::string mode;
    std::string out = "out";
    std::string env = "synthetic";
    std::string data = "data";
    std::string transport = "local";
    std::size_t horizon = 200;
    int arms = 5;
    int dim = 8;
    int parties = 2;
    double epsilon = 0.1;
    int lbits = 20;
    int nr_iters = 7;
    u64 seed = 1;
    std::size_t env_size = 2000;
    double sigma = 0.5;
    bool plain = false;
    int tcp_base_port = 47400;
    // sweep
    std::string sweep = "epsilon=0.01,0.05,0.1,0.2";
    int repeats = 5;
    // bench
    std::size_t bench_lanes = 100;
    int bench_iters = 20;
    // attack
    int attack_runs = 20;
    std::size_t probes = 200;
    std::size_t checkpoint_every = 0; // 0: horizon / 5
};

std::unique_ptr<Env> make_env(const Options& o, int arms_override = 0, u64 seed_override = 0) {
    int arms = arms_override ? arms_override : o.arms;
    u64 seed = seed_override ? seed_override : o.seed;
    if (o.env == "synthetic") {
        KmeansConfig kc;
        kc.k = arms;
        kc.sigma = o.sigma;
        kc.seed = mix_seed(seed, 0x454E56);
        auto pts = gaussian_blobs(arms, o.dim, o.env_size, 2.0, 0.05, kc.seed);
        return std::make_unique<KmeansEnv>(std::move(pts), o.env_size, o.dim, kc);
    }
    if (o.env == "mnist") {
        if (arms != 10) throw ConfigError("the digit stream has exactly ten arms");
        fs::create_directories(o.data);
        ensure_idx_dataset(o.data, std::max<std::size_t>(o.env_size, 2 * o.horizon));
        std::string cache = (fs::path(o.data) / ("pca_" + std::to_string(o.dim) + ".bin")).string();
        return std::make_unique<MnistPcaEnv>(o.data, o.dim, o.env_size, cache);
    }
    throw ConfigError("env must be synthetic or mnist");
}

std::vector<std::pair<std::string, std::string>> base_manifest(const Options& o) {
    auto num = [](double v) {
        std::ostringstream ss;
        ss << v;
        return ss.str();
    };
    return {
        {"mode", o.mode},
        {"env", o.env},
        {"data", o.data},
        {"out", o.out},
        {"horizon", std::to_string(o.horizon)},
        {"arms", std::to_string(o.arms)},
        {"dim", std::to_string(o.dim)},
        {"parties", std::to_string(o.parties)},
        {"epsilon", num(o.epsilon)},
        {"precision_bits", std::to_string(o.lbits)},
        {"nr_iters", std::to_string(o.nr_iters)},
        {"transport", o.transport},
        {"seed", std::to_string(o.seed)},
        {"env_size", std::to_string(o.env_size)},
        {"sigma", num(o.sigma)},
        {"plain", o.plain ? "1" : "0"},
        {"eta", o.epsilon > 0 ? num(privacy_loss(o.epsilon, o.arms)) : "inf"},
    };
}

EpisodeConfig episode_config(const Options& o) {
    EpisodeConfig cfg;
    cfg.horizon = o.horizon;
    cfg.parties = o.parties;
    cfg.epsilon = o.epsilon;
    cfg.lbits = o.lbits;
    cfg.nr_iters = o.nr_iters;
    cfg.seed = o.seed;
    cfg.transport = o.transport;
    cfg.tcp_base_port = o.tcp_base_port;
    return cfg;
}

int cmd_run(const Options& o) {
    fs::create_directories(o.out);
    auto env = make_env(o);
    auto manifest = base_manifest(o);

    double mean = 0;
    if (o.plain) {
        PlainResult res = plaintext_reference(*env, o.horizon, o.epsilon, o.seed);
        write_reward_csv((fs::path(o.out) / "reward.csv").string(), res);
        mean = res.avg_reward.empty() ? 0.0 : res.avg_reward.back();
        manifest.emplace_back("total_rounds", "0");
        manifest.emplace_back("total_bytes", "0");
    } else {
        EpisodeResult res = run_episode(*env, episode_config(o));
        write_reward_csv((fs::path(o.out) / "reward.csv").string(), res);
        if (!res.steps.empty()) mean = res.avg_reward.back();
        manifest.emplace_back("total_rounds", std::to_string(res.total_rounds));
        manifest.emplace_back("total_bytes", std::to_string(res.total_bytes));
        manifest.emplace_back("seconds", std::to_string(res.seconds));
        std::FILE* f = std::fopen((fs::path(o.out) / "ledger.csv").string().c_str(), "w");
        if (!f) throw ConfigError("cannot write ledger csv");
        std::fprintf(f, "operation,rounds,bytes\n");
        for (const auto& [label, st] : res.op_rounds)
            std::fprintf(f, "%s,%llu,%llu\n", label.c_str(), (unsigned long long)st.rounds,
                         (unsigned long long)st.bytes);
        std::fclose(f);
    }
    manifest.emplace_back("mean_reward", std::to_string(mean));
    write_manifest((fs::path(o.out) / "manifest.txt").string(), manifest);
    std::printf("run: T=%zu arms=%d mean_reward=%.4f -> %s\n", o.horizon, o.arms, mean,
                o.out.c_str());
    return 0;
}

// One sweep cell: mean/std reward over `repeats` seeds; protocol failures
// flag the row instead of aborting the sweep.
struct SweepRow {
    std::string param;
    double value = 0;
    double eta = 0;
    double mean = 0;
    double stddev = 0;
    int runs = 0;
    int failed = 0;
};

int cmd_sweep(const Options& base) {
    auto eq = base.sweep.find('=');
    if (eq == std::string::npos) throw ConfigError("sweep wants name=v1,v2,...");
    std::string param = base.sweep.substr(0, eq);
    std::vector<double> values;
    std::stringstream ss(base.sweep.substr(eq + 1));
    for (std::string tok; std::getline(ss, tok, ',');) values.push_back(std::stod(tok));
    if (values.empty()) throw ConfigError("sweep grid is empty");

    auto apply = [&](Options& o, double v) {
        if (param == "epsilon")
            o.epsilon = v;
        else if (param == "precision-bits")
            o.lbits = int(v);
        else if (param == "nr-iters")
            o.nr_iters = int(v);
        else if (param == "arms")
            o.arms = int(v);
        else if (param == "parties")
            o.parties = int(v);
        else if (param == "horizon")
            o.horizon = std::size_t(v);
        else
            throw ConfigError("unknown sweep parameter: " + param);
    };

    fs::create_directories(base.out);
    std::vector<SweepRow> rows;
    int cell_runs = 0; // fresh tcp ports per run, never reused within a sweep
    for (double v : values) {
        Options o = base;
        apply(o, v);
        SweepRow row;
        row.param = param;
        row.value = v;
        row.eta = o.epsilon > 0 ? privacy_loss(o.epsilon, o.arms)
                                : std::numeric_limits<double>::infinity();
        std::vector<double> finals;
        for (int r = 0; r < base.repeats; ++r) {
            Options cell = o;
            cell.seed = mix_seed(base.seed, u64(r) + 1);
            try {
                auto env = make_env(cell, 0, cell.seed);
                if (cell.plain) {
                    PlainResult res =
                        plaintext_reference(*env, cell.horizon, cell.epsilon, cell.seed);
                    finals.push_back(res.avg_reward.back());
                } else {
                    cell.tcp_base_port = base.tcp_base_port + 32 * cell_runs++;
                    EpisodeResult res = run_episode(*env, episode_config(cell));
                    finals.push_back(res.avg_reward.back());
                }
            } catch (const TransportError&) {
                ++row.failed;
            } catch (const DealerError&) {
                ++row.failed;
            }
        }
        row.runs = int(finals.size());
        if (!finals.empty()) {
            row.mean = std::accumulate(finals.begin(), finals.end(), 0.0) / finals.size();
            double var = 0;
            for (double f : finals) var += (f - row.mean) * (f - row.mean);
            row.stddev = finals.size() > 1 ? std::sqrt(var / (finals.size() - 1)) : 0.0;
        }
        rows.push_back(row);
        std::printf("sweep: %s=%g mean=%.4f std=%.4f failed=%d\n", param.c_str(), v, row.mean,
                    row.stddev, row.failed);
    }

    std::FILE* f = std::fopen((fs::path(base.out) / "sweep.csv").string().c_str(), "w");
    if (!f) throw ConfigError("cannot write sweep csv");
    std::fprintf(f, "param,value,eta,mean_reward,std_reward,runs,failed\n");
    for (const auto& r : rows)
        std::fprintf(f, "%s,%g,%g,%.6f,%.6f,%d,%d\n", r.param.c_str(), r.value, r.eta, r.mean,
                     r.stddev, r.runs, r.failed);
    std::fclose(f);

    auto manifest = base_manifest(base);
    manifest.emplace_back("sweep", base.sweep);
    manifest.emplace_back("repeats", std::to_string(base.repeats));
    write_manifest((fs::path(base.out) / "manifest.txt").string(), manifest);
    return 0;
}

// Times `body` repeatedly until it has run for at least ~20ms and returns
// seconds per call.
double time_per_call(const std::function<void()>& body) {
    int reps = 1;
    for (;;) {
        auto t0 = std::chrono::steady_clock::now();
        for (int i = 0; i < reps; ++i) body();
        double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (s >= 0.02 || reps >= (1 << 24)) return s / reps;
        reps *= 4;
    }
}

int cmd_bench(const Options& o) {
    fs::create_directories(o.out);
    const std::size_t L = o.bench_lanes;
    const int N = o.bench_iters, P = o.parties;

    StoreCounts want;
    want += plan_mul(L, true).scaled(N);
    want += plan_ge(L, P).scaled(N);
    want += plan_reciprocal(L, o.nr_iters, P).scaled(N);
    want += plan_argmax(o.arms, P).scaled(N);
    DealerOptions dopt;
    dopt.parties = P;
    dopt.lbits = o.lbits;
    dopt.seed = o.seed;
    DealerOutput dealt = deal(dopt, want);

    struct OpResult {
        std::string name;
        u64 rounds = 0;
        double seconds = 0; // per call
        double plain_seconds = 0;
    };
    std::vector<OpResult> ops;

    LocalFabric fab(P, 60000);
    std::vector<std::thread> threads;
    std::exception_ptr err;
    for (int p = 0; p < P; ++p)
        threads.emplace_back([&, p] {
            try {
                Session s(fab.endpoint(p), &dealt.stores[p]);
                FixedPoint fx(o.lbits);
                std::vector<u64> x(L, fx.encode(2.5)), ybig(L, fx.encode(4.0));
                std::vector<u64> arms(o.arms);
                for (int a = 0; a < o.arms; ++a) arms[a] = s.leader() ? fx.encode(0.1 * a) : 0;

                auto timed = [&](const char* name, u64 expect_calls,
                                 const std::function<void()>& body) {
                    u64 r0 = s.net().ledger().total_rounds();
                    auto t0 = std::chrono::steady_clock::now();
                    for (int i = 0; i < N; ++i) body();
                    double sec =
                        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                            .count();
                    if (p == 0)
                        ops.push_back({name, (s.net().ledger().total_rounds() - r0) / expect_calls,
                                       sec / N, 0.0});
                };
                timed("addition", u64(N), [&] { s.sec_add(x, ybig); });
                timed("multiplication", u64(N), [&] { s.sec_mul("bench", x, ybig, Scale::Encoded); });
                timed("comparison", u64(N), [&] { s.sec_ge("bench", x, ybig); });
                timed("reciprocal", u64(N), [&] { s.sec_reciprocal("bench", ybig, o.nr_iters); });
                timed("argmax", u64(N), [&] { s.sec_argmax("bench", arms); });
            } catch (...) {
                if (p == 0) err = std::current_exception();
            }
        });
    for (auto& t : threads) t.join();
    if (err) std::rethrow_exception(err);

    // Plaintext baselines per operation over the same lane width.
    volatile double sink = 0;
    std::vector<double> xs(L, 2.5), ys(L, 4.0), as(o.arms, 0.25);
    auto plain = [&](const std::function<double()>& body) {
        return time_per_call([&] { sink = sink + body(); });
    };
    ops[0].plain_seconds = plain([&] {
        double t = 0;
        for (std::size_t i = 0; i < L; ++i) t += xs[i] + ys[i];
        return t;
    });
    ops[1].plain_seconds = plain([&] {
        double t = 0;
        for (std::size_t i = 0; i < L; ++i) t += xs[i] * ys[i];
        return t;
    });
    ops[2].plain_seconds = plain([&] {
        double t = 0;
        for (std::size_t i = 0; i < L; ++i) t += xs[i] >= ys[i] ? 1.0 : 0.0;
        return t;
    });
    ops[3].plain_seconds = plain([&] {
        double t = 0;
        for (std::size_t i = 0; i < L; ++i) t += 1.0 / ys[i];
        return t;
    });
    ops[4].plain_seconds = plain([&] {
        return double(std::max_element(as.begin(), as.end()) - as.begin());
    });

    std::FILE* f = std::fopen((fs::path(o.out) / "bench.csv").string().c_str(), "w");
    if (!f) throw ConfigError("cannot write bench csv");
    std::fprintf(f, "op,rounds,seconds,plain_seconds,slowdown\n");
    std::printf("%-16s %8s %12s %14s %10s\n", "op", "rounds", "seconds", "plain_seconds",
                "slowdown");
    for (const auto& r : ops) {
        double slow = r.plain_seconds > 0 ? r.seconds / r.plain_seconds : 0.0;
        std::fprintf(f, "%s,%llu,%.9f,%.12f,%.1f\n", r.name.c_str(), (unsigned long long)r.rounds,
                     r.seconds, r.plain_seconds, slow);
        std::printf("%-16s %8llu %12.6f %14.9f %9.0fx\n", r.name.c_str(),
                    (unsigned long long)r.rounds, r.seconds, r.plain_seconds, slow);
    }
    std::fclose(f);

    auto manifest = base_manifest(o);
    manifest.emplace_back("bench_lanes", std::to_string(L));
    manifest.emplace_back("bench_iters", std::to_string(N));
    write_manifest((fs::path(o.out) / "manifest.txt").string(), manifest);
    return 0;
}

int cmd_attack(const Options& o) {
    fs::create_directories(o.out);
    auto env = make_env(o);
    AttackExperiment cfg;
    cfg.horizon = o.horizon;
    cfg.epsilon = o.epsilon;
    cfg.checkpoint_every = o.checkpoint_every ? o.checkpoint_every : std::max<std::size_t>(1, o.horizon / 5);
    cfg.runs = o.attack_runs;
    cfg.probes = o.probes;
    cfg.seed = o.seed;
    AttackResult res = membership_experiment(*env, cfg);
    write_attack_csv((fs::path(o.out) / "attack.csv").string(), res, o.epsilon);

    auto manifest = base_manifest(o);
    manifest.emplace_back("attack_runs", std::to_string(cfg.runs));
    manifest.emplace_back("probes", std::to_string(cfg.probes));
    manifest.emplace_back("checkpoint_every", std::to_string(cfg.checkpoint_every));
    write_manifest((fs::path(o.out) / "manifest.txt").string(), manifest);
    for (std::size_t c = 0; c < res.steps.size(); ++c)
        std::printf("attack: step=%zu advantage=%.4f ci95=%.4f\n", res.steps[c], res.mean[c],
                    res.ci95[c]);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"secure multi-party contextual bandit experiments"};
    app.require_subcommand(1);
    Options o;

    app.set_config("--config", "", "flat key=value configuration file");
    app.add_option("--out", o.out, "output directory");
    app.add_option("--seed", o.seed, "base random seed");
    app.add_option("--transport", o.transport, "party link: local or tcp")
        ->check(CLI::IsMember({"local", "tcp"}));
    app.add_option("--parties", o.parties, "compute party count");
    app.add_option("--arms", o.arms, "bandit arm count");
    app.add_option("--epsilon", o.epsilon, "exploration rate");
    app.add_option("--precision-bits", o.lbits, "fixed point fractional bits");
    app.add_option("--nr-iters", o.nr_iters, "reciprocal Newton iterations");
    app.add_option("--env", o.env, "environment: synthetic or mnist")
        ->check(CLI::IsMember({"synthetic", "mnist"}));
    app.add_option("--horizon", o.horizon, "steps per episode");
    app.add_option("--dim", o.dim, "context feature count");
    app.add_option("--env-size", o.env_size, "environment example count");
    app.add_option("--sigma", o.sigma, "synthetic reward kernel width");
    app.add_option("--data", o.data, "digit dataset directory");
    app.add_flag("--plain", o.plain, "run the plaintext reference learner instead");
    app.add_option("--tcp-base-port", o.tcp_base_port, "first port for tcp transport");
    app.add_option("--sweep", o.sweep, "sweep grid, name=v1,v2,...");
    app.add_option("--repeats", o.repeats, "runs per sweep cell");
    app.add_option("--bench-lanes", o.bench_lanes, "vector width for bench ops");
    app.add_option("--bench-iters", o.bench_iters, "timed calls per bench op");
    app.add_option("--attack-runs", o.attack_runs, "independent attack runs");
    app.add_option("--probes", o.probes, "probe examples per class");
    app.add_option("--checkpoint-every", o.checkpoint_every, "steps between checkpoints");

    auto* run = app.add_subcommand("run", "one secure (or plaintext) episode");
    auto* sweep = app.add_subcommand("sweep", "grid of episodes with mean/std rewards");
    auto* bench = app.add_subcommand("bench", "per-op rounds and slowdown vs plaintext");
    auto* attack = app.add_subcommand("attack", "membership-inference advantage");
    for (auto* sub : {run, sweep, bench, attack}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (run->parsed()) {
            o.mode = "run";
            return cmd_run(o);
        }
        if (sweep->parsed()) {
            o.mode = "sweep";
            return cmd_sweep(o);
        }
        if (bench->parsed()) {
            o.mode = "bench";
            return cmd_bench(o);
        }
        o.mode = "attack";
        return cmd_attack(o);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const EnvError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const ShapeError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const TransportError& e) {
        std::fprintf(stderr, "protocol failure: %s\n", e.what());
        return 3;
    } catch (const DealerError& e) {
        std::fprintf(stderr, "protocol failure: %s\n", e.what());
        return 3;
    } catch (const EncodingError& e) {
        std::fprintf(stderr, "protocol failure: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
