// Python surface over the core: fixed-point codec, privacy accounting, and
// the two episode runners on the synthetic clustered environment.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mpcbandit/bandit.hpp"
#include "mpcbandit/privacy.hpp"

namespace py = pybind11;
using namespace mpcbandit;

namespace {

KmeansEnv blob_env(int arms, int dim, std::size_t env_size, double sigma, u64 seed) {
    KmeansConfig kc;
    kc.k = arms;
    kc.sigma = sigma;
    kc.seed = mix_seed(seed, 0x454E56);
    auto pts = gaussian_blobs(arms, dim, env_size, 2.0, 0.05, kc.seed);
    return KmeansEnv(std::move(pts), env_size, dim, kc);
}

} // namespace

PYBIND11_MODULE(mpcbandit, m) {
    m.doc() = "secure multi-party contextual bandit core";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<EnvError>(m, "EnvError", PyExc_ValueError);

    m.def(
        "encode", [](double x, int lbits) { return FixedPoint(lbits).encode(x); }, py::arg("x"),
        py::arg("lbits") = 20, "Fixed-point encoding of x into the 64-bit ring");
    m.def(
        "decode", [](u64 v, int lbits) { return FixedPoint(lbits).decode(v); }, py::arg("v"),
        py::arg("lbits") = 20, "Signed fixed-point decoding of a ring word");

    m.def("privacy_loss", &privacy_loss, py::arg("epsilon"), py::arg("arms"),
          "Per-step privacy loss log(arms / epsilon); inf at epsilon = 0");

    m.def(
        "verify_dp_ratio",
        [](double epsilon, int arms, std::size_t trials, u64 seed) {
            DpRatioEstimate est = verify_dp_ratio(epsilon, arms, trials, seed);
            py::dict d;
            d["max_log_ratio"] = est.max_log_ratio;
            d["cross_log_ratio"] = est.cross_log_ratio;
            d["greedy_freq"] = est.greedy_freq;
            return d;
        },
        py::arg("epsilon"), py::arg("arms"), py::arg("trials") = 100000, py::arg("seed") = 1,
        "Monte-Carlo log-probability ratio of the exploration action channel");

    m.def(
        "plain_episode",
        [](std::size_t horizon, int arms, int dim, double epsilon, u64 seed, std::size_t env_size,
           double sigma, u64 env_seed) {
            auto env = blob_env(arms, dim, env_size, sigma, env_seed ? env_seed : seed);
            PlainResult res;
            {
                py::gil_scoped_release release;
                res = plaintext_reference(env, horizon, epsilon, seed);
            }
            py::list picked, rewards;
            for (const auto& st : res.steps) {
                picked.append(st.arm);
                rewards.append(st.reward);
            }
            py::dict d;
            d["arms"] = picked;
            d["rewards"] = rewards;
            d["avg_reward"] = res.avg_reward;
            return d;
        },
        py::arg("horizon"), py::arg("arms") = 3, py::arg("dim") = 4, py::arg("epsilon") = 0.1,
        py::arg("seed") = 1, py::arg("env_size") = 600, py::arg("sigma") = 0.5,
        py::arg("env_seed") = 0, "Reference learner on the synthetic clustered stream");

    m.def(
        "secure_episode",
        [](std::size_t horizon, int arms, int dim, int parties, double epsilon, int lbits,
           int nr_iters, u64 seed, std::size_t env_size, double sigma, u64 env_seed) {
            auto env = blob_env(arms, dim, env_size, sigma, env_seed ? env_seed : seed);
            EpisodeConfig cfg;
            cfg.horizon = horizon;
            cfg.parties = parties;
            cfg.epsilon = epsilon;
            cfg.lbits = lbits;
            cfg.nr_iters = nr_iters;
            cfg.seed = seed;
            EpisodeResult res;
            {
                py::gil_scoped_release release;
                res = run_episode(env, cfg);
            }
            py::list picked, rewards;
            for (const auto& st : res.steps) {
                picked.append(st.arm);
                rewards.append(st.reward);
            }
            py::dict d;
            d["arms"] = picked;
            d["rewards"] = rewards;
            d["avg_reward"] = res.avg_reward;
            d["total_rounds"] = res.total_rounds;
            d["total_bytes"] = res.total_bytes;
            d["seconds"] = res.seconds;
            return d;
        },
        py::arg("horizon"), py::arg("arms") = 3, py::arg("dim") = 4, py::arg("parties") = 2,
        py::arg("epsilon") = 0.1, py::arg("lbits") = 20, py::arg("nr_iters") = 7,
        py::arg("seed") = 1, py::arg("env_size") = 600, py::arg("sigma") = 0.5,
        py::arg("env_seed") = 0, "Full multi-party episode on the synthetic clustered stream");
}
