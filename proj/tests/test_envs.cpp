#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

#include "doctest.h"
#include "mpcbandit/envs.hpp"

using namespace mpcbandit;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const char* name) {
    fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

double norm2(const std::vector<double>& x) {
    double s = 0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

} // namespace

TEST_CASE("synthesized idx pair parses back with sane contents") {
    fs::path dir = fresh_dir("mpcb_idx");
    ensure_idx_dataset(dir.string(), 300, 9);
    IdxData d = load_idx((dir / "train-images-idx3-ubyte").string(),
                         (dir / "train-labels-idx1-ubyte").string());
    CHECK(d.count == 300);
    CHECK(d.pixels == 28 * 28);
    CHECK(d.bytes.size() == d.count * d.pixels);
    std::set<int> seen(d.labels.begin(), d.labels.end());
    CHECK(*seen.begin() >= 0);
    CHECK(*seen.rbegin() <= 9);
    CHECK(seen.size() == 10);

    // Second call reuses the existing files.
    auto stamp = fs::last_write_time(dir / "train-images-idx3-ubyte");
    ensure_idx_dataset(dir.string(), 300, 9);
    CHECK(fs::last_write_time(dir / "train-images-idx3-ubyte") == stamp);

    CHECK(load_idx((dir / "train-images-idx3-ubyte").string(),
                   (dir / "train-labels-idx1-ubyte").string(), 50)
              .count == 50);
    CHECK_THROWS_AS(load_idx((dir / "train-labels-idx1-ubyte").string(),
                             (dir / "train-labels-idx1-ubyte").string()),
                    EnvError);
}

TEST_CASE("pca basis is orthonormal and ordered by variance") {
    Prng rng(5);
    const std::size_t n = 400, p = 12;
    // Two dominant directions with decaying amplitudes.
    std::vector<double> data(n * p);
    for (std::size_t i = 0; i < n; ++i) {
        double a = rng.normal() * 8.0, b = rng.normal() * 3.0;
        for (std::size_t j = 0; j < p; ++j)
            data[i * p + j] = a * std::sin(0.3 * double(j)) + b * std::cos(0.7 * double(j)) +
                              0.05 * rng.normal();
    }
    PcaModel m = fit_pca(data, n, p, 3);
    CHECK(m.pixels == p);
    CHECK(m.components == 3);
    CHECK(m.explained_ratio > 0.95);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j <= i; ++j) {
            double dot = 0;
            for (std::size_t k = 0; k < p; ++k) dot += m.basis[i * p + k] * m.basis[j * p + k];
            CHECK(std::abs(dot - (i == j ? 1.0 : 0.0)) < 1e-9);
        }
    }
    CHECK_THROWS_AS(fit_pca(data, n, p, int(p) + 1), EnvError);

    fs::path f = fs::temp_directory_path() / "mpcb_pca.bin";
    save_pca(f.string(), m);
    PcaModel r = load_pca(f.string());
    CHECK(r.basis == m.basis);
    CHECK(r.mean == m.mean);
    CHECK(r.explained_ratio == m.explained_ratio);
}

TEST_CASE("digit env yields unit features and label-matched rewards") {
    fs::path dir = fresh_dir("mpcb_digit");
    ensure_idx_dataset(dir.string(), 600, 9);
    fs::path cache = dir / "proj.bin";
    MnistPcaEnv env(dir.string(), 12, 0, cache.string());
    CHECK(env.arms() == 10);
    CHECK(env.dim() == 12);
    CHECK(env.size() == 600);
    CHECK(env.explained_ratio() > 0.6);
    for (std::size_t t = 0; t < 40; ++t) {
        CHECK(std::abs(norm2(env.context(t)) - 1.0) < 1e-9);
        for (int a = 0; a < 10; ++a)
            CHECK(env.reward(t, a) == (a == env.labels()[t] ? 1 : 0));
    }
    // Cycles past the dataset end.
    CHECK(env.context(600) == env.context(0));

    CHECK(fs::exists(cache));
    MnistPcaEnv again(dir.string(), 12, 0, cache.string());
    CHECK(again.context(3) == env.context(3));
}

TEST_CASE("kmeans env normalizes the best arm to probability one") {
    auto pts = gaussian_blobs(3, 5, 240, 2.0, 0.05, 11);
    for (std::size_t i = 0; i < 240; ++i) {
        std::vector<double> row(pts.begin() + i * 5, pts.begin() + (i + 1) * 5);
        CHECK(std::abs(norm2(row) - 1.0) < 1e-9);
    }
    KmeansConfig cfg;
    cfg.k = 3;
    cfg.sigma = 0.4;
    cfg.seed = 2;
    KmeansEnv env(pts, 240, 5, cfg);
    CHECK(env.arms() == 3);
    CHECK(env.dim() == 5);
    for (std::size_t t = 0; t < 60; ++t) {
        double best = 0;
        for (int a = 0; a < 3; ++a) {
            CHECK(env.nu(t, a) > 0.0);
            CHECK(env.nu(t, a) <= 1.0);
            best = std::max(best, env.nu(t, a));
        }
        CHECK(best == doctest::Approx(1.0));
    }
    // Tight blobs and a narrow kernel separate the arms.
    double off = 0;
    for (std::size_t t = 0; t < 240; ++t)
        for (int a = 0; a < 3; ++a)
            if (env.nu(t, a) < 1.0) off = std::max(off, env.nu(t, a));
    CHECK(off < 0.5);

    CHECK_THROWS_AS(KmeansEnv(pts, 2, 5, cfg), EnvError);
}

TEST_CASE("kmeans rewards are reproducible bernoulli draws at rate nu") {
    auto pts = gaussian_blobs(4, 6, 400, 1.5, 0.15, 3);
    KmeansConfig cfg;
    cfg.k = 4;
    cfg.sigma = 0.6;
    KmeansEnv env(pts, 400, 6, cfg);

    KmeansEnv replay(pts, 400, 6, cfg);
    double want = 0, got = 0;
    int n = 0;
    for (std::size_t t = 0; t < 400; ++t)
        for (int a = 0; a < 4; ++a) {
            int r = env.reward(t, a);
            CHECK((r == 0 || r == 1));
            CHECK(replay.reward(t, a) == r);
            want += env.nu(t, a);
            got += r;
            ++n;
        }
    // Mean reward tracks mean nu within 4 sigma of the binomial bound.
    CHECK(std::abs(got - want) < 4.0 * std::sqrt(0.25 * double(n)));

    // A huge kernel width flattens every arm toward probability one.
    cfg.sigma = 1e9;
    KmeansEnv flat(pts, 400, 6, cfg);
    for (std::size_t t = 0; t < 50; ++t)
        for (int a = 0; a < 4; ++a) CHECK(flat.nu(t, a) > 0.999);
}

TEST_CASE("feature splits cover the vector exactly") {
    CHECK(even_split(7, 3) == std::vector<int>{3, 2, 2});
    CHECK(even_split(4, 2) == std::vector<int>{2, 2});
    CHECK(even_split(2, 2) == std::vector<int>{1, 1});

    std::vector<double> x{0.5, -1.0, 2.0, 3.5, 4.0};
    auto parts = split_features(x, {2, 3});
    CHECK(parts.size() == 2);
    CHECK(parts[0] == std::vector<double>{0.5, -1.0});
    CHECK(parts[1] == std::vector<double>{2.0, 3.5, 4.0});
    CHECK_THROWS_AS(split_features(x, {2, 2}), EnvError);
}
