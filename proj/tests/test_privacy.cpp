#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "mpcbandit/privacy.hpp"

using namespace mpcbandit;

TEST_CASE("privacy loss formula and edge cases") {
    CHECK(privacy_loss(1.0, 10) == doctest::Approx(2.302585).epsilon(1e-5));
    CHECK(privacy_loss(0.1, 10) == doctest::Approx(4.605170).epsilon(1e-5));
    CHECK(std::isinf(privacy_loss(0.0, 10)));
    CHECK_THROWS_AS(privacy_loss(0.5, 1), ConfigError);
    CHECK_THROWS_AS(privacy_loss(-0.1, 4), ConfigError);
    CHECK_THROWS_AS(privacy_loss(1.5, 4), ConfigError);
}

TEST_CASE("privacy loss is monotone in both arguments") {
    const double eps[] = {0.01, 0.05, 0.1, 0.5, 1.0};
    for (int i = 0; i + 1 < 5; ++i) CHECK(privacy_loss(eps[i], 8) > privacy_loss(eps[i + 1], 8));
    const int arms[] = {2, 4, 10, 100};
    for (int i = 0; i + 1 < 4; ++i)
        CHECK(privacy_loss(0.2, arms[i]) < privacy_loss(0.2, arms[i + 1]));
}

TEST_CASE("simulated action channel stays under the privacy bound") {
    const std::size_t N = 100000;

    // Full exploration: a uniform channel, ratios vanish.
    auto uni = verify_dp_ratio(1.0, 6, N, 3);
    CHECK(uni.max_log_ratio < 0.1);
    CHECK(uni.greedy_freq == doctest::Approx(1.0 / 6).epsilon(0.05));

    // Textbook point: greedy frequency 1 - eps + eps/arms.
    auto mid = verify_dp_ratio(0.5, 4, N, 4);
    CHECK(mid.greedy_freq == doctest::Approx(0.625).epsilon(0.02));

    for (double e : {0.1, 0.5})
        for (int a : {2, 10}) {
            auto est = verify_dp_ratio(e, a, N, 5);
            CHECK(est.max_log_ratio <= privacy_loss(e, a) + 0.1);
            // Arms greedy in neither neighboring input keep equal mass.
            if (a > 2) CHECK(est.cross_log_ratio < 0.1);
        }

    CHECK_THROWS_AS(verify_dp_ratio(0.5, 1, N, 1), ConfigError);
}

TEST_CASE("snapshot scoring picks the arm pointed at by its bias") {
    PolicySnapshot snap;
    snap.step = 1;
    const int A = 3, D = 4;
    for (int a = 0; a < A; ++a) {
        std::vector<double> w(D * D, 0.0);
        for (int i = 0; i < D; ++i) w[i * D + i] = 1.0;
        snap.winv.push_back(w);
        std::vector<double> b(D, 0.0);
        b[a] = 1.0;
        snap.bias.push_back(b);
    }
    CHECK(snapshot_action(snap, {1.0, 0.0, 0.0, 0.0}) == 0);
    CHECK(snapshot_action(snap, {0.1, 0.9, 0.0, 0.0}) == 1);
    CHECK(snapshot_action(snap, {0.0, 0.1, 0.8, 0.0}) == 2);
    auto s = snapshot_scores(snap, {0.5, 0.25, 0.0, 0.0});
    CHECK(s[0] == doctest::Approx(0.5));
    CHECK(s[1] == doctest::Approx(0.25));
    CHECK(s[2] == doctest::Approx(0.0));
    CHECK_THROWS_AS(snapshot_scores(snap, {1.0}), ShapeError);
}

TEST_CASE("attack on indistinguishable populations has no advantage") {
    KmeansConfig kc;
    kc.k = 3;
    kc.sigma = 0.5;
    KmeansEnv env(gaussian_blobs(3, 5, 600, 1.5, 0.2, 7), 600, 5, kc);

    // Interleaved member/held-out sets from the same stream: nothing to find.
    std::vector<std::size_t> members, heldout;
    for (std::size_t i = 0; i < 600; ++i) (i % 2 ? heldout : members).push_back(i);

    PolicySnapshot snap;
    for (int a = 0; a < 3; ++a) {
        std::vector<double> w(25, 0.0);
        for (int i = 0; i < 5; ++i) w[i * 5 + i] = 1.0;
        snap.winv.push_back(w);
        snap.bias.push_back({0.2, 0.1, -0.1, 0.3, 0.0});
    }
    auto adv = membership_attack(env, {snap}, members, heldout, 400, 11);
    REQUIRE(adv.size() == 1);
    CHECK(adv[0] >= -1.0);
    CHECK(adv[0] <= 1.0);
    CHECK(std::abs(adv[0]) < 0.15);

    CHECK_THROWS_AS(membership_attack(env, {snap}, {}, heldout, 10, 1), ConfigError);
    CHECK_THROWS_AS(membership_attack(env, {snap}, members, heldout, 0, 1), ConfigError);
}

TEST_CASE("attack experiment aggregates per-checkpoint advantages over runs") {
    KmeansConfig kc;
    kc.k = 3;
    kc.sigma = 0.5;
    KmeansEnv env(gaussian_blobs(3, 4, 200, 1.5, 0.2, 9), 200, 4, kc);

    AttackExperiment cfg;
    cfg.horizon = 40;
    cfg.checkpoint_every = 20;
    cfg.runs = 4;
    cfg.probes = 100;
    cfg.seed = 2;
    AttackResult res = membership_experiment(env, cfg);

    CHECK(res.steps == std::vector<std::size_t>{20, 40});
    REQUIRE(res.advantage.size() == 4);
    for (const auto& row : res.advantage) {
        REQUIRE(row.size() == 2);
        for (double a : row) {
            CHECK(a >= -1.0);
            CHECK(a <= 1.0);
        }
    }
    CHECK(res.mean.size() == 2);
    CHECK(res.ci95.size() == 2);
    CHECK(res.ci95[0] >= 0.0);

    // Deterministic in the seed.
    AttackResult again = membership_experiment(env, cfg);
    CHECK(again.advantage == res.advantage);

    cfg.horizon = 150; // 2 * 150 > 200 points
    CHECK_THROWS_AS(membership_experiment(env, cfg), EnvError);

    auto csv = std::filesystem::temp_directory_path() / "mpcb_attack.csv";
    write_attack_csv(csv.string(), res, cfg.epsilon);
    std::ifstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header == "step,epsilon,advantage,ci95");
    std::string row;
    std::getline(in, row);
    CHECK(row.substr(0, 3) == "20,");
}
