#include <doctest.h>

#include <cmath>

#include "mpcbandit/rng.hpp"

using namespace mpcbandit;

TEST_CASE("seeded streams are deterministic and seed-sensitive") {
    Prng a(42), b(42), c(43);
    bool diverged = false;
    for (int i = 0; i < 100; ++i) {
        u64 wa = a.word();
        CHECK(wa == b.word());
        if (wa != c.word()) diverged = true;
    }
    CHECK(diverged);
}

TEST_CASE("mix_seed separates domains") {
    CHECK(mix_seed(1, 2) != mix_seed(1, 3));
    CHECK(mix_seed(1, 2) != mix_seed(2, 2));
    CHECK(mix64(0) != 0);
}

TEST_CASE("bounded draws stay in range without obvious bias") {
    Prng rng(9);
    int counts[7] = {0};
    for (int i = 0; i < 70000; ++i) {
        u64 v = rng.below(7);
        REQUIRE(v < 7);
        ++counts[v];
    }
    for (int k = 0; k < 7; ++k) CHECK(std::abs(counts[k] - 10000) < 500);
}

TEST_CASE("unit reals and normals have sane moments") {
    Prng rng(11);
    double sum = 0, sq = 0;
    for (int i = 0; i < 50000; ++i) {
        double u = rng.real01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
        sq += u * u;
    }
    CHECK(sum / 50000 == doctest::Approx(0.5).epsilon(0.02));
    CHECK(sq / 50000 == doctest::Approx(1.0 / 3).epsilon(0.03));

    double nsum = 0, nsq = 0;
    for (int i = 0; i < 50000; ++i) {
        double z = rng.normal();
        nsum += z;
        nsq += z * z;
    }
    CHECK(nsum / 50000 == doctest::Approx(0.0).epsilon(1).scale(0.05));
    CHECK(nsq / 50000 == doctest::Approx(1.0).epsilon(0.05));
}
