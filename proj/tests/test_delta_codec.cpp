// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "deltanet/delta_codec.hpp"

using namespace deltanet;

TEST_CASE("delta_encode worked example") {
    Vector current{0.6, 0.05, -0.3};
    Vector retained{0.4, 0.0, -0.35};
    auto enc = delta_encode(current, retained, 0.1);

    CHECK(enc.mask.test(0));
    CHECK_FALSE(enc.mask.test(1));
    CHECK_FALSE(enc.mask.test(2));
    REQUIRE(enc.delta.nzil == std::vector<std::uint32_t>{0});
    CHECK(enc.delta.nzvl[0] == doctest::Approx(0.2));
    CHECK(retained[0] == 0.6);
    CHECK(retained[1] == 0.0);
    CHECK(retained[2] == -0.35);
}

TEST_CASE("zero threshold degenerates to plain differencing") {
    Vector current{0.5, -0.25, 0.125};
    Vector prev{0.25, 0.5, -0.125};
    Vector retained = prev;
    auto enc = delta_encode(current, retained, 0.0);
    CHECK(enc.mask.popcount() == 3);
    CHECK(decode(enc.delta) == sub(current, prev));
    CHECK(retained == current);
}

TEST_CASE("exact tie is masked off") {
    Vector current{0.2};
    Vector retained{0.1};
    auto enc = delta_encode(current, retained, 0.1);  // |diff| == theta
    CHECK(enc.mask.popcount() == 0);
    CHECK(enc.delta.nnz() == 0);
    CHECK(retained[0] == 0.1);
}

TEST_CASE("delta_encode argument validation") {
    Vector a(3), b(2);
    CHECK_THROWS_AS((void)delta_encode(a, b, 0.1), std::invalid_argument);
    Vector c(3);
    CHECK_THROWS_AS((void)delta_encode(a, c, -1.0), std::invalid_argument);
}

TEST_CASE("decode scatters values") {
    DeltaVector d(4);
    d.nzil = {0, 3};
    d.nzvl = {0.2, -0.5};
    CHECK(decode(d) == Vector{0.2, 0.0, 0.0, -0.5});

    DeltaVector empty(3);
    CHECK(decode(empty) == Vector{0.0, 0.0, 0.0});
}

TEST_CASE("occupancy conventions") {
    Mask m(4);
    m.set(0);
    m.set(3);
    CHECK(occupancy(m) == doctest::Approx(0.5));

    Mask off(5);
    CHECK(occupancy(off) == 0.0);

    // sparsity 83.4% corresponds to occupancy 0.166
    CHECK(1.0 - 0.834 == doctest::Approx(0.166));
}

TEST_CASE("random roundtrip and reconstruction invariant") {
    Rng rng(99);
    Vector retained(12);
    for (int t = 0; t < 40; ++t) {
        Vector current(12);
        for (auto& v : current.data) v = rng.uniform(-1.0, 1.0);
        const Vector before = retained;
        auto enc = delta_encode(current, retained, 0.15);

        // retained' == retained + decode(delta), exactly
        CHECK(retained == add(before, decode(enc.delta)));

        // mask/NZIL agreement
        std::vector<std::uint32_t> idx;
        enc.mask.for_each_set([&](std::size_t i) { idx.push_back(static_cast<std::uint32_t>(i)); });
        CHECK(idx == enc.delta.nzil);

        // decode . encode reproduces the delta pattern
        Vector dense = decode(enc.delta);
        for (std::size_t i = 0; i < dense.size(); ++i) {
            if (enc.mask.test(i))
                CHECK(dense[i] == current[i] - before[i]);
            else
                CHECK(dense[i] == 0.0);
        }
    }
}

TEST_CASE("occupancy is non-increasing in theta") {
    Rng rng(7);
    std::vector<Vector> stream;
    Vector x(8);
    for (int t = 0; t < 30; ++t) {
        for (auto& v : x.data) v += 0.2 * rng.uniform(-1.0, 1.0);
        stream.push_back(x);
    }
    const double thetas[] = {0.0, 0.05, 0.1, 0.2, 0.5, 1e300};
    double prev_total = 1e18;
    for (double theta : thetas) {
        Vector retained(8);
        double total = 0;
        for (const Vector& cur : stream) {
            auto enc = delta_encode(cur, retained, theta);
            total += static_cast<double>(enc.mask.popcount());
        }
        CHECK(total <= prev_total);
        prev_total = total;
    }

    // huge theta: nothing ever activates
    Vector retained(8);
    std::size_t active = 0;
    for (const Vector& cur : stream) active += delta_encode(cur, retained, 1e300).mask.popcount();
    CHECK(active == 0);

    // theta = 0 with every coordinate changing: full occupancy
    retained = Vector(8);
    for (const Vector& cur : stream) {
        auto enc = delta_encode(cur, retained, 0.0);
        CHECK(enc.mask.popcount() == 8);
    }
}

TEST_CASE("packed mask bit operations") {
    Mask m(130);  // spans three words
    m.set(0);
    m.set(64);
    m.set(129);
    CHECK(m.popcount() == 3);
    std::vector<std::size_t> seen;
    m.for_each_set([&](std::size_t i) { seen.push_back(i); });
    CHECK(seen == std::vector<std::size_t>{0, 64, 129});
}
