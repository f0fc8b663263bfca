// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "deltanet/optim.hpp"

using namespace deltanet;

TEST_CASE("adam leaves parameters alone on zero gradient and zero decay") {
    AdamConfig<double> cfg;
    Vector p{0.5, -1.5};
    const Vector orig = p;
    Vector g{0.0, 0.0};
    std::vector<double> m(2, 0), v(2, 0);
    adam_step<double>(p.span(), g.span(), m, v, 1, cfg);
    CHECK(p == orig);
}

TEST_CASE("first adam step moves by roughly minus lr times sign") {
    AdamConfig<double> cfg;
    cfg.lr = 1e-3;
    Vector p{1.0, 1.0, 1.0};
    Vector g{0.5, -2.0, 1e-3};
    std::vector<double> m(3, 0), v(3, 0);
    adam_step<double>(p.span(), g.span(), m, v, 1, cfg);
    for (std::size_t i = 0; i < 3; ++i) {
        const double sign = g[i] > 0 ? 1.0 : -1.0;
        // update = -lr * g / (|g| + eps), within the eps slack
        CHECK(p[i] == doctest::Approx(1.0 - cfg.lr * sign).epsilon(1e-4));
    }
}

TEST_CASE("adam converges on a quadratic bowl with a known minimum") {
    AdamConfig<double> cfg;
    cfg.lr = 0.02;
    Vector p{0.5, -0.5};
    const Vector target{0.3, -0.7};
    std::vector<double> m(2, 0), v(2, 0);
    for (int s = 1; s <= 100; ++s) {
        Vector g{p[0] - target[0], p[1] - target[1]};
        adam_step<double>(p.span(), g.span(), m, v, s, cfg);
    }
    CHECK(linf_dist(p, target) <= 1e-3);
}

TEST_CASE("adam weight decay is decoupled from the moments") {
    AdamConfig<double> cfg;
    cfg.lr = 0.1;
    cfg.weight_decay = 0.5;
    Vector p{2.0};
    Vector g{0.0};
    std::vector<double> m(1, 0), v(1, 0);
    adam_step<double>(p.span(), g.span(), m, v, 1, cfg);
    // zero gradient: only the decay term acts, p' = p (1 - lr wd)
    CHECK(p[0] == doctest::Approx(2.0 * (1.0 - 0.1 * 0.5)));
    CHECK(m[0] == 0.0);
    CHECK(v[0] == 0.0);
}

TEST_CASE("sgd step formula") {
    Vector p{1.0, -2.0};
    Vector g{0.5, 0.25};

    Vector p0 = p;
    sgd_step<double>(p0.span(), g.span(), 0.0, 0.0);
    CHECK(p0 == p);  // lr = 0 is a no-op

    Vector p1 = p;
    sgd_step<double>(p1.span(), g.span(), 0.1, 0.0);
    CHECK(p1[0] == doctest::Approx(1.0 - 0.1 * 0.5));
    CHECK(p1[1] == doctest::Approx(-2.0 - 0.1 * 0.25));

    // decay-only step shrinks the norm
    Vector p2 = p;
    Vector zero{0.0, 0.0};
    sgd_step<double>(p2.span(), zero.span(), 0.1, 0.3);
    CHECK(std::abs(p2[0]) < std::abs(p[0]));
    CHECK(std::abs(p2[1]) < std::abs(p[1]));
    CHECK(p2[0] == doctest::Approx(1.0 * (1.0 - 0.1 * 0.3)));
}

TEST_CASE("cosine schedule endpoints and midpoint") {
    CHECK(cosine_lr_scale(0, 100) == doctest::Approx(1.0));
    CHECK(cosine_lr_scale(99, 100) == doctest::Approx(0.0));
    CHECK(cosine_lr_scale(0, 1) == 1.0);
    const double mid = cosine_lr_scale(50, 101);
    CHECK(mid == doctest::Approx(0.5));
}

TEST_CASE("AdamOptimizer over tensors matches the flat step") {
    AdamConfig<double> cfg;
    cfg.lr = 0.05;
    AdamOptimizer<double> opt(cfg);

    Vector a{1.0, 2.0}, b{-1.0};
    Vector ga{0.1, -0.2}, gb{0.3};
    Vector a2 = a, b2 = b;
    std::vector<double> m(3, 0), v(3, 0);

    opt.step({a.span(), b.span()}, {ga.span(), gb.span()});

    Vector flat{a2[0], a2[1], b2[0]};
    Vector gflat{ga[0], ga[1], gb[0]};
    adam_step<double>(flat.span(), gflat.span(), m, v, 1, cfg);
    CHECK(a[0] == flat[0]);
    CHECK(a[1] == flat[1]);
    CHECK(b[0] == flat[2]);
    CHECK(opt.step_count() == 1);
}
