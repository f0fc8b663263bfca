// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "deltanet/dataset.hpp"
#include "deltanet/delta_codec.hpp"

using namespace deltanet;

namespace {

bool samples_equal(const Sample& a, const Sample& b) {
    if (a.label != b.label || a.xs.size() != b.xs.size()) return false;
    for (std::size_t t = 0; t < a.xs.size(); ++t)
        if (!(a.xs[t] == b.xs[t])) return false;
    return true;
}

}  // namespace

TEST_CASE("generation is seed-deterministic") {
    SyntheticTaskSpec spec;
    auto a = generate_dataset(spec, 42);
    auto b = generate_dataset(spec, 42);
    REQUIRE(a.train.size() == b.train.size());
    for (std::size_t i = 0; i < a.train.size(); ++i) CHECK(samples_equal(a.train[i], b.train[i]));

    auto c = generate_dataset(spec, 43);
    bool all_same = true;
    for (std::size_t i = 0; i < a.train.size() && all_same; ++i)
        all_same = samples_equal(a.train[i], c.train[i]);
    CHECK_FALSE(all_same);
}

TEST_CASE("split sizes and label balance") {
    SyntheticTaskSpec spec;
    spec.num_classes = 3;
    spec.train_per_class = 11;
    spec.eval_per_class = 5;
    auto d = generate_dataset(spec, 1);
    CHECK(d.train.size() == 33);
    CHECK(d.eval.size() == 15);
    std::vector<std::size_t> counts(3, 0);
    for (const auto& s : d.train) {
        REQUIRE(s.label < 3);
        ++counts[s.label];
        CHECK(s.xs.size() == spec.seq_len);
        for (const auto& x : s.xs) CHECK(all_finite(x));
    }
    CHECK(counts == std::vector<std::size_t>{11, 11, 11});
}

TEST_CASE("high smoothness gives low delta occupancy at theta 0.1") {
    SyntheticTaskSpec spec;
    spec.smoothness = 0.99;
    spec.noise = 0.1;
    auto d = generate_dataset(spec, 7);
    double nnz = 0, total = 0;
    for (std::size_t i = 0; i < 20; ++i) {
        Vector retained(spec.input_dim);
        for (const auto& x : d.train[i].xs) {
            auto enc = delta_encode(x, retained, 0.1);
            nnz += static_cast<double>(enc.mask.popcount());
            total += static_cast<double>(spec.input_dim);
        }
    }
    CHECK(nnz / total < 0.5);
}

TEST_CASE("smoother streams are sparser") {
    auto occupancy_at = [](double rho) {
        SyntheticTaskSpec spec;
        spec.smoothness = rho;
        spec.kind = TaskKind::TemporalPattern;
        auto d = generate_dataset(spec, 11);
        double nnz = 0, total = 0;
        for (std::size_t i = 0; i < 10; ++i) {
            Vector retained(spec.input_dim);
            for (const auto& x : d.train[i].xs) {
                auto enc = delta_encode(x, retained, 0.1);
                nnz += static_cast<double>(enc.mask.popcount());
                total += static_cast<double>(spec.input_dim);
            }
        }
        return nnz / total;
    };
    CHECK(occupancy_at(0.99) <= occupancy_at(0.5));
}

TEST_CASE("spec validation") {
    SyntheticTaskSpec bad;
    bad.num_classes = 1;
    CHECK_THROWS_AS((void)generate_dataset(bad, 1), std::invalid_argument);
    bad = SyntheticTaskSpec{};
    bad.smoothness = 1.0;
    CHECK_THROWS_AS((void)generate_dataset(bad, 1), std::invalid_argument);
    bad = SyntheticTaskSpec{};
    bad.seq_len = 2;
    CHECK_THROWS_AS((void)generate_dataset(bad, 1), std::invalid_argument);
    CHECK_THROWS_AS((void)task_kind_from_name("nope"), std::invalid_argument);
}

TEST_CASE("task kind names round-trip") {
    CHECK(task_kind_from_name(task_kind_name(TaskKind::DelayedRecall)) == TaskKind::DelayedRecall);
    CHECK(task_kind_from_name(task_kind_name(TaskKind::TemporalPattern)) ==
          TaskKind::TemporalPattern);
}
