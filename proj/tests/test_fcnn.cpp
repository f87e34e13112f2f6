#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "otom/dataset.hpp"
#include "otom/fcnn.hpp"
#include "otom/prng.hpp"
#include "otom/schedule.hpp"
#include "test_util.hpp"

using namespace otom;

namespace {

std::vector<double> random_signal(int n, std::uint64_t seed) {
    Xoshiro256 rng(seed);
    std::vector<double> s(n);
    for (double& v : s) v = rng.uniform(0.0, 1.0);
    return s;
}

}  // namespace

TEST_SUITE_BEGIN("fcnn");

TEST_CASE("construction and initialization") {
    const NormalizationSpec norm;
    const Schedule sched = sample_schedule_with_length(400, 12, ScheduleRanges{});
    const FcnnModel m(sched, 3, 16, norm, 9);
    CHECK(m.input_length() == 12);
    CHECK(m.hidden_layers() == 3);
    CHECK(m.hidden_width() == 16);

    // Layers 12->16->16->16->4: weights uniform in +-1/sqrt(fanIn), biases 0.
    const std::size_t expect = (12 * 16 + 16) + 2 * (16 * 16 + 16) + (16 * 4 + 4);
    CHECK(m.params().size() == expect);
    std::size_t zeros = 0;
    const double bound = 1.0 / std::sqrt(12.0);  // loosest fan-in of any layer
    for (const double v : m.params()) {
        CHECK(std::fabs(v) <= bound);
        if (v == 0.0) ++zeros;
    }
    CHECK(zeros == 16 + 16 + 16 + 4);  // exactly the biases

    const FcnnModel same(sched, 3, 16, norm, 9);
    CHECK(same.params() == m.params());

    CHECK_THROWS_AS(FcnnModel(Schedule{}, 3, 16, norm, 9), std::domain_error);
    CHECK_THROWS_AS(FcnnModel(sched, 0, 16, norm, 9), std::domain_error);
    CHECK_THROWS_AS(FcnnModel(sched, 3, 0, norm, 9), std::domain_error);
}

TEST_CASE("forward pass: ReLU outputs, deterministic, shape-checked") {
    const NormalizationSpec norm;
    const Schedule sched = sample_schedule_with_length(401, 10, ScheduleRanges{});
    const FcnnModel m(sched, 2, 8, norm, 10);

    const auto s = random_signal(10, 3000);
    const auto a = m.forward(s);
    const auto b = m.forward(s);
    for (int p = 0; p < 4; ++p) {
        CHECK(a[p] >= 0.0);
        CHECK(a[p] == b[p]);
    }
    CHECK_THROWS_AS(m.forward(random_signal(9, 3001)), std::domain_error);
}

TEST_CASE("gradients match central finite differences") {
    const NormalizationSpec norm;
    const Schedule sched = sample_schedule_with_length(402, 5, ScheduleRanges{});
    FcnnModel m(sched, 2, 8, norm, 11);

    std::vector<TrainItem> items(4);
    Xoshiro256 rng(55);
    for (auto& it : items) {
        it.xs.resize(5);
        for (auto& x : it.xs) {
            for (double& v : x) v = rng.uniform(0.0, 1.0);
        }
        for (double& v : it.y) v = rng.uniform(0.0, 1.0);
    }
    std::vector<const TrainItem*> batch;
    for (const auto& it : items) batch.push_back(&it);

    std::vector<double> grads(m.params().size(), 0.0);
    m.batch_loss_grad(batch, &grads);

    const double eps = 1e-5;
    double worst = 0.0;
    for (std::size_t i = 0; i < m.params().size(); ++i) {
        const double keep = m.params()[i];
        m.params()[i] = keep + eps;
        const double up = m.batch_loss_grad(batch, nullptr);
        m.params()[i] = keep - eps;
        const double dn = m.batch_loss_grad(batch, nullptr);
        m.params()[i] = keep;
        const double fd = (up - dn) / (2.0 * eps);
        const double rel =
            std::fabs(fd - grads[i]) / std::max({std::fabs(fd), std::fabs(grads[i]), 1e-5});
        worst = std::max(worst, rel);
    }
    CHECK(worst < 1e-4);

    // Only the signal channel of each row is consumed; scan channels are free.
    std::vector<TrainItem> twisted = items;
    for (auto& it : twisted) {
        for (auto& x : it.xs) {
            x[1] += 0.25;
            x[3] -= 0.125;
        }
    }
    std::vector<const TrainItem*> twisted_batch;
    for (const auto& it : twisted) twisted_batch.push_back(&it);
    CHECK(m.batch_loss_grad(twisted_batch, nullptr) == m.batch_loss_grad(batch, nullptr));

    TrainItem bad = items[0];
    bad.xs.resize(3);
    CHECK_THROWS_AS(m.batch_loss_grad({&bad}, nullptr), std::domain_error);
}

TEST_CASE("exact predictions produce zero loss and zero gradients") {
    const NormalizationSpec norm;
    const Schedule sched = sample_schedule_with_length(403, 6, ScheduleRanges{});
    const FcnnModel m(sched, 2, 8, norm, 12);
    TrainItem item;
    item.xs.resize(6);
    Xoshiro256 rng(66);
    for (auto& x : item.xs) {
        for (double& v : x) v = rng.uniform(0.0, 1.0);
    }
    std::vector<double> signal;
    for (const auto& x : item.xs) signal.push_back(x[0]);
    item.y = m.forward(signal);

    std::vector<double> grads(m.params().size(), 0.0);
    CHECK(m.batch_loss_grad({&item}, &grads) == 0.0);
    for (const double g : grads) CHECK(g == 0.0);
}

TEST_CASE("prediction is bound to one schedule") {
    const NormalizationSpec norm;
    const Schedule sched = sample_schedule_with_length(404, 8, ScheduleRanges{});
    const FcnnModel m(sched, 2, 8, norm, 13);
    CHECK(m.bound_schedule().size() == 8);

    const TissueParams tissue = sample_tissue(2300, TissueRanges{});
    const Fingerprint fp = simulate_fingerprint(tissue, PoolConstants{}, sched);
    const TissueParams got = m.predict(fp, sched);

    std::vector<double> signal(fp.values.begin(), fp.values.end());
    const TissueParams want = norm.denormalize_target(m.forward(signal));
    CHECK(got.kmw == want.kmw);
    CHECK(got.m0m == want.m0m);
    CHECK(got.t2m == want.t2m);
    CHECK(got.t1w == want.t1w);

    // Same length, one value nudged: not the bound schedule.
    Schedule other = sched;
    other.points[3].b1 += 1e-9;
    CHECK_THROWS_AS(m.predict(fp, other), std::domain_error);

    const Schedule shorter = sample_schedule_with_length(405, 7, ScheduleRanges{});
    const Fingerprint fp7 = simulate_fingerprint(tissue, PoolConstants{}, shorter);
    CHECK_THROWS_AS(m.predict(fp7, shorter), std::domain_error);

    Fingerprint bad = fp;
    bad.values.pop_back();
    CHECK_THROWS_AS(m.predict(bad, sched), std::domain_error);
}

TEST_CASE("save/load round trip") {
    const testutil::TempDir tmp("fcnn");
    const NormalizationSpec norm;
    const Schedule sched = sample_schedule_with_length(406, 9, ScheduleRanges{});
    const FcnnModel m(sched, 2, 12, norm, 14);
    const std::string path = tmp.file("model.otnn");
    m.save(path, "{\"kind\":\"fcnn\"}");

    const FcnnModel back = FcnnModel::load(path);
    CHECK(back.input_length() == 9);
    CHECK(back.hidden_layers() == 2);
    CHECK(back.hidden_width() == 12);
    CHECK(back.params() == m.params());
    REQUIRE(back.bound_schedule().size() == sched.size());
    for (std::size_t i = 0; i < sched.size(); ++i) {
        CHECK(back.bound_schedule()[i].b1 == sched[i].b1);
        CHECK(back.bound_schedule()[i].omega == sched[i].omega);
        CHECK(back.bound_schedule()[i].ts == sched[i].ts);
        CHECK(back.bound_schedule()[i].td == sched[i].td);
    }
    CHECK(testutil::read_file(path + ".json") == "{\"kind\":\"fcnn\"}");

    const auto s = random_signal(9, 3100);
    const auto a = m.forward(s);
    const auto b = back.forward(s);
    for (int p = 0; p < 4; ++p) CHECK(a[p] == b[p]);

    CHECK_THROWS_AS(FcnnModel::load(tmp.file("nope.otnn")), std::runtime_error);
}

TEST_SUITE_END();
