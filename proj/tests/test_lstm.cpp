#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "otom/dataset.hpp"
#include "otom/lstm.hpp"
#include "otom/prng.hpp"
#include "otom/schedule.hpp"
#include "test_util.hpp"

using namespace otom;

namespace {

double ref_sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<std::array<double, 5>> random_sequence(int length, std::uint64_t seed) {
    Xoshiro256 rng(seed);
    std::vector<std::array<double, 5>> xs(length);
    for (auto& x : xs) {
        for (double& v : x) v = rng.uniform(0.0, 1.0);
    }
    return xs;
}

// Plain loop-nest re-implementation of the documented forward semantics for
// one sequence. Layer 0 consumes the 5-channel inputs; higher layers consume
// the concatenated [forward, backward] outputs of the layer below; the head
// maps [last forward state, first backward state] of the top layer through a
// ReLU-clamped affine map.
std::array<double, 4> reference_forward(const BiLstmModel& m,
                                        const std::vector<std::array<double, 5>>& xs) {
    const int H = m.hidden();
    const int T = static_cast<int>(xs.size());
    const std::vector<double>& P = m.params();

    std::vector<std::vector<double>> lower(T);  // per t, input channels of the layer
    for (int t = 0; t < T; ++t) lower[t].assign(xs[t].begin(), xs[t].end());

    std::vector<std::vector<double>> top_fwd, top_bwd;
    for (int layer = 0; layer < m.layers(); ++layer) {
        const int in = m.layer_input_dim(layer);
        std::vector<std::vector<double>> out_f(T), out_b(T);
        for (int dir = 0; dir < 2; ++dir) {
            const double* wx = P.data() + m.wx(layer, dir).offset;
            const double* wh = P.data() + m.wh(layer, dir).offset;
            const double* b = P.data() + m.bias(layer, dir).offset;
            std::vector<double> h(H, 0.0), c(H, 0.0);
            for (int step = 0; step < T; ++step) {
                const int t = dir == 0 ? step : T - 1 - step;
                std::vector<double> hn(H), cn(H);
                for (int j = 0; j < H; ++j) {
                    double a[4];
                    for (int gate = 0; gate < 4; ++gate) {
                        const int row = gate * H + j;
                        double acc = b[row];
                        for (int p = 0; p < in; ++p) acc += wx[row * in + p] * lower[t][p];
                        for (int p = 0; p < H; ++p) acc += wh[row * H + p] * h[p];
                        a[gate] = acc;
                    }
                    cn[j] = ref_sigmoid(a[1]) * c[j] + ref_sigmoid(a[0]) * std::tanh(a[2]);
                    hn[j] = ref_sigmoid(a[3]) * std::tanh(cn[j]);
                }
                h = hn;
                c = cn;
                (dir == 0 ? out_f : out_b)[t] = h;
            }
        }
        for (int t = 0; t < T; ++t) {
            lower[t] = out_f[t];
            lower[t].insert(lower[t].end(), out_b[t].begin(), out_b[t].end());
        }
        if (layer == m.layers() - 1) {
            top_fwd = out_f;
            top_bwd = out_b;
        }
    }

    std::vector<double> feats = top_fwd[T - 1];
    feats.insert(feats.end(), top_bwd[0].begin(), top_bwd[0].end());
    const double* hw = P.data() + m.head_w().offset;
    const double* hb = P.data() + m.head_b().offset;
    std::array<double, 4> pred{};
    for (int r = 0; r < 4; ++r) {
        double acc = hb[r];
        for (int q = 0; q < 2 * H; ++q) acc += hw[r * 2 * H + q] * feats[q];
        pred[r] = std::max(0.0, acc);
    }
    return pred;
}

}  // namespace

TEST_SUITE_BEGIN("lstm");

TEST_CASE("l1 loss") {
    const std::array<double, 4> p{0.1, 0.2, 0.3, 0.4};
    std::array<double, 4> q = p;
    CHECK(l1_loss(p, q) == 0.0);
    q[0] += 0.1;
    CHECK(l1_loss(p, q) == doctest::Approx(0.025).epsilon(1e-14));
}

TEST_CASE("cell with zero weights and inputs is silent") {
    const int H = 4;
    const std::vector<double> x(3, 0.0), h(H, 0.0), c(H, 0.0);
    const std::vector<double> wx(4 * H * 3, 0.0), wh(4 * H * H, 0.0), b(4 * H, 0.0);
    std::vector<double> ho, co;
    lstm_cell_forward(x, h, c, wx.data(), wh.data(), b.data(), H, &ho, &co);
    for (const double v : ho) CHECK(v == 0.0);
    for (const double v : co) CHECK(v == 0.0);
}

TEST_CASE("cell matches the scalar gate equations") {
    const int H = 3, in = 2;
    Xoshiro256 rng(7);
    std::vector<double> x(in), h(H), c(H), wx(4 * H * in), wh(4 * H * H), b(4 * H);
    for (auto* v : {&x, &h, &c, &wx, &wh, &b}) {
        for (double& e : *v) e = rng.uniform(-1.0, 1.0);
    }
    std::vector<double> ho, co;
    lstm_cell_forward(x, h, c, wx.data(), wh.data(), b.data(), H, &ho, &co);
    for (int j = 0; j < H; ++j) {
        double a[4];
        for (int gate = 0; gate < 4; ++gate) {
            const int row = gate * H + j;
            double acc = b[row];
            for (int p = 0; p < in; ++p) acc += wx[row * in + p] * x[p];
            for (int p = 0; p < H; ++p) acc += wh[row * H + p] * h[p];
            a[gate] = acc;
        }
        const double cn = ref_sigmoid(a[1]) * c[j] + ref_sigmoid(a[0]) * std::tanh(a[2]);
        CHECK(co[j] == doctest::Approx(cn).epsilon(1e-12));
        CHECK(ho[j] == doctest::Approx(ref_sigmoid(a[3]) * std::tanh(cn)).epsilon(1e-12));
    }

    std::vector<double> short_h(H - 1, 0.0);
    CHECK_THROWS_AS(
        lstm_cell_forward(x, short_h, c, wx.data(), wh.data(), b.data(), H, &ho, &co),
        std::domain_error);
    CHECK_THROWS_AS(lstm_cell_forward({}, h, c, wx.data(), wh.data(), b.data(), H, &ho, &co),
                    std::domain_error);
}

TEST_CASE("initialization: uniform weights, forget bias exactly one") {
    const NormalizationSpec norm;
    const BiLstmModel m(2, 64, norm, 42);
    const int H = 64;
    // Parameter count: per layer and direction wx(4H x in) + wh(4H x H) +
    // bias(4H); head 4 x 2H + 4.
    std::size_t expect = 0;
    for (int layer = 0; layer < 2; ++layer) {
        const std::size_t in = layer == 0 ? 5 : 2 * H;
        expect += 2 * (4 * H * in + 4 * H * H + 4 * H);
    }
    expect += 4 * 2 * H + 4;
    CHECK(m.params().size() == expect);

    const double k = 1.0 / 8.0;  // 1/sqrt(64)
    std::size_t ones = 0;
    for (const double v : m.params()) {
        const bool in_band = v >= -k && v <= k;
        const bool forget_one = v == 1.0;
        CHECK((in_band || forget_one));
        if (forget_one) ++ones;
    }
    CHECK(ones == 2 * 2 * std::size_t(H));  // layers x directions x H

    for (int layer = 0; layer < 2; ++layer) {
        for (int dir = 0; dir < 2; ++dir) {
            const TensorRef b = m.bias(layer, dir);
            for (int j = 0; j < H; ++j) {
                CHECK(m.params()[b.offset + H + j] == 1.0);  // forget rows
            }
        }
    }

    const BiLstmModel same(2, 64, norm, 42);
    CHECK(same.params() == m.params());
    const BiLstmModel other(2, 64, norm, 43);
    CHECK(other.params() != m.params());
}

TEST_CASE("forward matches a plain scalar re-implementation") {
    const NormalizationSpec norm;
    const BiLstmModel m(2, 4, norm, 91);
    const auto xs = random_sequence(7, 17);
    const auto got = m.forward(xs);
    const auto want = reference_forward(m, xs);
    for (int p = 0; p < 4; ++p) CHECK(got[p] == doctest::Approx(want[p]).epsilon(1e-10));

    const auto xs1 = random_sequence(1, 18);  // single-step sequence
    const auto got1 = m.forward(xs1);
    const auto want1 = reference_forward(m, xs1);
    for (int p = 0; p < 4; ++p) CHECK(got1[p] == doctest::Approx(want1[p]).epsilon(1e-10));

    CHECK_THROWS_AS(m.forward({}), std::domain_error);
}

TEST_CASE("batched forward equals the single-sequence forward bit for bit") {
    const NormalizationSpec norm;
    const BiLstmModel m(1, 8, norm, 5);
    std::vector<std::vector<std::array<double, 5>>> seqs;
    Xoshiro256 rng(23);
    for (int i = 0; i < 9; ++i) {
        seqs.push_back(random_sequence(1 + static_cast<int>(rng.uniform_int(0, 8)), 100 + i));
    }
    const auto batched = m.forward_batch(seqs);
    REQUIRE(batched.size() == seqs.size());
    for (std::size_t i = 0; i < seqs.size(); ++i) {
        const auto single = m.forward(seqs[i]);
        for (int p = 0; p < 4; ++p) CHECK(batched[i][p] == single[p]);
    }
}

TEST_CASE("batched forward is chunk-boundary invariant") {
    const NormalizationSpec norm;
    const BiLstmModel m(1, 4, norm, 6);
    std::vector<std::vector<std::array<double, 5>>> seqs;
    for (int i = 0; i < 300; ++i) seqs.push_back(random_sequence(3, 500 + i));
    const auto batched = m.forward_batch(seqs);  // crosses the internal chunk size
    for (const std::size_t i : {0UL, 255UL, 256UL, 299UL}) {
        const auto single = m.forward(seqs[i]);
        for (int p = 0; p < 4; ++p) CHECK(batched[i][p] == single[p]);
    }
}

TEST_CASE("batch loss is the mean of per-item L1 losses") {
    const NormalizationSpec norm;
    const BiLstmModel m(1, 6, norm, 8);
    std::vector<TrainItem> items(5);
    Xoshiro256 rng(31);
    for (std::size_t i = 0; i < items.size(); ++i) {
        items[i].xs = random_sequence(2 + static_cast<int>(i), 700 + i);
        for (double& v : items[i].y) v = rng.uniform(0.0, 1.0);
    }
    std::vector<const TrainItem*> batch;
    for (const auto& it : items) batch.push_back(&it);

    const double loss = m.batch_loss_grad(batch, nullptr);
    double expect = 0.0;
    for (const auto& it : items) expect += l1_loss(m.forward(it.xs), it.y);
    expect /= static_cast<double>(items.size());
    CHECK(loss == doctest::Approx(expect).epsilon(1e-13));

    CHECK_THROWS_AS(m.batch_loss_grad({}, nullptr), std::domain_error);
    std::vector<double> wrong_size(3, 0.0);
    CHECK_THROWS_AS(m.batch_loss_grad(batch, &wrong_size), std::domain_error);
}

TEST_CASE("gradients match central finite differences") {
    const NormalizationSpec norm;
    BiLstmModel m(1, 8, norm, 77);
    std::vector<TrainItem> items(3);
    items[0].xs = random_sequence(5, 900);
    items[1].xs = random_sequence(3, 901);
    items[2].xs = random_sequence(5, 902);
    Xoshiro256 rng(44);
    for (auto& it : items) {
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
}

TEST_CASE("exact predictions produce zero loss and zero gradients") {
    const NormalizationSpec norm;
    const BiLstmModel m(1, 5, norm, 13);
    TrainItem item;
    item.xs = random_sequence(4, 1000);
    item.y = m.forward(item.xs);
    std::vector<double> grads(m.params().size(), 0.0);
    const double loss = m.batch_loss_grad({&item}, &grads);
    CHECK(loss == 0.0);
    for (const double g : grads) CHECK(g == 0.0);
}

TEST_CASE("gradient accumulation and determinism") {
    const NormalizationSpec norm;
    const BiLstmModel m(1, 4, norm, 14);
    TrainItem item;
    item.xs = random_sequence(6, 1100);
    item.y = {0.2, 0.4, 0.6, 0.8};

    std::vector<double> g1(m.params().size(), 0.0);
    std::vector<double> g2(m.params().size(), 0.0);
    const double l1 = m.batch_loss_grad({&item}, &g1);
    const double l2 = m.batch_loss_grad({&item}, &g2);
    CHECK(l1 == l2);
    CHECK(g1 == g2);

    // The buffer accumulates: a second pass doubles every entry exactly.
    m.batch_loss_grad({&item}, &g1);
    for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g1[i] == 2.0 * g2[i]);
}

TEST_CASE("physical-unit prediction wraps the normalized forward pass") {
    const NormalizationSpec norm;
    const BiLstmModel m(1, 8, norm, 15);
    const Schedule sched = sample_schedule(2200, ScheduleRanges{});
    const TissueParams tissue = sample_tissue(2201, TissueRanges{});
    const Fingerprint fp = simulate_fingerprint(tissue, PoolConstants{}, sched);

    const TissueParams got = m.predict(fp, sched);
    const auto seq = make_input_sequence(fp, sched, norm);
    REQUIRE(seq.size() == sched.size());
    for (std::size_t t = 0; t < seq.size(); ++t) {
        const auto expect = norm.input_vector(fp[t], sched[t]);
        for (int ch = 0; ch < 5; ++ch) CHECK(seq[t][ch] == expect[ch]);
    }
    const TissueParams want = norm.denormalize_target(m.forward(seq));
    CHECK(got.kmw == want.kmw);
    CHECK(got.m0m == want.m0m);
    CHECK(got.t2m == want.t2m);
    CHECK(got.t1w == want.t1w);

    Fingerprint bad = fp;
    bad.values.pop_back();
    CHECK_THROWS_AS(m.predict(bad, sched), std::domain_error);

    const std::vector<Fingerprint> fps{fp, fp};
    const auto many = m.predict(fps, sched);
    REQUIRE(many.size() == 2);
    CHECK(many[0].kmw == got.kmw);
    CHECK(many[1].t1w == got.t1w);
}

TEST_CASE("save/load round trip") {
    const testutil::TempDir tmp("lstm");
    const NormalizationSpec norm;
    const BiLstmModel m(2, 6, norm, 19);
    const std::string path = tmp.file("model.otnn");
    m.save(path, "{\"note\":\"unit\"}");

    const BiLstmModel back = BiLstmModel::load(path);
    CHECK(back.layers() == 2);
    CHECK(back.hidden() == 6);
    CHECK(back.params() == m.params());
    CHECK(back.normalization().tissue.kmw.lo == norm.tissue.kmw.lo);
    CHECK(back.normalization().scan.td.hi == norm.scan.td.hi);

    CHECK(testutil::read_file(path + ".json") == "{\"note\":\"unit\"}");

    const auto xs = random_sequence(5, 1300);
    const auto a = m.forward(xs);
    const auto b = back.forward(xs);
    for (int p = 0; p < 4; ++p) CHECK(a[p] == b[p]);

    CHECK_THROWS_AS(BiLstmModel::load(tmp.file("missing.otnn")), std::runtime_error);
    testutil::write_file(tmp.file("junk.otnn"), "OTOMGARBAGE.....................");
    CHECK_THROWS_AS(BiLstmModel::load(tmp.file("junk.otnn")), std::runtime_error);
}

TEST_SUITE_END();
