#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "otom/bloch.hpp"
#include "otom/dataset.hpp"
#include "otom/prng.hpp"
#include "otom/schedule.hpp"
#include "test_util.hpp"

using namespace otom;

TEST_SUITE_BEGIN("dataset");

TEST_CASE("noise sigma from SNR") {
    NoiseSpec spec;
    CHECK(spec.snr_db == 46.0);
    CHECK(spec.sigma() == doctest::Approx(5.0119e-3).epsilon(1e-4));
    spec.snr_db = 0.0;
    CHECK(spec.sigma() == 1.0);
    spec.snr_db = std::numeric_limits<double>::infinity();
    CHECK(spec.sigma() == 0.0);
}

TEST_CASE("infinite SNR leaves the fingerprint untouched") {
    Fingerprint fp;
    for (int i = 0; i < 32; ++i) fp.values.push_back(0.1 + 0.02 * i);
    NoiseSpec spec;
    spec.snr_db = std::numeric_limits<double>::infinity();
    const Fingerprint out = add_noise(fp, spec, 9);
    REQUIRE(out.size() == fp.size());
    for (std::size_t i = 0; i < fp.size(); ++i) CHECK(out[i] == fp[i]);
}

TEST_CASE("added noise is deterministic per seed and matches sigma statistically") {
    Fingerprint fp;
    for (int i = 0; i < 100; ++i) fp.values.push_back(0.5);
    const NoiseSpec spec;  // 46 dB

    const Fingerprint a = add_noise(fp, spec, 11);
    const Fingerprint b = add_noise(fp, spec, 11);
    const Fingerprint c = add_noise(fp, spec, 12);
    bool same_ab = true, same_ac = true;
    for (std::size_t i = 0; i < fp.size(); ++i) {
        same_ab = same_ab && a[i] == b[i];
        same_ac = same_ac && a[i] == c[i];
    }
    CHECK(same_ab);
    CHECK_FALSE(same_ac);

    // Pooled standard deviation over 1e6 added values within 0.5% of sigma.
    double sum = 0.0, sum2 = 0.0;
    std::size_t n = 0;
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
        const Fingerprint noisy = add_noise(fp, spec, seed);
        for (std::size_t i = 0; i < fp.size(); ++i) {
            const double r = noisy[i] - fp[i];
            sum += r;
            sum2 += r * r;
            ++n;
        }
    }
    const double mean = sum / n;
    const double sd = std::sqrt(sum2 / n - mean * mean);
    CHECK(sd == doctest::Approx(spec.sigma()).epsilon(0.005));
}

TEST_CASE("tissue sampling: determinism, ranges, mean") {
    const TissueRanges r;
    const TissueParams a = sample_tissue(3, r);
    const TissueParams b = sample_tissue(3, r);
    CHECK(a.kmw == b.kmw);
    CHECK(a.m0m == b.m0m);
    CHECK(a.t2m == b.t2m);
    CHECK(a.t1w == b.t1w);

    double sum_kmw = 0.0;
    for (std::uint64_t seed = 0; seed < 100000; ++seed) {
        const TissueParams t = sample_tissue(seed, r);
        CHECK(t.kmw >= 5.0);
        CHECK(t.kmw <= 100.0);
        CHECK(t.m0m >= 0.02);
        CHECK(t.m0m <= 0.17);
        CHECK(t.t2m >= 1e-6);
        CHECK(t.t2m <= 100e-6);
        CHECK(t.t1w >= 0.2);
        CHECK(t.t1w <= 3.0);
        sum_kmw += t.kmw;
    }
    CHECK(sum_kmw / 100000.0 == doctest::Approx(52.5).epsilon(0.5 / 52.5));

    TissueRanges bad;
    bad.m0m = {0.3, 0.1};
    CHECK_THROWS_AS(sample_tissue(1, bad), std::domain_error);
}

TEST_CASE("normalization maps ranges onto the unit interval") {
    NormalizationSpec norm;  // default ranges
    CHECK(NormalizationSpec::to_unit(0.5, norm.scan.b1) == 0.0);
    CHECK(NormalizationSpec::to_unit(2.0, norm.scan.b1) == 1.0);
    CHECK(NormalizationSpec::to_unit(52.5, norm.tissue.kmw) ==
          doctest::Approx(0.5).epsilon(1e-14));

    Xoshiro256 rng(17);
    for (int i = 0; i < 10000; ++i) {
        TissueParams p;
        p.kmw = rng.uniform(5.0, 100.0);
        p.m0m = rng.uniform(0.02, 0.17);
        p.t2m = rng.uniform(1e-6, 100e-6);
        p.t1w = rng.uniform(0.2, 3.0);
        const TissueParams q = norm.denormalize_target(norm.normalize_target(p));
        CHECK(q.kmw == doctest::Approx(p.kmw).epsilon(1e-12));
        CHECK(q.m0m == doctest::Approx(p.m0m).epsilon(1e-12));
        CHECK(q.t2m == doctest::Approx(p.t2m).epsilon(1e-12));
        CHECK(q.t1w == doctest::Approx(p.t1w).epsilon(1e-12));
    }

    // Channel order [S, b1, omega, ts, td]; signal passes through unscaled.
    const ScanPoint scan{1.25, 29.0, 1.2, 4.25};
    const std::array<double, 5> x = norm.input_vector(0.731, scan);
    CHECK(x[0] == 0.731);
    CHECK(x[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(x[2] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(x[3] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(x[4] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("generated records regenerate exactly from their stored seeds") {
    const testutil::TempDir tmp("dataset");
    GenConfig cfg;
    cfg.n_samples = 200;
    cfg.seed = 7;
    cfg.out_path = tmp.file("small.otds");
    generate_dataset(cfg);

    const PoolConstants consts;
    DatasetReader reader(cfg.out_path);
    CHECK(reader.header().n_samples == 200);
    CHECK(reader.header().noise.snr_db == 46.0);
    CHECK(reader.header().config_digest == fnv1a64(manifest_json(cfg)));

    DatasetRecord rec;
    std::size_t count = 0;
    while (reader.next(&rec)) {
        // Seed-derivation convention: three streams per record index.
        CHECK(rec.schedule_seed == derive_seed(cfg.seed, 3 * count));
        CHECK(rec.tissue_seed == derive_seed(cfg.seed, 3 * count + 1));
        CHECK(rec.noise_seed == derive_seed(cfg.seed, 3 * count + 2));

        REQUIRE(rec.scans.size() == rec.signal.size());
        CHECK(rec.scans.size() >= 10);
        CHECK(rec.scans.size() <= 40);

        const Sample s = regenerate_record(rec, reader.header(), consts);
        REQUIRE(s.schedule.size() == rec.scans.size());
        for (std::size_t i = 0; i < rec.scans.size(); ++i) {
            CHECK(rec.scans[i][0] == static_cast<float>(s.schedule[i].b1));
            CHECK(rec.scans[i][1] == static_cast<float>(s.schedule[i].omega));
            CHECK(rec.scans[i][2] == static_cast<float>(s.schedule[i].ts));
            CHECK(rec.scans[i][3] == static_cast<float>(s.schedule[i].td));
            CHECK(rec.signal[i] == static_cast<float>(s.fingerprint[i]));
        }
        CHECK(rec.label[0] == static_cast<float>(s.label.kmw));
        CHECK(rec.label[1] == static_cast<float>(s.label.m0m));
        CHECK(rec.label[2] == static_cast<float>(s.label.t2m));
        CHECK(rec.label[3] == static_cast<float>(s.label.t1w));
        ++count;
    }
    CHECK(count == 200);
    CHECK_FALSE(reader.next(&rec));

    reader.rewind();
    CHECK(reader.next(&rec));
    CHECK(rec.schedule_seed == derive_seed(cfg.seed, 0));
}

TEST_CASE("generation is byte-identical across runs and worker counts") {
    const testutil::TempDir tmp("dataset");
    GenConfig cfg;
    cfg.n_samples = 150;
    cfg.seed = 21;

    cfg.out_path = tmp.file("a.otds");
    cfg.workers = 1;
    generate_dataset(cfg);
    cfg.out_path = tmp.file("b.otds");
    generate_dataset(cfg);
    cfg.out_path = tmp.file("c.otds");
    cfg.workers = 3;
    generate_dataset(cfg);

    const std::string a = testutil::read_file(tmp.file("a.otds"));
    CHECK(a == testutil::read_file(tmp.file("b.otds")));
    CHECK(a == testutil::read_file(tmp.file("c.otds")));
    // Manifest sidecar exists and carries the config.
    const std::string manifest = testutil::read_file(tmp.file("a.otds.json"));
    CHECK(manifest.find("\"nSamples\": 150") != std::string::npos);
}

TEST_CASE("empty dataset round trip") {
    const testutil::TempDir tmp("dataset");
    GenConfig cfg;
    cfg.n_samples = 0;
    cfg.out_path = tmp.file("empty.otds");
    generate_dataset(cfg);
    DatasetReader reader(cfg.out_path);
    CHECK(reader.header().n_samples == 0);
    DatasetRecord rec;
    CHECK_FALSE(reader.next(&rec));
}

TEST_CASE("reader error paths") {
    const testutil::TempDir tmp("dataset");
    CHECK_THROWS_AS((void)DatasetReader{tmp.file("missing.otds")}, std::runtime_error);

    const std::string junk = tmp.file("junk.otds");
    testutil::write_file(junk, "this is not a dataset file at all............");
    CHECK_THROWS_AS((void)DatasetReader{junk}, std::runtime_error);

    GenConfig cfg;
    cfg.n_samples = 3;
    cfg.out_path = tmp.file("trunc.otds");
    generate_dataset(cfg);
    const std::string full = testutil::read_file(cfg.out_path);
    testutil::write_file(tmp.file("cut.otds"), full.substr(0, full.size() - 10));
    DatasetReader reader(tmp.file("cut.otds"));
    DatasetRecord rec;
    CHECK_THROWS_AS(
        [&] {
            while (reader.next(&rec)) {
            }
        }(),
        std::runtime_error);

    GenConfig bad;
    bad.n_samples = 1;
    bad.out_path = "";
    CHECK_THROWS_AS(generate_dataset(bad), std::invalid_argument);
}

TEST_CASE("empirical SNR matches the configured level") {
    const PoolConstants consts;
    const NoiseSpec spec;  // 46 dB
    std::vector<Fingerprint> clean, noisy;
    for (std::uint64_t i = 0; i < 2000; ++i) {
        const Schedule sched = sample_schedule(derive_seed(50, i), ScheduleRanges{});
        const TissueParams t = sample_tissue(derive_seed(51, i), TissueRanges{});
        Fingerprint fp = simulate_fingerprint(t, consts, sched);
        noisy.push_back(add_noise(fp, spec, derive_seed(52, i)));
        clean.push_back(std::move(fp));
    }
    CHECK(empirical_snr_db(noisy, clean) == doctest::Approx(46.0).epsilon(0.1 / 46.0));

    CHECK_THROWS_AS(empirical_snr_db(noisy, {}), std::invalid_argument);
    std::vector<Fingerprint> one_short = clean;
    one_short[0].values.pop_back();
    CHECK_THROWS_AS(empirical_snr_db(noisy, one_short), std::invalid_argument);
    CHECK_THROWS_AS(empirical_snr_db({}, {}), std::invalid_argument);
}

TEST_SUITE_END();
