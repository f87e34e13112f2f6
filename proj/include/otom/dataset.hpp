#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "otom/bloch.hpp"
#include "otom/schedule.hpp"

namespace otom {

struct TissueRanges {
    Range kmw{5.0, 100.0};     // Hz
    Range m0m{0.02, 0.17};     // fraction of water M0
    Range t2m{1e-6, 100e-6};   // s
    Range t1w{0.2, 3.0};       // s
};

// Additive white Gaussian noise relative to the unit reference amplitude
// (the normalized unsaturated signal): sigma = 10^(-snr_db/20).
struct NoiseSpec {
    double snr_db = 46.0;

    double sigma() const;
};

struct Sample {
    Schedule schedule;
    Fingerprint fingerprint;  // noisy
    TissueParams label;
};

// Per-channel affine maps between physical units and the [0, 1] network
// domain. Out-of-range values extrapolate linearly.
struct NormalizationSpec {
    ScheduleRanges scan;
    TissueRanges tissue;

    static double to_unit(double v, const Range& r) { return (v - r.lo) / (r.hi - r.lo); }
    static double from_unit(double v, const Range& r) { return r.lo + v * (r.hi - r.lo); }

    // Input vector for one time point, channel order [S, b1, omega, ts, td].
    // The signal channel passes through unscaled.
    std::array<double, 5> input_vector(double signal, const ScanPoint& p) const {
        return {signal, to_unit(p.b1, scan.b1), to_unit(p.omega, scan.omega),
                to_unit(p.ts, scan.ts), to_unit(p.td, scan.td)};
    }

    std::array<double, 4> normalize_target(const TissueParams& t) const {
        return {to_unit(t.kmw, tissue.kmw), to_unit(t.m0m, tissue.m0m),
                to_unit(t.t2m, tissue.t2m), to_unit(t.t1w, tissue.t1w)};
    }

    TissueParams denormalize_target(const std::array<double, 4>& v) const {
        return {from_unit(v[0], tissue.kmw), from_unit(v[1], tissue.m0m),
                from_unit(v[2], tissue.t2m), from_unit(v[3], tissue.t1w)};
    }
};

// Independent uniform draw of every tissue parameter. Deterministic per seed.
TissueParams sample_tissue(std::uint64_t seed, const TissueRanges& ranges);

// out[i] = fp[i] + N(0, sigma^2) with sigma from the noise spec.
Fingerprint add_noise(const Fingerprint& fp, const NoiseSpec& spec, std::uint64_t seed);

// Empirical SNR in dB against the unit reference amplitude:
// 20*log10(1 / std(noisy - clean)), pooled over all samples.
double empirical_snr_db(const std::vector<Fingerprint>& noisy,
                        const std::vector<Fingerprint>& clean);

struct GenConfig {
    std::uint64_t n_samples = 0;
    std::uint64_t seed = 0;
    ScheduleRanges schedule_ranges;
    TissueRanges tissue_ranges;
    NoiseSpec noise;
    std::string out_path;
    int workers = 0;  // 0 = automatic
};

// Dataset file layout (magic "OTOMDS1", little-endian):
//   header: magic[8], u32 version, u64 nSamples,
//           schedule ranges (8 f64 + u32 nMin + u32 nMax),
//           tissue ranges (8 f64), f64 snrDb, u64 configDigest
//   record: u16 n, n*4 f32 scan params (b1, omega, ts, td), n f32 signal,
//           4 f32 label (kmw, m0m, t2m, t1w), 3 u64 seeds
//           (schedule, tissue, noise)
// A JSON manifest with the full generation config is written next to the
// file. Per-record seeds derive from (seed, record index), so the bytes are
// independent of the worker count.
struct DatasetRecord {
    std::vector<std::array<float, 4>> scans;
    std::vector<float> signal;
    std::array<float, 4> label{};
    std::uint64_t schedule_seed = 0;
    std::uint64_t tissue_seed = 0;
    std::uint64_t noise_seed = 0;
};

struct DatasetHeader {
    std::uint32_t version = 1;
    std::uint64_t n_samples = 0;
    ScheduleRanges schedule_ranges;
    TissueRanges tissue_ranges;
    NoiseSpec noise;
    std::uint64_t config_digest = 0;
};

void generate_dataset(const GenConfig& config);

class DatasetReader {
public:
    explicit DatasetReader(const std::string& path);
    ~DatasetReader();
    DatasetReader(const DatasetReader&) = delete;
    DatasetReader& operator=(const DatasetReader&) = delete;

    const DatasetHeader& header() const { return header_; }
    // Returns false at end of file.
    bool next(DatasetRecord* record);
    void rewind();

private:
    struct Impl;
    Impl* impl_;
    DatasetHeader header_;
};

// Reconstructs the record deterministically from its stored seeds (schedule,
// tissue, noisy fingerprint). Used to verify storage integrity.
Sample regenerate_record(const DatasetRecord& record, const DatasetHeader& header,
                         const PoolConstants& consts);

// Canonical JSON of the generation config; its FNV-1a digest goes in the
// header.
std::string manifest_json(const GenConfig& config);
std::uint64_t fnv1a64(const std::string& text);

}  // namespace otom
