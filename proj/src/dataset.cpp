#include "otom/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "otom/binio.hpp"
#include "otom/prng.hpp"
#include "otom/threads.hpp"

namespace otom {
namespace {

constexpr char kMagic[8] = {'O', 'T', 'O', 'M', 'D', 'S', '1', '\0'};
constexpr std::uint32_t kFormatVersion = 1;

void check_range(const Range& r, const char* name) {
    if (!(r.lo <= r.hi)) {
        throw std::domain_error(std::string("inverted range for ") + name);
    }
}

std::string serialize_header(const DatasetHeader& h) {
    std::string out;
    out.append(kMagic, sizeof(kMagic));
    put_u32(out, h.version);
    put_u64(out, h.n_samples);
    const ScheduleRanges& s = h.schedule_ranges;
    for (const Range* r : {&s.b1, &s.omega, &s.ts, &s.td}) {
        put_f64(out, r->lo);
        put_f64(out, r->hi);
    }
    put_u32(out, static_cast<std::uint32_t>(s.n_min));
    put_u32(out, static_cast<std::uint32_t>(s.n_max));
    const TissueRanges& t = h.tissue_ranges;
    for (const Range* r : {&t.kmw, &t.m0m, &t.t2m, &t.t1w}) {
        put_f64(out, r->lo);
        put_f64(out, r->hi);
    }
    put_f64(out, h.noise.snr_db);
    put_u64(out, h.config_digest);
    return out;
}

DatasetHeader parse_header(std::istream& in) {
    char magic[8];
    ByteReader r(in);
    if (!r.read_raw(magic, sizeof(magic)) || std::string(magic, 7) != "OTOMDS1" || magic[7] != '\0') {
        throw std::runtime_error("not a dataset file (bad magic)");
    }
    DatasetHeader h;
    h.version = r.u32();
    if (h.version != kFormatVersion) {
        throw std::runtime_error("unsupported dataset format version " + std::to_string(h.version));
    }
    h.n_samples = r.u64();
    ScheduleRanges& s = h.schedule_ranges;
    for (Range* rr : {&s.b1, &s.omega, &s.ts, &s.td}) {
        rr->lo = r.f64();
        rr->hi = r.f64();
    }
    s.n_min = static_cast<int>(r.u32());
    s.n_max = static_cast<int>(r.u32());
    TissueRanges& t = h.tissue_ranges;
    for (Range* rr : {&t.kmw, &t.m0m, &t.t2m, &t.t1w}) {
        rr->lo = r.f64();
        rr->hi = r.f64();
    }
    h.noise.snr_db = r.f64();
    h.config_digest = r.u64();
    if (r.failed()) throw std::runtime_error("truncated dataset header");
    return h;
}

std::string serialize_record(const DatasetRecord& rec) {
    std::string out;
    put_u16(out, static_cast<std::uint16_t>(rec.scans.size()));
    for (const auto& p : rec.scans) {
        for (float v : p) put_f32(out, v);
    }
    for (float v : rec.signal) put_f32(out, v);
    for (float v : rec.label) put_f32(out, v);
    put_u64(out, rec.schedule_seed);
    put_u64(out, rec.tissue_seed);
    put_u64(out, rec.noise_seed);
    return out;
}

DatasetRecord make_record(std::uint64_t base_seed, std::uint64_t index, const GenConfig& config,
                          const PoolConstants& consts) {
    DatasetRecord rec;
    rec.schedule_seed = derive_seed(base_seed, 3 * index);
    rec.tissue_seed = derive_seed(base_seed, 3 * index + 1);
    rec.noise_seed = derive_seed(base_seed, 3 * index + 2);

    const Schedule schedule = sample_schedule(rec.schedule_seed, config.schedule_ranges);
    const TissueParams tissue = sample_tissue(rec.tissue_seed, config.tissue_ranges);
    const Fingerprint clean = simulate_fingerprint(tissue, consts, schedule);
    const Fingerprint noisy = add_noise(clean, config.noise, rec.noise_seed);

    rec.scans.reserve(schedule.size());
    for (const ScanPoint& p : schedule.points) {
        rec.scans.push_back({static_cast<float>(p.b1), static_cast<float>(p.omega),
                             static_cast<float>(p.ts), static_cast<float>(p.td)});
    }
    rec.signal.assign(noisy.values.begin(), noisy.values.end());
    rec.label = {static_cast<float>(tissue.kmw), static_cast<float>(tissue.m0m),
                 static_cast<float>(tissue.t2m), static_cast<float>(tissue.t1w)};
    return rec;
}

}  // namespace

double NoiseSpec::sigma() const {
    if (std::isinf(snr_db) && snr_db > 0) return 0.0;
    return std::pow(10.0, -snr_db / 20.0);
}

TissueParams sample_tissue(std::uint64_t seed, const TissueRanges& ranges) {
    check_range(ranges.kmw, "kmw");
    check_range(ranges.m0m, "m0m");
    check_range(ranges.t2m, "t2m");
    check_range(ranges.t1w, "t1w");
    Xoshiro256 rng(seed);
    TissueParams t;
    t.kmw = rng.uniform(ranges.kmw.lo, ranges.kmw.hi);
    t.m0m = rng.uniform(ranges.m0m.lo, ranges.m0m.hi);
    t.t2m = rng.uniform(ranges.t2m.lo, ranges.t2m.hi);
    t.t1w = rng.uniform(ranges.t1w.lo, ranges.t1w.hi);
    return t;
}

Fingerprint add_noise(const Fingerprint& fp, const NoiseSpec& spec, std::uint64_t seed) {
    const double sigma = spec.sigma();
    Fingerprint out = fp;
    if (sigma == 0.0) return out;
    Xoshiro256 rng(seed);
    for (double& v : out.values) v += sigma * rng.gaussian();
    return out;
}

double empirical_snr_db(const std::vector<Fingerprint>& noisy,
                        const std::vector<Fingerprint>& clean) {
    if (noisy.size() != clean.size()) throw std::invalid_argument("fingerprint count mismatch");
    double sum = 0.0, sum2 = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < noisy.size(); ++i) {
        if (noisy[i].size() != clean[i].size()) {
            throw std::invalid_argument("fingerprint length mismatch");
        }
        for (std::size_t j = 0; j < noisy[i].size(); ++j) {
            const double r = noisy[i][j] - clean[i][j];
            sum += r;
            sum2 += r * r;
            ++n;
        }
    }
    if (n < 2) throw std::invalid_argument("need at least two residuals");
    const double mean = sum / static_cast<double>(n);
    const double var = (sum2 - static_cast<double>(n) * mean * mean) / static_cast<double>(n - 1);
    return 20.0 * std::log10(1.0 / std::sqrt(var));
}

std::string manifest_json(const GenConfig& config) {
    nlohmann::ordered_json j;
    j["format"] = "OTOMDS1";
    j["version"] = kFormatVersion;
    j["nSamples"] = config.n_samples;
    j["seed"] = config.seed;
    auto range = [](const Range& r) { return nlohmann::ordered_json{{"lo", r.lo}, {"hi", r.hi}}; };
    j["scheduleRanges"] = {{"b1_uT", range(config.schedule_ranges.b1)},
                           {"omega_ppm", range(config.schedule_ranges.omega)},
                           {"ts_s", range(config.schedule_ranges.ts)},
                           {"td_s", range(config.schedule_ranges.td)},
                           {"nMin", config.schedule_ranges.n_min},
                           {"nMax", config.schedule_ranges.n_max}};
    j["tissueRanges"] = {{"kmw_Hz", range(config.tissue_ranges.kmw)},
                         {"m0m", range(config.tissue_ranges.m0m)},
                         {"t2m_s", range(config.tissue_ranges.t2m)},
                         {"t1w_s", range(config.tissue_ranges.t1w)}};
    j["noise"] = {{"snrDb", config.noise.snr_db}};
    return j.dump(2) + "\n";
}

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

void generate_dataset(const GenConfig& config) {
    if (config.out_path.empty()) throw std::invalid_argument("empty output path");
    check_range(config.schedule_ranges.b1, "b1");
    check_range(config.schedule_ranges.omega, "omega");
    check_range(config.schedule_ranges.ts, "ts");
    check_range(config.schedule_ranges.td, "td");
    if (config.schedule_ranges.n_min < 1 || config.schedule_ranges.n_max < config.schedule_ranges.n_min) {
        throw std::domain_error("invalid schedule length range");
    }

    const std::string manifest = manifest_json(config);
    DatasetHeader header;
    header.version = kFormatVersion;
    header.n_samples = config.n_samples;
    header.schedule_ranges = config.schedule_ranges;
    header.tissue_ranges = config.tissue_ranges;
    header.noise = config.noise;
    header.config_digest = fnv1a64(manifest);

    const std::string partial = config.out_path + ".partial";
    const PoolConstants consts{};
    try {
        std::ofstream out(partial, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + partial + " for writing");
        const std::string hdr = serialize_header(header);
        out.write(hdr.data(), static_cast<std::streamsize>(hdr.size()));

        // Blocks keep memory bounded; within a block each worker fills its
        // contiguous index span and the writer emits blobs in index order, so
        // the bytes never depend on the worker count.
        const int workers = effective_workers(config.workers);
        const std::uint64_t block = 4096;
        std::vector<std::string> blobs;
        for (std::uint64_t start = 0; start < config.n_samples; start += block) {
            const std::uint64_t count = std::min(block, config.n_samples - start);
            blobs.assign(count, {});
            parallel_chunks(count, workers, [&](std::size_t b, std::size_t e, int) {
                for (std::size_t k = b; k < e; ++k) {
                    blobs[k] = serialize_record(
                        make_record(config.seed, start + k, config, consts));
                }
            });
            for (const std::string& blob : blobs) {
                out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
            }
            if (!out) throw std::runtime_error("write failure on " + partial);
        }
        out.close();
        if (!out) throw std::runtime_error("close failure on " + partial);
    } catch (...) {
        std::error_code ec;
        std::filesystem::remove(partial, ec);
        throw;
    }

    std::filesystem::rename(partial, config.out_path);
    std::ofstream mout(config.out_path + ".json", std::ios::trunc);
    if (!mout) throw std::runtime_error("cannot write manifest for " + config.out_path);
    mout << manifest;
}

struct DatasetReader::Impl {
    std::ifstream in;
    std::streampos data_start = 0;
    std::uint64_t read_count = 0;
};

DatasetReader::DatasetReader(const std::string& path) : impl_(new Impl) {
    impl_->in.open(path, std::ios::binary);
    if (!impl_->in) {
        delete impl_;
        throw std::runtime_error("cannot open dataset " + path);
    }
    try {
        header_ = parse_header(impl_->in);
    } catch (...) {
        delete impl_;
        throw;
    }
    impl_->data_start = impl_->in.tellg();
}

DatasetReader::~DatasetReader() { delete impl_; }

bool DatasetReader::next(DatasetRecord* record) {
    if (impl_->read_count >= header_.n_samples) return false;
    ByteReader r(impl_->in);
    const std::uint16_t n = r.u16();
    if (r.failed()) throw std::runtime_error("truncated dataset record");
    record->scans.resize(n);
    for (auto& p : record->scans) {
        for (float& v : p) v = r.f32();
    }
    record->signal.resize(n);
    for (float& v : record->signal) v = r.f32();
    for (float& v : record->label) v = r.f32();
    record->schedule_seed = r.u64();
    record->tissue_seed = r.u64();
    record->noise_seed = r.u64();
    if (r.failed()) throw std::runtime_error("truncated dataset record");
    ++impl_->read_count;
    return true;
}

void DatasetReader::rewind() {
    impl_->in.clear();
    impl_->in.seekg(impl_->data_start);
    impl_->read_count = 0;
}

Sample regenerate_record(const DatasetRecord& record, const DatasetHeader& header,
                         const PoolConstants& consts) {
    Sample s;
    s.schedule = sample_schedule(record.schedule_seed, header.schedule_ranges);
    s.label = sample_tissue(record.tissue_seed, header.tissue_ranges);
    const Fingerprint clean = simulate_fingerprint(s.label, consts, s.schedule);
    s.fingerprint = add_noise(clean, header.noise, record.noise_seed);
    return s;
}

}  // namespace otom
