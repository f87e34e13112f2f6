#include "model_io.hpp"

#include <fstream>
#include <stdexcept>

#include "otom/binio.hpp"

namespace otom {
namespace {

constexpr char kMagic[8] = {'O', 'T', 'O', 'M', 'N', 'N', '1', '\0'};
constexpr std::uint32_t kVersion = 1;

void put_ranges(std::string& out, const NormalizationSpec& norm) {
    const ScheduleRanges& s = norm.scan;
    for (const Range* r : {&s.b1, &s.omega, &s.ts, &s.td}) {
        put_f64(out, r->lo);
        put_f64(out, r->hi);
    }
    put_u32(out, static_cast<std::uint32_t>(s.n_min));
    put_u32(out, static_cast<std::uint32_t>(s.n_max));
    const TissueRanges& t = norm.tissue;
    for (const Range* r : {&t.kmw, &t.m0m, &t.t2m, &t.t1w}) {
        put_f64(out, r->lo);
        put_f64(out, r->hi);
    }
}

NormalizationSpec get_ranges(ByteReader& r) {
    NormalizationSpec norm;
    ScheduleRanges& s = norm.scan;
    for (Range* rr : {&s.b1, &s.omega, &s.ts, &s.td}) {
        rr->lo = r.f64();
        rr->hi = r.f64();
    }
    s.n_min = static_cast<int>(r.u32());
    s.n_max = static_cast<int>(r.u32());
    TissueRanges& t = norm.tissue;
    for (Range* rr : {&t.kmw, &t.m0m, &t.t2m, &t.t1w}) {
        rr->lo = r.f64();
        rr->hi = r.f64();
    }
    return norm;
}

}  // namespace

void write_model_file(const std::string& path, const ModelFile& file,
                      const std::string& history_json) {
    std::string out;
    out.append(kMagic, sizeof(kMagic));
    put_u32(out, kVersion);
    put_u32(out, file.kind);
    put_u32(out, static_cast<std::uint32_t>(file.arch.size()));
    for (std::uint32_t a : file.arch) put_u32(out, a);
    put_ranges(out, file.norm);
    put_u32(out, static_cast<std::uint32_t>(file.extra.size()));
    out += file.extra;
    put_u64(out, file.params.size());
    out.reserve(out.size() + 8 * file.params.size());
    for (double p : file.params) put_f64(out, p);

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("write failure on " + path);
    f.close();

    if (!history_json.empty()) {
        std::ofstream h(path + ".json", std::ios::trunc);
        if (!h) throw std::runtime_error("cannot write history for " + path);
        h << history_json;
    }
}

ModelFile read_model_file(const std::string& path, std::uint32_t expected_kind) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open model file " + path);
    char magic[8];
    ByteReader r(f);
    if (!r.read_raw(magic, sizeof(magic)) || std::string(magic, 7) != "OTOMNN1" ||
        magic[7] != '\0') {
        throw std::runtime_error("not a model file (bad magic): " + path);
    }
    const std::uint32_t version = r.u32();
    if (version != kVersion) {
        throw std::runtime_error("unsupported model file version " + std::to_string(version));
    }
    ModelFile file;
    file.kind = r.u32();
    if (expected_kind != 0 && file.kind != expected_kind) {
        throw std::runtime_error("model kind mismatch in " + path);
    }
    file.arch.resize(r.u32());
    for (std::uint32_t& a : file.arch) a = r.u32();
    file.norm = get_ranges(r);
    file.extra.resize(r.u32());
    if (!file.extra.empty() && !r.read_raw(file.extra.data(), file.extra.size())) {
        throw std::runtime_error("truncated model file " + path);
    }
    file.params.resize(r.u64());
    for (double& p : file.params) p = r.f64();
    if (r.failed()) throw std::runtime_error("truncated model file " + path);
    return file;
}

}  // namespace otom
