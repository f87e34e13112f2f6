#include "otom/fcnn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "model_io.hpp"
#include "otom/binio.hpp"
#include "otom/mat.hpp"
#include "otom/prng.hpp"

namespace otom {
namespace {

inline double sign_of(double x) { return (x > 0.0) - (x < 0.0); }

std::vector<int> layer_dims(int input_length, int hidden_layers, int hidden_width) {
    std::vector<int> dims;
    dims.push_back(input_length);
    for (int i = 0; i < hidden_layers; ++i) dims.push_back(hidden_width);
    dims.push_back(FcnnModel::kOutputDim);
    return dims;
}

std::size_t param_count(const std::vector<int>& dims) {
    std::size_t n = 0;
    for (std::size_t i = 1; i < dims.size(); ++i) {
        n += static_cast<std::size_t>(dims[i]) * dims[i - 1] + dims[i];
    }
    return n;
}

// Offset of layer i's weight matrix; its bias follows immediately.
std::size_t layer_offset(const std::vector<int>& dims, std::size_t layer) {
    std::size_t off = 0;
    for (std::size_t i = 1; i < layer; ++i) {
        off += static_cast<std::size_t>(dims[i]) * dims[i - 1] + dims[i];
    }
    return off;
}

std::string serialize_schedule_blob(const Schedule& s) {
    std::string out;
    put_u32(out, static_cast<std::uint32_t>(s.name.size()));
    out += s.name;
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    for (const ScanPoint& p : s.points) {
        put_f64(out, p.b1);
        put_f64(out, p.omega);
        put_f64(out, p.ts);
        put_f64(out, p.td);
    }
    return out;
}

Schedule parse_schedule_blob(const std::string& blob) {
    struct MemBuf : std::streambuf {
        MemBuf(const char* base, std::size_t size) {
            char* p = const_cast<char*>(base);
            setg(p, p, p + size);
        }
    } buf(blob.data(), blob.size());
    std::istream in(&buf);
    ByteReader r(in);
    Schedule s;
    std::string name(r.u32(), '\0');
    if (!name.empty() && !r.read_raw(name.data(), name.size())) {
        throw std::runtime_error("truncated schedule blob");
    }
    s.name = name;
    s.points.resize(r.u32());
    for (ScanPoint& p : s.points) {
        p.b1 = r.f64();
        p.omega = r.f64();
        p.ts = r.f64();
        p.td = r.f64();
    }
    if (r.failed()) throw std::runtime_error("truncated schedule blob");
    return s;
}

bool same_schedule(const Schedule& a, const Schedule& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].b1 != b[i].b1 || a[i].omega != b[i].omega || a[i].ts != b[i].ts ||
            a[i].td != b[i].td) {
            return false;
        }
    }
    return true;
}

}  // namespace

FcnnModel::FcnnModel(const Schedule& schedule, int hidden_layers, int hidden_width,
                     const NormalizationSpec& norm, std::uint64_t seed)
    : input_length_(static_cast<int>(schedule.size())),
      hidden_layers_(hidden_layers),
      hidden_width_(hidden_width),
      schedule_(schedule),
      norm_(norm) {
    if (schedule.size() == 0) throw std::domain_error("fcnn: empty schedule");
    if (hidden_layers < 1 || hidden_width < 1) {
        throw std::domain_error("fcnn: hidden layers and width must be >= 1");
    }
    const auto dims = layer_dims(input_length_, hidden_layers_, hidden_width_);
    params_.assign(param_count(dims), 0.0);
    Xoshiro256 rng(seed);
    for (std::size_t i = 1; i < dims.size(); ++i) {
        const double k = 1.0 / std::sqrt(static_cast<double>(dims[i - 1]));
        double* w = params_.data() + layer_offset(dims, i);
        const std::size_t nw = static_cast<std::size_t>(dims[i]) * dims[i - 1];
        for (std::size_t q = 0; q < nw; ++q) w[q] = rng.uniform(-k, k);
        // biases stay zero
    }
}

std::array<double, 4> FcnnModel::forward(const std::vector<double>& signal) const {
    if (static_cast<int>(signal.size()) != input_length_) {
        throw std::domain_error("fcnn: input length mismatch");
    }
    const auto dims = layer_dims(input_length_, hidden_layers_, hidden_width_);
    std::vector<double> z(signal);
    std::vector<double> next;
    for (std::size_t i = 1; i < dims.size(); ++i) {
        const double* w = params_.data() + layer_offset(dims, i);
        const double* b = w + static_cast<std::size_t>(dims[i]) * dims[i - 1];
        next.assign(dims[i], 0.0);
        for (int r = 0; r < dims[i]; ++r) {
            double acc = b[r];
            const double* wr = w + static_cast<std::size_t>(r) * dims[i - 1];
            for (int c = 0; c < dims[i - 1]; ++c) acc += wr[c] * z[c];
            next[r] = std::max(0.0, acc);
        }
        z.swap(next);
    }
    return {z[0], z[1], z[2], z[3]};
}

double FcnnModel::batch_loss_grad(const std::vector<const TrainItem*>& batch,
                                  std::vector<double>* grads) const {
    const std::size_t B = batch.size();
    if (B == 0) throw std::domain_error("empty batch");
    if (grads && grads->size() != params_.size()) {
        throw std::domain_error("gradient buffer size mismatch");
    }
    const auto dims = layer_dims(input_length_, hidden_layers_, hidden_width_);
    const std::size_t nlayers = dims.size();

    // Post-activation values per layer, z[0] = inputs.
    std::vector<std::vector<double>> z(nlayers);
    z[0].resize(B * dims[0]);
    for (std::size_t r = 0; r < B; ++r) {
        const auto& xs = batch[r]->xs;
        if (static_cast<int>(xs.size()) != input_length_) {
            throw std::domain_error("fcnn: sample length differs from bound schedule");
        }
        for (int i = 0; i < input_length_; ++i) z[0][r * dims[0] + i] = xs[i][0];
    }
    std::vector<double> wT;
    for (std::size_t i = 1; i < nlayers; ++i) {
        const double* w = params_.data() + layer_offset(dims, i);
        const double* b = w + static_cast<std::size_t>(dims[i]) * dims[i - 1];
        wT.resize(static_cast<std::size_t>(dims[i - 1]) * dims[i]);
        transpose(dims[i], dims[i - 1], w, dims[i - 1], wT.data(), dims[i]);
        z[i].resize(B * dims[i]);
        for (std::size_t r = 0; r < B; ++r) {
            std::memcpy(&z[i][r * dims[i]], b, dims[i] * sizeof(double));
        }
        gemm_nn(B, dims[i], dims[i - 1], z[i - 1].data(), dims[i - 1], wT.data(), dims[i],
                z[i].data(), dims[i], true);
        for (double& v : z[i]) v = std::max(0.0, v);
    }

    const auto& out = z[nlayers - 1];
    double loss = 0.0;
    for (std::size_t r = 0; r < B; ++r) {
        for (int k = 0; k < 4; ++k) loss += std::abs(batch[r]->y[k] - out[r * 4 + k]);
    }
    loss /= 4.0 * static_cast<double>(B);
    if (!grads) return loss;

    const double scale = 1.0 / (4.0 * static_cast<double>(B));
    std::vector<double> dz(B * 4);
    for (std::size_t r = 0; r < B; ++r) {
        for (int k = 0; k < 4; ++k) {
            // ReLU output: zero activation means zero subgradient.
            const double d = -sign_of(batch[r]->y[k] - out[r * 4 + k]) * scale;
            dz[r * 4 + k] = (out[r * 4 + k] > 0.0) ? d : 0.0;
        }
    }
    std::vector<double> dprev;
    for (std::size_t i = nlayers - 1; i >= 1; --i) {
        const double* w = params_.data() + layer_offset(dims, i);
        double* gw = grads->data() + layer_offset(dims, i);
        double* gb = gw + static_cast<std::size_t>(dims[i]) * dims[i - 1];
        gemm_tn_acc(dims[i], dims[i - 1], B, dz.data(), dims[i], z[i - 1].data(), dims[i - 1],
                    gw, dims[i - 1]);
        for (std::size_t r = 0; r < B; ++r) {
            for (int k = 0; k < dims[i]; ++k) gb[k] += dz[r * dims[i] + k];
        }
        if (i > 1) {
            dprev.assign(B * dims[i - 1], 0.0);
            gemm_nn(B, dims[i - 1], dims[i], dz.data(), dims[i], w, dims[i - 1], dprev.data(),
                    dims[i - 1], false);
            for (std::size_t q = 0; q < dprev.size(); ++q) {
                if (z[i - 1][q] <= 0.0) dprev[q] = 0.0;
            }
            dz.swap(dprev);
        }
    }
    return loss;
}

TissueParams FcnnModel::predict(const Fingerprint& fp, const Schedule& schedule) const {
    if (static_cast<int>(fp.size()) != input_length_) {
        throw std::domain_error("fcnn: input length mismatch");
    }
    if (!same_schedule(schedule, schedule_)) {
        throw std::domain_error("fcnn: schedule differs from the bound schedule");
    }
    return norm_.denormalize_target(forward(fp.values));
}

void FcnnModel::save(const std::string& path, const std::string& history_json) const {
    ModelFile file;
    file.kind = kModelKindFcnn;
    file.arch = {static_cast<std::uint32_t>(input_length_),
                 static_cast<std::uint32_t>(hidden_layers_),
                 static_cast<std::uint32_t>(hidden_width_), kOutputDim};
    file.norm = norm_;
    file.extra = serialize_schedule_blob(schedule_);
    file.params = params_;
    write_model_file(path, file, history_json);
}

FcnnModel FcnnModel::load(const std::string& path) {
    const ModelFile file = read_model_file(path, kModelKindFcnn);
    if (file.arch.size() != 4 || file.arch[3] != kOutputDim) {
        throw std::runtime_error("unexpected architecture descriptor in " + path);
    }
    FcnnModel model;
    model.input_length_ = static_cast<int>(file.arch[0]);
    model.hidden_layers_ = static_cast<int>(file.arch[1]);
    model.hidden_width_ = static_cast<int>(file.arch[2]);
    model.schedule_ = parse_schedule_blob(file.extra);
    model.norm_ = file.norm;
    const auto dims = layer_dims(model.input_length_, model.hidden_layers_, model.hidden_width_);
    if (file.params.size() != param_count(dims) ||
        model.schedule_.size() != static_cast<std::size_t>(model.input_length_)) {
        throw std::runtime_error("inconsistent model file " + path);
    }
    model.params_ = std::move(file.params);
    return model;
}

}  // namespace otom
