#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "otom/dataset.hpp"

// Shared weight-file container (magic "OTOMNN1") used by both sequence
// models. Layout, little-endian throughout:
//   magic[8], u32 version, u32 kind, u32 archCount, archCount x u32,
//   normalization spec (schedule ranges 8 f64 + 2 u32, tissue ranges 8 f64),
//   u32 extraLen, extra bytes (kind-specific), u64 paramCount, params f64.
namespace otom {

inline constexpr std::uint32_t kModelKindBiLstm = 1;
inline constexpr std::uint32_t kModelKindFcnn = 2;

struct ModelFile {
    std::uint32_t kind = 0;
    std::vector<std::uint32_t> arch;
    NormalizationSpec norm;
    std::string extra;
    std::vector<double> params;
};

// Writes the container; a non-empty history string goes verbatim to
// path + ".json".
void write_model_file(const std::string& path, const ModelFile& file,
                      const std::string& history_json);

// Reads and validates; expected_kind 0 accepts any kind.
ModelFile read_model_file(const std::string& path, std::uint32_t expected_kind);

}  // namespace otom
