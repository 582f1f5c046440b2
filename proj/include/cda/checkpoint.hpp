#pragma once

#include <cstdint>
#include <string>

#include "cda/model.hpp"

namespace cda {

enum class Phase : std::uint8_t { kBase = 0, kFineTuned = 1 };

struct CheckpointMeta {
  Phase phase = Phase::kBase;
  double fraction = 0.0;  // fine-tune fraction; 0 for base checkpoints
};

// Binary format, little-endian: magic "CDA1", format version, schema
// fingerprint, kind/phase/fraction, the training-config snapshot, then named
// parameter groups (g, f, and he for LADA) carrying per-layer shapes, weights,
// biases and the full Adam state. Round-trips are bit-exact.
void save_checkpoint(const std::string& path, const ModelBundle& bundle,
                     const CheckpointMeta& meta);

// Throws CheckpointError on bad magic, unsupported version, truncation, or
// inconsistent shapes.
ModelBundle load_checkpoint(const std::string& path,
                            CheckpointMeta* meta = nullptr);

// Guards a loaded bundle against a dataset with a different feature layout.
void require_schema(const ModelBundle& bundle, const FeatureSchema& expected);

}  // namespace cda
