#pragma once

#include <string>

#include "sentipipe/model.hpp"

namespace sentipipe {

// Versioned binary model file: magic "PFRG", format version byte, config
// dimensions (u32 LE) and dropout rates (f32 LE), the vocabulary (count, then
// length-prefixed UTF-8 tokens in id order), each layer group in the fixed
// order embed/lstm0/lstm1/attention/output as shape-prefixed f32 LE payloads,
// and a trailing FNV-1a 64-bit checksum of all preceding bytes.
inline constexpr char kModelMagic[4] = {'P', 'F', 'R', 'G'};
inline constexpr uint8_t kModelFormatVersion = 1;

void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

}  // namespace sentipipe
