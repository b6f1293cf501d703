#pragma once

#include <optional>
#include <string>

#include "genn2n/adversarial.hpp"
#include "genn2n/field.hpp"
#include "genn2n/latent.hpp"

namespace genn2n {

// Little-endian binary container: magic "GN2N", version u32, u32 array
// count, then shape-prefixed float64 arrays in fixed order (header array,
// trunk, density head, color head, then encoder and discriminator arrays
// when present). Writes are atomic (temp file + rename).
struct Checkpoint {
  FieldParams field;
  std::optional<EncoderParams> encoder;
  std::optional<DiscriminatorParams> disc;
  RenderConfig render;
};

void save_checkpoint(const std::string& path, const FieldParams& field,
                     const EncoderParams* encoder, const DiscriminatorParams* disc,
                     const RenderConfig& render);

Checkpoint load_checkpoint(const std::string& path);

}  // namespace genn2n
