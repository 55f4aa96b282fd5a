#pragma once

#include <string>

#include "crocs/encoder.hpp"
#include "crocs/prototypes.hpp"

namespace crocs {

/// Versioned binary container. Layout, all integers little-endian unsigned
/// 64-bit and all floats little-endian IEEE-754 doubles:
///   magic "CROCS1"
///   input_len, embed_dim, block_count, dropout_rate
///   per block: in_channels, out_channels, kernel, then the tensors
///     weight, bias, gamma, beta, running_mean, running_var (row-major)
///   head: flatten_dim, weight, bias
///   section tag "PROTO": class/sex/age-bin counts, combo count, embed_dim,
///     beta, combos as (class,sex,age) index triples, then the matrix.
void save_checkpoint(const std::string& path, const EncoderParams& encoder,
                     const PrototypeBank& bank);

struct Checkpoint {
    EncoderParams encoder;  // loaded in EVAL mode
    PrototypeBank bank;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace crocs
