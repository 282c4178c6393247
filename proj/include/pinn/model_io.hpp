// model_io.hpp - the model.bin container.
//
// Layout: an ASCII header of "key value" lines terminated by "end-header\n",
// followed by every parameter as a 64-bit little-endian IEEE double. The
// body order is latent net, RUL net, dynamics net; within a net, layer by
// layer, the weight matrix row-major then the bias. Reals in the header are
// written as hexadecimal floats so they round-trip exactly.
#pragma once

#include "pinn/model.hpp"
#include "pinn/net.hpp"

#include <cstdint>
#include <string>
#include <string_view>

namespace pinn::io {

inline constexpr int kModelFormatVersion = 1;

struct ModelFile {
    model::PinnModel model;
    net::InitScheme scheme = net::InitScheme::standard_normal;
    std::uint64_t init_seed = 0;
    std::uint64_t split_seed = 0;
};

std::string encode_model(const ModelFile& file);
// Throws parse_error on malformed input.
ModelFile decode_model(std::string_view bytes);

void save_model(const std::string& path, const ModelFile& file);
ModelFile load_model(const std::string& path);

}  // namespace pinn::io
