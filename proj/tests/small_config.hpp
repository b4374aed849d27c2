#pragma once

// Small model settings shared by the model-level tests.

#include "semcomm/model.hpp"

namespace small {

inline semcomm::model::ModelConfig model_config(std::size_t width = 16) {
    semcomm::model::ModelConfig c;
    c.width = width;
    c.compressed = 4;
    c.encoder_layers = 1;
    c.encoder_heads = 2;
    c.fusion_layers = 1;
    c.fusion_heads = 4;
    c.conv_channels = 4;
    return c;
}

}  // namespace small
