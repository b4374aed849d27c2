#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "semcomm/tensor.hpp"

namespace semcomm {

enum class Modality : std::uint8_t { image = 0, text = 1, speech = 2, video = 3 };

inline constexpr std::size_t kModalityCount = 4;
inline constexpr std::array<Modality, kModalityCount> kAllModalities{Modality::image, Modality::text,
                                                                     Modality::speech, Modality::video};

std::string_view to_string(Modality m);
Modality parse_modality(std::string_view name);

/// L x P feature matrix produced by one semantic encoder.
struct SemanticFeatures {
    ad::Tensor matrix;
    Modality modality = Modality::image;
    std::size_t task_id = 0;

    std::size_t length() const { return matrix.rows(); }
    std::size_t width() const { return matrix.cols(); }
};

}  // namespace semcomm
