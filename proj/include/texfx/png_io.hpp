#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "texfx/image.hpp"

namespace texfx {

// Reads an 8-bit grayscale or RGB PNG, scaling samples to [0,1].
// Palette images are expanded to RGB; sub-8-bit grayscale is expanded to 8.
// Throws FileNotFoundError / DecodeError / UnsupportedFormatError (16-bit
// depth or alpha), each naming the offending path.
RasterImage load_image(const std::string& path);

// Writes 8-bit grayscale (1 channel) or RGB (3 channels).
void save_image(const RasterImage& img, const std::string& path);

// Writes an 8-bit palette PNG. `indices` are width*height entries into
// `palette` (RGB triples, at most 256).
void save_indexed_image(const std::vector<std::uint8_t>& indices, int width, int height,
                        const std::vector<std::array<std::uint8_t, 3>>& palette,
                        const std::string& path);

} // namespace texfx
