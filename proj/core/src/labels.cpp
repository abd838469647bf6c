#include "pseudoflow/labels.hpp"

namespace pseudoflow {

Palette Palette::default_shapes() {
  Palette p;
  p.colors = {
      {32, 32, 40},     // 0: background
      {200, 64, 64},    // 1: circle
      {72, 188, 92},    // 2: rectangle
      {72, 112, 220},   // 3: triangle
  };
  return p;
}

void Palette::validate() const {
  if (colors.empty()) throw ConfigError("palette: needs at least one class color");
  for (std::size_t i = 0; i < colors.size(); ++i)
    for (std::size_t j = i + 1; j < colors.size(); ++j)
      if (colors[i] == colors[j])
        throw ConfigError("palette: class colors must be pairwise distinct (" +
                          std::to_string(i) + " == " + std::to_string(j) + ")");
}

ImageU8 labels_encode(const std::vector<std::uint8_t>& ids, int width, int height,
                      const Palette& palette) {
  palette.validate();
  if (ids.size() != static_cast<std::size_t>(width) * height)
    throw ShapeError("labels_encode: id map size does not match dimensions");
  ImageU8 img(width, height, 3);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= palette.size())
      throw ConfigError("labels_encode: unknown class id " + std::to_string(ids[i]));
    const auto& c = palette.colors[ids[i]];
    img.pixels[3 * i] = c[0];
    img.pixels[3 * i + 1] = c[1];
    img.pixels[3 * i + 2] = c[2];
  }
  return img;
}

std::vector<std::uint8_t> labels_decode(const ImageU8& img, const Palette& palette) {
  palette.validate();
  if (img.channels != 3) throw ShapeError("labels_decode: expects RGB input");
  std::vector<std::uint8_t> ids(static_cast<std::size_t>(img.width) * img.height, 0);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const int r = img.pixels[3 * i], g = img.pixels[3 * i + 1], b = img.pixels[3 * i + 2];
    long best = -1;
    std::uint8_t best_id = 0;
    for (std::size_t k = 0; k < palette.size(); ++k) {
      const long dr = r - palette.colors[k][0];
      const long dg = g - palette.colors[k][1];
      const long db = b - palette.colors[k][2];
      const long d = dr * dr + dg * dg + db * db;
      if (best < 0 || d < best) {  // strict: ties keep the lowest id
        best = d;
        best_id = static_cast<std::uint8_t>(k);
      }
    }
    ids[i] = best_id;
  }
  return ids;
}

}  // namespace pseudoflow
