#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace genn2n {

// H x W x 3 image, row-major, channels interleaved, values in [0, 1].
// Stored as float64; quantization to 8 bit happens only at PPM boundaries.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> data;  // size = width * height * 3

  Image() = default;
  Image(int w, int h) : width(w), height(h), data(static_cast<size_t>(w) * h * 3, 0.0) {}

  double* px(int x, int y) { return data.data() + (static_cast<size_t>(y) * width + x) * 3; }
  const double* px(int x, int y) const {
    return data.data() + (static_cast<size_t>(y) * width + x) * 3;
  }
  size_t pixel_count() const { return static_cast<size_t>(width) * height; }
  bool same_dims(const Image& o) const { return width == o.width && height == o.height; }
};

// Binary PPM (P6, maxval 255). Round-to-nearest with clamping on write.
void save_ppm(const Image& img, const std::string& path);
Image load_ppm(const std::string& path);

// Rec.601 luma replicated to all three channels.
Image to_grayscale(const Image& img);
double luma(const double* rgb);

// Horizontal strip of equally sized images.
Image hstack(const std::vector<Image>& images);

// Mean absolute per-channel difference between two same-sized images.
double mean_abs_diff(const Image& a, const Image& b);

}  // namespace genn2n
