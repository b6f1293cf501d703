#include "genn2n/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "genn2n/error.hpp"

namespace genn2n {

void save_ppm(const Image& img, const std::string& path) {
  if (img.width <= 0 || img.height <= 0) fail(ErrorKind::shape, "save_ppm: empty image");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "save_ppm: cannot open " + path);
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> row(static_cast<size_t>(img.width) * 3);
  for (int y = 0; y < img.height; ++y) {
    const double* src = img.px(0, y);
    for (int i = 0; i < img.width * 3; ++i) {
      const double v = std::clamp(src[i], 0.0, 1.0);
      row[static_cast<size_t>(i)] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) fail(ErrorKind::io, "save_ppm: write failed for " + path);
}

namespace {

int read_ppm_token(std::istream& in) {
  // skips whitespace and '#' comments between header fields
  for (;;) {
    int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  int value = 0;
  if (!(in >> value)) fail(ErrorKind::io, "load_ppm: malformed header");
  return value;
}

}  // namespace

Image load_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "load_ppm: cannot open " + path);
  std::string magic;
  in >> magic;
  if (magic != "P6") fail(ErrorKind::io, "load_ppm: " + path + " is not binary PPM (P6)");
  const int w = read_ppm_token(in);
  const int h = read_ppm_token(in);
  const int maxval = read_ppm_token(in);
  if (w <= 0 || h <= 0 || maxval != 255) {
    fail(ErrorKind::io, "load_ppm: unsupported header in " + path);
  }
  in.get();  // single whitespace after maxval
  Image img(w, h);
  std::vector<unsigned char> raw(static_cast<size_t>(w) * h * 3);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    fail(ErrorKind::io, "load_ppm: truncated pixel data in " + path);
  }
  for (size_t i = 0; i < raw.size(); ++i) {
    img.data[i] = static_cast<double>(raw[i]) / 255.0;
  }
  return img;
}

double luma(const double* rgb) {
  return 0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2];
}

Image to_grayscale(const Image& img) {
  Image out(img.width, img.height);
  for (size_t p = 0; p < img.pixel_count(); ++p) {
    const double g = luma(img.data.data() + p * 3);
    out.data[p * 3 + 0] = g;
    out.data[p * 3 + 1] = g;
    out.data[p * 3 + 2] = g;
  }
  return out;
}

Image hstack(const std::vector<Image>& images) {
  if (images.empty()) fail(ErrorKind::shape, "hstack: no images");
  const int w = images[0].width, h = images[0].height;
  for (const auto& im : images) {
    if (im.width != w || im.height != h) fail(ErrorKind::shape, "hstack: mixed dimensions");
  }
  Image out(w * static_cast<int>(images.size()), h);
  for (size_t k = 0; k < images.size(); ++k) {
    for (int y = 0; y < h; ++y) {
      std::copy_n(images[k].px(0, y), static_cast<size_t>(w) * 3,
                  out.px(static_cast<int>(k) * w, y));
    }
  }
  return out;
}

double mean_abs_diff(const Image& a, const Image& b) {
  if (!a.same_dims(b)) fail(ErrorKind::shape, "mean_abs_diff: dimension mismatch");
  double s = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) s += std::abs(a.data[i] - b.data[i]);
  return s / static_cast<double>(a.data.size());
}

}  // namespace genn2n
