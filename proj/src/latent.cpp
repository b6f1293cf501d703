#include "genn2n/latent.hpp"

#include <cmath>

#include "genn2n/error.hpp"

namespace genn2n {

using ad::Graph;
using ad::Tensor;

std::vector<ad::Tensor> EncoderParams::parameters() const {
  std::vector<Tensor> out;
  ad::collect_params(patch_embed, out);
  for (const auto& l : mlp) ad::collect_params(l, out);
  return out;
}

std::vector<ad::Tensor> EncoderParams::mlp_parameters() const {
  std::vector<Tensor> out;
  for (const auto& l : mlp) ad::collect_params(l, out);
  return out;
}

EncoderParams make_encoder(const EncoderConfig& cfg, Rng& rng) {
  if (cfg.image_w % cfg.patch != 0 || cfg.image_h % cfg.patch != 0) {
    fail(ErrorKind::config, "encoder: patch size must divide image dims");
  }
  EncoderParams enc;
  enc.cfg = cfg;
  enc.patch_embed = ad::make_linear(static_cast<int64_t>(cfg.patch) * cfg.patch * 3,
                                    cfg.embed_dim, rng);
  enc.mlp.push_back(ad::make_linear(cfg.embed_dim, cfg.hidden, rng));
  enc.mlp.push_back(ad::make_linear(cfg.hidden, cfg.hidden, rng));
  enc.mlp.push_back(ad::make_linear(cfg.hidden, 2 * cfg.code_dim, rng));

  const int px = cfg.image_w / cfg.patch, py = cfg.image_h / cfg.patch;
  enc.patch_index.reserve(static_cast<size_t>(cfg.image_w) * cfg.image_h);
  for (int ty = 0; ty < py; ++ty) {
    for (int tx = 0; tx < px; ++tx) {
      for (int dy = 0; dy < cfg.patch; ++dy) {
        for (int dx = 0; dx < cfg.patch; ++dx) {
          enc.patch_index.push_back(static_cast<int64_t>(ty * cfg.patch + dy) * cfg.image_w +
                                    (tx * cfg.patch + dx));
        }
      }
    }
  }
  return enc;
}

Tensor image_to_tensor(const Image& img) {
  return Tensor::from_data({static_cast<int64_t>(img.pixel_count()), 3}, img.data);
}

Image tensor_to_image(const ad::Tensor& t, int width, int height) {
  if (t.size() != static_cast<int64_t>(width) * height * 3) {
    fail(ErrorKind::shape, "tensor_to_image: size mismatch");
  }
  Image img(width, height);
  std::copy_n(t.data(), t.size(), img.data.begin());
  return img;
}

EditCode encode(Graph* g, const EncoderParams& enc, const Tensor& image, bool sample, Rng* rng) {
  const EncoderConfig& cfg = enc.cfg;
  const int64_t pixels = static_cast<int64_t>(cfg.image_w) * cfg.image_h;
  if (image.shape() != std::vector<int64_t>{pixels, 3}) {
    fail(ErrorKind::shape, "encode: image tensor is " + ad::shape_str(image.shape()) +
                               ", encoder expects [" + std::to_string(pixels) + "x3]");
  }
  const int64_t n_patches = pixels / (static_cast<int64_t>(cfg.patch) * cfg.patch);
  Tensor patches = ad::gather_rows(g, image, enc.patch_index);
  patches = ad::reshape(g, patches, {n_patches, static_cast<int64_t>(cfg.patch) * cfg.patch * 3});
  Tensor emb = ad::relu(g, ad::linear_forward(g, enc.patch_embed, patches));
  // mean pool over patches
  Tensor pool_w = Tensor::full({1, n_patches}, 1.0 / static_cast<double>(n_patches));
  Tensor h = ad::matmul(g, pool_w, emb);
  for (size_t l = 0; l < enc.mlp.size(); ++l) {
    h = ad::linear_forward(g, enc.mlp[l], h);
    if (l + 1 < enc.mlp.size()) h = ad::relu(g, h);
  }
  EditCode code;
  code.mean = ad::slice_cols(g, h, 0, cfg.code_dim);
  code.log_var = ad::clamp(g, ad::slice_cols(g, h, cfg.code_dim, cfg.code_dim), -kLogVarClamp,
                           kLogVarClamp);
  if (sample) {
    if (!rng) fail(ErrorKind::config, "encode: sampling requires an RNG");
    Tensor eta = Tensor::gaussian({1, cfg.code_dim}, 1.0, *rng);
    Tensor std_dev = ad::exp(g, ad::scale(g, code.log_var, 0.5));
    code.sample = ad::add(g, code.mean, ad::mul(g, std_dev, eta));
  } else {
    code.sample = code.mean;
  }
  return code;
}

EditCode encode_image(Graph* g, const EncoderParams& enc, const Image& img, bool sample,
                      Rng* rng) {
  if (img.width != enc.cfg.image_w || img.height != enc.cfg.image_h) {
    fail(ErrorKind::shape, "encode_image: image " + std::to_string(img.width) + "x" +
                               std::to_string(img.height) + " does not match encoder config");
  }
  return encode(g, enc, image_to_tensor(img), sample, rng);
}

Tensor kl_loss(Graph* g, std::span<const EditCode> codes) {
  if (codes.empty()) fail(ErrorKind::config, "kl_loss: empty batch");
  Tensor acc;
  for (const EditCode& code : codes) {
    // mean^2 + e^lv - 1 - lv, summed over dims
    Tensor inner = ad::sub(g, ad::add(g, ad::square(g, code.mean), ad::exp(g, code.log_var)),
                           ad::add_scalar(g, code.log_var, 1.0));
    Tensor term = ad::sum(g, inner);
    acc = acc.defined() ? ad::add(g, acc, term) : term;
  }
  return ad::scale(g, acc, 0.5 / static_cast<double>(codes.size()));
}

Tensor contrastive_loss(Graph* g, const Tensor& anchor, std::span<const Tensor> attract,
                        std::span<const Tensor> repel, double margin) {
  if (margin <= 0.0) fail(ErrorKind::config, "contrastive_loss: margin must be > 0");
  if (attract.empty() && repel.empty()) {
    fail(ErrorKind::config, "contrastive_loss: attract and repel sets are both empty");
  }
  Tensor total;
  auto add_term = [&](const Tensor& t) {
    total = total.defined() ? ad::add(g, total, t) : t;
  };
  for (const Tensor& z : attract) {
    add_term(ad::sum(g, ad::square(g, ad::sub(g, anchor, z))));
  }
  for (const Tensor& z : repel) {
    Tensor d2 = ad::sum(g, ad::square(g, ad::sub(g, anchor, z)));
    add_term(ad::relu(g, ad::add_scalar(g, ad::scale(g, d2, -1.0), margin)));
  }
  return total;
}

}  // namespace genn2n
