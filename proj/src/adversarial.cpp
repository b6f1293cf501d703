#include "genn2n/adversarial.hpp"

#include "genn2n/error.hpp"
#include "genn2n/latent.hpp"

namespace genn2n {

using ad::Graph;
using ad::Tensor;

constexpr double kProbClamp = 1e-6;

std::vector<ad::Tensor> DiscriminatorParams::parameters() const {
  std::vector<Tensor> out;
  for (const auto& l : mlp) ad::collect_params(l, out);
  return out;
}

DiscriminatorParams make_discriminator(const DiscriminatorConfig& cfg, Rng& rng) {
  DiscriminatorParams d;
  d.cfg = cfg;
  const int64_t in = static_cast<int64_t>(cfg.patch) * cfg.patch * 6;
  d.mlp.push_back(ad::make_linear(in, cfg.hidden1, rng));
  d.mlp.push_back(ad::make_linear(cfg.hidden1, cfg.hidden2, rng));
  d.mlp.push_back(ad::make_linear(cfg.hidden2, 1, rng));
  return d;
}

Pair make_pair(Graph* g, const Tensor& image, const Tensor& condition, int width, int height,
               int view) {
  if (image.shape() != condition.shape()) {
    fail(ErrorKind::shape, "make_pair: image and condition shapes differ");
  }
  Pair p;
  p.channels = ad::concat_cols(g, image, ad::sub(g, image, condition));
  p.width = width;
  p.height = height;
  p.view = view;
  return p;
}

PairBatch build_pairs(const EditedImageSet& edits, const std::vector<RenderEntry>& renders,
                      Rng& rng) {
  const int M = edits.n_edits();
  if (M < 2) {
    fail(ErrorKind::config,
         "build_pairs: needs M >= 2 edits per view; with M = 1 disable the adversarial loss");
  }
  PairBatch batch;
  for (const RenderEntry& r : renders) {
    if (r.view < 0 || r.view >= edits.n_views() || r.edit < 0 || r.edit >= M) {
      fail(ErrorKind::shape, "build_pairs: render index outside the edit grid");
    }
    // k != j uniform
    int k = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(M - 1)));
    if (k >= r.edit) ++k;
    const Image& s_j = edits.edits[static_cast<size_t>(r.view)][static_cast<size_t>(r.edit)];
    const Image& s_k = edits.edits[static_cast<size_t>(r.view)][static_cast<size_t>(k)];
    if (!r.image.same_dims(s_j)) fail(ErrorKind::shape, "build_pairs: render dims mismatch");
    Tensor sj = image_to_tensor(s_j);
    Tensor sk = image_to_tensor(s_k);
    Tensor cj = image_to_tensor(r.image);
    batch.real.push_back(make_pair(nullptr, sj, sk, s_j.width, s_j.height, r.view));
    batch.fake.push_back(make_pair(nullptr, cj, sk, s_j.width, s_j.height, r.view));
  }
  return batch;
}

Tensor discriminate(Graph* g, const DiscriminatorParams& d, const Pair& pair) {
  const int p = d.cfg.patch;
  if (pair.width % p != 0 || pair.height % p != 0) {
    fail(ErrorKind::shape, "discriminate: pair dims " + std::to_string(pair.width) + "x" +
                               std::to_string(pair.height) + " not divisible by patch " +
                               std::to_string(p));
  }
  if (pair.channels.shape() !=
      std::vector<int64_t>{static_cast<int64_t>(pair.width) * pair.height, 6}) {
    fail(ErrorKind::shape, "discriminate: pair tensor must be [W*H, 6]");
  }
  const int px = pair.width / p, py = pair.height / p;
  std::vector<int64_t> index;
  index.reserve(static_cast<size_t>(pair.width) * pair.height);
  for (int ty = 0; ty < py; ++ty) {
    for (int tx = 0; tx < px; ++tx) {
      for (int dy = 0; dy < p; ++dy) {
        for (int dx = 0; dx < p; ++dx) {
          index.push_back(static_cast<int64_t>(ty * p + dy) * pair.width + (tx * p + dx));
        }
      }
    }
  }
  Tensor patches = ad::gather_rows(g, pair.channels, index);
  patches = ad::reshape(g, patches, {static_cast<int64_t>(px) * py,
                                     static_cast<int64_t>(p) * p * 6});
  Tensor h = patches;
  for (size_t l = 0; l < d.mlp.size(); ++l) {
    h = ad::linear_forward(g, d.mlp[l], h);
    if (l + 1 < d.mlp.size()) h = ad::relu(g, h);
  }
  return ad::mean(g, ad::sigmoid(g, h));
}

namespace {

Tensor neg_log(Graph* g, const Tensor& prob) {
  return ad::scale(g, ad::log(g, ad::clamp(g, prob, kProbClamp, 1.0 - kProbClamp)), -1.0);
}

}  // namespace

Tensor d_loss(Graph* g, const DiscriminatorParams& d, const PairBatch& batch) {
  if (batch.real.empty() || batch.fake.empty()) {
    fail(ErrorKind::config, "d_loss: empty pair batch");
  }
  Tensor real_acc, fake_acc;
  for (const Pair& r : batch.real) {
    Tensor t = neg_log(g, discriminate(g, d, r));
    real_acc = real_acc.defined() ? ad::add(g, real_acc, t) : t;
  }
  for (const Pair& f : batch.fake) {
    Tensor score = discriminate(g, d, f);
    Tensor t = neg_log(g, ad::add_scalar(g, ad::scale(g, score, -1.0), 1.0));  // -log(1 - D(F))
    fake_acc = fake_acc.defined() ? ad::add(g, fake_acc, t) : t;
  }
  Tensor total = ad::add(g, ad::scale(g, real_acc, 1.0 / static_cast<double>(batch.real.size())),
                         ad::scale(g, fake_acc, 1.0 / static_cast<double>(batch.fake.size())));
  return total;
}

Tensor g_loss(Graph* g, const DiscriminatorParams& d, std::span<const Pair> fake) {
  if (fake.empty()) fail(ErrorKind::config, "g_loss: empty fake batch");
  Tensor acc;
  for (const Pair& f : fake) {
    Tensor t = neg_log(g, discriminate(g, d, f));
    acc = acc.defined() ? ad::add(g, acc, t) : t;
  }
  return ad::scale(g, acc, 1.0 / static_cast<double>(fake.size()));
}

}  // namespace genn2n
