#include "genn2n/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "genn2n/error.hpp"

namespace genn2n {

namespace {

constexpr char kMagic[4] = {'G', 'N', '2', 'N'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_u64(std::ostream& out, uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

uint32_t read_u32(std::istream& in) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

uint64_t read_u64(std::istream& in) {
  uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

void write_array(std::ostream& out, const std::vector<int64_t>& shape, const double* data) {
  write_u32(out, static_cast<uint32_t>(shape.size()));
  int64_t n = 1;
  for (int64_t d : shape) {
    write_u64(out, static_cast<uint64_t>(d));
    n *= d;
  }
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * 8));
}

void write_tensor(std::ostream& out, const ad::Tensor& t) {
  write_array(out, t.shape(), t.data());
}

ad::Tensor read_tensor(std::istream& in, bool requires_grad) {
  const uint32_t rank = read_u32(in);
  if (rank == 0 || rank > 4) fail(ErrorKind::io, "checkpoint: bad array rank");
  std::vector<int64_t> shape;
  int64_t n = 1;
  for (uint32_t i = 0; i < rank; ++i) {
    shape.push_back(static_cast<int64_t>(read_u64(in)));
    n *= shape.back();
  }
  if (n <= 0 || n > (1 << 28)) fail(ErrorKind::io, "checkpoint: bad array size");
  std::vector<double> data(static_cast<size_t>(n));
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(n * 8));
  if (!in) fail(ErrorKind::io, "checkpoint: truncated array data");
  return ad::Tensor::from_data(std::move(shape), std::move(data), requires_grad);
}

uint32_t count_arrays(const FieldParams& field, const EncoderParams* enc,
                      const DiscriminatorParams* disc) {
  uint32_t n = 1;  // header
  n += 2 * static_cast<uint32_t>(field.trunk.size() + field.density_head.size() +
                                 field.color_head.size());
  if (enc) n += 2 + 2 * static_cast<uint32_t>(enc->mlp.size());
  if (disc) n += 2 * static_cast<uint32_t>(disc->mlp.size());
  return n;
}

}  // namespace

void save_checkpoint(const std::string& path, const FieldParams& field,
                     const EncoderParams* encoder, const DiscriminatorParams* disc,
                     const RenderConfig& render) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) fail(ErrorKind::io, "save_checkpoint: cannot open " + tmp);
    out.write(kMagic, 4);
    write_u32(out, kVersion);
    write_u32(out, count_arrays(field, encoder, disc));

    const FieldConfig& fc = field.cfg;
    std::vector<double> header = {
        static_cast<double>(fc.enc_levels_pos), static_cast<double>(fc.enc_levels_dir),
        static_cast<double>(fc.trunk_layers),   static_cast<double>(fc.trunk_width),
        static_cast<double>(fc.feature_width),  static_cast<double>(fc.head_layers),
        static_cast<double>(fc.head_width),     static_cast<double>(fc.code_dim),
        encoder ? 1.0 : 0.0,
        disc ? 1.0 : 0.0,
        encoder ? static_cast<double>(encoder->cfg.image_w) : 0.0,
        encoder ? static_cast<double>(encoder->cfg.image_h) : 0.0,
        encoder ? static_cast<double>(encoder->cfg.patch) : 0.0,
        encoder ? static_cast<double>(encoder->cfg.embed_dim) : 0.0,
        encoder ? static_cast<double>(encoder->cfg.hidden) : 0.0,
        encoder ? static_cast<double>(encoder->cfg.code_dim) : 0.0,
        disc ? static_cast<double>(disc->cfg.patch) : 0.0,
        disc ? static_cast<double>(disc->cfg.hidden1) : 0.0,
        disc ? static_cast<double>(disc->cfg.hidden2) : 0.0,
        static_cast<double>(render.n_samples_per_ray),
        render.t_near,
        render.t_far,
        render.stratified ? 1.0 : 0.0,
        render.white_background ? 1.0 : 0.0,
        render.background[0],
        render.background[1],
        render.background[2],
    };
    write_array(out, {static_cast<int64_t>(header.size())}, header.data());

    auto write_mlp = [&](const std::vector<ad::Linear>& mlp) {
      for (const auto& l : mlp) {
        write_tensor(out, l.w);
        write_tensor(out, l.b);
      }
    };
    write_mlp(field.trunk);
    write_mlp(field.density_head);
    write_mlp(field.color_head);
    if (encoder) {
      write_tensor(out, encoder->patch_embed.w);
      write_tensor(out, encoder->patch_embed.b);
      write_mlp(encoder->mlp);
    }
    if (disc) write_mlp(disc->mlp);
    if (!out) fail(ErrorKind::io, "save_checkpoint: write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "load_checkpoint: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    fail(ErrorKind::io, "load_checkpoint: " + path + " is not a GN2N checkpoint");
  }
  const uint32_t version = read_u32(in);
  if (version != kVersion) {
    fail(ErrorKind::io, "load_checkpoint: unsupported version " + std::to_string(version));
  }
  const uint32_t n_arrays = read_u32(in);
  if (n_arrays < 1) fail(ErrorKind::io, "load_checkpoint: empty checkpoint");

  ad::Tensor header_t = read_tensor(in, false);
  if (header_t.size() != 27) fail(ErrorKind::io, "load_checkpoint: bad header array");
  const double* h = header_t.data();

  Checkpoint ck;
  FieldConfig fc;
  fc.enc_levels_pos = static_cast<int>(h[0]);
  fc.enc_levels_dir = static_cast<int>(h[1]);
  fc.trunk_layers = static_cast<int>(h[2]);
  fc.trunk_width = static_cast<int>(h[3]);
  fc.feature_width = static_cast<int>(h[4]);
  fc.head_layers = static_cast<int>(h[5]);
  fc.head_width = static_cast<int>(h[6]);
  fc.code_dim = static_cast<int>(h[7]);
  const bool has_encoder = h[8] != 0.0;
  const bool has_disc = h[9] != 0.0;
  ck.render.n_samples_per_ray = static_cast<int>(h[19]);
  ck.render.t_near = h[20];
  ck.render.t_far = h[21];
  ck.render.stratified = h[22] != 0.0;
  ck.render.white_background = h[23] != 0.0;
  ck.render.background = {h[24], h[25], h[26]};

  auto read_mlp = [&](int layers) {
    std::vector<ad::Linear> mlp;
    for (int l = 0; l < layers; ++l) {
      ad::Linear layer;
      layer.w = read_tensor(in, true);
      layer.b = read_tensor(in, true);
      mlp.push_back(layer);
    }
    return mlp;
  };
  ck.field.cfg = fc;
  ck.field.trunk = read_mlp(fc.trunk_layers);
  ck.field.density_head = read_mlp(fc.head_layers);
  ck.field.color_head = read_mlp(fc.head_layers);
  if (has_encoder) {
    EncoderConfig ec;
    ec.image_w = static_cast<int>(h[10]);
    ec.image_h = static_cast<int>(h[11]);
    ec.patch = static_cast<int>(h[12]);
    ec.embed_dim = static_cast<int>(h[13]);
    ec.hidden = static_cast<int>(h[14]);
    ec.code_dim = static_cast<int>(h[15]);
    Rng dummy(0);
    EncoderParams enc = make_encoder(ec, dummy);  // rebuilds patch index
    enc.patch_embed.w = read_tensor(in, true);
    enc.patch_embed.b = read_tensor(in, true);
    enc.mlp = read_mlp(3);
    ck.encoder = std::move(enc);
  }
  if (has_disc) {
    DiscriminatorConfig dc;
    dc.patch = static_cast<int>(h[16]);
    dc.hidden1 = static_cast<int>(h[17]);
    dc.hidden2 = static_cast<int>(h[18]);
    DiscriminatorParams d;
    d.cfg = dc;
    d.mlp = read_mlp(3);
    ck.disc = std::move(d);
  }
  return ck;
}

}  // namespace genn2n
