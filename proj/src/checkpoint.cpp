#include "pabst/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace pabst {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint IO assumes a little-endian host");

constexpr std::array<char, 8> kMagic = {'P', 'B', 'S', 'T', 'L', 'M', '1', '\0'};

void write_u32(std::ostream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

uint32_t read_u32(std::istream& in) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw ValidationError("truncated checkpoint header");
  return v;
}

}  // namespace

std::string vocab_path_for(const std::string& checkpoint_path) {
  return checkpoint_path + ".vocab";
}

void save_checkpoint(const std::string& path, const LanguageModel& model) {
  const LMParams& p = model.params;
  if (p.shape.vocab_size != model.vocab.size()) {
    throw ValidationError("vocabulary size does not match the model");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write checkpoint: " + path);
  out.write(kMagic.data(), kMagic.size());
  write_u32(out, p.shape.d_model);
  write_u32(out, p.shape.n_layers);
  write_u32(out, p.shape.n_heads);
  write_u32(out, p.shape.vocab_size);
  write_u32(out, p.shape.max_positions);
  p.for_each_tensor([&out](std::string_view, std::span<const double> t) {
    for (double v : t) {
      const float f = static_cast<float>(v);
      out.write(reinterpret_cast<const char*>(&f), sizeof(f));
    }
  });
  if (!out) throw ValidationError("failed writing checkpoint: " + path);
  model.vocab.save(vocab_path_for(path));
}

LanguageModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read checkpoint: " + path);
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw ValidationError("not a PBSTLM1 checkpoint: " + path);
  ModelShape shape;
  shape.d_model = read_u32(in);
  shape.n_layers = read_u32(in);
  shape.n_heads = read_u32(in);
  shape.vocab_size = read_u32(in);
  shape.max_positions = read_u32(in);
  LanguageModel model{Vocabulary::load(vocab_path_for(path)), LMParams::zeros(shape)};
  model.params.for_each_tensor([&in](std::string_view name, std::span<double> t) {
    for (double& v : t) {
      float f = 0.0f;
      in.read(reinterpret_cast<char*>(&f), sizeof(f));
      if (!in) throw ValidationError("truncated checkpoint tensor " + std::string(name));
      v = static_cast<double>(f);
    }
  });
  if (in.peek() != std::char_traits<char>::eof()) {
    throw ValidationError("trailing bytes after checkpoint tensors");
  }
  if (model.vocab.size() != shape.vocab_size) {
    throw ValidationError("vocabulary file does not match checkpoint header");
  }
  if (!model.params.all_finite()) throw NumericError("checkpoint contains non-finite values");
  return model;
}

}  // namespace pabst
