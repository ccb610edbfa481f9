#ifndef PABST_CHECKPOINT_HPP_
#define PABST_CHECKPOINT_HPP_

#include <string>

#include "pabst/lm.hpp"
#include "pabst/vocab.hpp"

namespace pabst {

// A trained decoder together with the vocabulary it was trained on.
struct LanguageModel {
  Vocabulary vocab;
  LMParams params;
};

// Binary layout (little-endian):
//   8 bytes   magic "PBSTLM1\0"
//   5 x u32   d_model, n_layers, n_heads, vocab_size, max_positions
//   f32 ...   every tensor in LMParams::for_each_tensor order, row-major
// The vocabulary is written next to it as "<path>.vocab", one token per line.
void save_checkpoint(const std::string& path, const LanguageModel& model);
LanguageModel load_checkpoint(const std::string& path);

std::string vocab_path_for(const std::string& checkpoint_path);

}  // namespace pabst

#endif  // PABST_CHECKPOINT_HPP_
