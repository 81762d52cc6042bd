#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "lrnmt/model.hpp"

namespace lrnmt {

// Text header (version, dims, vocabulary hashes) followed by one line of
// hexadecimal floats per tensor, so a save/load round trip is bit-exact.
struct Checkpoint {
  Seq2SeqParams params;
  std::uint64_t src_vocab_hash = 0;
  std::uint64_t tgt_vocab_hash = 0;
};

void save_checkpoint(std::ostream& os, const Checkpoint& ckpt);
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(std::istream& is);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace lrnmt
