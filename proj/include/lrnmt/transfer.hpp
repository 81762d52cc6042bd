#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lrnmt/model.hpp"
#include "lrnmt/optim.hpp"
#include "lrnmt/vocab.hpp"

namespace lrnmt {

enum class TransferMode { none, positional, shared_surface };

std::string to_string(TransferMode mode);
TransferMode parse_transfer_mode(std::string_view s);

struct TransferSpec {
  TransferMode mode = TransferMode::shared_surface;
  bool freeze_target_embeddings = false;  // ignored for mode none
  std::uint64_t fresh_init_seed = 0;
};

inline constexpr int kFresh = -1;

/// Child id -> parent id, or kFresh.
struct VocabAlignment {
  std::vector<int> parent_of;

  std::size_t size() const { return parent_of.size(); }
  std::size_t mapped() const;
  std::size_t fresh() const { return size() - mapped(); }
};

/// Child id i takes parent id i while both exist.
VocabAlignment align_positional(const Vocabulary& parent, const Vocabulary& child);

/// Child token takes the parent id of the same surface form.
VocabAlignment align_shared_surface(const Vocabulary& parent, const Vocabulary& child);

VocabAlignment align(TransferMode mode, const Vocabulary& parent, const Vocabulary& child);

struct TransferResult {
  Seq2SeqParams params;
  FreezeMask frozen;
};

/// Child initialisation. Every tensor starts from init_params(child_config,
/// fresh_init_seed); source-indexed rows are then copied through
/// `source_alignment`, target-indexed rows (tgt_embed, out_proj, out_bias)
/// through `target_alignment`, and all other tensors verbatim. Throws
/// std::invalid_argument when the architectures differ or an alignment
/// does not fit.
TransferResult transfer_params(const Seq2SeqParams& parent, const VocabAlignment& source_alignment,
                               const VocabAlignment& target_alignment, const TransferSpec& spec,
                               const ModelConfig& child_config);

}  // namespace lrnmt
