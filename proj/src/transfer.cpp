#include "lrnmt/transfer.hpp"

#include <algorithm>
#include <stdexcept>

namespace lrnmt {

std::string to_string(TransferMode mode) {
  switch (mode) {
    case TransferMode::none: return "none";
    case TransferMode::positional: return "positional";
    case TransferMode::shared_surface: return "shared_surface";
  }
  return "?";
}

TransferMode parse_transfer_mode(std::string_view s) {
  if (s == "none") return TransferMode::none;
  if (s == "positional") return TransferMode::positional;
  if (s == "shared_surface" || s == "shared-surface" || s == "shared") return TransferMode::shared_surface;
  throw std::invalid_argument("unknown transfer mode '" + std::string(s) + "'");
}

std::size_t VocabAlignment::mapped() const {
  return static_cast<std::size_t>(
      std::count_if(parent_of.begin(), parent_of.end(), [](int p) { return p != kFresh; }));
}

VocabAlignment align_positional(const Vocabulary& parent, const Vocabulary& child) {
  VocabAlignment a;
  a.parent_of.resize(child.size(), kFresh);
  for (std::size_t i = 0; i < std::min(parent.size(), child.size()); ++i)
    a.parent_of[i] = static_cast<int>(i);
  return a;
}

VocabAlignment align_shared_surface(const Vocabulary& parent, const Vocabulary& child) {
  VocabAlignment a;
  a.parent_of.resize(child.size(), kFresh);
  for (std::size_t i = 0; i < child.size(); ++i) {
    if (i < static_cast<std::size_t>(kNumReserved)) {
      a.parent_of[i] = static_cast<int>(i);
      continue;
    }
    if (auto p = parent.find(child.tokens()[i])) a.parent_of[i] = *p;
  }
  return a;
}

VocabAlignment align(TransferMode mode, const Vocabulary& parent, const Vocabulary& child) {
  switch (mode) {
    case TransferMode::positional: return align_positional(parent, child);
    case TransferMode::shared_surface: return align_shared_surface(parent, child);
    case TransferMode::none: break;
  }
  VocabAlignment a;
  a.parent_of.assign(child.size(), kFresh);
  return a;
}

namespace {

void copy_rows(const Matrix& from, Matrix& to, const VocabAlignment& a, std::string_view name) {
  if (a.size() != static_cast<std::size_t>(to.rows()))
    throw std::invalid_argument("transfer: " + std::string(name) + " has " +
                                std::to_string(to.rows()) + " rows but the alignment covers " +
                                std::to_string(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    const int p = a.parent_of[i];
    if (p == kFresh) continue;
    if (p < 0 || p >= from.rows())
      throw std::invalid_argument("transfer: alignment points outside the parent " +
                                  std::string(name));
    to.row(static_cast<Eigen::Index>(i)) = from.row(p);
  }
}

}  // namespace

TransferResult transfer_params(const Seq2SeqParams& parent, const VocabAlignment& source_alignment,
                               const VocabAlignment& target_alignment, const TransferSpec& spec,
                               const ModelConfig& child_config) {
  child_config.validate();
  TransferResult r{init_params(child_config, spec.fresh_init_seed), {}};
  if (spec.mode == TransferMode::none) return r;

  parent.check_shapes();
  const ModelConfig& pc = parent.config;
  if (pc.embed != child_config.embed || pc.hidden != child_config.hidden ||
      pc.input_feeding != child_config.input_feeding)
    throw std::invalid_argument("transfer: parent and child architectures differ (embed " +
                                std::to_string(pc.embed) + "/" + std::to_string(child_config.embed) +
                                ", hidden " + std::to_string(pc.hidden) + "/" +
                                std::to_string(child_config.hidden) + ")");

  Seq2SeqParams& c = r.params;
  copy_rows(parent.src_embed, c.src_embed, source_alignment, "src_embed");
  copy_rows(parent.tgt_embed, c.tgt_embed, target_alignment, "tgt_embed");
  copy_rows(parent.out_proj, c.out_proj, target_alignment, "out_proj");
  copy_rows(parent.out_bias, c.out_bias, target_alignment, "out_bias");
  c.encoder = parent.encoder;
  c.decoder = parent.decoder;
  c.attn_general = parent.attn_general;
  c.attn_out = parent.attn_out;
  c.check_shapes();
  if (spec.freeze_target_embeddings) r.frozen = FreezeMask::target_embeddings();
  return r;
}

}  // namespace lrnmt
