#include "lrnmt/checkpoint.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>

namespace lrnmt {

namespace {

constexpr const char* kMagic = "#lrnmt-checkpoint";
constexpr const char* kVersion = "v1";

std::map<std::string, std::string> parse_kv(std::istringstream& ls) {
  std::map<std::string, std::string> kv;
  std::string item;
  while (ls >> item) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw std::runtime_error("checkpoint: malformed field " + item);
    kv[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return kv;
}

std::string expect_line(std::istream& is, const std::string& keyword) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("checkpoint: truncated before " + keyword);
  if (line.rfind(keyword, 0) != 0)
    throw std::runtime_error("checkpoint: expected '" + keyword + "', got '" + line + "'");
  return line.substr(keyword.size());
}

}  // namespace

void save_checkpoint(std::ostream& os, const Checkpoint& ckpt) {
  const auto& c = ckpt.params.config;
  ckpt.params.check_shapes();
  os << kMagic << ' ' << kVersion << '\n';
  os << "config src_vocab=" << c.src_vocab << " tgt_vocab=" << c.tgt_vocab
     << " embed=" << c.embed << " hidden=" << c.hidden
     << " input_feeding=" << (c.input_feeding ? 1 : 0) << '\n';
  os << "vocab_hash src=" << std::hex << ckpt.src_vocab_hash << " tgt=" << ckpt.tgt_vocab_hash
     << std::dec << '\n';
  std::size_t n = 0;
  ckpt.params.for_each([&n](std::string_view, const Matrix&) { ++n; });
  os << "tensors " << n << '\n';
  ckpt.params.for_each([&os](std::string_view name, const Matrix& m) {
    os << "tensor " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    os << std::hexfloat;
    for (Eigen::Index k = 0; k < m.size(); ++k) os << (k ? " " : "") << m.data()[k];
    os << std::defaultfloat << '\n';
  });
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write checkpoint " + path);
  save_checkpoint(os, ckpt);
}

Checkpoint load_checkpoint(std::istream& is) {
  std::string header;
  std::getline(is, header);
  if (header != std::string(kMagic) + " " + kVersion)
    throw std::runtime_error("checkpoint: unsupported header '" + header + "'");

  std::istringstream cfg_line(expect_line(is, "config"));
  auto kv = parse_kv(cfg_line);
  ModelConfig cfg;
  try {
    cfg.src_vocab = std::stoi(kv.at("src_vocab"));
    cfg.tgt_vocab = std::stoi(kv.at("tgt_vocab"));
    cfg.embed = std::stoi(kv.at("embed"));
    cfg.hidden = std::stoi(kv.at("hidden"));
    cfg.input_feeding = std::stoi(kv.at("input_feeding")) != 0;
  } catch (const std::out_of_range&) {
    throw std::runtime_error("checkpoint: config line is missing a field");
  }

  Checkpoint ckpt;
  ckpt.params = zero_params(cfg);
  std::istringstream hash_line(expect_line(is, "vocab_hash"));
  kv = parse_kv(hash_line);
  ckpt.src_vocab_hash = std::stoull(kv.at("src"), nullptr, 16);
  ckpt.tgt_vocab_hash = std::stoull(kv.at("tgt"), nullptr, 16);

  const std::size_t n = std::stoul(expect_line(is, "tensors "));
  std::size_t seen = 0;
  ckpt.params.for_each([&](std::string_view name, Matrix& m) {
    std::istringstream th(expect_line(is, "tensor "));
    std::string got;
    Eigen::Index rows = 0, cols = 0;
    th >> got >> rows >> cols;
    if (got != name || rows != m.rows() || cols != m.cols())
      throw std::runtime_error("checkpoint: tensor '" + got + "' does not match expected '" +
                               std::string(name) + "'");
    std::string payload;
    if (!std::getline(is, payload))
      throw std::runtime_error("checkpoint: missing payload for " + got);
    const char* p = payload.c_str();
    for (Eigen::Index k = 0; k < m.size(); ++k) {
      char* end = nullptr;
      m.data()[k] = std::strtod(p, &end);
      if (end == p) throw std::runtime_error("checkpoint: short payload for " + got);
      p = end;
    }
    ++seen;
  });
  if (seen != n) throw std::runtime_error("checkpoint: tensor count mismatch");
  ckpt.params.check_finite();
  return ckpt;
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read checkpoint " + path);
  return load_checkpoint(is);
}

}  // namespace lrnmt
