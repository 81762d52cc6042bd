#include "lrnmt/train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "lrnmt/bleu.hpp"
#include "lrnmt/rng.hpp"

namespace lrnmt {

void TrainConfig::validate() const {
  if (minibatch_size < 1) throw std::invalid_argument("minibatch_size must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
    throw std::invalid_argument("dropout_rate must be in [0, 1)");
  if (!(clip_norm > 0.0)) throw std::invalid_argument("clip_norm must be > 0");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (eval_every < 1) throw std::invalid_argument("eval_every must be >= 1");
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("rho must be in (0, 1)");
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be > 0");
  if (dev_beam < 1) throw std::invalid_argument("dev_beam must be >= 1");
  if (alpha < 0.0) throw std::invalid_argument("alpha must be >= 0");
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(std::string_view key, std::string_view value) {
  std::istringstream in{std::string(value)};
  T v{};
  in >> v;
  if (!in || !(in >> std::ws).eof())
    throw std::invalid_argument("bad value for " + std::string(key) + ": '" + std::string(value) +
                                "'");
  return v;
}

bool parse_flag(std::string_view key, std::string_view value) {
  if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
  if (value == "0" || value == "false" || value == "no" || value == "off") return false;
  throw std::invalid_argument("bad flag for " + std::string(key) + ": '" + std::string(value) +
                              "'");
}

}  // namespace

void set_train_option(TrainConfig& c, std::string_view key, std::string_view value) {
  if (key == "minibatch_size") c.minibatch_size = parse_number<std::size_t>(key, value);
  else if (key == "dropout_rate") c.dropout_rate = parse_number<double>(key, value);
  else if (key == "clip_norm") c.clip_norm = parse_number<double>(key, value);
  else if (key == "epochs") c.epochs = parse_number<int>(key, value);
  else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "freeze_target_embeddings") c.freeze_target_embeddings = parse_flag(key, value);
  else if (key == "eval_every") c.eval_every = parse_number<int>(key, value);
  else if (key == "max_steps") {
    if (value == "none" || value.empty()) c.max_steps.reset();
    else c.max_steps = parse_number<std::size_t>(key, value);
  } else if (key == "rho") c.rho = parse_number<double>(key, value);
  else if (key == "eps") c.eps = parse_number<double>(key, value);
  else if (key == "dev_beam") c.dev_beam = parse_number<std::size_t>(key, value);
  else if (key == "alpha") c.alpha = parse_number<double>(key, value);
  else throw std::invalid_argument("unknown training option '" + std::string(key) + "'");
}

TrainConfig parse_train_config(std::istream& is, TrainConfig base) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    set_train_option(base, trim(std::string_view(t).substr(0, eq)),
                     trim(std::string_view(t).substr(eq + 1)));
  }
  return base;
}

TrainConfig load_train_config(const std::string& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  return parse_train_config(in, std::move(base));
}

void write_train_config(std::ostream& os, const TrainConfig& c) {
  os << std::setprecision(17);
  os << "minibatch_size = " << c.minibatch_size << '\n'
     << "dropout_rate = " << c.dropout_rate << '\n'
     << "clip_norm = " << c.clip_norm << '\n'
     << "epochs = " << c.epochs << '\n'
     << "seed = " << c.seed << '\n'
     << "freeze_target_embeddings = " << (c.freeze_target_embeddings ? "true" : "false") << '\n'
     << "eval_every = " << c.eval_every << '\n'
     << "max_steps = " << (c.max_steps ? std::to_string(*c.max_steps) : "none") << '\n'
     << "rho = " << c.rho << '\n'
     << "eps = " << c.eps << '\n'
     << "dev_beam = " << c.dev_beam << '\n'
     << "alpha = " << c.alpha << '\n';
}

int epoch_budget(bool is_bpe, int base_epochs) {
  if (base_epochs < 1) throw std::invalid_argument("epoch_budget: base_epochs must be >= 1");
  return is_bpe ? (base_epochs + 1) / 2 : base_epochs;
}

std::optional<double> TrainReport::best_bleu() const {
  for (const auto& e : evals)
    if (e.epoch == best_epoch) return e.bleu;
  return std::nullopt;
}

void TrainReport::write_rows(std::ostream& os) const {
  os << "epoch\tloss\tdev_bleu\n";
  std::size_t k = 0;
  for (std::size_t e = 0; e < epoch_loss.size(); ++e) {
    const int epoch = static_cast<int>(e) + 1;
    os << epoch << '\t' << std::setprecision(10) << epoch_loss[e] << '\t';
    while (k < evals.size() && evals[k].epoch < epoch) ++k;
    if (k < evals.size() && evals[k].epoch == epoch) os << std::setprecision(10) << evals[k].bleu;
    else os << '-';
    os << '\n';
  }
}

TrainResult train(const Seq2SeqParams& initial, const std::vector<IdPair>& data,
                  const TrainConfig& config, const DevScorer& dev, const FreezeMask& frozen,
                  const TrainLogger& log) {
  config.validate();
  if (data.empty()) throw std::invalid_argument("train: empty training corpus");
  initial.check_shapes();
  const auto t0 = std::chrono::steady_clock::now();

  std::set<std::string> frozen_names = frozen.tensors();
  if (config.freeze_target_embeddings) frozen_names.insert("tgt_embed");
  const FreezeMask mask(frozen_names);

  TrainResult result{initial, {}};
  Seq2SeqParams params = initial;
  AdadeltaState opt = AdadeltaState::zeros_like(params, config.rho, config.eps);
  GradientSet grads = GradientSet::zeros_like(params);
  Rng shuffler(derive_seed(config.seed, 0));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::optional<double> best;
  std::size_t steps = 0;
  auto out_of_steps = [&] { return config.max_steps && steps >= *config.max_steps; };

  for (int epoch = 1; epoch <= config.epochs && !out_of_steps(); ++epoch) {
    shuffler.shuffle(order);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size() && !out_of_steps();
         start += config.minibatch_size) {
      const std::size_t end = std::min(order.size(), start + config.minibatch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      const std::uint64_t batch_seed = derive_seed(config.seed, 1 + steps);
      grads.set_zero();
      for (std::size_t k = start; k < end; ++k) {
        const IdPair& pair = data[order[k]];
        ForwardResult fr;
        try {
          fr = forward_loss(params, pair, config.dropout_rate, derive_seed(batch_seed, k - start));
        } catch (const NonFiniteError& e) {
          throw NonFiniteError("train: non-finite loss in epoch " + std::to_string(epoch) +
                               ", batch " + std::to_string(start / config.minibatch_size + 1) +
                               " (training pair " + std::to_string(order[k] + 1) + ")");
        }
        loss_sum += fr.loss;
        ++seen;
        accumulate_gradients(params, fr.trace, scale, grads);
      }
      clip_gradients_in_place(grads, config.clip_norm);
      adadelta_update(opt, grads, params, mask);
      ++steps;
    }
    if (seen == 0) break;
    result.report.epoch_loss.push_back(loss_sum / static_cast<double>(seen));

    const bool last = epoch == config.epochs || out_of_steps();
    std::ostringstream line;
    line << "epoch " << epoch << " loss " << std::setprecision(6) << result.report.epoch_loss.back();
    if (dev && (epoch % config.eval_every == 0 || last)) {
      const double b = dev(params);
      result.report.evals.push_back({epoch, b});
      line << " dev_bleu " << b;
      if (!best || b > *best) {
        best = b;
        result.report.best_epoch = epoch;
        result.params = params;
      }
    }
    if (!dev) {
      result.report.best_epoch = epoch;
      result.params = params;
    }
    if (log) log(line.str());
  }
  result.report.steps = steps;
  result.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

double corpus_loss(const Seq2SeqParams& params, const std::vector<IdPair>& data) {
  if (data.empty()) throw std::invalid_argument("corpus_loss: empty corpus");
  double total = 0.0;
  std::size_t tokens = 0;
  for (const auto& p : data) {
    const std::size_t n = p.target.size() + 1;
    total += evaluate_loss(params, p) * static_cast<double>(n);
    tokens += n;
  }
  return total / static_cast<double>(tokens);
}

DevScorer make_bleu_scorer(DevSet dev, const Vocabulary& target_vocab, bool subword,
                           BeamConfig beam) {
  if (dev.sources.size() != dev.references.size())
    throw std::invalid_argument("make_bleu_scorer: source/reference count mismatch");
  if (dev.sources.empty()) throw std::invalid_argument("make_bleu_scorer: empty dev set");
  return [dev = std::move(dev), &target_vocab, subword, beam](const Seq2SeqParams& params) {
    std::vector<std::string> hyps;
    hyps.reserve(dev.sources.size());
    for (const auto& src : dev.sources)
      hyps.push_back(text::join(translate(params, src, target_vocab, beam, subword).tokens));
    return bleu(hyps, dev.references, BleuConfig{true, true});
  };
}

}  // namespace lrnmt
