#include "lrnmt/synth.hpp"

#include <filesystem>
#include <stdexcept>
#include <unordered_set>

#include "lrnmt/rng.hpp"

namespace lrnmt {

void SynthSpec::validate() const {
  if (n_roots < 1) throw std::invalid_argument("n_roots must be >= 1");
  if (n_affixes < 1 || n_affixes > 40) throw std::invalid_argument("n_affixes must be in [1, 40]");
  if (n_roots > 2000) throw std::invalid_argument("n_roots must be <= 2000");
  if (!(affix_share >= 0.0 && affix_share <= 1.0))
    throw std::invalid_argument("affix_share must be in [0, 1]");
  if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0))
    throw std::invalid_argument("mutation_rate must be in [0, 1]");
  if (parent_sentences < 1) throw std::invalid_argument("parent_sentences must be >= 1");
  if (child_sentences < 10) throw std::invalid_argument("child_sentences must be >= 10");
  if (min_words < 1 || max_words < min_words)
    throw std::invalid_argument("need 1 <= min_words <= max_words");
}

namespace {

constexpr std::string_view kConsonants = "bdgklmnprstyz";
constexpr std::string_view kVowels = "aeiou";
// The gloss language uses a disjoint-looking letter inventory.
constexpr std::string_view kGlossConsonants = "bcfhjlmnrstvw";
constexpr std::string_view kGlossVowels = "aeio";

bool is_vowel(char c) { return kVowels.find(c) != std::string_view::npos; }

std::string syllables(Rng& rng, std::size_t n, std::string_view cons, std::string_view vow) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    s += cons[rng.below(cons.size())];
    s += vow[rng.below(vow.size())];
  }
  return s;
}

// Draws `n` distinct strings, none of them in `taken`.
std::vector<std::string> distinct(Rng& rng, std::size_t n, std::size_t min_syl,
                                  std::size_t max_syl, std::string_view cons,
                                  std::string_view vow, std::unordered_set<std::string>& taken) {
  std::vector<std::string> out;
  while (out.size() < n) {
    const std::size_t syl = min_syl + rng.below(max_syl - min_syl + 1);
    std::string s = syllables(rng, syl, cons, vow);
    if (taken.insert(s).second) out.push_back(std::move(s));
  }
  return out;
}

// Replaces one letter by another of the same class.
std::string mutate(Rng& rng, const std::string& root) {
  std::string s = root;
  const std::size_t pos = rng.below(s.size());
  const std::string_view pool = is_vowel(s[pos]) ? kVowels : kConsonants;
  char c = s[pos];
  while (c == s[pos]) c = pool[rng.below(pool.size())];
  s[pos] = c;
  return s;
}

std::set<std::string> words_of(const std::vector<std::string>& roots,
                               const std::vector<std::string>& affixes) {
  std::set<std::string> out;
  for (const auto& r : roots)
    for (const auto& a : affixes) out.insert(r + a);
  return out;
}

}  // namespace

std::set<std::string> SynthLexicon::parent_words() const {
  return words_of(parent_roots, parent_affixes);
}

std::set<std::string> SynthLexicon::child_words() const {
  return words_of(child_roots, child_affixes);
}

SynthData gen_synthetic(const SynthSpec& spec) {
  spec.validate();
  SynthData d;
  SynthLexicon& lex = d.lexicon;

  {
    Rng rng(derive_seed(spec.seed, 1));
    std::unordered_set<std::string> taken;
    lex.parent_roots = distinct(rng, spec.n_roots, 2, 3, kConsonants, kVowels, taken);
    lex.child_roots = lex.parent_roots;
    for (auto& r : lex.child_roots) {
      if (!rng.bernoulli(spec.mutation_rate)) continue;
      std::string m = mutate(rng, r);
      while (!taken.insert(m).second) m = mutate(rng, r);
      r = std::move(m);
    }
  }
  {
    // Affixes are vowel-initial so root + affix segments cleanly.
    Rng rng(derive_seed(spec.seed, 2));
    std::unordered_set<std::string> taken;
    auto affix = [&rng, &taken] {
      for (;;) {
        std::string a(1, kVowels[rng.below(kVowels.size())]);
        a += kConsonants[rng.below(kConsonants.size())];
        if (rng.bernoulli(0.5)) a += kVowels[rng.below(kVowels.size())];
        if (taken.insert(a).second) return a;
      }
    };
    for (std::size_t k = 0; k < spec.n_affixes; ++k) lex.parent_affixes.push_back(affix());
    for (std::size_t k = 0; k < spec.n_affixes; ++k)
      lex.child_affixes.push_back(rng.bernoulli(spec.affix_share) ? lex.parent_affixes[k]
                                                                  : affix());
  }
  {
    Rng rng(derive_seed(spec.seed, 3));
    std::unordered_set<std::string> taken;
    // Affix 0 is glossed by nothing; the rest by a one-syllable particle.
    // Particles go first: with many roots the short root glosses would
    // otherwise use up every single syllable.
    lex.affix_glosses.push_back("");
    for (auto& g : distinct(rng, spec.n_affixes - 1, 1, 1, kGlossConsonants, kGlossVowels, taken))
      lex.affix_glosses.push_back(std::move(g));
    lex.root_glosses = distinct(rng, spec.n_roots, 1, 2, kGlossConsonants, kGlossVowels, taken);
  }

  auto sentence = [&](Rng& rng, const std::vector<std::string>& roots,
                      const std::vector<std::string>& affixes) {
    SentencePair p;
    const std::size_t n = spec.min_words + rng.below(spec.max_words - spec.min_words + 1);
    for (std::size_t w = 0; w < n; ++w) {
      const std::size_t r = rng.below(roots.size());
      const std::size_t a = rng.below(affixes.size());
      p.source.push_back(roots[r] + affixes[a]);
      p.target.push_back(lex.root_glosses[r]);
      if (!lex.affix_glosses[a].empty()) p.target.push_back(lex.affix_glosses[a]);
    }
    p.source.push_back(".");
    p.target.front() = text::capitalize(p.target.front());
    p.target.push_back(".");
    return p;
  };

  auto generate = [&](std::uint64_t stream, std::size_t count,
                      const std::vector<std::string>& roots,
                      const std::vector<std::string>& affixes) {
    Rng rng(derive_seed(spec.seed, stream));
    std::vector<SentencePair> pairs;
    std::unordered_set<std::string> seen;
    // Distinct sources keep the splits disjoint. Bounded retries guard
    // against specs with fewer possible sentences than requested.
    std::size_t attempts = 0;
    while (pairs.size() < count && attempts < 100 * count) {
      ++attempts;
      SentencePair p = sentence(rng, roots, affixes);
      if (!seen.insert(text::join(p.source)).second) continue;
      p.origin_line = pairs.size() + 1;
      pairs.push_back(std::move(p));
    }
    if (pairs.size() < count)
      throw std::invalid_argument("gen_synthetic: cannot draw enough distinct sentences");
    return pairs;
  };

  d.parent = ParallelCorpus("par", "gls", generate(4, spec.parent_sentences, lex.parent_roots,
                                                   lex.parent_affixes));
  auto child = generate(5, spec.child_sentences, lex.child_roots, lex.child_affixes);
  const std::size_t n_train = spec.child_sentences * 8 / 10;
  const std::size_t n_dev = (spec.child_sentences - n_train) / 2;
  auto slice = [&child](std::size_t b, std::size_t e) {
    std::vector<SentencePair> out(child.begin() + static_cast<std::ptrdiff_t>(b),
                                  child.begin() + static_cast<std::ptrdiff_t>(e));
    for (std::size_t i = 0; i < out.size(); ++i) out[i].origin_line = i + 1;
    return ParallelCorpus("chd", "gls", std::move(out));
  };
  d.child_train = slice(0, n_train);
  d.child_dev = slice(n_train, n_train + n_dev);
  d.child_test = slice(n_train + n_dev, child.size());
  return d;
}

void write_synthetic(const SynthData& data, const std::string& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&dir](const ParallelCorpus& c, const std::string& name) {
    std::vector<std::string> src, tgt;
    for (const auto& p : c.pairs()) {
      src.push_back(detokenize(p.source));
      tgt.push_back(detokenize(p.target));
    }
    write_lines(dir + "/" + name + ".src", src);
    write_lines(dir + "/" + name + ".tgt", tgt);
  };
  write(data.parent, "parent");
  write(data.child_train, "train");
  write(data.child_dev, "dev");
  write(data.child_test, "test");
}

}  // namespace lrnmt
