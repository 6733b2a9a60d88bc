#include "memeguard/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string_view>

#include "memeguard/csv.hpp"
#include "memeguard/rng.hpp"

namespace memeguard {

namespace {

constexpr std::array<std::string_view, 48> kFiller = {
    "when", "you", "the", "monday", "coffee", "finally", "my", "friends", "look", "at",
    "this", "guy", "everyone", "says", "that", "me", "after", "work", "weekend", "plans",
    "cat", "dog", "party", "really", "best", "day", "ever", "nobody", "asked", "but",
    "still", "here", "we", "go", "again", "how", "it", "started", "ended", "mom",
    "teacher", "said", "no", "one", "is", "safe", "from", "memes"};

struct Planted {
  Category category;
  std::string_view term;
};

// Invented words; they stand in for user-supplied lexicon entries.
constexpr std::array<Planted, 14> kPlanted = {{
    {Category::racism, "grobnak"},
    {Category::racism, "velturi"},
    {Category::nationality, "quenlander"},
    {Category::nationality, "ostra folk"},
    {Category::sex, "mirbelle"},
    {Category::sex, "tovric"},
    {Category::religion, "zanthite"},
    {Category::religion, "orbeline"},
    {Category::pregnancy, "bumplet"},
    {Category::disability, "wobblenut"},
    {Category::profanity, "flargh"},
    {Category::profanity, "snorkwit"},
    {Category::profanity, "blatherwump"},
    {Category::profanity, "krunk"},
}};

std::string misspell(std::string_view term, Rng& rng) {
  std::string out(term);
  const auto pos = static_cast<std::size_t>(rng.below(out.size()));
  char c = out[pos];
  while (c == out[pos]) c = static_cast<char>('a' + rng.below(26));
  out[pos] = c;
  return out;
}

std::string random_text(Rng& rng, std::string_view planted) {
  const auto len = static_cast<std::size_t>(rng.between(4, 12));
  const auto at = planted.empty() ? len : static_cast<std::size_t>(rng.below(len + 1));
  std::string text;
  for (std::size_t i = 0; i <= len; ++i) {
    std::string_view word;
    if (i == at) {
      word = planted;
    } else if (i < len) {
      word = kFiller[rng.below(kFiller.size())];
    } else {
      continue;
    }
    if (!text.empty()) text.push_back(' ');
    text += word;
  }
  return text;
}

std::string planted_term(Rng& rng) {
  const auto& p = kPlanted[rng.below(kPlanted.size())];
  if (p.category == Category::profanity && p.term.size() >= 5 && rng.uniform() < 0.3) {
    return misspell(p.term, rng);
  }
  return std::string(p.term);
}

}  // namespace

SyntheticDataset generate_memes(const SyntheticConfig& cfg) {
  if (cfg.n_boxes < 1 || cfg.n_boxes > static_cast<int>(kMaxBoxes)) throw std::invalid_argument("n_boxes out of range");
  if (cfg.signal_dims > cfg.region_dim) throw std::invalid_argument("signal_dims exceeds region_dim");

  SyntheticDataset out{{SplitName::custom, {}}, FeatureBank(static_cast<std::uint32_t>(cfg.region_dim))};
  Rng rng(derive_seed(cfg.seed, 0x3E3E));
  Rng feat_rng(derive_seed(cfg.seed, 0xFEA7));
  for (std::size_t i = 0; i < cfg.n; ++i) {
    const std::uint64_t id = cfg.first_id + i;
    const int label = rng.uniform() < cfg.hateful_rate ? 1 : 0;
    const bool hidden = label == 1 && rng.uniform() < cfg.hidden_fraction;
    const bool plant = hidden || (label == 0 && rng.uniform() < cfg.tag_noise);
    const std::string term = plant ? planted_term(rng) : std::string();

    MemeRecord rec;
    rec.id = id;
    rec.img = "img/" + std::to_string(id) + ".png";
    rec.text = random_text(rng, term);
    rec.label = label;
    out.split.records.push_back(std::move(rec));

    RegionMatrix m{static_cast<std::uint32_t>(cfg.n_boxes), static_cast<std::uint32_t>(cfg.region_dim), {}};
    m.values.resize(std::size_t(m.n_boxes) * m.dim);
    const double shift = (label == 1 && !hidden) ? cfg.signal : 0.0;
    for (std::uint32_t b = 0; b < m.n_boxes; ++b) {
      for (std::uint32_t c = 0; c < m.dim; ++c) {
        const double v = feat_rng.normal() + (static_cast<int>(c) < cfg.signal_dims ? shift : 0.0);
        m.values[std::size_t(b) * m.dim + c] = static_cast<float>(v);
      }
    }
    out.bank.add(id, std::move(m));
  }
  return out;
}

SplitSet carve(const SplitSet& split, std::size_t begin, std::size_t end, SplitName name) {
  if (begin > end || end > split.size()) throw std::out_of_range("carve: range outside split");
  SplitSet out;
  out.name = name;
  out.records.assign(split.records.begin() + static_cast<std::ptrdiff_t>(begin),
                     split.records.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

std::string synthetic_lexicon_text() {
  std::string out = "# Synthetic placeholder lexicon (invented words)\n";
  for (const auto& p : kPlanted) {
    out += std::string(kCategoryNames[static_cast<std::size_t>(p.category)]) + "\t" + std::string(p.term) + "\n";
  }
  return out;
}

std::string synthetic_hatexplain_csv(const SplitSet& split, std::uint64_t seed, std::size_t every) {
  Rng rng(derive_seed(seed, 0x4A7E));
  std::string out = "id,proba\n";
  for (std::size_t i = 0; i < split.size(); ++i) {
    const auto& r = split.records[i];
    const double base = r.label.value_or(0) == 1 ? 0.35 : 0.15;
    const double p = std::clamp(base + 0.15 * rng.normal(), 0.0, 1.0);
    if (every == 0 || i % every != 0) continue;
    out += std::to_string(r.id) + "," + format_fixed(p, 6) + "\n";
  }
  return out;
}

SimulatedStack simulate_base_models(std::size_t n, int n_models, const BaseModelSim& sim, std::uint64_t seed,
                                    std::uint64_t first_id) {
  if (n_models < 1) throw std::invalid_argument("need at least one model");
  SimulatedStack out;
  Rng rng(derive_seed(seed, 0xBA5E));
  std::vector<double> latent(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t id = first_id + i;
    const int y = rng.uniform() < sim.hateful_rate ? 1 : 0;
    const bool tagged = rng.uniform() < (y ? sim.tag_rate_pos : sim.tag_rate_neg);
    TagVector t;
    if (tagged) t.set(rng.uniform() < 0.5 ? Category::racism : Category::religion);
    const double visible = (y == 1 && !tagged) ? sim.separation : 0.0;
    latent[i] = visible + sim.shared_noise * rng.normal();
    out.ids.push_back(id);
    out.labels.push_back(y);
    out.tags.insert(id, t);
  }
  for (int m = 0; m < n_models; ++m) {
    Rng mrng(derive_seed(seed, 0x100 + static_cast<std::uint64_t>(m)));
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double s = latent[i] + sim.model_noise * mrng.normal() - sim.separation / 2.0;
      p[i] = 1.0 / (1.0 + std::exp(-s));
    }
    out.models.push_back(make_predictions("model_" + std::to_string(m), out.ids, p));
  }
  return out;
}

}  // namespace memeguard
