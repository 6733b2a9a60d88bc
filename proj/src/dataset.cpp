#include "memeguard/dataset.hpp"

#include <cmath>
#include <unordered_set>

#include <json.hpp>

#include "memeguard/binary_io.hpp"

namespace memeguard {

using nlohmann::json;

std::optional<Category> category_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kCategoryNames.size(); ++i) {
    if (kCategoryNames[i] == name) return static_cast<Category>(i);
  }
  return std::nullopt;
}

int TagVector::category_count() const {
  int n = 0;
  for (auto f : flags) n += f != 0;
  return n;
}

void TagTable::insert(std::uint64_t id, TagVector tags) {
  if (index_.contains(id)) throw DatasetError("duplicate tag row for id " + std::to_string(id));
  index_.emplace(id, rows_.size());
  rows_.push_back({id, std::move(tags)});
}

const TagVector* TagTable::find(std::uint64_t id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &rows_[it->second].tags;
}

TagVector* TagTable::find(std::uint64_t id) {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &rows_[it->second].tags;
}

std::string_view to_string(SplitName name) {
  switch (name) {
    case SplitName::train: return "train";
    case SplitName::dev_seen: return "dev_seen";
    case SplitName::dev_unseen: return "dev_unseen";
    case SplitName::test_seen: return "test_seen";
    case SplitName::test_unseen: return "test_unseen";
    case SplitName::custom: return "custom";
  }
  return "custom";
}

SplitName split_name_from_stem(std::string_view stem) {
  for (auto n : {SplitName::train, SplitName::dev_seen, SplitName::dev_unseen, SplitName::test_seen,
                 SplitName::test_unseen}) {
    if (to_string(n) == stem) return n;
  }
  return SplitName::custom;
}

std::vector<std::uint64_t> SplitSet::ids() const {
  std::vector<std::uint64_t> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.id);
  return out;
}

LabelBalance class_balance(const SplitSet& split) {
  LabelBalance b;
  for (const auto& r : split.records) {
    if (!r.label) ++b.unlabeled;
    else if (*r.label == 1) ++b.hateful;
    else ++b.not_hateful;
  }
  return b;
}

namespace {

bool blank(std::string_view s) {
  return s.find_first_not_of(" \t\r\n\f\v") == std::string_view::npos;
}

MemeRecord record_from_json(const json& obj, const std::string& where) {
  if (!obj.is_object()) throw DatasetError(where + ": line is not a JSON object");
  MemeRecord rec;

  auto id_it = obj.find("id");
  if (id_it == obj.end()) throw DatasetError(where + ": missing required field 'id'");
  if (id_it->is_number_unsigned()) {
    rec.id = id_it->get<std::uint64_t>();
  } else if (id_it->is_number_integer() && id_it->get<std::int64_t>() >= 0) {
    rec.id = static_cast<std::uint64_t>(id_it->get<std::int64_t>());
  } else {
    throw DatasetError(where + ": field 'id' must be a non-negative integer");
  }

  auto img_it = obj.find("img");
  if (img_it == obj.end()) throw DatasetError(where + ": missing required field 'img'");
  if (!img_it->is_string()) throw DatasetError(where + ": field 'img' must be a string");
  rec.img = img_it->get<std::string>();

  auto text_it = obj.find("text");
  if (text_it == obj.end()) throw DatasetError(where + ": missing required field 'text'");
  if (!text_it->is_string()) throw DatasetError(where + ": field 'text' must be a string");
  rec.text = text_it->get<std::string>();
  if (blank(rec.text)) throw DatasetError(where + ": field 'text' is empty");

  auto label_it = obj.find("label");
  if (label_it != obj.end() && !label_it->is_null()) {
    if (!label_it->is_number_integer()) throw DatasetError(where + ": field 'label' must be 0 or 1");
    auto v = label_it->get<std::int64_t>();
    if (v != 0 && v != 1) throw DatasetError(where + ": field 'label' must be 0 or 1");
    rec.label = static_cast<int>(v);
  }
  return rec;
}

}  // namespace

SplitSet parse_jsonl(std::string_view text, SplitName name, const std::string& source_name) {
  SplitSet split;
  split.name = name;
  std::unordered_set<std::uint64_t> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (blank(line)) continue;

    const std::string where = source_name + ":" + std::to_string(line_no);
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DatasetError(where + ": malformed JSON (" + e.what() + ")");
    }
    auto rec = record_from_json(obj, where);
    if (!seen.insert(rec.id).second) {
      throw DatasetError(where + ": duplicate id " + std::to_string(rec.id));
    }
    split.records.push_back(std::move(rec));
  }
  return split;
}

SplitSet load_jsonl(const std::filesystem::path& path) {
  return parse_jsonl(read_file_text(path), split_name_from_stem(path.stem().string()), path.string());
}

SplitSet merge_dedup(const SplitSet& a, const SplitSet& b) {
  SplitSet out;
  out.name = a.name == b.name ? a.name : SplitName::custom;
  std::unordered_map<std::uint64_t, std::size_t> index;
  for (const auto& r : a.records) {
    if (index.emplace(r.id, out.records.size()).second) out.records.push_back(r);
  }
  for (const auto& r : b.records) {
    auto it = index.find(r.id);
    if (it == index.end()) {
      index.emplace(r.id, out.records.size());
      out.records.push_back(r);
      continue;
    }
    const auto& prev = out.records[it->second];
    if (prev.text != r.text || prev.label != r.label) {
      throw DatasetError("conflicting duplicate for id " + std::to_string(r.id) +
                         ": text or label differs between splits");
    }
  }
  return out;
}

void FeatureBank::add(std::uint64_t id, RegionMatrix features) {
  if (features.dim != dim_) {
    throw DatasetError("feature entry " + std::to_string(id) + " has dim " +
                       std::to_string(features.dim) + ", bank dim is " + std::to_string(dim_));
  }
  if (features.n_boxes < 1 || features.n_boxes > kMaxBoxes) {
    throw DatasetError("feature entry " + std::to_string(id) + " has " +
                       std::to_string(features.n_boxes) + " boxes; allowed range is 1.." +
                       std::to_string(kMaxBoxes));
  }
  if (features.values.size() != std::size_t(features.n_boxes) * features.dim) {
    throw DatasetError("feature entry " + std::to_string(id) + " value count does not match shape");
  }
  for (float v : features.values) {
    if (!std::isfinite(v)) {
      throw DatasetError("feature entry " + std::to_string(id) + " contains a non-finite value");
    }
  }
  if (index_.contains(id)) throw DatasetError("duplicate feature entry for id " + std::to_string(id));
  index_.emplace(id, entries_.size());
  entries_.push_back({id, std::make_shared<const RegionMatrix>(std::move(features))});
}

std::shared_ptr<const RegionMatrix> FeatureBank::find(std::uint64_t id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : entries_[it->second].features;
}

void FeatureBank::merge(const FeatureBank& other) {
  if (other.size() == 0) return;
  if (entries_.empty()) dim_ = other.dim_;
  if (other.dim_ != dim_) throw DatasetError("cannot merge feature banks of different dims");
  for (const auto& e : other.entries_) {
    if (index_.contains(e.id)) throw DatasetError("duplicate feature entry for id " + std::to_string(e.id));
    index_.emplace(e.id, entries_.size());
    entries_.push_back(e);
  }
}

FeatureBank decode_features(std::span<const std::byte> bytes) {
  ByteReader in(bytes);
  in.expect_magic("MFB1");
  const auto count = in.u32();
  const auto dim = in.u32();
  if (dim == 0) throw FormatError("MFB1 dim must be positive");
  FeatureBank bank(dim);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto id = in.u64();
    const auto n_boxes = in.u32();
    if (n_boxes > kMaxBoxes) {
      throw FormatError("MFB1 entry " + std::to_string(id) + " claims " + std::to_string(n_boxes) +
                        " boxes (max " + std::to_string(kMaxBoxes) + ")");
    }
    const std::size_t n = std::size_t(n_boxes) * dim;
    if (in.remaining() / 4 < n) {
      throw FormatError("truncated payload in MFB1 entry " + std::to_string(id));
    }
    RegionMatrix m{n_boxes, dim, std::vector<float>(n)};
    for (auto& v : m.values) v = in.f32();
    bank.add(id, std::move(m));
  }
  if (in.remaining() != 0) {
    throw FormatError("MFB1 has " + std::to_string(in.remaining()) + " trailing bytes");
  }
  return bank;
}

std::vector<std::byte> encode_features(const FeatureBank& bank) {
  ByteWriter out;
  out.magic("MFB1");
  out.u32(static_cast<std::uint32_t>(bank.size()));
  out.u32(bank.dim());
  for (const auto& e : bank.entries()) {
    out.u64(e.id);
    out.u32(e.features->n_boxes);
    for (float v : e.features->values) out.f32(v);
  }
  return out.bytes();
}

FeatureBank load_features(const std::filesystem::path& path) {
  auto bytes = read_file_bytes(path);
  try {
    return decode_features(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void save_features(const FeatureBank& bank, const std::filesystem::path& path) {
  write_file_atomic(path, encode_features(bank));
}

std::vector<Example> join(const SplitSet& split, const FeatureBank& bank, const TagTable* tags) {
  std::vector<std::uint64_t> missing;
  std::vector<Example> out;
  out.reserve(split.size());
  for (const auto& rec : split.records) {
    auto f = bank.find(rec.id);
    if (!f) {
      missing.push_back(rec.id);
      continue;
    }
    Example ex{rec, std::move(f), std::nullopt};
    if (tags) {
      if (const auto* t = tags->find(rec.id)) ex.tags = *t;
    }
    out.push_back(std::move(ex));
  }
  if (!missing.empty()) {
    std::string msg = "missing feature entries for " + std::to_string(missing.size()) + " id(s):";
    for (auto id : missing) msg += " " + std::to_string(id);
    throw DatasetError(msg);
  }
  return out;
}

}  // namespace memeguard
