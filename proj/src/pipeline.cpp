#include "memeguard/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <set>
#include <unordered_map>

#include "memeguard/analysis.hpp"
#include "memeguard/binary_io.hpp"
#include "memeguard/dataset.hpp"
#include "memeguard/metrics.hpp"
#include "memeguard/predictions.hpp"
#include "memeguard/synthetic.hpp"

namespace memeguard {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Config

namespace {

class Section {
 public:
  Section(const json& j, std::string path, const fs::path& base) : j_(j), path_(std::move(path)), base_(base) {
    if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    auto it = find(key);
    if (it == j_.end()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw ConfigError(key_path(key) + ": wrong type (" + std::string(it->type_name()) + ")");
    }
  }

  void get_path(const char* key, fs::path& out) {
    std::string s;
    get(key, s);
    if (!s.empty()) out = resolve(s);
  }

  void get_paths(const char* key, std::vector<fs::path>& out) {
    std::vector<std::string> v;
    get(key, v);
    if (find(key) == j_.end()) return;
    out.clear();
    for (const auto& s : v) out.push_back(resolve(s));
  }

  void get_range(const char* key, std::pair<int, int>& out) {
    std::vector<int> v;
    get(key, v);
    if (find(key) == j_.end()) return;
    if (v.size() != 2) throw ConfigError(key_path(key) + ": expected [low, high]");
    out = {v[0], v[1]};
  }

  std::optional<Section> child(const char* key) {
    auto it = find(key);
    if (it == j_.end()) return std::nullopt;
    return Section(*it, key_path(key), base_);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.contains(it.key())) throw ConfigError(key_path(it.key()) + ": unknown key");
    }
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  json::const_iterator find(const char* key) {
    used_.insert(key);
    return j_.find(key);
  }

  fs::path resolve(const std::string& s) const {
    fs::path p(s);
    return p.is_absolute() ? p : base_ / p;
  }

  std::string where() const { return path_.empty() ? "<root>" : path_; }

  const json& j_;
  std::string path_;
  fs::path base_;
  std::set<std::string> used_;
};

template <typename F>
void validated(const std::string& key, F&& check) {
  try {
    check();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

std::vector<std::string> path_strings(const std::vector<fs::path>& v) {
  std::vector<std::string> out;
  for (const auto& p : v) out.push_back(p.string());
  return out;
}

}  // namespace

void PipelineConfig::propagate_seed() {
  model.seed = derive_seed(seed, 1);
  train.seed = derive_seed(seed, 2);
  ensemble.rf.seed = derive_seed(seed, 3);
}

PipelineConfig parse_config(const json& doc, const fs::path& base_dir) {
  PipelineConfig cfg;
  Section root(doc, "", base_dir);
  root.get("seed", cfg.seed);
  root.get_path("output_dir", cfg.output_dir);
  root.get("preset", cfg.preset);

  if (auto s = root.child("data")) {
    s->get_paths("splits", cfg.data.splits);
    s->get_path("train", cfg.data.train);
    s->get_path("val", cfg.data.val);
    s->get_paths("predict", cfg.data.predict);
    s->get_paths("features", cfg.data.features);
    s->get_path("lexicon", cfg.data.lexicon);
    s->get_path("hatexplain", cfg.data.hatexplain);
    s->get_path("tags", cfg.data.tags);
    s->get_path("model", cfg.data.model);
    s->get_paths("labels", cfg.data.labels);
    s->finish();
  }
  if (auto s = root.child("model")) {
    auto& m = cfg.model;
    s->get("vocab_size", m.vocab_size);
    s->get("d_model", m.d_model);
    s->get("n_layers", m.n_layers);
    s->get("n_heads", m.n_heads);
    s->get("d_ff", m.d_ff);
    s->get("max_text_len", m.max_text_len);
    s->get("max_boxes", m.max_boxes);
    s->get("region_dim", m.region_dim);
    s->get("dropout_rate", m.dropout_rate);
    s->finish();
    validated("model", [&] { m.validate(); });
  }
  if (auto s = root.child("train")) {
    auto& t = cfg.train;
    s->get("learning_rate", t.learning_rate);
    s->get("batch_size", t.batch_size);
    s->get("max_updates", t.max_updates);
    s->get("eval_every", t.eval_every);
    s->get("warmup_fraction", t.warmup_fraction);
    s->get("weight_decay", t.weight_decay);
    s->finish();
    validated("train", [&] { t.validate(); });
  }
  if (auto s = root.child("loss")) {
    std::string kind = std::string(to_string(cfg.loss.kind));
    s->get("kind", kind);
    s->get("gamma", cfg.loss.gamma);
    s->finish();
    validated("loss.kind", [&] { cfg.loss.kind = loss_kind_from_string(kind); });
    validated("loss.gamma", [&] { cfg.loss.validate(); });
  }
  if (auto s = root.child("tagger")) {
    s->get("k_profanity", cfg.tagger.k_profanity);
    s->get("min_fuzzy_length", cfg.tagger.min_fuzzy_length);
    s->finish();
    if (cfg.tagger.k_profanity < 0 || cfg.tagger.k_profanity > 2) {
      throw ConfigError("tagger.k_profanity: must be in [0, 2]");
    }
  }
  if (auto s = root.child("ensemble")) {
    auto& e = cfg.ensemble;
    s->get("method", e.method);
    s->get_paths("train_predictions", e.train_predictions);
    s->get_paths("train_labels", e.train_labels);
    s->get_paths("predictions", e.predictions);
    s->get("threshold", e.threshold);
    s->get("tie_to_hateful", e.tie_to_hateful);
    s->get("search", e.search);
    s->get("folds", e.folds);
    s->get("budget", e.budget);
    if (auto rf = s->child("rf")) {
      rf->get("n_trees", e.rf.n_trees);
      rf->get("max_depth", e.rf.max_depth);
      rf->get("min_samples_leaf", e.rf.min_samples_leaf);
      int fps = 0;
      rf->get("features_per_split", fps);
      if (fps > 0) e.rf.features_per_split = fps;
      rf->get("bootstrap", e.rf.bootstrap);
      rf->finish();
      validated("ensemble.rf", [&] { e.rf.validate(); });
    }
    if (auto sp = s->child("search_space")) {
      sp->get_range("n_trees", e.space.n_trees);
      sp->get_range("max_depth", e.space.max_depth);
      sp->get_range("min_samples_leaf", e.space.min_samples_leaf);
      sp->finish();
      validated("ensemble.search_space", [&] { e.space.validate(); });
    }
    s->finish();
    if (e.method != "majority" && e.method != "average" && e.method != "rf") {
      throw ConfigError("ensemble.method: expected majority, average or rf");
    }
    if (e.folds < 2) throw ConfigError("ensemble.folds: must be >= 2");
    if (e.budget < 1) throw ConfigError("ensemble.budget: must be >= 1");
  }
  if (auto s = root.child("evaluate")) {
    s->get_path("predictions", cfg.evaluate.predictions);
    s->get_paths("labels", cfg.evaluate.labels);
    s->get("threshold", cfg.evaluate.threshold);
    s->finish();
  }
  if (auto s = root.child("demo")) {
    auto& d = cfg.demo;
    s->get("n_train", d.n_train);
    s->get("n_dev_seen", d.n_dev_seen);
    s->get("n_dev_unseen", d.n_dev_unseen);
    s->get("dev_overlap", d.dev_overlap);
    s->get("n_test", d.n_test);
    s->get("n_boxes", d.n_boxes);
    s->get("region_dim", d.region_dim);
    s->get("signal", d.signal);
    s->get("hidden_fraction", d.hidden_fraction);
    s->get("max_updates", d.max_updates);
    s->finish();
    if (d.dev_overlap > std::min(d.n_dev_seen, d.n_dev_unseen)) {
      throw ConfigError("demo.dev_overlap: larger than a dev split");
    }
  }
  root.finish();
  cfg.propagate_seed();
  return cfg;
}

PipelineConfig load_config(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(read_file_text(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  auto base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  return parse_config(doc, base);
}

void apply_overrides(PipelineConfig& cfg, const Overrides& ov) {
  if (ov.seed) cfg.seed = *ov.seed;
  if (ov.output_dir) cfg.output_dir = *ov.output_dir;
  if (ov.preset) cfg.preset = *ov.preset;
  cfg.propagate_seed();
}

json PipelineConfig::to_json() const {
  json j;
  j["seed"] = seed;
  j["output_dir"] = output_dir.string();
  j["preset"] = preset;
  j["data"] = {{"splits", path_strings(data.splits)},
               {"train", data.train.string()},
               {"val", data.val.string()},
               {"predict", path_strings(data.predict)},
               {"features", path_strings(data.features)},
               {"lexicon", data.lexicon.string()},
               {"hatexplain", data.hatexplain.string()},
               {"tags", data.tags.string()},
               {"model", data.model.string()},
               {"labels", path_strings(data.labels)}};
  j["model"] = {{"vocab_size", model.vocab_size},     {"d_model", model.d_model},
                {"n_layers", model.n_layers},         {"n_heads", model.n_heads},
                {"d_ff", model.d_ff},                 {"max_text_len", model.max_text_len},
                {"max_boxes", model.max_boxes},       {"region_dim", model.region_dim},
                {"dropout_rate", model.dropout_rate}, {"seed", model.seed}};
  j["train"] = {{"learning_rate", train.learning_rate}, {"batch_size", train.batch_size},
                {"max_updates", train.max_updates},     {"eval_every", train.eval_every},
                {"warmup_fraction", train.warmup_fraction}, {"weight_decay", train.weight_decay},
                {"seed", train.seed}};
  j["loss"] = {{"kind", std::string(to_string(loss.kind))}, {"gamma", loss.gamma}};
  j["tagger"] = {{"k_profanity", tagger.k_profanity}, {"min_fuzzy_length", tagger.min_fuzzy_length}};
  j["ensemble"] = {
      {"method", ensemble.method},
      {"train_predictions", path_strings(ensemble.train_predictions)},
      {"train_labels", path_strings(ensemble.train_labels)},
      {"predictions", path_strings(ensemble.predictions)},
      {"threshold", ensemble.threshold},
      {"tie_to_hateful", ensemble.tie_to_hateful},
      {"search", ensemble.search},
      {"folds", ensemble.folds},
      {"budget", ensemble.budget},
      {"rf",
       {{"n_trees", ensemble.rf.n_trees},
        {"max_depth", ensemble.rf.max_depth},
        {"min_samples_leaf", ensemble.rf.min_samples_leaf},
        {"features_per_split", ensemble.rf.features_per_split.value_or(0)},
        {"bootstrap", ensemble.rf.bootstrap},
        {"seed", ensemble.rf.seed}}},
      {"search_space",
       {{"n_trees", {ensemble.space.n_trees.first, ensemble.space.n_trees.second}},
        {"max_depth", {ensemble.space.max_depth.first, ensemble.space.max_depth.second}},
        {"min_samples_leaf", {ensemble.space.min_samples_leaf.first, ensemble.space.min_samples_leaf.second}}}}};
  j["evaluate"] = {{"predictions", evaluate.predictions.string()},
                   {"labels", path_strings(evaluate.labels)},
                   {"threshold", evaluate.threshold}};
  j["demo"] = {{"n_train", demo.n_train},       {"n_dev_seen", demo.n_dev_seen},
               {"n_dev_unseen", demo.n_dev_unseen}, {"dev_overlap", demo.dev_overlap},
               {"n_test", demo.n_test},         {"n_boxes", demo.n_boxes},
               {"region_dim", demo.region_dim}, {"signal", demo.signal},
               {"hidden_fraction", demo.hidden_fraction}, {"max_updates", demo.max_updates}};
  return j;
}

// ---------------------------------------------------------------------------
// Stages

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Collects a stage's inputs and outputs; refuses to overwrite an input.
class Stage {
 public:
  Stage(std::string name, const PipelineConfig& cfg, std::ostream& log)
      : name_(std::move(name)), cfg_(cfg), log_(log) {}

  const fs::path& input(const fs::path& p, const char* key) {
    if (p.empty()) throw ConfigError(std::string(key) + ": required by '" + name_ + "'");
    if (!fs::exists(p)) throw ConfigError(std::string(key) + ": file not found: " + p.string());
    inputs_.insert(fs::weakly_canonical(p));
    return p;
  }

  void inputs(const std::vector<fs::path>& ps, const char* key) {
    if (ps.empty()) throw ConfigError(std::string(key) + ": required by '" + name_ + "'");
    for (const auto& p : ps) input(p, key);
  }

  void write(const fs::path& relative, std::span<const std::byte> data) {
    const auto path = cfg_.output_dir / relative;
    if (inputs_.contains(fs::weakly_canonical(path))) {
      throw std::runtime_error("refusing to overwrite input " + path.string());
    }
    write_file_atomic(path, data);
    artifacts_.push_back({{"path", relative.generic_string()},
                          {"bytes", data.size()},
                          {"fnv1a64", hex64(fnv1a64(data))}});
    log_ << "  wrote " << path.string() << "\n";
  }

  void write(const fs::path& relative, std::string_view text) {
    write(relative, std::as_bytes(std::span(text.data(), text.size())));
  }

  void note(const std::string& key, json value) { extra_[key] = std::move(value); }

  void finish() {
    const auto effective = cfg_.to_json();
    json m;
    m["subcommand"] = name_;
    m["version"] = std::string(kVersion);
    m["seed"] = cfg_.seed;
    m["config_hash"] = hex64(fnv1a64(effective.dump()));
    m["effective_config"] = effective;
    m["artifacts"] = artifacts_;
    if (!extra_.empty()) m["results"] = extra_;
    m["timestamp"] = utc_timestamp();
    write_file_atomic(cfg_.output_dir / (name_ + ".manifest.json"), m.dump(2) + "\n");
  }

  std::ostream& log() { return log_; }
  const PipelineConfig& cfg() const { return cfg_; }

 private:
  std::string name_;
  const PipelineConfig& cfg_;
  std::ostream& log_;
  std::set<fs::path> inputs_;
  json artifacts_ = json::array();
  json extra_ = json::object();
};

SplitSet load_merged(const std::vector<fs::path>& paths) {
  SplitSet merged = load_jsonl(paths.front());
  for (std::size_t i = 1; i < paths.size(); ++i) merged = merge_dedup(merged, load_jsonl(paths[i]));
  return merged;
}

FeatureBank load_banks(const std::vector<fs::path>& paths) {
  FeatureBank bank = load_features(paths.front());
  for (std::size_t i = 1; i < paths.size(); ++i) bank.merge(load_features(paths[i]));
  return bank;
}

std::unordered_map<std::uint64_t, int> label_map(const SplitSet& split) {
  std::unordered_map<std::uint64_t, int> out;
  for (const auto& r : split.records) {
    if (r.label) out.emplace(r.id, *r.label);
  }
  return out;
}

TagTable tag_records(const PipelineConfig& cfg, Stage& st, const SplitSet& split) {
  const auto lexicon = Lexicon::load(st.input(cfg.data.lexicon, "data.lexicon"));
  const Tagger tagger(lexicon, cfg.tagger);
  TagTable table = tagger.tag_split(split);
  if (!cfg.data.hatexplain.empty()) {
    auto attached = attach_hatexplain(std::move(table), read_csv(st.input(cfg.data.hatexplain, "data.hatexplain")));
    for (auto id : attached.unknown_ids) st.log() << "  warning: hatexplain id " << id << " not in tagged splits\n";
    table = std::move(attached.table);
  }
  return table;
}

void stage_tag(const PipelineConfig& cfg, std::ostream& log) {
  Stage st("tag", cfg, log);
  st.inputs(cfg.data.splits, "data.splits");
  const auto merged = load_merged(cfg.data.splits);
  const auto table = tag_records(cfg, st, merged);
  st.write("tags.csv", tags_to_csv(table));
  st.note("rows", table.size());
  st.finish();
}

void stage_train(const PipelineConfig& cfg, std::ostream& log) {
  Stage st("train", cfg, log);
  st.input(cfg.data.train, "data.train");
  st.input(cfg.data.val, "data.val");
  st.inputs(cfg.data.features, "data.features");
  const auto bank = load_banks(cfg.data.features);
  const auto train_ex = join(load_jsonl(cfg.data.train), bank);
  const auto val_ex = join(load_jsonl(cfg.data.val), bank);

  ModelConfig mcfg = cfg.model;
  TrainConfig tcfg = cfg.train;
  if (!cfg.preset.empty()) apply_preset(cfg.preset, train_ex.size(), mcfg, tcfg);
  log << "  training on " << train_ex.size() << " examples, validating on " << val_ex.size() << " ("
      << to_string(cfg.loss.kind) << ", " << tcfg.max_updates << " updates)\n";
  const auto trained = train(train_ex, val_ex, mcfg, tcfg, cfg.loss);
  log << "  best val AUROC " << format_fixed(trained.best_val_auroc, 4) << " at update " << trained.best_step << "\n";

  st.write("model.fmc", encode_checkpoint(trained.best));
  st.write("train_log.csv", history_to_csv(trained.history));
  st.note("best_val_auroc", trained.best_val_auroc);
  st.note("best_step", trained.best_step);
  st.finish();
}

void stage_predict(const PipelineConfig& cfg, std::ostream& log) {
  Stage st("predict", cfg, log);
  const fs::path model_path = cfg.data.model.empty() ? cfg.output_dir / "model.fmc" : cfg.data.model;
  const auto model = load_checkpoint(st.input(model_path, "data.model"));
  st.inputs(cfg.data.predict, "data.predict");
  st.inputs(cfg.data.features, "data.features");
  const auto bank = load_banks(cfg.data.features);
  for (const auto& p : cfg.data.predict) {
    const auto examples = join(load_jsonl(p), bank);
    const auto preds = predict(model, examples, p.stem().string());
    st.write("predictions_" + p.stem().string() + ".csv", predictions_to_csv(preds));
  }
  st.finish();
}

std::vector<PredictionSet> load_prediction_files(const std::vector<fs::path>& paths) {
  std::vector<PredictionSet> out;
  for (std::size_t j = 0; j < paths.size(); ++j) {
    // Position names the base model, so train-side and target-side files pair up by index.
    out.push_back(predictions_from_csv(read_csv(paths[j]), "model" + std::to_string(j)));
  }
  return out;
}

void stage_ensemble(const PipelineConfig& cfg, std::ostream& log) {
  Stage st("ensemble", cfg, log);
  const auto& e = cfg.ensemble;
  st.inputs(e.predictions, "ensemble.predictions");
  const auto target = align_predictions(load_prediction_files(e.predictions));

  PredictionSet out;
  out.model_name = "ensemble_" + e.method;
  if (e.method == "majority") {
    const auto vote = majority_vote(target, e.threshold, e.tie_to_hateful);
    for (std::size_t i = 0; i < target.n(); ++i) out.rows.push_back({target.ids[i], vote.proba[i], vote.labels[i]});
  } else if (e.method == "average") {
    out = make_predictions(out.model_name, target.ids, average_vote(target), e.threshold);
  } else {
    st.inputs(e.train_predictions, "ensemble.train_predictions");
    st.inputs(e.train_labels, "ensemble.train_labels");
    if (e.train_predictions.size() != e.predictions.size()) {
      throw ConfigError("ensemble.train_predictions: must list one file per base model, in the same order as ensemble.predictions");
    }
    const auto tags = tags_from_csv(read_csv(st.input(cfg.data.tags, "data.tags")));
    const auto train_pm = align_predictions(load_prediction_files(e.train_predictions));
    const auto labels = label_map(load_merged(e.train_labels));
    std::vector<int> y;
    for (auto id : train_pm.ids) {
      auto it = labels.find(id);
      if (it == labels.end()) throw std::runtime_error("no label for stacking id " + std::to_string(id));
      y.push_back(it->second);
    }
    const auto x_train = build_stack(train_pm, tags);
    const auto x_target = build_stack(target, tags);
    log << "  stacking on " << x_train.rows << " rows x " << x_train.cols << " features\n";

    RFConfig best = e.rf;
    if (e.search) {
      auto result = random_search_cv(x_train, y, e.space, e.folds, e.budget, derive_seed(cfg.seed, 4), e.rf);
      for (const auto& w : result.warnings) log << "  warning: " << w << "\n";
      best = result.best;
      st.write("cv_report.csv", cv_report_csv(result));
      log << "  best config: n_trees=" << best.n_trees << " max_depth=" << best.max_depth
          << " min_samples_leaf=" << best.min_samples_leaf << "\n";
    }
    const auto forest = rf_train(x_train, y, best);
    st.write("forest.rff", encode_forest(forest));
    out = make_predictions(out.model_name, target.ids, rf_predict(forest, x_target), e.threshold);
    st.note("rf", {{"n_trees", best.n_trees}, {"max_depth", best.max_depth}, {"min_samples_leaf", best.min_samples_leaf}});
  }
  st.write("ensemble_" + e.method + ".csv", predictions_to_csv(out));
  st.finish();
}

ScoredLabels score_predictions(const PredictionSet& preds, const SplitSet& truth) {
  const auto labels = label_map(truth);
  ScoredLabels data;
  for (const auto& r : preds.rows) {
    auto it = labels.find(r.id);
    if (it == labels.end()) throw std::runtime_error("no ground-truth label for id " + std::to_string(r.id));
    data.scores.push_back(r.proba);
    data.labels.push_back(it->second);
  }
  return data;
}

void stage_evaluate(const PipelineConfig& cfg, std::ostream& log) {
  Stage st("evaluate", cfg, log);
  const auto preds = load_predictions(st.input(cfg.evaluate.predictions, "evaluate.predictions"));
  st.inputs(cfg.evaluate.labels, "evaluate.labels");
  const auto data = score_predictions(preds, load_merged(cfg.evaluate.labels));
  const double auc = auroc(data);
  const double acc = accuracy(data, cfg.evaluate.threshold);
  log << "  auroc " << format_fixed(auc, 6) << "  acc " << format_fixed(acc, 6) << "\n";
  st.write("metrics.csv", metrics_report_csv(data, cfg.evaluate.threshold));
  st.note("auroc", auc);
  st.note("acc", acc);
  st.finish();
}

void stage_analyze(const PipelineConfig& cfg, std::ostream& log) {
  Stage st("analyze", cfg, log);
  st.inputs(cfg.data.labels, "data.labels");
  const auto split = load_merged(cfg.data.labels);
  const TagTable table = cfg.data.tags.empty() ? tag_records(cfg, st, split)
                                               : tags_from_csv(read_csv(st.input(cfg.data.tags, "data.tags")));
  std::vector<int> labels;
  std::vector<TagVector> tags;
  for (const auto& r : split.records) {
    if (!r.label) continue;
    const auto* t = table.find(r.id);
    if (!t) throw std::runtime_error("no tag row for id " + std::to_string(r.id));
    labels.push_back(*r.label);
    tags.push_back(*t);
  }
  log << "  analyzing " << labels.size() << " labeled memes\n";
  const auto rep = report(incidence(labels, tags), correlation(labels, tags));
  st.write("incidence.csv", rep.incidence_csv);
  st.write("correlation.csv", rep.correlation_csv);
  st.write("analysis_report.txt", rep.text);
  st.finish();
}

std::string split_jsonl(const SplitSet& split) {
  std::string out;
  for (const auto& r : split.records) {
    json j = {{"id", r.id}, {"img", r.img}, {"text", r.text}};
    if (r.label) j["label"] = *r.label;
    out += j.dump() + "\n";
  }
  return out;
}

void stage_demo(const PipelineConfig& cfg, std::ostream& log) {
  Stage st("demo", cfg, log);
  const auto& d = cfg.demo;
  const fs::path root = cfg.output_dir;

  // Synthetic pool: train | dev_seen | dev_unseen (overlapping dev_seen's tail) | test_unseen.
  SyntheticConfig sc;
  sc.n = d.n_train + d.n_dev_seen + d.n_dev_unseen - d.dev_overlap + d.n_test;
  sc.n_boxes = d.n_boxes;
  sc.region_dim = d.region_dim;
  sc.signal_dims = std::min(64, d.region_dim);
  sc.signal = d.signal;
  sc.hidden_fraction = d.hidden_fraction;
  sc.seed = derive_seed(cfg.seed, 10);
  log << "demo: generating " << sc.n << " synthetic memes\n";
  const auto pool = generate_memes(sc);

  const std::size_t seen_begin = d.n_train;
  const std::size_t seen_end = seen_begin + d.n_dev_seen;
  const std::size_t unseen_begin = seen_end - d.dev_overlap;
  const std::size_t unseen_end = unseen_begin + d.n_dev_unseen;
  const auto train_split = carve(pool.split, 0, d.n_train, SplitName::train);
  const auto dev_seen = carve(pool.split, seen_begin, seen_end, SplitName::dev_seen);
  const auto dev_unseen = carve(pool.split, unseen_begin, unseen_end, SplitName::dev_unseen);
  const auto test = carve(pool.split, unseen_end, unseen_end + d.n_test, SplitName::test_unseen);
  const auto dev_merged = merge_dedup(dev_seen, dev_unseen);
  log << "demo: dev_seen " << dev_seen.size() << " + dev_unseen " << dev_unseen.size() << " -> merged "
      << dev_merged.size() << "\n";

  st.write("data/train.jsonl", split_jsonl(train_split));
  st.write("data/dev_seen.jsonl", split_jsonl(dev_seen));
  st.write("data/dev_unseen.jsonl", split_jsonl(dev_unseen));
  st.write("data/dev_merged.jsonl", split_jsonl(dev_merged));
  st.write("data/test_unseen.jsonl", split_jsonl(test));
  st.write("data/features.mfb", encode_features(pool.bank));
  st.write("data/lexicon.tsv", synthetic_lexicon_text());
  st.write("data/hatexplain.csv", synthetic_hatexplain_csv(pool.split, derive_seed(cfg.seed, 11), 2));

  const fs::path data = root / "data";
  PipelineConfig base = cfg;
  base.data = {};
  base.data.features = {data / "features.mfb"};
  base.data.lexicon = data / "lexicon.tsv";
  base.data.hatexplain = data / "hatexplain.csv";
  base.model.region_dim = d.region_dim;
  base.model.max_boxes = std::max(base.model.max_boxes, d.n_boxes);
  base.train.max_updates = d.max_updates;
  base.train.eval_every = std::min(base.train.eval_every, d.max_updates);

  log << "demo: tagging\n";
  PipelineConfig tag_cfg = base;
  tag_cfg.output_dir = root / "tags";
  tag_cfg.data.splits = {data / "train.jsonl", data / "dev_merged.jsonl", data / "test_unseen.jsonl"};
  stage_tag(tag_cfg, log);
  const fs::path tags_csv = tag_cfg.output_dir / "tags.csv";

  struct BaseSpec {
    const char* name;
    LossKind loss;
    int d_model;
    int n_layers;
  };
  const BaseSpec bases[] = {{"fusion_ce", LossKind::cross_entropy, 64, 2},
                            {"fusion_focal", LossKind::focal, 64, 2},
                            {"fusion_small", LossKind::cross_entropy, 32, 1}};

  std::vector<fs::path> dev_preds, test_preds;
  std::vector<std::pair<std::string, fs::path>> to_score;
  for (std::size_t b = 0; b < std::size(bases); ++b) {
    const auto& spec = bases[b];
    log << "demo: training " << spec.name << "\n";
    PipelineConfig m = base;
    m.seed = derive_seed(cfg.seed, 20 + b);
    m.propagate_seed();
    m.output_dir = root / "models" / spec.name;
    m.loss.kind = spec.loss;
    m.model.d_model = spec.d_model;
    m.model.n_layers = spec.n_layers;
    m.model.d_ff = 2 * spec.d_model;
    m.data.train = data / "train.jsonl";
    m.data.val = data / "dev_unseen.jsonl";
    stage_train(m, log);

    m.data.model = m.output_dir / "model.fmc";
    m.data.predict = {data / "dev_merged.jsonl", data / "test_unseen.jsonl"};
    stage_predict(m, log);
    dev_preds.push_back(m.output_dir / "predictions_dev_merged.csv");
    test_preds.push_back(m.output_dir / "predictions_test_unseen.csv");
    to_score.emplace_back(spec.name, test_preds.back());
  }

  for (const char* method : {"majority", "average", "rf"}) {
    log << "demo: ensemble " << method << "\n";
    PipelineConfig e = base;
    e.output_dir = root / (std::string("ensemble_") + method);
    e.data.tags = tags_csv;
    e.ensemble.method = method;
    e.ensemble.predictions = test_preds;
    e.ensemble.train_predictions = dev_preds;
    e.ensemble.train_labels = {data / "dev_seen.jsonl", data / "dev_unseen.jsonl"};
    e.ensemble.budget = std::min(cfg.ensemble.budget, 6);
    e.ensemble.space.n_trees = {50, 150};
    stage_ensemble(e, log);
    to_score.emplace_back(std::string("ensemble_") + method, e.output_dir / (std::string("ensemble_") + method + ".csv"));
  }

  log << "demo: evaluating on test_unseen\n";
  std::string summary = "model,auroc,acc\n";
  json results = json::object();
  for (const auto& [name, path] : to_score) {
    PipelineConfig ev = base;
    ev.output_dir = root / "eval" / name;
    ev.evaluate.predictions = path;
    ev.evaluate.labels = {data / "test_unseen.jsonl"};
    stage_evaluate(ev, log);
    const auto data_scores = score_predictions(load_predictions(path), test);
    const double auc = auroc(data_scores), acc = accuracy(data_scores);
    summary += name + "," + format_fixed(auc, 6) + "," + format_fixed(acc, 6) + "\n";
    results[name] = {{"auroc", auc}, {"acc", acc}};
  }

  log << "demo: analysis\n";
  PipelineConfig an = base;
  an.output_dir = root / "analysis";
  an.data.tags = tags_csv;
  an.data.labels = {data / "train.jsonl"};
  stage_analyze(an, log);

  st.write("demo_report.csv", summary);
  st.note("test_unseen", results);
  st.finish();
  log << summary;
}

}  // namespace

void run(std::string_view subcommand, const PipelineConfig& cfg, std::ostream& log) {
  if (subcommand == "tag") return stage_tag(cfg, log);
  if (subcommand == "train") return stage_train(cfg, log);
  if (subcommand == "predict") return stage_predict(cfg, log);
  if (subcommand == "ensemble") return stage_ensemble(cfg, log);
  if (subcommand == "evaluate") return stage_evaluate(cfg, log);
  if (subcommand == "analyze") return stage_analyze(cfg, log);
  if (subcommand == "demo") return stage_demo(cfg, log);
  throw ConfigError("unknown subcommand '" + std::string(subcommand) + "'");
}

}  // namespace memeguard
