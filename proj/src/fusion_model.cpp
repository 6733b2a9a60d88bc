#include "memeguard/fusion_model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "memeguard/binary_io.hpp"
#include "memeguard/text_normalize.hpp"

namespace memeguard {

namespace {

constexpr double kLnEps = 1e-6;
constexpr double kInitStd = 0.02;

enum : std::size_t {
  kTokEmb = 0,
  kSegEmb,
  kPosEmb,
  kEmbLnGain,
  kEmbLnBias,
  kProjW,
  kProjB,
  kFirstLayer,
};

enum : std::size_t {
  kWq = 0,
  kBq,
  kWk,
  kBk,
  kWv,
  kBv,
  kWo,
  kBo,
  kLn1Gain,
  kLn1Bias,
  kW1,
  kB1,
  kW2,
  kB2,
  kLn2Gain,
  kLn2Bias,
  kPerLayer,
};

std::size_t layer_param(std::size_t layer, std::size_t which) {
  return kFirstLayer + layer * kPerLayer + which;
}

std::size_t head_w_index(const ModelConfig& cfg) {
  return kFirstLayer + static_cast<std::size_t>(cfg.n_layers) * kPerLayer;
}

const char* const kLayerNames[kPerLayer] = {"wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo",
                                            "ln1_gain", "ln1_bias", "w1", "b1", "w2", "b2",
                                            "ln2_gain", "ln2_bias"};

struct Shape {
  Eigen::Index rows, cols;
};

std::vector<Shape> parameter_shapes(const ModelConfig& c) {
  const Eigen::Index d = c.d_model, ff = c.d_ff;
  std::vector<Shape> s = {
      {c.vocab_size, d}, {2, d}, {c.max_text_len + 1, d}, {1, d}, {1, d}, {c.region_dim, d}, {1, d},
  };
  for (int l = 0; l < c.n_layers; ++l) {
    s.insert(s.end(), {{d, d}, {1, d}, {d, d}, {1, d}, {d, d}, {1, d}, {d, d}, {1, d},
                       {1, d}, {1, d}, {d, ff}, {1, ff}, {ff, d}, {1, d}, {1, d}, {1, d}});
  }
  s.push_back({d, 2});
  s.push_back({1, 2});
  return s;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

struct LnCache {
  Mat xhat;
  Eigen::VectorXd inv_std;
};

Mat layer_norm(const Mat& x, const Mat& gain, const Mat& bias, LnCache* cache) {
  const Eigen::Index n = x.rows(), d = x.cols();
  Mat xhat(n, d);
  Eigen::VectorXd inv(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double mu = x.row(r).mean();
    const double var = (x.row(r).array() - mu).square().mean();
    inv(r) = 1.0 / std::sqrt(var + kLnEps);
    xhat.row(r) = (x.row(r).array() - mu) * inv(r);
  }
  Mat y = (xhat.array().rowwise() * gain.row(0).array()).rowwise() + bias.row(0).array();
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv);
  }
  return y;
}

Mat layer_norm_backward(const Mat& dy, const LnCache& cache, const Mat& gain, Mat& dgain, Mat& dbias) {
  dgain.row(0) += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  dbias.row(0) += dy.colwise().sum();
  const Mat dxhat = dy.array().rowwise() * gain.row(0).array();
  const double d = static_cast<double>(dy.cols());
  Mat dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const double mean_d = dxhat.row(r).sum() / d;
    const double mean_dx = dxhat.row(r).dot(cache.xhat.row(r)) / d;
    dx.row(r) = cache.inv_std(r) *
                (dxhat.row(r).array() - mean_d - cache.xhat.row(r).array() * mean_dx).matrix();
  }
  return dx;
}

Mat affine(const Mat& x, const Mat& w, const Mat& b) {
  Mat y = x * w;
  y.rowwise() += b.row(0);
  return y;
}

// Inverted-dropout mask; empty when dropout is inactive.
Mat dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng* rng) {
  if (!rng || rate <= 0.0) return {};
  Mat m(rows, cols);
  const double keep_scale = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng->uniform() < rate ? 0.0 : keep_scale;
  return m;
}

Mat apply_mask(const Mat& x, const Mat& mask) {
  if (mask.size() == 0) return x;
  return x.cwiseProduct(mask);
}

struct LayerCache {
  Mat x_in;
  Mat q, k, v;
  std::vector<Mat> attn;
  Mat ctx;
  Mat attn_mask;
  LnCache ln1;
  Mat x1;
  Mat ff_pre;
  Mat ff_act;
  Mat ff_mask;
  LnCache ln2;
};

struct Trace {
  std::size_t n_text = 0;  // text tokens, excluding the classification slot
  LnCache emb_ln;
  Mat emb_mask;
  std::vector<LayerCache> layers;
  Mat final_hidden;
};

class Forward {
 public:
  Forward(const ModelConfig& cfg, const ParamList& p) : cfg_(cfg), p_(p) {}

  std::array<double, 2> run(const EncodedInput& in, Rng* rng, Trace* trace) const {
    const auto n_text = in.tokens.size();
    const auto n_img = static_cast<std::size_t>(in.regions.rows());
    const auto seq = static_cast<Eigen::Index>(1 + n_text + n_img);
    const Eigen::Index d = cfg_.d_model;

    Mat e(seq, d);
    e.row(0) = p_[kTokEmb].row(kClsToken) + p_[kSegEmb].row(0) + p_[kPosEmb].row(0);
    for (std::size_t i = 0; i < n_text; ++i) {
      const auto r = static_cast<Eigen::Index>(i + 1);
      e.row(r) = p_[kTokEmb].row(in.tokens[i]) + p_[kSegEmb].row(0) + p_[kPosEmb].row(r);
    }
    if (n_img > 0) {
      Mat proj = affine(in.regions, p_[kProjW], p_[kProjB]);
      proj.rowwise() += p_[kSegEmb].row(1);
      e.bottomRows(static_cast<Eigen::Index>(n_img)) = proj;
    }

    LnCache* emb_ln = trace ? &trace->emb_ln : nullptr;
    Mat h = layer_norm(e, p_[kEmbLnGain], p_[kEmbLnBias], emb_ln);
    Mat mask = dropout_mask(seq, d, cfg_.dropout_rate, rng);
    h = apply_mask(h, mask);
    if (trace) {
      trace->n_text = n_text;
      trace->emb_mask = std::move(mask);
      trace->layers.resize(static_cast<std::size_t>(cfg_.n_layers));
    }

    for (std::size_t l = 0; l < static_cast<std::size_t>(cfg_.n_layers); ++l) {
      h = layer(l, h, rng, trace ? &trace->layers[l] : nullptr);
    }

    std::array<double, 2> z{};
    const auto& hw = p_[head_w_index(cfg_)];
    const auto& hb = p_[head_w_index(cfg_) + 1];
    const Eigen::RowVectorXd out = h.row(0) * hw + hb.row(0);
    z[0] = out(0);
    z[1] = out(1);
    if (trace) trace->final_hidden = std::move(h);
    return z;
  }

 private:
  Mat layer(std::size_t l, const Mat& x, Rng* rng, LayerCache* c) const {
    auto P = [&](std::size_t which) -> const Mat& { return p_[layer_param(l, which)]; };
    const Eigen::Index seq = x.rows();
    const Eigen::Index dh = cfg_.d_model / cfg_.n_heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    Mat q = affine(x, P(kWq), P(kBq));
    Mat k = affine(x, P(kWk), P(kBk));
    Mat v = affine(x, P(kWv), P(kBv));
    Mat ctx(seq, cfg_.d_model);
    std::vector<Mat> attn;
    if (c) attn.reserve(static_cast<std::size_t>(cfg_.n_heads));
    for (Eigen::Index hd = 0; hd < cfg_.n_heads; ++hd) {
      const auto cols = Eigen::seqN(hd * dh, dh);
      Mat s = (q(Eigen::all, cols) * k(Eigen::all, cols).transpose()) * scale;
      for (Eigen::Index r = 0; r < seq; ++r) {
        const double m = s.row(r).maxCoeff();
        s.row(r) = (s.row(r).array() - m).exp();
        s.row(r) /= s.row(r).sum();
      }
      ctx(Eigen::all, cols) = s * v(Eigen::all, cols);
      if (c) attn.push_back(std::move(s));
    }
    Mat attn_out = affine(ctx, P(kWo), P(kBo));
    Mat attn_mask = dropout_mask(seq, cfg_.d_model, cfg_.dropout_rate, rng);
    Mat y1 = x + apply_mask(attn_out, attn_mask);
    LnCache ln1;
    Mat x1 = layer_norm(y1, P(kLn1Gain), P(kLn1Bias), c ? &ln1 : nullptr);

    Mat ff_pre = affine(x1, P(kW1), P(kB1));
    Mat ff_act = ff_pre.unaryExpr([](double t) { return gelu(t); });
    Mat ff_out = affine(ff_act, P(kW2), P(kB2));
    Mat ff_mask = dropout_mask(seq, cfg_.d_model, cfg_.dropout_rate, rng);
    Mat y2 = x1 + apply_mask(ff_out, ff_mask);
    LnCache ln2;
    Mat x2 = layer_norm(y2, P(kLn2Gain), P(kLn2Bias), c ? &ln2 : nullptr);

    if (c) {
      c->x_in = x;
      c->q = std::move(q);
      c->k = std::move(k);
      c->v = std::move(v);
      c->attn = std::move(attn);
      c->ctx = std::move(ctx);
      c->attn_mask = std::move(attn_mask);
      c->ln1 = std::move(ln1);
      c->x1 = std::move(x1);
      c->ff_pre = std::move(ff_pre);
      c->ff_act = std::move(ff_act);
      c->ff_mask = std::move(ff_mask);
      c->ln2 = std::move(ln2);
    }
    return x2;
  }

  const ModelConfig& cfg_;
  const ParamList& p_;
};

class Backward {
 public:
  Backward(const ModelConfig& cfg, const ParamList& p, ParamList& g) : cfg_(cfg), p_(p), g_(g) {}

  void run(const EncodedInput& in, const Trace& t, const std::array<double, 2>& dlogits) {
    const auto hw = head_w_index(cfg_);
    Eigen::RowVector2d dz(dlogits[0], dlogits[1]);
    g_[hw] += t.final_hidden.row(0).transpose() * dz;
    g_[hw + 1].row(0) += dz;

    Mat dh = Mat::Zero(t.final_hidden.rows(), cfg_.d_model);
    dh.row(0) = dz * p_[hw].transpose();

    for (std::size_t l = static_cast<std::size_t>(cfg_.n_layers); l-- > 0;) {
      dh = layer(l, t.layers[l], dh);
    }

    dh = apply_mask(dh, t.emb_mask);
    Mat de = layer_norm_backward(dh, t.emb_ln, p_[kEmbLnGain], g_[kEmbLnGain], g_[kEmbLnBias]);

    const auto n_text = static_cast<Eigen::Index>(t.n_text);
    g_[kTokEmb].row(kClsToken) += de.row(0);
    for (Eigen::Index i = 0; i < n_text; ++i) {
      g_[kTokEmb].row(in.tokens[static_cast<std::size_t>(i)]) += de.row(i + 1);
    }
    g_[kSegEmb].row(0) += de.topRows(n_text + 1).colwise().sum();
    g_[kPosEmb].topRows(n_text + 1) += de.topRows(n_text + 1);
    const Eigen::Index n_img = in.regions.rows();
    if (n_img > 0) {
      const auto dimg = de.bottomRows(n_img);
      g_[kSegEmb].row(1) += dimg.colwise().sum();
      g_[kProjB].row(0) += dimg.colwise().sum();
      g_[kProjW].noalias() += in.regions.transpose() * dimg;
    }
  }

 private:
  Mat layer(std::size_t l, const LayerCache& c, const Mat& dx2) {
    auto P = [&](std::size_t which) -> const Mat& { return p_[layer_param(l, which)]; };
    auto G = [&](std::size_t which) -> Mat& { return g_[layer_param(l, which)]; };
    const Eigen::Index dh = cfg_.d_model / cfg_.n_heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    Mat dy2 = layer_norm_backward(dx2, c.ln2, P(kLn2Gain), G(kLn2Gain), G(kLn2Bias));
    Mat dff_out = apply_mask(dy2, c.ff_mask);
    G(kW2).noalias() += c.ff_act.transpose() * dff_out;
    G(kB2).row(0) += dff_out.colwise().sum();
    Mat dact = dff_out * P(kW2).transpose();
    Mat dpre = dact.cwiseProduct(c.ff_pre.unaryExpr([](double t) { return gelu_grad(t); }));
    G(kW1).noalias() += c.x1.transpose() * dpre;
    G(kB1).row(0) += dpre.colwise().sum();
    Mat dx1 = dy2 + dpre * P(kW1).transpose();

    Mat dy1 = layer_norm_backward(dx1, c.ln1, P(kLn1Gain), G(kLn1Gain), G(kLn1Bias));
    Mat dattn_out = apply_mask(dy1, c.attn_mask);
    G(kWo).noalias() += c.ctx.transpose() * dattn_out;
    G(kBo).row(0) += dattn_out.colwise().sum();
    Mat dctx = dattn_out * P(kWo).transpose();

    Mat dq(c.q.rows(), c.q.cols());
    Mat dk(c.k.rows(), c.k.cols());
    Mat dv(c.v.rows(), c.v.cols());
    for (Eigen::Index hd = 0; hd < cfg_.n_heads; ++hd) {
      const auto cols = Eigen::seqN(hd * dh, dh);
      const Mat& a = c.attn[static_cast<std::size_t>(hd)];
      const Mat dctx_h = dctx(Eigen::all, cols);
      Mat da = dctx_h * c.v(Eigen::all, cols).transpose();
      dv(Eigen::all, cols) = a.transpose() * dctx_h;
      const Eigen::VectorXd rowdot = (da.array() * a.array()).rowwise().sum();
      Mat ds = a.array() * (da.array().colwise() - rowdot.array());
      dq(Eigen::all, cols) = ds * c.k(Eigen::all, cols) * scale;
      dk(Eigen::all, cols) = ds.transpose() * c.q(Eigen::all, cols) * scale;
    }
    G(kWq).noalias() += c.x_in.transpose() * dq;
    G(kBq).row(0) += dq.colwise().sum();
    G(kWk).noalias() += c.x_in.transpose() * dk;
    G(kBk).row(0) += dk.colwise().sum();
    G(kWv).noalias() += c.x_in.transpose() * dv;
    G(kBv).row(0) += dv.colwise().sum();

    Mat dx = dy1;
    dx.noalias() += dq * P(kWq).transpose();
    dx.noalias() += dk * P(kWk).transpose();
    dx.noalias() += dv * P(kWv).transpose();
    return dx;
  }

  const ModelConfig& cfg_;
  const ParamList& p_;
  ParamList& g_;
};

}  // namespace

void ModelConfig::validate() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("invalid model config: " + what);
  };
  need(vocab_size >= 3, "vocab_size must be >= 3");
  need(d_model >= 1 && n_layers >= 1 && n_heads >= 1 && d_ff >= 1, "dims must be >= 1");
  need(d_model % n_heads == 0, "d_model must be divisible by n_heads");
  need(max_text_len >= 1, "max_text_len must be >= 1");
  need(max_boxes >= 1 && max_boxes <= static_cast<int>(kMaxBoxes), "max_boxes must be in [1, 120]");
  need(region_dim >= 1, "region_dim must be >= 1");
  need(dropout_rate >= 0.0 && dropout_rate < 1.0, "dropout_rate must be in [0, 1)");
}

std::vector<int> encode_text(std::string_view text, const ModelConfig& cfg) {
  std::vector<int> ids;
  const auto buckets = static_cast<std::uint64_t>(cfg.vocab_size - 2);
  for (const auto& tok : normalize(text)) {
    if (ids.size() == static_cast<std::size_t>(cfg.max_text_len)) break;
    ids.push_back(2 + static_cast<int>(fnv1a64(tok) % buckets));
  }
  if (ids.empty()) ids.push_back(kUnknownToken);
  return ids;
}

EncodedInput encode(const Example& example, const ModelConfig& cfg) {
  if (!example.features) throw std::invalid_argument("example " + std::to_string(example.record.id) + " has no features");
  const auto& f = *example.features;
  if (static_cast<int>(f.dim) != cfg.region_dim) {
    throw std::invalid_argument("example " + std::to_string(example.record.id) + ": region dim " +
                                std::to_string(f.dim) + " does not match model region_dim " +
                                std::to_string(cfg.region_dim));
  }
  if (static_cast<int>(f.n_boxes) > cfg.max_boxes) {
    throw std::invalid_argument("example " + std::to_string(example.record.id) + " has " +
                                std::to_string(f.n_boxes) + " boxes; model max_boxes is " +
                                std::to_string(cfg.max_boxes));
  }
  EncodedInput in;
  in.tokens = encode_text(example.record.text, cfg);
  using FloatMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  in.regions = Eigen::Map<const FloatMat>(f.values.data(), f.n_boxes, f.dim).cast<double>();
  return in;
}

FusionModel::FusionModel(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(derive_seed(cfg_.seed, 0x1A17));
  const auto shapes = parameter_shapes(cfg_);
  const auto names = parameter_names(cfg_);
  params_.reserve(shapes.size());
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    Mat m(shapes[i].rows, shapes[i].cols);
    const auto& name = names[i];
    if (name.ends_with("_gain")) {
      m.setOnes();
    } else if (!decays(cfg_, i)) {
      m.setZero();
    } else {
      for (Eigen::Index j = 0; j < m.size(); ++j) m.data()[j] = kInitStd * rng.normal();
    }
    params_.push_back(std::move(m));
  }
}

std::size_t FusionModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.size());
  return n;
}

std::vector<std::string> FusionModel::parameter_names(const ModelConfig& cfg) {
  std::vector<std::string> names = {"token_emb",   "segment_emb",   "position_emb", "emb_ln_gain",
                                    "emb_ln_bias", "region_proj_w", "region_proj_b"};
  for (int l = 0; l < cfg.n_layers; ++l) {
    for (const char* n : kLayerNames) names.push_back("layer" + std::to_string(l) + "." + n);
  }
  names.emplace_back("head_w");
  names.emplace_back("head_b");
  return names;
}

bool FusionModel::decays(const ModelConfig& cfg, std::size_t index) {
  if (index == kEmbLnGain || index == kEmbLnBias || index == kProjB) return false;
  const auto hw = head_w_index(cfg);
  if (index == hw) return true;
  if (index == hw + 1) return false;
  if (index < kFirstLayer) return true;
  switch ((index - kFirstLayer) % kPerLayer) {
    case kWq:
    case kWk:
    case kWv:
    case kWo:
    case kW1:
    case kW2:
      return true;
    default:
      return false;
  }
}

void FusionModel::zero_head() {
  const auto hw = head_w_index(cfg_);
  params_[hw].setZero();
  params_[hw + 1].setZero();
}

std::array<double, 2> FusionModel::logits(const EncodedInput& input) const {
  return Forward(cfg_, params_).run(input, nullptr, nullptr);
}

std::array<double, 2> FusionModel::class_probabilities(const EncodedInput& input) const {
  const auto z = logits(input);
  const double m = std::max(z[0], z[1]);
  const double e0 = std::exp(z[0] - m), e1 = std::exp(z[1] - m);
  return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

double FusionModel::predict_proba(const EncodedInput& input) const {
  return class_probabilities(input)[1];
}

double FusionModel::accumulate_gradients(const EncodedInput& input, int label, const LossSpec& spec,
                                         double weight, ParamList& grads, Rng* dropout_rng) const {
  Trace trace;
  const auto z = Forward(cfg_, params_).run(input, dropout_rng, &trace);
  const auto l = loss_from_logits(z, label, spec);
  Backward(cfg_, params_, grads).run(input, trace, {weight * l.grad[0], weight * l.grad[1]});
  return l.loss;
}

ParamList FusionModel::zeros_like() const {
  ParamList out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(Mat::Zero(p.rows(), p.cols()));
  return out;
}

std::vector<std::byte> encode_checkpoint(const FusionModel& model) {
  const auto& c = model.config();
  ByteWriter out;
  out.magic("FMC1");
  out.u32(1);
  for (int v : {c.vocab_size, c.d_model, c.n_layers, c.n_heads, c.d_ff, c.max_text_len, c.max_boxes,
                c.region_dim}) {
    out.u32(static_cast<std::uint32_t>(v));
  }
  out.f64(c.dropout_rate);
  out.u64(c.seed);
  out.u64(model.parameter_count());
  for (const auto& p : model.params()) {
    for (Eigen::Index i = 0; i < p.size(); ++i) out.f32(static_cast<float>(p.data()[i]));
  }
  return out.bytes();
}

FusionModel decode_checkpoint(std::span<const std::byte> bytes) {
  ByteReader in(bytes);
  in.expect_magic("FMC1");
  const auto version = in.u32();
  if (version != 1) throw FormatError("unsupported FMC1 version " + std::to_string(version));
  ModelConfig c;
  for (int* v : {&c.vocab_size, &c.d_model, &c.n_layers, &c.n_heads, &c.d_ff, &c.max_text_len,
                 &c.max_boxes, &c.region_dim}) {
    *v = static_cast<int>(in.u32());
  }
  c.dropout_rate = in.f64();
  c.seed = in.u64();
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("FMC1 config block: ") + e.what());
  }
  FusionModel model(c);
  const auto count = in.u64();
  if (count != model.parameter_count()) {
    throw FormatError("FMC1 parameter count " + std::to_string(count) + " does not match config (" +
                      std::to_string(model.parameter_count()) + ")");
  }
  if (in.remaining() != count * 4) throw FormatError("FMC1 parameter payload has the wrong size");
  for (auto& p : model.params()) {
    for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = in.f32();
  }
  return model;
}

void save_checkpoint(const FusionModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, encode_checkpoint(model));
}

FusionModel load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file_bytes(path));
}

}  // namespace memeguard
