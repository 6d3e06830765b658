#pragma once

#include <string>
#include <vector>

#include "ssacl/layers.hpp"

namespace ssacl {

struct ConvStageConfig {
  std::size_t channels = 0;
  std::size_t kernel = 3;
  std::size_t stride = 2;
};

/// Compact configurable encoder: conv/batch-norm/relu stages, global average
/// pooling, then a dense layer onto the representation.
struct EncoderConfig {
  std::vector<ConvStageConfig> stages = {{16, 3, 2}, {32, 3, 2}, {64, 3, 2}, {128, 3, 2}};
  std::size_t representation_dim = 256;

  void validate(std::size_t embedding_dim) const {
    if (stages.empty()) throw ConfigError("EncoderConfig: at least one conv stage required");
    for (const auto& s : stages) {
      if (s.channels == 0 || s.kernel == 0 || s.kernel % 2 == 0 || s.stride == 0) {
        throw ConfigError("EncoderConfig: stages need channels > 0, odd kernel, stride > 0");
      }
    }
    if (representation_dim < embedding_dim) {
      throw ConfigError("EncoderConfig: representation_dim must be >= the projection output dim");
    }
  }
};

struct ModelConfig {
  EncoderConfig encoder;
  std::size_t n_classes = 0;
  std::size_t embedding_dim = 64;  // projector output
  std::size_t head_hidden = 128;   // hidden width of both heads
};

/// Shared feature extractor plus classification and projection heads.
/// Forward passes record an explicit tape; backward() consumes it. Multiple
/// tapes may be alive at once (the training step runs several passes before
/// the optimizer update), and parameter gradients accumulate across them.
template <typename T>
class Network {
 public:
  struct Tape {
    enum class Path { none, encode, classify, project };
    Path path = Path::none;
    std::vector<Conv2dCtx<T>> conv;
    std::vector<BatchNormCtx<T>> stage_bn;
    std::vector<ReluCtx<T>> stage_relu;
    GapCtx<T> gap;
    DenseCtx<T> enc_fc;
    DenseCtx<T> head_fc1;
    BatchNormCtx<T> head_bn;
    ReluCtx<T> head_relu;
    DenseCtx<T> head_fc2;
    L2NormCtx<T> l2;
  };

  Network(const ModelConfig& cfg, Rng& rng) : cfg_(cfg) {
    cfg.encoder.validate(cfg.embedding_dim);
    if (cfg.n_classes == 0) throw ConfigError("Network: n_classes must be positive");

    std::size_t in_c = 1;
    for (const auto& s : cfg.encoder.stages) {
      conv_.emplace_back(in_c, s.channels, s.kernel, s.stride, rng);
      bn_.emplace_back(s.channels);
      in_c = s.channels;
    }
    enc_fc_ = Dense<T>(in_c, cfg.encoder.representation_dim, rng);

    clf_fc1_ = Dense<T>(cfg.encoder.representation_dim, cfg.head_hidden, rng);
    clf_bn_ = BatchNorm<T>(cfg.head_hidden);
    clf_fc2_ = Dense<T>(cfg.head_hidden, cfg.n_classes, rng);

    proj_fc1_ = Dense<T>(cfg.encoder.representation_dim, cfg.head_hidden, rng);
    proj_bn_ = BatchNorm<T>(cfg.head_hidden);
    proj_fc2_ = Dense<T>(cfg.head_hidden, cfg.embedding_dim, rng);
  }

  const ModelConfig& config() const { return cfg_; }

  /// (B, mels, frames) -> (B, representation_dim)
  TensorT<T> encode(const TensorT<T>& x, Mode mode, Tape* tape) {
    TensorT<T> h = as_images(x);
    if (tape != nullptr) {
      tape->conv.resize(conv_.size());
      tape->stage_bn.resize(conv_.size());
      tape->stage_relu.resize(conv_.size());
    }
    for (std::size_t i = 0; i < conv_.size(); ++i) {
      h = conv_[i].forward(h, tape ? &tape->conv[i] : nullptr);
      h = bn_[i].forward(h, mode, tape ? &tape->stage_bn[i] : nullptr);
      h = relu_.forward(h, tape ? &tape->stage_relu[i] : nullptr);
    }
    h = gap_.forward(h, tape ? &tape->gap : nullptr);
    h = enc_fc_.forward(h, tape ? &tape->enc_fc : nullptr);
    if (tape != nullptr) tape->path = Tape::Path::encode;
    return h;
  }

  /// (B, mels, frames) -> (B, n_classes); raw logits, no softmax.
  TensorT<T> classify(const TensorT<T>& x, Mode mode, Tape* tape) {
    TensorT<T> rep = encode(x, mode, tape);
    TensorT<T> h = clf_fc1_.forward(rep, tape ? &tape->head_fc1 : nullptr);
    h = clf_bn_.forward(h, mode, tape ? &tape->head_bn : nullptr);
    h = relu_.forward(h, tape ? &tape->head_relu : nullptr);
    h = clf_fc2_.forward(h, tape ? &tape->head_fc2 : nullptr);
    if (tape != nullptr) tape->path = Tape::Path::classify;
    return h;
  }

  /// (B, mels, frames) -> (B, embedding_dim) with unit-norm rows.
  TensorT<T> project(const TensorT<T>& x, Mode mode, Tape* tape) {
    TensorT<T> rep = encode(x, mode, tape);
    TensorT<T> h = proj_fc1_.forward(rep, tape ? &tape->head_fc1 : nullptr);
    h = proj_bn_.forward(h, mode, tape ? &tape->head_bn : nullptr);
    h = relu_.forward(h, tape ? &tape->head_relu : nullptr);
    h = proj_fc2_.forward(h, tape ? &tape->head_fc2 : nullptr);
    h = l2norm_.forward(h, tape ? &tape->l2 : nullptr);
    if (tape != nullptr) tape->path = Tape::Path::project;
    return h;
  }

  /// Backpropagates d_out through the path recorded on the tape, accumulating
  /// parameter gradients. The tape is consumed.
  void backward(Tape& tape, const TensorT<T>& d_out) {
    TensorT<T> d = d_out;
    switch (tape.path) {
      case Tape::Path::classify:
        d = clf_fc2_.backward(tape.head_fc2, d);
        d = relu_.backward(tape.head_relu, d);
        d = clf_bn_.backward(tape.head_bn, d);
        d = clf_fc1_.backward(tape.head_fc1, d);
        break;
      case Tape::Path::project:
        d = l2norm_.backward(tape.l2, d);
        d = proj_fc2_.backward(tape.head_fc2, d);
        d = relu_.backward(tape.head_relu, d);
        d = proj_bn_.backward(tape.head_bn, d);
        d = proj_fc1_.backward(tape.head_fc1, d);
        break;
      case Tape::Path::encode:
        break;
      case Tape::Path::none:
        throw StateError("Network::backward called without a recorded forward pass");
    }
    d = enc_fc_.backward(tape.enc_fc, d);
    d = gap_.backward(tape.gap, d);
    for (std::size_t i = conv_.size(); i-- > 0;) {
      d = relu_.backward(tape.stage_relu[i], d);
      d = bn_[i].backward(tape.stage_bn[i], d);
      d = conv_[i].backward(tape.conv[i], d);
    }
    tape.path = Tape::Path::none;
  }

  /// Trainable parameters of the selected components.
  std::vector<ParamRef<T>> parameters(bool encoder, bool classifier, bool projector) {
    std::vector<ParamRef<T>> out;
    if (encoder) {
      for (std::size_t i = 0; i < conv_.size(); ++i) {
        const std::string p = "encoder.stage" + std::to_string(i);
        out.push_back({p + ".conv.weight", &conv_[i].weight});
        out.push_back({p + ".conv.bias", &conv_[i].bias});
        out.push_back({p + ".bn.gamma", &bn_[i].gamma});
        out.push_back({p + ".bn.beta", &bn_[i].beta});
      }
      out.push_back({"encoder.fc.weight", &enc_fc_.weight});
      out.push_back({"encoder.fc.bias", &enc_fc_.bias});
    }
    if (classifier) {
      out.push_back({"classifier.fc1.weight", &clf_fc1_.weight});
      out.push_back({"classifier.fc1.bias", &clf_fc1_.bias});
      out.push_back({"classifier.bn.gamma", &clf_bn_.gamma});
      out.push_back({"classifier.bn.beta", &clf_bn_.beta});
      out.push_back({"classifier.fc2.weight", &clf_fc2_.weight});
      out.push_back({"classifier.fc2.bias", &clf_fc2_.bias});
    }
    if (projector) {
      out.push_back({"projector.fc1.weight", &proj_fc1_.weight});
      out.push_back({"projector.fc1.bias", &proj_fc1_.bias});
      out.push_back({"projector.bn.gamma", &proj_bn_.gamma});
      out.push_back({"projector.bn.beta", &proj_bn_.beta});
      out.push_back({"projector.fc2.weight", &proj_fc2_.weight});
      out.push_back({"projector.fc2.bias", &proj_fc2_.bias});
    }
    return out;
  }

  std::vector<ParamRef<T>> parameters() { return parameters(true, true, true); }

  /// Parameters plus batch-norm running statistics; the full serializable
  /// state.
  std::vector<ParamRef<T>> state_tensors() {
    std::vector<ParamRef<T>> out = parameters();
    for (std::size_t i = 0; i < bn_.size(); ++i) {
      const std::string p = "encoder.stage" + std::to_string(i) + ".bn";
      out.push_back({p + ".running_mean", &bn_[i].running_mean});
      out.push_back({p + ".running_var", &bn_[i].running_var});
    }
    out.push_back({"classifier.bn.running_mean", &clf_bn_.running_mean});
    out.push_back({"classifier.bn.running_var", &clf_bn_.running_var});
    out.push_back({"projector.bn.running_mean", &proj_bn_.running_mean});
    out.push_back({"projector.bn.running_var", &proj_bn_.running_var});
    return out;
  }

  void zero_grad() {
    for (auto& p : parameters()) p.tensor->zero_grad();
  }

  /// Direct access for tests.
  Dense<T>& encoder_fc() { return enc_fc_; }
  Dense<T>& classifier_output() { return clf_fc2_; }
  Dense<T>& projector_output() { return proj_fc2_; }

 private:
  TensorT<T> as_images(const TensorT<T>& x) const {
    check_shape(x, {0, 0, 0}, "Network: input must be (batch, mels, frames)");
    TensorT<T> y = x;
    y.shape = {x.dim(0), 1, x.dim(1), x.dim(2)};
    return y;
  }

  ModelConfig cfg_;
  std::vector<Conv2d<T>> conv_;
  std::vector<BatchNorm<T>> bn_;
  Relu<T> relu_;
  GlobalAvgPool<T> gap_;
  Dense<T> enc_fc_;
  Dense<T> clf_fc1_, clf_fc2_;
  BatchNorm<T> clf_bn_;
  Dense<T> proj_fc1_, proj_fc2_;
  BatchNorm<T> proj_bn_;
};

}  // namespace ssacl
