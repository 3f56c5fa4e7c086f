#include "mcdub/model_config.hpp"

#include "mcdub/errors.hpp"

#include <charconv>
#include <sstream>
#include <vector>

namespace mcdub {

namespace {

struct IntField {
  const char* key;
  int ModelConfig::*member;
};
struct RealField {
  const char* key;
  double ModelConfig::*member;
};

const std::vector<IntField>& int_fields() {
  static const std::vector<IntField> fields{
      {"vocab", &ModelConfig::vocab},
      {"d_lip", &ModelConfig::d_lip},
      {"d_face", &ModelConfig::d_face},
      {"n_mels", &ModelConfig::n_mels},
      {"frame_ratio", &ModelConfig::frame_ratio},
      {"dim", &ModelConfig::dim},
      {"heads", &ModelConfig::heads},
      {"ffn_dim", &ModelConfig::ffn_dim},
      {"ffn_kernel_first", &ModelConfig::ffn_kernel_first},
      {"ffn_kernel_second", &ModelConfig::ffn_kernel_second},
      {"text_blocks", &ModelConfig::text_blocks},
      {"lip_blocks", &ModelConfig::lip_blocks},
      {"decoder_blocks", &ModelConfig::decoder_blocks},
      {"aligner_heads", &ModelConfig::aligner_heads},
      {"upsample_kernel", &ModelConfig::upsample_kernel},
      {"predictor_channels", &ModelConfig::predictor_channels},
      {"predictor_kernel", &ModelConfig::predictor_kernel},
      {"dab_descriptors", &ModelConfig::dab_descriptors},
      {"dab_dim", &ModelConfig::dab_dim},
      {"postnet_channels", &ModelConfig::postnet_channels},
      {"postnet_kernel", &ModelConfig::postnet_kernel},
      {"postnet_layers", &ModelConfig::postnet_layers},
  };
  return fields;
}

const std::vector<RealField>& real_fields() {
  static const std::vector<RealField> fields{
      {"dropout", &ModelConfig::dropout},
      {"predictor_dropout", &ModelConfig::predictor_dropout},
  };
  return fields;
}

}  // namespace

ModelConfig ModelConfig::resolved() const {
  ModelConfig c = *this;
  if (c.upsample_kernel == 0) c.upsample_kernel = 2 * c.frame_ratio;
  if (c.predictor_channels == 0) c.predictor_channels = c.dim;
  if (c.dab_dim == 0) c.dab_dim = c.dim;
  return c;
}

void ModelConfig::validate() const {
  const ModelConfig c = resolved();
  auto positive = [](int v, const char* name) {
    if (v < 1) throw ConfigError(std::string("model.") + name + " must be positive");
  };
  for (const auto& f : int_fields()) positive(c.*(f.member), f.key);
  if (c.dim % c.heads != 0) throw ConfigError("model.dim must be divisible by model.heads");
  if (c.dim % c.aligner_heads != 0) throw ConfigError("model.dim must be divisible by model.aligner_heads");
  if (c.upsample_kernel < c.frame_ratio) throw ConfigError("model.upsample_kernel must be >= frame ratio");
  for (int k : {c.ffn_kernel_first, c.ffn_kernel_second, c.predictor_kernel, c.postnet_kernel}) {
    if (k % 2 == 0) throw ConfigError("convolution kernels must be odd");
  }
  if (c.postnet_layers < 2) throw ConfigError("model.postnet_layers must be >= 2");
  for (double p : {c.dropout, c.predictor_dropout}) {
    if (p < 0.0 || p >= 1.0) throw ConfigError("dropout must lie in [0, 1)");
  }
}

std::string ModelConfig::to_text() const {
  std::ostringstream out;
  for (const auto& f : int_fields()) out << f.key << "=" << this->*(f.member) << "\n";
  for (const auto& f : real_fields()) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), this->*(f.member));
    out << f.key << "=" << std::string(buf, ptr) << "\n";
  }
  return out.str();
}

bool ModelConfig::set(const std::string& key, const std::string& value) {
  for (const auto& f : int_fields()) {
    if (key == f.key) {
      int v = 0;
      auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
      if (ec != std::errc{} || ptr != value.data() + value.size()) {
        throw ConfigError("model." + key + ": expected integer, got '" + value + "'");
      }
      this->*(f.member) = v;
      return true;
    }
  }
  for (const auto& f : real_fields()) {
    if (key == f.key) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
      if (ec != std::errc{} || ptr != value.data() + value.size()) {
        throw ConfigError("model." + key + ": expected number, got '" + value + "'");
      }
      this->*(f.member) = v;
      return true;
    }
  }
  return false;
}

ModelConfig ModelConfig::from_text(const std::string& text) {
  ModelConfig c;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("bad model config line '" + line + "'");
    if (!c.set(line.substr(0, eq), line.substr(eq + 1))) {
      throw ConfigError("unknown model config key '" + line.substr(0, eq) + "'");
    }
  }
  return c;
}

ModelConfig ModelConfig::toy() { return ModelConfig{}; }

ModelConfig ModelConfig::paper() {
  ModelConfig c;
  c.dim = 256;
  c.heads = 2;
  c.ffn_dim = 1024;
  c.text_blocks = 6;
  c.lip_blocks = 6;
  c.decoder_blocks = 6;
  c.aligner_heads = 8;
  c.dropout = 0.1;
  c.predictor_dropout = 0.5;
  c.predictor_channels = 256;
  c.dab_descriptors = 32;
  c.postnet_channels = 512;
  return c;
}

unsigned long long fnv1a64(const std::string& text) {
  unsigned long long h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace mcdub
