#include "descseq/model/config.h"

#include "descseq/error.h"
#include "descseq/vq.h"
#include "descseq/vocabulary.h"

namespace descseq::model {

namespace {

ModelConfig with_vocabularies(ModelConfig c) {
  c.sequence_vocab = Vocabulary::remi().size();
  c.description_vocab = Vocabulary::description().size();
  return c;
}

}  // namespace

ModelConfig ModelConfig::paper() {
  ModelConfig c;
  c.preset = "paper";
  c.d_model = 512;
  c.n_heads = 8;
  c.d_ff = 2048;
  c.encoder_layers = 4;
  c.decoder_layers = 6;
  c.context_length = 256;
  return with_vocabularies(c);
}

ModelConfig ModelConfig::desk() { return with_vocabularies(ModelConfig{}); }

ModelConfig ModelConfig::preset_named(const std::string& name) {
  if (name == "paper") return paper();
  if (name == "desk") return desk();
  throw Error(ErrorCode::kUsage, "unknown preset '" + name + "' (expected paper or desk)");
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kConfigMismatch, what); };
  if (d_model <= 0 || n_heads <= 0 || d_model % n_heads != 0) {
    fail("d_model must be a positive multiple of n_heads");
  }
  if (d_ff <= 0 || encoder_layers < 0 || decoder_layers < 1 || context_length < 2) {
    fail("invalid layer sizes");
  }
  if (sequence_vocab != Vocabulary::remi().size() ||
      description_vocab != Vocabulary::description().size()) {
    fail("vocabulary sizes differ from this build");
  }
  if (bar_table != kMaxBars + 1 || beat_table < 1) fail("invalid embedding table sizes");
  if (dropout < 0.0 || dropout >= 1.0) fail("dropout must lie in [0, 1)");
  if (latent_dim <= 0) fail("latent_dim must be positive");
}

nlohmann::ordered_json ModelConfig::to_json() const {
  nlohmann::ordered_json j;
  j["preset"] = preset;
  j["d_model"] = d_model;
  j["n_heads"] = n_heads;
  j["d_ff"] = d_ff;
  j["encoder_layers"] = encoder_layers;
  j["decoder_layers"] = decoder_layers;
  j["context_length"] = context_length;
  j["sequence_vocab"] = sequence_vocab;
  j["description_vocab"] = description_vocab;
  j["bar_table"] = bar_table;
  j["beat_table"] = beat_table;
  j["dropout"] = dropout;
  j["seed"] = seed;
  j["latent_mode"] = latent_mode_name(latent_mode);
  j["latent_dim"] = latent_dim;
  return j;
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  try {
    ModelConfig c;
    c.preset = j.at("preset").get<std::string>();
    c.d_model = j.at("d_model").get<int>();
    c.n_heads = j.at("n_heads").get<int>();
    c.d_ff = j.at("d_ff").get<int>();
    c.encoder_layers = j.at("encoder_layers").get<int>();
    c.decoder_layers = j.at("decoder_layers").get<int>();
    c.context_length = j.at("context_length").get<int>();
    c.sequence_vocab = j.at("sequence_vocab").get<int>();
    c.description_vocab = j.at("description_vocab").get<int>();
    c.bar_table = j.at("bar_table").get<int>();
    c.beat_table = j.at("beat_table").get<int>();
    c.dropout = j.at("dropout").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.latent_mode = latent_mode_from_name(j.at("latent_mode").get<std::string>());
    c.latent_dim = j.at("latent_dim").get<int>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCheckpointError, std::string("bad model config: ") + e.what());
  }
}

std::string latent_mode_name(LatentMode mode) {
  switch (mode) {
    case LatentMode::kNone:
      return "none";
    case LatentMode::kCodeTokens:
      return "tokens";
    case LatentMode::kInjection:
      return "injection";
  }
  return "none";
}

LatentMode latent_mode_from_name(const std::string& name) {
  if (name == "none") return LatentMode::kNone;
  if (name == "tokens") return LatentMode::kCodeTokens;
  if (name == "injection") return LatentMode::kInjection;
  throw Error(ErrorCode::kUsage, "unknown latent mode '" + name + "'");
}

std::size_t parameter_count(const ModelConfig& c) {
  const std::size_t d = static_cast<std::size_t>(c.d_model);
  const std::size_t ff = static_cast<std::size_t>(c.d_ff);
  const std::size_t rel = static_cast<std::size_t>(2 * c.context_length - 1) * d;
  const std::size_t attention = 4 * (d * d + d);
  const std::size_t feed_forward = d * ff + ff + ff * d + d;
  const std::size_t norm = 2 * d;
  const std::size_t encoder_layer = attention + rel + feed_forward + 2 * norm;
  const std::size_t decoder_layer = 2 * attention + rel + feed_forward + 3 * norm;
  std::size_t n = static_cast<std::size_t>(c.encoder_layers) * encoder_layer +
                  static_cast<std::size_t>(c.decoder_layers) * decoder_layer;
  n += static_cast<std::size_t>(c.sequence_vocab) * d;     // target tokens
  n += static_cast<std::size_t>(c.description_vocab) * d;  // description tokens
  n += 2 * static_cast<std::size_t>(c.bar_table) * d;      // encoder and decoder bars
  n += static_cast<std::size_t>(c.beat_table) * d;
  n += d * static_cast<std::size_t>(c.sequence_vocab) + static_cast<std::size_t>(c.sequence_vocab);
  if (c.latent_mode == LatentMode::kInjection) {
    const std::size_t in = static_cast<std::size_t>(vq::kSlices * c.latent_dim);
    n += in * d + d;
  }
  return n;
}

}  // namespace descseq::model
