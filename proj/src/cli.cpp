#include "descseq/cli.h"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "json.hpp"

#include "descseq/description.h"
#include "descseq/error.h"
#include "descseq/metrics.h"
#include "descseq/midi_io.h"
#include "descseq/model/checkpoint.h"
#include "descseq/model/config.h"
#include "descseq/model/generate.h"
#include "descseq/model/seq2seq.h"
#include "descseq/model/training.h"
#include "descseq/model/vqvae.h"
#include "descseq/remi.h"
#include "descseq/vocabulary.h"

namespace descseq::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

Split split_of(std::string_view file_name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : file_name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  const auto bucket = h % 10;
  if (bucket < 8) return Split::kTrain;
  return bucket == 8 ? Split::kValidation : Split::kTest;
}

std::string_view split_name(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "validation";
    case Split::kTest: return "test";
  }
  return "train";
}

namespace {

constexpr const char* kModelFormat = "descseq-model";
constexpr const char* kVqVaeFormat = "descseq-vqvae";

struct Options {
  std::string preset = "desk";
  std::uint64_t seed = 1;
  double temperature = 1.0;
  double top_p = 1.0;
  int max_bars = 32;
  std::string out_dir = ".";
  std::vector<std::string> inputs;
  std::string checkpoint;
  std::string vqvae;
  std::string latent_mode = "none";
  std::uint64_t steps = 1000;
  std::size_t batch_size = 8;
  double lr = 1e-3;
  int samples = 1;
  std::size_t max_tokens = 4096;
};

/// Files produced by the current run; removed again when the run fails.
class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}

  void prepare() {
    std::error_code ec;
    if (!fs::exists(dir_)) {
      fs::create_directories(dir_, ec);
      if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir_.string());
      created_dir_ = true;
    }
  }

  fs::path claim(const std::string& name) {
    fs::path p = dir_ / name;
    files_.push_back(p);
    return p;
  }

  fs::path write_text(const std::string& name, const std::string& text) {
    const fs::path p = claim(name);
    std::ofstream os(p, std::ios::binary);
    os << text;
    if (!os) throw Error(ErrorCode::kIoError, "cannot write " + p.string());
    return p;
  }

  fs::path write_bytes(const std::string& name, std::span<const std::uint8_t> bytes) {
    const fs::path p = claim(name);
    write_file_bytes(p, bytes);
    return p;
  }

  void rollback() noexcept {
    std::error_code ec;
    for (const fs::path& p : files_) fs::remove(p, ec);
    if (created_dir_ && fs::is_empty(dir_, ec)) fs::remove(dir_, ec);
    files_.clear();
  }

 private:
  fs::path dir_;
  std::vector<fs::path> files_;
  bool created_dir_ = false;
};

std::string read_text(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

bool is_midi(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return ext == ".mid" || ext == ".midi";
}

std::vector<fs::path> midi_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::kIoError, dir.string() + " is not a directory");
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_midi(entry.path())) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

ordered_json sampling_json(const Options& o) {
  ordered_json j;
  j["temperature"] = o.temperature;
  j["top_p"] = o.top_p;
  j["seed"] = o.seed;
  j["max_bars"] = o.max_bars;
  j["max_tokens"] = o.max_tokens;
  return j;
}

ordered_json run_config(const std::string& subcommand, const Options& o) {
  ordered_json j;
  j["subcommand"] = subcommand;
  j["inputs"] = o.inputs;
  j["out_dir"] = o.out_dir;
  j["preset"] = o.preset;
  j["seed"] = o.seed;
  j["sampling"] = sampling_json(o);
  j["bin_config"] = desc::bin_config_hash();
  return j;
}

void write_config(Outputs& outputs, const ordered_json& config) {
  outputs.write_text("config.json", config.dump(2) + "\n");
}

// ---- corpus ----------------------------------------------------------------

struct Piece {
  std::string name;  // file stem, with a part suffix for split pieces
  Score score;
};

std::vector<Piece> chunk(const std::string& stem, const Score& score) {
  std::vector<Score> parts = remi::split_score(score, kMaxBars);
  std::vector<Piece> out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    std::string name = stem;
    if (parts.size() > 1) {
      char suffix[16];
      std::snprintf(suffix, sizeof suffix, ".part%02zu", i + 1);
      name += suffix;
    }
    out.push_back({name, std::move(parts[i])});
  }
  return out;
}

std::vector<Piece> load_corpus(const fs::path& dir, Split split, std::ostream& err) {
  std::vector<Piece> pieces;
  for (const fs::path& file : midi_files(dir)) {
    if (split_of(file.filename().string()) != split) continue;
    try {
      for (Piece& p : chunk(file.stem().string(), load_midi_file(file))) {
        pieces.push_back(std::move(p));
      }
    } catch (const Error& e) {
      err << "skip: " << file.filename().string() << ": " << error_code_name(e.code()) << '\n';
    }
  }
  return pieces;
}

// ---- models ----------------------------------------------------------------

ordered_json vq_json(const vq::VqConfig& c) {
  ordered_json j;
  j["entries"] = c.entries;
  j["dim"] = c.dim;
  j["decay"] = c.decay;
  j["epsilon"] = c.epsilon;
  j["restart_threshold"] = c.restart_threshold;
  j["beta"] = c.beta;
  return j;
}

vq::VqConfig vq_from_json(const nlohmann::json& j) {
  vq::VqConfig c;
  c.entries = j.at("entries").get<int>();
  c.dim = j.at("dim").get<int>();
  c.decay = j.at("decay").get<double>();
  c.epsilon = j.at("epsilon").get<double>();
  c.restart_threshold = j.at("restart_threshold").get<double>();
  c.beta = j.at("beta").get<double>();
  return c;
}

void check_header(const nlohmann::json& header, const char* format) {
  if (header.value("format", "") != format) {
    throw Error(ErrorCode::kCheckpointError, std::string("expected a ") + format + " checkpoint");
  }
  const std::string hash = header.value("bin_config", "");
  if (hash != desc::bin_config_hash()) {
    throw Error(ErrorCode::kConfigMismatch, "checkpoint bin-config " + hash +
                                                " differs from " + desc::bin_config_hash());
  }
}

fs::path codebook_path(const fs::path& checkpoint) {
  fs::path p = checkpoint;
  p.replace_extension(".codebook");
  return p;
}

std::unique_ptr<model::VqVae> load_vqvae(const fs::path& path) {
  const model::CheckpointData data = model::load_checkpoint(path);
  check_header(data.header, kVqVaeFormat);
  try {
    auto vae = std::make_unique<model::VqVae>(model::ModelConfig::from_json(data.header.at("config")),
                                              vq_from_json(data.header.at("vq")));
    model::restore_parameters(vae->params(), data);
    vae->codebook() = vq::Codebook::load(codebook_path(path));
    return vae;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCheckpointError, std::string("bad VQ-VAE header: ") + e.what());
  }
}

std::vector<desc::LatentCodes> latent_codes(model::VqVae& vae, const remi::TokenIds& ids,
                                            std::size_t bars) {
  const auto lists =
      model::bar_token_lists(ids, static_cast<std::size_t>(vae.config().context_length) + 1);
  std::vector<desc::LatentCodes> codes;
  codes.reserve(lists.size());
  for (const auto& bar : lists) codes.push_back(vae.codes(bar));
  if (codes.size() != bars) {
    throw Error(ErrorCode::kBarCountMismatch, std::to_string(codes.size()) +
                                                  " coded bars for " + std::to_string(bars) +
                                                  " described bars");
  }
  return codes;
}

/// Description tokens and optional latent rows in the form the model expects.
struct Conditioning {
  std::vector<int> ids;
  std::optional<model::Matrix> latent;
};

Conditioning conditioning(const desc::Description& d, const model::ModelConfig& config,
                          const vq::Codebook* codebook) {
  Conditioning c;
  desc::Description tokens_only = d;
  if (config.latent_mode != model::LatentMode::kCodeTokens) tokens_only.codes.clear();
  if (config.latent_mode != model::LatentMode::kNone && d.codes.empty()) {
    throw Error(ErrorCode::kConfigMismatch, "model expects latent codes in the description");
  }
  if (config.latent_mode == model::LatentMode::kCodeTokens && tokens_only.expert.empty()) {
    tokens_only = desc::learned_description(d.codes);
  }
  c.ids = desc::description_tokens(tokens_only);
  if (config.latent_mode == model::LatentMode::kInjection) {
    if (codebook == nullptr) throw Error(ErrorCode::kCheckpointError, "missing codebook");
    c.latent = model::injection_rows(c.ids, d.codes, *codebook);
  }
  return c;
}

struct LoadedModel {
  std::unique_ptr<model::Seq2Seq> model;
  std::optional<vq::Codebook> codebook;
};

LoadedModel load_model(const fs::path& path) {
  const model::CheckpointData data = model::load_checkpoint(path);
  check_header(data.header, kModelFormat);
  LoadedModel out;
  try {
    out.model = std::make_unique<model::Seq2Seq>(
        model::ModelConfig::from_json(data.header.at("config")));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCheckpointError, std::string("bad model header: ") + e.what());
  }
  model::restore_parameters(out.model->params(), data);
  if (out.model->config().latent_mode == model::LatentMode::kInjection) {
    out.codebook = vq::Codebook::load(codebook_path(path));
  }
  return out;
}

model::TrainingPair make_pair(const Score& score, const model::ModelConfig& config,
                              model::VqVae* vae, const vq::Codebook* codebook) {
  model::TrainingPair pair;
  pair.target = remi::encode(score);
  desc::Description d = desc::expert_description(score);
  if (config.latent_mode != model::LatentMode::kNone) {
    if (vae == nullptr) throw Error(ErrorCode::kUsage, "latent modes need --vqvae");
    desc::attach_codes(d, latent_codes(*vae, pair.target, d.bar_count()));
  }
  Conditioning c = conditioning(d, config, codebook);
  pair.description = std::move(c.ids);
  pair.latent_rows = std::move(c.latent);
  return pair;
}

// ---- subcommands -----------------------------------------------------------

void cmd_tokenize(const Options& o, Outputs& outputs, std::ostream& out) {
  write_config(outputs, run_config("tokenize", o));
  for (const std::string& input : o.inputs) {
    const fs::path path(input);
    for (const Piece& p : chunk(path.stem().string(), load_midi_file(path))) {
      out << outputs.write_text(p.name + ".tokens", remi::to_text(remi::encode(p.score))).string()
          << '\n';
    }
  }
}

void cmd_describe(const Options& o, Outputs& outputs, std::ostream& out) {
  ordered_json config = run_config("describe", o);
  config["vqvae"] = o.vqvae;
  write_config(outputs, config);
  std::unique_ptr<model::VqVae> vae;
  if (!o.vqvae.empty()) vae = load_vqvae(o.vqvae);
  for (const std::string& input : o.inputs) {
    const fs::path path(input);
    for (const Piece& p : chunk(path.stem().string(), load_midi_file(path))) {
      desc::Description d = desc::expert_description(p.score);
      if (vae) desc::attach_codes(d, latent_codes(*vae, remi::encode(p.score), d.bar_count()));
      out << outputs.write_text(p.name + ".desc", desc::to_text(d)).string() << '\n';
    }
  }
}

void cmd_medley(const Options& o, Outputs& outputs, std::ostream& out) {
  if (o.inputs.size() != 2) throw Error(ErrorCode::kUsage, "medley takes exactly two MIDI files");
  write_config(outputs, run_config("medley", o));
  const desc::Description d =
      desc::medley_description(load_midi_file(o.inputs[0]), load_midi_file(o.inputs[1]));
  out << outputs.write_text("medley.desc", desc::to_text(d)).string() << '\n';
}

void cmd_train(const Options& o, Outputs& outputs, std::ostream& out, std::ostream& err) {
  if (o.inputs.size() != 1) throw Error(ErrorCode::kUsage, "train takes one corpus directory");
  model::ModelConfig config = model::ModelConfig::preset_named(o.preset);
  config.seed = o.seed;
  config.latent_mode = model::latent_mode_from_name(o.latent_mode);
  config.validate();

  ordered_json rc = run_config("train", o);
  rc["model"] = config.to_json();
  rc["steps"] = o.steps;
  rc["batch_size"] = o.batch_size;
  rc["base_lr"] = o.lr;
  rc["vqvae"] = o.vqvae;
  write_config(outputs, rc);

  std::unique_ptr<model::VqVae> vae;
  if (config.latent_mode != model::LatentMode::kNone) {
    if (o.vqvae.empty()) throw Error(ErrorCode::kUsage, "latent modes need --vqvae");
    vae = load_vqvae(o.vqvae);
  }
  const vq::Codebook* codebook = vae ? &vae->codebook() : nullptr;

  const std::vector<Piece> train = load_corpus(o.inputs[0], Split::kTrain, err);
  const std::vector<Piece> validation = load_corpus(o.inputs[0], Split::kValidation, err);
  if (train.empty()) throw Error(ErrorCode::kEmptyCorpus, "no training pieces in " + o.inputs[0]);

  ordered_json split;
  for (const auto& [name, pieces] : {std::pair{"train", &train}, std::pair{"validation", &validation}}) {
    auto& list = split[name] = ordered_json::array();
    for (const Piece& p : *pieces) list.push_back(p.name);
  }
  outputs.write_text("split.json", split.dump(2) + "\n");

  std::vector<model::TrainingPair> data;
  for (const Piece& p : train) data.push_back(make_pair(p.score, config, vae.get(), codebook));

  model::Seq2Seq net(config);
  std::ofstream log(outputs.claim("train.log"), std::ios::binary);
  model::TrainOptions options;
  options.steps = o.steps;
  options.batch_size = o.batch_size;
  options.base_lr = o.lr;
  options.seed = o.seed;
  options.log = &log;
  model::Trainer trainer(net, options);
  const model::StepResult last = trainer.fit(data);

  ordered_json header;
  header["format"] = kModelFormat;
  header["bin_config"] = desc::bin_config_hash();
  header["config"] = config.to_json();
  const fs::path ckpt = outputs.claim("model.ckpt");
  model::save_checkpoint(ckpt, header, net.params(), &trainer.optimizer());
  if (codebook != nullptr) codebook->save(outputs.claim("model.codebook"));

  ordered_json summary;
  summary["steps"] = last.step;
  summary["train_loss"] = last.loss;
  if (!validation.empty()) {
    std::vector<model::TrainingPair> vdata;
    for (const Piece& p : validation) {
      vdata.push_back(make_pair(p.score, config, vae.get(), codebook));
    }
    const model::NllTotal nll = model::corpus_nll(net, vdata);
    summary["validation_ppl"] = metrics::perplexity(nll.nll, nll.tokens);
  } else {
    summary["validation_ppl"] = nullptr;
  }
  outputs.write_text("summary.json", summary.dump(2) + "\n");
  out << ckpt.string() << '\n';
}

void cmd_train_vqvae(const Options& o, Outputs& outputs, std::ostream& out, std::ostream& err) {
  if (o.inputs.size() != 1) throw Error(ErrorCode::kUsage, "train-vqvae takes one corpus directory");
  model::ModelConfig config = model::ModelConfig::preset_named(o.preset);
  config.seed = o.seed;
  config.validate();
  vq::VqConfig vq_config;
  vq_config.dim = config.latent_dim;

  ordered_json rc = run_config("train-vqvae", o);
  rc["model"] = config.to_json();
  rc["vq"] = vq_json(vq_config);
  rc["steps"] = o.steps;
  rc["batch_size"] = o.batch_size;
  rc["base_lr"] = o.lr;
  write_config(outputs, rc);

  std::vector<std::vector<int>> bars;
  for (const Piece& p : load_corpus(o.inputs[0], Split::kTrain, err)) {
    for (auto& bar : model::bar_token_lists(remi::encode(p.score),
                                            static_cast<std::size_t>(config.context_length) + 1)) {
      bars.push_back(std::move(bar));
    }
  }
  if (bars.empty()) throw Error(ErrorCode::kEmptyCorpus, "no training bars in " + o.inputs[0]);

  model::VqVae vae(config, vq_config);
  nn::Adam adam;
  std::ofstream log(outputs.claim("train.log"), std::ios::binary);
  model::VqTrainOptions options;
  options.steps = o.steps;
  options.batch_size = o.batch_size;
  options.base_lr = o.lr;
  options.seed = o.seed;
  options.log = &log;
  model::train_vqvae(vae, bars, options, adam);

  ordered_json header;
  header["format"] = kVqVaeFormat;
  header["bin_config"] = desc::bin_config_hash();
  header["config"] = config.to_json();
  header["vq"] = vq_json(vq_config);
  const fs::path ckpt = outputs.claim("vqvae.ckpt");
  model::save_checkpoint(ckpt, header, vae.params(), &adam);
  vae.codebook().save(outputs.claim("vqvae.codebook"));
  out << ckpt.string() << '\n';
}

void cmd_generate(const Options& o, Outputs& outputs, std::ostream& out) {
  if (o.inputs.size() != 1) throw Error(ErrorCode::kUsage, "generate takes one description file");
  if (o.checkpoint.empty()) throw Error(ErrorCode::kUsage, "generate needs --checkpoint");
  if (o.samples < 1) throw Error(ErrorCode::kUsage, "--samples must be positive");
  ordered_json rc = run_config("generate", o);
  rc["checkpoint"] = o.checkpoint;
  rc["samples"] = o.samples;
  write_config(outputs, rc);

  const desc::Description d = desc::from_text(read_text(o.inputs[0]));
  LoadedModel loaded = load_model(o.checkpoint);
  const Conditioning c = conditioning(d, loaded.model->config(),
                                      loaded.codebook ? &*loaded.codebook : nullptr);
  const std::string stem = fs::path(o.inputs[0]).stem().string();
  for (int k = 0; k < o.samples; ++k) {
    model::SamplingConfig sampling;
    sampling.temperature = o.temperature;
    sampling.top_p = o.top_p;
    sampling.seed = o.seed + static_cast<std::uint64_t>(k);
    sampling.max_bars = o.max_bars;
    sampling.max_tokens = o.max_tokens;
    const remi::TokenIds ids = model::generate(*loaded.model, c.ids, sampling, c.latent);
    const std::string name = o.samples == 1 ? stem : stem + ".sample" + std::to_string(k + 1);
    outputs.write_text(name + ".tokens", remi::to_text(ids));
    out << outputs.write_bytes(name + ".mid", write_midi(remi::decode(ids).score)).string() << '\n';
  }
}

void cmd_evaluate(const Options& o, Outputs& outputs, std::ostream& out, std::ostream& err) {
  if (o.inputs.size() != 2) {
    throw Error(ErrorCode::kUsage, "evaluate takes a truth directory and a generated directory");
  }
  ordered_json rc = run_config("evaluate", o);
  rc["checkpoint"] = o.checkpoint;
  write_config(outputs, rc);

  // Generated files pair with the truth file whose stem prefixes theirs.
  std::map<std::string, Score> truth;
  for (const fs::path& file : midi_files(o.inputs[0])) {
    const Score s = load_midi_file(file);
    truth[file.stem().string()] = remi::split_score(s, o.max_bars).front();
  }
  std::vector<metrics::MetricReport> reports;
  std::vector<std::vector<int>> samples;
  std::string lines;
  for (const fs::path& file : midi_files(o.inputs[1])) {
    const std::string stem = file.stem().string();
    auto match = truth.end();
    for (auto it = truth.begin(); it != truth.end(); ++it) {
      if (stem == it->first || stem.rfind(it->first + ".", 0) == 0) match = it;
    }
    if (match == truth.end()) {
      err << "skip: " << file.filename().string() << ": no ground truth\n";
      continue;
    }
    const Score generated = load_midi_file(file);
    reports.push_back(metrics::compare(match->second, generated));
    samples.push_back(remi::encode(generated));
    ordered_json rec;
    rec["file"] = file.filename().string();
    rec["truth"] = match->first;
    const ordered_json fields = ordered_json::parse(metrics::to_json_line(reports.back()));
    for (const auto& [k, v] : fields.items()) rec[k] = v;
    lines += rec.dump() + "\n";
  }
  if (reports.empty()) throw Error(ErrorCode::kEmptyCorpus, "no generated files matched");

  metrics::MetricReport aggregate = metrics::average(reports);
  aggregate.h_inst = metrics::token_entropy(samples, false);
  aggregate.h_chord = metrics::token_entropy(samples, true);
  if (!o.checkpoint.empty()) {
    LoadedModel loaded = load_model(o.checkpoint);
    std::vector<model::TrainingPair> data;
    for (const auto& [name, score] : truth) {
      data.push_back(make_pair(score, loaded.model->config(), nullptr,
                               loaded.codebook ? &*loaded.codebook : nullptr));
    }
    const model::NllTotal nll = model::corpus_nll(*loaded.model, data);
    aggregate.perplexity = metrics::perplexity(nll.nll, nll.tokens);
  }
  ordered_json rec;
  rec["file"] = "aggregate";
  rec["pairs"] = reports.size();
  const ordered_json fields = ordered_json::parse(metrics::to_json_line(aggregate));
  for (const auto& [k, v] : fields.items()) rec[k] = v;
  lines += rec.dump() + "\n";
  out << outputs.write_text("report.jsonl", lines).string() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Description-conditioned symbolic music generation", "descseq");
  app.require_subcommand(1);
  Options o;

  auto common = [&o](CLI::App* sub) {
    sub->add_option("--out-dir", o.out_dir, "Output directory");
    sub->add_option("--seed", o.seed, "Random seed");
  };
  auto model_flags = [&o](CLI::App* sub) {
    sub->add_option("--preset", o.preset, "Model preset")->check(CLI::IsMember({"paper", "desk"}));
    sub->add_option("--steps", o.steps, "Optimizer steps");
    sub->add_option("--batch-size", o.batch_size, "Examples per step");
    sub->add_option("--lr", o.lr, "Base learning rate");
  };

  CLI::App* tokenize = app.add_subcommand("tokenize", "MIDI to REMI+ token text");
  tokenize->add_option("midi", o.inputs, "MIDI files")->required();
  common(tokenize);

  CLI::App* describe = app.add_subcommand("describe", "MIDI to description text");
  describe->add_option("midi", o.inputs, "MIDI files")->required();
  describe->add_option("--vqvae", o.vqvae, "VQ-VAE checkpoint for latent codes");
  common(describe);

  CLI::App* train = app.add_subcommand("train", "Train a sequence model on a MIDI directory");
  train->add_option("corpus", o.inputs, "Corpus directory")->required();
  train->add_option("--latent-mode", o.latent_mode, "Latent pathway")
      ->check(CLI::IsMember({"none", "tokens", "injection"}));
  train->add_option("--vqvae", o.vqvae, "VQ-VAE checkpoint for latent codes");
  common(train);
  model_flags(train);

  CLI::App* train_vqvae = app.add_subcommand("train-vqvae", "Train the per-bar VQ-VAE");
  train_vqvae->add_option("corpus", o.inputs, "Corpus directory")->required();
  common(train_vqvae);
  model_flags(train_vqvae);

  CLI::App* generate = app.add_subcommand("generate", "Sample music for a description");
  generate->add_option("description", o.inputs, "Description file")->required();
  generate->add_option("--checkpoint", o.checkpoint, "Model checkpoint")->required();
  generate->add_option("--temperature", o.temperature, "Sampling temperature (0: greedy)")
      ->check(CLI::NonNegativeNumber);
  generate->add_option("--top-p", o.top_p, "Nucleus mass")->check(CLI::Range(0.0, 1.0));
  generate->add_option("--max-bars", o.max_bars, "Bars to generate")->check(CLI::Range(1, kMaxBars));
  generate->add_option("--max-tokens", o.max_tokens, "Token budget per sample");
  generate->add_option("--samples", o.samples, "Samples per description");
  common(generate);

  CLI::App* medley = app.add_subcommand("medley", "Splice two pieces' descriptions");
  medley->add_option("midi", o.inputs, "Two MIDI files")->required();
  common(medley);

  CLI::App* evaluate = app.add_subcommand("evaluate", "Compare generated MIDI to ground truth");
  evaluate->add_option("dirs", o.inputs, "Truth and generated directories")->required();
  evaluate->add_option("--checkpoint", o.checkpoint, "Model checkpoint for perplexity");
  evaluate->add_option("--max-bars", o.max_bars, "Ground-truth bars compared")
      ->check(CLI::Range(1, kMaxBars));
  common(evaluate);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();  // program name
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << error_code_name(ErrorCode::kUsage) << ": " << e.what() << '\n';
    return 2;
  }

  Outputs outputs(o.out_dir);
  try {
    outputs.prepare();
    if (*tokenize) cmd_tokenize(o, outputs, out);
    else if (*describe) cmd_describe(o, outputs, out);
    else if (*train) cmd_train(o, outputs, out, err);
    else if (*train_vqvae) cmd_train_vqvae(o, outputs, out, err);
    else if (*generate) cmd_generate(o, outputs, out);
    else if (*medley) cmd_medley(o, outputs, out);
    else if (*evaluate) cmd_evaluate(o, outputs, out, err);
  } catch (const Error& e) {
    outputs.rollback();
    err << "error: " << error_code_name(e.code()) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    outputs.rollback();
    err << "error: " << error_code_name(ErrorCode::kIoError) << ": " << e.what() << '\n';
    return 1;
  }
  return 0;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  return run(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace descseq::cli
