#include "descseq/model/checkpoint.h"

#include <cstring>
#include <fstream>

#include "descseq/binary_io.h"
#include "descseq/error.h"

namespace descseq::model {

namespace {

constexpr char kMagic[4] = {'D', 'S', 'Q', 'M'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kMaxDimension = 1u << 24;

void write_matrix_data(std::ostream& out, const nn::Matrix& m) {
  binio::write_doubles(out, m.data(), static_cast<std::size_t>(m.size()));
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const nlohmann::json& header,
                     const nn::ParameterSet& params, const nn::Adam* adam) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out.write(kMagic, 4);
  binio::write<std::uint32_t>(out, kVersion);
  binio::write_string(out, header.dump());
  binio::write<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const nn::Parameter& p = params[i];
    binio::write_string(out, p.name);
    binio::write<std::uint32_t>(out, static_cast<std::uint32_t>(p.value.rows()));
    binio::write<std::uint32_t>(out, static_cast<std::uint32_t>(p.value.cols()));
    write_matrix_data(out, p.value);
  }
  const nn::Adam* opt = adam;
  const bool with_adam = opt != nullptr && opt->first_moments().size() == params.size();
  binio::write<std::uint8_t>(out, with_adam ? 1 : 0);
  if (with_adam) {
    binio::write<std::uint64_t>(out, opt->steps());
    for (std::size_t i = 0; i < params.size(); ++i) {
      write_matrix_data(out, opt->first_moments()[i]);
      write_matrix_data(out, opt->second_moments()[i]);
    }
  }
  if (!out) throw Error(ErrorCode::kIoError, "failed writing " + path.string());
}

CheckpointData load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw Error(ErrorCode::kCheckpointError, path.string() + " is not a model checkpoint");
  }
  const auto version = binio::read<std::uint32_t>(in);
  if (version != kVersion) {
    throw Error(ErrorCode::kCheckpointError,
                "unsupported checkpoint version " + std::to_string(version));
  }
  CheckpointData data;
  try {
    data.header = nlohmann::json::parse(binio::read_string(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCheckpointError, std::string("bad checkpoint header: ") + e.what());
  }
  const auto count = binio::read<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = binio::read_string(in, 4096);
    const auto rows = binio::read<std::uint32_t>(in);
    const auto cols = binio::read<std::uint32_t>(in);
    if (rows > kMaxDimension || cols > kMaxDimension ||
        static_cast<std::uint64_t>(rows) * cols > (1ull << 31)) {
      throw Error(ErrorCode::kCheckpointError, "implausible tensor shape for " + name);
    }
    nn::Matrix m(rows, cols);
    binio::read_doubles(in, m.data(), static_cast<std::size_t>(m.size()));
    data.tensors.emplace_back(std::move(name), std::move(m));
  }
  if (binio::read<std::uint8_t>(in) != 0) {
    CheckpointData::AdamState state;
    state.steps = binio::read<std::uint64_t>(in);
    for (const auto& [name, m] : data.tensors) {
      nn::Matrix first(m.rows(), m.cols());
      nn::Matrix second(m.rows(), m.cols());
      binio::read_doubles(in, first.data(), static_cast<std::size_t>(first.size()));
      binio::read_doubles(in, second.data(), static_cast<std::size_t>(second.size()));
      state.first.push_back(std::move(first));
      state.second.push_back(std::move(second));
    }
    data.adam = std::move(state);
  }
  return data;
}

void restore_parameters(nn::ParameterSet& params, const CheckpointData& data, nn::Adam* adam) {
  if (data.tensors.size() != params.size()) {
    throw Error(ErrorCode::kCheckpointError,
                "checkpoint holds " + std::to_string(data.tensors.size()) + " tensors, model has " +
                    std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& [name, m] = data.tensors[i];
    nn::Parameter& p = params[i];
    if (name != p.name || m.rows() != p.value.rows() || m.cols() != p.value.cols()) {
      throw Error(ErrorCode::kCheckpointError, "tensor " + name + " does not match parameter " +
                                                   p.name);
    }
    p.value = m;
    p.grad.setZero();
  }
  if (adam != nullptr && data.adam) {
    adam->first_moments() = data.adam->first;
    adam->second_moments() = data.adam->second;
    adam->set_steps(data.adam->steps);
  }
}

}  // namespace descseq::model
