#include "mcdub/training/checkpoint.hpp"

#include "mcdub/data/array_io.hpp"
#include "mcdub/errors.hpp"
#include "mcdub/training/trainer.hpp"

#include <cstring>
#include <fstream>
#include <map>

namespace mcdub::training {

namespace {

constexpr char kMagic[8] = {'M', 'C', 'D', 'C', 'K', 'P', 'T', '\0'};

}  // namespace

Checkpoint capture(const DubbingModel& model, const Adam* optimizer, int stage, std::uint64_t step,
                   const std::string& train_config) {
  Checkpoint ck;
  ck.stage = stage;
  ck.step = step;
  ck.model_config = model.config().to_text();
  ck.config_digest = fnv1a64(ck.model_config);
  ck.train_config = train_config;
  for (const auto& [name, var] : model.params().entries()) ck.params.push_back({name, var.value()});
  if (optimizer != nullptr && optimizer->steps() > 0) {
    ck.optimizer_step = optimizer->steps();
    ck.first_moment = optimizer->first_moment();
    ck.second_moment = optimizer->second_moment();
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const bool moments = !ck.first_moment.empty();
  if (moments && (ck.first_moment.size() != ck.params.size() || ck.second_moment.size() != ck.params.size())) {
    throw FormatError("optimizer moments do not match parameter count");
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(kMagic, sizeof(kMagic));
    data::put_u32(out, ck.version);
    data::put_u32(out, static_cast<std::uint32_t>(ck.stage));
    data::put_u64(out, ck.step);
    data::put_u64(out, ck.config_digest);
    data::put_string(out, ck.model_config);
    data::put_string(out, ck.train_config);
    data::put_u64(out, ck.optimizer_step);
    data::put_u32(out, static_cast<std::uint32_t>(ck.params.size()));
    for (size_t i = 0; i < ck.params.size(); ++i) {
      data::put_string(out, ck.params[i].name);
      data::write_array(out, data::from_matrix(ck.params[i].value));
      const char flag = moments ? 1 : 0;
      out.put(flag);
      if (moments) {
        data::write_array(out, data::from_matrix(ck.first_moment[i]));
        data::write_array(out, data::from_matrix(ck.second_moment[i]));
      }
    }
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
    throw IncompatibleCheckpoint(path.string() + ": not a checkpoint");
  }
  Checkpoint ck;
  try {
    ck.version = data::get_u32(in);
    if (ck.version != Checkpoint::kFormatVersion) {
      throw IncompatibleCheckpoint(path.string() + ": unsupported version " + std::to_string(ck.version));
    }
    ck.stage = static_cast<int>(data::get_u32(in));
    ck.step = data::get_u64(in);
    ck.config_digest = data::get_u64(in);
    ck.model_config = data::get_string(in);
    ck.train_config = data::get_string(in);
    ck.optimizer_step = data::get_u64(in);
    const std::uint32_t count = data::get_u32(in);
    for (std::uint32_t i = 0; i < count; ++i) {
      NamedArray p;
      p.name = data::get_string(in);
      p.value = data::to_matrix(data::read_array(in));
      const int flag = in.get();
      if (flag == std::char_traits<char>::eof()) throw FormatError("truncated checkpoint");
      if (flag == 1) {
        ck.first_moment.push_back(data::to_matrix(data::read_array(in)));
        ck.second_moment.push_back(data::to_matrix(data::read_array(in)));
      }
      ck.params.push_back(std::move(p));
    }
  } catch (const FormatError& e) {
    throw IncompatibleCheckpoint(path.string() + ": " + e.what());
  }
  if (!ck.first_moment.empty() && ck.first_moment.size() != ck.params.size()) {
    throw IncompatibleCheckpoint(path.string() + ": partial optimizer state");
  }
  if (fnv1a64(ck.model_config) != ck.config_digest) {
    throw IncompatibleCheckpoint(path.string() + ": config digest mismatch");
  }
  return ck;
}

LoadReport load_parameters(DubbingModel& model, const Checkpoint& ck, bool strict) {
  LoadReport report;
  std::map<std::string, const Matrix*> stored;
  for (const auto& p : ck.params) stored[p.name] = &p.value;
  for (const auto& [name, var] : model.params().entries()) {
    const auto it = stored.find(name);
    if (it == stored.end()) {
      report.missing.push_back(name);
    } else if (it->second->rows() != var.rows() || it->second->cols() != var.cols()) {
      report.mismatched.push_back(name);
    }
  }
  for (const auto& p : ck.params) {
    if (!model.params().contains(p.name)) report.unexpected.push_back(p.name);
  }
  if (strict && !report.clean()) {
    std::string msg = "checkpoint does not match model:";
    for (const auto& n : report.missing) msg += " missing " + n + ";";
    for (const auto& n : report.unexpected) msg += " unexpected " + n + ";";
    for (const auto& n : report.mismatched) msg += " shape " + n + ";";
    throw IncompatibleCheckpoint(msg);
  }
  for (const auto& [name, var] : model.params().entries()) {
    const auto it = stored.find(name);
    if (it == stored.end()) continue;
    if (it->second->rows() != var.rows() || it->second->cols() != var.cols()) continue;
    ad::Var handle = var;
    handle.mutable_value() = *it->second;
  }
  return report;
}

}  // namespace mcdub::training
