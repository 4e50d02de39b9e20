#include "bfamr/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "bfamr/error.hpp"
#include "json.hpp"

namespace bfamr {

namespace fs = std::filesystem;

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are written in host order and must be little-endian");

const char* dtype_name() { return sizeof(Real) == 8 ? "float64" : "float32"; }

template <typename T>
void read_values(std::ifstream& in, Tensor& t, const fs::path& file) {
  std::vector<T> buf(static_cast<std::size_t>(t.size()));
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(T)));
  if (!in) throw IoError("truncated tensor payload in " + file.string());
  for (int i = 0; i < t.size(); ++i) t[i] = static_cast<Real>(buf[static_cast<std::size_t>(i)]);
}

}  // namespace

void save_checkpoint(const fs::path& dir, const ParamStore& params, const KeyValues& config,
                     const Vocabulary& vocab) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create checkpoint directory " + dir.string() + ": " + ec.message());
  nlohmann::ordered_json manifest;
  manifest["format_version"] = kCheckpointFormatVersion;
  manifest["dtype"] = dtype_name();
  auto entries = nlohmann::ordered_json::array();
  std::ofstream bin(dir / "tensors.bin", std::ios::binary);
  if (!bin) throw IoError("cannot write " + (dir / "tensors.bin").string());
  std::uint64_t offset = 0;
  for (const auto& p : params.all()) {
    const std::uint64_t bytes = static_cast<std::uint64_t>(p.value.size()) * sizeof(Real);
    entries.push_back({{"name", p.name},
                       {"shape", {p.value.rows(), p.value.cols()}},
                       {"offset", offset},
                       {"bytes", bytes}});
    bin.write(reinterpret_cast<const char*>(p.value.data()), static_cast<std::streamsize>(bytes));
    offset += bytes;
  }
  if (!bin) throw IoError("failed writing " + (dir / "tensors.bin").string());
  manifest["tensors"] = std::move(entries);
  std::ofstream mf(dir / "manifest.json");
  if (!mf) throw IoError("cannot write " + (dir / "manifest.json").string());
  mf << manifest.dump(1) << '\n';
  if (!mf) throw IoError("failed writing " + (dir / "manifest.json").string());
  write_kv_file(dir / "config.txt", config);
  save_vocab(vocab, dir / "vocab.json");
}

Checkpoint load_checkpoint(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("checkpoint directory not found: " + dir.string());
  const fs::path mpath = dir / "manifest.json";
  std::ifstream mf(mpath);
  if (!mf) throw IoError("cannot open " + mpath.string());
  nlohmann::json manifest;
  try {
    mf >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw UserError("malformed manifest " + mpath.string() + ": " + e.what());
  }
  if (manifest.value("format_version", 0) != kCheckpointFormatVersion)
    throw UserError("unsupported checkpoint format version in " + mpath.string());
  const std::string dtype = manifest.value("dtype", "");
  if (dtype != "float64" && dtype != "float32")
    throw UserError("unsupported dtype '" + dtype + "' in " + mpath.string());
  const std::size_t width = dtype == "float64" ? 8 : 4;

  Checkpoint ck;
  ck.config = read_kv_file(dir / "config.txt");
  ck.vocab = load_vocab(dir / "vocab.json");
  const fs::path bpath = dir / "tensors.bin";
  std::ifstream bin(bpath, std::ios::binary);
  if (!bin) throw IoError("cannot open " + bpath.string());
  try {
    for (const auto& e : manifest.at("tensors")) {
      NamedTensor nt;
      nt.name = e.at("name").get<std::string>();
      const auto shape = e.at("shape").get<std::vector<int>>();
      if (shape.size() != 2 || shape[0] < 1 || shape[1] < 1)
        throw UserError("bad shape for tensor " + nt.name + " in " + mpath.string());
      nt.value = Tensor(shape[0], shape[1]);
      const auto offset = e.at("offset").get<std::uint64_t>();
      const auto bytes = e.at("bytes").get<std::uint64_t>();
      if (bytes != static_cast<std::uint64_t>(nt.value.size()) * width)
        throw UserError("byte count mismatch for tensor " + nt.name + " in " + mpath.string());
      bin.seekg(static_cast<std::streamoff>(offset));
      if (width == 8)
        read_values<double>(bin, nt.value, bpath);
      else
        read_values<float>(bin, nt.value, bpath);
      ck.tensors.push_back(std::move(nt));
    }
  } catch (const nlohmann::json::exception& e) {
    throw UserError("malformed manifest " + mpath.string() + ": " + e.what());
  }
  return ck;
}

void restore_parameters(ParamStore& params, const std::vector<NamedTensor>& tensors) {
  std::map<std::string, const Tensor*> by_name;
  for (const auto& t : tensors) by_name[t.name] = &t.value;
  for (auto& p : params.all()) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) throw UserError("checkpoint is missing parameter " + p.name);
    if (!it->second->same_shape(p.value))
      throw UserError("parameter " + p.name + " has shape " + it->second->shape_string() +
                      " in the checkpoint but " + p.value.shape_string() + " in the model");
    p.value = *it->second;
  }
  if (by_name.size() != params.all().size())
    throw UserError("checkpoint has " + std::to_string(by_name.size()) +
                    " tensors but the model has " + std::to_string(params.all().size()));
}

}  // namespace bfamr
