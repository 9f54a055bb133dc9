#include "drc/param_store.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "drc/error.hpp"

namespace drc {

namespace {

constexpr char kMagic[8] = {'D', 'R', 'C', 'C', 'K', 'P', 'T', '1'};

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const std::string& in, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}

}  // namespace

std::size_t ParamStore::add(std::string name, Tensor value) {
  if (find(name)) throw ContractError("duplicate parameter '" + name + "'");
  names_.push_back(std::move(name));
  tensors_.push_back(std::move(value));
  return tensors_.size() - 1;
}

std::optional<std::size_t> ParamStore::find(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t ParamStore::index(const std::string& name) const {
  if (auto i = find(name)) return *i;
  throw ContractError("missing parameter '" + name + "'");
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor& t : tensors_) n += t.size();
  return n;
}

std::string encode_checkpoint(const ParamStore& params, const nlohmann::json& meta) {
  nlohmann::json manifest;
  manifest["format"] = "drc-checkpoint";
  manifest["version"] = 1;
  manifest["meta"] = meta;
  manifest["tensors"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    manifest["tensors"].push_back({{"name", params.name(i)}, {"shape", params[i].shape()}, {"offset", offset}});
    offset += params[i].size();
  }
  const std::string text = manifest.dump();
  std::string out(kMagic, sizeof kMagic);
  put_u64(out, text.size());
  out += text;
  out.reserve(out.size() + offset * 8);
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (double v : params[i].data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw ParseError("not a checkpoint file (bad magic)");
  }
  const std::uint64_t len = get_u64(bytes, 8);
  if (16 + len > bytes.size()) throw ParseError("checkpoint manifest truncated");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.substr(16, len));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint manifest: ") + e.what());
  }
  const std::size_t base = 16 + len;
  Checkpoint ck;
  ck.meta = manifest.value("meta", nlohmann::json::object());
  for (const auto& rec : manifest.at("tensors")) {
    const auto shape = rec.at("shape").get<std::vector<std::size_t>>();
    const std::uint64_t off = rec.at("offset").get<std::uint64_t>();
    Tensor t(shape, 0.0);
    if (base + (off + t.size()) * 8 > bytes.size()) throw ParseError("checkpoint data truncated");
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = std::bit_cast<double>(get_u64(bytes, base + (off + i) * 8));
    ck.params.add(rec.at("name").get<std::string>(), std::move(t));
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const ParamStore& params, const nlohmann::json& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint '" + path.string() + "'");
  const std::string bytes = encode_checkpoint(params, meta);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return decode_checkpoint(buf.str());
}

}  // namespace drc
