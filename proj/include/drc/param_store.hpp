#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "drc/tensor.hpp"

namespace drc {

// Ordered collection of named trainable tensors.
class ParamStore {
 public:
  std::size_t add(std::string name, Tensor value);

  std::size_t size() const { return tensors_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  Tensor& operator[](std::size_t i) { return tensors_[i]; }
  const Tensor& operator[](std::size_t i) const { return tensors_[i]; }

  std::optional<std::size_t> find(const std::string& name) const;
  // Throws ContractError when missing.
  std::size_t index(const std::string& name) const;
  Tensor& at(const std::string& name) { return tensors_[index(name)]; }
  const Tensor& at(const std::string& name) const { return tensors_[index(name)]; }

  std::size_t parameter_count() const;
  bool operator==(const ParamStore&) const = default;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> tensors_;
};

// Checkpoint container: 8-byte magic "DRCCKPT1", u64 little-endian manifest
// length, UTF-8 JSON manifest, then every tensor's float64 values
// little-endian in manifest order. The manifest lists (name, shape, offset)
// records plus a free-form "meta" object.
void save_checkpoint(const std::filesystem::path& path, const ParamStore& params, const nlohmann::json& meta);

struct Checkpoint {
  ParamStore params;
  nlohmann::json meta;
};
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string encode_checkpoint(const ParamStore& params, const nlohmann::json& meta);
Checkpoint decode_checkpoint(const std::string& bytes);

}  // namespace drc
