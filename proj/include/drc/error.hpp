#pragma once

#include <stdexcept>
#include <string>

namespace drc {

// Base of every error raised by the library. The kind() tag is what the CLI
// maps onto exit codes (config-class errors exit 2, everything else 1).
class Error : public std::runtime_error {
 public:
  enum class Kind { Parse, Schema, Config, Domain, Shape, Numeric, Contract, Length, Io };

  Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

#define DRC_DEFINE_ERROR(Name, KindTag)                                      \
  class Name : public Error {                                                \
   public:                                                                   \
    explicit Name(const std::string& what) : Error(Kind::KindTag, what) {}   \
  };

DRC_DEFINE_ERROR(ParseError, Parse)
DRC_DEFINE_ERROR(SchemaError, Schema)
DRC_DEFINE_ERROR(ConfigError, Config)
DRC_DEFINE_ERROR(DomainError, Domain)
DRC_DEFINE_ERROR(ShapeError, Shape)
DRC_DEFINE_ERROR(NumericError, Numeric)
DRC_DEFINE_ERROR(ContractError, Contract)
DRC_DEFINE_ERROR(LengthError, Length)
DRC_DEFINE_ERROR(IoError, Io)

#undef DRC_DEFINE_ERROR

}  // namespace drc
