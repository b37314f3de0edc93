#pragma once

#include <stdexcept>
#include <string>

namespace csskit {

// Base class for every error raised by the library. `module()` names the
// component that raised it so front ends can report it verbatim.
class Error : public std::runtime_error {
 public:
  Error(std::string module, std::string kind, const std::string& what)
      : std::runtime_error(what), module_(std::move(module)), kind_(std::move(kind)) {}

  const std::string& module() const noexcept { return module_; }
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string module_;
  std::string kind_;
};

#define CSSKIT_DEFINE_ERROR(Name, Module)                                   \
  class Name : public Error {                                               \
   public:                                                                  \
    explicit Name(const std::string& what) : Error(Module, #Name, what) {}  \
  };

CSSKIT_DEFINE_ERROR(NonFinite, "symmat")
CSSKIT_DEFINE_ERROR(NotPSD, "symmat")
CSSKIT_DEFINE_ERROR(NotSymmetric, "symmat")
CSSKIT_DEFINE_ERROR(IndexError, "symmat")
CSSKIT_DEFINE_ERROR(DimensionMismatch, "symmat")
CSSKIT_DEFINE_ERROR(KTooLarge, "search")
CSSKIT_DEFINE_ERROR(TooManySubsets, "search")
CSSKIT_DEFINE_ERROR(InvalidConfig, "search")
CSSKIT_DEFINE_ERROR(HasMissing, "covest")
CSSKIT_DEFINE_ERROR(InsufficientOverlap, "covest")
CSSKIT_DEFINE_ERROR(ZeroVariance, "covest")
CSSKIT_DEFINE_ERROR(ParseError, "covest")
CSSKIT_DEFINE_ERROR(DegreesOfFreedom, "sizesel")
CSSKIT_DEFINE_ERROR(NoFeasibleK, "sizesel")
CSSKIT_DEFINE_ERROR(DimMismatch, "simlab")

#undef CSSKIT_DEFINE_ERROR

}  // namespace csskit
