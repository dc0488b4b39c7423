#pragma once

#include <stdexcept>
#include <string>

namespace nde {

// Base of every failure raised by the library. The name() tag is what the CLI
// and the invariant battery print.
class Error : public std::runtime_error {
 public:
  Error(const char* tag, const std::string& what)
      : std::runtime_error(std::string(tag) + ": " + what), tag_(tag) {}
  const char* name() const noexcept { return tag_; }

 private:
  const char* tag_;
};

#define NDE_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                    \
   public:                                                       \
    explicit Name(const std::string& what) : Error(#Name, what) {} \
  };

NDE_DEFINE_ERROR(InvalidInput)
NDE_DEFINE_ERROR(ToleranceNotMet)
NDE_DEFINE_ERROR(BoundaryTooClose)
NDE_DEFINE_ERROR(DerivativeVanished)
NDE_DEFINE_ERROR(InsufficientRoots)
NDE_DEFINE_ERROR(Incomplete)
NDE_DEFINE_ERROR(NearSpectrum)
NDE_DEFINE_ERROR(MultipleRoot)
NDE_DEFINE_ERROR(WrongCount)
NDE_DEFINE_ERROR(DoubleRootExcluded)
NDE_DEFINE_ERROR(InconsistentHistory)
NDE_DEFINE_ERROR(SignalUnderflow)

#undef NDE_DEFINE_ERROR

}  // namespace nde
