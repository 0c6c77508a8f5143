#pragma once

#include <stdexcept>
#include <string>

namespace dshock {

class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

#define DSHOCK_DEFINE_ERROR(Name)                                          \
  class Name : public Error {                                              \
   public:                                                                 \
    explicit Name(const std::string& what) : Error(#Name, what) {}         \
  };

DSHOCK_DEFINE_ERROR(NotSupersonic)
DSHOCK_DEFINE_ERROR(NoDownstreamState)
DSHOCK_DEFINE_ERROR(DegenerateMap)
DSHOCK_DEFINE_ERROR(ImplicitSolveFailed)
DSHOCK_DEFINE_ERROR(DegenerateSample)
DSHOCK_DEFINE_ERROR(SingularPrincipalPart)
DSHOCK_DEFINE_ERROR(FormNotCoercive)
DSHOCK_DEFINE_ERROR(VanishingViolation)
DSHOCK_DEFINE_ERROR(CflViolation)
DSHOCK_DEFINE_ERROR(BoundarySolveDegenerate)
DSHOCK_DEFINE_ERROR(IncompatibleData)
DSHOCK_DEFINE_ERROR(SeedDegenerate)
DSHOCK_DEFINE_ERROR(RegimeExit)
DSHOCK_DEFINE_ERROR(NoContraction)
DSHOCK_DEFINE_ERROR(InadmissibleBackground)
DSHOCK_DEFINE_ERROR(ConfigError)
DSHOCK_DEFINE_ERROR(NonFiniteField)

#undef DSHOCK_DEFINE_ERROR

}  // namespace dshock
