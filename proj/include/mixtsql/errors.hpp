#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace mixtsql {

// Base error carrying a stable machine-readable code alongside the message.
// The CLI maps the code into structured error JSON.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define MIXTSQL_DEFINE_ERROR(Name)                              \
  class Name : public Error {                                   \
   public:                                                      \
    explicit Name(const std::string& what) : Error(#Name, what) {} \
  }

MIXTSQL_DEFINE_ERROR(IncompatibleLinkDomain);
MIXTSQL_DEFINE_ERROR(SeriesTooShort);
MIXTSQL_DEFINE_ERROR(InvalidSpec);
MIXTSQL_DEFINE_ERROR(DomainViolation);
MIXTSQL_DEFINE_ERROR(NonFinitePredictor);
MIXTSQL_DEFINE_ERROR(ZeroVarianceDenominator);
MIXTSQL_DEFINE_ERROR(SingularS2);
MIXTSQL_DEFINE_ERROR(EmptyCrossLags);
MIXTSQL_DEFINE_ERROR(ConvergenceQuality);
MIXTSQL_DEFINE_ERROR(InvalidReplicationCount);
MIXTSQL_DEFINE_ERROR(BootstrapFailure);
MIXTSQL_DEFINE_ERROR(TruncationInsufficient);
MIXTSQL_DEFINE_ERROR(ExplosivePath);
MIXTSQL_DEFINE_ERROR(FamilyDomainMismatch);
MIXTSQL_DEFINE_ERROR(ConstantSeries);
MIXTSQL_DEFINE_ERROR(ParseError);
MIXTSQL_DEFINE_ERROR(MissingColumn);
MIXTSQL_DEFINE_ERROR(InvalidConfig);

#undef MIXTSQL_DEFINE_ERROR

}  // namespace mixtsql
