#pragma once

#include <stdexcept>
#include <string>

namespace physguard {

// Base for every error the library raises on bad input or violated contracts.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define PHYSGUARD_DEFINE_ERROR(Name)          \
  class Name : public Error {                 \
   public:                                    \
    using Error::Error;                       \
  }

PHYSGUARD_DEFINE_ERROR(EmptySignal);
PHYSGUARD_DEFINE_ERROR(SequenceTooShort);
PHYSGUARD_DEFINE_ERROR(ShapeError);
PHYSGUARD_DEFINE_ERROR(DegenerateLabels);
PHYSGUARD_DEFINE_ERROR(EmptyShard);
PHYSGUARD_DEFINE_ERROR(TooFewClients);
PHYSGUARD_DEFINE_ERROR(RoundAborted);
PHYSGUARD_DEFINE_ERROR(EmptyClass);
PHYSGUARD_DEFINE_ERROR(BadCosts);
PHYSGUARD_DEFINE_ERROR(FormatError);
PHYSGUARD_DEFINE_ERROR(ConfigError);

#undef PHYSGUARD_DEFINE_ERROR

}  // namespace physguard
