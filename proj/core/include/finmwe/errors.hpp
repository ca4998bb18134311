#ifndef FINMWE_ERRORS_HPP
#define FINMWE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace finmwe {

/// Base class for all finmwe error signals.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define FINMWE_DEFINE_ERROR(Name)                    \
  struct Name : ::finmwe::Error {                    \
    using ::finmwe::Error::Error;                    \
    Name() : ::finmwe::Error(#Name) {}               \
  }

}  // namespace finmwe

#endif
