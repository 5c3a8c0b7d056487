#pragma once

#include <stdexcept>
#include <string>

namespace pqpf {

// Base class for all toolkit failures.  The CLI maps these to exit code 2.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FormatError : Error { using Error::Error; };

// ingest
struct MissingLeadError : Error { using Error::Error; };
struct InconsistentAccumulationError : Error { using Error::Error; };
struct OutOfDomainError : Error { using Error::Error; };
struct GapError : Error { using Error::Error; };
struct EmptyBoxError : Error { using Error::Error; };

// climatology
struct InsufficientHistoryError : Error { using Error::Error; };

// emos / bma
struct InfiniteMeanError : Error { using Error::Error; };
struct DegenerateTrainingError : Error { using Error::Error; };
struct ComponentDomainError : Error { using Error::Error; };
struct GroupMismatchError : Error { using Error::Error; };
struct RmmInputError : Error { using Error::Error; };

// verify
struct EmptyInputError : Error { using Error::Error; };
struct AlignmentError : Error { using Error::Error; };

}  // namespace pqpf
