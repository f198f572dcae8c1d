#pragma once

#include <stdexcept>
#include <string>

namespace eood {

// Every failure the engine reports derives from Error. The CLI maps the
// category to an exit code: usage/validation problems exit 2, I/O exit 1.
enum class ErrorCategory {
    validation,
    io,
};

class Error : public std::runtime_error {
  public:
    Error(std::string kind, ErrorCategory category, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)), category_(category) {}

    const std::string& kind() const noexcept { return kind_; }
    ErrorCategory category() const noexcept { return category_; }

  private:
    std::string kind_;
    ErrorCategory category_;
};

#define EOOD_DEFINE_ERROR(Name, kind_tag, cat)                                  \
    class Name : public Error {                                                 \
      public:                                                                   \
        explicit Name(const std::string& message)                               \
            : Error(kind_tag, ErrorCategory::cat, message) {}                   \
    }

EOOD_DEFINE_ERROR(DomainError, "domain", validation);
EOOD_DEFINE_ERROR(InsufficientSamplesError, "insufficient_samples", validation);
EOOD_DEFINE_ERROR(AlignmentError, "alignment", validation);
EOOD_DEFINE_ERROR(NoSignalError, "no_signal", validation);
EOOD_DEFINE_ERROR(ManifestError, "manifest", validation);
EOOD_DEFINE_ERROR(ValidationError, "validation", validation);
EOOD_DEFINE_ERROR(IoError, "io", io);
EOOD_DEFINE_ERROR(FormatError, "format", io);
EOOD_DEFINE_ERROR(CorruptionError, "corruption", io);
EOOD_DEFINE_ERROR(IngestError, "ingest", io);

#undef EOOD_DEFINE_ERROR

}  // namespace eood
