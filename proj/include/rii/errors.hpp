#pragma once

#include <stdexcept>
#include <string>

namespace rii {

// Base class for all pipeline errors surfaced to callers / the CLI.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define RII_DEFINE_ERROR(NAME)                                   \
  class NAME : public Error {                                    \
   public:                                                       \
    explicit NAME(const std::string& msg) : Error(#NAME ": " + msg) {} \
  }

RII_DEFINE_ERROR(SchemaMismatch);
RII_DEFINE_ERROR(InvalidLabel);
RII_DEFINE_ERROR(DuplicateId);
RII_DEFINE_ERROR(NotLabeled);
RII_DEFINE_ERROR(EmptyCorpus);
RII_DEFINE_ERROR(PositionOverflow);
RII_DEFINE_ERROR(TokenOutOfRange);
RII_DEFINE_ERROR(DimensionMismatch);
RII_DEFINE_ERROR(ShapeMismatch);
RII_DEFINE_ERROR(FingerprintMismatch);
RII_DEFINE_ERROR(EmptyList);
RII_DEFINE_ERROR(IdSetMismatch);
RII_DEFINE_ERROR(SingleClass);
RII_DEFINE_ERROR(EmptyInput);
RII_DEFINE_ERROR(IoError);
RII_DEFINE_ERROR(ConfigError);

#undef RII_DEFINE_ERROR

}  // namespace rii
