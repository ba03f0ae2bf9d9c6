#pragma once

#include <stdexcept>
#include <string>

namespace lp {

enum class ErrorKind {
  shape,
  degenerate_input,
  plan,
  format,
  truncated,
  schema,
  vocabulary,
  config,
  io,
};

const char* error_kind_name(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

template <ErrorKind K>
class KindError : public Error {
 public:
  explicit KindError(const std::string& what) : Error(K, what) {}
};

using ShapeError = KindError<ErrorKind::shape>;
using DegenerateInputError = KindError<ErrorKind::degenerate_input>;
using PlanError = KindError<ErrorKind::plan>;
using FormatError = KindError<ErrorKind::format>;
using TruncationError = KindError<ErrorKind::truncated>;
using SchemaError = KindError<ErrorKind::schema>;
using VocabularyError = KindError<ErrorKind::vocabulary>;
using ConfigError = KindError<ErrorKind::config>;
using IoError = KindError<ErrorKind::io>;

}  // namespace lp
