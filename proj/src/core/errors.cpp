#include "layerpainter/errors.hpp"

namespace lp {

const char* error_kind_name(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::shape: return "shape error";
    case ErrorKind::degenerate_input: return "degenerate input";
    case ErrorKind::plan: return "plan error";
    case ErrorKind::format: return "format error";
    case ErrorKind::truncated: return "truncated data";
    case ErrorKind::schema: return "schema error";
    case ErrorKind::vocabulary: return "vocabulary error";
    case ErrorKind::config: return "configuration error";
    case ErrorKind::io: return "i/o error";
  }
  return "error";
}

}  // namespace lp
