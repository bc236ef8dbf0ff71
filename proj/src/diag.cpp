#include "ers/diag.hpp"

#include <sstream>

namespace ers {

std::string format_diagnostic(const diagnostic& d) {
  std::ostringstream os;
  if (!d.span.file.empty()) {
    os << d.span.file << ":" << d.span.line << ":" << d.span.col << ": ";
  }
  switch (d.sev) {
    case severity::error: os << "error"; break;
    case severity::warning: os << "warning"; break;
    case severity::note: os << "note"; break;
  }
  if (!d.code.empty()) os << " [" << d.code << "]";
  os << ": " << d.message;
  return os.str();
}

}  // namespace ers
