#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ers {

struct source_span {
  std::string file;
  int line = 0;
  int col = 0;
  int len = 0;
};

enum class severity { error, warning, note };

struct diagnostic {
  severity sev = severity::error;
  std::string code;
  std::string message;
  source_span span;
};

std::string format_diagnostic(const diagnostic& d);

/// Thrown by engine operations on unrecoverable misuse (unbound variables at
/// instantiation time, budget exhaustion, ill-sorted declarations).
struct engine_error : std::runtime_error {
  explicit engine_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ers
