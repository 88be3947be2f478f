// SPDX-License-Identifier: Apache-2.0

#ifndef OWNSAN_VALIDATE_H
#define OWNSAN_VALIDATE_H

#include <string>
#include <vector>

#include "ownsan/ir.h"

namespace ownsan {

struct Diagnostic {
  std::string function; // empty for program-level rules
  int line = 0;
  std::string rule;     // stable rule name, e.g. "unknown label"
  std::string message;
};

std::string format_diagnostic(const Diagnostic &d);

// Empty iff every structural invariant of the IR holds.
std::vector<Diagnostic> validate_program(const Program &p);

} // namespace ownsan

#endif // OWNSAN_VALIDATE_H
