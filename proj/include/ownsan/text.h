// SPDX-License-Identifier: Apache-2.0
//
// Textual form of the mini-IR (.lrs): parser and printer.
//
// Grammar (one instruction or label per line, ';' starts a comment):
//
//   program  := function*
//   function := 'fn' NAME '(' [param (',' param)*] ')' ['->' kind] ['entry']
//               '{' body '}'
//   param    := '%' NAME ':' kind
//   kind     := 'owner' | 'raw' | 'scalar' | 'func'
//   body     := (label | instr)*            ; '{ ret }' on one line is allowed
//   label    := NAME ':'
//   instr    := ['%' NAME '='] opcode operands ('!unsafe' | '!rawptr')*
//   operand  := '%' NAME | '@' NAME | INTEGER
//
// Opcode-specific operand forms:
//   store_field %o.f, V        load_field %o.f as KIND
//   as_raw %p [count N]        api_unchecked V, OP, N   (OP: add sub mul neg shl shr)
//   call NAME(V, ...)          icall %fp(V, ...) sig(KIND,...[->KIND])
//   br L                       cbr V, L1, L2            ret [V]
//
// The parser resolves every operand and result kind, derives `address_taken`,
// and sets `rawptr` on exactly the instructions touching a raw value. Writing
// `!rawptr` on any other instruction is rejected as a malformed attribute.

#ifndef OWNSAN_TEXT_H
#define OWNSAN_TEXT_H

#include <functional>
#include <string>
#include <vector>

#include "ownsan/ir.h"

namespace ownsan {

Program parse_program(const std::string &text);
std::string print_program(const Program &p);

// Lines of the form `#TAG ...` inside a function body. Only accepted by
// parse_annotated; `index` is the instruction that follows the line.
struct Annotation {
  std::string function;
  size_t index = 0;
  std::string tag;                 // e.g. "i4"
  std::vector<std::string> words;  // remaining tokens, verbatim
  int line = 0;
};

Program parse_annotated(const std::string &text, std::vector<Annotation> &out);

// Recomputes operand/result kinds, rawptr attributes and address_taken.
// Throws ParseError naming the line of an unresolvable value.
void resolve_program(Program &p);

std::string print_instruction(const Instruction &in);

// Extra lines emitted (indented) before instruction `index` of `function`.
using LineHook =
    std::function<std::vector<std::string>(const std::string &function, size_t index)>;
std::string print_program_with(const Program &p, const LineHook &before);

} // namespace ownsan

#endif // OWNSAN_TEXT_H
