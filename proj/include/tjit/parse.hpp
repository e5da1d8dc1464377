#pragma once

#include <string>
#include <string_view>

#include "tjit/coreir.hpp"

namespace tjit {

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int col, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ", col " +
                           std::to_string(col) + ": " + what),
        line(line),
        col(col) {}
  int line;
  int col;
};

// Parses the CoreIR text format. Line oriented:
//
//   # comment
//   Function <name>(<r1>, <r2>):
//   l1: r3 <- r1 + r2 l2
//   l2: Return r3
//   version          # starts the optional speculation-carrying version
//   l1: ...
//
// The first label line of a version is its entry point. Registers are
// canonically "r<k>" and labels "l<k>" (k >= 1); the lexer also accepts
// longhand spellings such as "reg1". Throws ParseError.
Program parse_program(std::string_view text);

// Canonical text form; parse_program(pretty_print(p)) == p structurally.
std::string pretty_print(const Program& p);
std::string pretty_print(const Instr& ins);
std::string pretty_print(const Expr& e);

}  // namespace tjit
