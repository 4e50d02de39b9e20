#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "bfamr/amr.hpp"

namespace bfamr {

// Parses one PENMAN expression, e.g. "(e / end-01 :ARG1 (m / meet-03))".
// Lines starting with '#' are skipped. Throws ParseError with a byte offset.
AmrGraph parse_penman(std::string_view text);

// Splits a file body into PENMAN blocks separated by blank lines; a line
// that already holds a complete expression also ends a block.
std::vector<std::string> split_penman_blocks(std::string_view text);

struct PenmanStyle {
  bool indent = true;
};

// Deterministic serialization: children ordered by label, reverse flag, then
// vertex id. Throws UserError for graphs that cannot be written.
std::string write_penman(const AmrGraph& graph, PenmanStyle style = {});

}  // namespace bfamr
