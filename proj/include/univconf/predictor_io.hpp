#pragma once

#include <iosfwd>
#include <string>

#include "univconf/core.hpp"

namespace univconf {

// Text format (whitespace separated, '#' starts a comment):
//
//   objects x
//   labels 0 1
//   n 2
//   flavor e
//   flags train_invariant label_only      # or: flags none
//   default 0                             # optional
//   rows
//   0 1 1 2.25                            # labels z_1..z_{n+1}, then value
//   0 1 1 , x x x 2.25                    # optional objects after ','
//
// Rows without objects cover every object assignment. Sequences without a
// row take the default; with no default every sequence must be listed.
// Declared flags are checked on load. Values may be 'inf'.
Predictor read_predictor(std::istream& in, const std::string& origin = "<stream>");
Predictor load_predictor(const std::string& path);

// Writes the full table (zero rows omitted under 'default 0').
void write_predictor(std::ostream& out, const Predictor& pred);
void save_predictor(const std::string& path, const Predictor& pred);

}  // namespace univconf
