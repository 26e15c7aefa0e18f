#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "strata/common.hpp"

namespace strata {

enum ExitCode : int { exit_ok = 0, exit_invalid = 1, exit_degenerate = 2, exit_selftest_failed = 3 };

// Runs the command-line driver. Results go to --out when given, otherwise to out.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// "2^-2..2^-6" (dyadic, inclusive), "a,b,c", or a single number.
std::vector<double> parse_radii(const std::string& text);

// Comma-separated coordinates.
Vector parse_point(const std::string& text);

// JSON (an array of coordinate arrays, or an object with "points") or whitespace/comma separated rows.
std::vector<Vector> read_points(const std::string& path);

}  // namespace strata
