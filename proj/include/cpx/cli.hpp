#pragma once
// `cpx run | sweep | verify` front end.

#include <iosfwd>
#include <string>
#include <vector>

#include "cpx/runtime.hpp"

namespace cpx {

/// args[0] is the program name. Exit status: 0 ok, 1 verification or runtime failure, 2 usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Parses `key = value` lines ('#' starts a comment) into (key, value) pairs; keys use dashes.
std::vector<std::pair<std::string, std::string>> parse_config_file(const std::string& text);

}  // namespace cpx
