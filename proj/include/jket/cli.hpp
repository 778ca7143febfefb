#pragma once

#include <string>
#include <vector>

namespace jket {

// Entry point behind main(). Returns the process exit status: 0 on success,
// 2 on usage/config errors, 1 on any other failure. Every error printed to
// stderr carries the originating module's error kind and location.
int run_command(const std::vector<std::string>& args);

}  // namespace jket
