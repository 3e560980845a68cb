#pragma once

#include <string>
#include <vector>

namespace lnf::cli {

// Entry point shared by the lnfno binary and the test suites. argv excludes
// the program name. Returns 0 on success, 1 on domain errors, 2 on usage
// errors.
int run(const std::vector<std::string>& argv);

}  // namespace lnf::cli
