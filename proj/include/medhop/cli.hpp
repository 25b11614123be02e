#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace medhop {

// Full command-line surface, montable in-process for tests. `args` excludes
// the program name. Returns 0 on success, 1 on usage errors (help printed to
// `err`), 2 on runtime failures.
int cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace medhop
