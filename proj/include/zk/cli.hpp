#pragma once

#include <ostream>

namespace zk {

// Entry point of the zklab command line; returns the process exit code.
// Exit codes: 0 success, 1 a verification failed, 2 usage or config error, 3 runtime error.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace zk
