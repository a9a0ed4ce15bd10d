#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mvaa::cli {

// Exit statuses: 0 success, 2 bad input or usage, 3 processing failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitProcessing = 3;

// args excludes the program name. JSON results go to out, diagnostics to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

}  // namespace mvaa::cli
