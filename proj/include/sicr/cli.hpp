#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace sicr {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitMissingInput = 2;
inline constexpr int kExitSchemaMismatch = 3;

/// Entry point of the sicr command-line tool; args exclude the program name.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sicr
