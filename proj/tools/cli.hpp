#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rfa::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Runs one `rfa` verb. args excludes the program name. Usage errors return 2,
// runtime failures 1 with a diagnostic on `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Shipped data directory: $RFA_DATA_DIR, else the build-time default.
std::string data_dir();

}  // namespace rfa::cli
