#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace descseq::cli {

enum class Split { kTrain, kValidation, kTest };

/// 80/10/10 assignment from a stable hash of the file name.
Split split_of(std::string_view file_name);
std::string_view split_name(Split split);

/// Runs one subcommand. Errors are reported to `err` as a single line
/// "error: <ErrorClass>: <message>"; outputs written before the failure are
/// removed. Returns the process exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace descseq::cli
