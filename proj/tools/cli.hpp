#ifndef SOS_TOOLS_CLI_HPP
#define SOS_TOOLS_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace sos::cli {

// Exit codes. Classification results use 0-2; the rest follow sysexits.h.
inline constexpr int kExitSos = 0;
inline constexpr int kExitNotSos = 1;
inline constexpr int kExitUnknown = 2;
inline constexpr int kExitUsage = 64;
inline constexpr int kExitDataError = 65;  // unparsable polynomial or malformed input file
inline constexpr int kExitSoftware = 70;
inline constexpr int kExitIoError = 74;
inline constexpr int kExitNoPermission = 77;  // endpoint rejected or missing credential

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int dispatch(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace sos::cli

#endif  // SOS_TOOLS_CLI_HPP
