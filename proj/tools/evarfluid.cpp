// evarfluid <command> --config <path> [--key=value ...]
//
// Exit status: 0 when every check passed, 1 when failure records were written,
// 2 for usage, configuration or I/O errors (reported as one JSON line on stderr).

#include <cstring>
#include <iostream>
#include <string>
#include <vector>

#include "evarfluid/config.hpp"
#include "evarfluid/error.hpp"
#include "evarfluid/suites.hpp"
#include "json.hpp"

namespace {

constexpr const char* kUsage =
    "usage: evarfluid <command> [--config <path>] [--key=value ...]\n"
    "\n"
    "commands:\n"
    "  verify-metric        flow-map metric identities, energy pullbacks, action variation\n"
    "  verify-variational   Euler-Lagrange residuals, constrained case, Newtonian reduction\n"
    "  verify-thermo        conservation, energy budget, entropy production, thermo identities\n"
    "  simulate             run a scenario and write diagnostics and snapshots\n"
    "\n"
    "Any configuration key can be overridden as --key=value (e.g. --dt=1e-3,\n"
    "--grid.n=32, --constitutive.family=power_law). EVARFLUID_THREADS caps the\n"
    "number of kernel threads unless 'threads' is set.\n";

int config_error(const std::string& code, const std::string& message) {
  nlohmann::json j;
  j["check"] = "configuration";
  j["code"] = code;
  j["message"] = message;
  std::cerr << j.dump() << "\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  if (args.empty() || args[0] == "--help" || args[0] == "-h") {
    std::cout << kUsage;
    return args.empty() ? 2 : 0;
  }

  std::string config_path;
  std::vector<std::string> overrides;
  std::size_t i = 0;
  if (args[0].rfind("--", 0) != 0) overrides.push_back("command=" + args[i++]);
  for (; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "--help" || a == "-h") {
      std::cout << kUsage;
      return 0;
    }
    if (a == "--config") {
      if (i + 1 == args.size()) return config_error("usage-error", "--config needs a path");
      config_path = args[++i];
    } else if (a.rfind("--config=", 0) == 0) {
      config_path = a.substr(std::strlen("--config="));
    } else if (a.rfind("--", 0) == 0 && a.find('=') != std::string::npos) {
      overrides.push_back(a);
    } else {
      return config_error("usage-error", "unexpected argument '" + a + "'");
    }
  }

  try {
    const evf::RunConfig cfg = evf::parse_config(config_path, overrides);
    return evf::run_command(cfg, std::cout);
  } catch (const evf::Error& e) {
    return config_error(e.code(), e.what());
  } catch (const std::exception& e) {
    return config_error("internal-error", e.what());
  }
}
