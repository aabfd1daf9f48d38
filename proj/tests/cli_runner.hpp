#pragma once

// Runs the newsrel binary in a shell and captures stdout and the exit code.

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <string>

#ifndef NEWSREL_CLI_PATH
#error "NEWSREL_CLI_PATH must name the newsrel executable"
#endif

namespace fixtures {

struct CliResult {
  int exit_code = -1;
  std::string out;
};

inline CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + NEWSREL_CLI_PATH + "\" " + args + " 2>/dev/null";
  CliResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

}  // namespace fixtures
