#include "molerun/dataflow/external.hpp"

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "molerun/dataflow/hooks.hpp"
#include "molerun/support/format.hpp"

namespace molerun::dataflow {

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

/// Returns the wait status of `/bin/sh -c command` run in `dir`.
int spawn_shell(const std::string& command, const std::filesystem::path& dir) {
  const std::string dir_s = dir.string();
  const std::string out_s = (dir / "stdout.txt").string();
  const std::string err_s = (dir / "stderr.txt").string();

  const pid_t pid = fork();
  if (pid < 0) throw Error(std::string("fork failed: ") + std::strerror(errno));
  if (pid == 0) {
    if (chdir(dir_s.c_str()) != 0) _exit(126);
    const int out = open(out_s.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    const int err = open(err_s.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    const int in = open("/dev/null", O_RDONLY);
    if (out < 0 || err < 0 || in < 0) _exit(126);
    dup2(in, STDIN_FILENO);
    dup2(out, STDOUT_FILENO);
    dup2(err, STDERR_FILENO);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  int status = 0;
  while (waitpid(pid, &status, 0) < 0) {
    if (errno != EINTR) throw Error(std::string("waitpid failed: ") + std::strerror(errno));
  }
  return status;
}

}  // namespace

std::vector<std::string> placeholders(std::string_view command) {
  std::vector<std::string> names;
  std::size_t pos = 0;
  while ((pos = command.find("${", pos)) != std::string_view::npos) {
    const auto close = command.find('}', pos + 2);
    if (close == std::string_view::npos) throw FormatError("unclosed placeholder in '" + std::string(command) + "'");
    names.emplace_back(command.substr(pos + 2, close - pos - 2));
    pos = close + 1;
  }
  return names;
}

Context parse_key_values(std::string_view text, const std::vector<Prototype>& outputs) {
  Context out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view line = trim(text.substr(0, nl));
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos || eq == 0)
      throw FormatError("output line " + std::to_string(line_no) + " is not key=value: '" + std::string(line) + "'");
    const std::string key(trim(line.substr(0, eq)));
    for (const auto& proto : outputs) {
      if (proto.name() != key) continue;
      try {
        out = out.with(proto, parse_value(proto.kind(), line.substr(eq + 1)));
      } catch (const FormatError& e) {
        throw FormatError("output line " + std::to_string(line_no) + ": " + e.what());
      }
    }
  }
  return out;
}

Context run_external_command(const std::string& command, const std::vector<Prototype>& outputs,
                             const OutputRule& rule, const Context& inputs, const ExecutionScope& scope) {
  for (const auto& name : placeholders(command))
    if (!inputs.contains_name(name))
      throw PreconditionError("command template references unbound input ${" + name + "}");
  const std::string rendered = render_template(command, inputs);

  const auto dir = scope.run_root / "jobs" / scope.job_id;
  std::filesystem::create_directories(dir);
  const int status = spawn_shell(rendered, dir);

  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    const std::string code = WIFEXITED(status) ? "exit status " + std::to_string(WEXITSTATUS(status))
                                               : "signal " + std::to_string(WTERMSIG(status));
    throw TaskFailure("command '" + rendered + "' failed with " + code, slurp(dir / "stderr.txt"));
  }
  const auto source = rule.file ? dir / *rule.file : dir / "stdout.txt";
  if (rule.file && !std::filesystem::exists(source))
    throw FormatError("command did not write output file " + *rule.file);
  return parse_key_values(slurp(source), outputs);
}

Kernel external_command_kernel(std::string command, std::vector<Prototype> outputs, OutputRule rule) {
  return [command = std::move(command), outputs = std::move(outputs), rule = std::move(rule)](
             const Context& inputs, const ExecutionScope& scope) {
    return run_external_command(command, outputs, rule, inputs, scope);
  };
}

}  // namespace molerun::dataflow
