#include "molerun/scheduler/flavor.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <regex>
#include <set>
#include <sstream>

#include "molerun/support/format.hpp"

namespace molerun::scheduler {

namespace {

std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  std::istringstream is{std::string(line)};
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
  }
  return out;
}

bool starts_with(std::string_view s, std::string_view prefix) { return s.substr(0, prefix.size()) == prefix; }

bool plain_word(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isalnum(c) || std::string_view("_./=:,+-@%").find(static_cast<char>(c)) != std::string_view::npos;
  });
}

std::string shell_quote(std::string_view s) {
  if (plain_word(s)) return std::string(s);
  std::string out = "'";
  for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return out + "'";
}

/// Inverse of shell_quote for the subset it produces (plain words, single
/// quotes, backslash-escaped characters).
std::vector<std::string> shell_split(std::string_view line) {
  std::vector<std::string> words;
  std::string current;
  bool in_word = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (c == '\'') {
      const auto close = line.find('\'', i + 1);
      if (close == std::string_view::npos) throw FormatError("unterminated quote in '" + std::string(line) + "'");
      current.append(line.substr(i + 1, close - i - 1));
      i = close;
      in_word = true;
    } else if (c == '\\' && i + 1 < line.size()) {
      current += line[++i];
      in_word = true;
    } else if (c == ' ' || c == '\t') {
      if (in_word) words.push_back(std::move(current));
      current.clear();
      in_word = false;
    } else {
      current += c;
      in_word = true;
    }
  }
  if (in_word) words.push_back(std::move(current));
  return words;
}

std::string condor_quote(std::string_view s) {
  std::string body;
  for (char c : s) {
    if (c == '\'') body += "''";
    else if (c == '"') body += "\"\"";
    else body += c;
  }
  if (!s.empty() && s.find_first_of(" \t'\"") == std::string_view::npos) return body;
  return "'" + body + "'";
}

std::vector<std::string> condor_split(std::string_view value) {
  value = trim(value);
  if (value.size() < 2 || value.front() != '"' || value.back() != '"')
    throw FormatError("condor arguments must be double-quoted");
  value = value.substr(1, value.size() - 2);
  std::vector<std::string> words;
  std::string current;
  bool in_word = false;
  for (std::size_t i = 0; i < value.size(); ++i) {
    const char c = value[i];
    if (c == '"' && i + 1 < value.size() && value[i + 1] == '"') {
      current += '"';
      ++i;
      in_word = true;
    } else if (c == '\'') {
      ++i;
      while (i < value.size()) {
        if (value[i] == '\'' && i + 1 < value.size() && value[i + 1] == '\'') {
          current += '\'';
          i += 2;
        } else if (value[i] == '\'') {
          break;
        } else if (value[i] == '"' && i + 1 < value.size() && value[i + 1] == '"') {
          current += '"';
          i += 2;
        } else {
          current += value[i++];
        }
      }
      in_word = true;
    } else if (c == ' ' || c == '\t') {
      if (in_word) words.push_back(std::move(current));
      current.clear();
      in_word = false;
    } else {
      current += c;
      in_word = true;
    }
  }
  if (in_word) words.push_back(std::move(current));
  return words;
}

std::chrono::seconds parse_walltime(std::string_view text) {
  const auto parts = [&] {
    std::vector<std::string> p;
    std::string cur;
    for (char c : text) {
      if (c == ':') {
        p.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    p.push_back(cur);
    return p;
  }();
  if (parts.size() != 3) throw FormatError("walltime must be HH:MM:SS: '" + std::string(text) + "'");
  std::int64_t total = 0;
  for (const auto& p : parts) {
    const auto v = parse_integer(p);
    if (!v || *v < 0) throw FormatError("walltime must be HH:MM:SS: '" + std::string(text) + "'");
    total = total * 60 + *v;
  }
  return std::chrono::seconds(total);
}

std::int64_t parse_memory(std::string_view text, std::string_view suffix) {
  if (!suffix.empty()) {
    if (text.size() < suffix.size() || text.substr(text.size() - suffix.size()) != suffix)
      throw FormatError("memory '" + std::string(text) + "' lacks unit " + std::string(suffix));
    text.remove_suffix(suffix.size());
  }
  const auto v = parse_integer(text);
  if (!v) throw FormatError("bad memory value '" + std::string(text) + "'");
  return *v;
}

struct ShellDirectives {
  std::string_view prefix;
};

std::string render_shell(Flavor flavor, const JobDescription& d) {
  const auto wt = format_walltime(d.walltime);
  const auto mem = std::to_string(d.memory_mb);
  std::vector<std::string> directives;
  switch (flavor) {
    case Flavor::pbs:
      directives = {"#PBS -o " + d.stdout_file, "#PBS -e " + d.stderr_file};
      if (d.queue) directives.push_back("#PBS -q " + *d.queue);
      directives.push_back("#PBS -l walltime=" + wt);
      directives.push_back("#PBS -l mem=" + mem + "mb");
      break;
    case Flavor::sge:
      directives = {"#$ -S /bin/sh", "#$ -o " + d.stdout_file, "#$ -e " + d.stderr_file};
      if (d.queue) directives.push_back("#$ -q " + *d.queue);
      directives.push_back("#$ -l h_rt=" + wt);
      directives.push_back("#$ -l h_vmem=" + mem + "M");
      break;
    case Flavor::slurm:
      directives = {"#SBATCH --output=" + d.stdout_file, "#SBATCH --error=" + d.stderr_file};
      if (d.queue) directives.push_back("#SBATCH --partition=" + *d.queue);
      directives.push_back("#SBATCH --time=" + wt);
      directives.push_back("#SBATCH --mem=" + mem);
      break;
    case Flavor::oar:
      directives = {"#OAR -O " + d.stdout_file, "#OAR -E " + d.stderr_file};
      if (d.queue) directives.push_back("#OAR -q " + *d.queue);
      directives.push_back("#OAR -l walltime=" + wt);
      directives.push_back("#OAR -p memnode>=" + mem);
      break;
    case Flavor::condor: break;
  }
  std::string out = "#!/bin/sh\n";
  for (const auto& line : directives) out += line + "\n";
  out += "cd " + shell_quote(d.working_directory) + "\n";
  out += shell_quote(d.executable);
  for (const auto& arg : d.arguments) out += " " + shell_quote(arg);
  return out + "\n";
}

std::string render_condor(const JobDescription& d) {
  if (d.queue) throw RenderError(Flavor::condor, "queue");
  std::string args;
  for (const auto& a : d.arguments) args += (args.empty() ? "" : " ") + condor_quote(a);
  std::string out;
  out += "universe = vanilla\n";
  out += "executable = " + d.executable + "\n";
  out += "arguments = \"" + args + "\"\n";
  out += "initialdir = " + d.working_directory + "\n";
  out += "output = " + d.stdout_file + "\n";
  out += "error = " + d.stderr_file + "\n";
  out += "request_memory = " + std::to_string(d.memory_mb) + "\n";
  out += "periodic_remove = (JobStatus == 2) && ((time() - EnteredCurrentStatus) > " +
         std::to_string(d.walltime.count()) + ")\n";
  out += "queue 1\n";
  return out;
}

ParsedScript parse_condor(std::string_view script) {
  JobDescription d;
  bool queued = false;
  bool has_exe = false;
  static const std::regex remove_re(R"(\(JobStatus == 2\) && \(\(time\(\) - EnteredCurrentStatus\) > (\d+)\))");
  for (auto line : lines_of(script)) {
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    if (starts_with(line, "queue")) {
      queued = true;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw FormatError("malformed submit description line '" + std::string(line) + "'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key == "executable") {
      d.executable = value;
      has_exe = true;
    } else if (key == "arguments") {
      d.arguments = condor_split(value);
    } else if (key == "initialdir") {
      d.working_directory = value;
    } else if (key == "output") {
      d.stdout_file = value;
    } else if (key == "error") {
      d.stderr_file = value;
    } else if (key == "request_memory") {
      d.memory_mb = parse_memory(value, "");
    } else if (key == "periodic_remove") {
      std::smatch m;
      if (!std::regex_match(value, m, remove_re)) throw FormatError("unsupported periodic_remove '" + value + "'");
      d.walltime = std::chrono::seconds(std::stoll(m[1].str()));
    }
  }
  if (!queued || !has_exe) throw FormatError("condor submit description needs executable and queue");
  return {Flavor::condor, d};
}

ParsedScript parse_shell(std::string_view script) {
  std::optional<Flavor> flavor;
  JobDescription d;
  auto set_flavor = [&](Flavor f, std::string_view line) {
    if (flavor && *flavor != f) throw FormatError("mixed scheduler directives at '" + std::string(line) + "'");
    flavor = f;
  };
  std::vector<std::string_view> body;
  for (auto line : lines_of(script)) {
    line = trim(line);
    if (line.empty() || starts_with(line, "#!")) continue;
    if (starts_with(line, "#PBS ")) {
      set_flavor(Flavor::pbs, line);
      const auto words = split_ws(line.substr(5));
      if (words.size() != 2) throw FormatError("malformed directive '" + std::string(line) + "'");
      if (words[0] == "-o") d.stdout_file = words[1];
      else if (words[0] == "-e") d.stderr_file = words[1];
      else if (words[0] == "-q") d.queue = words[1];
      else if (words[0] == "-l" && starts_with(words[1], "walltime=")) d.walltime = parse_walltime(words[1].substr(9));
      else if (words[0] == "-l" && starts_with(words[1], "mem=")) d.memory_mb = parse_memory(words[1].substr(4), "mb");
      else throw FormatError("unsupported directive '" + std::string(line) + "'");
    } else if (starts_with(line, "#$ ")) {
      set_flavor(Flavor::sge, line);
      const auto words = split_ws(line.substr(3));
      if (words.size() != 2) throw FormatError("malformed directive '" + std::string(line) + "'");
      if (words[0] == "-S") continue;
      if (words[0] == "-o") d.stdout_file = words[1];
      else if (words[0] == "-e") d.stderr_file = words[1];
      else if (words[0] == "-q") d.queue = words[1];
      else if (words[0] == "-l" && starts_with(words[1], "h_rt=")) d.walltime = parse_walltime(words[1].substr(5));
      else if (words[0] == "-l" && starts_with(words[1], "h_vmem=")) d.memory_mb = parse_memory(words[1].substr(7), "M");
      else throw FormatError("unsupported directive '" + std::string(line) + "'");
    } else if (starts_with(line, "#SBATCH ")) {
      set_flavor(Flavor::slurm, line);
      const std::string arg(trim(line.substr(8)));
      const auto eq = arg.find('=');
      if (eq == std::string::npos) throw FormatError("malformed directive '" + std::string(line) + "'");
      const auto key = arg.substr(0, eq);
      const auto value = arg.substr(eq + 1);
      if (key == "--output") d.stdout_file = value;
      else if (key == "--error") d.stderr_file = value;
      else if (key == "--partition") d.queue = value;
      else if (key == "--time") d.walltime = parse_walltime(value);
      else if (key == "--mem") d.memory_mb = parse_memory(value, "");
      else throw FormatError("unsupported directive '" + std::string(line) + "'");
    } else if (starts_with(line, "#OAR ")) {
      set_flavor(Flavor::oar, line);
      const auto words = split_ws(line.substr(5));
      if (words.size() != 2) throw FormatError("malformed directive '" + std::string(line) + "'");
      if (words[0] == "-O") d.stdout_file = words[1];
      else if (words[0] == "-E") d.stderr_file = words[1];
      else if (words[0] == "-q") d.queue = words[1];
      else if (words[0] == "-l" && starts_with(words[1], "walltime=")) d.walltime = parse_walltime(words[1].substr(9));
      else if (words[0] == "-p" && starts_with(words[1], "memnode>=")) d.memory_mb = parse_memory(words[1].substr(9), "");
      else throw FormatError("unsupported directive '" + std::string(line) + "'");
    } else if (line.front() == '#') {
      continue;
    } else {
      body.push_back(line);
    }
  }
  if (!flavor) throw FormatError("script carries no scheduler directive");
  if (body.size() != 2 || !starts_with(body[0], "cd "))
    throw FormatError("script body must be 'cd <dir>' followed by one command line");
  const auto dir = shell_split(body[0].substr(3));
  if (dir.size() != 1) throw FormatError("malformed cd line '" + std::string(body[0]) + "'");
  d.working_directory = dir[0];
  auto words = shell_split(body[1]);
  if (words.empty()) throw FormatError("empty command line");
  d.executable = words.front();
  d.arguments.assign(words.begin() + 1, words.end());
  return {*flavor, d};
}

const std::set<std::string>& codes(Flavor flavor, Phase phase) {
  using Table = std::array<std::set<std::string>, 4>;
  static const Table slurm{{{"PD", "CF", "S", "ST", "RH", "RF", "RQ", "RS", "RD"},
                            {"R", "CG", "SO", "SI"},
                            {"CD"},
                            {"F", "TO", "CA", "NF", "OOM", "BF", "DL", "PR", "RV", "SE"}}};
  static const Table pbs{{{"Q", "H", "W", "T", "S", "U"}, {"R", "E", "B"}, {"C", "F", "X"}, {}}};
  static const Table oar{{{"W", "H", "S", "r"}, {"L", "R", "F"}, {"T"}, {"E"}}};
  static const Table condor{{{"I", "S"}, {"R", "<", ">"}, {"C"}, {"H", "X"}}};
  static const Table none{};
  const auto i = static_cast<std::size_t>(phase);
  switch (flavor) {
    case Flavor::slurm: return slurm[i];
    case Flavor::pbs: return pbs[i];
    case Flavor::oar: return oar[i];
    case Flavor::condor: return condor[i];
    case Flavor::sge: return none[i];
  }
  return none[i];
}

std::optional<Phase> sge_phase(std::string_view state) {
  if (state.empty() || state.find_first_not_of("dEhrRsStTwq") != std::string_view::npos) return std::nullopt;
  if (state.find_first_of("Ed") != std::string_view::npos) return Phase::failed;
  if (state.find_first_of("sST") != std::string_view::npos) return Phase::queued;
  if (state.find_first_of("rt") != std::string_view::npos) return Phase::running;
  if (state.find_first_of("qwh") != std::string_view::npos) return Phase::queued;
  return std::nullopt;
}

std::optional<Phase> try_phase(Flavor flavor, std::string_view state) {
  if (flavor == Flavor::sge) return sge_phase(state);
  for (auto p : {Phase::queued, Phase::running, Phase::done, Phase::failed})
    if (codes(flavor, p).count(std::string(state))) return p;
  return std::nullopt;
}

bool is_separator(std::string_view line) {
  return !line.empty() && line.find('-') != std::string_view::npos &&
         line.find_first_not_of("- ") == std::string_view::npos;
}

std::string_view id_number(std::string_view id) { return id.substr(0, id.find('.')); }

}  // namespace

std::string_view to_string(Flavor flavor) {
  switch (flavor) {
    case Flavor::pbs: return "pbs";
    case Flavor::sge: return "sge";
    case Flavor::slurm: return "slurm";
    case Flavor::oar: return "oar";
    case Flavor::condor: return "condor";
  }
  return "?";
}

std::optional<Flavor> parse_flavor(std::string_view text) {
  for (auto f : kAllFlavors)
    if (to_string(f) == text) return f;
  return std::nullopt;
}

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::queued: return "queued";
    case Phase::running: return "running";
    case Phase::done: return "done";
    case Phase::failed: return "failed";
  }
  return "?";
}

void JobDescription::validate() const {
  if (walltime.count() <= 0) throw DomainError("job description: wall-time must be positive");
  if (memory_mb <= 0) throw DomainError("job description: memory must be positive");
  if (executable.empty()) throw DomainError("job description: executable must not be empty");
  if (working_directory.empty()) throw DomainError("job description: working directory must not be empty");
  auto single_token = [](const std::string& s) { return !s.empty() && s.find_first_of(" \t\n") == std::string::npos; };
  if (!single_token(stdout_file) || !single_token(stderr_file))
    throw DomainError("job description: output file names must be single words");
  if (queue && !single_token(*queue)) throw DomainError("job description: queue name must be a single word");
  auto no_newline = [](const std::string& s) { return s.find('\n') == std::string::npos; };
  if (!no_newline(executable) || !no_newline(working_directory) ||
      !std::all_of(arguments.begin(), arguments.end(), no_newline))
    throw DomainError("job description: fields must not contain newlines");
}

RenderError::RenderError(Flavor flavor, std::string field)
    : Error(std::string(to_string(flavor)) + " cannot express field '" + field + "'"), field_(std::move(field)) {}

std::string format_walltime(std::chrono::seconds walltime) {
  const auto total = walltime.count();
  char buf[32];
  std::snprintf(buf, sizeof buf, "%02lld:%02lld:%02lld", static_cast<long long>(total / 3600),
                static_cast<long long>(total / 60 % 60), static_cast<long long>(total % 60));
  return buf;
}

std::string render_submission_script(Flavor flavor, const JobDescription& description) {
  description.validate();
  return flavor == Flavor::condor ? render_condor(description) : render_shell(flavor, description);
}

ParsedScript parse_submission_script(std::string_view script) {
  for (auto line : lines_of(script)) {
    line = trim(line);
    if (starts_with(line, "universe")) return parse_condor(script);
  }
  return parse_shell(script);
}

std::vector<StatusRow> parse_listing(Flavor flavor, std::string_view text) {
  static const std::regex slurm_id(R"(\d+(_\d+|_\[[^\]]*\])?)");
  static const std::regex pbs_id(R"(\d+(\[\d*\])?(\.[\w.\-*]*)?)");
  static const std::regex digits(R"(\d+)");
  static const std::regex condor_id(R"(\d+\.\d+)");
  static const std::regex condor_summary(R"(\d+ jobs;.*)");

  std::vector<StatusRow> rows;
  std::vector<std::pair<std::size_t, std::size_t>> spans;  // OAR fixed-width columns
  auto fail = [](std::string_view line, const std::string& why) {
    throw ParseError("unparseable status line (" + why + "): '" + std::string(line) + "'", std::string(line));
  };
  auto add_row = [&](std::string_view line, std::string id, std::string state) {
    if (!try_phase(flavor, state)) fail(line, "unknown state " + state);
    rows.push_back({std::move(id), std::move(state)});
  };

  for (auto raw : lines_of(text)) {
    const auto line = trim(raw);
    if (line.empty()) continue;
    const auto tok = split_ws(line);
    switch (flavor) {
      case Flavor::slurm:
        if (tok[0] == "JOBID") continue;
        if (tok.size() < 7 || !std::regex_match(tok[0], slurm_id)) fail(line, "expected squeue row");
        add_row(line, tok[0], tok[4]);
        break;
      case Flavor::pbs:
        if (starts_with(line, "Job id") || starts_with(line, "Job ID") || is_separator(line)) continue;
        if (tok.size() != 6 || !std::regex_match(tok[0], pbs_id)) fail(line, "expected qstat row");
        add_row(line, tok[0], tok[4]);
        break;
      case Flavor::sge:
        if (starts_with(line, "job-ID") || is_separator(line)) continue;
        if (tok.size() < 8 || !std::regex_match(tok[0], digits) || !parse_real(tok[1])) fail(line, "expected qstat row");
        add_row(line, tok[0], tok[4]);
        break;
      case Flavor::oar: {
        if (starts_with(line, "Job id")) continue;
        if (is_separator(line)) {
          spans.clear();
          std::size_t pos = 0;
          while ((pos = raw.find('-', pos)) != std::string_view::npos) {
            const auto end = raw.find(' ', pos);
            spans.emplace_back(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
            pos = end == std::string_view::npos ? raw.size() : end;
          }
          continue;
        }
        if (spans.size() < 6) fail(line, "row before column separator");
        auto cell = [&](std::size_t i) {
          if (spans[i].first >= raw.size()) return std::string();
          return std::string(trim(raw.substr(spans[i].first, spans[i].second)));
        };
        const auto id = cell(0);
        const auto state = cell(4);
        if (!std::regex_match(id, digits) || state.empty()) fail(line, "expected oarstat row");
        add_row(line, id, state);
        break;
      }
      case Flavor::condor:
        if (starts_with(line, "-- ") || tok[0] == "ID" || starts_with(line, "Total for") ||
            std::regex_match(std::string(line), condor_summary))
          continue;
        if (tok.size() < 8 || !std::regex_match(tok[0], condor_id)) fail(line, "expected condor_q row");
        add_row(line, tok[0], tok[5]);
        break;
    }
  }
  return rows;
}

Phase phase_of(Flavor flavor, std::string_view state) {
  if (auto p = try_phase(flavor, state)) return *p;
  throw ParseError("unknown " + std::string(to_string(flavor)) + " state '" + std::string(state) + "'",
                   std::string(state));
}

Phase parse_status(Flavor flavor, std::string_view text, std::string_view id) {
  for (const auto& row : parse_listing(flavor, text)) {
    const bool match = flavor == Flavor::pbs ? id_number(row.id) == id_number(id) : row.id == id;
    if (match) return phase_of(flavor, row.state);
  }
  return Phase::done;
}

std::string status_command(Flavor flavor, std::string_view id, std::string_view custom_template) {
  std::string tpl(custom_template);
  if (tpl.empty()) {
    switch (flavor) {
      case Flavor::pbs: tpl = "qstat ${id}"; break;
      case Flavor::sge: tpl = "qstat"; break;
      case Flavor::slurm: tpl = "squeue --jobs=${id}"; break;
      case Flavor::oar: tpl = "oarstat --job ${id}"; break;
      case Flavor::condor: tpl = "condor_q -nobatch ${id}"; break;
    }
  }
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const auto at = tpl.find("${id}", pos);
    out += tpl.substr(pos, at - pos);
    if (at == std::string::npos) break;
    out += id;
    pos = at + 5;
  }
  return out;
}

}  // namespace molerun::scheduler
