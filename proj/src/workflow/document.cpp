#include "molerun/workflow/document.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "molerun/support/format.hpp"

namespace molerun::workflow {

namespace {

const std::set<std::string> kTaskKinds{"surrogate", "schaffer", "external", "statistic", "identity"};
const std::set<std::string> kEnvironmentKinds{"local-threads", "local-processes", "simulated-distributed",
                                              "batch-scheduler"};
const std::set<std::string> kDescriptors{"median", "mean", "min", "max", "sd", "standard-deviation"};

class Reader {
 public:
  Reader(std::string origin, LineIndex& index) : origin_(std::move(origin)), index_(index) {}

  static int line(const YAML::Node& node) { return node.Mark().line + 1; }

  [[noreturn]] void fail(const YAML::Node& node, const std::string& message) const {
    const int l = node.IsDefined() ? line(node) : 0;
    throw LoadError(origin_ + ":" + std::to_string(l) + ": " + message, l);
  }

  void note(const std::string& key, const YAML::Node& node) { index_.lines[key] = line(node); }

  std::string text(const YAML::Node& node, const std::string& what) const {
    if (!node.IsScalar()) fail(node, what + " must be a scalar");
    return node.Scalar();
  }

  std::int64_t integer(const YAML::Node& node, const std::string& what) const {
    const auto v = parse_integer(text(node, what));
    if (!v) fail(node, what + " must be an integer");
    return *v;
  }

  double real(const YAML::Node& node, const std::string& what) const {
    const auto v = parse_real(text(node, what));
    if (!v) fail(node, what + " must be a number");
    return *v;
  }

  bool boolean(const YAML::Node& node, const std::string& what) const {
    const auto t = text(node, what);
    if (t == "true") return true;
    if (t == "false") return false;
    fail(node, what + " must be true or false");
  }

  std::vector<std::string> names(const YAML::Node& node, const std::string& what) const {
    if (!node.IsSequence()) fail(node, what + " must be a list");
    std::vector<std::string> out;
    for (const auto& item : node) out.push_back(text(item, what + " entry"));
    return out;
  }

  void check_keys(const YAML::Node& node, const std::set<std::string>& allowed, const std::string& what) const {
    if (!node.IsMap()) fail(node, what + " must be a mapping");
    for (const auto& kv : node) {
      const auto key = kv.first.Scalar();
      if (!allowed.count(key)) fail(kv.first, "unknown key '" + key + "' in " + what);
    }
  }

 private:
  std::string origin_;
  LineIndex& index_;
};

TerminationDecl read_termination(const Reader& r, const YAML::Node& node, const std::string& what) {
  r.check_keys(node, {"generations", "seconds"}, what);
  TerminationDecl t;
  if (node["generations"]) t.generations = r.integer(node["generations"], what + ".generations");
  if (node["seconds"]) t.seconds = r.real(node["seconds"], what + ".seconds");
  if (!t.generations && !t.seconds) r.fail(node, what + " needs generations or seconds");
  return t;
}

std::vector<StatisticDecl> read_statistics(const Reader& r, const YAML::Node& node) {
  if (!node.IsSequence()) r.fail(node, "statistics must be a list of [source, target, descriptor]");
  std::vector<StatisticDecl> out;
  for (const auto& item : node) {
    if (!item.IsSequence() || item.size() != 3) r.fail(item, "statistic must be [source, target, descriptor]");
    StatisticDecl s{r.text(item[0], "statistic source"), r.text(item[1], "statistic target"),
                    r.text(item[2], "statistic descriptor")};
    if (!kDescriptors.count(s.descriptor)) r.fail(item[2], "unknown descriptor '" + s.descriptor + "'");
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

WorkflowFile parse_workflow(const std::string& text, const std::string& origin) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw LoadError(origin + ":" + std::to_string(e.mark.line + 1) + ":" + std::to_string(e.mark.column + 1) +
                        ": syntax error: " + e.msg,
                    e.mark.line + 1);
  }
  WorkflowFile doc;
  Reader r(origin, doc.index);
  if (!root.IsMap()) throw LoadError(origin + ": a workflow file is a mapping of sections");
  r.check_keys(root,
               {"seed", "prototypes", "tasks", "capsules", "transitions", "replicate", "hooks", "nsga2", "islands",
                "environments", "assign", "retry"},
               "workflow file");

  if (root["seed"]) doc.seed = r.integer(root["seed"], "seed");

  std::map<std::string, dataflow::Kind> kinds;
  if (const auto node = root["prototypes"]) {
    if (!node.IsMap()) r.fail(node, "prototypes must map names to kinds");
    for (const auto& kv : node) {
      const auto name = r.text(kv.first, "prototype name");
      const auto kind = dataflow::parse_kind(r.text(kv.second, "prototype kind"));
      if (!kind) r.fail(kv.second, "unknown kind '" + kv.second.Scalar() + "' for prototype " + name);
      if (kinds.count(name)) r.fail(kv.first, "prototype " + name + " declared twice");
      kinds[name] = *kind;
      doc.prototypes.push_back({name, *kind});
      r.note("prototypes." + name, kv.first);
    }
  }
  auto known = [&](const YAML::Node& at, const std::string& name, const std::string& where) {
    if (!kinds.count(name)) r.fail(at, where + " references undeclared prototype '" + name + "'");
  };

  std::set<std::string> task_names;
  if (const auto node = root["tasks"]) {
    if (!node.IsMap()) r.fail(node, "tasks must map names to task definitions");
    for (const auto& kv : node) {
      TaskDecl t;
      t.name = r.text(kv.first, "task name");
      const auto where = "task " + t.name;
      const auto& body = kv.second;
      r.check_keys(body,
                   {"kind", "inputs", "outputs", "defaults", "command", "output_file", "statistics", "noise",
                    "memory_mb", "duration_ms"},
                   where);
      if (!body["kind"]) r.fail(kv.first, where + " has no kind");
      t.kind = r.text(body["kind"], "task kind");
      if (!kTaskKinds.count(t.kind)) r.fail(body["kind"], "unknown task kind '" + t.kind + "'");
      if (body["inputs"]) t.inputs = r.names(body["inputs"], where + " inputs");
      if (body["outputs"]) t.outputs = r.names(body["outputs"], where + " outputs");
      for (const auto& n : t.inputs) known(body["inputs"], n, where);
      for (const auto& n : t.outputs) known(body["outputs"], n, where);
      if (const auto d = body["defaults"]) {
        if (!d.IsMap()) r.fail(d, where + " defaults must be a mapping");
        for (const auto& dv : d) {
          const auto name = r.text(dv.first, "default name");
          known(dv.first, name, where);
          const auto raw = r.text(dv.second, "default value");
          try {
            t.defaults.emplace_back(name, dataflow::render(dataflow::parse_value(kinds[name], raw)));
          } catch (const FormatError& e) {
            r.fail(dv.second, where + ": default for " + name + ": " + e.what());
          }
        }
      }
      if (body["command"]) t.command = r.text(body["command"], "command");
      if (body["output_file"]) t.output_file = r.text(body["output_file"], "output_file");
      if (body["statistics"]) {
        t.statistics = read_statistics(r, body["statistics"]);
        for (const auto& s : t.statistics) {
          known(body["statistics"], s.source, where);
          known(body["statistics"], s.target, where);
        }
      }
      if (body["noise"]) t.noise = r.boolean(body["noise"], "noise");
      if (body["memory_mb"]) t.memory_mb = r.integer(body["memory_mb"], "memory_mb");
      if (body["duration_ms"]) t.duration_ms = r.real(body["duration_ms"], "duration_ms");
      if (t.kind == "external" && t.command.empty()) r.fail(kv.first, where + " needs a command");
      if (t.kind == "statistic" && (t.statistics.empty() || body["inputs"] || body["outputs"]))
        r.fail(kv.first, where + ": statistic tasks take statistics, not inputs/outputs");
      if (!task_names.insert(t.name).second) r.fail(kv.first, "task " + t.name + " declared twice");
      r.note("tasks." + t.name, kv.first);
      doc.tasks.push_back(std::move(t));
    }
  }

  std::set<std::string> capsule_ids;
  if (const auto node = root["capsules"]) {
    if (!node.IsMap()) r.fail(node, "capsules must map capsule ids to task names");
    doc.capsules.emplace();
    for (const auto& kv : node) {
      CapsuleDecl c{r.text(kv.first, "capsule id"), r.text(kv.second, "capsule task")};
      if (!task_names.count(c.task)) r.fail(kv.second, "capsule " + c.id + " wraps unknown task '" + c.task + "'");
      if (!capsule_ids.insert(c.id).second) r.fail(kv.first, "capsule " + c.id + " declared twice");
      r.note("capsules." + c.id, kv.first);
      doc.capsules->push_back(std::move(c));
    }
  } else {
    capsule_ids = task_names;
  }

  if (const auto node = root["replicate"]) {
    if (!node.IsSequence()) r.fail(node, "replicate must be a list");
    for (const auto& item : node) {
      r.check_keys(item, {"name", "model", "seed", "count", "statistic", "statistics"}, "replicate entry");
      for (const char* key : {"name", "model", "seed", "count", "statistic", "statistics"})
        if (!item[key]) r.fail(item, std::string("replicate entry needs ") + key);
      ReplicateDecl rep;
      rep.name = r.text(item["name"], "replicate name");
      rep.model = r.text(item["model"], "replicate model");
      rep.seed = r.text(item["seed"], "replicate seed");
      known(item["seed"], rep.seed, "replicate " + rep.name);
      const auto count = r.integer(item["count"], "replicate count");
      if (count < 1) r.fail(item["count"], "replicate count must be at least 1");
      rep.count = static_cast<std::size_t>(count);
      rep.statistic = r.text(item["statistic"], "replicate statistic");
      rep.statistics = read_statistics(r, item["statistics"]);
      for (const auto& s : rep.statistics) {
        known(item["statistics"], s.source, "replicate " + rep.name);
        known(item["statistics"], s.target, "replicate " + rep.name);
      }
      if (!capsule_ids.count(rep.model)) r.fail(item["model"], "replicate " + rep.name + ": unknown capsule '" + rep.model + "'");
      for (const auto& id : {rep.name, rep.statistic})
        if (!capsule_ids.insert(id).second) r.fail(item, "capsule " + id + " declared twice");
      r.note("capsules." + rep.name, item);
      r.note("capsules." + rep.statistic, item);
      doc.replicates.push_back(std::move(rep));
    }
  }

  if (const auto node = root["transitions"]) {
    if (!node.IsSequence()) r.fail(node, "transitions must be a list");
    for (const auto& item : node) {
      r.check_keys(item, {"from", "to", "explore", "aggregate"}, "transition");
      if (!item["from"] || !item["to"]) r.fail(item, "transition needs from and to");
      TransitionDecl t;
      t.from = r.text(item["from"], "transition from");
      t.to = r.text(item["to"], "transition to");
      for (const auto& [key, id] : {std::pair{"from", t.from}, std::pair{"to", t.to}})
        if (!capsule_ids.count(id)) r.fail(item[key], "transition references unknown capsule '" + id + "'");
      if (item["explore"] && item["aggregate"]) r.fail(item, "a transition cannot both explore and aggregate");
      if (const auto e = item["explore"]) {
        r.check_keys(e, {"prototype", "count", "values"}, "explore");
        if (!e["prototype"]) r.fail(e, "explore needs a prototype");
        t.mode = "explore";
        t.prototype = r.text(e["prototype"], "explored prototype");
        known(e["prototype"], t.prototype, "explore");
        if (e["count"].IsDefined() == e["values"].IsDefined()) r.fail(e, "explore needs exactly one of count or values");
        if (e["count"]) {
          const auto c = r.integer(e["count"], "explore count");
          if (c < 1) r.fail(e["count"], "explore count must be at least 1");
          t.count = static_cast<std::size_t>(c);
        } else {
          for (const auto& raw : r.names(e["values"], "explore values")) {
            try {
              t.values.push_back(dataflow::render(dataflow::parse_value(kinds[t.prototype], raw)));
            } catch (const FormatError& ex) {
              r.fail(e["values"], std::string("explore value: ") + ex.what());
            }
          }
          if (t.values.empty()) r.fail(e["values"], "explore values must not be empty");
        }
      } else if (item["aggregate"]) {
        if (!r.boolean(item["aggregate"], "aggregate")) r.fail(item["aggregate"], "aggregate must be true when present");
        t.mode = "aggregate";
      }
      r.note("transitions." + std::to_string(doc.transitions.size()), item);
      doc.transitions.push_back(std::move(t));
    }
  }

  if (const auto node = root["nsga2"]) {
    r.check_keys(node, {"name", "mu", "lambda", "termination", "reevaluate", "genome", "objectives"}, "nsga2");
    Nsga2Decl n;
    if (node["name"]) n.name = r.text(node["name"], "nsga2 name");
    if (node["mu"]) n.mu = r.integer(node["mu"], "mu");
    if (node["lambda"]) n.lambda = r.integer(node["lambda"], "lambda");
    if (!node["termination"]) r.fail(node, "nsga2 needs a termination");
    n.termination = read_termination(r, node["termination"], "termination");
    if (node["reevaluate"]) n.reevaluate = r.real(node["reevaluate"], "reevaluate");
    if (!node["genome"] || !node["genome"].IsSequence()) r.fail(node, "nsga2 needs a genome list of [prototype, lower, upper]");
    for (const auto& g : node["genome"]) {
      if (!g.IsSequence() || g.size() != 3) r.fail(g, "gene must be [prototype, lower, upper]");
      GeneDecl gene{r.text(g[0], "gene"), r.real(g[1], "gene lower bound"), r.real(g[2], "gene upper bound")};
      known(g[0], gene.name, "nsga2 genome");
      if (kinds[gene.name] != dataflow::Kind::real) r.fail(g[0], "gene " + gene.name + " must be a real prototype");
      n.genome.push_back(gene);
    }
    if (!node["objectives"]) r.fail(node, "nsga2 needs objectives");
    n.objectives = r.names(node["objectives"], "objectives");
    for (const auto& o : n.objectives) {
      known(node["objectives"], o, "nsga2 objectives");
      if (kinds[o] != dataflow::Kind::real) r.fail(node["objectives"], "objective " + o + " must be a real prototype");
    }
    r.note("nsga2", node);
    doc.nsga2 = std::move(n);
  }

  if (const auto node = root["islands"]) {
    r.check_keys(node, {"name", "island", "concurrency", "total", "sample", "island_termination", "duration_ms", "memory_mb"},
                 "islands");
    if (!doc.nsga2) r.fail(node, "islands need an nsga2 section");
    IslandsDecl is;
    if (node["name"]) is.name = r.text(node["name"], "islands name");
    if (node["island"]) is.island = r.text(node["island"], "island capsule name");
    if (node["concurrency"]) is.concurrency = r.integer(node["concurrency"], "concurrency");
    if (node["total"]) is.total = r.integer(node["total"], "total");
    if (node["sample"]) is.sample = r.integer(node["sample"], "sample");
    if (!node["island_termination"]) r.fail(node, "islands need an island_termination");
    is.island_termination = read_termination(r, node["island_termination"], "island_termination");
    if (node["duration_ms"]) is.duration_ms = r.real(node["duration_ms"], "duration_ms");
    if (node["memory_mb"]) is.memory_mb = r.integer(node["memory_mb"], "memory_mb");
    r.note("islands", node);
    doc.islands = std::move(is);
  }

  if (doc.nsga2) capsule_ids.insert(doc.nsga2->name);
  if (doc.islands) {
    capsule_ids.insert(doc.islands->name);
    capsule_ids.insert(doc.islands->island);
  }

  if (const auto node = root["hooks"]) {
    if (!node.IsSequence()) r.fail(node, "hooks must be a list");
    for (const auto& item : node) {
      r.check_keys(item, {"capsule", "to-string", "display", "save-population"}, "hook");
      if (!item["capsule"]) r.fail(item, "hook needs a capsule");
      HookDecl h;
      h.capsule = r.text(item["capsule"], "hook capsule");
      if (!capsule_ids.count(h.capsule)) r.fail(item["capsule"], "hook attached to unknown capsule '" + h.capsule + "'");
      const int actions = item["to-string"].IsDefined() + item["display"].IsDefined() + item["save-population"].IsDefined();
      if (actions != 1) r.fail(item, "hook needs exactly one of to-string, display, save-population");
      if (item["to-string"]) {
        h.kind = "to-string";
        h.prototypes = r.names(item["to-string"], "to-string prototypes");
        for (const auto& p : h.prototypes) known(item["to-string"], p, "hook");
      } else if (item["display"]) {
        h.kind = "display";
        h.format = r.text(item["display"], "display format");
      } else {
        h.kind = "save-population";
        h.directory = r.text(item["save-population"], "save-population directory");
        if (std::filesystem::path(h.directory).is_absolute())
          r.fail(item["save-population"], "save-population directory must be relative to the output directory");
      }
      r.note("hooks." + std::to_string(doc.hooks.size()), item);
      doc.hooks.push_back(std::move(h));
    }
  }

  std::set<std::string> env_names;
  if (const auto node = root["environments"]) {
    if (!node.IsMap()) r.fail(node, "environments must map names to definitions");
    for (const auto& kv : node) {
      EnvironmentDecl e;
      e.name = r.text(kv.first, "environment name");
      const auto where = "environment " + e.name;
      const auto& b = kv.second;
      r.check_keys(b,
                   {"kind", "capacity", "speeds", "latency_ms", "failure_probability", "memory_limit_mb", "walltime_s",
                    "default_duration_ms", "flavor", "memory_mb", "queue", "poll_s", "parse_retries", "scheduler"},
                   where);
      if (!b["kind"]) r.fail(kv.first, where + " has no kind");
      e.kind = r.text(b["kind"], "environment kind");
      if (!kEnvironmentKinds.count(e.kind)) r.fail(b["kind"], "unknown environment kind '" + e.kind + "'");
      if (b["capacity"]) e.capacity = r.integer(b["capacity"], "capacity");
      if (const auto s = b["speeds"]) {
        if (!s.IsSequence()) r.fail(s, "speeds must be a list");
        for (const auto& x : s) e.speeds.push_back(r.real(x, "speed"));
      }
      if (const auto l = b["latency_ms"]) {
        if (!l.IsSequence() || l.size() != 2) r.fail(l, "latency_ms must be [lo, hi]");
        e.latency_lo_ms = r.real(l[0], "latency");
        e.latency_hi_ms = r.real(l[1], "latency");
      }
      if (b["failure_probability"]) e.failure_probability = r.real(b["failure_probability"], "failure_probability");
      if (b["memory_limit_mb"]) e.memory_limit_mb = r.integer(b["memory_limit_mb"], "memory_limit_mb");
      if (b["walltime_s"]) e.walltime_s = r.integer(b["walltime_s"], "walltime_s");
      if (b["default_duration_ms"]) e.default_duration_ms = r.real(b["default_duration_ms"], "default_duration_ms");
      if (b["flavor"]) e.flavor = r.text(b["flavor"], "flavor");
      if (b["memory_mb"]) e.memory_mb = r.integer(b["memory_mb"], "memory_mb");
      if (b["queue"]) e.queue = r.text(b["queue"], "queue");
      if (b["poll_s"]) e.poll_s = r.real(b["poll_s"], "poll_s");
      if (b["parse_retries"]) e.parse_retries = r.integer(b["parse_retries"], "parse_retries");
      if (const auto sch = b["scheduler"]) {
        r.check_keys(sch, {"status_cmd"}, "scheduler");
        if (sch["status_cmd"]) e.status_cmd = r.text(sch["status_cmd"], "status_cmd");
      }
      if (e.kind == "batch-scheduler" && e.flavor.empty()) r.fail(kv.first, where + " needs a flavor");
      if (!env_names.insert(e.name).second) r.fail(kv.first, "environment " + e.name + " declared twice");
      r.note("environments." + e.name, kv.first);
      doc.environments.push_back(std::move(e));
    }
  }

  if (const auto node = root["assign"]) {
    if (!node.IsMap()) r.fail(node, "assign must map capsule patterns to environments");
    for (const auto& kv : node) {
      const auto pattern = r.text(kv.first, "capsule pattern");
      const auto env = r.text(kv.second, "environment name");
      if (!env_names.count(env)) r.fail(kv.second, "assignment to unknown environment '" + env + "'");
      r.note("assign." + pattern, kv.first);
      doc.assign.emplace_back(pattern, env);
    }
  }

  if (const auto node = root["retry"]) {
    r.check_keys(node, {"max_attempts", "backoff_ms"}, "retry");
    if (node["max_attempts"]) doc.retry.max_attempts = r.integer(node["max_attempts"], "max_attempts");
    if (node["backoff_ms"]) doc.retry.backoff_ms = r.integer(node["backoff_ms"], "backoff_ms");
  }
  return doc;
}

WorkflowFile read_workflow_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw LoadError(path.string() + ": cannot open workflow file");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_workflow(ss.str(), path.string());
}

namespace {

void emit_termination(YAML::Emitter& out, const TerminationDecl& t) {
  out << YAML::Flow << YAML::BeginMap;
  if (t.generations) out << YAML::Key << "generations" << YAML::Value << *t.generations;
  if (t.seconds) out << YAML::Key << "seconds" << YAML::Value << format_real(*t.seconds);
  out << YAML::EndMap;
}

void emit_statistics(YAML::Emitter& out, const std::vector<StatisticDecl>& stats) {
  out << YAML::BeginSeq;
  for (const auto& s : stats) out << YAML::Flow << YAML::BeginSeq << s.source << s.target << s.descriptor << YAML::EndSeq;
  out << YAML::EndSeq;
}

void emit_names(YAML::Emitter& out, const std::vector<std::string>& names) {
  out << YAML::Flow << YAML::BeginSeq;
  for (const auto& n : names) out << n;
  out << YAML::EndSeq;
}

}  // namespace

std::string serialize_workflow(const WorkflowFile& doc) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  if (doc.seed) out << YAML::Key << "seed" << YAML::Value << *doc.seed;

  out << YAML::Key << "prototypes" << YAML::Value << YAML::BeginMap;
  for (const auto& p : doc.prototypes) out << YAML::Key << p.name << YAML::Value << std::string(to_string(p.kind));
  out << YAML::EndMap;

  out << YAML::Key << "tasks" << YAML::Value << YAML::BeginMap;
  for (const auto& t : doc.tasks) {
    out << YAML::Key << t.name << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "kind" << YAML::Value << t.kind;
    if (t.kind != "statistic") {
      out << YAML::Key << "inputs" << YAML::Value;
      emit_names(out, t.inputs);
      out << YAML::Key << "outputs" << YAML::Value;
      emit_names(out, t.outputs);
    }
    if (!t.defaults.empty()) {
      out << YAML::Key << "defaults" << YAML::Value << YAML::BeginMap;
      for (const auto& [name, value] : t.defaults) out << YAML::Key << name << YAML::Value << YAML::DoubleQuoted << value;
      out << YAML::EndMap;
    }
    if (!t.command.empty()) out << YAML::Key << "command" << YAML::Value << YAML::DoubleQuoted << t.command;
    if (t.output_file) out << YAML::Key << "output_file" << YAML::Value << *t.output_file;
    if (!t.statistics.empty()) {
      out << YAML::Key << "statistics" << YAML::Value;
      emit_statistics(out, t.statistics);
    }
    if (!t.noise) out << YAML::Key << "noise" << YAML::Value << "false";
    if (t.memory_mb) out << YAML::Key << "memory_mb" << YAML::Value << t.memory_mb;
    if (t.duration_ms != 0) out << YAML::Key << "duration_ms" << YAML::Value << format_real(t.duration_ms);
    out << YAML::EndMap;
  }
  out << YAML::EndMap;

  if (doc.capsules) {
    out << YAML::Key << "capsules" << YAML::Value << YAML::BeginMap;
    for (const auto& c : *doc.capsules) out << YAML::Key << c.id << YAML::Value << c.task;
    out << YAML::EndMap;
  }

  if (!doc.replicates.empty()) {
    out << YAML::Key << "replicate" << YAML::Value << YAML::BeginSeq;
    for (const auto& rep : doc.replicates) {
      out << YAML::BeginMap << YAML::Key << "name" << YAML::Value << rep.name << YAML::Key << "model" << YAML::Value
          << rep.model << YAML::Key << "seed" << YAML::Value << rep.seed << YAML::Key << "count" << YAML::Value
          << rep.count << YAML::Key << "statistic" << YAML::Value << rep.statistic << YAML::Key << "statistics"
          << YAML::Value;
      emit_statistics(out, rep.statistics);
      out << YAML::EndMap;
    }
    out << YAML::EndSeq;
  }

  if (!doc.transitions.empty()) {
    out << YAML::Key << "transitions" << YAML::Value << YAML::BeginSeq;
    for (const auto& t : doc.transitions) {
      out << YAML::BeginMap << YAML::Key << "from" << YAML::Value << t.from << YAML::Key << "to" << YAML::Value << t.to;
      if (t.mode == "explore") {
        out << YAML::Key << "explore" << YAML::Value << YAML::BeginMap << YAML::Key << "prototype" << YAML::Value
            << t.prototype;
        if (t.count) out << YAML::Key << "count" << YAML::Value << *t.count;
        else {
          out << YAML::Key << "values" << YAML::Value << YAML::Flow << YAML::BeginSeq;
          for (const auto& v : t.values) out << YAML::DoubleQuoted << v;
          out << YAML::EndSeq;
        }
        out << YAML::EndMap;
      } else if (t.mode == "aggregate") {
        out << YAML::Key << "aggregate" << YAML::Value << "true";
      }
      out << YAML::EndMap;
    }
    out << YAML::EndSeq;
  }

  if (doc.nsga2) {
    const auto& n = *doc.nsga2;
    out << YAML::Key << "nsga2" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << n.name << YAML::Key << "mu" << YAML::Value << n.mu << YAML::Key
        << "lambda" << YAML::Value << n.lambda << YAML::Key << "termination" << YAML::Value;
    emit_termination(out, n.termination);
    out << YAML::Key << "reevaluate" << YAML::Value << format_real(n.reevaluate);
    out << YAML::Key << "genome" << YAML::Value << YAML::BeginSeq;
    for (const auto& g : n.genome)
      out << YAML::Flow << YAML::BeginSeq << g.name << format_real(g.lower) << format_real(g.upper) << YAML::EndSeq;
    out << YAML::EndSeq << YAML::Key << "objectives" << YAML::Value;
    emit_names(out, n.objectives);
    out << YAML::EndMap;
  }

  if (doc.islands) {
    const auto& is = *doc.islands;
    out << YAML::Key << "islands" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << is.name << YAML::Key << "island" << YAML::Value << is.island
        << YAML::Key << "concurrency" << YAML::Value << is.concurrency << YAML::Key << "total" << YAML::Value
        << is.total << YAML::Key << "sample" << YAML::Value << is.sample << YAML::Key << "island_termination"
        << YAML::Value;
    emit_termination(out, is.island_termination);
    if (is.duration_ms != 0) out << YAML::Key << "duration_ms" << YAML::Value << format_real(is.duration_ms);
    if (is.memory_mb) out << YAML::Key << "memory_mb" << YAML::Value << is.memory_mb;
    out << YAML::EndMap;
  }

  if (!doc.hooks.empty()) {
    out << YAML::Key << "hooks" << YAML::Value << YAML::BeginSeq;
    for (const auto& h : doc.hooks) {
      out << YAML::BeginMap << YAML::Key << "capsule" << YAML::Value << h.capsule << YAML::Key << h.kind << YAML::Value;
      if (h.kind == "to-string") emit_names(out, h.prototypes);
      else if (h.kind == "display") out << YAML::DoubleQuoted << h.format;
      else out << YAML::DoubleQuoted << h.directory;
      out << YAML::EndMap;
    }
    out << YAML::EndSeq;
  }

  if (!doc.environments.empty()) {
    out << YAML::Key << "environments" << YAML::Value << YAML::BeginMap;
    for (const auto& e : doc.environments) {
      out << YAML::Key << e.name << YAML::Value << YAML::BeginMap;
      out << YAML::Key << "kind" << YAML::Value << e.kind;
      out << YAML::Key << "capacity" << YAML::Value << e.capacity;
      if (!e.speeds.empty()) {
        out << YAML::Key << "speeds" << YAML::Value << YAML::Flow << YAML::BeginSeq;
        for (double s : e.speeds) out << format_real(s);
        out << YAML::EndSeq;
      }
      out << YAML::Key << "latency_ms" << YAML::Value << YAML::Flow << YAML::BeginSeq << format_real(e.latency_lo_ms)
          << format_real(e.latency_hi_ms) << YAML::EndSeq;
      out << YAML::Key << "failure_probability" << YAML::Value << format_real(e.failure_probability);
      if (e.memory_limit_mb) out << YAML::Key << "memory_limit_mb" << YAML::Value << *e.memory_limit_mb;
      if (e.walltime_s) out << YAML::Key << "walltime_s" << YAML::Value << *e.walltime_s;
      out << YAML::Key << "default_duration_ms" << YAML::Value << format_real(e.default_duration_ms);
      if (!e.flavor.empty()) out << YAML::Key << "flavor" << YAML::Value << e.flavor;
      out << YAML::Key << "memory_mb" << YAML::Value << e.memory_mb;
      if (e.queue) out << YAML::Key << "queue" << YAML::Value << *e.queue;
      out << YAML::Key << "poll_s" << YAML::Value << format_real(e.poll_s);
      out << YAML::Key << "parse_retries" << YAML::Value << e.parse_retries;
      if (!e.status_cmd.empty())
        out << YAML::Key << "scheduler" << YAML::Value << YAML::BeginMap << YAML::Key << "status_cmd" << YAML::Value
            << YAML::DoubleQuoted << e.status_cmd << YAML::EndMap;
      out << YAML::EndMap;
    }
    out << YAML::EndMap;
  }

  if (!doc.assign.empty()) {
    out << YAML::Key << "assign" << YAML::Value << YAML::BeginMap;
    for (const auto& [pattern, env] : doc.assign) out << YAML::Key << YAML::DoubleQuoted << pattern << YAML::Value << env;
    out << YAML::EndMap;
  }

  out << YAML::Key << "retry" << YAML::Value << YAML::BeginMap << YAML::Key << "max_attempts" << YAML::Value
      << doc.retry.max_attempts << YAML::Key << "backoff_ms" << YAML::Value << doc.retry.backoff_ms << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace molerun::workflow
