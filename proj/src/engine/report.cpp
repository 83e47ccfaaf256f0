#include <fstream>

#include "molerun/dataflow/serialization.hpp"
#include "molerun/engine/run.hpp"

namespace molerun::engine {

nlohmann::json to_json(const RunReport& report) {
  using nlohmann::json;
  json jobs = json::array();
  for (const auto& job : report.jobs) {
    json history = json::array();
    for (const auto& change : job.history)
      history.push_back({{"state", std::string(to_string(change.state))}, {"at_ms", change.at_ms}});
    json entry{{"id", job.id},
               {"capsule", job.capsule},
               {"environment", job.environment},
               {"state", std::string(to_string(job.state()))},
               {"attempts", job.attempts},
               {"history", std::move(history)},
               {"input", dataflow::to_json(job.input)}};
    if (job.result) entry["result"] = dataflow::to_json(*job.result);
    if (job.failure) entry["failure"] = *job.failure;
    jobs.push_back(std::move(entry));
  }
  json hooks = json::array();
  for (const auto& h : report.hooks) {
    json entry{{"capsule", h.capsule}, {"kind", h.kind}, {"job", h.job}};
    if (!h.text.empty()) entry["text"] = h.text;
    if (!h.file.empty()) entry["file"] = h.file.string();
    if (h.error) entry["error"] = *h.error;
    hooks.push_back(std::move(entry));
  }
  json results = json::array();
  for (const auto& r : report.results)
    results.push_back({{"capsule", r.capsule}, {"job", r.job}, {"output", dataflow::to_json(r.output)}});
  json environments = json::array();
  for (const auto& e : report.environments)
    environments.push_back({{"name", e.name},
                            {"kind", e.kind},
                            {"capacity", e.capacity},
                            {"running_high_water", e.running_high_water}});
  return {{"status", std::string(to_string(report.status))},
          {"message", report.message},
          {"totals",
           {{"jobs", report.jobs.size()},
            {"attempts", report.attempts},
            {"retries", report.retries()},
            {"failures", report.failures},
            {"hook_effects", report.hooks.size()},
            {"wall_ms", report.wall_ms}}},
          {"environments", std::move(environments)},
          {"jobs", std::move(jobs)},
          {"hooks", std::move(hooks)},
          {"results", std::move(results)}};
}

void write_report(const RunReport& report, const std::filesystem::path& file) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream os(file, std::ios::binary | std::ios::trunc);
  os << to_json(report).dump(2) << "\n";
  if (!os) throw Error("cannot write " + file.string());
}

}  // namespace molerun::engine
