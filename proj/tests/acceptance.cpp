// One line per acceptance criterion; exit status 1 when any fails.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "molerun/evolution/generational.hpp"
#include "molerun/engine/batch.hpp"
#include "molerun/scheduler/flavor.hpp"
#include "molerun/scheduler/mock_scheduler.hpp"
#include "molerun/workflow/cli.hpp"
#include "molerun/workflow/runner.hpp"
#include "oracles.hpp"

using namespace molerun;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;
using evolution::Index;

namespace {

const fs::path kSource(MOLERUN_SOURCE_DIR);
const fs::path kWorkflows = kSource / "workflows";
const fs::path kScratch = fs::temp_directory_path() / "molerun-acceptance";

struct Verdict {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (ok) return;
    pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  for (std::string line; std::getline(is, line);) out.push_back(line);
  return out;
}

struct CliRun {
  int code = -1;
  double seconds = 0;
  fs::path out;
  std::string err;
};

CliRun run_cli(const std::string& file, const std::string& tag, std::vector<std::string> extra = {}) {
  CliRun r;
  r.out = kScratch / tag;
  fs::remove_all(r.out);
  std::vector<std::string> args{"run", (kWorkflows / file).string(), "--out", r.out.string()};
  args.insert(args.end(), extra.begin(), extra.end());
  std::ostringstream out, err;
  const auto t0 = Clock::now();
  r.code = workflow::cli_main(args, out, err);
  r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  r.err = err.str();
  return r;
}

nlohmann::json report_of(const CliRun& r) { return nlohmann::json::parse(slurp(r.out / "report.json")); }

std::map<std::string, int> jobs_by_capsule(const nlohmann::json& report) {
  std::map<std::string, int> n;
  for (const auto& job : report["jobs"]) ++n[job["capsule"].get<std::string>()];
  return n;
}

// "a=1,b=2" -> {a: 1, b: 2}
std::map<std::string, double> fields(const std::string& line) {
  std::map<std::string, double> out;
  std::istringstream is(line);
  for (std::string item; std::getline(is, item, ',');) {
    const auto eq = item.find('=');
    if (eq != std::string::npos) out[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
  }
  return out;
}

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::size_t column(const std::string& name) const {
    return static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin());
  }
};

Csv read_csv(const fs::path& p) {
  Csv csv;
  auto lines = lines_of(slurp(p));
  if (lines.empty()) return csv;
  std::istringstream h(lines[0]);
  for (std::string cell; std::getline(h, cell, ',');) csv.header.push_back(cell);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::vector<double> row;
    std::istringstream is(lines[i]);
    for (std::string cell; std::getline(is, cell, ',');) row.push_back(std::stod(cell));
    csv.rows.push_back(row);
  }
  return csv;
}

fs::path last_population(const fs::path& dir) {
  fs::path best;
  long best_gen = -1;
  if (!fs::exists(dir)) return best;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto stem = e.path().stem().string();
    if (stem.rfind("population", 0) != 0) continue;
    const long gen = std::stol(stem.substr(10));
    if (gen > best_gen) best_gen = gen, best = e.path();
  }
  return best;
}

// Files under `a` and `b` other than report.json, compared byte by byte.
bool same_artifacts(const fs::path& a, const fs::path& b, std::string& why) {
  std::set<fs::path> left, right;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file() && e.path().filename() != "report.json") left.insert(fs::relative(e.path(), a));
  for (const auto& e : fs::recursive_directory_iterator(b))
    if (e.is_regular_file() && e.path().filename() != "report.json") right.insert(fs::relative(e.path(), b));
  if (left != right) {
    why = "different file sets";
    return false;
  }
  for (const auto& rel : left)
    if (slurp(a / rel) != slurp(b / rel)) {
      why = rel.string() + " differs";
      return false;
    }
  return true;
}

// Area dominated inside [0, ref]² by a minimisation point set, by a sweep
// over f1.
double sweep_hypervolume(std::vector<std::pair<double, double>> pts, double ref) {
  std::sort(pts.begin(), pts.end());
  double area = 0, floor = ref;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double x = std::min(pts[i].first, ref);
    floor = std::min(floor, pts[i].second);
    const double next = i + 1 < pts.size() ? std::min(pts[i + 1].first, ref) : ref;
    area += (next - x) * std::max(0.0, ref - floor);
  }
  return area;
}

// Best attainable area for f1 = x², f2 = (x-2)² against (ref, ref), by
// midpoint integration of the front.
double schaffer_optimum(double ref) {
  const int n = 200000;
  double uncovered = 0;
  const double hi = std::min(ref, 4.0);
  for (int i = 0; i < n; ++i) {
    const double t = (i + 0.5) * hi / n;
    uncovered += std::min(ref, std::pow(std::sqrt(t) - 2, 2)) * hi / n;
  }
  return hi * ref - uncovered + (ref - hi) * ref;
}

// ---------------------------------------------------------------------------

Verdict criterion1() {
  Verdict v;
  const auto r = run_cli("listing2.wf", "c1");
  v.require(r.code == 0, "exit " + std::to_string(r.code));
  if (r.code != 0) return v;
  const auto jobs = report_of(r)["jobs"].size();
  const auto hooks = lines_of(slurp(r.out / "hooks.log"));
  v.require(jobs == 1, std::to_string(jobs) + " jobs");
  v.require(hooks.size() == 1, std::to_string(hooks.size()) + " hook lines");
  if (hooks.size() == 1) {
    const auto f = fields(hooks[0]);
    v.require(f.count("food1") && f.count("food2") && f.count("food3"), "hook line lacks food1..3");
  }
  v.require(r.seconds < 1, "took " + std::to_string(r.seconds) + " s");
  v.detail = v.pass ? "1 job, 1 hook line, " + std::to_string(r.seconds) + " s" : v.detail;
  return v;
}

Verdict criterion2(CliRun& first) {
  Verdict v;
  first = run_cli("listing3.wf", "c2", {"--seed", "1"});
  v.require(first.code == 0, "exit " + std::to_string(first.code));
  if (first.code != 0) return v;
  const auto report = report_of(first);
  const auto jobs = jobs_by_capsule(report);
  v.require(jobs.size() == 2 && jobs.count("modelCapsule") && jobs.at("modelCapsule") == 5 &&
                jobs.count("statisticCapsule") && jobs.at("statisticCapsule") == 1,
            "unexpected job split");

  std::vector<double> food[3];
  std::map<std::string, double> medians;
  for (const auto& line : lines_of(slurp(first.out / "hooks.log"))) {
    const auto f = fields(line);
    if (f.count("food1")) {
      food[0].push_back(f.at("food1"));
      food[1].push_back(f.at("food2"));
      food[2].push_back(f.at("food3"));
    } else {
      medians = f;
    }
  }
  v.require(food[0].size() == 5, std::to_string(food[0].size()) + " replicate lines");
  for (int i = 0; i < 3 && food[0].size() == 5; ++i) {
    const auto key = "medNumberFood" + std::to_string(i + 1);
    v.require(medians.count(key) && medians.at(key) == oracle::sorted_median(food[i]), key + " is not the median");
  }
  // the statistic job must start after every replicate finished
  double last_model_done = 0, stat_start = 1e300;
  for (const auto& job : report["jobs"])
    for (const auto& h : job["history"]) {
      if (job["capsule"] == "modelCapsule" && h["state"] == "done")
        last_model_done = std::max(last_model_done, h["at_ms"].get<double>());
      if (job["capsule"] == "statisticCapsule" && h["state"] == "submitted")
        stat_start = std::min(stat_start, h["at_ms"].get<double>());
    }
  v.require(stat_start >= last_model_done, "statistic started early");
  v.require(first.seconds < 2, "took " + std::to_string(first.seconds) + " s");
  if (v.pass) v.detail = "5 model + 1 statistic job, medians exact, " + std::to_string(first.seconds) + " s";
  return v;
}

Verdict criterion3(std::vector<CliRun>& runs) {
  Verdict v;
  const double optimum = schaffer_optimum(5);
  double worst_ratio = 1, slowest = 0;
  for (int seed = 1; seed <= 5; ++seed) {
    auto r = run_cli("schaffer.wf", "c3-" + std::to_string(seed), {"--seed", std::to_string(seed)});
    runs.push_back(r);
    const auto tag = "seed " + std::to_string(seed);
    v.require(r.code == 0, tag + " exit " + std::to_string(r.code));
    if (r.code != 0) continue;
    const auto csv = read_csv(r.out / "pareto" / "population100.csv");
    v.require(csv.rows.size() == 10, tag + " population size " + std::to_string(csv.rows.size()));
    std::vector<oracle::Point> pts;
    for (const auto& row : csv.rows) pts.push_back({row[csv.column("f1")], row[csv.column("f2")]});
    const auto fronts = oracle::pairwise_fronts(pts);
    std::vector<std::pair<double, double>> front;
    for (auto i : fronts.front()) {
      const double x = csv.rows[static_cast<std::size_t>(i)][csv.column("x")];
      v.require(x >= -0.1 && x <= 2.1, tag + " rank-0 genome " + std::to_string(x));
      front.emplace_back(pts[static_cast<std::size_t>(i)][0], pts[static_cast<std::size_t>(i)][1]);
    }
    const double ratio = sweep_hypervolume(front, 5) / optimum;
    worst_ratio = std::min(worst_ratio, ratio);
    v.require(ratio >= 0.95, tag + " hypervolume ratio " + std::to_string(ratio));
    slowest = std::max(slowest, r.seconds);
    v.require(r.seconds < 10, tag + " took " + std::to_string(r.seconds) + " s");
  }
  if (v.pass)
    v.detail = "5 seeds, worst hypervolume " + std::to_string(100 * worst_ratio) + "% of " + std::to_string(optimum) +
               ", slowest " + std::to_string(slowest) + " s";
  return v;
}

Verdict criterion4() {
  Verdict v;
  Rng rng(20240401);
  int mismatches = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto n = static_cast<Index>(1 + rng.below(200));
    const auto m = static_cast<Index>(2 + rng.below(2));
    const int levels = t % 3 == 0 ? 4 + static_cast<int>(rng.below(8)) : 0;  // ties in a third of the trials
    evolution::Matrix<double> obj(n, m);
    std::vector<oracle::Point> pts(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < m; ++j) {
        obj(i, j) = levels ? static_cast<double>(rng.below(static_cast<std::uint64_t>(levels))) : rng.uniform01();
        pts[static_cast<std::size_t>(i)].push_back(obj(i, j));
      }
    auto got = evolution::fast_nondominated_sort(obj);
    auto want = oracle::pairwise_fronts(pts);
    bool same = got.size() == want.size();
    for (std::size_t f = 0; same && f < got.size(); ++f) {
      std::vector<long> g(got[f].begin(), got[f].end());
      std::sort(g.begin(), g.end());
      same = g == want[f];
    }
    mismatches += !same;
  }
  v.require(mismatches == 0, std::to_string(mismatches) + " mismatches");
  if (v.pass) v.detail = "1000 populations, 0 mismatches";
  return v;
}

Verdict criterion5(std::vector<CliRun>& runs) {
  Verdict v;
  double slowest = 0;
  std::string summary;
  for (int seed = 1; seed <= 3; ++seed) {
    auto r = run_cli("listing5.wf", "c5-" + std::to_string(seed), {"--env", "grid-sim", "--seed", std::to_string(seed)});
    runs.push_back(r);
    const auto tag = "seed " + std::to_string(seed);
    v.require(r.code == 0, tag + " exit " + std::to_string(r.code) + " " + r.err);
    if (r.code != 0) continue;
    const auto report = report_of(r);
    v.require(report["islands"]["completions"] == 40, tag + " island completions");
    const auto file = last_population(r.out / "ants");
    v.require(!file.empty(), tag + " no archive file");
    if (file.empty()) continue;
    const auto csv = read_csv(file);
    v.require(!csv.rows.empty() && csv.rows.size() <= 200, tag + " archive size " + std::to_string(csv.rows.size()));
    std::vector<oracle::Point> pts;
    for (const auto& row : csv.rows)
      pts.push_back({row[csv.column("medNumberFood1")], row[csv.column("medNumberFood2")],
                     row[csv.column("medNumberFood3")]});
    v.require(oracle::pairwise_fronts(pts).size() == 1, tag + " archive has dominated members");
    std::size_t best = 0;
    double lo = 1e300, hi = -1e300;
    for (std::size_t i = 0; i < csv.rows.size(); ++i) {
      if (pts[i][1] < pts[best][1]) best = i;
      const double e = csv.rows[i][csv.column("gEvaporationRate")];
      lo = std::min(lo, e);
      hi = std::max(hi, e);
    }
    const double d = csv.rows[best][csv.column("gDiffusionRate")];
    v.require(std::abs(d - 40) <= 5, tag + " food2-best d=" + std::to_string(d));
    v.require(hi - lo >= 0.6 * 99, tag + " e spans " + std::to_string(hi - lo));
    v.require(r.seconds < 60, tag + " took " + std::to_string(r.seconds) + " s");
    slowest = std::max(slowest, r.seconds);
    summary += " " + tag + ": " + std::to_string(csv.rows.size()) + " members, d*=" + std::to_string(d) +
               ", e in [" + std::to_string(lo) + ", " + std::to_string(hi) + "], " +
               report["islands"]["failures"].dump() + " failed islands;";
  }
  if (v.pass) v.detail = "slowest " + std::to_string(slowest) + " s;" + summary;
  return v;
}

Verdict criterion6(const CliRun& c2, const std::vector<CliRun>& c3, const std::vector<CliRun>& c5) {
  Verdict v;
  std::vector<std::pair<CliRun, CliRun>> pairs;
  pairs.emplace_back(c2, run_cli("listing3.wf", "c6-c2", {"--seed", "1"}));
  for (std::size_t i = 0; i < c3.size(); ++i)
    pairs.emplace_back(c3[i], run_cli("schaffer.wf", "c6-c3-" + std::to_string(i + 1), {"--seed", std::to_string(i + 1)}));
  for (std::size_t i = 0; i < c5.size(); ++i)
    pairs.emplace_back(c5[i], run_cli("listing5.wf", "c6-c5-" + std::to_string(i + 1),
                                      {"--env", "grid-sim", "--seed", std::to_string(i + 1)}));
  std::size_t compared = 0;
  for (const auto& [a, b] : pairs) {
    std::string why;
    const bool ok = a.code == 0 && b.code == 0 && same_artifacts(a.out, b.out, why);
    v.require(ok, a.out.filename().string() + ": " + (why.empty() ? "run failed" : why));
    ++compared;
  }
  if (v.pass) v.detail = std::to_string(compared) + " run pairs byte-identical (hooks.log and population files)";
  return v;
}

Verdict criterion7() {
  Verdict v;
  evolution::EvolutionParams<double> p;
  p.mu = 100;
  p.lambda = 10;
  p.termination.generations = 100;  // 100 survivors × 100 generations
  p.reevaluate = 0.01;
  p.genome.names = {"x"};
  p.genome.lower = evolution::Vector<double>::Constant(1, -10);
  p.genome.upper = evolution::Vector<double>::Constant(1, 10);
  p.objectives = 2;
  const evolution::Evaluator<double> f = [](const evolution::Matrix<double>& g, const std::vector<std::uint64_t>&) {
    evolution::Matrix<double> out(g.rows(), 2);
    for (Index i = 0; i < g.rows(); ++i) out.row(i) << g(i, 0) * g(i, 0), (g(i, 0) - 2) * (g(i, 0) - 2);
    return out;
  };
  const double trials = 1e4, expected = trials * 0.01, sigma = std::sqrt(trials * 0.01 * 0.99);
  std::string counts;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto r = evolution::run_generational(p, f, seed);
    const auto n = static_cast<double>(r.state.reevaluations);
    counts += (counts.empty() ? "" : ",") + std::to_string(r.state.reevaluations);
    v.require(std::abs(n - expected) <= 3 * sigma, "seed " + std::to_string(seed) + ": " + std::to_string(n));
  }
  v.detail = "reevaluations per seed " + counts + " against " + std::to_string(expected) + " ± " +
             std::to_string(3 * sigma) + (v.pass ? "" : "; " + v.detail);
  return v;
}

Verdict criterion8() {
  using namespace scheduler;
  Verdict v;
  scheduler::JobDescription d;
  d.executable = "/opt/molerun/bin/island";
  d.arguments = {"--seed", "42", "input file.json"};
  d.working_directory = "/scratch/ants/job-1";
  d.walltime = std::chrono::hours(4);
  d.memory_mb = 1200;
  for (auto f : kAllFlavors) {
    const auto name = std::string(to_string(f));
    const auto golden = kSource / "fixtures/scripts" / name / (f == Flavor::condor ? "island.sub" : "island.sh");
    v.require(render_submission_script(f, d) == slurp(golden), name + " script differs from golden");

    // submit -> tick -> parse, as the batch environment sees it
    engine::BatchConfig cfg;
    cfg.flavor = f;
    cfg.nodes = 1;
    cfg.walltime = std::chrono::seconds(60);
    cfg.default_duration_ms = 5000;
    auto env = std::make_shared<engine::BatchEnvironment>("cluster", cfg);
    const dataflow::Prototype x("x", dataflow::Kind::real);
    auto task = [&](double ms) {
      return std::make_shared<const dataflow::Task>(
          "echo", std::vector{x}, std::vector{x},
          [](const dataflow::Context& c, const dataflow::ExecutionScope&) { return c; }, dataflow::Context{},
          dataflow::Resources{0, ms});
    };
    fs::remove_all(kScratch / "c8");
    engine::Coordinator c({1, engine::Millis(0)}, 1, kScratch / "c8");
    const auto quick = c.enqueue("quick", task(5000), dataflow::Context{{x, dataflow::real(1)}}, env);
    const auto slow = c.enqueue("slow", task(120000), dataflow::Context{{x, dataflow::real(2)}}, env);
    while (c.busy()) c.next();
    using S = engine::JobState;
    const std::vector<S> ok{S::ready, S::submitted, S::running, S::done};
    const std::vector<S> overrun{S::ready, S::submitted, S::running, S::failed};
    v.require(c.record(quick).states() == ok, name + " job did not go queued, running, done");
    v.require(c.record(slow).states() == overrun && c.record(slow).failure == "walltime",
              name + " wall-time overrun not failed");
  }
  if (v.pass) v.detail = "5 golden scripts, queued>running>done and walltime>failed for every flavor";
  return v;
}

Verdict criterion9() {
  Verdict v;
  auto file = workflow::read_workflow_file(kWorkflows / "listing3.wf");
  workflow::EnvironmentDecl env;
  env.name = "flaky";
  env.kind = "simulated-distributed";
  env.capacity = 5;
  env.failure_probability = 0.5;
  file.environments = {env};
  file.assign = {{"*", "flaky"}};
  file.retry.max_attempts = 50;
  const auto loaded = workflow::build_workflow(file, "flaky-listing3");
  std::size_t completed = 0, illegal = 0, attempts = 0, jobs = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    workflow::RunSettings settings;
    settings.seed = seed;
    settings.out = kScratch / "c9";
    fs::remove_all(settings.out);
    const auto outcome = workflow::run_loaded(loaded, settings);
    completed += outcome.report.ok() && outcome.report.jobs.size() == 6;
    for (const auto& job : outcome.report.jobs) {
      const auto states = job.states();
      illegal += !engine::legal_history(states);
    }
    attempts += outcome.report.attempts;
    jobs += outcome.report.jobs.size();
  }
  v.require(completed == 100, std::to_string(completed) + "/100 runs completed");
  v.require(illegal == 0, std::to_string(illegal) + " illegal ledgers");
  if (v.pass)
    v.detail = "100/100 completed, " + std::to_string(jobs) + " jobs over " + std::to_string(attempts) +
               " attempts, all ledgers legal";
  return v;
}

}  // namespace

int main() {
  fs::create_directories(kScratch);
  CliRun c2;
  std::vector<CliRun> c3, c5;
  std::vector<std::pair<int, std::function<Verdict()>>> criteria{
      {1, criterion1},
      {2, [&] { return criterion2(c2); }},
      {3, [&] { return criterion3(c3); }},
      {4, criterion4},
      {5, [&] { return criterion5(c5); }},
      {6, [&] { return criterion6(c2, c3, c5); }},
      {7, criterion7},
      {8, criterion8},
      {9, criterion9},
  };
  int failed = 0;
  for (const auto& [n, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    failed += !v.pass;
    std::cout << "criterion " << n << ": " << (v.pass ? "PASS" : "FAIL") << "  " << v.detail << std::endl;
  }
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : "all criteria passed") << std::endl;
  return failed ? 1 : 0;
}
