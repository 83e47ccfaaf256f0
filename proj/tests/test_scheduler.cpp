#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "molerun/scheduler/flavor.hpp"
#include "molerun/scheduler/mock_scheduler.hpp"
#include "molerun/support/random.hpp"

using namespace molerun;
using namespace molerun::scheduler;

namespace {

const std::filesystem::path kFixtures = std::filesystem::path(MOLERUN_SOURCE_DIR) / "fixtures";

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE(is);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

JobDescription island_job() {
  JobDescription d;
  d.executable = "/opt/molerun/bin/island";
  d.arguments = {"--seed", "42", "input file.json"};
  d.working_directory = "/scratch/ants/job-1";
  d.walltime = std::chrono::hours(4);
  d.memory_mb = 1200;
  return d;
}

std::filesystem::path golden(Flavor f) {
  return kFixtures / "scripts" / std::string(to_string(f)) / (f == Flavor::condor ? "island.sub" : "island.sh");
}

}  // namespace

TEST_CASE("rendered scripts match the golden files") {
  for (auto f : kAllFlavors) {
    CAPTURE(to_string(f));
    CHECK(render_submission_script(f, island_job()) == slurp(golden(f)));
  }
  auto queued = island_job();
  queued.queue = "biomed";
  CHECK(render_submission_script(Flavor::pbs, queued) == slurp(kFixtures / "scripts/pbs/island-queue.sh"));
}

TEST_CASE("walltime and memory directives") {
  CHECK(format_walltime(std::chrono::hours(4)) == "04:00:00");
  CHECK(format_walltime(std::chrono::seconds(100 * 3600 + 61)) == "100:01:01");
  const auto slurm = render_submission_script(Flavor::slurm, island_job());
  CHECK(slurm.find("#SBATCH --time=04:00:00\n") != std::string::npos);
  CHECK(slurm.find("#SBATCH --mem=1200\n") != std::string::npos);
  const auto pbs = render_submission_script(Flavor::pbs, island_job());
  CHECK(pbs.find("#PBS -l walltime=04:00:00\n") != std::string::npos);
  CHECK(pbs.find("#PBS -l mem=1200mb\n") != std::string::npos);
}

TEST_CASE("invalid descriptions are refused") {
  auto d = island_job();
  d.walltime = std::chrono::seconds(0);
  CHECK_THROWS_AS(render_submission_script(Flavor::slurm, d), DomainError);
  d = island_job();
  d.memory_mb = 0;
  CHECK_THROWS_AS(render_submission_script(Flavor::pbs, d), DomainError);
  d = island_job();
  d.queue = "biomed";
  CHECK_THROWS_AS(render_submission_script(Flavor::condor, d), RenderError);
}

TEST_CASE("scripts parse back to their description") {
  Rng rng(17);
  const std::vector<std::string> words{"a", "b c", "it's", "$HOME", "x\"y", "", "--flag=1", "tab\there"};
  for (int trial = 0; trial < 200; ++trial) {
    JobDescription d;
    d.executable = "/bin/run model";
    for (std::size_t k = rng.below(5); k > 0; --k) d.arguments.push_back(words[rng.index(words.size())]);
    d.working_directory = "/work/dir " + std::to_string(trial);
    d.walltime = std::chrono::seconds(1 + rng.below(200000));
    d.memory_mb = 1 + static_cast<std::int64_t>(rng.below(64000));
    const auto flavor = kAllFlavors[rng.index(5)];
    if (flavor != Flavor::condor && rng.coin()) d.queue = "q" + std::to_string(trial);
    CAPTURE(to_string(flavor));
    const auto parsed = parse_submission_script(render_submission_script(flavor, d));
    CHECK(parsed.flavor == flavor);
    CHECK(parsed.description == d);
  }
  CHECK_THROWS_AS(parse_submission_script("#!/bin/sh\necho hi\n"), FormatError);
}

TEST_CASE("status fixtures parse to the expected phases") {
  for (auto f : kAllFlavors) {
    const auto dir = kFixtures / "status" / std::string(to_string(f));
    CAPTURE(to_string(f));
    std::ostringstream got;
    for (const auto& row : parse_listing(f, slurp(dir / "listing.txt")))
      got << row.id << " " << to_string(phase_of(f, row.state)) << "\n";
    CHECK(got.str() == slurp(dir / "expected.txt"));
    CHECK_THROWS_AS(parse_listing(f, slurp(dir / "malformed.txt")), ParseError);
    CHECK_THROWS_AS(parse_listing(f, slurp(dir / "unknown-state.txt")), ParseError);
  }
}

TEST_CASE("parse_status reports missing jobs done and matches pbs id prefixes") {
  const auto pbs = slurp(kFixtures / "status/pbs/listing.txt");
  CHECK(parse_status(Flavor::pbs, pbs, "2302") == Phase::running);
  CHECK(parse_status(Flavor::pbs, pbs, "2301.other-host") == Phase::queued);
  CHECK(parse_status(Flavor::pbs, pbs, "9999.pbs-server") == Phase::done);
  const auto slurm = slurp(kFixtures / "status/slurm/listing.txt");
  CHECK(parse_status(Flavor::slurm, slurm, "4105") == Phase::failed);
  CHECK(parse_status(Flavor::slurm, "", "1") == Phase::done);
  try {
    parse_listing(Flavor::slurm, slurp(kFixtures / "status/slurm/malformed.txt"));
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line().find("4101") != std::string::npos);
  }
}

TEST_CASE("status commands") {
  CHECK(status_command(Flavor::slurm, "12") == "squeue --jobs=12");
  CHECK(status_command(Flavor::pbs, "3.srv") == "qstat 3.srv");
  CHECK(status_command(Flavor::condor, "4.0") == "condor_q -nobatch 4.0");
  CHECK(status_command(Flavor::oar, "9", "oarstat -fj ${id} # ${id}") == "oarstat -fj 9 # 9");
}

// submit -> tick -> parse: the listing shows the job queued, running, then
// it drops out (done), for every flavor; a job outliving its wall-time is
// seen failed.
TEST_CASE("mock scheduler round trip for every flavor") {
  for (auto f : kAllFlavors) {
    CAPTURE(to_string(f));
    MockScheduler mock(1);
    auto d = island_job();
    d.executable = "sleep";
    d.arguments = {"5"};
    d.walltime = std::chrono::seconds(60);
    const auto first = mock.submit(render_submission_script(f, d));
    const auto second = mock.submit(render_submission_script(f, d));
    CHECK(parse_status(f, mock.status_text(f), second) == Phase::queued);
    mock.tick(Millis(1));
    CHECK(parse_status(f, mock.status_text(f), first) == Phase::running);
    CHECK(parse_status(f, mock.status_text(f), second) == Phase::queued);
    mock.tick(Millis(5000));
    CHECK(parse_status(f, mock.status_text(f), first) == Phase::done);
    CHECK(mock.job(first).exit_code == 0);
    CHECK(parse_status(f, mock.status_text(f), second) == Phase::running);
    CHECK(mock.running_high_water() == 1);

    auto slow = island_job();
    slow.executable = "sleep";
    slow.arguments = {"120"};
    slow.walltime = std::chrono::seconds(60);
    MockScheduler overrun(1);
    const auto id = overrun.submit(render_submission_script(f, slow));
    overrun.tick(Millis(1));
    CHECK(parse_status(f, overrun.status_text(f), id) == Phase::running);
    overrun.tick(Millis(61000));
    CHECK(overrun.job(id).exit_code == 137);
    // the listing forgets exited jobs except under OAR, which marks the error
    const auto phase = parse_status(f, overrun.status_text(f), id);
    CHECK((f == Flavor::oar ? phase == Phase::failed : phase == Phase::done));
  }
  MockScheduler mock;
  CHECK_THROWS_AS(mock.job("nope"), LookupError);
  CHECK_THROWS_AS(mock.submit("echo hi\n"), FormatError);
}

TEST_CASE("mock scheduler honours node count and cancel") {
  MockScheduler mock(2);
  auto d = island_job();
  d.executable = "sleep";
  d.arguments = {"10"};
  std::vector<std::string> ids;
  for (int i = 0; i < 5; ++i) ids.push_back(mock.submit(render_submission_script(Flavor::slurm, d)));
  mock.tick(Millis(1));
  CHECK(mock.running() == 2);
  mock.cancel(ids[0]);
  CHECK(mock.job(ids[0]).exit_code == 143);
  mock.tick(Millis(1));
  CHECK(mock.running() == 2);
  mock.tick(Millis(60000));
  CHECK(mock.running_high_water() == 2);
  d.executable = "false";
  d.arguments = {};
  const auto bad = mock.submit(render_submission_script(Flavor::slurm, d));
  mock.tick(Millis(1));
  mock.tick(Millis(2000));
  CHECK(mock.job(bad).exit_code == 1);
}
