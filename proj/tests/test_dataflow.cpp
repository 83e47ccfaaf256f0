#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "molerun/dataflow/external.hpp"
#include "molerun/dataflow/hooks.hpp"
#include "molerun/dataflow/serialization.hpp"
#include "molerun/dataflow/workflow.hpp"
#include "molerun/engine/local.hpp"
#include "molerun/engine/run.hpp"
#include "molerun/support/random.hpp"

using namespace molerun;
using namespace molerun::dataflow;

namespace {

const Prototype x("x", Kind::real);
const Prototype y("y", Kind::real);
const Prototype n("n", Kind::integer);

TaskPtr add_one(std::string name, Prototype in, Prototype out) {
  auto kernel = [in, out](const Context& c, const ExecutionScope&) {
    return Context{{out, real(c.get<double>(in) + 1)}};
  };
  return std::make_shared<const Task>(std::move(name), std::vector{in}, std::vector{out}, kernel);
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("molerun-test-dataflow-" + name);
  std::filesystem::remove_all(p);
  return p;
}

engine::RunOptions inline_options(const Context& initial = {}) {
  engine::RunOptions o;
  o.initial = initial;
  o.assignment.fallback = std::make_shared<engine::LocalThreadsEnvironment>("inline", 1, true);
  o.run_root = scratch("run");
  return o;
}

}  // namespace

TEST_CASE("values render canonically and parse back") {
  const std::vector<std::pair<Kind, Value>> cases{
      {Kind::integer, integer(-12)},          {Kind::real, real(0.1)},
      {Kind::text, text("ants")},             {Kind::boolean, boolean(true)},
      {Kind::real_array, real_array({1, 2.5})}, {Kind::integer_array, integer_array({3, -4})}};
  for (const auto& [kind, value] : cases) {
    CHECK(kind_of(value) == kind);
    CHECK(parse_value(kind, render(value)) == value);
  }
  CHECK(render(real(50)) == "50.0");
  CHECK(render(real_array({1, 2.5})) == "[1.0,2.5]");
  CHECK(parse_value(Kind::real, "50") == real(50));
  CHECK_THROWS_AS(parse_value(Kind::integer, "x"), FormatError);
}

TEST_CASE("contexts are immutable and kind checked") {
  const Context a{{x, real(1)}};
  const auto b = a.with(y, real(2));
  CHECK(a.size() == 1);
  CHECK(b.size() == 2);
  CHECK_THROWS_AS((void)a.with(x, integer(1)), DomainError);
  const auto c = a.merged(Context{{x, real(5)}});
  CHECK(c.get<double>(x) == 5);
  CHECK(a.get<double>(x) == 1);
  CHECK_THROWS_AS(a.at(y), LookupError);
  CHECK(b.restricted_to(std::vector{y}) == Context{{y, real(2)}});
}

TEST_CASE("context json round trip") {
  const Context c{{x, real(0.1)}, {n, integer(7)}, {Prototype("v", Kind::real_array), real_array({1, 2})}};
  CHECK(context_from_json(to_json(c)) == c);
}

TEST_CASE("run_task applies defaults and checks outputs") {
  auto kernel = [](const Context& c, const ExecutionScope&) {
    return Context{{y, real(c.get<double>(x) * 2)}};
  };
  const Task task("double", {x}, {y}, kernel, Context{{x, real(21)}});
  CHECK(run_task(task, {}).get<double>(y) == 42);
  CHECK(run_task(task, Context{{x, real(1)}}).get<double>(y) == 2);

  const Task needs("needs", {x}, {y}, kernel);
  CHECK_THROWS_AS(run_task(needs, {}), MissingInputError);

  const Task liar("liar", {x}, {y, n}, kernel);
  CHECK_THROWS_AS(run_task(liar, Context{{x, real(1)}}), OutputMismatchError);

  CHECK_THROWS_AS(Task("bad", {x}, {y}, kernel, Context{{n, integer(1)}}), DefinitionError);
}

TEST_CASE("validation finds unbound inputs, cycles and orphan aggregations") {
  Workflow wf;
  wf.add_capsule("a", add_one("a", x, y));
  wf.add_capsule("b", add_one("b", Prototype("z", Kind::real), y));
  wf.connect("a", "b");
  auto report = validate_workflow(wf, Context{{x, real(0)}});
  REQUIRE(report.defects.size() == 1);
  CHECK(report.defects[0].kind == DefectKind::unbound_input);
  CHECK(report.defects[0].capsule == "b");

  Workflow cyc;
  cyc.add_capsule("a", add_one("a", x, x));
  cyc.add_capsule("b", add_one("b", x, x));
  cyc.connect("a", "b");
  cyc.connect("b", "a");
  report = validate_workflow(cyc, Context{{x, real(0)}});
  REQUIRE(!report.valid());
  CHECK(report.defects[0].kind == DefectKind::cycle);

  Workflow orphan;
  orphan.add_capsule("a", add_one("a", x, y));
  orphan.add_capsule("b", std::make_shared<const Task>("b", std::vector<Prototype>{}, std::vector<Prototype>{},
                                                       pass_through_kernel()));
  orphan.aggregate("a", "b");
  report = validate_workflow(orphan, Context{{x, real(0)}});
  REQUIRE(!report.valid());
  CHECK(report.defects[0].kind == DefectKind::orphan_aggregation);

  Workflow mismatch;
  mismatch.add_capsule("a", add_one("a", Prototype("k", Kind::real), y));
  report = validate_workflow(mismatch, Context{{Prototype("k", Kind::integer), integer(1)}});
  REQUIRE(!report.valid());
  CHECK(report.defects[0].kind == DefectKind::kind_mismatch);
}

TEST_CASE("aggregation turns branch values into arrays") {
  Workflow wf;
  auto explorer = std::make_shared<const Task>("explore", std::vector<Prototype>{}, std::vector<Prototype>{},
                                               pass_through_kernel());
  wf.add_capsule("explore", explorer, Placement::coordinator);
  wf.add_capsule("model", add_one("model", x, y));
  auto sum = [](const Context& c, const ExecutionScope&) {
    double s = 0;
    for (double v : c.get<std::vector<double>>(y.as_array())) s += v;
    return Context{{Prototype("total", Kind::real), real(s)}};
  };
  wf.add_capsule("sum", std::make_shared<const Task>("sum", std::vector{y.as_array()},
                                                     std::vector{Prototype("total", Kind::real)}, sum));
  wf.explore("explore", "model", ValueSampling{x, {real(1), real(2), real(3)}});
  wf.aggregate("model", "sum");
  REQUIRE(validate_workflow(wf).valid());
  const auto report = engine::run_workflow(wf, inline_options());
  REQUIRE(report.ok());
  const auto out = report.outputs_of("sum");
  REQUIRE(out.size() == 1);
  CHECK(out[0].get<double>(Prototype("total", Kind::real)) == 2 + 3 + 4);
}

// Random DAGs of tasks drawing inputs from a fixed name pool. With direct
// transitions only, the names reaching a capsule are the sources plus the
// outputs of its ancestors; validation must flag exactly the inputs outside
// that set, and workflows it accepts must run without missing inputs.
TEST_CASE("random DAG validation agrees with the ancestor oracle and is sound") {
  Rng rng(2024);
  const int pool = 6;
  auto proto = [](int i) { return Prototype("v" + std::to_string(i), Kind::real); };
  int accepted = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int size = 2 + static_cast<int>(rng.below(6));
    std::vector<std::vector<int>> ins(size), outs(size);
    std::vector<std::set<int>> parents(size);
    Workflow wf;
    for (int c = 0; c < size; ++c) {
      std::set<int> in, out;
      for (int k = 0; k < pool; ++k) {
        if (rng.bernoulli(0.15)) in.insert(k);
        if (rng.bernoulli(0.25)) out.insert(k);
      }
      ins[c].assign(in.begin(), in.end());
      outs[c].assign(out.begin(), out.end());
      std::vector<Prototype> pin, pout;
      for (int k : ins[c]) pin.push_back(proto(k));
      for (int k : outs[c]) pout.push_back(proto(k));
      auto kernel = [pout](const Context&, const ExecutionScope&) {
        Context o;
        for (const auto& p : pout) o = o.with(p, real(1));
        return o;
      };
      wf.add_capsule("c" + std::to_string(c), std::make_shared<const Task>("t" + std::to_string(c), pin, pout, kernel));
      for (int p = 0; p < c; ++p)
        if (rng.bernoulli(0.35)) {
          parents[c].insert(p);
          wf.connect("c" + std::to_string(p), "c" + std::to_string(c));
        }
    }
    Context sources;
    std::set<int> source_names;
    for (int k = 0; k < pool; ++k)
      if (rng.bernoulli(0.4)) {
        sources = sources.with(proto(k), real(0));
        source_names.insert(k);
      }

    std::set<std::pair<std::string, std::string>> expected;
    for (int c = 0; c < size; ++c) {
      std::set<int> ancestors;
      std::vector<int> stack(parents[c].begin(), parents[c].end());
      while (!stack.empty()) {
        const int a = stack.back();
        stack.pop_back();
        if (ancestors.insert(a).second) stack.insert(stack.end(), parents[a].begin(), parents[a].end());
      }
      std::set<int> avail = source_names;
      for (int a : ancestors) avail.insert(outs[a].begin(), outs[a].end());
      for (int k : ins[c])
        if (!avail.count(k)) expected.insert({"c" + std::to_string(c), "unbound input v" + std::to_string(k)});
    }

    const auto report = validate_workflow(wf, sources);
    std::set<std::pair<std::string, std::string>> got;
    for (const auto& d : report.defects) {
      CHECK(d.kind == DefectKind::unbound_input);
      got.insert({d.capsule, d.message});
    }
    CHECK(got == expected);

    if (report.valid()) {
      ++accepted;
      const auto run = engine::run_workflow(wf, inline_options(sources));
      CHECK(run.ok());
    }
  }
  CHECK(accepted > 20);
}

TEST_CASE("to-string and display hooks render bindings") {
  const Context c{{x, real(1.5)}, {n, integer(3)}};
  CHECK(render_to_string(ToStringHook{{n, x}}, c) == "n=3,x=1.5");
  CHECK_THROWS_AS(render_to_string(ToStringHook{{y}}, c), LookupError);
  CHECK(render_template("Generation ${n} at ${x}", c) == "Generation 3 at 1.5");
  CHECK_THROWS_AS(render_template("${y}", c), LookupError);
  CHECK_THROWS_AS(render_template("${x", c), FormatError);
}

TEST_CASE("save-population writes one csv per generation under the sink root") {
  const SavePopulationHook save{"/tmp/ants/", {"d"}, {"f"}};
  const Context c{{Prototype("generation", Kind::integer), integer(7)},
                  {Prototype("d", Kind::real_array), real_array({40, 0.5})},
                  {Prototype("f", Kind::real_array), real_array({1, 2})},
                  {Prototype("evaluations", Kind::integer_array), integer_array({1, 3})}};
  CHECK(render_population_csv(save, c) == "generation,d,f,evaluations\n7,40.0,1.0,1\n7,0.5,2.0,3\n");
  const auto root = scratch("hooks");
  HookSink sink;
  sink.output_root = root;
  const auto effect = fire_hook(Hook{"ga", save}, c, sink);
  CHECK_FALSE(effect.error);
  CHECK(effect.file == root / "tmp/ants/population7.csv");
  CHECK(std::filesystem::exists(effect.file));

  // a broken hook is recorded, not thrown
  const auto bad = fire_hook(Hook{"ga", ToStringHook{{y}}}, c, sink);
  CHECK(bad.error);
}

TEST_CASE("external commands read key=value outputs") {
  const auto root = scratch("external");
  const ExecutionScope scope{"job-1", root};
  const auto out = run_external_command("echo y=${x}; echo ignored=1", {y}, {}, Context{{x, real(2.5)}}, scope);
  CHECK(out.get<double>(y) == 2.5);
  CHECK(std::filesystem::exists(root / "jobs/job-1/stdout.txt"));

  const auto from_file = run_external_command("echo y=4 > out.txt", {y}, {"out.txt"}, {}, scope);
  CHECK(from_file.get<double>(y) == 4);

  CHECK_THROWS_AS(run_external_command("echo ${x}", {y}, {}, {}, scope), PreconditionError);
  CHECK_THROWS_AS(run_external_command("echo oops >&2; exit 3", {y}, {}, {}, scope), TaskFailure);
  CHECK_THROWS(parse_key_values("y=1\nnot a pair\n", {y}));
  CHECK(placeholders("a ${x} b ${y}") == std::vector<std::string>{"x", "y"});
}
