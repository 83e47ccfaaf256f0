#include <doctest.h>

#include <array>
#include <cmath>
#include <cstring>
#include <limits>
#include <set>

#include "molerun/support/format.hpp"
#include "molerun/support/random.hpp"

using namespace molerun;

TEST_CASE("format_real keeps a decimal marker on integral values") {
  CHECK(format_real(10.0) == "10.0");
  CHECK(format_real(2.5) == "2.5");
  CHECK(format_real(-0.125) == "-0.125");
  CHECK(format_real(0.1) == "0.1");
  CHECK(format_real(std::numeric_limits<double>::infinity()) == "inf");
}

TEST_CASE("format_real round-trips random doubles exactly") {
  Rng rng(7);
  for (int i = 0; i < 20000; ++i) {
    double x;
    const auto bits = rng.next_u64();
    std::memcpy(&x, &bits, sizeof x);
    if (!std::isfinite(x)) continue;
    const auto text = format_real(x);
    const auto back = parse_real(text);
    REQUIRE(back);
    CHECK(*back == x);
  }
}

TEST_CASE("parse_integer and parse_real reject trailing garbage") {
  CHECK(parse_integer("42") == 42);
  CHECK(parse_integer("-9223372036854775808") == std::numeric_limits<std::int64_t>::min());
  CHECK_FALSE(parse_integer("42x"));
  CHECK_FALSE(parse_integer("4.0"));
  CHECK(parse_real("50") == 50.0);
  CHECK_FALSE(parse_real("1.5.2"));
  CHECK_FALSE(parse_real(""));
  CHECK(trim("  a b \n") == "a b");
}

TEST_CASE("stream seeds separate names and masters") {
  CHECK(stream_seed(1, "a") == stream_seed(1, "a"));
  CHECK(stream_seed(1, "a") != stream_seed(1, "b"));
  CHECK(stream_seed(1, "a") != stream_seed(2, "a"));
}

TEST_CASE("rng conversions stay in range") {
  Rng rng(3);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double v = rng.uniform(0.9, 1.1);
    CHECK(v >= 0.9);
    CHECK(v < 1.1);
    const auto k = rng.below(7);
    CHECK(k < 7);
    seen.insert(k);
  }
  CHECK(seen.size() == 7);
}

TEST_CASE("rng below is close to uniform") {
  Rng rng(11);
  std::array<int, 5> counts{};
  const int n = 50000;
  for (int i = 0; i < n; ++i) ++counts[rng.below(5)];
  // each count ~ Binomial(n, 1/5); 4 sigma band
  const double mean = n / 5.0, sd = std::sqrt(n * 0.2 * 0.8);
  for (int c : counts) CHECK(std::abs(c - mean) < 4 * sd);
}

TEST_CASE("equal seeds give equal sequences") {
  Rng a(99), b(99);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}
