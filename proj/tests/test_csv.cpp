#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "postopt/csv.hpp"

using namespace postopt;

TEST_CASE("format_real round-trips doubles exactly") {
  for (double x : {0.0, -0.0, 1.0, 0.1, 1.0 / 3.0, 6.02214076e23, -2.2250738585072014e-308,
                   0.89553349122388326, std::nextafter(1.0, 2.0)}) {
    const std::string s = csv::format_real(x);
    CHECK(csv::parse_real(s) == x);
  }
  CHECK(csv::format_real(0.1) == "0.10000000000000001");
  CHECK(csv::format_real(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(csv::format_real(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(csv::format_real(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(std::isnan(csv::parse_real("nan")));
}

TEST_CASE("parse rejects trailing garbage") {
  CHECK_THROWS((void)csv::parse_real("1.5x"));
  CHECK_THROWS((void)csv::parse_real(""));
  CHECK_THROWS((void)csv::parse_integer("12.0"));
  CHECK(csv::parse_integer("-42") == -42);
}

TEST_CASE("tables read back what write_row produced") {
  std::stringstream s;
  csv::write_row(s, {"a", "b", "c"});
  csv::write_row(s, {"1", "2", "3"});
  csv::write_row(s, {"4", "5", "6"});
  CHECK(s.str() == "a,b,c\n1,2,3\n4,5,6\n");
  const csv::Table t = csv::read_table(s);
  CHECK(t.header == std::vector<std::string>{"a", "b", "c"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[1][t.column("b")] == "5");
  CHECK_THROWS_AS((void)t.column("zzz"), std::out_of_range);
}

TEST_CASE("ragged rows are an error") {
  std::stringstream s("a,b\n1,2\n3\n");
  CHECK_THROWS(csv::read_table(s));
}
