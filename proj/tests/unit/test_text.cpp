#include <doctest.h>

#include "geoeval/text.hpp"

using namespace geoeval::text;

TEST_CASE("utf8_lower folds case across scripts without stripping accents") {
  CHECK(utf8_lower("FRANCE") == "france");
  CHECK(utf8_lower("CÔTE D'IVOIRE") == "côte d'ivoire");
  CHECK(utf8_lower("ÅLAND") == "åland");
  CHECK(utf8_lower("ΕΛΛΆΔΑ") == "ελλάδα");
  CHECK(utf8_lower("РОССИЯ") == "россия");
  CHECK(utf8_lower("TÜRKİYE").substr(0, 4) == "tür");
  CHECK(utf8_lower("cote") != utf8_lower("Côte"));
}

TEST_CASE("utf8_lower passes malformed bytes through") {
  const std::string bad = "A\xff\xfe" "B";
  CHECK(utf8_lower(bad) == "a\xff\xfe" "b");
}

TEST_CASE("trim and csv split") {
  CHECK(trim_ascii("  x y \t\r\n") == "x y");
  CHECK(trim_ascii("") == "");
  const auto f = split_csv_line("a,,b");
  REQUIRE(f.size() == 3);
  CHECK(f[1].empty());
}

TEST_CASE("format_percent rounds half-up to two decimals") {
  CHECK(format_percent(0.75) == "75.00");
  CHECK(format_percent(1.0) == "100.00");
  CHECK(format_percent(0.0) == "0.00");
  CHECK(format_percent(1.0 / 3.0) == "33.33");
  CHECK(format_percent(2.0 / 3.0) == "66.67");
  CHECK(format_percent(0.4437) == "44.37");
  CHECK(format_percent(0.00125) == "0.13");
  CHECK(format_percent(0.00005) == "0.01");
  CHECK(format_percent(0.123449) == "12.34");
}
