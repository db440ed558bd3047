#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

#include "cpsw/ingest.hpp"

using namespace cpsw;

namespace {

FeatureSchema schema2() {
  return FeatureSchema({
      {"LIT101", FeatureKind::Sensor, 0.0, 1250.0},
      {"MV101", FeatureKind::Valve, 0.0, 2.0},
  });
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name, const std::string& content = "")
      : path(name) {
    if (!content.empty()) {
      std::ofstream out(path);
      out << content;
    }
  }
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("CSV round trip preserves values, labels and timestamps") {
  TimeSeries s;
  s.start_time = 1700000000;
  s.period = 1.0;
  s.values.resize(3, 2);
  s.values << 650.123456, 2,
              651.5, 1,
              652.0, 2;
  s.labels = {Label::Normal, Label::Attack, Label::Normal};

  TempFile f("ingest_rt.csv");
  write_historian_csv(s, schema2(), f.path);
  TimeSeries back = read_historian_csv(f.path, schema2());

  CHECK(back.start_time == s.start_time);
  REQUIRE(back.length() == 3);
  CHECK((back.values - s.values).cwiseAbs().maxCoeff() < 1e-6);
  REQUIRE(back.labels.size() == 3);
  CHECK(back.labels[1] == Label::Attack);
}

TEST_CASE("Status column is optional") {
  TimeSeries s;
  s.start_time = 1700000000;
  s.values.resize(2, 2);
  s.values << 600, 1, 601, 1;

  TempFile f("ingest_nostatus.csv");
  write_historian_csv(s, schema2(), f.path);
  {
    std::ifstream in(f.path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "Timestamp,LIT101,MV101");
  }
  TimeSeries back = read_historian_csv(f.path, schema2());
  CHECK_FALSE(back.has_labels());
}

TEST_CASE("include_status=false drops labels on write") {
  TimeSeries s;
  s.start_time = 1700000000;
  s.values.resize(1, 2);
  s.values << 600, 1;
  s.labels = {Label::Attack};

  TempFile f("ingest_drop.csv");
  write_historian_csv(s, schema2(), f.path, /*include_status=*/false);
  TimeSeries back = read_historian_csv(f.path, schema2());
  CHECK_FALSE(back.has_labels());
}

TEST_CASE("header mismatches are rejected with the offending column") {
  TempFile f("ingest_badheader.csv",
             "Timestamp,LIT101,WRONG\n"
             "2023-11-14T22:13:20Z,600.0,1\n");
  CHECK_THROWS_WITH_AS(read_historian_csv(f.path, schema2()),
                       doctest::Contains("WRONG"), std::runtime_error);
}

TEST_CASE("bad rows are rejected with a row number") {
  SUBCASE("wrong column count") {
    TempFile f("ingest_badrow.csv",
               "Timestamp,LIT101,MV101\n"
               "2023-11-14T22:13:20Z,600.0\n");
    CHECK_THROWS_WITH_AS(read_historian_csv(f.path, schema2()),
                         doctest::Contains("row 2"), std::runtime_error);
  }
  SUBCASE("unparsable value") {
    TempFile f("ingest_badval.csv",
               "Timestamp,LIT101,MV101\n"
               "2023-11-14T22:13:20Z,xyz,1\n");
    CHECK_THROWS_WITH_AS(read_historian_csv(f.path, schema2()),
                         doctest::Contains("xyz"), std::runtime_error);
  }
  SUBCASE("non-monotone timestamp") {
    TempFile f("ingest_badts.csv",
               "Timestamp,LIT101,MV101\n"
               "2023-11-14T22:13:21Z,600.0,1\n"
               "2023-11-14T22:13:20Z,600.0,1\n");
    CHECK_THROWS_WITH_AS(read_historian_csv(f.path, schema2()),
                         doctest::Contains("row 3"), std::runtime_error);
  }
  SUBCASE("bad status token") {
    TempFile f("ingest_badstatus.csv",
               "Timestamp,LIT101,MV101,Status\n"
               "2023-11-14T22:13:20Z,600.0,1,Maybe\n");
    CHECK_THROWS_WITH_AS(read_historian_csv(f.path, schema2()),
                         doctest::Contains("Maybe"), std::runtime_error);
  }
}

TEST_CASE("missing and empty files are errors") {
  CHECK_THROWS_AS(read_historian_csv("no-such-file.csv", schema2()),
                  std::runtime_error);
  TempFile f("ingest_empty.csv", " ");
  {
    std::ofstream out(f.path, std::ios::trunc);  // truly empty
  }
  CHECK_THROWS_AS(read_historian_csv(f.path, schema2()), std::runtime_error);
}
