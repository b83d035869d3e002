#include <doctest.h>

#include <sstream>

#include "gcimpute/errors.hpp"
#include "gcimpute/snapshot.hpp"
#include "gcimpute/synth.hpp"
#include "gcimpute/table_io.hpp"

using namespace gcimpute;

TEST_CASE("schema strings") {
  const auto k = parse_schema("cont, ord5,bin");
  REQUIRE(k.size() == 3);
  CHECK(k[1] == ColumnKind::ordinal(5));
  CHECK(format_schema(k) == "cont,ord5,bin");
  CHECK_THROWS_AS(parse_schema("cont,weird"), SchemaError);
}

TEST_CASE("tables round-trip losslessly") {
  SynthConfig cfg;
  cfg.n_per_segment = 200;
  cfg.segments = 1;
  cfg.seed = 2;
  const auto s = generate_stream(cfg);
  Table t;
  for (int j = 0; j < 15; ++j) t.names.push_back("x" + std::to_string(j));
  t.kinds = s.kinds;
  t.values = s.observed;
  std::stringstream buf;
  write_table(buf, t, {provenance_line("cfg", 2)});
  const auto text = buf.str();
  CHECK(text.rfind("# gcimpute config=", 0) == 0);
  const auto back = read_table(buf);
  CHECK(back.names == t.names);
  CHECK(back.kinds == t.kinds);
  REQUIRE(back.values.rows() == 200);
  for (Eigen::Index i = 0; i < 200; ++i)
    for (Eigen::Index j = 0; j < 15; ++j) {
      if (is_missing(t.values(i, j)))
        CHECK(is_missing(back.values(i, j)));
      else
        CHECK(back.values(i, j) == t.values(i, j));
    }
  std::stringstream again;
  write_table(again, back, {provenance_line("cfg", 2)});
  CHECK(again.str() == text);
}

TEST_CASE("parse errors carry line numbers") {
  {
    std::istringstream in("#kind: cont,bin\na,b\n1.5,1\n2.0\n");
    try {
      read_table(in);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 4);
    }
  }
  {
    std::istringstream in("a,b\n1,2\n3,abc\n");
    try {
      read_table(in);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }
  {
    std::istringstream in("#kind: cont,ord3\na,b\n1,4\n");
    CHECK_THROWS_AS(read_table(in), ParseError);
  }
  {
    std::istringstream in("#kind: cont\na,b\n");
    CHECK_THROWS_AS(read_table(in), ParseError);
  }
  {
    std::istringstream in("# only comments\n");
    CHECK_THROWS_AS(read_table(in), ParseError);
  }
}

TEST_CASE("empty cells are missing") {
  std::istringstream in("a,b,c\n1,,3\n,2,\n");
  const auto t = read_table(in);
  CHECK(t.kinds.empty());
  CHECK(is_missing(t.values(0, 1)));
  CHECK(is_missing(t.values(1, 0)));
  CHECK(t.values(1, 1) == 2);
  CHECK_THROWS_AS(check_against_schema(t, {ColumnKind::continuous()}), SchemaError);
}

TEST_CASE("masks convert through tables") {
  Mask m(2, 2);
  m << true, false, false, true;
  const auto t = mask_table(m, {"a", "b"});
  CHECK((table_to_mask(t) == m).all());
  Table bad = t;
  bad.values(0, 0) = 0.5;
  CHECK_THROWS_AS(table_to_mask(bad), SchemaError);
}

TEST_CASE("config fingerprints") {
  CHECK(fnv1a("") == 14695981039346656037ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(provenance_line("x", 5) != provenance_line("y", 5));
  CHECK(provenance_line("x", 5).find("seed=5") != std::string::npos);
}

TEST_CASE("snapshots restore the exact state") {
  SynthConfig cfg;
  cfg.n_per_segment = 300;
  cfg.segments = 1;
  cfg.seed = 6;
  const auto s = generate_stream(cfg);
  OnlineEmState st{CopulaModel::cold_start(s.kinds, 120)};
  st.schedule = StepSchedule::decaying(3.5).with_full_first_step();
  for (int b = 0; b < 5; ++b) online_update(st, s.observed.middleRows(b * 40, 40));

  std::stringstream buf;
  save_snapshot(buf, st);
  auto back = load_snapshot(buf);
  CHECK(back.t == 5);
  CHECK((back.model.sigma.array() == st.model.sigma.array()).all());
  CHECK(back.schedule.parameter() == 3.5);
  CHECK(back.schedule.full_first_step());
  CHECK_FALSE(back.schedule.is_constant());
  for (std::size_t j = 0; j < 15; ++j) {
    CHECK(back.model.marginals[j].window() == st.model.marginals[j].window());
    CHECK(back.model.marginals[j].observed_count() == st.model.marginals[j].observed_count());
    CHECK(back.model.marginals[j].capacity() == 120);
  }
  // continuing from the snapshot matches continuing in memory
  online_update(st, s.observed.middleRows(200, 40));
  online_update(back, s.observed.middleRows(200, 40));
  CHECK((back.model.sigma.array() == st.model.sigma.array()).all());

  std::istringstream junk("gcimpute-snapshot 9\n");
  CHECK_THROWS_AS(load_snapshot(junk), ParseError);
  std::istringstream cut("gcimpute-snapshot 1\np 2\n");
  CHECK_THROWS_AS(load_snapshot(cut), ParseError);
}
