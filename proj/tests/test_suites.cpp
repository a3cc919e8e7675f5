#include <doctest.h>

#include <string>

#include "lightray/errors.hpp"
#include "lightray/suites.hpp"

using namespace lightray;

namespace {

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("FNV-1a 64 against the published vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("config reads typed fields and names the bad one") {
  const Config c(json::parse(R"j({"a": 2, "b": {"n": "x", "list": [1, "two"]}, "tolerances": {"t": -1, "u": 0.5}})j"));
  CHECK(c.integer("a", 0) == 2);
  CHECK(c.number("missing", 1.5) == 1.5);
  CHECK(c.section("nothing").integer("n", 4) == 4);
  CHECK(message_of([&] { c.section("b").number("n", 0); }) == "b.n: expected a number");
  CHECK(message_of([&] { c.section("b").numbers("list", {}); }).rfind("b.list:", 0) == 0);
  CHECK(message_of([&] { c.integer("a", 0, 3); }).rfind("a: out of range", 0) == 0);
  CHECK(message_of([&] { c.tolerance("t", 1.0); }) == "tolerances.t: must be positive");
  CHECK(c.tolerance("u", 1.0) == 0.5);
  CHECK(c.tolerance("v", 2.0) == 2.0);
  // only the tolerances actually handed out are reported
  CHECK(c.tolerances_used() == json::parse(R"j({"u": 0.5, "v": 2.0})j"));
}

TEST_CASE("geometry blocks") {
  const Config c(json::parse(R"j({
    "g1": "rotation(0.2)",
    "g2": {"kind": "stationary", "base": "flat-disc", "kappa": "1.0", "eta": "rotation(0.1)"},
    "g3": "minkowsky",
    "g4": {"eta": "twist(1)"},
    "g5": {"kind": "static"},
    "g6": "rotation(2)"})j"));
  CHECK(c.geometry("g1", "").id == "rotation(0.2)");
  CHECK_FALSE(c.geometry("g2", "").eta_zero);
  CHECK(c.geometry("absent", "minkowski").eta_zero);
  CHECK(message_of([&] { c.geometry("g3", ""); }).rfind("g3: unknown geometry id", 0) == 0);
  CHECK(message_of([&] { c.geometry("g4", ""); }).rfind("g4.eta:", 0) == 0);
  CHECK(message_of([&] { c.geometry("g5", ""); }).rfind("g5: kind", 0) == 0);
  // kappa - |eta|^2 < 0 near the boundary is a configuration problem
  CHECK(message_of([&] { c.geometry("g6", ""); }).rfind("g6:", 0) == 0);
}

TEST_CASE("report_v1 layout and pass logic") {
  SuiteResult r("demo");
  r.at_most("small", 1e-9, 1e-8);
  r.at_least("ratio", 4.0, 3.0);
  r.flag("ok", true);
  SuiteResult sub("inner");
  sub.at_most("bad", 2.0, 1.0);
  sub.data["x"] = 1;
  CHECK(r.pass());
  r.merge("inner", sub);
  CHECK_FALSE(r.pass());
  CHECK(r.criteria.back().name == "inner.bad");

  const Config cfg(json::parse(R"j({"seed": 3, "tolerances": {"k": 0.1}})j"));
  cfg.tolerance("k", 1.0);
  const json j = report_json(r, cfg, 3);
  CHECK(j["schema"] == "report_v1");
  CHECK(j["seed"] == 3);
  CHECK(j["pass"] == false);
  CHECK(j["tolerances"]["k"] == 0.1);
  CHECK(j["criteria"].size() == 4);
  CHECK(j["data"]["inner"]["x"] == 1);
  CHECK(j["config_hash"].get<std::string>().size() == 16);
  CHECK(j.dump() == report_json(r, cfg, 3).dump());
  CHECK(j["config_hash"] != report_json(r, Config(json::parse(R"j({"seed": 4})j")), 3)["config_hash"]);
}

TEST_CASE("library random fields are reproducible and compactly supported") {
  Vec c(2);
  c << 0.1, 0.0;
  const SpacetimeTensorField a = random_bump_field(2, 1, 5, c, 0.5, 0.0, 1.0);
  const SpacetimeTensorField b = random_bump_field(2, 1, 5, c, 0.5, 0.0, 1.0);
  Vec in(3), out(3);
  in << 0.2, 0.2, 0.1;
  out << 0.0, 0.7, 0.0;
  CHECK(a(in)[1] == b(in)[1]);
  CHECK(a(in).max_abs() > 0);
  CHECK(a(out).max_abs() == 0);
  CHECK(random_bump_field(2, 1, 6, c, 0.5, 0.0, 1.0)(in)[1] != a(in)[1]);
}
