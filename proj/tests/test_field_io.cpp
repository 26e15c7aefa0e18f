#include "support.hpp"
#include "strata/field_io.hpp"
#include "strata/fields.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace strata;
using namespace testing_support;
using nlohmann::json;

namespace {

std::filesystem::path scratch_dir() {
  auto dir = std::filesystem::temp_directory_path() / "strata_field_io_tests";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string write_text(const std::string& name, const std::string& text) {
  const auto path = scratch_dir() / name;
  std::ofstream(path) << text;
  return path.string();
}

double max_gap(const ScalarField& a, const ScalarField& b, std::mt19937_64& rng, int samples = 50) {
  double gap = 0.0;
  for (int i = 0; i < samples; ++i) {
    const Vector x = random_point(rng, a.dim(), 1.5);
    gap = std::max(gap, std::abs(a(x) - b(x)));
  }
  return gap;
}

}  // namespace

TEST_SUITE("field_io") {

TEST_CASE("monomial spec evaluates the written polynomial") {
  const json j = json::parse(R"({"type":"polynomial","n":3,"degree":2,
    "monomials":[{"exp":[2,0,0],"c":1},{"exp":[0,2,0],"c":-1}]})");
  const FieldPtr v = field_from_json(j);
  CHECK((*v)(vec({0.3, -0.7, 2.0})) == doctest::Approx(0.09 - 0.49).epsilon(1e-14));
  CHECK(v->harmonic());
}

TEST_CASE("every variant round-trips through its spec") {
  std::mt19937_64 rng(3);
  const HarmonicPolynomial p = random_harmonic(rng, 3, 3);
  Frame frame{random_rotation(rng, 3), vec({0.1, -0.2, 0.05})};
  const FieldPtr poly = make_polynomial(p);
  const FieldPtr hinged = make_hinged(p, 2.5, frame);
  const FieldPtr affine = compose_affine(hinged, -2.0, 0.5, 0.3);
  const FieldPtr sum = make_sum({poly, make_polynomial(coordinate(3, 1))});
  const FieldPtr moll = mollify(make_polynomial(coordinate(3, 0)), 0.2, 6);
  for (const FieldPtr& v : {poly, hinged, affine, sum, moll}) {
    const json j = field_to_json(*v);
    CHECK(j.at("schema") == 1);
    const FieldPtr back = field_from_json(json::parse(j.dump()));
    CHECK(max_gap(*v, *back, rng) <= 1e-12 * std::max(1.0, std::abs((*v)(vec({1, 1, 1})))));
    CHECK(field_to_json(*back) == j);
  }
}

TEST_CASE("sampled spec resolves the grid path relative to the spec file") {
  const FieldPtr lin = make_polynomial(coordinate(2, 0));
  const SampledGrid grid = sample_on_grid(*lin, Box{vec({-1, -1}), vec({1, 1})}, {9, 9});
  write_sampled_grid(grid, (scratch_dir() / "lin_grid.json").string());
  const std::string spec = write_text("lin_sampled.json", R"({"type":"sampled","n":2,"grid_ref":"lin_grid.json"})");
  const FieldPtr v = load_field(spec);
  CHECK((*v)(vec({0.37, -0.2})) == doctest::Approx(0.37).epsilon(1e-12));
}

TEST_CASE("lipschitz hints survive parsing") {
  const json j = json::parse(R"({"type":"polynomial","n":2,"degree":1,"coeffs":[1,0],"lipschitz_hint":4})");
  const FieldPtr v = field_from_json(j);
  REQUIRE(v->lipschitz_hint().has_value());
  CHECK(*v->lipschitz_hint() == 4.0);
}

TEST_CASE("invalid specs are rejected") {
  const char* bad[] = {
      R"({"type":"polynomial","n":2,"degree":1,"coeffs":[1,0],"colour":"red"})",
      R"({"type":"polynomial","n":2,"degree":1})",
      R"({"type":"polynomial","n":2,"degree":1,"coeffs":[1,0,3]})",
      R"({"type":"polynomial","n":2,"degree":2,"monomials":[{"exp":[1,0],"c":1}]})",
      R"({"type":"polynomial","n":2,"degree":2,"monomials":[{"exp":[2,0],"c":1}]})",
      R"({"type":"hinged","n":2,"degree":1,"coeffs":[1,0],"c":-1})",
      R"({"type":"hinged","n":2,"degree":1,"coeffs":[1,0],"c":1,"frame":{"rotation":[[1,1],[0,1]]}})",
      R"({"type":"affine","base":{"type":"polynomial","n":2,"degree":1,"coeffs":[1,0]},"a":0})",
      R"({"type":"sum","terms":[]})",
      R"({"type":"mollified","base":{"type":"polynomial","n":2,"degree":1,"coeffs":[1,0]},"eps":0})",
      R"({"type":"spline","n":2})",
      R"({"schema":2,"type":"polynomial","n":2,"degree":1,"coeffs":[1,0]})",
      R"([1,2,3])",
  };
  for (const char* text : bad) CHECK_THROWS_AS(field_from_json(json::parse(text)), InvalidArgument);
}

TEST_CASE("file errors carry the line of the offending key") {
  const std::string path = write_text("bad_key.json", "{\n  \"type\": \"hinged\",\n  \"n\": 2,\n  \"degree\": 1,\n"
                                                      "  \"coeffs\": [1, 0],\n  \"c\": -3\n}\n");
  try {
    load_field(path);
    FAIL("expected a validation error");
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).find(path + ":6:") != std::string::npos);
  }
  const std::string broken = write_text("broken.json", "{\n  \"type\": \"polynomial\",\n  \"n\": 2,,\n}\n");
  try {
    load_field(broken);
    FAIL("expected a syntax error");
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).find(broken + ":3:") != std::string::npos);
  }
  CHECK_THROWS_AS(load_field((scratch_dir() / "missing.json").string()), InvalidArgument);
}

TEST_CASE("line_of_key finds the first occurrence") {
  CHECK(line_of_key("{\n\"a\": 1,\n\"b\": 2\n}", "b") == 3);
  CHECK(line_of_key("{\"a\": 1}", "zz") == 0);
  CHECK(line_of_key("{\"a\": 1}", "") == 0);
}

TEST_CASE("metadata reports the frequency at the unit scale") {
  const FieldPtr v = make_polynomial(monomials(3, 2, {{{2, 0, 0}, 1.0}, {{0, 2, 0}, -1.0}}));
  const FieldMetadata m = field_metadata(*v, 0.5, 3.0);
  CHECK(m.Lambda == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(m.alpha == 0.5);
  CHECK(m.Gamma == 0.0);
  CHECK(m.m0_hint.value() == 3.0);
}

}
