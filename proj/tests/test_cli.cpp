#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tforms/serialize.hpp"

using namespace tforms;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  fs::path dir = fs::temp_directory_path() / "tforms_cli_tests";
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(TFORMS_BIN) + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

const char* kLinearProblem = R"({
  "space": {"kind": "symbolic-circle"},
  "fields": {
    "alpha": {
      "kind": "scalar_symbolic",
      "expr": "z-0.5",
      "zeros": [{"at": 0.5, "order": 1, "left": "-", "right": "+", "coeff": 1.0}]
    }
  },
  "task": "classify",
  "params": {"form": "alpha"}
})";

}  // namespace

TEST_CASE("problem files parse, validate, and reject garbage") {
  const fs::path dir = scratch_dir();
  write_file(dir / "linear.json", kLinearProblem);
  io::Problem p = io::load_problem(dir / "linear.json", std::nullopt);
  CHECK(p.task == "classify");
  CHECK(p.named_fields.count("alpha") == 1);
  const fields::ScalarGermField& alpha = p.named_fields.at("alpha").symbolic_field();
  REQUIRE(alpha.zeros.size() == 1);
  CHECK(alpha.zeros[0].left->sign == -1);
  CHECK(alpha.zeros[0].right->sign == 1);

  write_file(dir / "broken.json", "{\"space\": ");
  CHECK_THROWS_AS(io::load_problem(dir / "broken.json", std::nullopt), Error);
  try {
    io::load_problem(dir / "broken.json", std::nullopt);
  } catch (const Error& e) {
    CHECK(e.code() == Err::ParseError);
  }

  write_file(dir / "dangling.json", R"({
    "space": {"kind": "symbolic-circle"},
    "fields": {},
    "task": "classify",
    "params": {"form": "missing"}
  })");
  try {
    io::load_problem(dir / "dangling.json", std::nullopt);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == Err::ValidationError);
  }
}

TEST_CASE("sampled field round trip through the binary format") {
  const fs::path dir = scratch_dir();
  Rng rng(5);
  const fields::BaseSpace grid = fields::BaseSpace::circle_grid(32);
  std::vector<Matrix> fibers(32);
  for (auto& m : fibers) {
    m.resize(2, 2);
    for (int c = 0; c < 2; ++c)
      for (int r = 0; r < 2; ++r) m(r, c) = rng.complex_in_disk(1.0);
  }
  fields::OperatorField field = fields::OperatorField::sampled(grid, fibers);
  io::json spec = io::field_to_json(field, dir, "roundtrip");
  fields::OperatorField back = io::field_from_json(spec, dir, std::nullopt);
  REQUIRE(back.fiber_count() == field.fiber_count());
  for (std::size_t j = 0; j < field.fiber_count(); ++j)
    CHECK((back.fiber(j) - field.fiber(j)).norm() == 0.0);
}

TEST_CASE("cli classify and density runs") {
  const fs::path dir = scratch_dir();
  write_file(dir / "linear.json", kLinearProblem);
  const fs::path report = dir / "report.json";

  CHECK(run_cli("classify " + (dir / "linear.json").string() + " --out " + report.string()) == 0);
  io::json doc = io::json::parse(slurp(report));
  CHECK(doc.at("mode") == "exact-symbolic");
  CHECK(doc.at("positive").size() == 1);
  CHECK(doc.at("negative").size() == 1);
  CHECK(doc.at("positive")[0].at("side") == "right");

  const fs::path curve = dir / "curve.csv";
  CHECK(run_cli("--grid 8192 density " + (dir / "linear.json").string() +
                " --lambda-min 1e-6 --lambda-max 1e-1 --points 50 --out " + curve.string()) == 0);
  std::istringstream csv(slurp(curve));
  std::string header;
  std::getline(csv, header);
  CHECK(header == "lambda,F");
  int rows = 0;
  for (std::string line; std::getline(csv, line);) ++rows;
  CHECK(rows == 50);

  // malformed input exits 1
  write_file(dir / "bad.json", "{");
  CHECK(run_cli("classify " + (dir / "bad.json").string() + " --out " + report.string()) == 1);
}

TEST_CASE("cli congruence exit codes distinguish decided answers") {
  const fs::path dir = scratch_dir();
  write_file(dir / "a.json", R"({
    "space": {"kind": "symbolic-circle"},
    "fields": {"alpha": {"kind": "scalar_symbolic", "expr": "|z-0.5|",
      "zeros": [{"at": 0.5, "order": 1, "left": "+", "right": "+", "coeff": 1.0}]}},
    "task": "congruence", "params": {"form": "alpha"}
  })");
  write_file(dir / "b.json", R"({
    "space": {"kind": "symbolic-circle"},
    "fields": {"alpha": {"kind": "scalar_symbolic", "expr": "2*|z-0.5|",
      "zeros": [{"at": 0.5, "order": 1, "left": "+", "right": "+", "coeff": 2.0}]}},
    "task": "congruence", "params": {"form": "alpha"}
  })");
  const fs::path cert = dir / "cert.json";
  CHECK(run_cli("congruence " + (dir / "a.json").string() + " " + (dir / "b.json").string() +
                " --out " + cert.string()) == 0);
  io::json doc = io::json::parse(slurp(cert));
  CHECK(doc.at("congruent") == true);
  CHECK(doc.at("certificates").size() >= 1);
}

TEST_CASE("cli check is deterministic byte-for-byte") {
  const fs::path dir = scratch_dir();
  const fs::path r1 = dir / "check1.json";
  const fs::path r2 = dir / "check2.json";
  CHECK(run_cli("check --seed 42 --suite linalg --out " + r1.string()) == 0);
  CHECK(run_cli("check --seed 42 --suite linalg --out " + r2.string()) == 0);
  CHECK(slurp(r1) == slurp(r2));
  CHECK(slurp(r1).find("\"eig_reconstruction\"") != std::string::npos);
}
