// tforms: batch front door for torsion Hermitian form computations.
// Exit codes: 0 decided, 2 heuristic or inconclusive, 1 errors.

#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "tforms/serialize.hpp"

namespace {

using tforms::Err;
using tforms::Error;
namespace io = tforms::io;
namespace fields = tforms::fields;
namespace forms = tforms::forms;
namespace classify = tforms::classify;
namespace torsion = tforms::torsion;
namespace props = tforms::props;

const fields::OperatorField& named_field(const io::Problem& problem, const std::string& key,
                                         const std::string& fallback) {
  std::string name = fallback;
  if (problem.params.contains(key)) name = problem.params.at(key).get<std::string>();
  auto it = problem.named_fields.find(name);
  if (it == problem.named_fields.end())
    tforms::fail(Err::ValidationError, "problem does not define field '" + name + "'");
  return it->second;
}

forms::TorsionForm form_of(const io::Problem& problem) {
  return forms::discriminant(named_field(problem, "form", "alpha"));
}

std::filesystem::path out_dir_of(const std::filesystem::path& out) {
  return out.has_parent_path() ? out.parent_path() : std::filesystem::path(".");
}

int run_classify(const std::string& problem_path, const std::string& out,
                 std::optional<int> grid) {
  io::Problem problem = io::load_problem(problem_path, grid);
  classify::ClassificationReport report = classify::classify_form(form_of(problem));
  io::json j = io::classification_to_json(report);
  j["task"] = "classify";
  io::write_text(out, io::dump(j));
  const bool exact = report.mode == classify::ClassificationReport::Mode::ExactSymbolic;
  std::cerr << "classify: " << report.positive.size() << " positive and "
            << report.negative.size() << " negative germ entries ("
            << (exact ? "exact" : "heuristic") << ")\n";
  return exact ? 0 : 2;
}

int run_congruence(const std::string& a_path, const std::string& b_path, const std::string& out,
                   std::optional<int> grid) {
  io::Problem pa = io::load_problem(a_path, grid);
  io::Problem pb = io::load_problem(b_path, grid);
  classify::CongruenceVerdict verdict = classify::congruent(form_of(pa), form_of(pb));
  io::json j;
  j["task"] = "congruence";
  j["congruent"] = verdict.congruent;
  j["heuristic"] = verdict.heuristic;
  if (verdict.heuristic) j["dilatation"] = verdict.dilatation;
  j["distinguishing"] = io::signature_to_json(verdict.distinguishing);
  io::json certs = io::json::array();
  for (std::size_t i = 0; i < verdict.certificates.size(); ++i)
    certs.push_back(io::certificate_to_json(
        verdict.certificates[i], out_dir_of(out),
        std::filesystem::path(out).stem().string() + ".cert" + std::to_string(i)));
  j["certificates"] = certs;
  io::write_text(out, io::dump(j));
  std::cerr << "congruence: " << (verdict.congruent ? "congruent" : "not congruent")
            << (verdict.heuristic ? " (heuristic)" : "") << "\n";
  return verdict.heuristic ? 2 : 0;
}

int run_split(const std::string& problem_path, const std::string& out, std::optional<int> grid) {
  io::Problem problem = io::load_problem(problem_path, grid);
  forms::TorsionForm phi = form_of(problem);
  forms::PosNegSplit split = forms::pos_neg_split(phi);
  io::json j;
  j["task"] = "split";
  const bool exact = phi.symbolic();
  if (exact) {
    j["positive"] = io::signature_to_json(forms::form_signature(split.positive));
    j["negative"] = io::signature_to_json(forms::form_signature(split.negative));
  } else {
    j["positive_parts"] = split.positive.parts.size();
    j["negative_parts"] = split.negative.parts.size();
  }
  io::json fields_json;
  for (std::size_t i = 0; i < split.positive.parts.size(); ++i)
    fields_json["positive" + std::to_string(i)] = io::field_to_json(
        split.positive.parts[i].x.alpha(), out_dir_of(out),
        std::filesystem::path(out).stem().string() + ".pos" + std::to_string(i));
  for (std::size_t i = 0; i < split.negative.parts.size(); ++i)
    fields_json["negative" + std::to_string(i)] = io::field_to_json(
        split.negative.parts[i].x.alpha(), out_dir_of(out),
        std::filesystem::path(out).stem().string() + ".neg" + std::to_string(i));
  j["parts"] = fields_json;
  io::write_text(out, io::dump(j));
  std::cerr << "split: " << split.positive.parts.size() << " positive / "
            << split.negative.parts.size() << " negative parts\n";
  return exact ? 0 : 2;
}

int run_metabolizer(const std::string& problem_path, const std::string& out,
                    std::optional<int> grid) {
  io::Problem problem = io::load_problem(problem_path, grid);
  forms::TorsionForm phi = form_of(problem);
  forms::MetabolizerResult met = forms::metabolizer(phi);
  io::json j;
  j["task"] = "metabolizer";
  j["delta_criterion"] = met.delta_criterion;
  io::json parts = io::json::array();
  for (std::size_t i = 0; i < met.parts.size(); ++i) {
    io::json p;
    p["residual"] = met.parts[i].residual;
    p["delta_floor"] = met.parts[i].delta_floor;
    p["beta"] = io::field_to_json(
        met.parts[i].beta, out_dir_of(out),
        std::filesystem::path(out).stem().string() + ".beta" + std::to_string(i));
    parts.push_back(p);
  }
  j["parts"] = parts;
  io::write_text(out, io::dump(j));
  std::cerr << "metabolizer: " << met.parts.size() << " block(s), delta criterion "
            << (met.delta_criterion ? "passed" : "failed") << "\n";
  return met.delta_criterion ? 0 : 1;
}

int run_density(const std::string& problem_path, double lambda_min, double lambda_max, int points,
                const std::string& out, std::optional<int> grid) {
  io::Problem problem = io::load_problem(problem_path, grid);
  const fields::OperatorField& field = named_field(problem, "form", "alpha");
  torsion::TorsionObject x = torsion::TorsionObject::from_field(field);
  const int sampling = grid.value_or(65536);
  torsion::DensityCurve curve = torsion::density_curve(x, lambda_min, lambda_max, points, sampling);
  io::write_density_csv(out, curve);
  std::cerr << "density: " << points << " points, exponent "
            << torsion::ns_exponent(curve) << "\n";
  return 0;
}

int run_check(std::uint64_t seed, const std::string& suite, const std::string& out) {
  props::SuiteReport report = props::run_suite(suite, seed);
  io::json j = io::suite_to_json(report);
  j["task"] = "check";
  j["seed"] = seed;
  const std::string text = io::dump(j);
  if (!out.empty())
    io::write_text(out, text);
  else
    std::cout << text;
  std::cerr << "check: " << report.passed() << " passed, " << report.failed() << " failed\n";
  return report.failed() == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"torsion Hermitian forms over the measured circle"};
  app.require_subcommand(1);

  std::optional<int> grid;
  app.add_option("--grid", grid, "override the sampling resolution")->check(CLI::PositiveNumber);

  std::string problem_path, other_path, out_path;

  CLI::App* classify_cmd = app.add_subcommand("classify", "classify a torsion form");
  classify_cmd->add_option("problem", problem_path, "problem JSON file")->required();
  classify_cmd->add_option("--out", out_path, "report path")->default_val("report.json");

  CLI::App* congruence_cmd = app.add_subcommand("congruence", "decide congruence of two forms");
  congruence_cmd->add_option("a", problem_path, "first problem file")->required();
  congruence_cmd->add_option("b", other_path, "second problem file")->required();
  congruence_cmd->add_option("--out", out_path, "certificate path")->default_val("cert.json");

  CLI::App* split_cmd = app.add_subcommand("split", "positive/negative splitting");
  split_cmd->add_option("problem", problem_path, "problem JSON file")->required();
  split_cmd->add_option("--out", out_path, "report path")->default_val("split.json");

  CLI::App* metabolizer_cmd = app.add_subcommand("metabolizer", "canonical metabolizer");
  metabolizer_cmd->add_option("problem", problem_path, "problem JSON file")->required();
  metabolizer_cmd->add_option("--out", out_path, "report path")->default_val("metabolizer.json");

  double lambda_min = 1e-6, lambda_max = 1e-1;
  int points = 200;
  CLI::App* density_cmd = app.add_subcommand("density", "spectral density curve (CSV)");
  density_cmd->add_option("problem", problem_path, "problem JSON file")->required();
  density_cmd->add_option("--lambda-min", lambda_min, "window lower end");
  density_cmd->add_option("--lambda-max", lambda_max, "window upper end");
  density_cmd->add_option("--points", points, "number of grid points");
  density_cmd->add_option("--out", out_path, "CSV path")->default_val("curve.csv");

  std::uint64_t seed = 42;
  std::string suite = "all";
  CLI::App* check_cmd = app.add_subcommand("check", "run the property suites");
  check_cmd->add_option("--seed", seed, "suite seed");
  check_cmd->add_option("--suite", suite, "linalg | forms | classify | all");
  check_cmd->add_option("--out", out_path, "report path (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*classify_cmd) return run_classify(problem_path, out_path, grid);
    if (*congruence_cmd) return run_congruence(problem_path, other_path, out_path, grid);
    if (*split_cmd) return run_split(problem_path, out_path, grid);
    if (*metabolizer_cmd) return run_metabolizer(problem_path, out_path, grid);
    if (*density_cmd)
      return run_density(problem_path, lambda_min, lambda_max, points, out_path, grid);
    if (*check_cmd) return run_check(seed, suite, out_path);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
