#include "tforms/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace tforms::io {

namespace {

using fields::BaseSpace;
using fields::GermZero;
using fields::OperatorField;
using fields::ScalarGermField;
using fields::SideGerm;

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json number(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

int parse_sign(const json& j, const char* field_name) {
  const std::string s = j.get<std::string>();
  if (s == "+") return 1;
  if (s == "-") return -1;
  fail(Err::ValidationError, std::string(field_name) + " must be \"+\" or \"-\"");
}

SideGerm side_from_json(const json& j) {
  SideGerm g;
  g.order = j.at("order").get<int>();
  g.sign = parse_sign(j.at("sign"), "sign");
  g.coeff = j.value("coeff", 1.0);
  return g;
}

json side_to_json(const SideGerm& g) {
  json j;
  j["order"] = g.order;
  j["sign"] = g.sign > 0 ? "+" : "-";
  j["coeff"] = g.coeff;
  return j;
}

GermZero zero_from_json(const json& j) {
  GermZero z;
  z.at = j.at("at").get<double>();
  const bool flat = j.contains("order");
  if (flat) {
    SideGerm base;
    base.order = j.at("order").get<int>();
    base.coeff = j.value("coeff", 1.0);
    if (j.contains("left")) {
      SideGerm left = base;
      left.sign = parse_sign(j.at("left"), "left");
      z.left = left;
    }
    if (j.contains("right")) {
      SideGerm right = base;
      right.sign = parse_sign(j.at("right"), "right");
      z.right = right;
    }
  } else {
    if (j.contains("left") && !j.at("left").is_null()) z.left = side_from_json(j.at("left"));
    if (j.contains("right") && !j.at("right").is_null()) z.right = side_from_json(j.at("right"));
  }
  if (!z.left && !z.right)
    fail(Err::ValidationError, "zero declaration carries no side germ");
  return z;
}

std::vector<Matrix> read_fibers(const std::filesystem::path& path, int grid, int dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Err::ValidationError, "cannot open fiber data file " + path.string());
  std::vector<Matrix> fibers(static_cast<std::size_t>(grid));
  const std::size_t doubles_per_fiber = 2u * static_cast<std::size_t>(dim) * dim;
  std::vector<double> buffer(doubles_per_fiber);
  for (int j = 0; j < grid; ++j) {
    in.read(reinterpret_cast<char*>(buffer.data()),
            static_cast<std::streamsize>(buffer.size() * sizeof(double)));
    if (!in) fail(Err::ValidationError, "fiber data file too short: " + path.string());
    Matrix m(dim, dim);
    std::size_t k = 0;
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) {
        m(r, c) = Complex(buffer[k], buffer[k + 1]);
        k += 2;
      }
    fibers[static_cast<std::size_t>(j)] = m;
  }
  return fibers;
}

void write_fibers(const std::filesystem::path& path, const OperatorField& field) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Err::ValidationError, "cannot write fiber data file " + path.string());
  for (std::size_t j = 0; j < field.fiber_count(); ++j) {
    const Matrix& m = field.fiber(j);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const double re = m(r, c).real();
        const double im = m(r, c).imag();
        out.write(reinterpret_cast<const char*>(&re), sizeof(double));
        out.write(reinterpret_cast<const char*>(&im), sizeof(double));
      }
  }
}

}  // namespace

OperatorField field_from_json(const json& spec, const std::filesystem::path& base_dir,
                              std::optional<int> grid_override) {
  const std::string kind = spec.at("kind").get<std::string>();
  if (kind == "scalar_symbolic") {
    ScalarGermField f;
    f.expression = expr::parse(spec.at("expr").get<std::string>());
    if (spec.contains("zeros")) {
      for (const json& z : spec.at("zeros")) f.zeros.push_back(zero_from_json(z));
      std::sort(f.zeros.begin(), f.zeros.end(),
                [](const GermZero& a, const GermZero& b) { return a.at < b.at; });
      f.zeros_known = true;
    }
    f.floor = spec.value("floor", 1e-9);
    f.radius = spec.value("radius", 1e-2);
    if (f.zeros_known) f.validate();
    return OperatorField::symbolic(std::move(f));
  }
  if (kind == "sampled") {
    const int dim = spec.at("dim").get<int>();
    const int grid = grid_override.value_or(spec.at("grid").get<int>());
    if (grid_override && *grid_override != spec.at("grid").get<int>())
      fail(Err::ValidationError, "--grid cannot resample stored fiber data");
    const std::filesystem::path data = base_dir / spec.at("data").get<std::string>();
    return OperatorField::sampled(BaseSpace::circle_grid(grid), read_fibers(data, grid, dim));
  }
  fail(Err::ValidationError, "unknown field kind '" + kind + "'");
}

json field_to_json(const OperatorField& field, const std::filesystem::path& out_dir,
                   const std::string& data_stem) {
  json j;
  if (field.repr() == OperatorField::Repr::Symbolic) {
    const ScalarGermField& f = field.symbolic_field();
    j["kind"] = "scalar_symbolic";
    j["expr"] = f.expression.to_string();
    if (f.zeros_known) {
      json zeros = json::array();
      for (const GermZero& z : f.zeros) {
        json zj;
        zj["at"] = z.at;
        if (z.left) zj["left"] = side_to_json(*z.left);
        if (z.right) zj["right"] = side_to_json(*z.right);
        zeros.push_back(zj);
      }
      j["zeros"] = zeros;
    }
    return j;
  }
  const std::string file_name = data_stem + ".bin";
  write_fibers(out_dir / file_name, field);
  j["kind"] = "sampled";
  j["dim"] = field.dim();
  j["grid"] = field.space().grid_n;
  j["data"] = file_name;
  return j;
}

Problem load_problem(const std::filesystem::path& path, std::optional<int> grid_override) {
  std::ifstream in(path);
  if (!in) fail(Err::ValidationError, "cannot open problem file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(Err::ParseError, std::string(e.what()));
  }
  Problem p;
  const json& space = doc.at("space");
  const std::string kind = space.at("kind").get<std::string>();
  if (kind == "circle-grid") {
    p.space = BaseSpace::circle_grid(grid_override.value_or(space.at("n").get<int>()));
  } else if (kind == "symbolic-circle") {
    p.space = BaseSpace::symbolic_circle();
  } else {
    fail(Err::ValidationError, "unknown space kind '" + kind + "'");
  }
  if (doc.contains("fields")) {
    for (auto it = doc.at("fields").begin(); it != doc.at("fields").end(); ++it) {
      fields::OperatorField f =
          field_from_json(it.value(), path.parent_path(), grid_override);
      p.named_fields.emplace(it.key(), std::move(f));
    }
  }
  p.task = doc.value("task", "");
  p.params = doc.value("params", json::object());
  // every field name referenced by the parameters must resolve
  for (const char* key : {"form", "other", "field", "f", "g"}) {
    if (p.params.contains(key) && p.params.at(key).is_string()) {
      const std::string name = p.params.at(key).get<std::string>();
      if (p.named_fields.find(name) == p.named_fields.end())
        fail(Err::ValidationError, "parameter '" + std::string(key) + "' references unknown field '" +
                                       name + "'");
    }
  }
  return p;
}

json signature_to_json(const torsion::GermSignature& sig) {
  json arr = json::array();
  for (const torsion::GermEntry& e : sig) {
    json j;
    j["location"] = e.location;
    j["side"] = e.side == torsion::Side::Left ? "left" : "right";
    j["order"] = e.order;
    j["sign"] = e.sign > 0 ? "+" : "-";
    arr.push_back(j);
  }
  return arr;
}

json certificate_to_json(const forms::CongruenceCertificate& cert,
                         const std::filesystem::path& out_dir, const std::string& data_stem) {
  json j;
  j["kind"] = cert.kind == forms::CongruenceCertificate::Kind::Direct ? "direct" : "excision-pair";
  j["residual"] = cert.residual;
  json src = json::array();
  for (const forms::Interval& iv : cert.excised_source) src.push_back({iv.lo, iv.hi});
  json dst = json::array();
  for (const forms::Interval& iv : cert.excised_target) dst.push_back({iv.lo, iv.hi});
  j["excised_source"] = src;
  j["excised_target"] = dst;
  json checks;
  for (const auto& [name, value] : cert.checks) checks[name] = value;
  j["checks"] = checks;
  j["transform"] = field_to_json(cert.transform, out_dir, data_stem);
  return j;
}

json classification_to_json(const classify::ClassificationReport& report) {
  json j;
  j["mode"] = report.mode == classify::ClassificationReport::Mode::ExactSymbolic
                  ? "exact-symbolic"
                  : "heuristic-sampled";
  j["positive"] = signature_to_json(report.positive);
  j["negative"] = signature_to_json(report.negative);
  j["ns_exponent_positive"] = number(report.ns_exponent_positive);
  j["ns_exponent_negative"] = number(report.ns_exponent_negative);
  j["certificates"] = json::array();
  for (const forms::CongruenceCertificate& cert : report.certificates) {
    json c;
    c["kind"] =
        cert.kind == forms::CongruenceCertificate::Kind::Direct ? "direct" : "excision-pair";
    c["residual"] = cert.residual;
    json checks;
    for (const auto& [name, value] : cert.checks) checks[name] = value;
    c["checks"] = checks;
    j["certificates"].push_back(c);
  }
  return j;
}

json suite_to_json(const props::SuiteReport& report) {
  json j;
  j["suite"] = report.suite;
  j["passed"] = report.passed();
  j["failed"] = report.failed();
  json results = json::array();
  for (const props::PropertyResult& r : report.results) {
    json rj;
    rj["name"] = r.name;
    rj["pass"] = r.pass;
    rj["metric"] = number(r.metric);
    rj["instances"] = r.instances;
    if (!r.detail.empty()) rj["detail"] = r.detail;
    results.push_back(rj);
  }
  j["results"] = results;
  return j;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Err::ValidationError, "cannot write " + path.string());
  out << text;
}

void write_density_csv(const std::filesystem::path& path, const torsion::DensityCurve& curve) {
  std::ostringstream os;
  os << "lambda,F\n";
  for (std::size_t i = 0; i < curve.lambda.size(); ++i)
    os << format_double(curve.lambda[i]) << ',' << format_double(curve.value[i]) << '\n';
  write_text(path, os.str());
}

}  // namespace tforms::io
