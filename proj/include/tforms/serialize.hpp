#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "tforms/classify.hpp"
#include "tforms/props.hpp"

// Problem-file ingestion and machine-readable reports. JSON objects use
// sorted keys and %.17g doubles, so identical inputs give identical bytes.
namespace tforms::io {

using nlohmann::json;

struct Problem {
  fields::BaseSpace space;
  std::map<std::string, fields::OperatorField> named_fields;
  std::string task;
  json params;
};

// field sub-format:
//   {"kind":"scalar_symbolic","expr":"(z-0.5)^2","zeros":[...]}
//   {"kind":"sampled","dim":2,"grid":4096,"data":"fibers.bin"}
// sampled data is little-endian f64, interleaved re/im, fiber-major with
// row-major entries inside each fiber
fields::OperatorField field_from_json(const json& spec, const std::filesystem::path& base_dir,
                                      std::optional<int> grid_override);
json field_to_json(const fields::OperatorField& field, const std::filesystem::path& out_dir,
                   const std::string& data_stem);

Problem load_problem(const std::filesystem::path& path, std::optional<int> grid_override);

json signature_to_json(const torsion::GermSignature& sig);
json certificate_to_json(const forms::CongruenceCertificate& cert,
                         const std::filesystem::path& out_dir, const std::string& data_stem);
json classification_to_json(const classify::ClassificationReport& report);
json suite_to_json(const props::SuiteReport& report);

std::string dump(const json& j);
void write_text(const std::filesystem::path& path, const std::string& text);
void write_density_csv(const std::filesystem::path& path, const torsion::DensityCurve& curve);

}  // namespace tforms::io
