#ifndef SOS_DATASET_HPP
#define SOS_DATASET_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sos/checker.hpp"
#include "sos/polynomial.hpp"

namespace sos {

enum class SpecialFamily { kQuadratic, kQuartic2Var, kQuarticHomog3Var, kUnivariateEven, kQuadQuartic };
enum class GramStructure { kDense, kSparse, kLowRank, kIllConditioned };

std::string to_string(SpecialFamily family);
std::string to_string(GramStructure structure);
SpecialFamily special_family_from_string(const std::string& s);
GramStructure gram_structure_from_string(const std::string& s);

// Recipe for one test set. `count` records are produced, of which `long_count` are
// drawn above the length cap and the rest at or below it.
struct GenSpec {
  std::string test_set_id;
  std::string description;
  std::string difficulty;  // easy | medium | hard
  // odd_degree | square_expanded | square_form | special_case | gram
  std::string generator;
  bool negative = false;
  std::vector<SpecialFamily> families;  // special_case: rotated by record index
  GramStructure structure = GramStructure::kDense;
  int count = 0;
  int long_count = 0;
  int n_vars_min = 2;
  int n_vars_max = 10;
  int degree_min = 2;
  int degree_max = 10;
  double coef_max = 5.0;
  double sparsity = 0.1;           // fraction of nonzero off-diagonal Gram entries
  int rank = 3;
  double eigenvalue_spread = 1e12;  // lambda_max / lambda_min
  std::size_t length_cap = 4000;
  std::uint64_t rng_seed = 42;
  int max_attempts = 100;

  // Throws std::invalid_argument when fields are out of range.
  void validate() const;
};

nlohmann::ordered_json to_json(const GenSpec& spec);
GenSpec gen_spec_from_json(const nlohmann::json& j);

struct DatasetRecord {
  std::string id;
  std::string test_set;
  std::string polynomial;
  std::size_t n_vars = 1;
  int degree = 0;
  std::string label;  // sos | not_sos
  std::string difficulty;
  std::size_t length_chars = 0;
  std::string justification;
  nlohmann::ordered_json provenance;
};

nlohmann::ordered_json to_json(const DatasetRecord& record);
DatasetRecord dataset_record_from_json(const nlohmann::json& j);

struct GenerationFailure {
  std::string test_set;
  int index = 0;
  std::string message;
};

struct GenerationResult {
  std::vector<DatasetRecord> records;
  std::vector<GenerationFailure> failures;
};

struct GenerationOptions {
  unsigned threads = 0;  // 0: hardware concurrency
  CheckerConfig checker;
};

// Single-set generators. Records are independent: record i is a function of
// (spec.rng_seed, spec.test_set_id, i) only.
GenerationResult gen_odd_degree(const GenSpec& spec, const GenerationOptions& options = {});
GenerationResult gen_square_form(const GenSpec& spec, bool expanded, bool negative_shift,
                                 const GenerationOptions& options = {});
GenerationResult gen_special_case(const GenSpec& spec, const GenerationOptions& options = {});
GenerationResult gen_from_gram(const GenSpec& spec, GramStructure structure, bool indefinite,
                               const GenerationOptions& options = {});

// The 19 standard test sets with their record counts and difficulty tags.
std::vector<GenSpec> table3_manifest(std::uint64_t seed = 42);

nlohmann::ordered_json manifest_to_json(const std::vector<GenSpec>& manifest);
std::vector<GenSpec> manifest_from_json(const nlohmann::json& j);

// Generates every set (records from all sets share one worker pool) and returns
// the records in manifest order.
GenerationResult generate_suite(const std::vector<GenSpec>& manifest, const GenerationOptions& options = {});

void write_jsonl(std::ostream& out, const std::vector<DatasetRecord>& records);
void write_jsonl(const std::filesystem::path& path, const std::vector<DatasetRecord>& records);
std::vector<DatasetRecord> read_jsonl(std::istream& in);
std::vector<DatasetRecord> read_jsonl(const std::filesystem::path& path);

// Markdown table: per-set counts, label balance and length distribution.
std::string summary_markdown(const std::vector<GenSpec>& manifest, const GenerationResult& result);

}  // namespace sos

#endif  // SOS_DATASET_HPP
