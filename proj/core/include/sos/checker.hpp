#ifndef SOS_CHECKER_HPP
#define SOS_CHECKER_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sos/gram.hpp"
#include "sos/parser.hpp"
#include "sos/polynomial.hpp"
#include "sos/search.hpp"

namespace sos {

struct CheckerConfig {
  double grid_radius = 2.0;
  int grid_values_per_axis = 7;
  int random_samples = 2000;
  int descent_starts = 20;
  int descent_steps = 200;
  // Witness threshold, applied relative to max(1, max |coefficient|).
  double negativity_tol = 1e-7;
  GramConfig gram;
  // Accepted reconstruction residual, relative to max(1, max |coefficient|).
  double certificate_tol = 1e-6;
  // Step 5 is skipped (UNKNOWN) above this basis size.
  std::size_t max_basis_size = 300;
  // Multiplier on samples and starts for the extra search run when step 3 flagged
  // that nonnegativity and SoS coincide but the Gram search failed.
  int intensified_factor = 10;
  std::uint64_t rng_seed = 42;

  // Throws std::invalid_argument on non-positive counts or tolerances.
  void validate() const;
  SearchConfig search() const;
};

enum class Decision { kProvesNotSos, kProvesSos, kInconclusive };
enum class Label { kSos, kNotSos, kLikelyNotSos, kUnknown };

// Classes for which nonnegativity and SoS coincide, plus the quadratic case which
// step 3 decides outright.
enum class SpecialClass { kNone, kQuadratic, kQuartic2Var, kHomogeneousQuartic3Var, kUnivariateEven };

std::string to_string(Decision decision);
std::string to_string(Label label);
std::string to_string(SpecialClass special);
// NOT_SOS and LIKELY_NOT_SOS both score as "not SoS".
inline bool is_not_sos(Label label) { return label == Label::kNotSos || label == Label::kLikelyNotSos; }

struct Witness {
  std::vector<double> point;
  double value = 0.0;
};

struct StepOutcome {
  int step_id = 0;
  Decision decision = Decision::kInconclusive;
  std::optional<Witness> witness;
  std::optional<SosCertificate> certificate;
  std::string note;
  // Step 3 only.
  SpecialClass special_class = SpecialClass::kNone;
  bool equivalence = false;
  // Step 5 only.
  std::optional<GramStatus> gram_status;
};

struct Verdict {
  Label label = Label::kUnknown;
  int deciding_step = 0;
  std::vector<StepOutcome> trace;
  std::optional<SosCertificate> certificate;
  std::optional<Witness> witness;
};

// Threshold a witness value must fall below: negativity_tol scaled by the
// coefficient size, or the rounding-error bound at x if that is larger.
double witness_threshold(const Polynomial& p, std::span<const double> x, double negativity_tol);

StepOutcome step1_degree(const Polynomial& p, const CheckerConfig& config = {});
StepOutcome step2_negativity_search(const Polynomial& p, const CheckerConfig& config = {});
StepOutcome step3_special_case(const Polynomial& p, const CheckerConfig& config = {});
StepOutcome step4_square_form(const Expr& source, std::size_t n_vars, const CheckerConfig& config = {});
StepOutcome step5_gram(const Polynomial& p, const CheckerConfig& config = {});

// Runs steps 1-5 and stops at the first PROVES_* outcome. `source` is the parse tree
// of p, if available, for step 4; without it step 4 is recorded as inconclusive.
Verdict classify(const Polynomial& p, const CheckerConfig& config = {}, const Expr* source = nullptr);
Verdict classify_text(std::string_view text, const CheckerConfig& config = {});

nlohmann::json to_json(const StepOutcome& outcome);
nlohmann::json to_json(const Verdict& verdict);

}  // namespace sos

#endif  // SOS_CHECKER_HPP
