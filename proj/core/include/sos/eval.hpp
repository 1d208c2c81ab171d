#ifndef SOS_EVAL_HPP
#define SOS_EVAL_HPP

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sos/checker.hpp"
#include "sos/dataset.hpp"
#include "sos/prompts.hpp"

namespace sos {

// One prediction line.
struct EvalRecord {
  std::string record_id;
  std::string raw_response;
  Extracted extracted = Extracted::kInvalid;
  double latency = 0.0;              // seconds
  std::optional<std::string> error;  // "timeout", "transport: ...", "http 4xx", ...
};

nlohmann::ordered_json to_json(const EvalRecord& record);
EvalRecord eval_record_from_json(const nlohmann::json& j);

void append_prediction(std::ostream& out, const EvalRecord& record);
std::vector<EvalRecord> read_predictions(std::istream& in);
std::vector<EvalRecord> read_predictions(const std::filesystem::path& path);

struct AccuracyCounts {
  std::size_t n_total = 0;
  std::size_t n_valid = 0;
  std::size_t n_correct = 0;
  double latency_sum = 0.0;

  // nullopt when nothing was valid.
  std::optional<double> valid_accuracy() const;
  double total_accuracy() const;
  double mean_latency() const;
};

struct AccuracyReport {
  AccuracyCounts overall;
  // Per test set, in order of first appearance in the dataset.
  std::vector<std::pair<std::string, AccuracyCounts>> per_set;
  // Dataset records that have no prediction. They do not enter the counts.
  std::size_t n_unanswered = 0;
};

// Throws std::invalid_argument for a prediction id that is not in the dataset or
// that occurs twice.
AccuracyReport score(const std::vector<EvalRecord>& predictions, const std::vector<DatasetRecord>& dataset);

nlohmann::ordered_json to_json(const AccuracyReport& report);
std::string report_markdown(const AccuracyReport& report);

// Outcome of one query: the response text, or an error that makes the sample
// invalid.
struct Reply {
  std::string text;
  std::optional<std::string> error;
  double latency = 0.0;
};

using Responder = std::function<Reply(const DatasetRecord& record, const std::string& prompt)>;

struct EvalRunOptions {
  PromptKind prompt = PromptKind::kReasoning;
  unsigned concurrency = 4;
};

struct EvalRunSummary {
  std::size_t skipped = 0;  // already present in the output file
  std::size_t queried = 0;
  std::size_t invalid = 0;
};

// Queries every record whose id is not yet in `out_path` and appends one line per
// answer. A torn last line left by an interrupted run is dropped first.
EvalRunSummary run_eval(const std::vector<DatasetRecord>& dataset, const Responder& responder,
                        const std::filesystem::path& out_path, const EvalRunOptions& options = {});

// Answers with the local checker; never times out.
Responder local_checker_responder(const CheckerConfig& config = {});

// Raised when the endpoint is misconfigured or rejects the credential; these stop
// a run instead of producing invalid samples.
class EndpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Generic chat-completion endpoint. The bearer token is read from the environment
// variable named by `api_key_env`; it is never taken from a file.
struct EndpointConfig {
  std::string url;  // e.g. http://host:8000/v1/chat/completions
  std::string model;
  double timeout_seconds = 600.0;
  int max_retries = 3;                // transport errors only; timeouts are final
  double retry_backoff_seconds = 1.0;
  std::string api_key_env = "SOS_API_KEY";
  bool require_api_key = true;
};

// Throws EndpointError when the URL is malformed or the key variable is unset.
Responder remote_responder(const EndpointConfig& config);

EvalRunSummary run_remote_eval(const std::vector<DatasetRecord>& dataset, const EndpointConfig& endpoint,
                               const std::filesystem::path& out_path, const EvalRunOptions& options = {});

}  // namespace sos

#endif  // SOS_EVAL_HPP
