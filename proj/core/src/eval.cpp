#include "sos/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

namespace sos {

nlohmann::ordered_json to_json(const EvalRecord& r) {
  nlohmann::ordered_json j;
  j["record_id"] = r.record_id;
  j["raw_response"] = r.raw_response;
  j["extracted"] = to_string(r.extracted);
  j["latency"] = r.latency;
  j["error"] = r.error ? nlohmann::ordered_json(*r.error) : nlohmann::ordered_json(nullptr);
  return j;
}

EvalRecord eval_record_from_json(const nlohmann::json& j) {
  EvalRecord r;
  r.record_id = j.at("record_id").get<std::string>();
  r.raw_response = j.value("raw_response", "");
  r.extracted = extracted_from_string(j.at("extracted").get<std::string>());
  r.latency = j.value("latency", 0.0);
  if (j.contains("error") && !j.at("error").is_null()) r.error = j.at("error").get<std::string>();
  // An errored sample is invalid whatever the stored label says.
  if (r.error) r.extracted = Extracted::kInvalid;
  return r;
}

void append_prediction(std::ostream& out, const EvalRecord& record) { out << to_json(record).dump() << '\n'; }

std::vector<EvalRecord> read_predictions(std::istream& in) {
  std::vector<EvalRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(eval_record_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error("predictions line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<EvalRecord> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_predictions(in);
}

std::optional<double> AccuracyCounts::valid_accuracy() const {
  if (n_valid == 0) return std::nullopt;
  return static_cast<double>(n_correct) / static_cast<double>(n_valid);
}

double AccuracyCounts::total_accuracy() const {
  return n_total == 0 ? 0.0 : static_cast<double>(n_correct) / static_cast<double>(n_total);
}

double AccuracyCounts::mean_latency() const {
  return n_total == 0 ? 0.0 : latency_sum / static_cast<double>(n_total);
}

AccuracyReport score(const std::vector<EvalRecord>& predictions, const std::vector<DatasetRecord>& dataset) {
  std::unordered_map<std::string, const DatasetRecord*> by_id;
  std::vector<std::string> set_order;
  std::unordered_map<std::string, std::size_t> set_index;
  for (const auto& r : dataset) {
    if (!by_id.emplace(r.id, &r).second) throw std::invalid_argument("duplicate dataset id '" + r.id + "'");
    if (set_index.emplace(r.test_set, set_order.size()).second) set_order.push_back(r.test_set);
  }

  AccuracyReport report;
  for (const auto& s : set_order) report.per_set.emplace_back(s, AccuracyCounts{});
  std::set<std::string> seen;
  for (const auto& p : predictions) {
    const auto it = by_id.find(p.record_id);
    if (it == by_id.end()) throw std::invalid_argument("prediction for unknown record id '" + p.record_id + "'");
    if (!seen.insert(p.record_id).second) throw std::invalid_argument("duplicate prediction for '" + p.record_id + "'");
    const DatasetRecord& truth = *it->second;
    const bool valid = !p.error && p.extracted != Extracted::kInvalid;
    const bool correct = valid && (p.extracted == Extracted::kSos) == (truth.label == "sos");
    for (AccuracyCounts* c : {&report.overall, &report.per_set[set_index.at(truth.test_set)].second}) {
      ++c->n_total;
      c->n_valid += valid;
      c->n_correct += correct;
      c->latency_sum += p.latency;
    }
  }
  report.n_unanswered = dataset.size() - seen.size();
  return report;
}

namespace {

nlohmann::ordered_json counts_json(const AccuracyCounts& c) {
  nlohmann::ordered_json j;
  j["n_total"] = c.n_total;
  j["n_valid"] = c.n_valid;
  j["n_correct"] = c.n_correct;
  const auto va = c.valid_accuracy();
  j["valid_accuracy"] = va ? nlohmann::ordered_json(*va) : nlohmann::ordered_json(nullptr);
  j["total_accuracy"] = c.total_accuracy();
  j["mean_latency"] = c.mean_latency();
  return j;
}

std::string percent(std::optional<double> v) {
  if (!v) return "n/a";
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(1);
  os << 100.0 * *v << "%";
  return os.str();
}

}  // namespace

nlohmann::ordered_json to_json(const AccuracyReport& report) {
  nlohmann::ordered_json j = counts_json(report.overall);
  j["n_unanswered"] = report.n_unanswered;
  nlohmann::ordered_json sets = nlohmann::ordered_json::object();
  for (const auto& [name, c] : report.per_set) sets[name] = counts_json(c);
  j["per_set"] = std::move(sets);
  return j;
}

std::string report_markdown(const AccuracyReport& report) {
  std::ostringstream os;
  os << "| Test set | Total | Valid | Correct | Valid accuracy | Total accuracy | Mean latency (s) |\n";
  os << "|---|---:|---:|---:|---:|---:|---:|\n";
  auto row = [&os](const std::string& name, const AccuracyCounts& c) {
    std::ostringstream lat;
    lat.setf(std::ios::fixed);
    lat.precision(2);
    lat << c.mean_latency();
    os << "| " << name << " | " << c.n_total << " | " << c.n_valid << " | " << c.n_correct << " | "
       << percent(c.valid_accuracy()) << " | " << percent(c.total_accuracy()) << " | " << lat.str() << " |\n";
  };
  for (const auto& [name, c] : report.per_set) {
    if (c.n_total > 0) row(name, c);
  }
  row("**All**", report.overall);
  if (report.n_unanswered > 0) os << "\n" << report.n_unanswered << " dataset records have no prediction.\n";
  return os.str();
}

namespace {

// Ids already answered in an existing prediction file. Cuts a torn final line.
std::set<std::string> completed_ids(const std::filesystem::path& path) {
  std::set<std::string> ids;
  if (!std::filesystem::exists(path)) return ids;
  std::string content;
  {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    content = ss.str();
  }
  if (!content.empty() && content.back() != '\n') {
    const auto cut = content.rfind('\n');
    content.resize(cut == std::string::npos ? 0 : cut + 1);
    std::filesystem::resize_file(path, content.size());
  }
  std::istringstream in(content);
  for (const auto& r : read_predictions(in)) ids.insert(r.record_id);
  return ids;
}

}  // namespace

EvalRunSummary run_eval(const std::vector<DatasetRecord>& dataset, const Responder& responder,
                        const std::filesystem::path& out_path, const EvalRunOptions& options) {
  EvalRunSummary summary;
  const auto done = completed_ids(out_path);
  std::vector<const DatasetRecord*> todo;
  for (const auto& r : dataset) {
    if (done.count(r.id)) {
      ++summary.skipped;
    } else {
      todo.push_back(&r);
    }
  }

  std::ofstream out(out_path, std::ios::binary | std::ios::app);
  if (!out) throw std::runtime_error("cannot open " + out_path.string() + " for appending");

  std::mutex write_mutex;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr fatal;

  auto worker = [&] {
    for (std::size_t i = next++; i < todo.size() && !stop; i = next++) {
      const DatasetRecord& rec = *todo[i];
      const std::string prompt = render_prompt(rec, options.prompt);
      const auto t0 = std::chrono::steady_clock::now();
      Reply reply;
      try {
        reply = responder(rec, prompt);
      } catch (const EndpointError&) {
        std::lock_guard lock(write_mutex);
        if (!fatal) fatal = std::current_exception();
        stop = true;
        return;
      } catch (const std::exception& e) {
        reply.error = std::string("transport: ") + e.what();
      }
      EvalRecord er;
      er.record_id = rec.id;
      er.raw_response = std::move(reply.text);
      er.error = std::move(reply.error);
      er.extracted = er.error ? Extracted::kInvalid : extract_verdict(er.raw_response);
      er.latency = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

      std::lock_guard lock(write_mutex);
      append_prediction(out, er);
      out.flush();
      ++summary.queried;
      summary.invalid += er.extracted == Extracted::kInvalid;
    }
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(options.concurrency, static_cast<unsigned>(todo.size())));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (fatal) std::rethrow_exception(fatal);
  if (!out) throw std::runtime_error("failed writing " + out_path.string());
  return summary;
}

Responder local_checker_responder(const CheckerConfig& config) {
  return [config](const DatasetRecord& record, const std::string&) {
    Reply reply;
    const Verdict v = classify_text(record.polynomial, config);
    std::ostringstream os;
    os << "Checker label " << to_string(v.label) << " (step " << v.deciding_step << ").\n";
    if (v.label == Label::kSos) {
      os << "ANSWER: SOS";
    } else if (is_not_sos(v.label)) {
      os << "ANSWER: NOT SOS";
    } else {
      os << "ANSWER: UNKNOWN";  // extracts as invalid
    }
    reply.text = os.str();
    return reply;
  };
}

EvalRunSummary run_remote_eval(const std::vector<DatasetRecord>& dataset, const EndpointConfig& endpoint,
                               const std::filesystem::path& out_path, const EvalRunOptions& options) {
  return run_eval(dataset, remote_responder(endpoint), out_path, options);
}

}  // namespace sos
