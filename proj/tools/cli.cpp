#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sos/checker.hpp"
#include "sos/dataset.hpp"
#include "sos/eval.hpp"
#include "sos/gram.hpp"
#include "sos/parser.hpp"
#include "sos/prompts.hpp"

namespace sos::cli {

namespace {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<DatasetRecord> load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  try {
    return read_jsonl(in);
  } catch (const std::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

int exit_code(Label label) {
  switch (label) {
    case Label::kSos: return kExitSos;
    case Label::kNotSos:
    case Label::kLikelyNotSos: return kExitNotSos;
    case Label::kUnknown: return kExitUnknown;
  }
  return kExitUnknown;
}

std::string point_text(const std::vector<double>& x) {
  std::ostringstream os;
  os.precision(6);
  os << "(";
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

void print_trace(std::ostream& out, const Verdict& v) {
  for (const auto& o : v.trace) {
    out << "  step " << o.step_id << ": " << to_string(o.decision);
    if (o.step_id == 3 && o.special_class != SpecialClass::kNone) {
      out << " [" << to_string(o.special_class) << (o.equivalence ? ", nonneg == SoS" : "") << "]";
    }
    if (o.gram_status) out << " [gram " << to_string(*o.gram_status) << "]";
    if (!o.note.empty()) out << " - " << o.note;
    out << "\n";
    if (o.witness) out << "    witness " << point_text(o.witness->point) << " value " << o.witness->value << "\n";
    if (o.certificate) {
      out << "    " << o.certificate->squares.squares.size() << " squares, residual "
          << o.certificate->reconstruction_residual << "\n";
    }
  }
}

struct CheckOptions {
  std::string polynomial;
  std::string file;
  bool trace = false;
  bool json = false;
  std::uint64_t seed = 42;
  double tol = CheckerConfig{}.negativity_tol;
  double eig_tol = GramConfig{}.eig_tol;
  double res_tol = GramConfig{}.res_tol;
};

void add_check_options(CLI::App* cmd, CheckOptions& o) {
  cmd->add_option("polynomial", o.polynomial, "Polynomial text, e.g. \"x1^2 + x2^2 - 2*x1*x2\"");
  cmd->add_option("--file", o.file, "Read the polynomial from a file");
  cmd->add_flag("--trace", o.trace, "Print the full step trace");
  cmd->add_flag("--json", o.json, "Print the verdict as JSON");
  cmd->add_option("--seed", o.seed, "Seed for the negativity search")->capture_default_str();
  cmd->add_option("--tol", o.tol, "Witness tolerance (relative to the largest coefficient)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--eig-tol", o.eig_tol, "Gram eigenvalue tolerance")->check(CLI::PositiveNumber);
  cmd->add_option("--res-tol", o.res_tol, "Gram residual tolerance")->check(CLI::PositiveNumber);
}

CheckerConfig checker_config(const CheckOptions& o) {
  CheckerConfig c;
  c.rng_seed = o.seed;
  c.negativity_tol = o.tol;
  c.gram.eig_tol = o.eig_tol;
  c.gram.res_tol = o.res_tol;
  c.validate();
  return c;
}

std::string polynomial_text(const CheckOptions& o) {
  if (!o.file.empty()) return read_file(o.file);
  if (o.polynomial.empty()) throw CLI::ValidationError("polynomial", "give a polynomial or --file");
  return o.polynomial;
}

int run_check(const CheckOptions& o, std::ostream& out) {
  const Verdict v = classify_text(polynomial_text(o), checker_config(o));
  if (o.json) {
    nlohmann::json j = to_json(v);
    if (!o.trace) j.erase("trace");
    out << j.dump(2) << "\n";
  } else {
    out << to_string(v.label) << " (step " << v.deciding_step << ")\n";
    if (o.trace) print_trace(out, v);
  }
  return exit_code(v.label);
}

int run_certify(const CheckOptions& o, const std::string& out_path, std::ostream& out, std::ostream& err) {
  const std::string text = polynomial_text(o);
  const CheckerConfig config = checker_config(o);
  const ParsedExpression parsed = parse_expression(text);
  const Polynomial p = to_polynomial(parsed.root, parsed.n_vars);
  const Verdict v = classify(p, config, &parsed.root);

  nlohmann::ordered_json j;
  j["polynomial"] = canonical_text(p);
  j["label"] = to_string(v.label);
  j["deciding_step"] = v.deciding_step;
  if (v.label != Label::kSos) {
    if (v.witness) j["witness"] = {{"point", v.witness->point}, {"value", v.witness->value}};
    err << "no certificate: " << to_string(v.label) << " (step " << v.deciding_step << ")\n";
  } else {
    auto squares = nlohmann::ordered_json::array();
    for (const auto& q : v.certificate->squares.squares) squares.push_back(canonical_text(q));
    j["squares"] = std::move(squares);
    j["reconstruction_residual"] = v.certificate->reconstruction_residual;
    // A Gram matrix is attached whenever the PSD search succeeds, even when an
    // earlier step already decided.
    try {
      const MonomialBasis basis = monomial_basis(p);
      const GramSystem system = build_gram_system(p, basis);
      const GramResult g = solve_psd_feasibility(system, config.gram);
      if (g.status == GramStatus::kFeasible) {
        j["gram"] = certificate_to_json(basis, g, extract_decomposition(g, system, config.gram.eig_tol));
      }
    } catch (const std::exception&) {
      // No Gram form for this certificate; the squares stand on their own.
    }
  }
  if (out_path.empty() || out_path == "-") {
    out << j.dump(2) << "\n";
  } else {
    open_out(out_path) << j.dump(2) << "\n";
    out << to_string(v.label) << " (step " << v.deciding_step << ") -> " << out_path << "\n";
  }
  return exit_code(v.label);
}

struct GenOptions {
  std::string suite = "table3";
  std::string manifest;
  std::string manifest_out;
  std::uint64_t seed = 42;
  std::string out;
  std::string summary;
  std::vector<std::string> only;
  unsigned threads = 0;
};

int run_gen(const GenOptions& o, std::ostream& out, std::ostream& err) {
  std::vector<GenSpec> manifest;
  if (!o.manifest.empty()) {
    try {
      manifest = manifest_from_json(nlohmann::json::parse(read_file(o.manifest)));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(o.manifest + ": " + e.what());
    }
  } else if (o.suite == "table3") {
    manifest = table3_manifest(o.seed);
  } else {
    throw CLI::ValidationError("--suite", "unknown suite '" + o.suite + "' (expected table3)");
  }
  if (!o.only.empty()) {
    std::erase_if(manifest, [&](const GenSpec& s) {
      return std::find(o.only.begin(), o.only.end(), s.test_set_id) == o.only.end();
    });
    if (manifest.empty()) throw CLI::ValidationError("--only", "no test set matches");
  }
  if (!o.manifest_out.empty()) open_out(o.manifest_out) << manifest_to_json(manifest).dump(2) << "\n";

  GenerationOptions options;
  options.threads = o.threads;
  const GenerationResult result = generate_suite(manifest, options);
  {
    auto file = open_out(o.out);
    write_jsonl(file, result.records);
    if (!file) throw IoError("failed writing " + o.out);
  }
  const std::string summary = summary_markdown(manifest, result);
  if (!o.summary.empty()) open_out(o.summary) << summary;
  out << summary;
  out << "\nwrote " << result.records.size() << " records to " << o.out << "\n";
  for (const auto& f : result.failures) err << "failed: " << f.test_set << " #" << f.index << ": " << f.message << "\n";
  return 0;
}

struct EvalOptions {
  std::string data;
  std::string prompt = "reasoning";
  std::string endpoint;
  std::string model;
  double timeout = 600.0;
  unsigned concurrency = 4;
  int retries = 3;
  std::string out;
  bool local = false;
  std::uint64_t seed = 42;
};

int run_eval_cmd(const EvalOptions& o, std::ostream& out) {
  const auto dataset = load_dataset(o.data);
  EvalRunOptions run;
  run.prompt = prompt_kind_from_string(o.prompt);
  run.concurrency = o.concurrency;
  Responder responder;
  if (o.local) {
    CheckerConfig c;
    c.rng_seed = o.seed;
    responder = local_checker_responder(c);
  } else {
    if (o.endpoint.empty()) throw CLI::ValidationError("--endpoint", "required unless --local is given");
    EndpointConfig e;
    e.url = o.endpoint;
    e.model = o.model;
    e.timeout_seconds = o.timeout;
    e.max_retries = o.retries;
    responder = remote_responder(e);
  }
  const EvalRunSummary s = run_eval(dataset, responder, o.out, run);
  out << "queried " << s.queried << ", skipped " << s.skipped << " already answered, " << s.invalid
      << " invalid -> " << o.out << "\n";
  return 0;
}

int run_score(const std::string& data, const std::string& predictions, std::ostream& out) {
  const auto dataset = load_dataset(data);
  std::vector<EvalRecord> preds;
  {
    std::ifstream in(predictions, std::ios::binary);
    if (!in) throw IoError("cannot open " + predictions);
    try {
      preds = read_predictions(in);
    } catch (const std::exception& e) {
      throw DataError(predictions + ": " + e.what());
    }
  }
  AccuracyReport report;
  try {
    report = score(preds, dataset);
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  out << to_json(report).dump(2) << "\n\n" << report_markdown(report);
  return 0;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sum-of-squares checker, dataset generator and evaluation harness", "sos"};
  app.require_subcommand(1, 1);

  CheckOptions check;
  auto* check_cmd = app.add_subcommand("check", "Classify a polynomial (exit 0 SOS, 1 not SOS, 2 unknown)");
  add_check_options(check_cmd, check);

  CheckOptions certify;
  std::string certify_out;
  auto* certify_cmd = app.add_subcommand("certify", "Write an SoS certificate as JSON");
  add_check_options(certify_cmd, certify);
  certify_cmd->add_option("--out", certify_out, "Certificate file (default: stdout)");

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a labeled dataset (JSONL) and a summary table");
  gen_cmd->add_option("--suite", gen.suite, "Built-in manifest")->capture_default_str();
  gen_cmd->add_option("--manifest", gen.manifest, "Manifest JSON file (overrides --suite)");
  gen_cmd->add_option("--manifest-out", gen.manifest_out, "Also write the manifest used");
  gen_cmd->add_option("--seed", gen.seed, "Suite seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output JSONL")->required();
  gen_cmd->add_option("--summary", gen.summary, "Also write the markdown summary here");
  gen_cmd->add_option("--only", gen.only, "Restrict to these test set ids")->delimiter(',');
  gen_cmd->add_option("--threads", gen.threads, "Worker threads (0: all cores)");

  EvalOptions ev;
  auto* eval_cmd = app.add_subcommand("eval", "Query a model endpoint (or the local checker) for every record");
  eval_cmd->add_option("--data", ev.data, "Dataset JSONL")->required();
  eval_cmd->add_option("--prompt", ev.prompt, "Instruction tier")
      ->check(CLI::IsMember({"plain", "simple", "reasoning"}))
      ->capture_default_str();
  eval_cmd->add_option("--endpoint", ev.endpoint, "Chat-completion URL; bearer token from SOS_API_KEY");
  eval_cmd->add_option("--model", ev.model, "Model name sent with each request");
  eval_cmd->add_option("--timeout", ev.timeout, "Per-request timeout in seconds")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  eval_cmd->add_option("--concurrency", ev.concurrency, "Parallel requests")
      ->check(CLI::Range(1u, 256u))
      ->capture_default_str();
  eval_cmd->add_option("--retries", ev.retries, "Retries on transport errors")->check(CLI::NonNegativeNumber);
  eval_cmd->add_option("--out", ev.out, "Predictions JSONL (appended; completed ids are skipped)")->required();
  eval_cmd->add_flag("--local", ev.local, "Answer with the built-in checker instead of an endpoint");
  eval_cmd->add_option("--seed", ev.seed, "Checker seed for --local");

  std::string score_data, score_predictions;
  auto* score_cmd = app.add_subcommand("score", "Valid/total accuracy of a predictions file");
  score_cmd->add_option("--data", score_data, "Dataset JSONL")->required();
  score_cmd->add_option("--predictions", score_predictions, "Predictions JSONL")->required();

  std::string prompt_poly, prompt_kind = "reasoning";
  auto* prompt_cmd = app.add_subcommand("prompt", "Print the rendered prompt for a polynomial");
  prompt_cmd->add_option("polynomial", prompt_poly, "Polynomial text")->required();
  prompt_cmd->add_option("--prompt", prompt_kind, "Instruction tier")
      ->check(CLI::IsMember({"plain", "simple", "reasoning"}))
      ->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "sos: " << e.what() << "\n" << "run 'sos --help' for usage\n";
    return kExitUsage;
  }

  try {
    if (*check_cmd) return run_check(check, out);
    if (*certify_cmd) return run_certify(certify, certify_out, out, err);
    if (*gen_cmd) return run_gen(gen, out, err);
    if (*eval_cmd) return run_eval_cmd(ev, out);
    if (*score_cmd) return run_score(score_data, score_predictions, out);
    if (*prompt_cmd) {
      out << render_prompt(prompt_poly, prompt_kind_from_string(prompt_kind)) << "\n";
      return 0;
    }
  } catch (const CLI::Error& e) {
    err << "sos: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "sos: parse error: " << e.what() << "\n";
    return kExitDataError;
  } catch (const DataError& e) {
    err << "sos: " << e.what() << "\n";
    return kExitDataError;
  } catch (const IoError& e) {
    err << "sos: " << e.what() << "\n";
    return kExitIoError;
  } catch (const EndpointError& e) {
    err << "sos: " << e.what() << "\n";
    return kExitNoPermission;
  } catch (const std::invalid_argument& e) {
    err << "sos: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "sos: " << e.what() << "\n";
    return kExitSoftware;
  }
  return kExitUsage;
}

int dispatch(int argc, char** argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return dispatch(args, out, err);
}

}  // namespace sos::cli
