#include "slotcast/cli.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11/CLI11.hpp>

#include "slotcast/config.hpp"
#include "slotcast/error.hpp"
#include "slotcast/evaluator.hpp"
#include "slotcast/ingest.hpp"
#include "slotcast/predictor.hpp"
#include "slotcast/sql_analyzer.hpp"
#include "slotcast/synth.hpp"

namespace slotcast::cli {

namespace {

namespace fs = std::filesystem;

struct Options {
  std::string config_path;
  std::string query_file;
  std::string input;
  std::string output;
  std::string test_output;
  std::string bundle;
  std::string report_dir;
  std::string record_file;
  std::string baseline;
  double warn_threshold = 0.0;
};

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string read_text(const std::string& path) {
  std::ostringstream buf;
  if (path == "-") {
    buf << std::cin.rdbuf();
    return buf.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error(ErrorKind::IoError, "failed writing " + path.string());
}

config::KeyValues load_config(const Options& o) {
  if (o.config_path.empty()) return {};
  auto kv = config::KeyValues::load(o.config_path);
  config::check_known_keys(kv);
  return kv;
}

std::string format_stats(const ingest::IngestStats& s) {
  std::ostringstream out;
  out << "ingested " << s.read << " records: kept " << s.kept << ", dropped ddl " << s.dropped_ddl
      << ", timeout " << s.dropped_timeout << ", anomalous " << s.dropped_anomalous << ", empty "
      << s.dropped_empty << ", malformed " << s.malformed;
  if (!s.malformed_lines.empty()) {
    out << " (lines";
    for (std::size_t i = 0; i < s.malformed_lines.size() && i < 10; ++i) out << ' ' << s.malformed_lines[i];
    if (s.malformed_lines.size() > 10) out << " ...";
    out << ')';
  }
  return out.str();
}

int cmd_analyze(const Options& o, std::ostream& out) {
  predictor::TrainConfig cfg;
  config::apply(load_config(o), cfg);
  const auto report = sql::analyze(read_text(o.query_file), cfg.weights);
  out << sql::format_report(report);
  return kExitOk;
}

int cmd_synth(const Options& o, std::ostream& out) {
  config::SynthSettings s;
  config::apply(load_config(o), s);
  auto write_set = [&](const std::string& path, const synth::WorkloadConfig& w) {
    const auto records = synth::generate(w);
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw Error(ErrorKind::IoError, "cannot open " + path + " for writing");
    ingest::write_jsonl(f, records);
    if (!f) throw Error(ErrorKind::IoError, "failed writing " + path);
    out << "wrote " << records.size() << " records to " << path << '\n';
  };
  if (o.test_output.empty()) {
    write_set(o.output, s.workload);
    return kExitOk;
  }
  auto train = s.workload;
  train.environments = s.train_environments;
  auto test = s.workload;
  test.environments = s.test_environments;
  test.n_queries = s.test_queries > 0 ? s.test_queries : s.workload.n_queries;
  test.seed = s.workload.seed + 1;
  for (const auto& e : s.train_environments) {
    if (std::find(s.test_environments.begin(), s.test_environments.end(), e) != s.test_environments.end()) {
      throw Error(ErrorKind::OverlappingEnvironments, "environment " + e + " is in both lists");
    }
  }
  write_set(o.output, train);
  write_set(o.test_output, test);
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  predictor::TrainConfig cfg;
  config::apply(load_config(o), cfg);
  const auto data = ingest::ingest_file(o.input, ingest::Mode::Training);
  out << format_stats(data.stats) << '\n';
  const auto bundle = predictor::train(data.records, cfg, utc_now());
  predictor::save_bundle(bundle, o.bundle);
  const std::string summary = predictor::training_summary(bundle);
  write_text(o.bundle + ".summary.txt", format_stats(data.stats) + "\n" + summary);
  out << summary << "bundle written to " << o.bundle << '\n';
  return kExitOk;
}

int cmd_predict(const Options& o, std::ostream& out) {
  const auto bundle = predictor::load_bundle(o.bundle);
  const auto data = ingest::ingest_file(o.input, ingest::Mode::Inference);
  const auto results = predictor::predict_batch(bundle, data.records);
  std::ostringstream tsv;
  tsv << "id\tslot_min\troute\tscore\n";
  char line[128];
  for (std::size_t i = 0; i < results.size(); ++i) {
    std::snprintf(line, sizeof line, "%lld\t%.6f\t%s\t%lld\n", static_cast<long long>(data.records[i].line_number),
                  results[i].slot_min, std::string(predictor::to_string(results[i].route)).c_str(),
                  static_cast<long long>(results[i].complexity_score));
    tsv << line;
  }
  write_text(o.output, tsv.str());
  out << format_stats(data.stats) << '\n' << "wrote " << results.size() << " predictions to " << o.output << '\n';
  return kExitOk;
}

int cmd_advise(const Options& o, std::ostream& out) {
  const auto bundle = predictor::load_bundle(o.bundle);
  QueryRecord record;
  if (!o.record_file.empty()) record = ingest::parse_record(read_text(o.record_file));
  record.query_text = read_text(o.query_file);
  const auto p = predictor::predict(bundle, record);
  char line[256];
  std::snprintf(line, sizeof line, "predicted slot-minutes: %.6f (route %s, complexity score %lld)\n", p.slot_min,
                std::string(predictor::to_string(p.route)).c_str(), static_cast<long long>(p.complexity_score));
  out << line;
  if (p.slot_min >= o.warn_threshold) {
    std::snprintf(line, sizeof line, "WARNING: predicted slot-time %.6f slot-min is at or above the threshold %g\n",
                  p.slot_min, o.warn_threshold);
    out << line;
    return kExitAdvisory;
  }
  return kExitOk;
}

int cmd_evaluate(const Options& o, std::ostream& out) {
  config::EvalSettings settings;
  config::apply(load_config(o), settings);
  if (o.baseline == "train") settings.baseline = eval::BaselineSource::TrainDerived;
  if (o.baseline == "test") settings.baseline = eval::BaselineSource::TestDerived;

  const auto bundle = predictor::load_bundle(o.bundle);
  const auto data = ingest::ingest_file(o.input, ingest::Mode::Training);
  if (data.records.empty()) throw Error(ErrorKind::EmptyInput, "no evaluable records in " + o.input);
  const auto results = predictor::predict_batch(bundle, data.records);
  std::vector<double> actual, predicted;
  for (std::size_t i = 0; i < results.size(); ++i) {
    actual.push_back(*data.records[i].slot_min());
    predicted.push_back(results[i].slot_min);
  }
  eval::Baselines base;
  if (settings.baseline == eval::BaselineSource::TrainDerived) {
    base = {bundle.metadata.slot_min_mean, bundle.metadata.slot_min_median, eval::BaselineSource::TrainDerived};
  } else {
    base = eval::baselines({}, actual, eval::BaselineSource::TestDerived);
  }
  const auto tiers = eval::default_tiers(settings.cost_significant_min, settings.long_tail_min);
  const auto report = eval::tiered_eval(actual, predicted, tiers, base);

  const fs::path dir(o.report_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create " + dir.string() + ": " + ec.message());
  const std::string text = eval::emit_report(report, eval::ReportFormat::Text);
  write_text(dir / "report.txt", text);
  write_text(dir / "report.json", eval::emit_report(report, eval::ReportFormat::Structured));
  write_text(dir / "plotdata.csv", eval::emit_report(report, eval::ReportFormat::PlotData));
  out << format_stats(data.stats) << '\n' << text;
  return kExitOk;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::IoError: return kExitIo;
    default: return kExitData;
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"slotcast: pre-execution slot-time prediction for warehouse queries"};
  app.require_subcommand(1);
  Options o;

  auto* analyze = app.add_subcommand("analyze", "Print the operator complexity report of a query");
  analyze->add_option("--query-file", o.query_file, "SQL file ('-' for stdin)")->required();
  analyze->add_option("--config", o.config_path, "key=value config file");

  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic JSONL workload");
  synth_cmd->add_option("--config", o.config_path, "key=value config file")->required();
  synth_cmd->add_option("--output", o.output, "JSONL output (train environments with --test-output)")->required();
  synth_cmd->add_option("--test-output", o.test_output, "JSONL output for the held-out environments");

  auto* train = app.add_subcommand("train", "Train a model bundle");
  train->add_option("--input", o.input, "JSONL training records")->required();
  train->add_option("--output-bundle", o.bundle, "bundle path")->required();
  train->add_option("--config", o.config_path, "key=value config file");

  auto* predict = app.add_subcommand("predict", "Predict slot-minutes for JSONL records");
  predict->add_option("--bundle", o.bundle, "bundle path")->required();
  predict->add_option("--input", o.input, "JSONL records")->required();
  predict->add_option("--output", o.output, "TSV output: id, slot_min, route, score")->required();

  auto* advise = app.add_subcommand("advise", "Predict one query and warn above a threshold (exit 2)");
  advise->add_option("--bundle", o.bundle, "bundle path")->required();
  advise->add_option("--query-file", o.query_file, "SQL file ('-' for stdin)")->required();
  advise->add_option("--warn-threshold", o.warn_threshold, "slot-minutes")->required();
  advise->add_option("--record", o.record_file, "JSON object with the query's metadata fields");

  auto* evaluate = app.add_subcommand("evaluate", "Tiered evaluation against constant baselines");
  evaluate->add_option("--bundle", o.bundle, "bundle path")->required();
  evaluate->add_option("--input", o.input, "JSONL test records with total_slot_ms")->required();
  evaluate->add_option("--report-dir", o.report_dir, "directory for report.txt, report.json, plotdata.csv")
      ->required();
  evaluate->add_option("--config", o.config_path, "key=value config file");
  evaluate->add_option("--baseline", o.baseline, "baseline source")->check(CLI::IsMember({"train", "test"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*analyze) return cmd_analyze(o, out);
    if (*synth_cmd) return cmd_synth(o, out);
    if (*train) return cmd_train(o, out);
    if (*predict) return cmd_predict(o, out);
    if (*advise) return cmd_advise(o, out);
    if (*evaluate) return cmd_evaluate(o, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace slotcast::cli
