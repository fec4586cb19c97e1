#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <set>

#include "CLI11.hpp"
#include "config.hpp"
#include "elicit/corpus.hpp"
#include "elicit/error.hpp"
#include "elicit/evaluator.hpp"
#include "elicit/log.hpp"
#include "elicit/pool_builder.hpp"
#include "elicit/report.hpp"
#include "elicit/synthetic.hpp"
#include "json.hpp"

namespace elicit::cli {

namespace {

using json = nlohmann::json;

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_output(path);
  out << text;
}

const std::filesystem::path& require_path(const std::filesystem::path& p, const char* key) {
  if (p.empty()) throw ValidationError(std::string("config key ") + key + " is required");
  return p;
}

PromptLibrary prompt_library(const RunConfig& rc) {
  return rc.paths.prompts_dir.empty() ? PromptLibrary::builtin()
                                      : PromptLibrary::load(rc.paths.prompts_dir);
}

std::unique_ptr<TextEncoder> make_encoder(const RunConfig& rc, const std::string& which) {
  if (which == "checkpoint") {
    const auto path = rc.checkpoint_path();
    auto model = std::make_shared<const EncoderModel>(load_model(path));
    return std::make_unique<LocalEncoder>(model, "hashed-bow:" + path.filename().string());
  }
  if (which == "untrained") {
    auto model = std::make_shared<const EncoderModel>(
        EncoderModel::initialize(rc.train.buckets, rc.train.dim, rc.train.init_seed));
    return std::make_unique<LocalEncoder>(
        model, "hashed-bow:untrained-seed" + std::to_string(rc.train.init_seed));
  }
  if (rc.embeddings.base_url.empty()) {
    throw ValidationError("config key embeddings.base_url is required for a remote encoder");
  }
  auto endpoint = rc.embeddings;
  if (const char* key = std::getenv(std::string(kApiKeyEnv).c_str())) endpoint.api_key = key;
  return std::make_unique<RemoteEncoder>(endpoint, make_http_transport(rc.embeddings_timeout));
}

void emit_report(const RunConfig& rc, const std::string& name, const MetricsReport& report,
                 TableLayout layout, std::ostream& out) {
  const auto dir = rc.paths.output_dir;
  save_report(dir / (name + ".json"), report);
  const auto table = render_table({{name, report}}, layout);
  write_text(dir / (name + ".txt"), table);
  out << table;
}

int cmd_convert(const RunConfig& rc, std::ostream& out) {
  const auto comments = load_commentary(require_path(rc.paths.commentary, "paths.commentary"));
  const auto descs = load_descriptions(require_path(rc.paths.descriptions, "paths.descriptions"));
  const auto manifest = load_manifest(require_path(rc.paths.manifest, "paths.manifest"));

  // Reject unknown videos before the first request.
  std::set<std::string> unassigned;
  for (const auto& c : comments) {
    if (!manifest.train.contains(c.video_id) && !manifest.seen.contains(c.video_id) &&
        !manifest.val.contains(c.video_id)) {
      unassigned.insert(c.video_id);
    }
  }
  if (!unassigned.empty()) {
    std::string message = "videos missing from the split manifest:";
    for (const auto& v : unassigned) message += " " + v;
    throw ValidationError(message);
  }

  auto chat = make_chat_backend(rc.chat);
  std::shared_ptr<ChatBackend> checker;
  if (rc.checker.enabled) checker = make_chat_backend(rc.checker.backend);
  const QaPipeline pipeline(*chat, checker.get(), prompt_library(rc), rc.pipeline);
  const auto result = pipeline.build_qa_dataset(comments, descs);
  const auto splits = split_dataset(result.pairs, manifest);

  const auto& dir = rc.paths.output_dir;
  save_qa_dataset(dir / "qa_train.jsonl", splits.train);
  save_qa_dataset(dir / "qa_seen.jsonl", splits.seen);
  save_qa_dataset(dir / "qa_val.jsonl", splits.val);

  auto log = open_output(dir / "convert_log.jsonl");
  for (const auto& p : result.provenance) {
    log << json{{"kind", "provenance"},
                {"pair_id", p.pair_id},
                {"comment_id", p.comment_id},
                {"initial_question", p.initial_question},
                {"verdict_reason", p.verdict_reason},
                {"regenerated", p.regenerated},
                {"lint_ok", p.lint_ok}}
               .dump()
        << '\n';
  }
  for (const auto& s : result.skips) {
    log << json{{"kind", "skip"}, {"id", s.id}, {"stage", s.stage}, {"reason", s.reason}}.dump()
        << '\n';
  }
  for (const auto& f : result.failures) {
    log << json{{"kind", "failure"},
                {"id", f.id},
                {"stage", f.stage},
                {"message", f.message},
                {"raw_comment_ids", f.raw_comment_ids}}
               .dump()
        << '\n';
  }

  out << "raw comments: " << result.raw_comment_count << "\n"
      << "qa pairs: " << result.pairs.size() << " (train " << splits.train.size() << ", seen "
      << splits.seen.size() << ", val " << splits.val.size() << ")\n"
      << "skipped: " << result.skips.size() << ", failed raw comments: "
      << result.failed_raw_comment_count << "\n";
  return 0;
}

int cmd_train(const RunConfig& rc, std::ostream& out) {
  const auto pairs = load_qa_dataset(rc.qa_train_path());
  const auto result = train(pairs, rc.train);
  auto log = open_output(rc.paths.output_dir / "train_log.jsonl");
  for (const auto& e : result.epochs) {
    ensure(std::isfinite(e.mean_loss), "non-finite loss in epoch " + std::to_string(e.epoch));
    log << json{{"epoch", e.epoch}, {"mean_loss", e.mean_loss}, {"batches", e.batches}}.dump()
        << '\n';
    out << "epoch " << e.epoch << " mean loss " << e.mean_loss << "\n";
  }
  const auto path = rc.checkpoint_path();
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  save_model(result.model, path);
  out << "checkpoint: " << path.string() << "\n";
  return 0;
}

int cmd_build_pools(const RunConfig& rc, std::ostream& out) {
  const auto commentary = load_commentary(require_path(rc.paths.commentary, "paths.commentary"));
  const auto qa = load_qa_dataset(rc.qa_eval_path());
  const auto comments = comments_from_pairs(qa);
  const PoolCorpus corpus(comments, scenarios_by_video(commentary));
  const auto segments = group_segments(comments, rc.pipeline.window_seconds);
  out << "pool length L = " << rc.pool.L << "\n";
  const auto pools = build_all_pools(segments, corpus, rc.pool.L, rc.pool.seed);
  const auto path = rc.pools_path();
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  save_pools(path, pools);
  out << "pools: " << pools.size() << " -> " << path.string() << "\n";
  return 0;
}

int cmd_evaluate(const RunConfig& rc, const std::filesystem::path& submission_path,
                 const std::string& name, std::ostream& out) {
  const auto pools = load_pools(rc.pools_path());
  const auto submission = load_submission(submission_path);
  const auto encoder = make_encoder(rc, rc.eval.encoder);
  auto report = evaluate_submission(submission, pools, *encoder, rc.eval.ks);
  report.seed = rc.eval.seed;
  emit_report(rc, name, report, TableLayout::kBenchmark, out);
  return 0;
}

int cmd_baseline(const RunConfig& rc, bool gold, std::string name, std::ostream& out) {
  const auto pools = load_pools(rc.pools_path());
  if (name.empty()) name = gold ? "gold" : "random";
  MetricsReport report;
  if (gold) {
    const auto qa = load_qa_dataset(rc.qa_eval_path());
    const auto encoder = make_encoder(rc, rc.eval.encoder);
    report = gold_baseline(pools, qa, *encoder, rc.eval.seed, rc.eval.reps, rc.eval.ks);
  } else {
    report = random_baseline(pools, rc.eval.seed, rc.eval.reps, rc.eval.ks);
  }
  emit_report(rc, name, report, TableLayout::kBenchmark, out);
  return 0;
}

int cmd_retriever_check(const RunConfig& rc, bool skip_untrained, std::ostream& out) {
  const auto qa = load_qa_dataset(rc.qa_eval_path());
  std::vector<std::pair<std::string, std::string>> runs;  // label, encoder kind
  if (!skip_untrained) runs.emplace_back("untrained", "untrained");
  runs.emplace_back("trained", "checkpoint");
  if (!rc.embeddings.base_url.empty()) runs.emplace_back("zero_shot", "remote");

  std::vector<LabeledReport> rows;
  for (const auto& [label, kind] : runs) {
    const auto encoder = make_encoder(rc, kind);
    auto report = single_positive_retrieval(qa, *encoder, rc.eval.ks);
    save_report(rc.paths.output_dir / ("retriever_" + label + ".json"), report);
    rows.emplace_back(label, std::move(report));
  }
  const auto table = render_table(rows, TableLayout::kRetriever);
  write_text(rc.paths.output_dir / "retriever_check.txt", table);
  out << table;
  return 0;
}

int cmd_report(const std::vector<std::string>& files, const std::string& layout_name,
               const std::string& out_path, std::ostream& out) {
  if (files.empty()) throw ValidationError("report: at least one report file is required");
  const auto layout = layout_name == "retriever" ? TableLayout::kRetriever : TableLayout::kBenchmark;
  std::vector<LabeledReport> rows;
  for (const auto& f : files) {
    rows.emplace_back(std::filesystem::path(f).stem().string(), load_report(f));
  }
  const auto table = render_table(rows, layout);
  if (!out_path.empty()) write_text(out_path, table);
  out << table;
  return 0;
}

int cmd_synth(const SyntheticSpec& spec, const std::filesystem::path& dir, std::ostream& out) {
  const auto corpus = make_synthetic_corpus(spec);
  save_commentary(dir / "commentary.jsonl", corpus.commentary);
  save_descriptions(dir / "descriptions.jsonl", corpus.descriptions);
  save_manifest(dir / "manifest.json", corpus.manifest);
  save_qa_dataset(dir / "qa_train.jsonl", corpus.splits.train);
  save_qa_dataset(dir / "qa_seen.jsonl", corpus.splits.seen);
  save_qa_dataset(dir / "qa_val.jsonl", corpus.splits.val);
  out << "synthetic corpus: " << corpus.pairs.size() << " pairs (train "
      << corpus.splits.train.size() << ", val " << corpus.splits.val.size() << ") -> "
      << dir.string() << "\n";
  return 0;
}

// Routes library log lines to the caller's error stream for one run.
class ScopedLogSink {
 public:
  explicit ScopedLogSink(std::ostream& err)
      : previous_(set_log_sink([&err](LogLevel level, std::string_view message) {
          err << (level == LogLevel::kWarning ? "warning: " : "") << message << "\n";
        })) {}
  ~ScopedLogSink() { set_log_sink(std::move(previous_)); }
  ScopedLogSink(const ScopedLogSink&) = delete;
  ScopedLogSink& operator=(const ScopedLogSink&) = delete;

 private:
  LogSink previous_;
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Build, train and score video question-generation retrieval benchmarks.", "elicit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_file;
  app.add_option("-c,--config", config_file, "JSON run config");

  const auto keys = config_keys();
  std::map<std::string, std::string> override_values;
  std::map<std::string, CLI::Option*> override_options;
  for (const auto& key : keys) {
    override_options[key] =
        app.add_option("--" + key, override_values[key], "Override config key " + key)
            ->group("Config overrides");
  }

  auto* convert = app.add_subcommand("convert", "Commentary to QA pairs per split");
  auto* train_cmd = app.add_subcommand("train", "Train the hashed encoder on qa_train");
  auto* pools_cmd = app.add_subcommand("build-pools", "Retrieval pools for the evaluation split");

  auto* evaluate = app.add_subcommand("evaluate", "Score a question submission");
  std::string submission, eval_name = "submission";
  evaluate->add_option("-s,--submission", submission, "JSONL of {segment_id, question}")
      ->required();
  evaluate->add_option("--name", eval_name, "Report file stem");

  auto* baseline = app.add_subcommand("baseline", "Gold or Random baseline");
  bool gold = false, random = false;
  std::string baseline_name;
  auto* gold_flag = baseline->add_flag("--gold", gold, "Held-out questions as submissions");
  auto* random_flag = baseline->add_flag("--random", random, "Uniform random rankings");
  gold_flag->excludes(random_flag);
  baseline->add_option("--name", baseline_name, "Report file stem");

  auto* check = app.add_subcommand("retriever-check", "Single-positive retrieval on held-out pairs");
  bool skip_untrained = false;
  check->add_flag("--skip-untrained", skip_untrained, "Do not score the untrained initialization");

  auto* report = app.add_subcommand("report", "Render report files as one table");
  std::vector<std::string> report_files;
  std::string layout = "benchmark", table_out;
  report->add_option("files", report_files, "Report JSON files")->required();
  report->add_option("--layout", layout, "benchmark or retriever")
      ->check(CLI::IsMember({"benchmark", "retriever"}));
  report->add_option("-o,--out", table_out, "Also write the table here");

  auto* synth = app.add_subcommand("synth", "Write a synthetic demo corpus");
  SyntheticSpec spec;
  std::string synth_dir;
  synth->add_option("-o,--out", synth_dir, "Output directory")->required();
  synth->add_option("--pairs", spec.pairs, "QA pairs");
  synth->add_option("--videos", spec.videos, "Videos");
  synth->add_option("--seed", spec.seed, "Generator seed");

  auto* show = app.add_subcommand("config", "Print the default config");

  const ScopedLogSink sink(err);
  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return 0;
    } catch (const CLI::ParseError& e) {
      if (e.get_exit_code() == 0) {
        out << app.help();
        return 0;
      }
      throw ValidationError(e.what());
    }
    if (baseline->parsed() && !gold && !random) {
      throw ValidationError("baseline needs --gold or --random");
    }

    if (show->parsed()) {
      out << default_config_json();
      return 0;
    }
    if (synth->parsed()) return cmd_synth(spec, synth_dir, out);
    if (report->parsed()) return cmd_report(report_files, layout, table_out, out);

    std::vector<std::pair<std::string, std::string>> overrides;
    for (const auto& key : keys) {
      if (override_options[key]->count() > 0) overrides.emplace_back(key, override_values[key]);
    }
    const auto rc = resolve_config(config_file, overrides);

    if (convert->parsed()) return cmd_convert(rc, out);
    if (train_cmd->parsed()) return cmd_train(rc, out);
    if (pools_cmd->parsed()) return cmd_build_pools(rc, out);
    if (evaluate->parsed()) return cmd_evaluate(rc, submission, eval_name, out);
    if (baseline->parsed()) return cmd_baseline(rc, gold, baseline_name, out);
    if (check->parsed()) return cmd_retriever_check(rc, skip_untrained, out);
    throw InvariantError("no subcommand dispatched");
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kInternal);
  }
}

}  // namespace elicit::cli
