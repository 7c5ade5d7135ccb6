// Copyright 2026 The docrecon Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cli.h"

#include <charconv>
#include <filesystem>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "docrecon/corpus.h"
#include "docrecon/errors.h"
#include "docrecon/grpo.h"
#include "docrecon/harness.h"
#include "docrecon/io.h"
#include "docrecon/policy.h"
#include "docrecon/protocol.h"
#include "docrecon/reward.h"
#include "docrecon/taskgen.h"

namespace docrecon::cli {

namespace fs = std::filesystem;

namespace {

template <typename T>
T parse_number(std::string_view text, std::string_view what) {
  text = trim(text);
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw InputError("invalid value for " + std::string(what) + ": \"" + std::string(text) + "\"");
  }
  return value;
}

double parse_double(std::string_view text, std::string_view what) {
  const std::string s(trim(text));
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw InputError("invalid value for " + std::string(what) + ": \"" + s + "\"");
}

std::vector<int> parse_int_list(std::string_view text, std::string_view what) {
  std::vector<int> out;
  std::string_view rest = text;
  if (!rest.empty() && rest.front() == '[') rest.remove_prefix(1);
  if (!rest.empty() && rest.back() == ']') rest.remove_suffix(1);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    out.push_back(parse_number<int>(rest.substr(0, comma), what));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  if (out.empty()) throw InputError(std::string(what) + " must not be empty");
  return out;
}

std::map<Domain, std::size_t> parse_domain_counts(std::string_view text) {
  std::map<Domain, std::size_t> counts;
  std::string_view rest = text;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view item = rest.substr(0, comma);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) {
      throw InputError("--counts entries look like book=8000, got \"" + std::string(item) + "\"");
    }
    counts[parse_domain(trim(item.substr(0, eq)))] =
        parse_number<std::size_t>(item.substr(eq + 1), "--counts");
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return counts;
}

// Flat key = value settings whose keys mirror GrpoConfig and CurriculumSpec
// field names.
using Settings = std::map<std::string, std::string>;

const std::set<std::string>& known_setting_keys() {
  static const std::set<std::string> keys = {
      "seed",          "group_size",   "clip_epsilon", "learning_rate",
      "std_floor",     "prompts_per_batch", "iterations", "reward_mode",
      "warmup_steps",  "eval_every",   "threads",      "k_values",
      "ratios",        "ordering"};
  return keys;
}

Settings load_settings(const std::string& path) {
  Settings settings;
  if (path.empty()) return settings;
  if (!fs::exists(path)) throw InputError("config file not found: " + path);
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_file(path);
  } catch (const CLI::Error& e) {
    throw InputError("cannot parse config " + path + ": " + e.what());
  }
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    const std::string key = item.fullname();
    if (!known_setting_keys().contains(key)) {
      throw InputError("unknown config key \"" + key + "\" in " + path);
    }
    std::string value;
    for (std::size_t i = 0; i < item.inputs.size(); ++i) {
      if (i > 0) value += ',';
      value += item.inputs[i];
    }
    settings[key] = value;
  }
  return settings;
}

// Applies a config value to `target` unless the flag was given explicitly.
template <typename Fn>
void from_settings(const Settings& settings, const char* key, const CLI::Option* flag,
                   Fn&& apply) {
  if (flag != nullptr && flag->count() > 0) return;
  auto it = settings.find(key);
  if (it != settings.end()) apply(it->second);
}

void print_seed(std::ostream& err, std::uint64_t seed) { err << "seed: " << seed << "\n"; }

struct Globals {
  std::uint64_t seed = 0;
  std::string config_path;
  CLI::Option* seed_flag = nullptr;
  Settings settings;

  void resolve() {
    settings = load_settings(config_path);
    from_settings(settings, "seed", seed_flag,
                  [&](const std::string& v) { seed = parse_number<std::uint64_t>(v, "seed"); });
  }
};

fs::path with_suffix(const fs::path& base, const std::string& suffix) {
  fs::path p = base;
  p.replace_extension();
  p += suffix;
  return p;
}

// ---- ingest ---------------------------------------------------------------

struct IngestArgs {
  std::string input;
  std::string format = "jsonl";
  std::string domain = "other";
  std::string manifest;
  std::size_t min_paragraph_chars = kDefaultMinParagraphChars;
  std::string strategy = "longest";
  std::string counts;
  std::string output;
};

void run_ingest(const IngestArgs& a, const Globals& g, std::ostream& out) {
  LoadOptions options;
  options.default_domain = parse_domain(a.domain);
  if (!a.manifest.empty()) options.manifest = a.manifest;
  const auto raw = load_corpus(a.input, parse_corpus_format(a.format), options);

  std::vector<Document> docs;
  docs.reserve(raw.size());
  for (const auto& r : raw) docs.push_back(segment_paragraphs(r, a.min_paragraph_chars));

  if (!a.counts.empty()) {
    SelectionSpec spec;
    spec.strategy = parse_selection_strategy(a.strategy);
    spec.per_domain_counts = parse_domain_counts(a.counts);
    spec.seed = g.seed;
    docs = select_documents(docs, spec);
  }
  write_documents(a.output, docs);
  out << "ingested " << raw.size() << " documents, wrote " << docs.size() << " to "
      << a.output << "\n";
}

// ---- generate -------------------------------------------------------------

struct GenerateArgs {
  std::string documents;
  std::string k_values = "2,4,6,8";
  std::string ratios = "3,3,3,5";
  std::string ordering = "curriculum";
  std::size_t validation_count = 0;
  std::size_t min_paragraph_chars = kDefaultMinParagraphChars;
  bool forbid_adjacent = false;
  std::string output;
  std::string validation_output;
  std::string manifest;
  CLI::Option* k_flag = nullptr;
  CLI::Option* ratios_flag = nullptr;
  CLI::Option* ordering_flag = nullptr;
};

void run_generate(const GenerateArgs& a, const Globals& g, std::ostream& out) {
  CurriculumSpec spec;
  std::string k_values = a.k_values;
  std::string ratios = a.ratios;
  std::string ordering = a.ordering;
  from_settings(g.settings, "k_values", a.k_flag, [&](const std::string& v) { k_values = v; });
  from_settings(g.settings, "ratios", a.ratios_flag, [&](const std::string& v) { ratios = v; });
  from_settings(g.settings, "ordering", a.ordering_flag,
                [&](const std::string& v) { ordering = v; });
  spec.k_values = parse_int_list(k_values, "k_values");
  spec.ratios = parse_int_list(ratios, "ratios");
  spec.ordering = parse_ordering(ordering);
  spec.seed = g.seed;

  TaskOptions options;
  options.min_paragraph_chars = a.min_paragraph_chars;
  options.forbid_adjacent = a.forbid_adjacent;

  const auto docs = read_documents(a.documents);
  const Dataset dataset = build_dataset(docs, spec, a.validation_count, options);

  const fs::path validation_path = a.validation_output.empty()
                                       ? with_suffix(a.output, ".validation.jsonl")
                                       : fs::path(a.validation_output);
  const fs::path manifest_path =
      a.manifest.empty() ? with_suffix(a.output, ".manifest.json") : fs::path(a.manifest);

  // Encode everything before the first write so a failure leaves no output.
  const std::string train_jsonl = tasks_to_jsonl(dataset.train);
  const std::string validation_jsonl = tasks_to_jsonl(dataset.validation);
  const std::string manifest =
      manifest_to_json(dataset.train_manifest, dataset.validation_manifest, spec);
  write_file_atomic(a.output, train_jsonl);
  write_file_atomic(validation_path, validation_jsonl);
  write_file_atomic(manifest_path, manifest);

  out << "train:";
  for (const auto& [k, n] : dataset.train_manifest.counts) out << " k" << k << "=" << n;
  out << " (total " << dataset.train_manifest.total << ")\n";
  out << "validation:";
  for (const auto& [k, n] : dataset.validation_manifest.counts) out << " k" << k << "=" << n;
  out << " (total " << dataset.validation_manifest.total << ")\n";
  if (dataset.train_manifest.skipped_documents > 0) {
    out << "skipped " << dataset.train_manifest.skipped_documents
        << " documents too short for k=" << spec.k_values.front() << "\n";
  }
}

// ---- render ---------------------------------------------------------------

struct RenderArgs {
  std::string tasks;
  std::string style = "chunk";
  std::string output;
};

void run_render(const RenderArgs& a, std::ostream& out) {
  const PlaceholderStyle style = parse_placeholder_style(a.style);
  const auto tasks = read_dataset(a.tasks);
  std::vector<Prompt> prompts;
  prompts.reserve(tasks.size());
  for (const auto& t : tasks) prompts.push_back(render_prompt(t, style));
  write_file_atomic(a.output, prompts_to_jsonl(prompts));
  out << "rendered " << prompts.size() << " prompts to " << a.output << "\n";
}

// ---- score ----------------------------------------------------------------

struct ScoreArgs {
  std::string tasks;
  std::string responses;
  std::string mode = "dense";
  std::string output;
  std::string report;
};

void run_score(const ScoreArgs& a, std::ostream& out, std::ostream& err) {
  const RewardMode mode = parse_reward_mode(a.mode);
  const ResponseScoring scoring = score_response_file(a.responses, a.tasks, mode);
  for (const auto& w : scoring.warnings) err << "warning: " << w << "\n";
  const std::string report = report_to_json(scoring.report);
  write_file_atomic(a.output, scoring.scores_jsonl);
  if (a.report.empty()) {
    out << report;
  } else {
    write_file_atomic(a.report, report);
    out << "scored " << scoring.report.overall.n_tasks << " responses, mean reward "
        << (mode == RewardMode::kDense ? scoring.report.overall.mean_dense
                                       : scoring.report.overall.mean_sparse)
        << "\n";
  }
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
  std::string tasks;
  std::string validation;
  std::string init;
  std::string checkpoint;
  std::string log;
  GrpoConfig config;
  std::string reward_mode = "dense";
  std::map<std::string, CLI::Option*> flags;
};

void run_train(TrainArgs& a, const Globals& g, std::ostream& out) {
  GrpoConfig& c = a.config;
  auto flag = [&](const char* key) { return a.flags.at(key); };
  from_settings(g.settings, "group_size", flag("group_size"),
                [&](const std::string& v) { c.group_size = parse_number<int>(v, "group_size"); });
  from_settings(g.settings, "clip_epsilon", flag("clip_epsilon"),
                [&](const std::string& v) { c.clip_epsilon = parse_double(v, "clip_epsilon"); });
  from_settings(g.settings, "learning_rate", flag("learning_rate"),
                [&](const std::string& v) { c.learning_rate = parse_double(v, "learning_rate"); });
  from_settings(g.settings, "std_floor", flag("std_floor"),
                [&](const std::string& v) { c.std_floor = parse_double(v, "std_floor"); });
  from_settings(g.settings, "prompts_per_batch", flag("prompts_per_batch"), [&](const std::string& v) {
    c.prompts_per_batch = parse_number<int>(v, "prompts_per_batch");
  });
  from_settings(g.settings, "iterations", flag("iterations"),
                [&](const std::string& v) { c.iterations = parse_number<int>(v, "iterations"); });
  from_settings(g.settings, "reward_mode", flag("reward_mode"),
                [&](const std::string& v) { a.reward_mode = std::string(trim(v)); });
  from_settings(g.settings, "warmup_steps", flag("warmup_steps"),
                [&](const std::string& v) { c.warmup_steps = parse_number<int>(v, "warmup_steps"); });
  from_settings(g.settings, "eval_every", flag("eval_every"),
                [&](const std::string& v) { c.eval_every = parse_number<int>(v, "eval_every"); });
  from_settings(g.settings, "threads", flag("threads"),
                [&](const std::string& v) { c.threads = parse_number<int>(v, "threads"); });
  c.reward_mode = parse_reward_mode(a.reward_mode);
  validate_config(c);

  const auto tasks = read_dataset(a.tasks);
  std::vector<ReconstructionTask> validation;
  if (!a.validation.empty()) validation = read_dataset(a.validation);
  const PolicyParams initial = a.init.empty() ? PolicyParams{} : read_checkpoint(a.init);

  const TrainResult result = train(tasks, validation, c, g.seed, initial);
  const std::string log = result.log.to_jsonl();
  write_file_atomic(a.log, log);
  write_checkpoint(a.checkpoint, result.params);

  out << "trained " << (result.log.records.empty() ? 0 : result.log.records.back().step)
      << " steps; weights";
  for (double w : result.params.weights) out << " " << w;
  out << "\n";
  if (!result.log.records.empty() && result.log.records.back().validation) {
    const EvalStats& v = *result.log.records.back().validation;
    out << "validation: dense " << v.mean_dense << ", sparse " << v.mean_sparse
        << ", extraction " << v.extraction_rate << "\n";
  }
}

// ---- eval -----------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint;
  std::string tasks;
  std::string mode = "dense";
  std::string decode = "greedy";
  std::string output;
};

void run_eval(const EvalArgs& a, const Globals& g, std::ostream& out) {
  const PolicyParams params = read_checkpoint(a.checkpoint);
  const auto tasks = read_dataset(a.tasks);
  const EvalReport report = evaluate_policy(params, tasks, parse_reward_mode(a.mode),
                                            parse_decode_mode(a.decode), g.seed);
  const std::string json = report_to_json(report);
  if (a.output.empty()) {
    out << json;
  } else {
    write_file_atomic(a.output, json);
    out << "wrote report to " << a.output << "\n";
  }
}

// ---- oracle ---------------------------------------------------------------

struct OracleArgs {
  int k = 0;
  std::string mode = "dense";
};

void run_oracle(const OracleArgs& a, std::ostream& out) {
  const Rational r = oracle_expected_reward(a.k, parse_reward_mode(a.mode));
  std::ostringstream line;
  line << std::setprecision(16) << r.value() << "  (" << r.num << "/" << r.den << ")\n";
  out << line.str();
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Document reconstruction tasks, verifiable rewards and GRPO training",
               "docrecon"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals globals;
  globals.seed_flag = app.add_option("--seed", globals.seed, "Random seed (64-bit)");
  app.add_option("--config", globals.config_path,
                 "Flat key = value file; keys mirror GrpoConfig/CurriculumSpec fields");

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Corpus -> segmented documents jsonl");
  ingest_cmd->add_option("--input", ingest.input, "Directory of .txt files or a jsonl file")->required();
  ingest_cmd->add_option("--format", ingest.format, "plaintext-dir | jsonl")->capture_default_str();
  ingest_cmd->add_option("--domain", ingest.domain, "Domain for unlisted plaintext files")
      ->capture_default_str();
  ingest_cmd->add_option("--manifest", ingest.manifest, "jsonl of {id, domain} for plaintext-dir");
  ingest_cmd->add_option("--min-paragraph-chars", ingest.min_paragraph_chars)->capture_default_str();
  ingest_cmd->add_option("--strategy", ingest.strategy, "longest | shortest | random")
      ->capture_default_str();
  ingest_cmd->add_option("--counts", ingest.counts, "Per-domain selection, e.g. book=8000,code=3000");
  ingest_cmd->add_option("--output", ingest.output, "Documents jsonl")->required();

  GenerateArgs gen;
  auto* gen_cmd = app.add_subcommand("generate", "Documents -> reconstruction task jsonl");
  gen_cmd->add_option("--documents", gen.documents, "Documents jsonl from ingest")->required();
  gen.k_flag = gen_cmd->add_option("--k-values", gen.k_values)->capture_default_str();
  gen.ratios_flag = gen_cmd->add_option("--ratios", gen.ratios)->capture_default_str();
  gen.ordering_flag =
      gen_cmd->add_option("--ordering", gen.ordering, "curriculum | shuffled")->capture_default_str();
  gen_cmd->add_option("--validation-count", gen.validation_count)->capture_default_str();
  gen_cmd->add_option("--min-paragraph-chars", gen.min_paragraph_chars)->capture_default_str();
  gen_cmd->add_flag("--forbid-adjacent", gen.forbid_adjacent, "Never mask neighbouring paragraphs");
  gen_cmd->add_option("--output", gen.output, "Train task jsonl")->required();
  gen_cmd->add_option("--validation-output", gen.validation_output,
                      "Default: <output>.validation.jsonl");
  gen_cmd->add_option("--manifest", gen.manifest, "Default: <output>.manifest.json");

  RenderArgs render;
  auto* render_cmd = app.add_subcommand("render", "Tasks -> prompt jsonl");
  render_cmd->add_option("--tasks", render.tasks)->required();
  render_cmd->add_option("--placeholder-style", render.style, "chunk | c")->capture_default_str();
  render_cmd->add_option("--output", render.output)->required();

  ScoreArgs score;
  auto* score_cmd = app.add_subcommand("score", "Tasks + responses -> scores and report");
  score_cmd->add_option("--tasks", score.tasks)->required();
  score_cmd->add_option("--responses", score.responses, "jsonl of {task_id, response}")->required();
  score_cmd->add_option("--mode", score.mode, "dense | sparse")->capture_default_str();
  score_cmd->add_option("--output", score.output, "Per-task scores jsonl")->required();
  score_cmd->add_option("--report", score.report, "Report json (default: stdout)");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "GRPO training of the toy policy");
  train_cmd->add_option("--tasks", tr.tasks)->required();
  train_cmd->add_option("--validation", tr.validation, "Validation task jsonl");
  train_cmd->add_option("--init", tr.init, "Starting checkpoint (default: zero weights)");
  train_cmd->add_option("--checkpoint", tr.checkpoint, "Output checkpoint json")->required();
  train_cmd->add_option("--log", tr.log, "Output TrainingLog jsonl")->required();
  tr.flags["group_size"] = train_cmd->add_option("--group-size", tr.config.group_size)->capture_default_str();
  tr.flags["clip_epsilon"] = train_cmd->add_option("--clip-epsilon", tr.config.clip_epsilon)->capture_default_str();
  tr.flags["learning_rate"] = train_cmd->add_option("--learning-rate", tr.config.learning_rate)->capture_default_str();
  tr.flags["std_floor"] = train_cmd->add_option("--std-floor", tr.config.std_floor)->capture_default_str();
  tr.flags["prompts_per_batch"] =
      train_cmd->add_option("--prompts-per-batch", tr.config.prompts_per_batch)->capture_default_str();
  tr.flags["iterations"] = train_cmd->add_option("--iterations", tr.config.iterations, "0 = one pass")
                               ->capture_default_str();
  tr.flags["reward_mode"] = train_cmd->add_option("--reward-mode", tr.reward_mode, "dense | sparse")
                                ->capture_default_str();
  tr.flags["warmup_steps"] = train_cmd->add_option("--warmup-steps", tr.config.warmup_steps)->capture_default_str();
  tr.flags["eval_every"] = train_cmd->add_option("--eval-every", tr.config.eval_every)->capture_default_str();
  tr.flags["threads"] = train_cmd->add_option("--threads", tr.config.threads)->capture_default_str();

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Checkpoint + tasks -> EvalReport");
  eval_cmd->add_option("--checkpoint", ev.checkpoint)->required();
  eval_cmd->add_option("--tasks", ev.tasks)->required();
  eval_cmd->add_option("--mode", ev.mode, "dense | sparse")->capture_default_str();
  eval_cmd->add_option("--decode", ev.decode, "greedy | sample")->capture_default_str();
  eval_cmd->add_option("--output", ev.output, "Report json (default: stdout)");

  OracleArgs oracle;
  auto* oracle_cmd = app.add_subcommand("oracle", "Expected reward of a uniform ordering");
  oracle_cmd->add_option("--k", oracle.k, "1..8")->required();
  oracle_cmd->add_option("--mode", oracle.mode, "dense | sparse")->capture_default_str();

  std::vector<const char*> argv{"docrecon"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    globals.resolve();
    print_seed(err, globals.seed);
    if (*ingest_cmd) run_ingest(ingest, globals, out);
    if (*gen_cmd) run_generate(gen, globals, out);
    if (*render_cmd) run_render(render, out);
    if (*score_cmd) run_score(score, out, err);
    if (*train_cmd) run_train(tr, globals, out);
    if (*eval_cmd) run_eval(ev, globals, out);
    if (*oracle_cmd) run_oracle(oracle, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const InvariantError& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInvariantError;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInvariantError;
  }
  return kExitOk;
}

}  // namespace docrecon::cli
