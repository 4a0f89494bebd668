// actmod: generate synthetic data, extract narration pairs, train, evaluate
// and gradient-check adverb-as-action-modifier embeddings.

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "actmod/baselines.hpp"
#include "actmod/checkpoint.hpp"
#include "actmod/config.hpp"
#include "actmod/dataset.hpp"
#include "actmod/errors.hpp"
#include "actmod/eval.hpp"
#include "actmod/gradcheck.hpp"
#include "actmod/parser.hpp"
#include "actmod/synth.hpp"
#include "actmod/training.hpp"
#include "actmod/version.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace actmod;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

void setup_logging() {
  auto logger = spdlog::stderr_logger_mt("actmod");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("ACTMOD_LOG_LEVEL")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to off; only accept real names.
    if (level != spdlog::level::off || std::string(env) == "off")
      spdlog::set_level(level);
    else
      spdlog::warn("ignoring unknown ACTMOD_LOG_LEVEL '{}'", env);
  }
}

std::string one_line(const std::string& json_text) {
  return nlohmann::json::parse(json_text).dump();
}

std::vector<std::string> header_lines(const std::string& command,
                                      const std::string& config_json) {
  return {std::string("actmod ") + kVersion + " " + command,
          "config " + one_line(config_json)};
}

void write_text(const fs::path& path, const std::vector<std::string>& header,
                const std::string& body) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write '" + path.string() + "'");
  for (const auto& h : header) os << "# " << h << '\n';
  os << body;
  if (!os) throw DataError("write failed for '" + path.string() + "'");
}

std::string require_path(const std::string& flag, const std::string& fallback,
                         const char* name) {
  const std::string& v = flag.empty() ? fallback : flag;
  if (v.empty())
    throw ConfigError(std::string("missing ") + name +
                      " (pass the flag or set it under \"paths\")");
  return v;
}

RunConfig base_config(const std::string& path) {
  return path.empty() ? RunConfig{} : load_run_config(path);
}

// Dimensions fixed by the data rather than by the config.
void adapt_model_to_data(ModelConfig& mc, const Dataset& ds) {
  mc.feature_dim = ds.store.dim();
  if (mc.embed_dim != ds.actions.dim()) {
    mc.embed_dim = ds.actions.dim();
    if (mc.attention == AttentionKind::sdp && mc.heads > 0 &&
        mc.embed_dim % mc.heads == 0)
      mc.head_dim = mc.embed_dim / mc.heads;
  }
}

std::vector<VideoSample> split_samples(const Dataset& ds,
                                       const std::string& split,
                                       std::size_t window) {
  auto records = ds.split(split);
  if (records.empty())
    throw DataError("dataset has no records in split '" + split + "'");
  return make_samples(ds, records, window);
}

void check_vocabulary(const ModelParams& params, const Dataset& ds) {
  if (vocabulary_digest(params.actions()) != vocabulary_digest(ds.actions) ||
      params.adverbs().names() != ds.adverbs.names() ||
      params.adverbs().antonyms() != ds.adverbs.antonyms())
    throw DataError("checkpoint vocabulary does not match the dataset");
}

// ---- generate ------------------------------------------------------------

struct GenerateArgs {
  std::string config, out;
  std::optional<std::uint64_t> seed;
  std::optional<double> noise_fraction;
  std::optional<std::size_t> train_videos, test_videos;
};

int run_generate(const GenerateArgs& a) {
  RunConfig rc = base_config(a.config);
  if (a.seed) rc.synth.seed = *a.seed;
  if (a.noise_fraction) rc.synth.noise_fraction = *a.noise_fraction;
  if (a.train_videos) rc.synth.train_videos = *a.train_videos;
  if (a.test_videos) rc.synth.test_videos = *a.test_videos;
  const fs::path out = require_path(a.out, rc.paths.out, "output directory");
  const std::string resolved = to_json(rc);
  spdlog::info("resolved config: {}", one_line(resolved));
  const SynthResult result = synth_generate(rc.synth);
  save_dataset(result.dataset, out);
  write_text(out / "run.txt", header_lines("generate", resolved), "");
  spdlog::info("wrote {} videos and {} annotations to {}",
               result.dataset.store.videos().size(),
               result.dataset.records.size(), out.string());
  return kOk;
}

// ---- parse ---------------------------------------------------------------

struct ParseArgs {
  std::string rules, in, out, split = "train";
};

int run_parse(const ParseArgs& a) {
  const ExtractionRules rules =
      a.rules.empty() ? ExtractionRules{} : load_rules(a.rules);
  rules.validate();
  const fs::path in(a.in);
  std::vector<fs::path> files;
  if (fs::is_directory(in)) {
    for (const auto& e : fs::directory_iterator(in))
      if (e.is_regular_file() && e.path().filename().string()[0] != '.')
        files.push_back(e.path());
    std::sort(files.begin(), files.end());
  } else if (fs::is_regular_file(in)) {
    files.push_back(in);
  } else {
    throw DataError("input '" + a.in + "' not found");
  }
  std::vector<PairExtraction> all;
  std::size_t docs = 0;
  for (const auto& f : files) {
    for (const auto& doc : load_tagged_file(f)) {
      ++docs;
      for (auto& e : extract_pairs(doc, rules)) {
        if (!satisfies_rules(e, doc, rules))
          throw ContractError("extraction failed its own rule check");
        all.push_back(std::move(e));
      }
    }
  }
  const std::string rules_json = rules_to_json(rules);
  spdlog::info("rules: {}", one_line(rules_json));
  const EmitSummary s = emit_annotations(
      all, a.out, a.split,
      {std::string("actmod ") + kVersion + " parse", "rules " + one_line(rules_json)});
  spdlog::info("{} files, {} documents: {} pairs extracted, {} written, {} "
               "duplicates removed",
               files.size(), docs, s.extracted, s.written, s.duplicates);
  return kOk;
}

// ---- train ---------------------------------------------------------------

struct TrainArgs {
  std::string config, data, out, resume, log;
  std::optional<std::size_t> epochs, stage1_epochs, batch_size;
  std::optional<double> lr, modifier_lr;
  std::optional<std::uint64_t> seed;
  std::string modifier, attention, query, loss_mode;
  bool wall_time = false;
  bool snapshots = false;
};

void apply_overrides(const TrainArgs& a, RunConfig& rc) {
  if (a.epochs) rc.train.epochs = *a.epochs;
  if (a.stage1_epochs) rc.train.stage1_epochs = *a.stage1_epochs;
  if (a.batch_size) rc.train.batch_size = *a.batch_size;
  if (a.lr) rc.train.lr = *a.lr;
  if (a.modifier_lr) rc.train.modifier_lr = *a.modifier_lr;
  if (a.seed) rc.train.seed = *a.seed;
  if (!a.modifier.empty()) rc.model.modifier = parse_modifier_kind(a.modifier);
  if (!a.attention.empty())
    rc.model.attention = parse_attention_kind(a.attention);
  if (!a.query.empty()) rc.model.query = parse_query_kind(a.query);
  if (!a.loss_mode.empty()) rc.train.loss_mode = parse_loss_mode(a.loss_mode);
}

int run_train(const TrainArgs& a) {
  RunConfig rc = base_config(a.config);
  apply_overrides(a, rc);
  const fs::path data = require_path(a.data, rc.paths.data, "data directory");
  const fs::path out = require_path(a.out, rc.paths.out, "checkpoint path");
  const Dataset ds = load_dataset(data);

  std::optional<TrainState> state;
  if (!a.resume.empty()) {
    Checkpoint ck = load_checkpoint(a.resume);
    check_vocabulary(ck.state.params, ds);
    // The checkpoint's schedule wins, except for an explicit epoch count.
    const std::size_t epochs = a.epochs ? *a.epochs : ck.train.epochs;
    rc.train = ck.train;
    rc.train.epochs = epochs;
    rc.model = ck.state.params.config();
    state.emplace(std::move(ck.state));
    spdlog::info("resuming from {} at epoch {}", a.resume, state->epoch);
  } else {
    adapt_model_to_data(rc.model, ds);
  }
  rc.model.validate();
  rc.train.validate();
  rc.paths.data = data.string();
  rc.paths.out = out.string();
  const std::string resolved = to_json(rc);
  spdlog::info("resolved config: {}", one_line(resolved));

  const auto samples = split_samples(ds, "train", rc.model.window);
  if (!state)
    state.emplace(init_train_state(rc.train, rc.model, ds.actions, ds.adverbs));
  const fs::path log_path = a.log.empty() ? fs::path(out.string() + ".log.tsv")
                                          : fs::path(a.log);
  auto write_log = [&](const TrainState& s) {
    write_text(log_path, header_lines("train", resolved),
               format_train_log(s.log, a.wall_time));
  };
  const std::size_t every = std::max<std::size_t>(1, rc.train.epochs / 20);
  Trainer trainer(rc.train, samples);
  trainer.train(
      *state,
      [&](const TrainState& s, bool final) {
        save_checkpoint(rc.train, s, out);
        if (a.snapshots && !final)
          save_checkpoint(rc.train, s,
                          out.string() + ".epoch" + std::to_string(s.epoch));
        write_log(s);
        spdlog::debug("checkpoint at epoch {}", s.epoch);
      },
      [&](const EpochStats& e) {
        const auto level = (e.epoch + 1) % every == 0 ? spdlog::level::info
                                                      : spdlog::level::debug;
        spdlog::log(level, "epoch {} [{}] action {:.4f} adverb {:.4f} ({:.2f}s)",
                    e.epoch + 1, to_string(e.stage), e.action_loss,
                    e.adverb_loss, e.wall_seconds);
      });
  if (state->log.epochs.empty()) {
    // Nothing left to train; still leave a checkpoint behind.
    save_checkpoint(rc.train, *state, out);
    write_log(*state);
  }
  spdlog::info("checkpoint written to {}", out.string());
  return kOk;
}

// ---- eval / report ---------------------------------------------------------

struct EvalArgs {
  std::string config, ckpt, data, setting, direction, split = "test", out,
      modality;
};

int run_eval(const EvalArgs& a) {
  RunConfig rc = base_config(a.config);
  if (!a.setting.empty()) rc.eval.setting = parse_setting(a.setting);
  if (!a.direction.empty()) rc.eval.direction = a.direction;
  if (!a.modality.empty()) rc.eval.modality = parse_modality(a.modality);
  const std::string& dir = rc.eval.direction;
  if (dir != "v2a" && dir != "a2v" && dir != "v2act")
    throw ConfigError("direction must be v2a, a2v or v2act");
  Checkpoint ck = load_checkpoint(require_path(a.ckpt, rc.paths.ckpt, "checkpoint"));
  const Dataset ds = load_dataset(require_path(a.data, rc.paths.data, "data directory"));
  check_vocabulary(ck.state.params, ds);
  auto samples = mask_modality(
      split_samples(ds, a.split, ck.state.params.config().window),
      rc.eval.modality, rc.eval.modality_split);

  ModelParams& params = ck.state.params;
  RetrievalIndex index(params);
  std::vector<Vector> emb;
  for (const auto& s : samples) emb.push_back(index.embed(s).embedding);
  std::ostringstream body;
  body << "direction\tsetting\tmetric\tvalue\n";
  auto put = [&](const std::string& metric, double v) {
    body << dir << '\t' << to_string(rc.eval.setting) << '\t' << metric << '\t'
         << format_double(v) << '\n';
  };
  if (dir == "v2a") {
    std::vector<Ranking> r;
    for (std::size_t i = 0; i < samples.size(); ++i)
      r.push_back(rank_video_to_adverb(index, samples[i], emb[i], rc.eval.setting));
    if (rc.eval.setting == Setting::antonym) put("p_at_1", antonym_p_at_1(r));
    put("map", mean_average_precision(r).value);
  } else if (dir == "a2v") {
    std::vector<Ranking> r;
    for (std::size_t m = 0; m < params.adverbs().size(); ++m) {
      const std::size_t anti = params.adverbs().antonym(m);
      const bool any = std::any_of(samples.begin(), samples.end(), [&](auto& s) {
        return s.adverb == m || s.adverb == anti;
      });
      if (rc.eval.setting == Setting::all || any)
        r.push_back(rank_adverb_to_video(index, m, samples, emb, rc.eval.setting));
    }
    put("map", mean_average_precision(r).value);
  } else {
    std::vector<Ranking> r;
    for (std::size_t i = 0; i < samples.size(); ++i)
      r.push_back(rank_video_to_action(index, samples[i], emb[i]));
    put("map", mean_average_precision(r).value);
  }
  put("samples", static_cast<double>(samples.size()));
  std::cout << body.str();
  if (!a.out.empty())
    write_text(a.out, header_lines("eval", to_json(rc)), body.str());
  return kOk;
}

struct ReportArgs {
  std::string config, ckpt, data, modality, split = "test", out,
      format = "table";
  bool per_adverb = false;
  bool baselines = false;
};

int run_report(const ReportArgs& a) {
  RunConfig rc = base_config(a.config);
  if (!a.modality.empty()) rc.eval.modality = parse_modality(a.modality);
  if (a.per_adverb) rc.eval.per_adverb = true;
  if (a.format != "table" && a.format != "tsv")
    throw ConfigError("format must be table or tsv");
  Checkpoint ck = load_checkpoint(require_path(a.ckpt, rc.paths.ckpt, "checkpoint"));
  const Dataset ds = load_dataset(require_path(a.data, rc.paths.data, "data directory"));
  check_vocabulary(ck.state.params, ds);
  const std::size_t window = ck.state.params.config().window;
  const auto samples = split_samples(ds, a.split, window);
  EvalOptions options{rc.eval.modality, rc.eval.modality_split,
                      rc.eval.per_adverb};
  const EvalReport report =
      evaluate(ck.state.params, samples, options, ds.ground_truth);
  std::string body = a.format == "tsv" ? format_report_tsv(report)
                                       : format_report_table(report);
  if (a.baselines) {
    const auto train = split_samples(ds, "train", window);
    const auto masked_train =
        mask_modality(train, rc.eval.modality, rc.eval.modality_split);
    const auto masked_test =
        mask_modality(samples, rc.eval.modality, rc.eval.modality_split);
    const Matrix xtr = average_features(masked_train);
    const Matrix xte = average_features(masked_test);
    std::vector<std::size_t> y;
    for (const auto& s : train) y.push_back(s.adverb);
    LinearSvm svm;
    svm.fit(xtr, y, ds.adverbs.size());
    MlpClassifier mlp;
    mlp.fit(xtr, y, ds.adverbs.size());
    std::ostringstream os;
    os << "\nbaseline\tv2a_antonym_p1\tv2a_all_map\ta2v_antonym_map\ta2v_all_map\n";
    for (const auto& [name, scores] :
         {std::pair{"classifier-svm", svm.scores(xte)},
          std::pair{"classifier-mlp", mlp.scores(xte)}}) {
      const EvalReport r = evaluate_scores(scores, masked_test, ds.adverbs);
      os << name << '\t' << format_double(r.v2a_antonym_p1) << '\t'
         << format_double(r.v2a_all_map) << '\t'
         << format_double(r.a2v_antonym_map) << '\t'
         << format_double(r.a2v_all_map) << '\n';
    }
    body += os.str();
  }
  std::cout << body;
  if (!a.out.empty()) write_text(a.out, header_lines("report", to_json(rc)), body);
  return kOk;
}

// ---- gradcheck -----------------------------------------------------------

struct GradCheckArgs {
  std::string config, modifier, attention, query;
  std::optional<std::uint64_t> seed;
  bool all_variants = false;
};

int run_gradcheck(const GradCheckArgs& a) {
  RunConfig rc = base_config(a.config);
  if (a.seed) rc.gradcheck.seed = *a.seed;
  if (!a.modifier.empty()) rc.model.modifier = parse_modifier_kind(a.modifier);
  if (!a.attention.empty())
    rc.model.attention = parse_attention_kind(a.attention);
  if (!a.query.empty()) rc.model.query = parse_query_kind(a.query);
  spdlog::info("resolved config: {}", one_line(to_json(rc)));

  std::vector<ModelConfig> variants;
  if (a.all_variants) {
    for (auto m : {ModifierKind::fixed_translation,
                   ModifierKind::learned_translation, ModifierKind::linear,
                   ModifierKind::nonlinear})
      for (auto at : {AttentionKind::single, AttentionKind::average,
                      AttentionKind::class_agnostic,
                      AttentionKind::class_specific, AttentionKind::sdp}) {
        ModelConfig mc = rc.model;
        mc.modifier = m;
        mc.attention = at;
        variants.push_back(mc);
      }
  } else {
    variants.push_back(rc.model);
  }
  bool ok = true;
  std::cout << "# actmod " << kVersion << " gradcheck\n";
  std::cout << "modifier\tattention\tquery\tparameter\tchecked\tmax_rel\tmax_abs\tstatus\n";
  for (const ModelConfig& mc : variants) {
    ToyProblem toy = make_toy_problem(rc.gradcheck, mc);
    const GradCheckReport r = check_toy_gradients(toy, rc.gradcheck);
    for (const auto& e : r.entries) {
      std::cout << to_string(mc.modifier) << '\t' << to_string(mc.attention)
                << '\t' << to_string(mc.query) << '\t' << e.name << '\t'
                << e.checked << '\t' << format_double(e.max_relative_error)
                << '\t' << format_double(e.max_absolute_error) << '\t'
                << (e.flagged ? "FAIL" : "ok") << '\n';
    }
    spdlog::info("{} / {}: max relative error {:.3e}", to_string(mc.modifier),
                 to_string(mc.attention), r.max_relative_error());
    ok = ok && r.passed();
  }
  if (!ok) {
    spdlog::error("gradient check failed (tolerance {})", rc.gradcheck.tolerance);
    return kNumeric;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Adverb-modified action embeddings: synthetic data, narration "
               "parsing, training and retrieval evaluation"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "write a planted synthetic dataset");
  g->add_option("--config", gen.config, "JSON run config");
  g->add_option("--out", gen.out, "output dataset directory");
  g->add_option("--seed", gen.seed, "synthetic seed");
  g->add_option("--noise-fraction", gen.noise_fraction,
                "fraction of training videos without the labelled action");
  g->add_option("--train-videos", gen.train_videos);
  g->add_option("--test-videos", gen.test_videos);

  ParseArgs par;
  auto* p = app.add_subcommand("parse", "extract (action, adverb, timestamp) "
                                        "annotations from tagged narrations");
  p->add_option("--rules", par.rules, "JSON extraction rules");
  p->add_option("--in", par.in, "tagged-token file or directory")->required();
  p->add_option("--out", par.out, "annotation file")->required();
  p->add_option("--split", par.split, "split tag written for every record");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "two-stage training");
  t->add_option("--config", tr.config, "JSON run config");
  t->add_option("--data", tr.data, "dataset directory");
  t->add_option("--out", tr.out, "checkpoint path");
  t->add_option("--resume", tr.resume, "continue from this checkpoint");
  t->add_option("--log", tr.log, "training log (default <out>.log.tsv)");
  t->add_option("--epochs", tr.epochs);
  t->add_option("--stage1-epochs", tr.stage1_epochs);
  t->add_option("--batch-size", tr.batch_size);
  t->add_option("--lr", tr.lr);
  t->add_option("--modifier-lr", tr.modifier_lr);
  t->add_option("--seed", tr.seed);
  t->add_option("--modifier", tr.modifier);
  t->add_option("--attention", tr.attention);
  t->add_option("--query", tr.query);
  t->add_option("--loss-mode", tr.loss_mode);
  t->add_flag("--wall-time", tr.wall_time, "include wall time in the log");
  t->add_flag("--snapshots", tr.snapshots,
              "keep a checkpoint per checkpoint epoch as <out>.epochN");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "one retrieval metric");
  e->add_option("--config", ev.config, "JSON run config");
  e->add_option("--ckpt", ev.ckpt, "checkpoint");
  e->add_option("--data", ev.data, "dataset directory");
  e->add_option("--setting", ev.setting, "all or antonym");
  e->add_option("--direction", ev.direction, "v2a, a2v or v2act");
  e->add_option("--modality", ev.modality, "both, appearance or motion");
  e->add_option("--split", ev.split, "annotation split to evaluate");
  e->add_option("--out", ev.out, "also write the result here");

  ReportArgs rep;
  auto* r = app.add_subcommand("report", "full evaluation report");
  r->add_option("--config", rep.config, "JSON run config");
  r->add_option("--ckpt", rep.ckpt, "checkpoint");
  r->add_option("--data", rep.data, "dataset directory");
  r->add_option("--modality", rep.modality, "both, appearance or motion");
  r->add_flag("--per-adverb", rep.per_adverb, "add the per-adverb breakdown");
  r->add_flag("--baselines", rep.baselines,
              "add classifier baselines trained on the train split");
  r->add_option("--split", rep.split, "annotation split to evaluate");
  r->add_option("--format", rep.format, "table or tsv");
  r->add_option("--out", rep.out, "also write the report here");

  GradCheckArgs gc;
  auto* c = app.add_subcommand("gradcheck", "finite-difference gradient check");
  c->add_option("--config", gc.config, "JSON run config");
  c->add_option("--seed", gc.seed);
  c->add_option("--modifier", gc.modifier);
  c->add_option("--attention", gc.attention);
  c->add_option("--query", gc.query);
  c->add_flag("--all-variants", gc.all_variants,
              "every modifier x attention combination");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*g) return run_generate(gen);
    if (*p) return run_parse(par);
    if (*t) return run_train(tr);
    if (*e) return run_eval(ev);
    if (*r) return run_report(rep);
    if (*c) return run_gradcheck(gc);
  } catch (const ConfigError& err) {
    spdlog::error("{}", err.what());
    return kUsage;
  } catch (const NumericError& err) {
    spdlog::error("{}", err.what());
    return kNumeric;
  } catch (const std::exception& err) {
    spdlog::error("{}", err.what());
    return kData;
  }
  return kUsage;
}
