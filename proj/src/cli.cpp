#include "simcount/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>

#include "simcount/checkpoint.hpp"
#include "simcount/errors.hpp"
#include "simcount/experiments.hpp"
#include "simcount/run_config.hpp"
#include "simcount/task_io.hpp"
#include "simcount/tensor.hpp"
#include "simcount/threading.hpp"
#include "simcount/verify.hpp"

namespace simcount {

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
  std::string config_file;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool out_required) {
  cmd->add_option("--config", o.config_file, "INI file with key=value settings")->check(CLI::ExistingFile);
  cmd->add_option("--set", o.overrides, "Override one config key (key=value), repeatable");
  cmd->add_option("--seed", o.seed, "Random seed");
  auto* out = cmd->add_option("--out", o.out, "Output directory");
  if (out_required) out->required();
}

RunConfig resolve(const CommonOptions& o, const std::string& fallback_config = {}) {
  RunConfig cfg;
  if (!o.config_file.empty()) {
    cfg = RunConfig::load(o.config_file);
  } else if (!fallback_config.empty() && fs::exists(fallback_config)) {
    cfg = RunConfig::load(fallback_config);
  }
  for (const auto& kv : o.overrides) cfg.set_assignment(kv);
  if (o.seed) cfg.set("seed", std::to_string(*o.seed));
  return cfg;
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

Splits load_or_generate(const std::string& data_dir, const RunConfig& cfg) {
  if (data_dir.empty()) return make_splits(cfg.splits());
  Splits s;
  s.train = read_task_dir(fs::path(data_dir) / "train");
  s.val = read_task_dir(fs::path(data_dir) / "val");
  s.test = read_task_dir(fs::path(data_dir) / "test");
  return s;
}

int cmd_gen(const CommonOptions& o, std::optional<std::size_t> categories, std::optional<std::size_t> per_cat,
            bool distractors, std::ostream& out) {
  RunConfig cfg = resolve(o);
  if (categories) cfg.set_category_count(*categories);
  if (per_cat) cfg.set("per_cat", std::to_string(*per_cat));
  if (distractors) cfg.set("distractors", "1");
  const Splits splits = make_splits(cfg.splits());
  const fs::path root(o.out);
  std::size_t written = 0;
  for (const auto& [name, tasks] : {std::pair{"train", &splits.train}, std::pair{"val", &splits.val},
                                    std::pair{"test", &splits.test}}) {
    fs::create_directories(root / name);
    for (std::size_t i = 0; i < tasks->size(); ++i) {
      write_task(root / name / task_file_name(i), (*tasks)[i]);
      ++written;
    }
  }
  write_text(root / "config.ini", cfg.to_ini());
  out << "wrote " << written << " tasks (" << splits.train.size() << " train, " << splits.val.size() << " val, "
      << splits.test.size() << " test) to " << root.string() << '\n';
  return kExitOk;
}

int cmd_train(const CommonOptions& o, const std::string& data_dir, const std::string& variant,
              std::optional<std::size_t> epochs, std::ostream& out) {
  RunConfig cfg = resolve(o);
  if (!variant.empty()) cfg.apply_variant(variant);
  if (epochs) cfg.set("epochs", std::to_string(*epochs));
  const ModelConfig model = cfg.model();
  const TrainConfig train_cfg = cfg.train();
  const Splits splits = load_or_generate(data_dir, cfg);

  const TrainResult result = train(model, splits.train, train_cfg);
  const fs::path root(o.out);
  save_checkpoint(root / "checkpoint.simc", result.params);
  write_text(root / "loss_history.csv", loss_history_csv(result.history));
  write_text(root / "loss_history.json", loss_history_json(result.history));
  write_text(root / "config.ini", cfg.to_ini());
  out << "model: " << model.describe() << '\n';
  out << "trained " << result.history.size() << " steps, alpha=" << fmt("%.6g", result.alpha);
  if (!result.history.empty()) out << ", final count loss " << fmt("%.6g", result.history.back().count);
  out << '\n' << "checkpoint: " << (root / "checkpoint.simc").string() << '\n';
  return kExitOk;
}

int cmd_eval(const CommonOptions& o, const std::string& checkpoint, const std::string& tasks_dir,
             std::optional<std::size_t> exemplars, bool export_maps, std::ostream& out) {
  RunConfig cfg = resolve(o, (fs::path(checkpoint).parent_path() / "config.ini").string());
  if (exemplars) cfg.set("n_exemplars", std::to_string(*exemplars));
  const ModelConfig model = cfg.model();
  const std::size_t n = cfg.train().n_exemplars;
  ModelParams params = init_model(model, cfg.seed());
  restore_params(params, load_checkpoint(checkpoint));
  const std::vector<CountingTask> tasks = read_task_dir(tasks_dir);
  if (tasks.empty()) throw IoError("no task files in " + tasks_dir);

  const EvalReport report = evaluate(params, model, tasks, n, {.keep_maps = export_maps});
  const fs::path root(o.out);
  write_text(root / "eval_report.json", eval_report_json(report));
  write_text(root / "eval_report.csv", eval_report_csv(report));
  write_text(root / "config.ini", cfg.to_ini());
  if (export_maps) {
    for (const auto& rec : report.per_task) {
      char name[64];
      std::snprintf(name, sizeof name, "density_%05zu.csv", rec.task_id);
      write_map_csv(root / "maps" / name, rec.density);
      if (rec.similarity.defined()) {
        std::snprintf(name, sizeof name, "similarity_%05zu.csv", rec.task_id);
        write_map_csv(root / "maps" / name, rec.similarity);
      }
    }
  }
  out << "tasks=" << tasks.size() << " exemplars=" << n << " MAE=" << fmt("%.4f", report.mae)
      << " MSE=" << fmt("%.4f", report.mse) << " fingerprint=" << report.fingerprint << '\n';
  return kExitOk;
}

ExperimentData experiment_data(const std::string& data_dir, const std::string& split, const RunConfig& cfg) {
  Splits s = load_or_generate(data_dir, cfg);
  ExperimentData data;
  data.train = std::move(s.train);
  if (split == "val") {
    data.eval = std::move(s.val);
  } else if (split == "test") {
    data.eval = std::move(s.test);
  } else {
    throw ConfigError("--split must be val or test");
  }
  return data;
}

void print_rows(const std::vector<ExperimentRow>& rows, std::ostream& out) {
  for (const auto& r : rows) {
    out << r.name << "  MAE=" << fmt("%.4f", r.report.mae) << " MSE=" << fmt("%.4f", r.report.mse) << '\n';
  }
}

int cmd_ablate(const CommonOptions& o, const std::string& data_dir, const std::string& split, std::ostream& out) {
  const RunConfig cfg = resolve(o);
  const auto rows = run_ablation(default_ablation_matrix(), cfg.model(), cfg.train(),
                                 experiment_data(data_dir, split, cfg));
  const fs::path root(o.out);
  write_text(root / "ablation.csv", experiment_table_csv(rows));
  write_text(root / "ablation.json", experiment_table_json(rows));
  write_text(root / "config.ini", cfg.to_ini());
  print_rows(rows, out);
  return kExitOk;
}

int cmd_fusion_sweep(const CommonOptions& o, const std::string& data_dir, const std::string& split,
                     std::ostream& out) {
  const RunConfig cfg = resolve(o);
  const auto rows = run_fusion_sweep(cfg.model(), cfg.train(), experiment_data(data_dir, split, cfg));
  const fs::path root(o.out);
  write_text(root / "fusion_sweep.csv", experiment_table_csv(rows));
  write_text(root / "fusion_sweep.json", experiment_table_json(rows));
  write_text(root / "config.ini", cfg.to_ini());
  print_rows(rows, out);
  return kExitOk;
}

int cmd_verify(const CommonOptions& o, const std::string& fault, std::ostream& out) {
  const RunConfig cfg = resolve(o);
  set_gradient_fault(fault);
  VerifyReport report;
  try {
    report = run_verify();
  } catch (...) {
    set_gradient_fault("");
    throw;
  }
  set_gradient_fault("");
  const std::string text = format_verify_report(report);
  out << text;
  if (!o.out.empty()) {
    write_text(fs::path(o.out) / "verify_report.txt", text);
    write_text(fs::path(o.out) / "config.ini", cfg.to_ini());
  }
  if (!report.all_passed()) {
    if (!fault.empty()) out << "gradient fault injected into op '" << fault << "'\n";
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  configure_threads_from_env();
  CLI::App app{"Class-agnostic counting with bilinear matching on synthetic tasks", "simcount"};
  app.require_subcommand(1);

  CommonOptions gen_o, train_o, eval_o, ablate_o, sweep_o, verify_o;
  std::optional<std::size_t> categories, per_cat, epochs, exemplars;
  bool distractors = false, export_maps = false;
  std::string data_dir, variant, checkpoint, tasks_dir, split = "test", fault;

  auto* gen = app.add_subcommand("gen", "Generate train/val/test task files");
  add_common(gen, gen_o, true);
  gen->add_option("--categories", categories, "Number of categories (last two become val and test)");
  gen->add_option("--per-cat", per_cat, "Tasks per category");
  gen->add_flag("--distractors", distractors, "Add instances of another category to each image");

  auto* tr = app.add_subcommand("train", "Train a model and write a checkpoint");
  add_common(tr, train_o, true);
  tr->add_option("--data", data_dir, "Directory written by gen (generated in memory if omitted)");
  tr->add_option("--variant", variant, "Preset: bmnet or bmnet+")->check(CLI::IsMember({"bmnet", "bmnet+"}));
  tr->add_option("--epochs", epochs, "Training epochs");

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a directory of tasks");
  add_common(ev, eval_o, true);
  ev->add_option("--checkpoint", checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  ev->add_option("--tasks", tasks_dir, "Directory of task JSON files")->required()->check(CLI::ExistingDirectory);
  ev->add_option("--exemplars", exemplars, "Exemplars per task (1-3)");
  ev->add_flag("--export-maps", export_maps, "Write per-task density and similarity maps as CSV");

  auto* ab = app.add_subcommand("ablate", "Train and evaluate the SL/SS/SE/DSM ablation rows");
  add_common(ab, ablate_o, true);
  ab->add_option("--data", data_dir, "Directory written by gen");
  ab->add_option("--split", split, "Evaluation split: val or test");

  auto* fs_cmd = app.add_subcommand("fusion-sweep", "Train and evaluate each counter input mode");
  add_common(fs_cmd, sweep_o, true);
  fs_cmd->add_option("--data", data_dir, "Directory written by gen");
  fs_cmd->add_option("--split", split, "Evaluation split: val or test");

  auto* vf = app.add_subcommand("verify", "Gradient checks and numerical identities");
  add_common(vf, verify_o, false);
  vf->add_option("--inject-fault", fault, "Corrupt the backward pass of this op (testing aid)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen(gen_o, categories, per_cat, distractors, out);
    if (tr->parsed()) return cmd_train(train_o, data_dir, variant, epochs, out);
    if (ev->parsed()) return cmd_eval(eval_o, checkpoint, tasks_dir, exemplars, export_maps, out);
    if (ab->parsed()) return cmd_ablate(ablate_o, data_dir, split, out);
    if (fs_cmd->parsed()) return cmd_fusion_sweep(sweep_o, data_dir, split, out);
    if (vf->parsed()) return cmd_verify(verify_o, fault, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace simcount
