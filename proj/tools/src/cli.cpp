#include "l2g_tools/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <optional>

#include "l2g/checkpoint.hpp"
#include "l2g/config.hpp"
#include "l2g/dataset.hpp"
#include "l2g/errors.hpp"
#include "l2g/evaluation.hpp"
#include "l2g/mesh.hpp"
#include "l2g/synthetic.hpp"
#include "l2g/training.hpp"

namespace l2g::cli {
namespace fs = std::filesystem;

namespace {

struct UsageError : Error {
  using Error::Error;
};

struct IngestArgs {
  fs::path manifest;
  fs::path out;
  std::size_t points = 256;
  std::uint64_t seed = 0;
};

struct TrainArgs {
  fs::path data;
  fs::path config;
  fs::path out;
  std::vector<std::string> overrides;
  std::optional<std::size_t> threads;
  bool quiet = false;
};

struct EvalArgs {
  fs::path data;
  fs::path ckpt;
  std::string task;
  fs::path out;
  fs::path config;
  std::vector<std::string> overrides;
  std::optional<std::size_t> threads;
  std::optional<std::size_t> target;
  std::uint64_t seed = 0;
  std::size_t limit = 0;
};

struct SynthArgs {
  fs::path out;
  std::size_t train_per_class = 50;
  std::size_t test_per_class = 20;
  std::size_t points = 256;
  std::uint64_t seed = 0;
  double jitter = 0.01;
};

RunConfig load_config(const fs::path& path, const std::vector<std::string>& overrides,
                      std::optional<std::size_t> threads) {
  RunConfig cfg;
  if (!path.empty()) cfg = load_run_config(path);
  for (const auto& o : overrides) {
    const auto [k, v] = split_override(o);
    apply_setting(cfg, k, v);
  }
  if (threads) cfg.train.threads = *threads;
  if (cfg.train.threads == 0) throw InvalidInput("--threads must be positive");
  return cfg;
}

std::vector<const DatasetItem*> eval_items(const Dataset& data) {
  auto items = data.split(Split::Test);
  if (items.empty()) items = data.split(Split::Train);
  return items;
}

std::string fixed4(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << v;
  return os.str();
}

int cmd_ingest(const IngestArgs& a, std::ostream& out, std::ostream& err) {
  const auto entries = read_manifest(a.manifest);
  const auto result = ingest(entries, a.points, a.seed);
  for (const auto& e : result.errors) err << "skipped " << e.path.string() << ": " << e.message << '\n';
  if (a.out.has_parent_path()) fs::create_directories(a.out.parent_path());
  write_dataset(a.out, result.dataset);
  out << "wrote " << result.dataset.size() << " clouds x " << a.points << " points to "
      << a.out.string() << " (" << result.errors.size() << " skipped)\n";
  return kOk;
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
  auto cfg = load_config(a.config, a.overrides, a.threads);
  const auto data = read_dataset(a.data);
  if (data.points_per_cloud != cfg.model.num_points) {
    throw DataError("dataset has N=" + std::to_string(data.points_per_cloud) +
                    " but the model config expects " + describe_dimensions(cfg.model));
  }
  std::vector<PreparedCloud> prepared;
  for (const auto* item : data.split(Split::Train)) prepared.push_back(prepare(item->cloud, cfg.model, item->label));
  if (prepared.empty()) throw DataError("dataset has no training clouds");

  fs::create_directories(a.out);
  cfg.train.checkpoint_path = a.out / "model.ckpt";
  {
    std::ofstream cfg_out(a.out / "config.txt");
    write_run_config(cfg_out, cfg);
  }
  out << "training " << describe_dimensions(cfg.model) << " on " << prepared.size() << " clouds\n";
  std::vector<EpochRecord> history;
  const auto on_epoch = [&](const EpochRecord& r) {
    history.push_back(r);
    write_loss_csv(a.out / "loss.csv", history);
    if (!a.quiet) {
      out << "epoch " << r.epoch << " local " << r.local << " global " << r.global_ << " total "
          << r.total << " lr " << r.learning_rate << '\n';
    }
  };
  const auto result = train(prepared, cfg.model, cfg.train, on_epoch);
  write_loss_csv(a.out / "loss.csv", result.history);
  out << "checkpoint: " << cfg.train.checkpoint_path.string() << '\n';
  return kOk;
}

void eval_classify(const Model& model, const Dataset& data, const RunConfig& cfg, const fs::path& dir,
                   std::ostream& out) {
  const auto train_items = data.split(Split::Train);
  auto test_items = data.split(Split::Test);
  if (train_items.empty()) throw DataError("classify needs a training split");
  if (test_items.empty()) test_items = train_items;
  const auto train_table = extract_features(model, train_items, cfg.train.threads);
  const auto test_table = extract_features(model, test_items, cfg.train.threads);
  write_feature_csv(dir / "features_train.csv", train_table);
  write_feature_csv(dir / "features_test.csv", test_table);
  const auto svm = train_linear_svm(train_table, cfg.svm);
  const auto report = evaluate_classifier(svm, test_table);
  out << "accuracy: " << fixed4(report.accuracy) << '\n';
  std::ofstream csv(dir / "classify.csv");
  csv << "label,support,correct,predicted,recall\n";
  for (const auto& c : report.classes) {
    const double recall = c.support ? double(c.correct) / double(c.support) : 0.0;
    out << "  " << c.label << ": " << c.correct << "/" << c.support << " (" << fixed4(recall) << ")\n";
    csv << c.label << ',' << c.support << ',' << c.correct << ',' << c.predicted << ',' << recall << '\n';
  }
}

void eval_retrieve(const Model& model, const Dataset& data, const RunConfig& cfg, const fs::path& dir,
                   std::ostream& out) {
  const auto table = extract_features(model, eval_items(data), cfg.train.threads);
  write_feature_csv(dir / "features.csv", table);
  const auto result = retrieval_map(table);
  write_pr_csv(dir / "pr_curve.csv", result.pr_curve);
  std::ofstream csv(dir / "retrieval.csv");
  csv << std::setprecision(17) << "id,label,average_precision\n";
  for (std::size_t i = 0; i < table.size(); ++i)
    csv << table.ids[i] << ',' << table.labels[i] << ',' << result.average_precision[i] << '\n';
  out << "mAP: " << fixed4(result.mean_average_precision) << " over " << result.scored_queries
      << " queries\n";
}

void eval_upsample(const Model& model, const Dataset& data, const EvalArgs& a, const fs::path& dir,
                   std::ostream& out) {
  const std::size_t target = a.target.value_or(4 * model.config().num_points);
  auto items = eval_items(data);
  if (a.limit > 0 && items.size() > a.limit) items.resize(a.limit);
  std::ofstream csv(dir / "upsample.csv");
  csv << std::setprecision(17) << "id,points,chamfer_to_input\n";
  double total = 0.0;
  for (const auto* item : items) {
    const auto up = upsample(model, item->cloud, target, a.seed);
    write_xyz(dir / (item->cloud.id + "_up.xyz"), up.points);
    const double cd = chamfer_distance(up, item->cloud);
    total += cd;
    csv << item->cloud.id << ',' << up.size() << ',' << cd << '\n';
  }
  out << "upsampled " << items.size() << " clouds to " << target << " points, mCD "
      << fixed4(total / double(items.size())) << '\n';
}

// Maps are stored column-stochastic; the exported map has one row per output
// location so the column sums measure how much attention each input receives.
void eval_attention(const Model& model, const Dataset& data, const EvalArgs& a, const fs::path& dir,
                    std::ostream& out) {
  auto items = eval_items(data);
  if (a.limit > 0 && items.size() > a.limit) items.resize(a.limit);
  const auto& cfg = model.config();
  for (const auto* item : items) {
    const auto rec = reconstruct(model, item->cloud);
    const auto& id = item->cloud.id;
    if (cfg.region_attention) {
      const Matrix map = rec.attention.region.transposed();
      write_matrix_csv(dir / (id + "_region_attention.csv"), map);
      write_vector_csv(dir / (id + "_region_summary.csv"), attention_summary(map));
    }
    if (cfg.scale_attention) {
      std::ofstream csv(dir / (id + "_scale_summary.csv"));
      csv << std::setprecision(17) << "region,scale,value\n";
      for (std::size_t m = 0; m < rec.attention.scale.size(); ++m) {
        const auto s = attention_summary(rec.attention.scale[m].transposed());
        for (std::size_t t = 0; t < s.size(); ++t) csv << m << ',' << t << ',' << s[t] << '\n';
      }
    }
    if (cfg.point_attention) {
      std::ofstream csv(dir / (id + "_point_summary.csv"));
      csv << std::setprecision(17) << "region,scale,index,value\n";
      for (std::size_t k = 0; k < rec.attention.point.size(); ++k) {
        const auto s = attention_summary(rec.attention.point[k].transposed());
        for (std::size_t i = 0; i < s.size(); ++i)
          csv << k / cfg.num_scales() << ',' << k % cfg.num_scales() << ',' << i << ',' << s[i] << '\n';
      }
    }
  }
  if (!cfg.point_attention && !cfg.scale_attention && !cfg.region_attention)
    out << "model has no attention blocks\n";
  out << "wrote attention maps for " << items.size() << " clouds\n";
}

void eval_reconstruct(const Model& model, const Dataset& data, const EvalArgs& a, const fs::path& dir,
                      std::ostream& out) {
  auto items = eval_items(data);
  if (a.limit > 0 && items.size() > a.limit) items.resize(a.limit);
  std::ofstream csv(dir / "reconstruct.csv");
  csv << std::setprecision(17) << "id,local,global,total\n";
  double global_sum = 0.0;
  for (const auto* item : items) {
    const auto rec = reconstruct(model, item->cloud);
    const auto& id = item->cloud.id;
    write_xyz(dir / (id + "_recon.xyz"), rec.cloud.points);
    for (std::size_t t = 0; t < rec.areas.size(); ++t) {
      std::vector<Vec3> pts;
      for (const auto& area : rec.areas[t])
        for (std::size_t r = 0; r < area.rows(); ++r) pts.push_back({area(r, 0), area(r, 1), area(r, 2)});
      write_xyz(dir / (id + "_area_t" + std::to_string(t + 1) + ".xyz"), pts);
    }
    csv << id << ',' << rec.loss.local << ',' << rec.loss.global_ << ',' << rec.loss.total << '\n';
    global_sum += rec.loss.global_;
  }
  out << "reconstructed " << items.size() << " clouds, mean global Chamfer "
      << fixed4(global_sum / double(items.size())) << '\n';
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const auto cfg = load_config(a.config, a.overrides, a.threads);
  const auto data = read_dataset(a.data);
  const auto model = load_checkpoint(a.ckpt);
  check_compatible(model.config(), data.points_per_cloud);
  fs::create_directories(a.out);
  if (a.task == "classify") eval_classify(model, data, cfg, a.out, out);
  else if (a.task == "retrieve") eval_retrieve(model, data, cfg, a.out, out);
  else if (a.task == "upsample") eval_upsample(model, data, a, a.out, out);
  else if (a.task == "attention") eval_attention(model, data, a, a.out, out);
  else if (a.task == "reconstruct") eval_reconstruct(model, data, a, a.out, out);
  else throw UsageError("unknown task '" + a.task + "'");
  return kOk;
}

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  SyntheticShapeOptions opts;
  opts.jitter = a.jitter;
  const auto corpus = make_corpus(a.train_per_class, a.test_per_class, a.points, a.seed, opts);
  const auto manifest = write_corpus(a.out, corpus);
  out << "wrote " << corpus.size() << " clouds; manifest " << manifest.string() << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Point-cloud auto-encoder: ingest, train, evaluate"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  IngestArgs ingest_args;
  auto* ingest_cmd = app.add_subcommand("ingest", "Sample a manifest of OFF/XYZ files into a dataset file");
  ingest_cmd->add_option("--manifest", ingest_args.manifest, "CSV: path,format,label,split")->required();
  ingest_cmd->add_option("--out", ingest_args.out, "Dataset file to write")->required();
  ingest_cmd->add_option("--points", ingest_args.points, "Points per cloud")->capture_default_str();
  ingest_cmd->add_option("--seed", ingest_args.seed, "Sampling seed")->capture_default_str();

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train on the training split");
  train_cmd->add_option("--data", train_args.data, "Dataset file")->required();
  train_cmd->add_option("--config", train_args.config, "key = value config file");
  train_cmd->add_option("--out", train_args.out, "Output directory")->required();
  train_cmd->add_option("--set", train_args.overrides, "Override a config key (key=value)");
  train_cmd->add_option("--threads", train_args.threads, "Worker threads");
  train_cmd->add_flag("--quiet", train_args.quiet, "No per-epoch output");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval_cmd->add_option("--data", eval_args.data, "Dataset file")->required();
  eval_cmd->add_option("--ckpt", eval_args.ckpt, "Checkpoint file")->required();
  eval_cmd->add_option("--task", eval_args.task, "Evaluation task")
      ->required()
      ->check(CLI::IsMember({"classify", "retrieve", "upsample", "attention", "reconstruct"}));
  eval_cmd->add_option("--out", eval_args.out, "Output directory")->required();
  eval_cmd->add_option("--config", eval_args.config, "key = value config file (svm settings)");
  eval_cmd->add_option("--set", eval_args.overrides, "Override a config key (key=value)");
  eval_cmd->add_option("--threads", eval_args.threads, "Worker threads");
  eval_cmd->add_option("--target", eval_args.target, "Upsampling target size (default 4N)");
  eval_cmd->add_option("--seed", eval_args.seed, "Seed for upsampling FPS")->capture_default_str();
  eval_cmd->add_option("--limit", eval_args.limit, "Process at most this many clouds (0 = all)");

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic sphere/box/plane corpus with a manifest");
  synth_cmd->add_option("--out", synth_args.out, "Output directory")->required();
  synth_cmd->add_option("--train-per-class", synth_args.train_per_class)->capture_default_str();
  synth_cmd->add_option("--test-per-class", synth_args.test_per_class)->capture_default_str();
  synth_cmd->add_option("--points", synth_args.points)->capture_default_str();
  synth_cmd->add_option("--seed", synth_args.seed)->capture_default_str();
  synth_cmd->add_option("--jitter", synth_args.jitter)->capture_default_str();

  std::vector<const char*> argv;
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(int(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*ingest_cmd) return cmd_ingest(ingest_args, out, err);
    if (*train_cmd) return cmd_train(train_args, out);
    if (*eval_cmd) return cmd_eval(eval_args, out);
    if (*synth_cmd) return cmd_synth(synth_args, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericalError& e) {
    err << "numerical abort: " << e.what() << '\n';
    return kNumericalAbort;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}

}  // namespace l2g::cli
