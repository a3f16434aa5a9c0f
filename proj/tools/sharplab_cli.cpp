// Command-line front end: data preparation, training, sweeps and reports.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sharplab/closedform.hpp"
#include "sharplab/dataset.hpp"
#include "sharplab/error.hpp"
#include "sharplab/gradcheck.hpp"
#include "sharplab/model_io.hpp"
#include "sharplab/numkit.hpp"
#include "sharplab/records.hpp"
#include "sharplab/report.hpp"
#include "sharplab/sweep.hpp"
#include "sharplab/trainer.hpp"

namespace fs = std::filesystem;
using namespace sharplab;
using nlohmann::json;

namespace {

constexpr const char* kCacheName = "mnist7x7.bin";

std::string data_dir_default() {
  const char* env = std::getenv("SHARPLAB_DATA_DIR");
  return env ? env : "";
}

std::string cache_default() {
  const std::string dir = data_dir_default();
  return dir.empty() ? std::string() : (fs::path(dir) / kCacheName).string();
}

Dataset load_data(const std::string& path) {
  if (path.empty()) throw ConfigError("no dataset given; pass --data or set SHARPLAB_DATA_DIR");
  return load_cache(path);
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json train_config_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},     {"batch_size", c.batch_size}, {"lr0", c.lr0},
          {"lr_decay", c.lr_decay}, {"momentum", c.momentum},     {"divergence_threshold", c.divergence_threshold}};
}

struct PrepareArgs {
  std::string mnist_dir = data_dir_default();
  std::string out = cache_default();
  std::size_t train_size = 1000;
  std::uint64_t seed = 0;
  std::string csv;
};

void run_prepare(const PrepareArgs& a) {
  if (a.mnist_dir.empty()) throw ConfigError("no MNIST directory; pass --mnist-dir or set SHARPLAB_DATA_DIR");
  if (a.out.empty()) throw ConfigError("no output path; pass --out or set SHARPLAB_DATA_DIR");
  const Dataset data = prepare_mnist(a.mnist_dir, a.train_size, a.seed);
  save_cache(data, a.out);
  if (!a.csv.empty()) export_csv(data, a.csv);
  std::printf("wrote %s: %zu train, %zu test, seed %llu\n", a.out.c_str(), data.train_x.rows(),
              data.test_x.rows(), static_cast<unsigned long long>(a.seed));
}

struct TrainArgs {
  std::vector<std::size_t> arch = {49, 17, 10};
  std::string hidden = "tanh";
  std::string output = "softmax";
  std::string loss = "xent";
  TrainConfig cfg;
  std::string data = cache_default();
  std::string out = "model.bin";
  std::string history;
  std::size_t sharpness_cap = 1000;
};

void run_train(TrainArgs a) {
  const Dataset data = load_data(a.data);
  const LossKind loss = parse_loss(a.loss);
  a.cfg.validate();
  const std::uint64_t init_seed = derive_seed(a.cfg.seed, "init");
  const std::uint64_t master = a.cfg.seed;
  a.cfg.seed = derive_seed(master, "shuffle");
  Rng rng(init_seed);
  Mlp net = init_mlp(a.arch, parse_activation(a.hidden), parse_activation(a.output), rng);
  check_loss_pairing(net, loss);
  const TrainResult result = train(std::move(net), data, loss, a.cfg);

  const WeightNorm norm = weight_norm(result.net);
  const double sharp = sharpness(result.net, data.train_x, a.sharpness_cap);
  const Evaluation test = loss_and_accuracy(result.net, data.test_x, data.test_y_onehot, data.test_y, loss);
  const Evaluation tr = loss_and_accuracy(result.net, data.train_x, data.train_y_onehot, data.train_y, loss);
  json extra = {{"seed", master},
                {"seed_init", init_seed},
                {"seed_shuffle", a.cfg.seed},
                {"loss", std::string(to_string(loss))},
                {"train", train_config_json(a.cfg)},
                {"data_seed", data.seed},
                {"metrics",
                 {{"raw_norm", norm.raw_l2},
                  {"normalized_norm", norm.normalized},
                  {"sharpness", sharp},
                  {"test_acc", test.accuracy},
                  {"test_loss", test.mean_loss},
                  {"train_acc", tr.accuracy},
                  {"train_loss", tr.mean_loss}}}};
  save_model_with_metadata(result.net, a.out, extra);

  if (!a.history.empty()) {
    std::string csv = "epoch,train_loss,train_acc,learning_rate\n";
    char line[128];
    for (std::size_t e = 0; e < result.history.epochs_completed; ++e) {
      std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%.17g\n", e, result.history.train_loss[e],
                    result.history.train_accuracy[e], result.history.learning_rate[e]);
      csv += line;
    }
    write_text(a.history, csv);
  }
  std::printf("sharpness %.6g  norm %.6g (normalized %.6g)  test acc %.4f  test loss %.6g\n", sharp, norm.raw_l2,
              norm.normalized, test.accuracy, test.mean_loss);
}

struct SweepArgs {
  std::string family;
  std::string data = cache_default();
  std::uint64_t master_seed = 0;
  std::size_t workers = 1;
  std::string scale = "full";
  std::string out;
  std::size_t epochs = 0;
  std::string endpoint = "softmax";
};

void run_sweep(const SweepArgs& a) {
  const Dataset data = load_data(a.data);
  SweepConfig cfg = sweep_preset(parse_family(a.family), parse_scale(a.scale), a.master_seed);
  cfg.workers = a.workers;
  if (a.epochs > 0) {
    cfg.train.epochs = a.epochs;
    cfg.train.lr_decay = decay_for(a.epochs);
  }
  if (a.endpoint == "logits") {
    cfg.endpoint = JacobianEndpoint::logits;
  } else if (a.endpoint != "softmax") {
    throw ParameterError("unknown endpoint '" + a.endpoint + "' (expected softmax or logits)");
  }
  const auto records = run_family_sweep(data, cfg, [](const RunRecord& r) {
    std::fprintf(stderr, "depth %zu budget %.0f: %s sharpness %.4g test acc %.4f (%.1fs)\n", r.depth,
                 r.param_target, r.status.c_str(), r.sharpness, r.test_acc, r.wall_time_s);
  });
  write_runs(records, a.out);
  write_json(a.out + ".json", {{"command", "sweep"},
                               {"family", a.family},
                               {"scale", a.scale},
                               {"master_seed", a.master_seed},
                               {"depths", cfg.depths},
                               {"param_targets", cfg.param_targets},
                               {"sharpness_cap", cfg.sharpness_cap},
                               {"endpoint", a.endpoint},
                               {"data_seed", data.seed},
                               {"train", train_config_json(cfg.train)}});
  std::size_t ok = 0;
  for (const auto& r : records) ok += r.ok();
  std::printf("wrote %zu records (%zu ok) to %s\n", records.size(), ok, a.out.c_str());
}

struct LinearArgs {
  std::string data = cache_default();
  LinearSweepConfig cfg;
  std::string out;
};

void run_linear(const LinearArgs& a) {
  const Dataset data = load_data(a.data);
  const LinearSweepResult result = run_linear_sweep(data, a.cfg);
  write_runs(result.records, a.out);
  json dims = json::array();
  for (const auto& d : result.dims) {
    std::printf("dim %zu: rank %zu\n", d.dim, d.rank);
    dims.push_back({{"dim", d.dim}, {"rank", d.rank}, {"feature_seed", d.feature_seed}});
  }
  write_json(a.out + ".json", {{"command", "linear-sweep"},
                               {"seed", a.cfg.seed},
                               {"norm_min", a.cfg.norm_min},
                               {"norm_max", a.cfg.norm_max},
                               {"count", a.cfg.count},
                               {"tol", a.cfg.tol},
                               {"sharpness_cap", a.cfg.sample_cap},
                               {"data_seed", data.seed},
                               {"dims", dims}});
  std::printf("wrote %zu records to %s\n", result.records.size(), a.out.c_str());
}

struct ReportArgs {
  std::vector<std::string> inputs;
  std::string fig;
  std::string out;
  std::string json_out;
  std::string family;
};

void run_report(const ReportArgs& a) {
  std::vector<RunRecord> records;
  for (const auto& in : a.inputs) {
    auto part = read_runs(fs::path(in));
    records.insert(records.end(), part.begin(), part.end());
  }
  if (!a.family.empty()) {
    std::erase_if(records, [&](const RunRecord& r) { return r.family != a.family; });
    if (records.empty()) throw ParameterError("no records for family '" + a.family + "'");
  }
  const CorrelationTable table = correlation_report(records);
  if (!a.json_out.empty()) write_json(a.json_out, table.to_json());

  if (a.fig.empty()) {
    std::fputs(table.to_text().c_str(), stdout);
    return;
  }
  const auto figure = find_figure(a.fig);
  if (!figure) {
    std::string names;
    for (const auto& n : figure_names()) names += (names.empty() ? "" : ", ") + n;
    throw ParameterError("unknown figure '" + a.fig + "' (known: " + names + ")");
  }
  if (a.out.empty()) throw ConfigError("--out is required with --fig");
  write_text(a.out, render_figure(records, *figure));
  for (const auto& panel : figure->panels) {
    std::vector<double> xs, ys;
    for (const auto& r : records) {
      if (!r.ok()) continue;
      xs.push_back(numeric_field(r, panel.x_column));
      ys.push_back(numeric_field(r, panel.y_column));
    }
    std::printf("r(%s, %s) = %.4f  n = %zu\n", panel.x_column.c_str(), panel.y_column.c_str(), pearson(xs, ys),
                xs.size());
  }
}

int run_jacobian_check(std::uint64_t seed, std::size_t nets) {
  struct Case {
    const char* name;
    Activation hidden, output;
    LossKind loss;
  };
  const Case cases[] = {
      {"tanh_softmax_xent", Activation::tanh, Activation::softmax, LossKind::categorical_crossentropy},
      {"relu_softmax_xent", Activation::relu, Activation::softmax, LossKind::categorical_crossentropy},
      {"relu_linear_sq", Activation::relu, Activation::identity, LossKind::squared_error}};
  double worst = 0.0;
  for (const auto& c : cases) {
    const GradCheckResult r = run_gradient_check(c.hidden, c.output, c.loss, nets, derive_seed(seed, c.name));
    std::printf("%-18s nets %zu  max rel error: weights %.3e  biases %.3e  jacobian %.3e  (max abs diff %.3e)\n",
                c.name, r.nets, r.max_weight_error, r.max_bias_error, r.max_jacobian_error, r.max_abs_diff);
    worst = std::max(worst, r.max_error());
  }
  std::printf("max relative error %.3e (limit 1e-5)\n", worst);
  return worst <= 1e-5 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sharplab: output sharpness experiments on downsampled MNIST"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key = value file with option defaults");

  auto* data_cmd = app.add_subcommand("data", "dataset preparation");
  data_cmd->require_subcommand(1);
  PrepareArgs prep;
  auto* prepare = data_cmd->add_subcommand("prepare", "parse IDX files, downsample to 7x7 and split");
  prepare->add_option("--mnist-dir", prep.mnist_dir, "directory holding train-images-idx3-ubyte[.gz]");
  prepare->add_option("--out", prep.out, "cache file to write");
  prepare->add_option("--train-size", prep.train_size)->capture_default_str();
  prepare->add_option("--seed", prep.seed)->capture_default_str();
  prepare->add_option("--csv", prep.csv, "also export the pixel rows as CSV");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "train one network");
  train_cmd->add_option("--arch", tr.arch, "layer sizes, e.g. 49,17,10")->delimiter(',')->capture_default_str();
  train_cmd->add_option("--hidden", tr.hidden)->capture_default_str();
  train_cmd->add_option("--output", tr.output)->capture_default_str();
  train_cmd->add_option("--loss", tr.loss)->capture_default_str();
  train_cmd->add_option("--epochs", tr.cfg.epochs)->capture_default_str();
  train_cmd->add_option("--batch-size", tr.cfg.batch_size)->capture_default_str();
  train_cmd->add_option("--lr0", tr.cfg.lr0)->capture_default_str();
  train_cmd->add_option("--momentum", tr.cfg.momentum)->capture_default_str();
  auto* decay_opt = train_cmd->add_option("--lr-decay", tr.cfg.lr_decay, "per-epoch factor (default: lr0/100 at the end)");
  train_cmd->add_option("--seed", tr.cfg.seed)->capture_default_str();
  train_cmd->add_option("--data", tr.data, "dataset cache");
  train_cmd->add_option("--out", tr.out)->capture_default_str();
  train_cmd->add_option("--history", tr.history, "per-epoch CSV");
  train_cmd->add_option("--sharpness-cap", tr.sharpness_cap)->capture_default_str();

  SweepArgs sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "train a depth x budget grid for one family");
  sweep_cmd->add_option("--family", sw.family)->required();
  sweep_cmd->add_option("--data", sw.data, "dataset cache");
  sweep_cmd->add_option("--master-seed", sw.master_seed)->capture_default_str();
  sweep_cmd->add_option("--workers", sw.workers)->capture_default_str();
  sweep_cmd->add_option("--scale", sw.scale, "full or ci")->capture_default_str();
  sweep_cmd->add_option("--epochs", sw.epochs, "override the preset epoch count");
  sweep_cmd->add_option("--endpoint", sw.endpoint, "softmax or logits")->capture_default_str();
  sweep_cmd->add_option("--out", sw.out)->required();

  LinearArgs lin;
  auto* linear_cmd = app.add_subcommand("linear-sweep", "closed-form random-feature readouts");
  linear_cmd->add_option("--data", lin.data, "dataset cache");
  linear_cmd->add_option("--dims", lin.cfg.dims)->delimiter(',')->capture_default_str();
  linear_cmd->add_option("--norm-min", lin.cfg.norm_min)->capture_default_str();
  linear_cmd->add_option("--norm-max", lin.cfg.norm_max)->capture_default_str();
  linear_cmd->add_option("--count", lin.cfg.count)->capture_default_str();
  linear_cmd->add_option("--seed", lin.cfg.seed)->capture_default_str();
  linear_cmd->add_option("--out", lin.out)->required();

  ReportArgs rep;
  auto* report_cmd = app.add_subcommand("report", "correlations and scatter plots");
  report_cmd->add_option("--in", rep.inputs, "run CSV files")->required();
  report_cmd->add_option("--fig", rep.fig, "figure name");
  report_cmd->add_option("--out", rep.out, "SVG output");
  report_cmd->add_option("--json", rep.json_out, "correlation table as JSON");
  report_cmd->add_option("--family", rep.family, "only records of this family");

  std::uint64_t check_seed = 0;
  std::size_t check_nets = 20;
  auto* check_cmd = app.add_subcommand("jacobian-check", "finite-difference audit of gradients and Jacobians");
  check_cmd->add_option("--seed", check_seed)->capture_default_str();
  check_cmd->add_option("--nets", check_nets)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (prepare->parsed()) run_prepare(prep);
    if (train_cmd->parsed()) {
      if (decay_opt->count() == 0) tr.cfg.lr_decay = decay_for(tr.cfg.epochs);
      run_train(tr);
    }
    if (sweep_cmd->parsed()) run_sweep(sw);
    if (linear_cmd->parsed()) run_linear(lin);
    if (report_cmd->parsed()) run_report(rep);
    if (check_cmd->parsed()) return run_jacobian_check(check_seed, check_nets);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s: %s\n", e.kind().data(), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: internal: %s\n", e.what());
    return 1;
  }
  return 0;
}
