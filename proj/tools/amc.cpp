#include <algorithm>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "amc/aef/ambiguity.hpp"
#include "amc/contrast/margin_loss.hpp"
#include "amc/geom/scene.hpp"
#include "amc/io/checkpoint.hpp"
#include "amc/io/cloud_file.hpp"
#include "amc/io/config.hpp"
#include "amc/io/export.hpp"
#include "amc/io/text.hpp"
#include "amc/metrics/metrics.hpp"
#include "amc/net/gradient_check.hpp"
#include "amc/net/model.hpp"
#include "amc/net/train.hpp"

namespace {

using namespace amc;

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitFailure = 2;

struct ConfigFlags {
  std::string config_path;
  std::vector<std::string> sets;
};

void add_config_flags(CLI::App& cmd, ConfigFlags& flags) {
  cmd.add_option("--config", flags.config_path, "Config file of key = value lines");
  cmd.add_option("--set", flags.sets, "Override one key, key=value (repeatable)")->allow_extra_args(false);
}

net::ModelConfig resolve_config(const ConfigFlags& flags, net::ModelConfig base = {}) {
  io::ConfigBuilder builder(std::move(base));
  if (!flags.config_path.empty()) {
    std::ifstream in(flags.config_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open config file " + flags.config_path);
    std::ostringstream text;
    text << in.rdbuf();
    builder.apply_text(text.str(), flags.config_path);
  }
  for (std::size_t i = 0; i < flags.sets.size(); ++i) {
    builder.apply_assignment(flags.sets[i], "--set", i + 1);
  }
  return builder.finish();
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

void close_output(std::ofstream& out, const std::string& path) {
  out.close();
  if (!out) throw std::runtime_error("failed writing " + path);
}

aef::AmbiguityMap label_ambiguity(const geom::PointCloud& cloud, const net::ModelConfig& cfg) {
  if (cloud.size() < 2) throw std::invalid_argument("ambiguity needs at least 2 points");
  return aef::ambiguity_map(cloud, cfg.aef(cloud.size()));
}

struct SynthArgs {
  std::string kind = "planar-boundary";
  std::size_t points_per_class = 1000;
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::size_t classes = 0;
  std::string out;
};

int run_synth(const SynthArgs& args) {
  geom::SceneSpec spec;
  spec.kind = geom::parse_scene_kind(args.kind);
  spec.points_per_class = args.points_per_class;
  spec.noise_sigma = args.noise;
  spec.seed = args.seed;
  spec.classes = args.classes;
  const geom::PointCloud cloud = geom::synth_scene(spec);
  io::write_cloud_file(args.out, cloud);
  std::printf("wrote %zu points, %zu classes to %s\n", cloud.size(), cloud.num_classes(), args.out.c_str());
  return kExitOk;
}

struct AmbiguityArgs {
  ConfigFlags config;
  std::string in;
  std::string out;
  std::string ply;
};

int run_ambiguity(const AmbiguityArgs& args) {
  const net::ModelConfig cfg = resolve_config(args.config);
  const geom::PointCloud cloud = io::read_cloud_file(args.in);
  const aef::AmbiguityMap amb = label_ambiguity(cloud, cfg);
  const contrast::MarginMap margins = contrast::margin_map(amb, cfg.margin());
  if (!args.out.empty()) {
    std::ofstream out = open_output(args.out);
    io::write_ambiguity_csv(out, cloud.positions(), amb.values, margins.values);
    close_output(out, args.out);
  } else {
    io::write_ambiguity_csv(std::cout, cloud.positions(), amb.values, margins.values);
  }
  if (!args.ply.empty()) io::write_ply_file(args.ply, cloud.positions(), amb.values);
  const auto ambiguous = std::count_if(amb.values.begin(), amb.values.end(), [](double a) { return a > 0.0; });
  std::fprintf(stderr, "%zu points, %zu with ambiguity > 0\n", cloud.size(), static_cast<std::size_t>(ambiguous));
  return kExitOk;
}

struct TrainArgs {
  ConfigFlags config;
  std::vector<std::string> inputs;
  std::string out;
  std::string history;
  std::size_t log_every = 10;
};

int run_train(const TrainArgs& args) {
  const net::ModelConfig cfg = resolve_config(args.config);
  std::vector<geom::PointCloud> scenes;
  for (const auto& path : args.inputs) scenes.push_back(io::read_cloud_file(path));
  std::size_t classes = 0;
  for (const auto& s : scenes) {
    if (s.feature_dim() != scenes.front().feature_dim()) {
      throw std::invalid_argument("training clouds must share the feature count");
    }
    classes = std::max(classes, s.num_classes());
  }
  for (auto& s : scenes) {
    if (s.num_classes() != classes) {
      std::optional<Matrix> features = s.features();
      s = geom::PointCloud(s.positions(), s.labels(), classes, std::move(features));
    }
  }

  net::Model model(cfg, scenes.front().feature_dim(), classes);
  std::printf("training %zu parameters on %zu scene(s), %zu classes\n", model.parameter_count(), scenes.size(),
              classes);
  const auto log = [&](const net::EpochReport& r, const net::Model&) {
    if (args.log_every > 0 && (r.epoch % args.log_every == 0 || r.epoch + 1 == cfg.epochs)) {
      std::printf("epoch %zu lr %s loss %s\n", r.epoch, io::format_real(r.lr, 6).c_str(),
                  io::format_real(r.loss.l_total, 6).c_str());
    }
  };
  const std::vector<net::EpochReport> history = net::train(model, scenes, log);

  if (!args.history.empty()) {
    std::ofstream out = open_output(args.history);
    out << "epoch,lr,loss,ce,am,reg\n";
    for (const auto& r : history) {
      const double am = std::accumulate(r.loss.l_am.begin(), r.loss.l_am.end(), 0.0);
      const double reg = std::accumulate(r.loss.l_reg.begin(), r.loss.l_reg.end(), 0.0);
      out << r.epoch << ',' << io::format_real(r.lr, 9) << ',' << io::format_real(r.loss.l_total, 9) << ','
          << io::format_real(r.loss.l_ce, 9) << ',' << io::format_real(am, 9) << ',' << io::format_real(reg, 9)
          << '\n';
    }
    close_output(out, args.history);
  }
  io::save_checkpoint(args.out, model);
  std::printf("saved %s\n", args.out.c_str());
  return kExitOk;
}

struct EvalArgs {
  ConfigFlags config;
  std::string model;
  std::string in;
  std::string out;
};

int run_eval(const EvalArgs& args) {
  net::Model model = io::load_checkpoint(args.model);
  const net::ModelConfig cfg = resolve_config(args.config, model.config());
  const geom::PointCloud cloud = io::read_cloud_file(args.in);
  const net::Prediction pred = net::predict(model, cloud);
  const aef::AmbiguityMap amb = label_ambiguity(cloud, cfg);

  const std::size_t classes = std::max(model.num_classes(), cloud.num_classes());
  const metrics::Scores overall = metrics::scores(metrics::confusion(pred.labels, cloud.labels(), classes));
  const auto bins = metrics::breakdown(pred.labels, cloud.labels(), amb.values, classes);
  if (!args.out.empty()) {
    std::ofstream out = open_output(args.out);
    io::write_breakdown_csv(out, overall, cloud.size(), bins);
    close_output(out, args.out);
  }
  io::write_breakdown_csv(std::cout, overall, cloud.size(), bins);
  return kExitOk;
}

struct PredictArgs {
  std::string model;
  std::string in;
  std::string out;
  std::string ply;
};

int run_predict(const PredictArgs& args) {
  net::Model model = io::load_checkpoint(args.model);
  const geom::PointCloud cloud = io::read_cloud_file(args.in);
  const net::Prediction pred = net::predict(model, cloud);
  if (!args.out.empty()) {
    std::ofstream out = open_output(args.out);
    io::write_prediction_csv(out, pred.labels, pred.ambiguity);
    close_output(out, args.out);
  } else {
    io::write_prediction_csv(std::cout, pred.labels, pred.ambiguity);
  }
  if (!args.ply.empty()) io::write_ply_file(args.ply, cloud.positions(), pred.ambiguity);
  return kExitOk;
}

struct GradcheckArgs {
  std::uint64_t seed = 0;
  std::size_t points = 48;
  double tolerance = 1e-4;
};

int run_gradcheck(const GradcheckArgs& args) {
  const net::ToyProblem toy = net::make_toy_problem(args.seed, args.points);
  const ad::GradCheckReport report = net::check_joint_gradient(toy.model, toy.plan);
  std::printf("parameters %zu\nmax relative error %s (parameter %zu: analytic %s, numeric %s)\n",
              toy.model.parameter_count(), io::format_real(report.max_rel_error, 6).c_str(), report.worst_index,
              io::format_real(report.analytic, 9).c_str(), io::format_real(report.numeric, 9).c_str());
  if (!(report.max_rel_error <= args.tolerance)) {
    std::printf("FAIL: above %s\n", io::format_real(args.tolerance, 6).c_str());
    return kExitFailure;
  }
  std::printf("ok\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ambiguity-aware adaptive-margin contrastive point cloud segmentation"};
  app.name("amc");
  app.require_subcommand(1, 1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a labeled synthetic scene");
  synth_cmd->add_option("--kind", synth.kind, "two-rooms | planar-boundary | checker-columns")->capture_default_str();
  synth_cmd->add_option("--points-per-class", synth.points_per_class)->capture_default_str();
  synth_cmd->add_option("--noise", synth.noise, "Gaussian position noise sigma")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed)->capture_default_str();
  synth_cmd->add_option("--classes", synth.classes, "0 selects the kind's default")->capture_default_str();
  synth_cmd->add_option("--out", synth.out)->required();

  AmbiguityArgs amb;
  auto* amb_cmd = app.add_subcommand("ambiguity", "Ambiguity and margin of every point of a labeled cloud");
  add_config_flags(*amb_cmd, amb.config);
  amb_cmd->add_option("--in", amb.in)->required();
  amb_cmd->add_option("--out", amb.out, "CSV output (stdout when omitted)");
  amb_cmd->add_option("--ply", amb.ply, "Colored PLY output");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
  add_config_flags(*train_cmd, train.config);
  train_cmd->add_option("--in", train.inputs, "Training cloud (repeatable)")->required()->allow_extra_args(false);
  train_cmd->add_option("--out", train.out, "Checkpoint path")->required();
  train_cmd->add_option("--history", train.history, "Per-epoch loss CSV");
  train_cmd->add_option("--log-every", train.log_every, "Epochs between progress lines, 0 for none")
      ->capture_default_str();

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Metrics and ambiguity-level breakdown on a labeled cloud");
  add_config_flags(*eval_cmd, eval.config);
  eval_cmd->add_option("--model", eval.model)->required();
  eval_cmd->add_option("--in", eval.in)->required();
  eval_cmd->add_option("--out", eval.out, "Breakdown CSV");

  PredictArgs predict;
  ConfigFlags predict_config;
  auto* predict_cmd = app.add_subcommand("predict", "Per-point labels and predicted ambiguity");
  add_config_flags(*predict_cmd, predict_config);
  predict_cmd->add_option("--model", predict.model)->required();
  predict_cmd->add_option("--in", predict.in)->required();
  predict_cmd->add_option("--out", predict.out, "CSV output (stdout when omitted)");
  predict_cmd->add_option("--ply", predict.ply, "PLY colored by predicted ambiguity");

  GradcheckArgs gradcheck;
  ConfigFlags gradcheck_config;
  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "Finite-difference check of the joint loss on a toy model");
  add_config_flags(*gradcheck_cmd, gradcheck_config);
  gradcheck_cmd->add_option("--seed", gradcheck.seed)->capture_default_str();
  gradcheck_cmd->add_option("--points", gradcheck.points, "Toy cloud size, 8 to 64")->capture_default_str();
  gradcheck_cmd->add_option("--tolerance", gradcheck.tolerance)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    if (app.get_subcommands().empty()) std::cerr << app.help();
    return kExitInvalid;
  }

  try {
    if (*synth_cmd) return run_synth(synth);
    if (*amb_cmd) return run_ambiguity(amb);
    if (*train_cmd) return run_train(train);
    if (*eval_cmd) return run_eval(eval);
    if (*predict_cmd) {
      // The network configuration comes from the checkpoint; flags are only
      // validated.
      resolve_config(predict_config);
      return run_predict(predict);
    }
    if (*gradcheck_cmd) {
      resolve_config(gradcheck_config);
      return run_gradcheck(gradcheck);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  std::cerr << app.help();
  return kExitInvalid;
}
