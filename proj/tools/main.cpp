#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctxf/config.hpp"
#include "ctxf/pipeline.hpp"

using namespace ctxf;

namespace {

// Views to operate on: the explicit flag wins, otherwise the config's list.
std::vector<std::string> selected_views(const std::string& flag,
                                        const pipeline::Experiment& exp,
                                        const char* stage) {
  if (!flag.empty()) return {flag};
  if (exp.views.empty())
    throw std::invalid_argument(std::string(stage) +
                                ": no view given; pass --view or set run.views");
  return exp.views;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"knowledge-graph-infused contrastive learning experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string seed_flag;
  std::string out_flag;
  app.add_option("--config", config_path, "experiment config file")
      ->type_name("PATH");
  app.add_option("--seed", seed_flag, "override run.seed")->type_name("N");
  app.add_option("--out", out_flag, "override run.out")->type_name("DIR");

  std::string kg_action;
  std::string view_flag;
  std::string method_flag;

  CLI::App* kg_cmd =
      app.add_subcommand("kg", "build, query, or summarize the knowledge graph");
  kg_cmd->fallthrough();
  kg_cmd->add_option("action", kg_action, "build | query | stats")->required();
  kg_cmd->add_option("--view", view_flag, "view to extract (query)");

  CLI::App* embed_cmd =
      app.add_subcommand("embed", "embed graph views and write similarity maps");
  embed_cmd->fallthrough();
  embed_cmd->add_option("--view", view_flag,
                        "single view (default: every configured view)");
  embed_cmd->add_option("--method", method_flag,
                        "gae | gat (default: embed.method)");

  CLI::App* train_cmd = app.add_subcommand(
      "train", "train every configured (mode, view) model and the baseline");
  train_cmd->fallthrough();
  CLI::App* eval_cmd = app.add_subcommand(
      "eval", "evaluate checkpoints and write accuracy/delta/similarity tables");
  eval_cmd->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    config::Config cfg;
    if (!config_path.empty()) cfg = config::Config::load(config_path);
    if (!seed_flag.empty()) cfg.set("run.seed", seed_flag);
    if (!out_flag.empty()) cfg.set("run.out", out_flag);
    const pipeline::Experiment exp = pipeline::load_experiment(cfg);

    if (kg_cmd->parsed()) {
      if (kg_action == "build") {
        pipeline::run_kg_build(exp);
        std::cout << "wrote " << pipeline::graph_path(exp) << "\n";
      } else if (kg_action == "query") {
        for (const std::string& v : selected_views(view_flag, exp, "kg query")) {
          pipeline::run_kg_query(exp, v);
          std::cout << "wrote " << pipeline::view_file_path(exp, v) << "\n";
        }
      } else if (kg_action == "stats") {
        std::cout << pipeline::graph_stats(pipeline::load_graph(exp));
      } else {
        throw std::invalid_argument("kg: unknown action '" + kg_action +
                                    "' (expected build, query, or stats)");
      }
    } else if (embed_cmd->parsed()) {
      const std::string method =
          method_flag.empty() ? exp.embed_method : method_flag;
      for (const std::string& v : selected_views(view_flag, exp, "embed")) {
        pipeline::run_embed(exp, v, method);
        std::cout << "wrote " << exp.out_dir << "/emb_" << v << "_" << method
                  << ".ctxe\n";
      }
    } else if (train_cmd->parsed()) {
      pipeline::run_train(exp, std::cout);
    } else if (eval_cmd->parsed()) {
      pipeline::run_eval(exp, std::cout);
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
