#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "citescope/runner.hpp"

namespace {

using citescope::runner::Options;

void add_common_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--seed", o.seed, "Base RNG seed");
  cmd->add_option("--out", o.out_dir, "Output directory");
}

void add_data_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--corpus", o.corpus, "Labeled corpus (JSONL)");
  cmd->add_option("--prov-corpus", o.prov_corpus,
                  "Provenance corpus (JSONL), for joint training");
  cmd->add_option("--embeddings", o.embeddings, "Pretrained word vectors (text format)");
  cmd->add_option("--dim", o.embedding_dim, "Word-vector dimension");
}

void add_model_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--epochs", o.epochs, "Training epochs");
  cmd->add_option("--batch-size", o.batch_size, "Minibatch size");
  cmd->add_option("--window", o.window, "Convolution window");
  cmd->add_option("--filters", o.filters, "Convolution filters");
  cmd->add_option("--lr", o.lr, "Learning rate");
}

int resolve_threads() {
  if (const char* env = std::getenv("CITESCOPE_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
    std::cerr << "citescope: ignoring invalid CITESCOPE_THREADS value\n";
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Citation function and provenance classification toolkit"};
  app.require_subcommand(1);
  Options o;
  o.threads = resolve_threads();

  CLI::App* build = app.add_subcommand("build-dataset", "Construct a corpus from raw inputs");
  build->add_option("--task", o.task, "function | provenance")->required();
  build->add_option("--papers", o.papers, "Directory of paper sentence files (*.txt)");
  build->add_option("--annotations", o.annotations, "Provenance annotations (JSONL)");
  build->add_option("--negatives-per-paper", o.negatives_per_paper,
                    "Negative samples per annotated paper");
  build->add_option("--sentiment-cutoff", o.sentiment_cutoff,
                    "Absolute valence threshold for candidate selection");
  add_common_flags(build, o);

  CLI::App* train = app.add_subcommand("train", "Train one model on a full corpus");
  train->add_option("--task", o.task, "function | provenance | mtl")->required();
  train->add_option("--model", o.model, "cnn | dcnn | mtl | nb-baseline | tree-baseline")
      ->required();
  add_data_flags(train, o);
  add_model_flags(train, o);
  add_common_flags(train, o);

  CLI::App* evaluate = app.add_subcommand("evaluate", "Cross-validated evaluation of one model");
  evaluate->add_option("--task", o.task, "function | provenance | mtl")->required();
  evaluate->add_option("--model", o.model, "cnn | dcnn | mtl | nb-baseline | tree-baseline")
      ->required();
  evaluate->add_option("--k", o.k, "Cross-validation folds");
  evaluate->add_option("--runs", o.runs, "Independent evaluation runs");
  add_data_flags(evaluate, o);
  add_model_flags(evaluate, o);
  add_common_flags(evaluate, o);

  CLI::App* compare = app.add_subcommand("compare", "Paired comparison of two models");
  compare->add_option("--task", o.task, "function | provenance")->required();
  compare->add_option("--model-a", o.model, "First model")->required();
  compare->add_option("--model-b", o.model_b, "Second model")->required();
  compare->add_option("--k", o.k, "Cross-validation folds");
  compare->add_option("--runs", o.runs, "Independent evaluation runs");
  add_data_flags(compare, o);
  add_model_flags(compare, o);
  add_common_flags(compare, o);

  CLI::App* predict = app.add_subcommand("predict", "Label new instances with a checkpoint");
  predict->add_option("--checkpoint", o.checkpoint, "Trained checkpoint (JSON)")->required();
  predict->add_option("--input", o.input, "Instances to label (JSONL)")->required();
  predict->add_option("--task", o.task, "Head to use for a multi-task checkpoint");
  add_data_flags(predict, o);
  add_common_flags(predict, o);

  CLI::App* gradcheck =
      app.add_subcommand("gradcheck", "Finite-difference verification of model gradients");
  gradcheck->add_option("--seed", o.seed, "Base RNG seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  o.command = app.get_subcommands().front()->get_name();

  // Model/task pairing is a usage error, not a runtime failure.
  if (o.command == "train" || o.command == "evaluate") {
    if (!citescope::runner::model_fits_task(o.model, o.task, false)) {
      std::cerr << "citescope: model '" << o.model << "' does not apply to task '" << o.task
                << "'\n";
      return 2;
    }
  } else if (o.command == "compare") {
    for (const std::string& m : {o.model, o.model_b}) {
      if (!citescope::runner::model_fits_task(m, o.task, true)) {
        std::cerr << "citescope: model '" << m << "' does not apply to task '" << o.task
                  << "'\n";
        return 2;
      }
    }
  }

  try {
    citescope::runner::run(o);
  } catch (const std::exception& e) {
    std::cerr << "citescope: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
