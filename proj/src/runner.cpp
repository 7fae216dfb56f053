#include "citescope/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "citescope/baselines.hpp"
#include "citescope/corpus.hpp"
#include "citescope/eval.hpp"
#include "citescope/io.hpp"
#include "citescope/models.hpp"
#include "citescope/nn_core.hpp"
#include "citescope/text_pipeline.hpp"

namespace citescope::runner {

namespace {

using models::Matrix;
using models::Vector;
using nlohmann::ordered_json;
using text_pipeline::EmbeddingTable;
using text_pipeline::Vocabulary;

constexpr const char* kToolName = "citescope";
constexpr const char* kToolVersion = "0.1.0";
constexpr int kWidthCap = 100;

// ---------------------------------------------------------------------------
// Manifest

ordered_json options_json(const Options& o) {
  ordered_json j;
  j["command"] = o.command;
  j["task"] = o.task;
  j["model"] = o.model;
  if (!o.model_b.empty()) j["model_b"] = o.model_b;
  j["corpus"] = o.corpus.string();
  j["prov_corpus"] = o.prov_corpus.string();
  j["papers"] = o.papers.string();
  j["annotations"] = o.annotations.string();
  j["embeddings"] = o.embeddings.string();
  j["out"] = o.out_dir.string();
  j["checkpoint"] = o.checkpoint.string();
  j["input"] = o.input.string();
  j["k"] = o.k;
  j["runs"] = o.runs;
  j["epochs"] = o.epochs;
  j["batch_size"] = o.batch_size;
  j["window"] = o.window;
  j["filters"] = o.filters;
  j["lr"] = o.lr;
  j["seed"] = o.seed;
  j["negatives_per_paper"] = o.negatives_per_paper;
  j["sentiment_cutoff"] = o.sentiment_cutoff;
  j["embedding_dim"] = o.embedding_dim;
  j["threads"] = o.threads;
  return j;
}

void write_manifest(const Options& o) {
  ordered_json j;
  j["tool"] = kToolName;
  j["version"] = kToolVersion;
  j["options"] = options_json(o);
  if (o.command == "evaluate" || o.command == "compare") {
    j["run_seeds"] = run_seeds(o.seed, o.runs);
  }
  io::write_file_atomic(o.out_dir / "manifest.json", j.dump(2) + "\n");
}

void require_file(const std::filesystem::path& p, const char* what) {
  if (p.empty()) throw std::runtime_error(std::string("missing required path for ") + what);
  if (!std::filesystem::exists(p)) {
    throw std::runtime_error(std::string(what) + " not found: " + p.string());
  }
}

// ---------------------------------------------------------------------------
// Dataset preparation

struct FunctionData {
  std::vector<corpus::FunctionInstance> instances;
  std::vector<std::vector<std::string>> tokens;  // citing-sentence tokens
  std::vector<int> labels;
};

FunctionData load_function_data(const std::filesystem::path& path) {
  FunctionData data;
  data.instances = corpus::load_function_corpus(path);
  if (data.instances.empty()) throw std::runtime_error("empty corpus: " + path.string());
  data.tokens.reserve(data.instances.size());
  data.labels.reserve(data.instances.size());
  for (const corpus::FunctionInstance& inst : data.instances) {
    data.tokens.push_back(text_pipeline::tokenize(inst.citing_sentence));
    data.labels.push_back(static_cast<int>(inst.label));
  }
  return data;
}

struct PairData {
  std::vector<corpus::ProvenanceInstance> instances;
  std::vector<std::vector<std::string>> citing_tokens;
  std::vector<std::vector<std::string>> fragment_tokens;
  std::vector<int> labels;
  std::vector<std::string> groups;  // cited paper ids, for grouped folds
};

PairData load_pair_data(const std::filesystem::path& path) {
  PairData data;
  data.instances = corpus::load_provenance_corpus(path);
  if (data.instances.empty()) throw std::runtime_error("empty corpus: " + path.string());
  for (const corpus::ProvenanceInstance& inst : data.instances) {
    data.citing_tokens.push_back(text_pipeline::tokenize(inst.citing_sentence));
    data.fragment_tokens.push_back(text_pipeline::tokenize(inst.fragment));
    data.labels.push_back(static_cast<int>(inst.label));
    data.groups.push_back(inst.cited_paper_id);
  }
  return data;
}

std::vector<std::vector<std::string>> gather_lists(
    const std::vector<std::vector<std::string>>& all, const std::vector<std::size_t>& idx) {
  std::vector<std::vector<std::string>> out;
  out.reserve(idx.size());
  for (const std::size_t i : idx) out.push_back(all[i]);
  return out;
}

// Vocabulary and width come from the training split only; every instance is
// then embedded against them (unknown test words fall to the zero vector).
struct EmbeddedSlot {
  int width = 0;
  std::vector<Matrix> xs;  // one per instance, dim x width
};

EmbeddedSlot embed_slot(const std::vector<std::vector<std::string>>& tokens,
                        const std::vector<std::size_t>& train, const Vocabulary& vocab,
                        const EmbeddingTable& table) {
  EmbeddedSlot slot;
  slot.width = text_pipeline::padded_length(gather_lists(tokens, train), kWidthCap);
  slot.xs.reserve(tokens.size());
  for (const std::vector<std::string>& list : tokens) {
    slot.xs.push_back(text_pipeline::embed_sequence(
        text_pipeline::encode_pad(list, vocab, slot.width), vocab, table));
  }
  return slot;
}

// Widths must admit at least one convolution window.
int clamp_width(int width, int window) { return std::max(width, window); }

// ---------------------------------------------------------------------------
// Train/predict factories (one cross-validation cell each)

eval::TrainPredictFn cnn_factory(const FunctionData& data, const EmbeddingTable& table,
                                 const Options& o) {
  return [&data, &table, o](const std::vector<std::size_t>& train,
                            const std::vector<std::size_t>& test, std::uint64_t seed) {
    const Vocabulary vocab = Vocabulary::build(gather_lists(data.tokens, train));
    EmbeddedSlot slot = embed_slot(data.tokens, train, vocab, table);
    slot.width = clamp_width(slot.width, o.window);

    std::vector<models::FunctionExample> examples;
    examples.reserve(train.size());
    for (const std::size_t i : train) {
      Matrix x = Matrix::Zero(table.dim(), slot.width);
      x.leftCols(slot.xs[i].cols()) = slot.xs[i];
      examples.push_back({std::move(x), data.labels[i]});
    }
    models::CnnModel model = models::make_cnn(o.filters, o.window, table.dim(), slot.width,
                                              corpus::kFunctionClassCount, seed);
    models::TrainConfig cfg;
    cfg.epochs = o.epochs;
    cfg.batch_size = o.batch_size;
    cfg.opt.lr = o.lr;
    cfg.seed = seed;
    models::train_cnn(model, examples, cfg);

    std::vector<int> preds;
    preds.reserve(test.size());
    for (const std::size_t i : test) {
      Matrix x = Matrix::Zero(table.dim(), slot.width);
      x.leftCols(slot.xs[i].cols()) = slot.xs[i];
      preds.push_back(models::argmax_class(models::cnn_probs(model, x)));
    }
    return preds;
  };
}

eval::TrainPredictFn nb_factory(const FunctionData& data) {
  return [&data](const std::vector<std::size_t>& train, const std::vector<std::size_t>& test,
                 std::uint64_t /*seed*/) {
    std::vector<corpus::FunctionInstance> train_instances;
    train_instances.reserve(train.size());
    for (const std::size_t i : train) train_instances.push_back(data.instances[i]);
    const std::vector<std::string> words = baselines::select_unigrams(train_instances, 300);

    std::vector<Eigen::VectorXd> xs;
    std::vector<int> ys;
    xs.reserve(train.size());
    ys.reserve(train.size());
    for (const std::size_t i : train) {
      xs.push_back(
          baselines::extract_function_features(data.instances[i], words).to_count_vector());
      ys.push_back(data.labels[i]);
    }
    const baselines::NaiveBayesModel model =
        baselines::nb_fit(xs, ys, corpus::kFunctionClassCount, 1.0);

    std::vector<int> preds;
    preds.reserve(test.size());
    for (const std::size_t i : test) {
      preds.push_back(baselines::nb_predict(
          model, baselines::extract_function_features(data.instances[i], words).to_count_vector()));
    }
    return preds;
  };
}

eval::TrainPredictFn tree_factory(const PairData& data) {
  // Similarity features are per-instance and training-independent; compute
  // them once up front.
  auto features = std::make_shared<std::vector<Eigen::VectorXd>>();
  features->reserve(data.instances.size());
  for (const corpus::ProvenanceInstance& inst : data.instances) {
    features->push_back(
        baselines::extract_provenance_features(inst.citation_context, inst.fragment).to_vector());
  }
  return [&data, features](const std::vector<std::size_t>& train,
                           const std::vector<std::size_t>& test, std::uint64_t /*seed*/) {
    std::vector<Eigen::VectorXd> xs;
    std::vector<int> ys;
    xs.reserve(train.size());
    ys.reserve(train.size());
    for (const std::size_t i : train) {
      xs.push_back((*features)[i]);
      ys.push_back(data.labels[i]);
    }
    baselines::TreeConfig cfg;
    cfg.tie_break_class = static_cast<int>(corpus::ProvenanceLabel::NonProv);
    const baselines::TreeModel model =
        baselines::tree_fit(xs, ys, corpus::kProvenanceClassCount, cfg);
    std::vector<int> preds;
    preds.reserve(test.size());
    for (const std::size_t i : test) preds.push_back(model.predict((*features)[i]));
    return preds;
  };
}

struct PairEmbeddings {
  EmbeddedSlot citing;
  EmbeddedSlot fragment;
};

PairEmbeddings embed_pair_data(const PairData& data, const std::vector<std::size_t>& train,
                               const EmbeddingTable& table, int window) {
  std::vector<std::vector<std::string>> train_lists = gather_lists(data.citing_tokens, train);
  {
    std::vector<std::vector<std::string>> frag = gather_lists(data.fragment_tokens, train);
    train_lists.insert(train_lists.end(), std::make_move_iterator(frag.begin()),
                       std::make_move_iterator(frag.end()));
  }
  const Vocabulary vocab = Vocabulary::build(train_lists);
  PairEmbeddings pe;
  pe.citing = embed_slot(data.citing_tokens, train, vocab, table);
  pe.fragment = embed_slot(data.fragment_tokens, train, vocab, table);
  pe.citing.width = clamp_width(pe.citing.width, window);
  pe.fragment.width = clamp_width(pe.fragment.width, window);
  return pe;
}

models::PairExample make_pair_example(const PairEmbeddings& pe, const PairData& data,
                                      std::size_t i, int dim) {
  Matrix c = Matrix::Zero(dim, pe.citing.width);
  c.leftCols(pe.citing.xs[i].cols()) = pe.citing.xs[i];
  Matrix f = Matrix::Zero(dim, pe.fragment.width);
  f.leftCols(pe.fragment.xs[i].cols()) = pe.fragment.xs[i];
  return models::PairExample{std::move(c), std::move(f), data.labels[i]};
}

eval::TrainPredictFn dcnn_factory(const PairData& data, const EmbeddingTable& table,
                                  const Options& o) {
  return [&data, &table, o](const std::vector<std::size_t>& train,
                            const std::vector<std::size_t>& test, std::uint64_t seed) {
    const PairEmbeddings pe = embed_pair_data(data, train, table, o.window);
    std::vector<models::PairExample> examples;
    examples.reserve(train.size());
    for (const std::size_t i : train) {
      examples.push_back(make_pair_example(pe, data, i, table.dim()));
    }
    models::DcnnModel model = models::make_dcnn(o.filters, o.window, table.dim(),
                                                pe.citing.width, pe.fragment.width, seed);
    models::TrainConfig cfg;
    cfg.epochs = o.epochs;
    cfg.batch_size = o.batch_size;
    cfg.opt.lr = o.lr;
    cfg.seed = seed;
    models::train_dcnn(model, examples, cfg);

    std::vector<int> preds;
    preds.reserve(test.size());
    for (const std::size_t i : test) {
      const models::PairExample ex = make_pair_example(pe, data, i, table.dim());
      preds.push_back(models::argmax_class(models::dcnn_probs(model, ex.citing, ex.fragment)));
    }
    return preds;
  };
}

// ---------------------------------------------------------------------------
// Joint MTL training for one cell

struct MtlCellInput {
  const FunctionData& fdata;
  const PairData& pdata;
  const EmbeddingTable& table;
  const Options& options;
};

struct MtlCellOutput {
  std::vector<int> function_preds;    // aligned with the function test indices
  std::vector<int> provenance_preds;  // aligned with the provenance test indices
};

MtlCellOutput mtl_train_cell(const MtlCellInput& in, const std::vector<std::size_t>& f_train,
                             const std::vector<std::size_t>& f_test,
                             const std::vector<std::size_t>& p_train,
                             const std::vector<std::size_t>& p_test, std::uint64_t seed) {
  const Options& o = in.options;
  // One shared vocabulary across every text slot seen in training.
  std::vector<std::vector<std::string>> train_lists = gather_lists(in.fdata.tokens, f_train);
  for (const std::size_t i : p_train) {
    train_lists.push_back(in.pdata.citing_tokens[i]);
    train_lists.push_back(in.pdata.fragment_tokens[i]);
  }
  const Vocabulary vocab = Vocabulary::build(train_lists);

  // The shared tower sees both tasks' citing sentences, so its width covers
  // both training slots.
  std::vector<std::vector<std::string>> citing_lists = gather_lists(in.fdata.tokens, f_train);
  for (const std::size_t i : p_train) citing_lists.push_back(in.pdata.citing_tokens[i]);
  const int w_citing =
      clamp_width(text_pipeline::padded_length(citing_lists, kWidthCap), o.window);
  const int w_fragment = clamp_width(
      text_pipeline::padded_length(gather_lists(in.pdata.fragment_tokens, p_train), kWidthCap),
      o.window);

  const auto embed_to = [&](const std::vector<std::string>& tokens, int width) {
    return text_pipeline::embed_sequence(text_pipeline::encode_pad(tokens, vocab, width), vocab,
                                         in.table);
  };

  std::vector<models::FunctionExample> f_examples;
  f_examples.reserve(f_train.size());
  for (const std::size_t i : f_train) {
    f_examples.push_back({embed_to(in.fdata.tokens[i], w_citing), in.fdata.labels[i]});
  }
  std::vector<models::PairExample> p_examples;
  p_examples.reserve(p_train.size());
  for (const std::size_t i : p_train) {
    p_examples.push_back({embed_to(in.pdata.citing_tokens[i], w_citing),
                          embed_to(in.pdata.fragment_tokens[i], w_fragment),
                          in.pdata.labels[i]});
  }

  models::MtlModel model =
      models::make_mtl(o.filters, o.window, in.table.dim(), w_citing, w_fragment, seed);
  models::TrainConfig cfg;
  cfg.epochs = o.epochs;
  cfg.batch_size = o.batch_size;
  cfg.opt.lr = o.lr;
  cfg.seed = seed;
  models::train_mtl(model, f_examples, p_examples, cfg);

  MtlCellOutput out;
  out.function_preds.reserve(f_test.size());
  for (const std::size_t i : f_test) {
    out.function_preds.push_back(
        models::argmax_class(models::mtl_function_probs(model, embed_to(in.fdata.tokens[i], w_citing))));
  }
  out.provenance_preds.reserve(p_test.size());
  for (const std::size_t i : p_test) {
    out.provenance_preds.push_back(models::argmax_class(models::mtl_provenance_probs(
        model, embed_to(in.pdata.citing_tokens[i], w_citing),
        embed_to(in.pdata.fragment_tokens[i], w_fragment))));
  }
  return out;
}

// mtl scored on one task inside a standard cross_validate: fold f of the
// primary task is trained jointly with fold f of the auxiliary task.
eval::TrainPredictFn mtl_side_factory(const std::string& side, const FunctionData& fdata,
                                      const PairData& pdata, const EmbeddingTable& table,
                                      const Options& o,
                                      const std::vector<corpus::Fold>& f_folds,
                                      const std::vector<corpus::Fold>& p_folds) {
  // Recover the fold index from the (unique) test-index list.
  auto test_to_fold = std::make_shared<std::map<std::vector<std::size_t>, std::size_t>>();
  const auto& primary = side == "function" ? f_folds : p_folds;
  for (std::size_t f = 0; f < primary.size(); ++f) (*test_to_fold)[primary[f].test] = f;

  return [side, &fdata, &pdata, &table, o, &f_folds, &p_folds, test_to_fold](
             const std::vector<std::size_t>& train, const std::vector<std::size_t>& test,
             std::uint64_t seed) {
    const auto it = test_to_fold->find(test);
    if (it == test_to_fold->end()) {
      throw std::runtime_error("mtl comparison: unrecognized fold");
    }
    const std::size_t f = it->second;
    MtlCellInput in{fdata, pdata, table, o};
    if (side == "function") {
      const MtlCellOutput out =
          mtl_train_cell(in, train, test, p_folds[f].train, p_folds[f].test, seed);
      return out.function_preds;
    }
    const MtlCellOutput out =
        mtl_train_cell(in, f_folds[f].train, f_folds[f].test, train, test, seed);
    return out.provenance_preds;
  };
}

// ---------------------------------------------------------------------------
// Joint MTL cross-validation (both tasks reported)

struct MtlCvResult {
  eval::CvResult function;
  eval::CvResult provenance;
};

void aggregate(const std::vector<double>& values, double& mean_out, double& std_out) {
  double mean = 0.0;
  for (const double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  if (values.size() > 1) {
    for (const double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(values.size() - 1);
  }
  mean_out = mean;
  std_out = std::sqrt(var);
}

void finalize_cv(eval::CvResult& r) {
  std::vector<double> ps, rs, fs;
  for (const eval::RunScores& run : r.runs) {
    ps.push_back(run.pooled.weighted_precision);
    rs.push_back(run.pooled.weighted_recall);
    fs.push_back(run.pooled.weighted_f1);
    r.fold_run_f1.insert(r.fold_run_f1.end(), run.fold_f1.begin(), run.fold_f1.end());
  }
  aggregate(ps, r.mean_precision, r.std_precision);
  aggregate(rs, r.mean_recall, r.std_recall);
  aggregate(fs, r.mean_f1, r.std_f1);
}

MtlCvResult mtl_cross_validate(const FunctionData& fdata, const PairData& pdata,
                               const EmbeddingTable& table, const Options& o,
                               const std::vector<corpus::Fold>& f_folds,
                               const std::vector<corpus::Fold>& p_folds,
                               const std::vector<std::uint64_t>& seeds) {
  const std::size_t n_folds = f_folds.size();
  const std::size_t n_cells = seeds.size() * n_folds;
  std::vector<MtlCellOutput> cells(n_cells);
  std::vector<std::string> errors(n_cells);

  const auto run_cell = [&](std::size_t cell) {
    const std::size_t r = cell / n_folds;
    const std::size_t f = cell % n_folds;
    try {
      MtlCellInput in{fdata, pdata, table, o};
      cells[cell] = mtl_train_cell(in, f_folds[f].train, f_folds[f].test, p_folds[f].train,
                                   p_folds[f].test, eval::cell_seed(seeds[r], f));
    } catch (const std::exception& e) {
      errors[cell] =
          "run " + std::to_string(r) + " fold " + std::to_string(f) + ": " + e.what();
    }
  };

  const int max_threads = std::min<int>(o.threads, static_cast<int>(n_cells));
  if (max_threads > 1) {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < max_threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t c = next.fetch_add(1); c < n_cells; c = next.fetch_add(1)) run_cell(c);
      });
    }
    for (std::thread& t : pool) t.join();
  } else {
    for (std::size_t c = 0; c < n_cells; ++c) run_cell(c);
  }
  for (const std::string& e : errors) {
    if (!e.empty()) throw std::runtime_error("cross-validation: " + e);
  }

  MtlCvResult result;
  for (std::size_t r = 0; r < seeds.size(); ++r) {
    eval::RunScores f_run, p_run;
    std::vector<int> f_gold, f_pred, p_gold, p_pred;
    for (std::size_t f = 0; f < n_folds; ++f) {
      const MtlCellOutput& cell = cells[r * n_folds + f];
      std::vector<int> fold_gold;
      for (const std::size_t i : f_folds[f].test) fold_gold.push_back(fdata.labels[i]);
      f_run.fold_f1.push_back(
          eval::weighted_prf(fold_gold, cell.function_preds, corpus::kFunctionClassCount)
              .weighted_f1);
      f_gold.insert(f_gold.end(), fold_gold.begin(), fold_gold.end());
      f_pred.insert(f_pred.end(), cell.function_preds.begin(), cell.function_preds.end());

      fold_gold.clear();
      for (const std::size_t i : p_folds[f].test) fold_gold.push_back(pdata.labels[i]);
      p_run.fold_f1.push_back(
          eval::weighted_prf(fold_gold, cell.provenance_preds, corpus::kProvenanceClassCount)
              .weighted_f1);
      p_gold.insert(p_gold.end(), fold_gold.begin(), fold_gold.end());
      p_pred.insert(p_pred.end(), cell.provenance_preds.begin(), cell.provenance_preds.end());
    }
    f_run.pooled = eval::weighted_prf(f_gold, f_pred, corpus::kFunctionClassCount);
    p_run.pooled = eval::weighted_prf(p_gold, p_pred, corpus::kProvenanceClassCount);
    result.function.runs.push_back(std::move(f_run));
    result.provenance.runs.push_back(std::move(p_run));
  }
  finalize_cv(result.function);
  finalize_cv(result.provenance);
  return result;
}

// ---------------------------------------------------------------------------
// Shared pieces for evaluate / compare

EmbeddingTable load_table(const Options& o) {
  require_file(o.embeddings, "--embeddings");
  return EmbeddingTable::load(o.embeddings, o.embedding_dim);
}

bool model_is_neural(const std::string& m) { return m == "cnn" || m == "dcnn" || m == "mtl"; }

eval::TrainPredictFn make_factory(const std::string& model, const std::string& task,
                                  const FunctionData* fdata, const PairData* pdata,
                                  const EmbeddingTable* table, const Options& o,
                                  const std::vector<corpus::Fold>& f_folds,
                                  const std::vector<corpus::Fold>& p_folds) {
  if (model == "cnn") return cnn_factory(*fdata, *table, o);
  if (model == "nb-baseline") return nb_factory(*fdata);
  if (model == "dcnn") return dcnn_factory(*pdata, *table, o);
  if (model == "tree-baseline") return tree_factory(*pdata);
  if (model == "mtl") return mtl_side_factory(task, *fdata, *pdata, *table, o, f_folds, p_folds);
  throw std::runtime_error("unknown model: " + model);
}

// ---------------------------------------------------------------------------
// Subcommands

void run_build_dataset(const Options& o) {
  if (o.task == "provenance") {
    require_file(o.papers, "--papers");
    require_file(o.annotations, "--annotations");
    const auto papers = corpus::load_papers_dir(o.papers);
    const auto annotations = corpus::load_provenance_annotations(o.annotations);
    corpus::ProvenanceDatasetStats stats;
    const std::vector<corpus::ProvenanceInstance> dataset = corpus::build_provenance_dataset(
        papers, annotations, o.negatives_per_paper, o.seed, &stats);
    corpus::save_provenance_corpus(o.out_dir / "provenance_corpus.jsonl", dataset);
    ordered_json sj;
    sj["positives"] = stats.positives;
    sj["negatives"] = stats.negatives;
    sj["papers"] = stats.papers;
    sj["total"] = stats.positives + stats.negatives;
    io::write_file_atomic(o.out_dir / "dataset_stats.json", sj.dump(2) + "\n");
  } else if (o.task == "function") {
    require_file(o.papers, "--papers");
    const auto papers = corpus::load_papers_dir(o.papers);
    std::vector<corpus::ScoredSentence> scored;
    for (const auto& [paper_id, paper] : papers) {
      for (const auto& [index, text] : paper.sentences) {
        if (text.empty()) continue;
        scored.push_back(corpus::ScoredSentence{paper_id, index, text,
                                                corpus::lexicon_valence_score(text)});
      }
    }
    const std::vector<corpus::CandidateSentence> candidates =
        corpus::select_candidates(scored, corpus::default_cue_table(), o.sentiment_cutoff);
    std::string body;
    for (const corpus::CandidateSentence& c : candidates) {
      ordered_json j;
      j["paper_id"] = c.sentence.paper_id;
      j["sentence_index"] = c.sentence.sentence_index;
      j["text"] = c.sentence.text;
      j["score"] = c.sentence.score;
      j["reasons"] = c.reasons;
      body += j.dump();
      body += '\n';
    }
    io::write_file_atomic(o.out_dir / "candidates.jsonl", body);
  } else {
    throw std::runtime_error("build-dataset requires --task function or provenance");
  }
  write_manifest(o);
}

ordered_json meta_common(const Options& o, const Vocabulary& vocab) {
  ordered_json meta;
  meta["dim"] = o.embedding_dim;
  meta["window"] = o.window;
  meta["filters"] = o.filters;
  meta["vocabulary"] = vocab.words();
  return meta;
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<double>& losses) {
  std::ostringstream csv;
  csv << "epoch,mean_loss\n";
  csv.precision(17);
  for (std::size_t e = 0; e < losses.size(); ++e) csv << (e + 1) << ',' << losses[e] << '\n';
  io::write_file_atomic(path, csv.str());
}

void run_train(const Options& o) {
  require_file(o.corpus, "--corpus");
  models::CheckpointDoc doc;
  std::vector<std::size_t> all;

  if (o.task == "function") {
    const FunctionData data = load_function_data(o.corpus);
    all.resize(data.instances.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;

    if (o.model == "cnn") {
      const EmbeddingTable table = load_table(o);
      const Vocabulary vocab = Vocabulary::build(data.tokens);
      EmbeddedSlot slot = embed_slot(data.tokens, all, vocab, table);
      slot.width = clamp_width(slot.width, o.window);
      std::vector<models::FunctionExample> examples;
      for (std::size_t i = 0; i < all.size(); ++i) {
        Matrix x = Matrix::Zero(table.dim(), slot.width);
        x.leftCols(slot.xs[i].cols()) = slot.xs[i];
        examples.push_back({std::move(x), data.labels[i]});
      }
      models::CnnModel model = models::make_cnn(o.filters, o.window, table.dim(), slot.width,
                                                corpus::kFunctionClassCount, o.seed);
      models::TrainConfig cfg{o.epochs, o.batch_size, {o.lr, 0.9, 1e-8}, o.seed};
      const models::TrainHistory history = models::train_cnn(model, examples, cfg);
      write_loss_csv(o.out_dir / "loss.csv", history.epoch_mean_loss);

      doc.kind = "cnn";
      doc.meta = meta_common(o, vocab);
      doc.meta["task"] = "function";
      doc.meta["input_width"] = slot.width;
      doc.meta["classes"] = {"Weak", "CoCo", "Pos", "Neut"};
      doc.tensors = models::cnn_tensors(model);
    } else if (o.model == "nb-baseline") {
      const std::vector<std::string> words = baselines::select_unigrams(data.instances, 300);
      std::vector<Eigen::VectorXd> xs;
      for (const corpus::FunctionInstance& inst : data.instances) {
        xs.push_back(baselines::extract_function_features(inst, words).to_count_vector());
      }
      const baselines::NaiveBayesModel model =
          baselines::nb_fit(xs, data.labels, corpus::kFunctionClassCount, 1.0);
      doc.kind = "nb";
      doc.meta["task"] = "function";
      doc.meta["classes"] = {"Weak", "CoCo", "Pos", "Neut"};
      doc.meta["unigram_words"] = words;
      doc.tensors["log_priors"] = model.log_priors;
      doc.tensors["log_likelihood"] = model.log_likelihood;
    } else {
      throw std::runtime_error("task function supports models cnn and nb-baseline");
    }
  } else if (o.task == "provenance") {
    const PairData data = load_pair_data(o.corpus);
    all.resize(data.instances.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;

    if (o.model == "dcnn") {
      const EmbeddingTable table = load_table(o);
      const PairEmbeddings pe = embed_pair_data(data, all, table, o.window);
      std::vector<models::PairExample> examples;
      for (std::size_t i = 0; i < all.size(); ++i) {
        examples.push_back(make_pair_example(pe, data, i, table.dim()));
      }
      models::DcnnModel model = models::make_dcnn(o.filters, o.window, table.dim(),
                                                  pe.citing.width, pe.fragment.width, o.seed);
      models::TrainConfig cfg{o.epochs, o.batch_size, {o.lr, 0.9, 1e-8}, o.seed};
      const models::TrainHistory history = models::train_dcnn(model, examples, cfg);
      write_loss_csv(o.out_dir / "loss.csv", history.epoch_mean_loss);

      std::vector<std::vector<std::string>> lists = data.citing_tokens;
      lists.insert(lists.end(), data.fragment_tokens.begin(), data.fragment_tokens.end());
      doc.kind = "dcnn";
      doc.meta = meta_common(o, Vocabulary::build(lists));
      doc.meta["task"] = "provenance";
      doc.meta["width_citing"] = pe.citing.width;
      doc.meta["width_fragment"] = pe.fragment.width;
      doc.meta["classes"] = {"Prov", "NonProv"};
      doc.tensors = models::dcnn_tensors(model);
    } else if (o.model == "tree-baseline") {
      std::vector<Eigen::VectorXd> xs;
      for (const corpus::ProvenanceInstance& inst : data.instances) {
        xs.push_back(
            baselines::extract_provenance_features(inst.citation_context, inst.fragment)
                .to_vector());
      }
      baselines::TreeConfig tcfg;
      tcfg.tie_break_class = static_cast<int>(corpus::ProvenanceLabel::NonProv);
      const baselines::TreeModel model =
          baselines::tree_fit(xs, data.labels, corpus::kProvenanceClassCount, tcfg);
      doc.kind = "tree";
      doc.meta["task"] = "provenance";
      doc.meta["classes"] = {"Prov", "NonProv"};
      ordered_json nodes = ordered_json::array();
      for (const baselines::TreeNode& n : model.nodes) {
        nodes.push_back({{"feature", n.feature},
                         {"threshold", n.threshold},
                         {"left", n.left},
                         {"right", n.right},
                         {"prediction", n.prediction},
                         {"class_counts", n.class_counts}});
      }
      doc.meta["nodes"] = std::move(nodes);
    } else {
      throw std::runtime_error("task provenance supports models dcnn and tree-baseline");
    }
  } else if (o.task == "mtl") {
    if (o.model != "mtl") throw std::runtime_error("task mtl supports model mtl only");
    require_file(o.prov_corpus, "--prov-corpus");
    const FunctionData fdata = load_function_data(o.corpus);
    const PairData pdata = load_pair_data(o.prov_corpus);
    const EmbeddingTable table = load_table(o);

    std::vector<std::vector<std::string>> lists = fdata.tokens;
    lists.insert(lists.end(), pdata.citing_tokens.begin(), pdata.citing_tokens.end());
    lists.insert(lists.end(), pdata.fragment_tokens.begin(), pdata.fragment_tokens.end());
    const Vocabulary vocab = Vocabulary::build(lists);

    std::vector<std::vector<std::string>> citing_lists = fdata.tokens;
    citing_lists.insert(citing_lists.end(), pdata.citing_tokens.begin(),
                        pdata.citing_tokens.end());
    const int w_citing =
        clamp_width(text_pipeline::padded_length(citing_lists, kWidthCap), o.window);
    const int w_fragment =
        clamp_width(text_pipeline::padded_length(pdata.fragment_tokens, kWidthCap), o.window);
    const auto embed_to = [&](const std::vector<std::string>& tokens, int width) {
      return text_pipeline::embed_sequence(text_pipeline::encode_pad(tokens, vocab, width),
                                           vocab, table);
    };
    std::vector<models::FunctionExample> f_examples;
    for (std::size_t i = 0; i < fdata.instances.size(); ++i) {
      f_examples.push_back({embed_to(fdata.tokens[i], w_citing), fdata.labels[i]});
    }
    std::vector<models::PairExample> p_examples;
    for (std::size_t i = 0; i < pdata.instances.size(); ++i) {
      p_examples.push_back({embed_to(pdata.citing_tokens[i], w_citing),
                            embed_to(pdata.fragment_tokens[i], w_fragment), pdata.labels[i]});
    }
    models::MtlModel model =
        models::make_mtl(o.filters, o.window, table.dim(), w_citing, w_fragment, o.seed);
    models::TrainConfig cfg{o.epochs, o.batch_size, {o.lr, 0.9, 1e-8}, o.seed};
    const models::MtlTrainHistory history = models::train_mtl(model, f_examples, p_examples, cfg);
    write_loss_csv(o.out_dir / "loss.csv", history.epoch_mean_loss);

    doc.kind = "mtl";
    doc.meta = meta_common(o, vocab);
    doc.meta["task"] = "mtl";
    doc.meta["width_citing"] = w_citing;
    doc.meta["width_fragment"] = w_fragment;
    doc.meta["classes_function"] = {"Weak", "CoCo", "Pos", "Neut"};
    doc.meta["classes_provenance"] = {"Prov", "NonProv"};
    doc.tensors = models::mtl_tensors(model);
  } else {
    throw std::runtime_error("unknown task: " + o.task);
  }

  models::save_checkpoint(o.out_dir / "checkpoint.json", doc);
  write_manifest(o);
}

void run_evaluate(const Options& o) {
  require_file(o.corpus, "--corpus");
  const std::vector<std::uint64_t> seeds = run_seeds(o.seed, o.runs);

  if (o.task == "mtl") {
    if (o.model != "mtl") throw std::runtime_error("task mtl supports model mtl only");
    require_file(o.prov_corpus, "--prov-corpus");
    const FunctionData fdata = load_function_data(o.corpus);
    const PairData pdata = load_pair_data(o.prov_corpus);
    const EmbeddingTable table = load_table(o);
    const auto f_folds = corpus::kfold(fdata.instances.size(), o.k, o.seed);
    const auto p_folds = corpus::grouped_kfold(pdata.groups, o.k, o.seed);
    const MtlCvResult cv = mtl_cross_validate(fdata, pdata, table, o, f_folds, p_folds, seeds);

    eval::EvalReport f_report{"function", {"mtl"}, {cv.function}, std::nullopt};
    eval::EvalReport p_report{"provenance", {"mtl"}, {cv.provenance}, std::nullopt};
    ordered_json j;
    j["task"] = "mtl";
    j["function"] = eval::report_json(f_report);
    j["provenance"] = eval::report_json(p_report);
    io::write_file_atomic(o.out_dir / "metrics.json", j.dump(2) + "\n");
    io::write_file_atomic(o.out_dir / "report.txt",
                          eval::report_table(f_report) + "\n" + eval::report_table(p_report));
    write_manifest(o);
    return;
  }

  // Single-task evaluation.
  std::optional<FunctionData> fdata;
  std::optional<PairData> pdata;
  std::optional<EmbeddingTable> table;
  std::vector<corpus::Fold> folds;
  std::vector<int> gold;
  int n_classes = 0;

  if (o.task == "function") {
    fdata.emplace(load_function_data(o.corpus));
    folds = corpus::kfold(fdata->instances.size(), o.k, o.seed);
    gold = fdata->labels;
    n_classes = corpus::kFunctionClassCount;
  } else if (o.task == "provenance") {
    pdata.emplace(load_pair_data(o.corpus));
    folds = corpus::grouped_kfold(pdata->groups, o.k, o.seed);
    gold = pdata->labels;
    n_classes = corpus::kProvenanceClassCount;
  } else {
    throw std::runtime_error("unknown task: " + o.task);
  }
  if (model_is_neural(o.model)) table.emplace(load_table(o));

  const eval::TrainPredictFn fn =
      make_factory(o.model, o.task, fdata ? &*fdata : nullptr, pdata ? &*pdata : nullptr,
                   table ? &*table : nullptr, o, {}, {});
  const eval::CvResult cv = eval::cross_validate(fn, gold, n_classes, folds, seeds, o.threads);

  eval::EvalReport report{o.task, {o.model}, {cv}, std::nullopt};
  io::write_file_atomic(o.out_dir / "metrics.json", eval::report_json(report).dump(2) + "\n");
  io::write_file_atomic(o.out_dir / "report.txt", eval::report_table(report));
  write_manifest(o);
}

void run_compare(const Options& o) {
  if (o.task != "function" && o.task != "provenance") {
    throw std::runtime_error("compare requires --task function or provenance");
  }
  require_file(o.corpus, "--corpus");
  const std::vector<std::uint64_t> seeds = run_seeds(o.seed, o.runs);
  const bool needs_mtl = o.model == "mtl" || o.model_b == "mtl";

  std::optional<FunctionData> fdata;
  std::optional<PairData> pdata;
  std::vector<corpus::Fold> folds, f_folds, p_folds;
  std::vector<int> gold;
  int n_classes = 0;

  if (o.task == "function") {
    fdata.emplace(load_function_data(o.corpus));
    folds = corpus::kfold(fdata->instances.size(), o.k, o.seed);
    f_folds = folds;
    gold = fdata->labels;
    n_classes = corpus::kFunctionClassCount;
    if (needs_mtl) {
      require_file(o.prov_corpus, "--prov-corpus");
      pdata.emplace(load_pair_data(o.prov_corpus));
      p_folds = corpus::grouped_kfold(pdata->groups, o.k, o.seed);
    }
  } else {
    pdata.emplace(load_pair_data(o.corpus));
    folds = corpus::grouped_kfold(pdata->groups, o.k, o.seed);
    p_folds = folds;
    gold = pdata->labels;
    n_classes = corpus::kProvenanceClassCount;
    if (needs_mtl) {
      require_file(o.prov_corpus, "--prov-corpus");  // function side for joint training
      fdata.emplace(load_function_data(o.prov_corpus));
      f_folds = corpus::kfold(fdata->instances.size(), o.k, o.seed);
    }
  }

  std::optional<EmbeddingTable> table;
  if (model_is_neural(o.model) || model_is_neural(o.model_b)) table.emplace(load_table(o));

  const auto factory = [&](const std::string& model) {
    return make_factory(model, o.task, fdata ? &*fdata : nullptr, pdata ? &*pdata : nullptr,
                        table ? &*table : nullptr, o, f_folds, p_folds);
  };
  const eval::CvResult cv_a =
      eval::cross_validate(factory(o.model), gold, n_classes, folds, seeds, o.threads);
  const eval::CvResult cv_b =
      eval::cross_validate(factory(o.model_b), gold, n_classes, folds, seeds, o.threads);

  eval::EvalReport report{o.task,
                          {o.model, o.model_b},
                          {cv_a, cv_b},
                          eval::compare_models(o.model, cv_a, o.model_b, cv_b)};
  io::write_file_atomic(o.out_dir / "metrics.json", eval::report_json(report).dump(2) + "\n");
  io::write_file_atomic(o.out_dir / "report.txt", eval::report_table(report));
  write_manifest(o);
}

void run_predict(const Options& o) {
  require_file(o.checkpoint, "--checkpoint");
  require_file(o.input, "--input");
  const models::CheckpointDoc doc = models::load_checkpoint(o.checkpoint);

  const auto classes_of = [&doc](const char* key) {
    return doc.meta.at(key).get<std::vector<std::string>>();
  };
  const auto vocab_of = [&doc] {
    return Vocabulary::from_words(doc.meta.at("vocabulary").get<std::vector<std::string>>());
  };

  std::string body;
  const auto emit = [&body](const std::string& id, const std::string& label) {
    ordered_json j;
    j["id"] = id;
    j["label"] = label;
    body += j.dump();
    body += '\n';
  };

  if (doc.kind == "cnn" || (doc.kind == "mtl" && o.task == "function")) {
    const FunctionData data = load_function_data(o.input);
    const EmbeddingTable table = load_table(o);
    const Vocabulary vocab = vocab_of();
    const std::vector<std::string> classes =
        classes_of(doc.kind == "mtl" ? "classes_function" : "classes");
    const int width = doc.meta.at(doc.kind == "mtl" ? "width_citing" : "input_width").get<int>();
    const int window = doc.meta.at("window").get<int>();

    std::optional<models::CnnModel> cnn;
    std::optional<models::MtlModel> mtl;
    if (doc.kind == "cnn") {
      cnn = models::cnn_from_tensors(doc.tensors, window, width);
    } else {
      mtl = models::mtl_from_tensors(doc.tensors, window, width,
                                     doc.meta.at("width_fragment").get<int>());
    }
    for (std::size_t i = 0; i < data.instances.size(); ++i) {
      const Matrix x = text_pipeline::embed_sequence(
          text_pipeline::encode_pad(data.tokens[i], vocab, width), vocab, table);
      const Vector probs = cnn ? models::cnn_probs(*cnn, x) : models::mtl_function_probs(*mtl, x);
      emit(data.instances[i].id, classes.at(static_cast<std::size_t>(models::argmax_class(probs))));
    }
  } else if (doc.kind == "dcnn" || (doc.kind == "mtl" && o.task == "provenance")) {
    const PairData data = load_pair_data(o.input);
    const EmbeddingTable table = load_table(o);
    const Vocabulary vocab = vocab_of();
    const std::vector<std::string> classes =
        classes_of(doc.kind == "mtl" ? "classes_provenance" : "classes");
    const int w_citing = doc.meta.at("width_citing").get<int>();
    const int w_fragment = doc.meta.at("width_fragment").get<int>();
    const int window = doc.meta.at("window").get<int>();

    std::optional<models::DcnnModel> dcnn;
    std::optional<models::MtlModel> mtl;
    if (doc.kind == "dcnn") {
      dcnn = models::dcnn_from_tensors(doc.tensors, window, w_citing, w_fragment);
    } else {
      mtl = models::mtl_from_tensors(doc.tensors, window, w_citing, w_fragment);
    }
    for (std::size_t i = 0; i < data.instances.size(); ++i) {
      const Matrix c = text_pipeline::embed_sequence(
          text_pipeline::encode_pad(data.citing_tokens[i], vocab, w_citing), vocab, table);
      const Matrix f = text_pipeline::embed_sequence(
          text_pipeline::encode_pad(data.fragment_tokens[i], vocab, w_fragment), vocab, table);
      const Vector probs =
          dcnn ? models::dcnn_probs(*dcnn, c, f) : models::mtl_provenance_probs(*mtl, c, f);
      emit(data.instances[i].id, classes.at(static_cast<std::size_t>(models::argmax_class(probs))));
    }
  } else if (doc.kind == "mtl") {
    throw std::runtime_error("predict with an mtl checkpoint requires --task function or provenance");
  } else if (doc.kind == "nb") {
    const FunctionData data = load_function_data(o.input);
    const std::vector<std::string> words =
        doc.meta.at("unigram_words").get<std::vector<std::string>>();
    const std::vector<std::string> classes = classes_of("classes");
    baselines::NaiveBayesModel model;
    model.log_priors = doc.tensors.at("log_priors").col(0);
    model.log_likelihood = doc.tensors.at("log_likelihood");
    for (const corpus::FunctionInstance& inst : data.instances) {
      const int label = baselines::nb_predict(
          model, baselines::extract_function_features(inst, words).to_count_vector());
      emit(inst.id, classes.at(static_cast<std::size_t>(label)));
    }
  } else if (doc.kind == "tree") {
    const PairData data = load_pair_data(o.input);
    const std::vector<std::string> classes = classes_of("classes");
    baselines::TreeModel model;
    model.n_classes = static_cast<int>(classes.size());
    for (const auto& nj : doc.meta.at("nodes")) {
      baselines::TreeNode n;
      n.feature = nj.at("feature").get<int>();
      n.threshold = nj.at("threshold").get<double>();
      n.left = nj.at("left").get<int>();
      n.right = nj.at("right").get<int>();
      n.prediction = nj.at("prediction").get<int>();
      n.class_counts = nj.at("class_counts").get<std::vector<long>>();
      model.nodes.push_back(std::move(n));
    }
    for (const corpus::ProvenanceInstance& inst : data.instances) {
      const int label = model.predict(
          baselines::extract_provenance_features(inst.citation_context, inst.fragment).to_vector());
      emit(inst.id, classes.at(static_cast<std::size_t>(label)));
    }
  } else {
    throw std::runtime_error("unsupported checkpoint kind: " + doc.kind);
  }

  io::write_file_atomic(o.out_dir / "predictions.jsonl", body);
  write_manifest(o);
}

// Compact full-coordinate finite-difference verification of every
// architecture; sizes are fixed small so the sweep stays fast.
void run_gradcheck(const Options& o) {
  const int dim = 12, w = 9, window = 3, filters = 6;
  rnd::Rng rng = rnd::make_rng(o.seed, 901);
  const auto random_matrix = [&rng](int r, int c) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rnd::uniform_real(rng, -1.0, 1.0);
    return m;
  };

  std::vector<models::FunctionExample> fdata;
  for (int i = 0; i < 3; ++i) fdata.push_back({random_matrix(dim, w), i % 4});
  std::vector<models::PairExample> pdata;
  for (int i = 0; i < 3; ++i) {
    pdata.push_back({random_matrix(dim, w), random_matrix(dim, w), i % 2});
  }
  const std::vector<std::size_t> batch = {0, 1, 2};

  double worst = 0.0;
  const auto check = [&](const char* name, const Vector& theta, const Vector& analytic,
                         const std::function<double(const Vector&)>& loss) {
    const nn::GradCheckReport report = nn::grad_check(loss, theta, analytic, 1e-5);
    worst = std::max(worst, report.max_rel_error);
    std::cout << name << ": max relative error " << report.max_rel_error << " over "
              << theta.size() << " coordinates\n";
  };

  {
    models::CnnModel m = models::make_cnn(filters, window, dim, w, 4, o.seed);
    const models::CnnGradients g = models::cnn_gradients(m, fdata, batch);
    check("cnn", models::pack_cnn(m), models::pack_cnn_grads(g), [&](const Vector& theta) {
      models::CnnModel probe = m;
      models::unpack_cnn(theta, probe);
      return models::cnn_loss(probe, fdata, batch);
    });
  }
  {
    models::DcnnModel m = models::make_dcnn(filters, window, dim, w, w, o.seed);
    const models::DcnnGradients g = models::dcnn_gradients(m, pdata, batch);
    check("dcnn", models::pack_dcnn(m), models::pack_dcnn_grads(g), [&](const Vector& theta) {
      models::DcnnModel probe = m;
      models::unpack_dcnn(theta, probe);
      return models::dcnn_loss(probe, pdata, batch);
    });
  }
  {
    models::MtlModel m = models::make_mtl(filters, window, dim, w, w, o.seed);
    const models::MtlFunctionGradients gf = models::mtl_function_gradients(m, fdata, batch);
    check("mtl-function", models::pack_mtl(m), models::pack_mtl_function_grads(gf, m),
          [&](const Vector& theta) {
            models::MtlModel probe = m;
            models::unpack_mtl(theta, probe);
            return models::mtl_function_loss(probe, fdata, batch);
          });
    const models::MtlProvenanceGradients gp = models::mtl_provenance_gradients(m, pdata, batch);
    check("mtl-provenance", models::pack_mtl(m), models::pack_mtl_provenance_grads(gp, m),
          [&](const Vector& theta) {
            models::MtlModel probe = m;
            models::unpack_mtl(theta, probe);
            return models::mtl_provenance_loss(probe, pdata, batch);
          });
  }
  std::cout << (worst < 1e-4 ? "gradcheck ok" : "gradcheck FAILED") << " (worst " << worst
            << ", threshold 1e-4)\n";
  if (worst >= 1e-4) throw std::runtime_error("gradient check exceeded tolerance");
}

}  // namespace

bool model_fits_task(const std::string& model, const std::string& task, bool comparing) {
  if (task == "function") {
    return model == "cnn" || model == "nb-baseline" || (comparing && model == "mtl");
  }
  if (task == "provenance") {
    return model == "dcnn" || model == "tree-baseline" || (comparing && model == "mtl");
  }
  if (task == "mtl") return model == "mtl";
  return false;
}

std::vector<std::uint64_t> run_seeds(std::uint64_t seed, int runs) {
  if (runs < 1) throw std::invalid_argument("runs must be at least 1");
  std::vector<std::uint64_t> seeds;
  seeds.reserve(static_cast<std::size_t>(runs));
  for (int r = 0; r < runs; ++r) seeds.push_back(seed + static_cast<std::uint64_t>(r));
  return seeds;
}

void run(const Options& options) {
  if (options.command != "gradcheck" && options.out_dir.empty()) {
    throw std::runtime_error("missing required --out directory");
  }
  if (!options.out_dir.empty()) std::filesystem::create_directories(options.out_dir);

  if (options.command == "build-dataset") {
    run_build_dataset(options);
  } else if (options.command == "train") {
    run_train(options);
  } else if (options.command == "evaluate") {
    run_evaluate(options);
  } else if (options.command == "compare") {
    run_compare(options);
  } else if (options.command == "predict") {
    run_predict(options);
  } else if (options.command == "gradcheck") {
    run_gradcheck(options);
  } else {
    throw std::runtime_error("unknown command: " + options.command);
  }
}

}  // namespace citescope::runner
