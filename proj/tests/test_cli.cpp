#include <doctest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

long count_lines(const fs::path& path) {
  std::ifstream in(path);
  long n = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++n;
  return n;
}

fs::path scratch_root() {
  static const fs::path root = [] {
    const fs::path p = fs::temp_directory_path() / "citescope_cli_tests";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return root;
}

CliResult run_cli(const std::string& args, const std::string& env_prefix = "") {
  static int invocation = 0;
  const fs::path dir = scratch_root() / ("io" + std::to_string(invocation++));
  fs::create_directories(dir);
  const fs::path out_file = dir / "stdout.txt";
  const fs::path err_file = dir / "stderr.txt";
  std::string cmd = env_prefix;
  if (!cmd.empty()) cmd += " ";
  cmd += std::string("\"") + CITESCOPE_CLI_PATH + "\" " + args + " > \"" + out_file.string() +
         "\" 2> \"" + err_file.string() + "\"";
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out_file);
  r.err = slurp(err_file);
  return r;
}

const std::string kFixtures = CITESCOPE_FIXTURES_DIR;

std::string quoted(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_CASE("usage errors exit with status 2") {
  CHECK(run_cli("frobnicate").code == 2);
  CHECK(run_cli("").code == 2);  // a subcommand is mandatory
  CHECK(run_cli("train --task function --model nb-baseline --no-such-flag x").code == 2);

  const auto mismatch = run_cli("evaluate --task function --model dcnn --corpus " + kFixtures +
                                "/function_corpus.jsonl --out " +
                                quoted(scratch_root() / "mismatch"));
  CHECK(mismatch.code == 2);
  CHECK(mismatch.err.find("dcnn") != std::string::npos);

  CHECK(run_cli("--help").code == 0);
  const auto sub_help = run_cli("train --help");
  CHECK(sub_help.code == 0);
  CHECK(sub_help.out.find("--corpus") != std::string::npos);
}

TEST_CASE("missing input files exit with status 1 and name the path") {
  const auto r = run_cli("train --task function --model nb-baseline --corpus /nonexistent/c.jsonl --out " +
                         quoted(scratch_root() / "missing"));
  CHECK(r.code == 1);
  CHECK(r.err.find("/nonexistent/c.jsonl") != std::string::npos);
}

TEST_CASE("gradient verification command succeeds") {
  const auto r = run_cli("gradcheck --seed 5");
  CHECK(r.code == 0);
  CHECK(r.out.find("gradcheck ok") != std::string::npos);
}

TEST_CASE("provenance dataset construction writes corpus, stats and manifest") {
  const fs::path out = scratch_root() / "build_prov";
  const auto r = run_cli("build-dataset --task provenance --papers " + kFixtures +
                         "/papers --annotations " + kFixtures +
                         "/provenance_annotations.jsonl --negatives-per-paper 3 --seed 49 --out " +
                         quoted(out));
  REQUIRE(r.code == 0);
  REQUIRE(fs::exists(out / "provenance_corpus.jsonl"));
  REQUIRE(fs::exists(out / "dataset_stats.json"));
  REQUIRE(fs::exists(out / "manifest.json"));

  const json stats = json::parse(slurp(out / "dataset_stats.json"));
  CHECK(stats.at("positives").get<long>() == 608);
  CHECK(stats.at("negatives").get<long>() == 885);
  CHECK(stats.at("papers").get<long>() == 295);
  CHECK(stats.at("total").get<long>() == 1493);
  CHECK(count_lines(out / "provenance_corpus.jsonl") == 1493);

  const json manifest = json::parse(slurp(out / "manifest.json"));
  CHECK(manifest.at("tool") == "citescope");
  CHECK(manifest.at("options").at("task") == "provenance");
}

TEST_CASE("sentence screening emits candidate records") {
  const fs::path out = scratch_root() / "build_fn";
  const auto r = run_cli("build-dataset --task function --papers " + kFixtures +
                         "/papers --out " + quoted(out));
  REQUIRE(r.code == 0);
  REQUIRE(fs::exists(out / "candidates.jsonl"));
  REQUIRE(fs::exists(out / "manifest.json"));

  std::ifstream in(out / "candidates.jsonl");
  std::string line;
  long n = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json record = json::parse(line);
    CHECK(record.contains("paper_id"));
    CHECK(record.contains("sentence_index"));
    CHECK(record.contains("text"));
    CHECK(record.contains("score"));
    CHECK(record.at("reasons").is_array());
    CHECK(!record.at("reasons").empty());
    ++n;
  }
  CHECK(n > 0);  // the bundled papers contain cue phrases and charged wording
}

TEST_CASE("train then predict round-trips through a checkpoint") {
  const fs::path train_out = scratch_root() / "train_nb";
  const auto trained = run_cli("train --task function --model nb-baseline --corpus " + kFixtures +
                               "/function_corpus.jsonl --out " + quoted(train_out));
  REQUIRE(trained.code == 0);
  REQUIRE(fs::exists(train_out / "checkpoint.json"));
  REQUIRE(fs::exists(train_out / "manifest.json"));

  const json checkpoint = json::parse(slurp(train_out / "checkpoint.json"));
  CHECK(checkpoint.at("kind") == "nb");

  const fs::path predict_out = scratch_root() / "predict_nb";
  const auto predicted = run_cli("predict --checkpoint " + quoted(train_out / "checkpoint.json") +
                                 " --input " + kFixtures + "/function_corpus.jsonl --out " +
                                 quoted(predict_out));
  REQUIRE(predicted.code == 0);
  REQUIRE(fs::exists(predict_out / "predictions.jsonl"));
  CHECK(count_lines(predict_out / "predictions.jsonl") == 1432);

  std::ifstream in(predict_out / "predictions.jsonl");
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json record = json::parse(line);
    CHECK(record.contains("id"));
    const std::string label = record.at("label").get<std::string>();
    CHECK((label == "Weak" || label == "CoCo" || label == "Pos" || label == "Neut"));
  }
}

TEST_CASE("decision-tree training and prediction work on built pairs") {
  const fs::path data_out = scratch_root() / "tree_data";
  REQUIRE(run_cli("build-dataset --task provenance --papers " + kFixtures + "/papers --annotations " +
                  kFixtures + "/provenance_annotations.jsonl --negatives-per-paper 2 --seed 50 --out " +
                  quoted(data_out))
              .code == 0);

  const fs::path train_out = scratch_root() / "train_tree";
  const auto trained = run_cli("train --task provenance --model tree-baseline --corpus " +
                               quoted(data_out / "provenance_corpus.jsonl") + " --out " +
                               quoted(train_out));
  REQUIRE(trained.code == 0);
  const json checkpoint = json::parse(slurp(train_out / "checkpoint.json"));
  CHECK(checkpoint.at("kind") == "tree");

  const fs::path predict_out = scratch_root() / "predict_tree";
  const auto predicted = run_cli("predict --checkpoint " + quoted(train_out / "checkpoint.json") +
                                 " --input " + quoted(data_out / "provenance_corpus.jsonl") +
                                 " --out " + quoted(predict_out));
  REQUIRE(predicted.code == 0);
  CHECK(count_lines(predict_out / "predictions.jsonl") ==
        count_lines(data_out / "provenance_corpus.jsonl"));
  std::ifstream in(predict_out / "predictions.jsonl");
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::string label = json::parse(line).at("label").get<std::string>();
    CHECK((label == "Prov" || label == "NonProv"));
  }
}

TEST_CASE("evaluation emits metrics, report and manifest deterministically") {
  const std::string common = "evaluate --task function --model nb-baseline --corpus " + kFixtures +
                             "/function_corpus.jsonl --k 3 --runs 2 --seed 7 --out ";
  const fs::path out_a = scratch_root() / "eval_a";
  const fs::path out_b = scratch_root() / "eval_b";
  REQUIRE(run_cli(common + quoted(out_a)).code == 0);
  REQUIRE(run_cli(common + quoted(out_b)).code == 0);

  for (const auto& dir : {out_a, out_b}) {
    REQUIRE(fs::exists(dir / "metrics.json"));
    REQUIRE(fs::exists(dir / "report.txt"));
    REQUIRE(fs::exists(dir / "manifest.json"));
  }
  CHECK(slurp(out_a / "metrics.json") == slurp(out_b / "metrics.json"));

  const json metrics = json::parse(slurp(out_a / "metrics.json"));
  CHECK(metrics.at("task") == "function");
  const auto& f1 = metrics.at("results")[0].at("metrics").at("f1");
  CHECK(f1.at("mean").get<double>() > 0.0);
  CHECK(f1.at("mean").get<double>() <= 1.0);

  const json manifest = json::parse(slurp(out_a / "manifest.json"));
  CHECK(manifest.at("run_seeds").size() == 2);
}

TEST_CASE("worker-count environment variable controls threading not results") {
  const std::string common = "evaluate --task function --model nb-baseline --corpus " + kFixtures +
                             "/function_corpus.jsonl --k 3 --runs 2 --seed 11 --out ";
  const fs::path serial = scratch_root() / "threads_serial";
  const fs::path pooled = scratch_root() / "threads_pooled";
  REQUIRE(run_cli(common + quoted(serial)).code == 0);
  REQUIRE(run_cli(common + quoted(pooled), "CITESCOPE_THREADS=4").code == 0);
  CHECK(slurp(serial / "metrics.json") == slurp(pooled / "metrics.json"));

  const fs::path noisy = scratch_root() / "threads_noisy";
  const auto warned = run_cli(common + quoted(noisy), "CITESCOPE_THREADS=banana");
  CHECK(warned.code == 0);
  CHECK(warned.err.find("CITESCOPE_THREADS") != std::string::npos);
}
