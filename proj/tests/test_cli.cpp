#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "das/cli.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out, err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "das");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Outcome o;
  o.code = das::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("das_test_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

// Synthetic data plus a small config shared by the training cases.
struct Workspace {
  fs::path root, data, config;

  Workspace() : root(scratch("ws")), data(root / "data"), config(root / "small.cfg") {
    const Outcome s = invoke({"synth", "--out", data.string(), "--seed", "3", "--shift", "0.5",
                              "--source-labeled", "240", "--target-unlabeled", "160",
                              "--target-test", "90"});
    REQUIRE(s.code == 0);
    write(config,
          "variant = DAS\nhidden = 10\nembedding_dim = 8\nepochs = 3\nbatch_size = 20\n"
          "dev_size = 40\nlearning_rate = 0.004\nlambda1 = 50\n");
  }

  std::vector<std::string> train_args(const fs::path& out) const {
    return {"train", "--config", config.string(), "--out", out.string(),
            "--source", (data / "source_labeled.jsonl").string(),
            "--target", (data / "target_unlabeled.jsonl").string(),
            "--test", (data / "target_test.jsonl").string()};
  }
};

const Workspace& workspace() {
  static const Workspace w;
  return w;
}

}  // namespace

TEST_CASE("gradcheck passes every component and the negative control fails") {
  const Outcome ok = invoke({"gradcheck", "--seed", "4"});
  CHECK(ok.code == 0);
  for (const char* name : {"L", "J", "Gamma", "Omega", "MMD", "total"})
    CHECK(ok.out.find(std::string(name) + " ") != std::string::npos);
  CHECK(ok.out.find("FAIL") == std::string::npos);

  const Outcome bad = invoke({"gradcheck", "--seed", "4", "--corrupt-gradient"});
  CHECK(bad.code == 3);
  CHECK(bad.out.find("FAIL") != std::string::npos);
}

TEST_CASE("gradcheck library entry reports small errors on many toy batches") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    das::cli::GradCheckOptions o;
    o.seed = seed;
    const auto lines = das::cli::run_gradcheck(o);
    REQUIRE(lines.size() == 6);
    for (const auto& l : lines) {
      CHECK(l.passed);
      CHECK(l.max_relative_error <= 1e-4);
      CHECK(l.coordinates > 0);
    }
  }
}

TEST_CASE("usage errors exit 1") {
  CHECK(invoke({}).code == 1);
  CHECK(invoke({"frobnicate"}).code == 1);
  CHECK(invoke({"train", "--out", "x"}).code == 1);
  CHECK(invoke({"--help"}).code == 0);
}

TEST_CASE("missing dataset path exits 2 and names the path") {
  const fs::path d = scratch("missing");
  const std::string ghost = (d / "no_such_source.jsonl").string();
  const Outcome o = invoke({"train", "--out", (d / "out").string(), "--source", ghost, "--target", ghost});
  CHECK(o.code == 2);
  CHECK(o.err.find(ghost) != std::string::npos);
  CHECK_FALSE(fs::exists(d / "out"));
}

TEST_CASE("train writes artifacts, reruns are byte-identical, and outputs are not clobbered") {
  const Workspace& w = workspace();
  const fs::path a = w.root / "run_a", b = w.root / "run_b";
  const Outcome first = invoke(w.train_args(a));
  REQUIRE(first.code == 0);
  for (const char* f : {"checkpoint.bin", "vocab.txt", "history.csv", "config.txt", "report.json"})
    CHECK(fs::exists(a / f));
  CHECK_FALSE(fs::exists(fs::path(a.string() + ".partial")));

  const std::string history = slurp(a / "history.csv");
  std::size_t rows = 0;
  for (char ch : history) rows += ch == '\n';
  CHECK(rows == 4);
  CHECK(first.err.find("epoch 3/3") != std::string::npos);

  const auto report = nlohmann::json::parse(slurp(a / "report.json"));
  CHECK(report["variant"] == "DAS");
  CHECK(report["test"]["n_examples"] == 90);
  CHECK(report["config"]["lambda1"] == "50");

  REQUIRE(invoke(w.train_args(b)).code == 0);
  CHECK(slurp(a / "history.csv") == slurp(b / "history.csv"));
  CHECK(slurp(a / "checkpoint.bin") == slurp(b / "checkpoint.bin"));

  // Re-running from the echoed config reproduces the run.
  const fs::path c = w.root / "run_c";
  std::vector<std::string> args = w.train_args(c);
  args[2] = (a / "config.txt").string();
  REQUIRE(invoke(args).code == 0);
  CHECK(slurp(a / "checkpoint.bin") == slurp(c / "checkpoint.bin"));

  const Outcome again = invoke(w.train_args(a));
  CHECK(again.code == 1);
  CHECK(slurp(a / "history.csv") == history);
}

TEST_CASE("multi-run training writes one directory per seed") {
  const Workspace& w = workspace();
  const fs::path out = w.root / "multi";
  std::vector<std::string> args = w.train_args(out);
  args.insert(args.end(), {"--runs", "2", "--seed", "11"});
  REQUIRE(invoke(args).code == 0);
  CHECK(fs::exists(out / "run_0" / "checkpoint.bin"));
  CHECK(fs::exists(out / "run_1" / "checkpoint.bin"));
  const auto report = nlohmann::json::parse(slurp(out / "report.json"));
  CHECK(report["seeds"] == nlohmann::json::array({11, 12}));
  const double mean = (report["runs"][0]["test"]["accuracy"].get<double>() +
                       report["runs"][1]["test"]["accuracy"].get<double>()) / 2;
  CHECK(report["mean_test_accuracy"].get<double>() == doctest::Approx(mean).epsilon(1e-15));
}

TEST_CASE("evaluate: text and JSON carry identical numbers") {
  const Workspace& w = workspace();
  const fs::path run = w.root / "eval_run";
  REQUIRE(invoke(w.train_args(run)).code == 0);
  const std::string ck = (run / "checkpoint.bin").string();
  const std::string test = (w.data / "target_test.jsonl").string();

  const Outcome text = invoke({"evaluate", "--checkpoint", ck, "--test", test, "--out", (w.root / "eval").string()});
  const Outcome js = invoke({"evaluate", "--checkpoint", ck, "--test", test, "--json"});
  REQUIRE(text.code == 0);
  REQUIRE(js.code == 0);
  const auto j = nlohmann::json::parse(js.out);
  CHECK(j == nlohmann::json::parse(slurp(w.root / "eval" / "eval.json")));
  CHECK(text.out == slurp(w.root / "eval" / "eval.txt"));
  CHECK(text.out.find("accuracy  " + j["accuracy"].dump() + "\n") != std::string::npos);
  CHECK(text.out.find("macro_f1  " + j["macro_f1"].dump() + "\n") != std::string::npos);
  for (const auto& c : j["per_class"]) {
    CHECK(text.out.find("precision " + c["precision"].dump() + " recall " + c["recall"].dump() +
                        " f1 " + c["f1"].dump()) != std::string::npos);
  }
  const auto report = nlohmann::json::parse(slurp(run / "report.json"));
  CHECK(report["test"]["accuracy"] == j["accuracy"]);
}

TEST_CASE("evaluate rejects a mismatched vocabulary, an empty test file and a corrupt checkpoint") {
  const Workspace& w = workspace();
  const fs::path run = w.root / "eval_errors";
  REQUIRE(invoke(w.train_args(run)).code == 0);
  const std::string ck = (run / "checkpoint.bin").string();
  const std::string test = (w.data / "target_test.jsonl").string();

  std::string vocab = slurp(run / "vocab.txt");
  const auto first_newline = vocab.find('\n', vocab.find('\n') + 1);
  vocab.insert(first_newline + 1, "zzz_extra\n");
  write(w.root / "other_vocab.txt", vocab);
  const Outcome mismatch = invoke({"evaluate", "--checkpoint", ck, "--vocab", (w.root / "other_vocab.txt").string(), "--test", test});
  CHECK(mismatch.code == 2);
  CHECK(mismatch.err.find("does not match") != std::string::npos);

  write(w.root / "empty.jsonl", "");
  CHECK(invoke({"evaluate", "--checkpoint", ck, "--test", (w.root / "empty.jsonl").string()}).code == 2);

  const fs::path broken = w.root / "broken";
  fs::create_directories(broken);
  write(broken / "checkpoint.bin", slurp(ck).substr(0, 40));
  fs::copy_file(run / "vocab.txt", broken / "vocab.txt", fs::copy_options::overwrite_existing);
  CHECK(invoke({"evaluate", "--checkpoint", (broken / "checkpoint.bin").string(), "--test", test}).code == 2);
  CHECK(invoke({"analyze-filters", "--checkpoint", (broken / "checkpoint.bin").string(), "--target", test}).code == 2);
}

TEST_CASE("analyze-filters report shape") {
  const Workspace& w = workspace();
  const fs::path run = w.root / "filters_run";
  REQUIRE(invoke(w.train_args(run)).code == 0);
  const std::string ck = (run / "checkpoint.bin").string();
  const fs::path out = w.root / "filters_out";
  const Outcome o = invoke({"analyze-filters", "--checkpoint", ck,
                            "--source", (w.data / "source_labeled.jsonl").string(),
                            "--target", (w.data / "target_unlabeled.jsonl").string(),
                            "--out", out.string()});
  REQUIRE(o.code == 0);
  const auto j = nlohmann::json::parse(slurp(out / "filters.json"));
  REQUIRE(j.size() == 3);
  for (const auto& cls : j) {
    CHECK(cls["filters"].size() == 10);
    for (const auto& f : cls["filters"]) CHECK(f["trigrams"].size() <= 5);
  }
  CHECK(fs::exists(out / "filters.txt"));

  const Outcome one = invoke({"analyze-filters", "--checkpoint", ck, "--k-filters", "1",
                              "--target", (w.data / "target_test.jsonl").string()});
  REQUIRE(one.code == 0);
  CHECK(std::count(one.out.begin(), one.out.end(), '=') == 12);
  CHECK(invoke({"analyze-filters", "--checkpoint", ck, "--k-filters", "11",
                "--target", (w.data / "target_test.jsonl").string()}).code == 1);
  CHECK(invoke({"analyze-filters", "--checkpoint", ck}).code == 1);
}

TEST_CASE("a converged toy model fits its training set") {
  const fs::path d = scratch("overfit");
  REQUIRE(invoke({"synth", "--out", (d / "data").string(), "--seed", "5", "--shift", "0",
                  "--source-labeled", "300", "--target-unlabeled", "60", "--target-test", "10"}).code == 0);
  write(d / "cfg", "variant = NaiveNN\nhidden = 24\nembedding_dim = 16\nepochs = 15\n"
                   "batch_size = 20\ndev_size = 30\nlearning_rate = 0.005\ndropout_rate = 0\n");
  const std::string source = (d / "data" / "source_labeled.jsonl").string();
  REQUIRE(invoke({"train", "--config", (d / "cfg").string(), "--out", (d / "run").string(),
                  "--source", source, "--target", (d / "data" / "target_unlabeled.jsonl").string()}).code == 0);
  const Outcome o = invoke({"evaluate", "--checkpoint", (d / "run" / "checkpoint.bin").string(),
                            "--test", source, "--json"});
  REQUIRE(o.code == 0);
  CHECK(nlohmann::json::parse(o.out)["accuracy"].get<double>() > 0.95);
}

TEST_CASE("synth command writes the four corpora and its spec") {
  const fs::path d = scratch("synth");
  write(d / "spec.txt", "shift = 0.2\nsource_labeled = 20\ntarget_unlabeled = 10\ntarget_test = 5\n");
  const Outcome o = invoke({"synth", "--config", (d / "spec.txt").string(), "--out", (d / "o").string(),
                            "--embedding-dim", "3"});
  REQUIRE(o.code == 0);
  for (const char* f : {"source_labeled.jsonl", "source_unlabeled.jsonl", "target_unlabeled.jsonl",
                        "target_test.jsonl", "embeddings.txt", "synth.txt"})
    CHECK(fs::exists(d / "o" / f));
  CHECK(slurp(d / "o" / "synth.txt").find("shift = 0.2\n") != std::string::npos);
  write(d / "bad.txt", "shift = 3\n");
  CHECK(invoke({"synth", "--config", (d / "bad.txt").string(), "--out", (d / "p").string()}).code == 1);
}
