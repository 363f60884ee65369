#include <sys/wait.h>

#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "bsecnn/binary_io.hpp"
#include "bsecnn/dataset.hpp"
#include "testing.hpp"

using namespace bsecnn;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  testkit::TempDir dir{"cli"};

  CliResult run(const std::string& args) {
    const auto out = dir.file("stdout.txt"), err = dir.file("stderr.txt");
    const std::string cmd = std::string(BSECNN_CLI) + " " + args + " >" + out + " 2>" + err;
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  std::string write_config(const std::string& name, const std::string& extra = "") {
    std::ofstream out(dir.file(name));
    out << "[data]\npath = " << dataset() << "\n"
        << "[model]\nwidths = 4\ndense_units = 8\n"
        << "[bagging]\nn_models = 2\nbagging_ratio = 0.8\n"
        << "[train]\nepochs = 2\nbatch_size = 8\n"
        << "[ensemble]\nforest_trees = 5\n"
        << "[sweep]\ngrid = 0.6:2, 0.7:2, 0.8:1\n"
        << extra;
    return dir.file(name);
  }

  std::string dataset() {
    const auto path = dir.file("data.bsec");
    if (!std::ifstream(path)) {
      SynthOptions o;
      o.n_per_class = 12;
      o.image_size = 12;
      o.seed = 2;
      save_container(synth_dataset(o), path);
    }
    return path;
  }
};

}  // namespace

TEST_F(Cli, UsageErrorsExitWithConfigCode) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("--precision 16 train").code, 2);
  EXPECT_EQ(run("--help").code, 0);
}

TEST_F(Cli, InvalidConfigNamesField) {
  const auto r = run("--config " + write_config("bad.ini", "[bagging]\nbagging_ratio = 0\n") + " train");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("bagging.bagging_ratio"), std::string::npos);
}

TEST_F(Cli, CorruptDatasetExitsWithDataCode) {
  {
    std::ofstream out(dir.file("junk.bsec"));
    out << "not a container";
  }
  const auto r = run("dataset inspect " + dir.file("junk.bsec"));
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("offset"), std::string::npos);
}

TEST_F(Cli, DivergentTrainingExitsWithNumericCode) {
  const auto config = write_config("diverge.ini", "[train]\nlearning_rate = 1e30\n");
  const auto r = run("--config " + config + " --out " + dir.file("out") + " train");
  EXPECT_EQ(r.code, 4) << r.err;
}

TEST_F(Cli, TrainIsDeterministicAndEvalReproducesMetrics) {
  const auto config = write_config("run.ini");
  const auto a = dir.file("a"), b = dir.file("b");
  const auto ra = run("--config " + config + " --seed 9 --out " + a + " train");
  ASSERT_EQ(ra.code, 0) << ra.err;
  ASSERT_EQ(run("--config " + config + " --seed 9 --out " + b + " --jobs 2 train").code, 0);
  for (const char* f : {"metrics.csv", "confusion_matrix.csv", "bags.csv", "history_model_0.csv",
                        "history_model_1.csv", "report.txt"}) {
    EXPECT_FALSE(slurp(a + "/" + f).empty()) << f;
    EXPECT_EQ(slurp(a + "/" + f), slurp(b + "/" + f)) << f;
  }
  EXPECT_NE(ra.out.find("confusion matrix"), std::string::npos);

  const auto checkpoint_before = slurp(a + "/checkpoint.bsec");
  const auto re = run("eval --checkpoint " + a + "/checkpoint.bsec --data " + dataset() + " --out " + a);
  ASSERT_EQ(re.code, 0) << re.err;
  EXPECT_EQ(slurp(a + "/eval_metrics.csv"), slurp(a + "/metrics.csv"));
  EXPECT_EQ(slurp(a + "/eval_confusion_matrix.csv"), slurp(a + "/confusion_matrix.csv"));
  EXPECT_EQ(slurp(a + "/checkpoint.bsec"), checkpoint_before);
}

TEST_F(Cli, EvalRejectsMismatchedImageSize) {
  const auto config = write_config("run.ini");
  const auto out = dir.file("o");
  ASSERT_EQ(run("--config " + config + " --out " + out + " train").code, 0);
  SynthOptions o;
  o.n_per_class = 4;
  o.image_size = 16;
  save_container(synth_dataset(o), dir.file("big.bsec"));
  const auto r = run("eval --checkpoint " + out + "/checkpoint.bsec --data " + dir.file("big.bsec"));
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("expects [12, 12, 1]"), std::string::npos);
}

TEST_F(Cli, SweepWritesOneRowPerCell) {
  const auto config = write_config("run.ini");
  const auto out = dir.file("sweep");
  const auto r = run("--config " + config + " --out " + out + " sweep");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto csv = slurp(out + "/sweep.csv");
  std::istringstream lines(csv);
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(lines, line)) rows.push_back(line);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0], "bagging_ratio,n_models,accuracy");
  EXPECT_EQ(rows[1].substr(0, 6), "0.6,2,");
  EXPECT_EQ(rows[3].substr(0, 6), "0.8,1,");
  EXPECT_EQ(r.out.substr(0, 33), "bagging_ratio  n_models  accuracy");
  EXPECT_EQ(slurp(out + "/sweep.txt"), r.out);
}

TEST_F(Cli, SweepRecordsFailedCells) {
  const auto config = write_config("run.ini");
  const auto out = dir.file("sweep");
  const auto r = run("--config " + config + " --out " + out + " sweep --grid 0.7:2,1.5:2");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(slurp(out + "/sweep.csv").find("1.5,2,failed"), std::string::npos);
  EXPECT_NE(r.err.find("failed"), std::string::npos);
}

TEST_F(Cli, CompareCombinersListsThreeMethods) {
  const auto config = write_config("run.ini");
  const auto out = dir.file("cmp");
  const auto r = run("--config " + config + " --out " + out + " compare-combiners");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto csv = slurp(out + "/combiners.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "method,precision_micro,recall_micro,f1_micro");
  const auto avg = csv.find("\naverage,"), vote = csv.find("\nvote,"), stack = csv.find("\nstacking,");
  ASSERT_NE(avg, std::string::npos);
  ASSERT_NE(vote, std::string::npos);
  ASSERT_NE(stack, std::string::npos);
  EXPECT_LT(avg, vote);
  EXPECT_LT(vote, stack);
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "method    precision_micro  recall_micro  f1_micro");
}

TEST_F(Cli, DatasetSynthAndInspect) {
  const auto path = dir.file("s.bsec");
  const auto r = run("--seed 3 dataset synth --output " + path + " --per-class 4 --size 10");
  ASSERT_EQ(r.code, 0) << r.err;
  SynthOptions o;
  o.n_per_class = 4;
  o.image_size = 10;
  o.seed = 3;
  EXPECT_EQ(load_container(path), synth_dataset(o));
  const auto inspect = run("dataset inspect " + path);
  ASSERT_EQ(inspect.code, 0);
  EXPECT_NE(inspect.out.find("samples: 20"), std::string::npos) << inspect.out;
}
