#ifndef DAMLN_FS_BENCHMARK_H_
#define DAMLN_FS_BENCHMARK_H_

// Friends & Smokers: synthetic world generator with group structure,
// evidence splitting, PR-AUC scoring and the train-small / test-large
// experiment driver.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "damln/inference.h"
#include "damln/learning.h"
#include "damln/mln_io.h"

namespace damln {

struct FsParams {
  double p_f_in = 0.8;
  double p_f_out = 0.1;
  double p_g = 0.3;
  double p_s_smoking = 0.7;
  double p_s_nonsmoking = 0.1;
  double p_c_smoker = 0.5;
  double p_c_nonsmoker = 0.01;

  void Validate() const;
};

struct FsWorld {
  Database db;  // complete: n^2 Friends, n Smokes, n Cancer literals
  std::vector<std::string> people;
  std::vector<int> group_of;        // per person
  std::vector<bool> smoking_group;  // per group
  int num_groups = 0;
};

// round(sqrt(n)) groups whose sizes differ by at most one; people are
// assigned to groups by a random permutation.
FsWorld GenerateFs(int n, const FsParams& params, std::uint64_t seed);

struct EvidenceSplit {
  Database evidence;  // all Friends + floor(fraction * n) Smokes literals
  Database truth;     // remaining Smokes + all Cancer literals
};

EvidenceSplit MakeEvidence(const Database& complete, double fraction,
                           std::uint64_t seed);

// Average precision with tied scores evaluated as one threshold block.
double PrAuc(const std::vector<double>& scores, const std::vector<bool>& labels);
// Scores every labelled atom; each needs a score.
double PrAuc(const MarginalTable& scores, const std::map<GroundAtom, bool>& labels);

// The Friends & Smokers model text shipped as models/fs.mln.
std::string_view FsModelText();
Model FsModel();

struct ExperimentConfig {
  std::vector<int> train_sizes{20, 40, 60, 80, 100};
  int dbs_per_size = 1;
  std::vector<int> test_sizes{50, 100, 200};
  int trials = 3;
  std::uint64_t seed = 1;
  std::vector<Mode> modes{Mode::kMln, Mode::kDaMln};
  Aggregator aggregator = Aggregator::kMax;
  double evidence_fraction = 0.5;
  GibbsParams gibbs;
  double prior_std = 10.0;
  int max_iterations = 100;
  double tolerance = 1e-4;
  bool per_db_normalize = false;
  int threads = 1;
  FsParams fs;

  void Validate() const;
};

// key = value lines; `#` and `//` start comments. Lists are comma separated.
ExperimentConfig ParseExperimentConfig(std::string_view text);
std::string DescribeConfig(const ExperimentConfig& cfg);

struct LearnedModel {
  Mode mode;
  std::vector<double> weights;
  bool converged = false;
};

// Learns one weight vector per mode on the generated training databases,
// then scores every (mode, test size, trial). Rows are ordered by mode (as
// configured), test size, trial.
std::vector<ExperimentRow> RunExperiment(const ExperimentConfig& cfg,
                                         std::vector<LearnedModel>* learned = nullptr);

// Whitespace-separated table of mean auc_all per test size, one column per
// method, for gnuplot.
void WritePlotData(const std::vector<ExperimentRow>& rows, std::ostream& out);

}  // namespace damln

#endif  // DAMLN_FS_BENCHMARK_H_
