#include "damln/cli.h"

#include <cstdlib>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "damln/error.h"
#include "damln/fs_benchmark.h"
#include "damln/grounder.h"
#include "damln/inference.h"
#include "damln/learning.h"
#include "damln/mln_io.h"
#include "damln/random.h"

namespace damln {
namespace {

// Routes the default spdlog logger to `err` for the lifetime of the object.
class ScopedLogger {
 public:
  explicit ScopedLogger(std::ostream& err) : previous_(spdlog::default_logger()) {
    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err, true);
    auto logger = std::make_shared<spdlog::logger>("damln", sink);
    logger->set_pattern("[%l] %v");
    spdlog::level::level_enum level = spdlog::level::info;
    if (const char* env = std::getenv("DAMLN_LOG_LEVEL")) {
      level = spdlog::level::from_str(env);
    }
    logger->set_level(level);
    spdlog::set_default_logger(logger);
  }
  ~ScopedLogger() { spdlog::set_default_logger(previous_); }

 private:
  std::shared_ptr<spdlog::logger> previous_;
};

std::vector<std::string> SplitCommas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string Join(const std::vector<std::string>& v, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += sep;
    out += v[i];
  }
  return out;
}

struct LearnArgs {
  std::string model;
  std::string dbs;
  std::string out;
  std::string mode;
  std::string aggregator;
  double prior_std = 10.0;
  int max_iterations = 100;
  double tolerance = 1e-4;
  std::string optimizer = "cg";
  bool per_db_normalize = false;
  bool strict = false;
};

struct InferArgs {
  std::string model;
  std::string evidence;
  std::string query;
  std::string out;
  std::string mode;
  std::string aggregator;
  bool exact = false;
  std::size_t exact_cap = kDefaultExactCap;
  int samples = 10000;
  int burn_in = 1000;
  int chains = 3;
  std::uint64_t seed = 1;
  bool strict = false;
};

struct GenerateArgs {
  int size = 0;
  std::uint64_t seed = 1;
  std::string out;
  double evidence_frac = 0.5;
  std::string evidence_out;
  std::string truth_out;
};

struct EvalArgs {
  std::string marginals;
  std::string truth;
  std::string out;
};

struct ExperimentArgs {
  std::string config;
  std::string out;
  std::string plot_data;
  int threads = 0;
};

Model LoadModel(const std::string& path) { return ParseModel(ReadFile(path)); }

int CmdLearn(const LearnArgs& a) {
  const Model model = LoadModel(a.model);
  LearnConfig cfg;
  cfg.mode = a.mode.empty() ? model.settings.mode : ParseMode(a.mode);
  cfg.aggregator =
      a.aggregator.empty() ? model.settings.aggregator : ParseAggregator(a.aggregator);
  cfg.prior_std = a.prior_std;
  cfg.max_iterations = a.max_iterations;
  cfg.tolerance = a.tolerance;
  cfg.per_db_normalize = a.per_db_normalize;
  if (a.optimizer == "cg") {
    cfg.optimizer = Optimizer::kConjugateGradient;
  } else if (a.optimizer == "ga") {
    cfg.optimizer = Optimizer::kGradientAscent;
  } else {
    throw Error(ErrorCode::kInvalidArgument,
                "unknown optimizer '" + a.optimizer + "' (expected cg|ga)");
  }
  const std::vector<std::string> paths = SplitCommas(a.dbs);
  spdlog::info("learn: model={} db={} out={} mode={} aggregator={} prior_std={} "
               "max_iterations={} tolerance={} optimizer={} per_db_normalize={} "
               "strict={}",
               a.model, Join(paths, ","), a.out, ModeName(cfg.mode),
               AggregatorName(cfg.aggregator), cfg.prior_std, cfg.max_iterations,
               cfg.tolerance, a.optimizer, cfg.per_db_normalize, a.strict);

  std::vector<Database> dbs;
  for (const std::string& path : paths) {
    dbs.push_back(ParseDatabase(ReadFile(path), model, {a.strict}));
  }
  const LearnResult result =
      LearnWeights(model, TrainingSet::FromDatabases(model, dbs), cfg);
  Model learned = model.WithWeights(result.weights);
  learned.settings = {cfg.mode, cfg.aggregator};
  WriteFile(a.out, SerializeModel(learned));
  return kExitOk;
}

int CmdInfer(const InferArgs& a) {
  const Model model = LoadModel(a.model);
  GroundingOptions options = GroundingOptions::FromModel(model);
  if (!a.mode.empty()) options.mode = ParseMode(a.mode);
  if (!a.aggregator.empty()) options.aggregator = ParseAggregator(a.aggregator);
  const std::vector<std::string> queries = SplitCommas(a.query);
  spdlog::info("infer: model={} evidence={} query={} out={} mode={} aggregator={} "
               "method={} exact_cap={} chains={} burn_in={} samples={} seed={} "
               "strict={}",
               a.model, a.evidence.empty() ? "(none)" : a.evidence,
               Join(queries, ","), a.out, ModeName(options.mode),
               AggregatorName(options.aggregator), a.exact ? "exact" : "gibbs",
               a.exact_cap, a.chains, a.burn_in, a.samples, a.seed, a.strict);

  Database evidence;
  if (!a.evidence.empty()) {
    evidence = ParseDatabase(ReadFile(a.evidence), model, {a.strict});
  }
  const GroundNetwork net = GroundNetwork::Build(
      model, ResolveDomains(model, evidence), evidence,
      std::set<std::string>(queries.begin(), queries.end()), options);

  MarginalTable marginals;
  if (a.exact) {
    marginals = ExactMarginals(net, a.exact_cap).marginals;
  } else {
    GibbsParams gp;
    gp.chains = a.chains;
    gp.burn_in = a.burn_in;
    gp.samples = a.samples;
    gp.seed = a.seed;
    marginals = GibbsMarginals(net, gp);
  }
  std::ostringstream csv;
  WriteMarginals(marginals, csv);
  WriteFile(a.out, csv.str());
  return kExitOk;
}

int CmdGenerate(const GenerateArgs& a) {
  spdlog::info("generate-fs: size={} seed={} out={} evidence_frac={} "
               "evidence_out={} truth_out={}",
               a.size, a.seed, a.out, a.evidence_frac,
               a.evidence_out.empty() ? "(none)" : a.evidence_out,
               a.truth_out.empty() ? "(none)" : a.truth_out);
  const FsWorld world = GenerateFs(a.size, FsParams{}, a.seed);
  WriteFile(a.out, SerializeDatabase(world.db));
  if (!a.evidence_out.empty() || !a.truth_out.empty()) {
    const EvidenceSplit split =
        MakeEvidence(world.db, a.evidence_frac, DeriveSeed(a.seed, {3}));
    if (!a.evidence_out.empty()) {
      WriteFile(a.evidence_out, SerializeDatabase(split.evidence));
    }
    if (!a.truth_out.empty()) WriteFile(a.truth_out, SerializeDatabase(split.truth));
  }
  return kExitOk;
}

int CmdEval(const EvalArgs& a) {
  spdlog::info("eval: marginals={} truth={} out={}", a.marginals, a.truth, a.out);
  const MarginalTable marginals = ParseMarginals(ReadFile(a.marginals));
  const Database truth = ParseLiterals(ReadFile(a.truth));

  std::ostringstream csv;
  csv << "scope,auc\n";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", PrAuc(marginals, truth.literals));
  csv << "all," << buf << '\n';
  std::map<std::string, std::map<GroundAtom, bool>> by_predicate;
  for (const auto& [atom, value] : truth.literals) {
    by_predicate[atom.predicate].emplace(atom, value);
  }
  for (const auto& [pred, labels] : by_predicate) {
    try {
      std::snprintf(buf, sizeof(buf), "%.6f", PrAuc(marginals, labels));
      csv << pred << ',' << buf << '\n';
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoPositives) throw;
      csv << pred << ",nan\n";
    }
  }
  WriteFile(a.out, csv.str());
  return kExitOk;
}

int CmdExperiment(const ExperimentArgs& a) {
  ExperimentConfig cfg = ParseExperimentConfig(ReadFile(a.config));
  if (a.threads > 0) cfg.threads = a.threads;
  spdlog::info("experiment: config={} out={} plot_data={} {}", a.config, a.out,
               a.plot_data.empty() ? "(none)" : a.plot_data, DescribeConfig(cfg));
  const std::vector<ExperimentRow> rows = RunExperiment(cfg);
  std::ostringstream csv;
  WriteResults(rows, csv);
  WriteFile(a.out, csv.str());
  if (!a.plot_data.empty()) {
    std::ostringstream plot;
    WritePlotData(rows, plot);
    WriteFile(a.plot_data, plot.str());
  }
  return kExitOk;
}

}  // namespace

int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err) {
  ScopedLogger logger(err);

  CLI::App app{"Domain-aware Markov logic network engine", "damln"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "damln 1.0.0");

  LearnArgs learn;
  CLI::App* learn_cmd =
      app.add_subcommand("learn", "Learn formula weights by pseudo-likelihood");
  learn_cmd->add_option("--model", learn.model, "Model file")->required();
  learn_cmd->add_option("--db", learn.dbs, "Comma-separated training databases")
      ->required();
  learn_cmd->add_option("--out", learn.out, "Output model file")->required();
  learn_cmd->add_option("--mode", learn.mode, "damln|mln (default: model setting)")
      ->check(CLI::IsMember({"damln", "mln"}));
  learn_cmd->add_option("--aggregator", learn.aggregator,
                        "max|sum (default: model setting)")
      ->check(CLI::IsMember({"max", "sum"}));
  learn_cmd->add_option("--prior-std", learn.prior_std,
                        "Std-dev of the Gaussian weight prior")
      ->capture_default_str();
  learn_cmd->add_option("--max-iterations", learn.max_iterations,
                        "Optimizer iteration limit")
      ->capture_default_str();
  learn_cmd->add_option("--tolerance", learn.tolerance,
                        "Stop when the gradient infinity norm is below this")
      ->capture_default_str();
  learn_cmd->add_option("--optimizer", learn.optimizer,
                        "cg (conjugate gradient) or ga (gradient ascent)")
      ->check(CLI::IsMember({"cg", "ga"}))
      ->capture_default_str();
  learn_cmd->add_flag("--per-db-normalize", learn.per_db_normalize,
                      "Divide each database's term by its atom count");
  learn_cmd->add_flag("--strict", learn.strict,
                      "Reject constants outside the declared domains");

  InferArgs infer;
  CLI::App* infer_cmd =
      app.add_subcommand("infer", "Estimate marginals of query atoms");
  infer_cmd->add_option("--model", infer.model, "Model file")->required();
  infer_cmd->add_option("--evidence", infer.evidence, "Evidence database");
  infer_cmd->add_option("--query", infer.query, "Comma-separated query predicates")
      ->required();
  infer_cmd->add_option("--out", infer.out, "Output marginals CSV")->required();
  infer_cmd->add_option("--mode", infer.mode, "damln|mln (default: model setting)")
      ->check(CLI::IsMember({"damln", "mln"}));
  infer_cmd->add_option("--aggregator", infer.aggregator,
                        "max|sum (default: model setting)")
      ->check(CLI::IsMember({"max", "sum"}));
  infer_cmd->add_flag("--exact", infer.exact, "Exact inference by enumeration");
  infer_cmd->add_option("--exact-cap", infer.exact_cap,
                        "Largest number of free atoms for --exact")
      ->capture_default_str();
  infer_cmd->add_option("--samples", infer.samples, "Recorded Gibbs sweeps per chain")
      ->capture_default_str();
  infer_cmd->add_option("--burn-in", infer.burn_in, "Gibbs burn-in sweeps")
      ->capture_default_str();
  infer_cmd->add_option("--chains", infer.chains, "Gibbs chains")
      ->capture_default_str();
  infer_cmd->add_option("--seed", infer.seed, "Random seed")->capture_default_str();
  infer_cmd->add_flag("--strict", infer.strict,
                      "Reject constants outside the declared domains");

  GenerateArgs gen;
  CLI::App* gen_cmd =
      app.add_subcommand("generate-fs", "Generate a Friends & Smokers database");
  gen_cmd->add_option("--size", gen.size, "Number of people")->required();
  gen_cmd->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output database (complete world)")
      ->required();
  gen_cmd->add_option("--evidence-frac", gen.evidence_frac,
                      "Fraction of Smokes atoms observed as evidence")
      ->capture_default_str();
  gen_cmd->add_option("--evidence-out", gen.evidence_out, "Output evidence database");
  gen_cmd->add_option("--truth-out", gen.truth_out,
                      "Output held-out truth database");

  EvalArgs eval;
  CLI::App* eval_cmd =
      app.add_subcommand("eval", "Score marginals against held-out truth (PR-AUC)");
  eval_cmd->add_option("--marginals", eval.marginals, "Marginals CSV")->required();
  eval_cmd->add_option("--truth", eval.truth, "Truth database")->required();
  eval_cmd->add_option("--out", eval.out, "Output CSV (scope,auc)")->required();

  ExperimentArgs exp;
  CLI::App* exp_cmd = app.add_subcommand(
      "experiment", "Run the Friends & Smokers domain-size experiment");
  exp_cmd->add_option("--config", exp.config, "key=value configuration file")
      ->required();
  exp_cmd->add_option("--out", exp.out, "Output results CSV")->required();
  exp_cmd->add_option("--plot-data", exp.plot_data,
                      "Optional gnuplot data file of mean AUC per test size");
  exp_cmd->add_option("--threads", exp.threads,
                      "Worker threads (overrides the config file)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (learn_cmd->parsed()) return CmdLearn(learn);
    if (infer_cmd->parsed()) return CmdInfer(infer);
    if (gen_cmd->parsed()) return CmdGenerate(gen);
    if (eval_cmd->parsed()) return CmdEval(eval);
    if (exp_cmd->parsed()) return CmdExperiment(exp);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.is_resource_error() ? kExitResource : kExitData;
  } catch (const std::bad_alloc&) {
    err << "error: out of memory\n";
    return kExitResource;
  }
  return kExitUsage;
}

}  // namespace damln
