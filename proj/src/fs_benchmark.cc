#include "damln/fs_benchmark.h"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "damln/error.h"
#include "damln/random.h"

namespace damln {
namespace {

constexpr char kFsModel[] =
    "// Friends & Smokers. The person domain is filled in by each database.\n"
    "person = {}\n"
    "Friends(person, person)\n"
    "Smokes(person)\n"
    "Cancer(person)\n"
    "\n"
    "0  Smokes(x) => Cancer(x)\n"
    "0  Friends(x, y) => (Smokes(x) <=> Smokes(y))\n"
    "0  Smokes(x)\n"
    "0  Cancer(x)\n"
    "0  Friends(x, y)\n";

std::string PersonName(int index, int n) {
  int width = 1;
  for (int v = n - 1; v >= 10; v /= 10) ++width;
  std::string digits = std::to_string(index);
  return "P" + std::string(width - std::min<int>(width, digits.size()), '0') + digits;
}

template <typename T>
void Shuffle(std::vector<T>& items, Rng& rng) {
  // Fisher-Yates with our own index draws so the order does not depend on
  // the standard library's distribution implementation.
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(items[i - 1], items[j]);
  }
}

std::string Trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> SplitList(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = Trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double ToDouble(const std::string& key, const std::string& value) {
  char* end = nullptr;
  double v = std::strtod(value.c_str(), &end);
  if (value.empty() || end != value.c_str() + value.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::kInvalidArgument,
                "'" + key + "' expects a number, got '" + value + "'");
  }
  return v;
}

long long ToInt(const std::string& key, const std::string& value) {
  char* end = nullptr;
  long long v = std::strtoll(value.c_str(), &end, 10);
  if (value.empty() || end != value.c_str() + value.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "'" + key + "' expects an integer, got '" + value + "'");
  }
  return v;
}

bool ToBool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw Error(ErrorCode::kInvalidArgument,
              "'" + key + "' expects true/false, got '" + value + "'");
}

std::string JoinInts(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

std::map<GroundAtom, bool> LabelsFor(const Database& truth,
                                     const std::string& predicate) {
  std::map<GroundAtom, bool> out;
  for (const auto& [atom, value] : truth.literals) {
    if (predicate.empty() || atom.predicate == predicate) out.emplace(atom, value);
  }
  return out;
}

double AucOrNan(const MarginalTable& scores, const std::map<GroundAtom, bool>& labels) {
  try {
    return PrAuc(scores, labels);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kNoPositives) return std::nan("");
    throw;
  }
}

}  // namespace

void FsParams::Validate() const {
  for (double p : {p_f_in, p_f_out, p_g, p_s_smoking, p_s_nonsmoking, p_c_smoker,
                   p_c_nonsmoker}) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "Friends & Smokers probabilities must lie in [0,1]");
    }
  }
}

FsWorld GenerateFs(int n, const FsParams& params, std::uint64_t seed) {
  if (n < 2) {
    throw Error(ErrorCode::kInvalidSize,
                "need at least 2 people, got " + std::to_string(n));
  }
  params.Validate();
  Rng rng(DeriveSeed(seed, {0xF5}));

  FsWorld world;
  world.num_groups = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
  for (int i = 0; i < n; ++i) world.people.push_back(PersonName(i, n));

  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  Shuffle(order, rng);
  world.group_of.assign(n, 0);
  const int g = world.num_groups;
  const int base = n / g;
  const int larger = n % g;  // the first `larger` groups get one extra person
  int pos = 0;
  for (int group = 0; group < g; ++group) {
    const int size = base + (group < larger ? 1 : 0);
    for (int k = 0; k < size; ++k) world.group_of[order[pos++]] = group;
  }
  for (int group = 0; group < g; ++group) {
    world.smoking_group.push_back(Bernoulli(rng, params.p_g));
  }

  Database& db = world.db;
  db.added_constants["person"] = world.people;
  std::vector<std::uint8_t> friends(static_cast<std::size_t>(n) * n, 0);
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      const double p = world.group_of[a] == world.group_of[b] ? params.p_f_in
                                                              : params.p_f_out;
      const std::uint8_t f = Bernoulli(rng, p) ? 1 : 0;
      friends[a * n + b] = f;
      friends[b * n + a] = f;
    }
  }
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      db.literals.emplace(GroundAtom{"Friends", {world.people[a], world.people[b]}},
                          friends[a * n + b] != 0);
    }
  }
  for (int a = 0; a < n; ++a) {
    const bool smoking_group = world.smoking_group[world.group_of[a]];
    const bool smokes = Bernoulli(
        rng, smoking_group ? params.p_s_smoking : params.p_s_nonsmoking);
    const bool cancer =
        Bernoulli(rng, smokes ? params.p_c_smoker : params.p_c_nonsmoker);
    db.literals.emplace(GroundAtom{"Smokes", {world.people[a]}}, smokes);
    db.literals.emplace(GroundAtom{"Cancer", {world.people[a]}}, cancer);
  }
  return world;
}

EvidenceSplit MakeEvidence(const Database& complete, double fraction,
                           std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "evidence fraction must lie in [0,1]");
  }
  EvidenceSplit split;
  split.evidence.added_constants = complete.added_constants;
  split.truth.added_constants = complete.added_constants;
  split.evidence.closed_world["Smokes"] = false;
  split.evidence.closed_world["Cancer"] = false;

  std::vector<GroundAtom> smokes;
  for (const auto& [atom, value] : complete.literals) {
    if (atom.predicate == "Friends") {
      split.evidence.literals.emplace(atom, value);
    } else if (atom.predicate == "Smokes") {
      smokes.push_back(atom);
    } else if (atom.predicate == "Cancer") {
      split.truth.literals.emplace(atom, value);
    }
  }
  Rng rng(DeriveSeed(seed, {0xE1}));
  Shuffle(smokes, rng);
  const std::size_t observed = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(smokes.size()) + 1e-9));
  for (std::size_t k = 0; k < smokes.size(); ++k) {
    Database& target = k < observed ? split.evidence : split.truth;
    target.literals.emplace(smokes[k], complete.literals.at(smokes[k]));
  }
  return split;
}

double PrAuc(const std::vector<double>& scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorCode::kInvalidArgument, "scores and labels differ in length");
  }
  const std::size_t positives =
      static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
  if (positives == 0) throw Error(ErrorCode::kNoPositives, "no positive labels");

  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  double area = 0.0;
  std::size_t tp = 0;
  std::size_t seen = 0;
  for (std::size_t start = 0; start < order.size();) {
    std::size_t end = start;
    std::size_t block_pos = 0;
    while (end < order.size() && scores[order[end]] == scores[order[start]]) {
      if (labels[order[end]]) ++block_pos;
      ++end;
    }
    tp += block_pos;
    seen += end - start;
    if (block_pos > 0) {
      const double precision = static_cast<double>(tp) / static_cast<double>(seen);
      area += precision * static_cast<double>(block_pos) / static_cast<double>(positives);
    }
    start = end;
  }
  return area;
}

double PrAuc(const MarginalTable& scores, const std::map<GroundAtom, bool>& labels) {
  std::vector<double> s;
  std::vector<bool> l;
  for (const auto& [atom, label] : labels) {
    auto it = scores.find(atom);
    if (it == scores.end()) {
      throw Error(ErrorCode::kUnknownAtom, "no score for " + atom.ToString());
    }
    s.push_back(it->second);
    l.push_back(label);
  }
  return PrAuc(s, l);
}

std::string_view FsModelText() { return kFsModel; }

Model FsModel() { return ParseModel(FsModelText()); }

void ExperimentConfig::Validate() const {
  if (train_sizes.empty() || test_sizes.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "train and test sizes must be given");
  }
  for (int s : train_sizes) {
    if (s < 2) throw Error(ErrorCode::kInvalidSize, "train sizes must be >= 2");
  }
  for (int s : test_sizes) {
    if (s < 2) throw Error(ErrorCode::kInvalidSize, "test sizes must be >= 2");
  }
  if (trials < 1 || dbs_per_size < 1 || threads < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "trials, dbs_per_size and threads must be >= 1");
  }
  if (modes.empty()) throw Error(ErrorCode::kInvalidArgument, "no modes given");
  if (!(evidence_fraction >= 0.0 && evidence_fraction <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "evidence_fraction must lie in [0,1]");
  }
  if (gibbs.chains < 1 || gibbs.samples < 1 || gibbs.burn_in < 0) {
    throw Error(ErrorCode::kInvalidArgument, "invalid Gibbs parameters");
  }
  if (!(prior_std > 0.0) || !(tolerance > 0.0) || max_iterations < 0) {
    throw Error(ErrorCode::kInvalidArgument, "invalid learning parameters");
  }
  fs.Validate();
}

ExperimentConfig ParseExperimentConfig(std::string_view text) {
  ExperimentConfig cfg;
  std::stringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    for (const char* marker : {"#", "//"}) {
      std::size_t c = line.find(marker);
      if (c != std::string::npos) line.erase(c);
    }
    line = Trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kSyntaxError, "expected key = value", line_no);
    }
    const std::string key = Trim(line.substr(0, eq));
    std::string value = Trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (value.size() >= 2 && value.front() == '[' && value.back() == ']') {
      value = value.substr(1, value.size() - 2);
    }
    try {
      auto int_list = [&] {
        std::vector<int> out;
        for (const std::string& item : SplitList(value)) {
          out.push_back(static_cast<int>(ToInt(key, item)));
        }
        return out;
      };
      if (key == "train_sizes") {
        cfg.train_sizes = int_list();
      } else if (key == "test_sizes") {
        cfg.test_sizes = int_list();
      } else if (key == "dbs_per_size") {
        cfg.dbs_per_size = static_cast<int>(ToInt(key, value));
      } else if (key == "trials") {
        cfg.trials = static_cast<int>(ToInt(key, value));
      } else if (key == "seed") {
        cfg.seed = static_cast<std::uint64_t>(ToInt(key, value));
      } else if (key == "modes") {
        cfg.modes.clear();
        for (const std::string& item : SplitList(value)) cfg.modes.push_back(ParseMode(item));
      } else if (key == "aggregator") {
        cfg.aggregator = ParseAggregator(value);
      } else if (key == "evidence_fraction") {
        cfg.evidence_fraction = ToDouble(key, value);
      } else if (key == "chains") {
        cfg.gibbs.chains = static_cast<int>(ToInt(key, value));
      } else if (key == "burn_in") {
        cfg.gibbs.burn_in = static_cast<int>(ToInt(key, value));
      } else if (key == "samples") {
        cfg.gibbs.samples = static_cast<int>(ToInt(key, value));
      } else if (key == "prior_std") {
        cfg.prior_std = ToDouble(key, value);
      } else if (key == "max_iterations") {
        cfg.max_iterations = static_cast<int>(ToInt(key, value));
      } else if (key == "tolerance") {
        cfg.tolerance = ToDouble(key, value);
      } else if (key == "per_db_normalize") {
        cfg.per_db_normalize = ToBool(key, value);
      } else if (key == "threads") {
        cfg.threads = static_cast<int>(ToInt(key, value));
      } else if (key == "p_f_in") {
        cfg.fs.p_f_in = ToDouble(key, value);
      } else if (key == "p_f_out") {
        cfg.fs.p_f_out = ToDouble(key, value);
      } else if (key == "p_g") {
        cfg.fs.p_g = ToDouble(key, value);
      } else if (key == "p_s_smoking") {
        cfg.fs.p_s_smoking = ToDouble(key, value);
      } else if (key == "p_s_nonsmoking") {
        cfg.fs.p_s_nonsmoking = ToDouble(key, value);
      } else if (key == "p_c_smoker") {
        cfg.fs.p_c_smoker = ToDouble(key, value);
      } else if (key == "p_c_nonsmoker") {
        cfg.fs.p_c_nonsmoker = ToDouble(key, value);
      } else {
        throw Error(ErrorCode::kInvalidArgument, "unknown key '" + key + "'");
      }
    } catch (const Error& e) {
      if (e.line() > 0) throw;
      throw Error(e.code(), std::string(e.what()), line_no);
    }
  }
  cfg.Validate();
  return cfg;
}

std::string DescribeConfig(const ExperimentConfig& cfg) {
  std::ostringstream out;
  std::string modes;
  for (std::size_t i = 0; i < cfg.modes.size(); ++i) {
    if (i > 0) modes += ',';
    modes += ModeName(cfg.modes[i]);
  }
  out << "train_sizes=" << JoinInts(cfg.train_sizes)
      << " dbs_per_size=" << cfg.dbs_per_size
      << " test_sizes=" << JoinInts(cfg.test_sizes) << " trials=" << cfg.trials
      << " seed=" << cfg.seed << " modes=" << modes
      << " aggregator=" << AggregatorName(cfg.aggregator)
      << " evidence_fraction=" << cfg.evidence_fraction
      << " chains=" << cfg.gibbs.chains << " burn_in=" << cfg.gibbs.burn_in
      << " samples=" << cfg.gibbs.samples << " prior_std=" << cfg.prior_std
      << " max_iterations=" << cfg.max_iterations
      << " tolerance=" << cfg.tolerance
      << " per_db_normalize=" << (cfg.per_db_normalize ? "true" : "false")
      << " threads=" << cfg.threads;
  return out.str();
}

std::vector<ExperimentRow> RunExperiment(const ExperimentConfig& cfg,
                                         std::vector<LearnedModel>* learned) {
  cfg.Validate();
  const Model model = FsModel();

  std::vector<Database> training;
  for (int size : cfg.train_sizes) {
    for (int k = 0; k < cfg.dbs_per_size; ++k) {
      const std::uint64_t s =
          DeriveSeed(cfg.seed, {1, static_cast<std::uint64_t>(size),
                                static_cast<std::uint64_t>(k)});
      training.push_back(GenerateFs(size, cfg.fs, s).db);
    }
  }
  const TrainingSet ts = TrainingSet::FromDatabases(model, training);

  std::vector<LearnedModel> models;
  for (Mode mode : cfg.modes) {
    LearnConfig lc;
    lc.prior_std = cfg.prior_std;
    lc.max_iterations = cfg.max_iterations;
    lc.tolerance = cfg.tolerance;
    lc.mode = mode;
    lc.aggregator = cfg.aggregator;
    lc.per_db_normalize = cfg.per_db_normalize;
    LearnResult r = LearnWeights(model, ts, lc);
    std::string ws;
    for (double w : r.weights) ws += " " + std::to_string(w);
    spdlog::info("learned {} weights:{}", ModeName(mode), ws);
    models.push_back({mode, r.weights, r.converged});
  }
  if (learned) *learned = models;

  struct Task {
    int size;
    int trial;
  };
  std::vector<Task> tasks;
  for (int size : cfg.test_sizes) {
    for (int trial = 0; trial < cfg.trials; ++trial) tasks.push_back({size, trial});
  }
  // rows[task][mode]
  std::vector<std::vector<ExperimentRow>> rows(tasks.size());

  auto run_task = [&](std::size_t t) {
    const Task& task = tasks[t];
    const std::uint64_t world_seed =
        DeriveSeed(cfg.seed, {2, static_cast<std::uint64_t>(task.size),
                              static_cast<std::uint64_t>(task.trial)});
    std::vector<ExperimentRow>& out = rows[t];
    for (const LearnedModel& lm : models) {
      ExperimentRow row;
      row.method = std::string(ModeName(lm.mode));
      row.aggregator = std::string(AggregatorName(cfg.aggregator));
      row.train_sizes = cfg.train_sizes;
      row.test_size = task.size;
      row.trial = task.trial;
      row.seed = world_seed;
      out.push_back(row);
    }
    try {
      const FsWorld world = GenerateFs(task.size, cfg.fs, world_seed);
      const EvidenceSplit split =
          MakeEvidence(world.db, cfg.evidence_fraction, DeriveSeed(world_seed, {3}));
      const DomainMap domains = ResolveDomains(model, split.evidence);
      for (std::size_t m = 0; m < models.size(); ++m) {
        ExperimentRow& row = out[m];
        try {
          GroundNetwork net = GroundNetwork::Build(
              model.WithWeights(models[m].weights), domains, split.evidence,
              {"Smokes", "Cancer"}, {models[m].mode, cfg.aggregator});
          GibbsParams gp = cfg.gibbs;
          gp.seed = DeriveSeed(world_seed, {4});
          gp.parallel = cfg.threads == 1;
          const MarginalTable marginals = GibbsMarginals(net, gp);
          row.auc_all = AucOrNan(marginals, LabelsFor(split.truth, ""));
          row.auc_cancer = AucOrNan(marginals, LabelsFor(split.truth, "Cancer"));
          row.auc_smokes = AucOrNan(marginals, LabelsFor(split.truth, "Smokes"));
        } catch (const Error& e) {
          row.error = e.what();
        }
      }
    } catch (const Error& e) {
      for (ExperimentRow& row : out) row.error = e.what();
    }
    for (const ExperimentRow& row : out) {
      if (!row.error.empty()) {
        spdlog::warn("trial {} at size {} ({}) failed: {}", row.trial,
                     row.test_size, row.method, row.error);
      }
    }
    spdlog::info("finished test size {} trial {}", task.size, task.trial);
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < tasks.size(); t = next++) run_task(t);
  };
  const int n_threads = std::min<int>(cfg.threads, static_cast<int>(tasks.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }

  std::vector<ExperimentRow> result;
  for (std::size_t m = 0; m < models.size(); ++m) {
    for (const std::vector<ExperimentRow>& task_rows : rows) {
      result.push_back(task_rows[m]);
    }
  }
  return result;
}

void WritePlotData(const std::vector<ExperimentRow>& rows, std::ostream& out) {
  std::vector<std::string> methods;
  std::map<int, std::map<std::string, std::pair<double, int>>> table;
  for (const ExperimentRow& r : rows) {
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) {
      methods.push_back(r.method);
    }
    if (!r.error.empty() || !std::isfinite(r.auc_all)) continue;
    auto& cell = table[r.test_size][r.method];
    cell.first += r.auc_all;
    cell.second += 1;
  }
  out << "# test_size";
  for (const std::string& m : methods) out << ' ' << m;
  out << '\n';
  for (const auto& [size, cells] : table) {
    out << size;
    for (const std::string& m : methods) {
      auto it = cells.find(m);
      char buf[32];
      if (it == cells.end() || it->second.second == 0) {
        std::snprintf(buf, sizeof(buf), " nan");
      } else {
        std::snprintf(buf, sizeof(buf), " %.6f", it->second.first / it->second.second);
      }
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace damln
