#include "pullcons/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pullcons/coalescing.hpp"
#include "pullcons/dominance.hpp"
#include "pullcons/drift.hpp"
#include "pullcons/error.hpp"
#include "pullcons/harness.hpp"
#include "pullcons/parallel.hpp"
#include "pullcons/rules.hpp"

namespace pullcons {

namespace {

using Json = nlohmann::ordered_json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Json metadata() { return Json{{"log_base", "e"}, {"version", std::string(kVersion)}}; }

Json optional_time(const std::optional<std::uint64_t>& t) {
  return t ? Json(*t) : Json(nullptr);
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

// Quantile with linear interpolation between order statistics.
double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::nan("");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

constexpr const char* kTimeSummaryHeader =
    "subcommand,rule,n,kappa,trials,censored,mean,median,q05,q25,q75,q95,min,max";

std::string time_summary_row(const std::string& sub, const std::string& rule, Count n,
                             Count kappa, const std::vector<std::optional<std::uint64_t>>& times) {
  std::vector<double> done;
  for (const auto& t : times) {
    if (t) done.push_back(static_cast<double>(*t));
  }
  std::sort(done.begin(), done.end());
  double mean = std::nan("");
  if (!done.empty()) {
    double s = 0.0;
    for (double v : done) s += v;
    mean = s / static_cast<double>(done.size());
  }
  std::ostringstream row;
  row << sub << ',' << rule << ',' << n << ',' << kappa << ',' << times.size() << ','
      << (times.size() - done.size()) << ',' << format_double(mean) << ','
      << format_double(quantile(done, 0.5)) << ',' << format_double(quantile(done, 0.05)) << ','
      << format_double(quantile(done, 0.25)) << ',' << format_double(quantile(done, 0.75)) << ','
      << format_double(quantile(done, 0.95)) << ','
      << format_double(done.empty() ? std::nan("") : done.front()) << ','
      << format_double(done.empty() ? std::nan("") : done.back());
  return row.str();
}

// Output routing shared by every subcommand.
class Sinks {
 public:
  Sinks(std::ostream& fallback, const std::string& out_path, const std::string& summary_path)
      : fallback_(&fallback) {
    if (!out_path.empty()) {
      file_ = std::make_unique<std::ofstream>(out_path, std::ios::binary);
      if (!*file_) throw UsageError("--out: cannot open '" + out_path + "'");
      summary_path_ = summary_path.empty() ? out_path + ".summary.csv" : summary_path;
    } else {
      summary_path_ = summary_path;
    }
  }

  void record(const Json& j) { stream() << j.dump() << '\n'; }

  void summary(const std::string& header, const std::vector<std::string>& rows) {
    if (summary_path_.empty()) return;
    std::ofstream csv(summary_path_, std::ios::binary);
    if (!csv) throw UsageError("--summary: cannot open '" + summary_path_ + "'");
    csv << header << '\n';
    for (const auto& r : rows) csv << r << '\n';
  }

  void finish() {
    stream().flush();
    if (file_ && !*file_) throw std::runtime_error("write to --out failed");
  }

 private:
  std::ostream& stream() { return file_ ? *file_ : *fallback_; }

  std::ostream* fallback_;
  std::unique_ptr<std::ofstream> file_;
  std::string summary_path_;
};

struct CommonOptions {
  std::uint64_t seed = 1;
  std::uint64_t trials = 1;
  unsigned workers = 1;
  std::string out;
  std::string summary;
  std::string spec;
};

void add_output_options(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--out", o.out, "JSON-lines output path (stdout when absent)");
  cmd->add_option("--summary", o.summary, "CSV summary path (default <out>.summary.csv)");
}

void add_run_options(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--trials", o.trials, "number of trials");
  cmd->add_option("--workers", o.workers, "worker threads")->check(CLI::Range(1u, 1024u));
  add_output_options(cmd, o);
}

bool given(const CLI::App* cmd, const std::string& name) { return cmd->count(name) > 0; }

UpdateRule rule_from(const std::string& text, const std::string& field) {
  try {
    return parse_rule(text);
  } catch (const Error& e) {
    throw UsageError(field + ": " + e.what());
  }
}

InitialSpec initial_from(const std::string& text, const std::string& field) {
  try {
    return InitialSpec::parse(text);
  } catch (const Error& e) {
    throw UsageError(field + ": " + e.what());
  }
}

Configuration build_initial(const InitialSpec& init, Count n, const std::string& field) {
  try {
    return init.build(n);
  } catch (const Error& e) {
    throw UsageError(field + ": " + e.what());
  }
}

// --- JSON experiment spec -------------------------------------------------

std::uint64_t json_uint(const Json& j, const std::string& field) {
  if (!j.is_number_unsigned()) {
    throw UsageError("spec field '" + field + "': expected a non-negative integer");
  }
  return j.get<std::uint64_t>();
}

Count json_count(const Json& j, const std::string& field) {
  if (!j.is_number_integer()) {
    throw UsageError("spec field '" + field + "': expected an integer");
  }
  return j.get<Count>();
}

std::string json_string(const Json& j, const std::string& field) {
  if (!j.is_string()) throw UsageError("spec field '" + field + "': expected a string");
  return j.get<std::string>();
}

void reject_unknown(const Json& obj, std::initializer_list<const char*> known,
                    const std::string& prefix) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    const bool ok = std::any_of(known.begin(), known.end(),
                                [&](const char* k) { return key == k; });
    if (!ok) throw UsageError("spec field '" + prefix + key + "': unknown field");
  }
}

InitialSpec initial_from_json(const Json& j) {
  if (j.is_string()) return initial_from(j.get<std::string>(), "spec field 'initial'");
  if (!j.is_object()) throw UsageError("spec field 'initial': expected a string or an object");
  reject_unknown(j, {"kind", "k", "bias", "counts"}, "initial.");
  if (!j.contains("kind")) throw UsageError("spec field 'initial.kind': missing");
  const auto kind = json_string(j["kind"], "initial.kind");
  InitialSpec init;
  if (kind == "ncolor") {
    init.kind = InitialSpec::Kind::NColor;
  } else if (kind == "balanced") {
    init.kind = InitialSpec::Kind::Balanced;
    if (!j.contains("k")) throw UsageError("spec field 'initial.k': missing");
    init.k = json_count(j["k"], "initial.k");
  } else if (kind == "biased") {
    init.kind = InitialSpec::Kind::Biased;
    if (!j.contains("k")) throw UsageError("spec field 'initial.k': missing");
    if (!j.contains("bias")) throw UsageError("spec field 'initial.bias': missing");
    init.k = json_count(j["k"], "initial.k");
    init.bias = json_count(j["bias"], "initial.bias");
  } else if (kind == "explicit") {
    init.kind = InitialSpec::Kind::Explicit;
    if (!j.contains("counts") || !j["counts"].is_array()) {
      throw UsageError("spec field 'initial.counts': expected an array");
    }
    for (std::size_t i = 0; i < j["counts"].size(); ++i) {
      init.counts.push_back(json_count(j["counts"][i], "initial.counts[" + std::to_string(i) + "]"));
    }
  } else {
    throw UsageError("spec field 'initial.kind': unknown kind '" + kind + "'");
  }
  return init;
}

RecordSpec record_from_json(const Json& j) {
  if (!j.is_object()) throw UsageError("spec field 'record': expected an object");
  reject_unknown(j, {"mode", "every", "full_counts"}, "record.");
  RecordSpec r;
  if (j.contains("mode")) {
    const auto mode = json_string(j["mode"], "record.mode");
    if (mode == "summary") {
      r.mode = RecordSpec::Mode::SummaryOnly;
    } else if (mode == "auto") {
      r.mode = RecordSpec::Mode::Auto;
    } else if (mode == "every") {
      r.mode = RecordSpec::Mode::Every;
    } else {
      throw UsageError("spec field 'record.mode': expected summary, auto or every");
    }
  }
  if (j.contains("every")) r.every = json_uint(j["every"], "record.every");
  if (j.contains("full_counts")) {
    if (!j["full_counts"].is_boolean()) {
      throw UsageError("spec field 'record.full_counts': expected a boolean");
    }
    r.full_counts = j["full_counts"].get<bool>();
  }
  return r;
}

ExperimentSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("--spec: cannot open '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError("--spec: invalid JSON: " + std::string(e.what()));
  }
  if (!j.is_object()) throw UsageError("--spec: top level must be an object");
  reject_unknown(j, {"rules", "n", "initial", "stop", "trials", "seed", "record"}, "");
  ExperimentSpec spec;
  if (j.contains("rules")) {
    const auto& rules = j["rules"];
    if (rules.is_string()) {
      spec.rules.push_back(rule_from(rules.get<std::string>(), "spec field 'rules'"));
    } else if (rules.is_array()) {
      for (std::size_t i = 0; i < rules.size(); ++i) {
        const auto field = "rules[" + std::to_string(i) + "]";
        spec.rules.push_back(rule_from(json_string(rules[i], field), "spec field '" + field + "'"));
      }
    } else {
      throw UsageError("spec field 'rules': expected a string or an array");
    }
  }
  if (j.contains("n")) spec.n = json_count(j["n"], "n");
  if (j.contains("initial")) spec.initial = initial_from_json(j["initial"]);
  if (j.contains("stop")) {
    const auto& stop = j["stop"];
    if (!stop.is_object()) throw UsageError("spec field 'stop': expected an object");
    reject_unknown(stop, {"kappa", "max_rounds"}, "stop.");
    if (stop.contains("kappa")) spec.stop.kappa = json_uint(stop["kappa"], "stop.kappa");
    if (stop.contains("max_rounds")) {
      spec.stop.max_rounds = json_uint(stop["max_rounds"], "stop.max_rounds");
    }
  }
  if (j.contains("trials")) spec.trials = json_uint(j["trials"], "trials");
  if (j.contains("seed")) spec.seed = json_uint(j["seed"], "seed");
  if (j.contains("record")) spec.record = record_from_json(j["record"]);
  return spec;
}

// Flags given on the command line override fields of --spec.
struct ExperimentFlags {
  std::vector<std::string> rules;
  Count n = 0;
  Count kappa = 1;
  std::string init = "ncolor";
  std::uint64_t max_rounds = 1'000'000;
};

void add_experiment_options(CLI::App* cmd, ExperimentFlags& f, CommonOptions& o) {
  cmd->add_option("--n", f.n, "population size");
  cmd->add_option("--kappa", f.kappa, "stop once at most kappa colors remain");
  cmd->add_option("--init", f.init, "ncolor | balanced:<k> | biased:<k>:<b> | explicit:<c1,...>");
  cmd->add_option("--max-rounds", f.max_rounds, "round budget per trial");
  cmd->add_option("--spec", o.spec, "JSON experiment spec");
  add_run_options(cmd, o);
}

ExperimentSpec merge_spec(const CLI::App* cmd, const ExperimentFlags& f, const CommonOptions& o,
                          const std::vector<std::string>& rules) {
  ExperimentSpec spec = o.spec.empty() ? ExperimentSpec{} : load_spec(o.spec);
  if (!rules.empty()) {
    spec.rules.clear();
    for (const auto& r : rules) spec.rules.push_back(rule_from(r, "--rule"));
  }
  if (given(cmd, "--n")) spec.n = f.n;
  if (given(cmd, "--kappa")) spec.stop.kappa = f.kappa;
  if (given(cmd, "--init") || (o.spec.empty())) spec.initial = initial_from(f.init, "--init");
  if (given(cmd, "--max-rounds") || o.spec.empty()) spec.stop.max_rounds = f.max_rounds;
  if (given(cmd, "--trials") || o.spec.empty()) spec.trials = o.trials;
  if (given(cmd, "--seed") || o.spec.empty()) spec.seed = o.seed;
  try {
    spec.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return spec;
}

Json trial_record(const std::string& sub, const std::string& rule, Count n, Count kappa,
                  std::uint64_t seed, std::uint64_t trial,
                  const std::optional<std::uint64_t>& stop_time, Count peak) {
  Json j;
  j["subcommand"] = sub;
  j["rule"] = rule;
  j["n"] = n;
  j["kappa"] = kappa;
  j["seed"] = seed;
  j["trial"] = trial;
  j["stop_time"] = optional_time(stop_time);
  j["censored"] = !stop_time.has_value();
  j["max_support_peak"] = peak;
  j["metadata"] = metadata();
  return j;
}

Json trajectory_json(const TrajectoryRecord& traj) {
  Json arr = Json::array();
  for (const auto& p : traj) {
    Json pt;
    pt["round"] = p.round;
    pt["number_of_colors"] = p.number_of_colors;
    pt["max_support"] = p.max_support;
    if (!p.counts.empty()) pt["counts"] = p.counts;
    arr.push_back(std::move(pt));
  }
  return arr;
}

// --- subcommands ------------------------------------------------------------

struct SimulateArgs {
  CommonOptions common;
  ExperimentFlags flags;
  std::string record = "summary";
  bool full_counts = false;
};

int run_simulate(const CLI::App* cmd, SimulateArgs& a, std::ostream& out, std::ostream& err) {
  ExperimentSpec spec = merge_spec(cmd, a.flags, a.common, a.flags.rules);
  if (given(cmd, "--record")) {
    if (a.record == "summary") {
      spec.record.mode = RecordSpec::Mode::SummaryOnly;
    } else if (a.record == "auto") {
      spec.record.mode = RecordSpec::Mode::Auto;
    } else {
      try {
        spec.record.mode = RecordSpec::Mode::Every;
        spec.record.every = std::stoull(a.record);
      } catch (const std::exception&) {
        throw UsageError("--record: expected summary, auto or a positive stride");
      }
      if (spec.record.every < 1) throw UsageError("--record: stride must be >= 1");
    }
  }
  if (given(cmd, "--full-counts")) spec.record.full_counts = a.full_counts;
  (void)build_initial(spec.initial, spec.n, "--init");

  Sinks sinks(out, a.common.out, a.common.summary);
  std::vector<std::string> rows;
  for (const auto& rule : spec.rules) {
    std::vector<SimulationOutcome> outcomes(spec.trials);
    parallel_for(spec.trials, a.common.workers,
                 [&](std::size_t i) { outcomes[i] = simulate_to_stop(rule, spec, i); });
    std::vector<std::optional<std::uint64_t>> times;
    for (std::uint64_t i = 0; i < spec.trials; ++i) {
      const auto& o = outcomes[i];
      Json rec = trial_record("simulate", rule.name(), spec.n, spec.stop.kappa, spec.seed, i,
                              o.stop_time, o.max_support_peak);
      rec["initial"] = spec.initial.to_string();
      rec["final_colors"] = o.final_state.number_of_colors();
      if (spec.record.mode != RecordSpec::Mode::SummaryOnly) {
        rec["trajectory"] = trajectory_json(o.trajectory);
      }
      sinks.record(rec);
      times.push_back(o.stop_time);
    }
    rows.push_back(time_summary_row("simulate", rule.name(), spec.n, spec.stop.kappa, times));
    const auto summary = summarize_times(times);
    err << "simulate " << rule.name() << " n=" << spec.n << ": mean stop time "
        << format_double(summary.mean) << " over " << (times.size() - summary.censored)
        << " trials, " << summary.censored << " censored\n";
  }
  sinks.summary(kTimeSummaryHeader, rows);
  sinks.finish();
  return kExitOk;
}

struct CompareArgs {
  CommonOptions common;
  ExperimentFlags flags;
  std::string fast;
  std::string slow;
  std::optional<double> epsilon;
  bool expect_dominance = false;
};

int run_compare(const CLI::App* cmd, CompareArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<std::string> rules;
  if (!a.fast.empty() || !a.slow.empty()) {
    if (a.fast.empty() || a.slow.empty()) throw UsageError("--fast and --slow must be given together");
    rules = {a.fast, a.slow};
  }
  ExperimentSpec spec = merge_spec(cmd, a.flags, a.common, rules);
  if (spec.rules.size() != 2) {
    throw UsageError("rules: compare needs exactly two rules (fast, slow)");
  }
  const auto c0 = build_initial(spec.initial, spec.n, "--init");
  const RngStream rng(spec.seed, {0, 0, static_cast<std::uint64_t>(StreamPurpose::Simulation)});
  TimeDominanceOptions opts;
  opts.epsilon = a.epsilon;
  opts.workers = a.common.workers;
  TimeDominanceReport report;
  try {
    report = empirical_time_dominance(spec.rules[0], spec.rules[1], c0, spec.stop, spec.trials,
                                      rng, opts);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }

  Sinks sinks(out, a.common.out, a.common.summary);
  const char* roles[] = {"fast", "slow"};
  std::vector<std::string> rows;
  spec.record = RecordSpec{};
  for (std::size_t r = 0; r < 2; ++r) {
    std::vector<SimulationOutcome> outcomes(spec.trials);
    parallel_for(spec.trials, a.common.workers,
                 [&](std::size_t i) { outcomes[i] = simulate_to_stop(spec.rules[r], spec, i); });
    std::vector<std::optional<std::uint64_t>> times;
    for (std::uint64_t i = 0; i < spec.trials; ++i) {
      Json rec = trial_record("compare", spec.rules[r].name(), spec.n, spec.stop.kappa,
                              spec.seed, i, outcomes[i].stop_time, outcomes[i].max_support_peak);
      rec["role"] = roles[r];
      sinks.record(rec);
      times.push_back(outcomes[i].stop_time);
    }
    rows.push_back(time_summary_row(std::string("compare/") + roles[r], spec.rules[r].name(),
                                    spec.n, spec.stop.kappa, times));
  }
  Json summary;
  summary["subcommand"] = "compare";
  summary["type"] = "time_dominance";
  summary["fast"] = spec.rules[0].name();
  summary["slow"] = spec.rules[1].name();
  summary["n"] = spec.n;
  summary["kappa"] = spec.stop.kappa;
  summary["seed"] = spec.seed;
  summary["trials"] = spec.trials;
  summary["max_rounds"] = report.max_rounds;
  summary["fast_censored"] = report.fast_censored;
  summary["slow_censored"] = report.slow_censored;
  summary["delta"] = report.delta;
  summary["worst_round"] = report.worst_round;
  summary["epsilon"] = report.epsilon;
  summary["verdict"] = report.verdict;
  summary["metadata"] = metadata();
  sinks.record(summary);
  sinks.summary(kTimeSummaryHeader, rows);
  sinks.finish();

  err << "compare " << spec.rules[0].name() << " vs " << spec.rules[1].name()
      << ": max CDF deficit " << format_double(report.delta) << " at t=" << report.worst_round
      << " (epsilon " << format_double(report.epsilon) << "), "
      << (report.verdict ? "dominance holds" : "dominance rejected") << '\n';
  if (a.expect_dominance && !report.verdict) return kExitValidation;
  return kExitOk;
}

struct DominanceArgs {
  CommonOptions common;
  std::string p;
  std::string q;
  Count n = 0;
  bool expect_dominance = false;
};

int run_dominance(DominanceArgs& a, std::ostream& out, std::ostream& err) {
  const auto rule_p = rule_from(a.p, "--p");
  const auto rule_q = rule_from(a.q, "--q");
  if (a.n < 1) throw UsageError("--n: must be >= 1");
  DominanceReport report;
  try {
    report = check_dominance(rule_p, rule_q, a.n);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  Sinks sinks(out, a.common.out, a.common.summary);
  Json rec;
  rec["subcommand"] = "dominance-check";
  rec["rule_p"] = rule_p.name();
  rec["rule_q"] = rule_q.name();
  rec["n"] = a.n;
  rec["pairs_checked"] = report.pairs_checked;
  rec["violation_count"] = report.violations.size();
  rec["holds"] = report.holds();
  Json list = Json::array();
  std::vector<std::string> rows;
  for (const auto& v : report.violations) {
    const std::vector<Count> c(v.c.counts().begin(), v.c.counts().end());
    const std::vector<Count> ct(v.c_tilde.counts().begin(), v.c_tilde.counts().end());
    list.push_back(Json{{"c", c}, {"c_tilde", ct}, {"prefix", v.prefix}, {"margin", v.margin}});
    std::ostringstream row;
    row << '"';
    for (std::size_t i = 0; i < c.size(); ++i) row << (i ? "," : "") << c[i];
    row << "\",\"";
    for (std::size_t i = 0; i < ct.size(); ++i) row << (i ? "," : "") << ct[i];
    row << "\"," << v.prefix << ',' << format_double(v.margin);
    rows.push_back(row.str());
  }
  rec["violations"] = std::move(list);
  rec["metadata"] = metadata();
  sinks.record(rec);
  sinks.summary("c,c_tilde,prefix,margin", rows);
  sinks.finish();

  err << "dominance-check " << rule_p.name() << " vs " << rule_q.name() << " n=" << a.n << ": "
      << report.violations.size() << " violations (" << report.pairs_checked
      << " pairs checked)\n";
  for (const auto& v : report.violations) {
    auto print = [&](const Configuration& c) {
      err << '(';
      for (std::size_t i = 0; i < c.counts().size(); ++i) err << (i ? "," : "") << c.counts()[i];
      err << ')';
    };
    err << "  c=";
    print(v.c);
    err << " c~=";
    print(v.c_tilde);
    err << " prefix " << v.prefix << " margin " << format_double(v.margin) << '\n';
  }
  if (a.expect_dominance && !report.holds()) return kExitValidation;
  return kExitOk;
}

Graph graph_from(const std::string& text, const RngStream& seed_stream) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
  auto to_u = [&](const std::string& s) -> std::uint64_t {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw UsageError("--graph: '" + s + "' is not a non-negative integer");
    }
  };
  try {
    if (kind == "complete") return Graph::complete(static_cast<NodeId>(to_u(rest)));
    if (kind == "cycle") return Graph::cycle(static_cast<NodeId>(to_u(rest)));
    if (kind == "regular") {
      const auto c2 = rest.find(':');
      if (c2 == std::string::npos) throw UsageError("--graph: expected regular:<n>:<d>");
      RngStream rng = seed_stream;
      return Graph::random_regular(static_cast<NodeId>(to_u(rest.substr(0, c2))),
                                   static_cast<unsigned>(to_u(rest.substr(c2 + 1))), rng);
    }
    if (kind == "file") return Graph::load_edge_list(rest);
  } catch (const Error& e) {
    throw UsageError(std::string("--graph: ") + e.what());
  }
  throw UsageError("--graph: expected complete:<n>, cycle:<n>, regular:<n>:<d> or file:<path>");
}

struct DualityArgs {
  CommonOptions common;
  std::string graph;
  std::uint64_t t_max = 100;
  std::optional<std::uint64_t> k;
  std::uint64_t max_rounds = 10'000'000;
};

int run_duality(DualityArgs& a, std::ostream& out, std::ostream& err) {
  const RngStream base(a.common.seed, {0, 0, static_cast<std::uint64_t>(StreamPurpose::Duality)});
  const Graph g = graph_from(a.graph, base.for_purpose(static_cast<std::uint64_t>(StreamPurpose::Coalescence) + 100));
  if (a.common.trials < 1) throw UsageError("--trials: must be >= 1");

  std::vector<std::optional<std::string>> failures(a.common.trials);
  parallel_for(a.common.trials, a.common.workers, [&](std::size_t i) {
    try {
      duality_check(g, a.t_max, base.for_trial(i));
    } catch (const Error& e) {
      if (e.code() != Errc::CouplingViolation) throw;
      failures[i] = e.what();
    }
  });
  std::optional<StoppingTimeSample> coalescence;
  if (a.k) {
    const RngStream crng(a.common.seed,
                         {0, 0, static_cast<std::uint64_t>(StreamPurpose::Coalescence)});
    try {
      coalescence = coalescence_time_stats(g, *a.k, a.common.trials, crng, a.max_rounds,
                                           a.common.workers);
    } catch (const Error& e) {
      throw UsageError(std::string("--k: ") + e.what());
    }
  }

  Sinks sinks(out, a.common.out, a.common.summary);
  std::uint64_t violations = 0;
  for (std::uint64_t i = 0; i < a.common.trials; ++i) {
    Json rec;
    rec["subcommand"] = "duality";
    rec["rule"] = "voter";
    rec["graph"] = g.describe();
    rec["n"] = g.size();
    rec["seed"] = a.common.seed;
    rec["trial"] = i;
    rec["t_max"] = a.t_max;
    rec["duality_holds"] = !failures[i].has_value();
    if (failures[i]) {
      rec["violation"] = *failures[i];
      ++violations;
    }
    if (coalescence) {
      rec["kappa"] = *a.k;
      rec["stop_time"] = optional_time(coalescence->times[i]);
      rec["censored"] = !coalescence->times[i].has_value();
    }
    rec["metadata"] = metadata();
    sinks.record(rec);
  }
  std::vector<std::string> rows;
  std::ostringstream row;
  row << "duality," << g.describe() << ',' << g.size() << ',' << a.t_max << ','
      << a.common.trials << ',' << violations;
  rows.push_back(row.str());
  std::string header = "subcommand,graph,n,t_max,trials,violations";
  if (coalescence) {
    header += ",k,censored,mean_coalescence_time,stderr";
    std::ostringstream extra;
    extra << ',' << *a.k << ',' << coalescence->censored << ','
          << format_double(coalescence->mean) << ',' << format_double(coalescence->stderr_mean);
    rows.back() += extra.str();
  }
  sinks.summary(header, rows);
  sinks.finish();

  err << "duality " << g.describe() << " t_max=" << a.t_max << ": " << violations
      << " violations over " << a.common.trials << " runs";
  if (coalescence) {
    err << "; mean T_C(" << *a.k << ") = " << format_double(coalescence->mean);
  }
  err << '\n';
  return violations == 0 ? kExitOk : kExitValidation;
}

struct DriftArgs {
  CommonOptions common;
  std::string form = "lw14";
  double a = 1.0;
  double b = 0.0;
  std::optional<double> x_min;
  std::optional<double> x_max;
  std::string table;
  std::optional<double> x0;
  std::optional<double> x_lo;
  std::optional<double> m;
  double k_prime = 0.0;
  std::optional<double> c;
  std::string validate;
  std::uint64_t n = 0;
  std::uint64_t k = 1;
  std::uint64_t drift_samples = 2000;
};

int run_drift(DriftArgs& a, std::ostream& out, std::ostream& err) {
  auto need = [](const std::optional<double>& v, const char* flag) {
    if (!v) throw UsageError(std::string(flag) + ": required for this form");
    return *v;
  };
  auto make_h = [&]() {
    try {
      if (!a.table.empty()) return DriftFunction::load_csv(a.table);
      return DriftFunction::power_law(a.a, a.b, need(a.x_min, "--x-min"),
                                      need(a.x_max, "--x-max"));
    } catch (const Error& e) {
      throw UsageError(std::string(a.table.empty() ? "--a/--b" : "--table") + ": " + e.what());
    }
  };

  Json rec;
  rec["subcommand"] = "drift-bound";
  rec["form"] = a.form;
  DriftBoundResult result;
  std::optional<DriftFunction> h;
  try {
    if (a.form == "additive") {
      result = additive_drift_bound(need(a.m, "--m"), a.k_prime, need(a.c, "--c"));
      rec["m"] = *a.m;
      rec["k_prime"] = a.k_prime;
      rec["c"] = *a.c;
    } else if (a.form == "lw14") {
      h = make_h();
      const double x0 = need(a.x0, "--x0");
      result = a.x_lo ? variable_drift_bound_lw14(*h, *a.x_lo, x0)
                      : variable_drift_bound_lw14(*h, x0);
      rec["x0"] = x0;
      rec["x_lo"] = a.x_lo ? *a.x_lo : h->x_min();
    } else if (a.form == "generalized") {
      h = make_h();
      result = variable_drift_bound_generalized(*h, need(a.m, "--m"), a.k_prime);
      rec["m"] = *a.m;
      rec["k_prime"] = a.k_prime;
    } else {
      throw UsageError("--form: expected additive, lw14 or generalized");
    }
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  if (h) {
    if (h->is_power_law()) {
      rec["h"] = Json{{"a", h->coefficient()}, {"b", h->exponent()}};
    } else {
      rec["h"] = Json{{"table", a.table}};
    }
    rec["x_min"] = h->x_min();
    rec["x_max"] = h->x_max();
  }
  rec["bound"] = result.bound;
  rec["form_used"] = to_string(result.form_used);
  rec["integral_error_estimate"] = result.integral_error_estimate;

  int code = kExitOk;
  std::string verdict;
  if (!a.validate.empty()) {
    if (a.validate != "coalescence") throw UsageError("--validate: only 'coalescence' is supported");
    if (!h) throw UsageError("--validate: needs a drift function (lw14 or generalized form)");
    if (a.n < 2) throw UsageError("--n: validation needs n >= 2");
    const std::uint64_t n = a.n;
    const ChainStep chain = [n](double x, RngStream& rng) {
      return static_cast<double>(coalescence_count_step(n, static_cast<std::uint64_t>(x), rng));
    };
    DriftValidationOptions opts;
    opts.drift_samples = a.drift_samples;
    opts.workers = a.common.workers;
    const RngStream rng(a.common.seed,
                        {0, 0, static_cast<std::uint64_t>(StreamPurpose::DriftValidation)});
    DriftValidationReport report;
    try {
      report = validate_bound(chain, a.x0 ? *a.x0 : static_cast<double>(n),
                              static_cast<double>(a.k), *h, a.common.trials, rng, opts);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    Json checks = Json::array();
    for (const auto& c : report.checks) {
      checks.push_back(Json{{"x", c.x},
                            {"mean_drift", c.mean_drift},
                            {"stderr_drift", c.stderr_drift},
                            {"required", c.required},
                            {"pass", c.pass}});
    }
    rec["validation"] = Json{{"chain", "coalescence"},
                             {"n", n},
                             {"k", a.k},
                             {"seed", a.common.seed},
                             {"trials", report.trials},
                             {"censored", report.censored},
                             {"status", to_string(report.status)},
                             {"bound", report.bound.bound},
                             {"mean_time", report.mean_time},
                             {"stderr_time", report.stderr_time},
                             {"checks", std::move(checks)}};
    verdict = to_string(report.status);
    if (report.status != DriftValidationStatus::Passed) code = kExitValidation;
  }
  rec["metadata"] = metadata();

  Sinks sinks(out, a.common.out, a.common.summary);
  sinks.record(rec);
  std::ostringstream row;
  row << a.form << ',' << format_double(result.bound) << ','
      << format_double(result.integral_error_estimate) << ',' << verdict;
  sinks.summary("form,bound,integral_error_estimate,validation", {row.str()});
  sinks.finish();
  err << "drift-bound " << a.form << ": E[T] <= " << format_double(result.bound);
  if (!verdict.empty()) err << "; validation " << verdict;
  err << '\n';
  return code;
}

struct LowerBoundArgs {
  CommonOptions common;
  Count n = 0;
  double gamma = 4.0;
  std::string init = "ncolor";
  bool trajectory = false;
  double max_exceedance = 1.0;
  std::uint64_t coupled_runs = 0;
};

int run_lower_bound(LowerBoundArgs& a, std::ostream& out, std::ostream& err) {
  if (a.n < 2) throw UsageError("--n: must be >= 2");
  if (a.common.trials < 1) throw UsageError("--trials: must be >= 1");
  const auto c0 = build_initial(initial_from(a.init, "--init"), a.n, "--init");
  std::optional<LowerBoundParams> params;
  try {
    params.emplace(a.gamma, c0.max_support(), a.n);
  } catch (const Error& e) {
    throw UsageError(std::string("--gamma: ") + e.what());
  }
  const RngStream rng(a.common.seed,
                      {0, 0, static_cast<std::uint64_t>(StreamPurpose::LowerBound)});
  const auto report =
      run_lower_bound_experiment(*params, c0, a.common.trials, rng, a.trajectory, a.common.workers);

  // Coupled runs track the largest initial color against the Binomial process.
  std::vector<std::optional<std::string>> coupling_failures(a.coupled_runs);
  std::vector<std::optional<std::uint64_t>> coupled_first(a.coupled_runs);
  const RngStream coupled(a.common.seed,
                          {0, 0, static_cast<std::uint64_t>(StreamPurpose::CoupledProcess)});
  parallel_for(a.coupled_runs, a.common.workers, [&](std::size_t i) {
    RngStream s = coupled.for_trial(i);
    try {
      coupled_first[i] =
          run_coupled_dominating_process(*params, c0, 0, params->t0(), s).first_exceedance;
    } catch (const Error& e) {
      if (e.code() != Errc::CouplingViolation) throw;
      coupling_failures[i] = e.what();
    }
  });

  Sinks sinks(out, a.common.out, a.common.summary);
  for (std::uint64_t i = 0; i < report.trials; ++i) {
    Json rec;
    rec["subcommand"] = "lower-bound";
    rec["rule"] = "2choices";
    rec["n"] = a.n;
    rec["seed"] = a.common.seed;
    rec["trial"] = i;
    rec["first_exceedance"] = optional_time(report.first_exceedance[i]);
    rec["exceeded"] = report.first_exceedance[i].has_value();
    rec["max_support_peak"] = report.peak_support[i];
    if (a.trajectory) rec["trajectory"] = trajectory_json(report.trajectories[i]);
    rec["metadata"] = metadata();
    sinks.record(rec);
  }
  std::uint64_t coupling_violations = 0;
  for (std::uint64_t i = 0; i < a.coupled_runs; ++i) {
    Json rec;
    rec["subcommand"] = "lower-bound";
    rec["type"] = "coupled";
    rec["n"] = a.n;
    rec["seed"] = a.common.seed;
    rec["trial"] = i;
    rec["first_exceedance"] = optional_time(coupled_first[i]);
    rec["coupling_holds"] = !coupling_failures[i].has_value();
    if (coupling_failures[i]) {
      rec["violation"] = *coupling_failures[i];
      ++coupling_violations;
    }
    rec["metadata"] = metadata();
    sinks.record(rec);
  }
  Json summary;
  summary["subcommand"] = "lower-bound";
  summary["type"] = "summary";
  summary["n"] = a.n;
  summary["gamma"] = a.gamma;
  summary["ell"] = report.ell;
  summary["ell_prime"] = report.ell_prime;
  summary["t0"] = report.t0;
  summary["p"] = report.p;
  summary["trials"] = report.trials;
  summary["exceeded"] = report.exceeded;
  summary["exceedance_fraction"] = report.exceedance_fraction();
  summary["max_exceedance"] = a.max_exceedance;
  summary["coupled_runs"] = a.coupled_runs;
  summary["coupling_violations"] = coupling_violations;
  summary["metadata"] = metadata();
  sinks.record(summary);
  std::ostringstream row;
  row << a.n << ',' << format_double(a.gamma) << ',' << report.ell << ',' << report.ell_prime
      << ',' << report.t0 << ',' << format_double(report.p) << ',' << report.trials << ','
      << report.exceeded << ',' << format_double(report.exceedance_fraction()) << ','
      << a.coupled_runs << ',' << coupling_violations;
  sinks.summary("n,gamma,ell,ell_prime,t0,p,trials,exceeded,exceedance_fraction,coupled_runs,"
                "coupling_violations",
                {row.str()});
  sinks.finish();

  err << "lower-bound n=" << a.n << " ell'=" << report.ell_prime << " t0=" << report.t0 << ": "
      << report.exceeded << "/" << report.trials << " trials exceeded ell'";
  if (a.coupled_runs > 0) err << "; " << coupling_violations << " coupling violations";
  err << '\n';
  if (coupling_violations > 0 || report.exceedance_fraction() > a.max_exceedance) {
    return kExitValidation;
  }
  return kExitOk;
}

struct TwoPhaseArgs {
  CommonOptions common;
  Count n = 0;
  std::optional<std::size_t> phase_k;
  std::uint64_t max_rounds = 10'000'000;
  double min_win_fraction = 0.0;
};

int run_two_phase(TwoPhaseArgs& a, std::ostream& out, std::ostream& err) {
  const RngStream rng(a.common.seed, {0, 0, static_cast<std::uint64_t>(StreamPurpose::TwoPhase)});
  TwoPhaseReport report;
  try {
    report = run_two_phase_check(a.n, a.common.trials, rng, a.phase_k, a.max_rounds,
                                 a.common.workers);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  Sinks sinks(out, a.common.out, a.common.summary);
  std::vector<std::optional<std::uint64_t>> h1, h2, v1;
  for (std::uint64_t i = 0; i < report.rows.size(); ++i) {
    const auto& r = report.rows[i];
    Json rec;
    rec["subcommand"] = "two-phase";
    rec["rule"] = "hmaj:3";
    rec["n"] = report.n;
    rec["phase_k"] = report.phase_k;
    rec["seed"] = a.common.seed;
    rec["trial"] = i;
    rec["hmaj_phase1"] = optional_time(r.hmaj_phase1);
    rec["hmaj_phase2"] = optional_time(r.hmaj_phase2);
    rec["voter_phase1"] = optional_time(r.voter_phase1);
    rec["metadata"] = metadata();
    sinks.record(rec);
    h1.push_back(r.hmaj_phase1);
    h2.push_back(r.hmaj_phase2);
    v1.push_back(r.voter_phase1);
  }
  Json summary;
  summary["subcommand"] = "two-phase";
  summary["type"] = "summary";
  summary["n"] = report.n;
  summary["phase_k"] = report.phase_k;
  summary["trials"] = report.rows.size();
  summary["win_fraction"] = report.win_fraction;
  summary["voter_phase1_mean"] = report.voter_phase1_mean;
  summary["hmaj_phase1_mean"] = report.hmaj_phase1_mean;
  summary["hmaj_phase2_mean"] = report.hmaj_phase2_mean;
  summary["hmaj_total_mean"] = report.hmaj_total_mean;
  summary["voter_bound"] = report.voter_bound;
  summary["censored"] = report.censored;
  summary["metadata"] = metadata();
  sinks.record(summary);
  const auto k = static_cast<Count>(report.phase_k);
  sinks.summary(kTimeSummaryHeader,
                {time_summary_row("two-phase/phase1", "hmaj:3", report.n, k, h1),
                 time_summary_row("two-phase/phase2", "hmaj:3", report.n, 1, h2),
                 time_summary_row("two-phase/phase1", "voter", report.n, k, v1)});
  sinks.finish();

  err << "two-phase n=" << report.n << " k=" << report.phase_k << ": 3-Majority wins "
      << format_double(report.win_fraction) << " of pairs; Voter phase-1 mean "
      << format_double(report.voter_phase1_mean) << " vs 20n/k = "
      << format_double(report.voter_bound) << '\n';
  if (report.win_fraction < a.min_win_fraction) return kExitValidation;
  return kExitOk;
}

}  // namespace

int cli_main(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulation and verification tools for pull-based consensus dynamics"};
  app.name(args.empty() ? "pullcons" : args[0]);
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "run rules to consensus (or kappa colors)");
  simulate->add_option("--rule", sim.flags.rules, "voter | 2choices | hmaj:<h> (repeatable)");
  add_experiment_options(simulate, sim.flags, sim.common);
  simulate->add_option("--record", sim.record, "summary | auto | <stride>");
  simulate->add_flag("--full-counts", sim.full_counts, "record full count vectors");

  CompareArgs cmp;
  auto* compare = app.add_subcommand("compare", "empirical stopping-time dominance");
  compare->add_option("--fast", cmp.fast, "rule claimed to be faster");
  compare->add_option("--slow", cmp.slow, "rule claimed to be slower");
  add_experiment_options(compare, cmp.flags, cmp.common);
  compare->add_option("--epsilon", cmp.epsilon, "tolerated CDF deficit (default DKW radius)");
  compare->add_flag("--expect-dominance", cmp.expect_dominance, "exit 2 if dominance is rejected");

  DominanceArgs dom;
  auto* dominance = app.add_subcommand("dominance-check", "exhaustive dominance condition check");
  dominance->add_option("--p", dom.p, "rule fed the majorizing configuration")->required();
  dominance->add_option("--q", dom.q, "rule fed the majorized configuration")->required();
  dominance->add_option("--n", dom.n, "population size")->required();
  dominance->add_flag("--expect-dominance", dom.expect_dominance, "exit 2 if violations are found");
  dominance->add_option("--workers", dom.common.workers, "accepted for uniformity; the check is serial")
      ->check(CLI::Range(1u, 1024u));
  add_output_options(dominance, dom.common);

  DualityArgs dual;
  auto* duality = app.add_subcommand("duality", "Voter / coalescing-walk duality check");
  duality->add_option("--graph", dual.graph,
                      "complete:<n> | cycle:<n> | regular:<n>:<d> | file:<edge list>")
      ->required();
  duality->add_option("--t-max", dual.t_max, "largest horizon checked");
  duality->add_option("--k", dual.k, "also sample coalescence times to k walks");
  duality->add_option("--max-rounds", dual.max_rounds, "round budget for coalescence");
  add_run_options(duality, dual.common);

  DriftArgs drift;
  auto* drift_cmd = app.add_subcommand("drift-bound", "drift-theorem bounds on hitting times");
  drift_cmd->add_option("--form", drift.form, "additive | lw14 | generalized");
  drift_cmd->add_option("--a", drift.a, "h(x) = a x^b coefficient");
  drift_cmd->add_option("--b", drift.b, "h(x) = a x^b exponent");
  drift_cmd->add_option("--x-min", drift.x_min, "lower end of h's domain");
  drift_cmd->add_option("--x-max", drift.x_max, "upper end of h's domain");
  drift_cmd->add_option("--table", drift.table, "CSV of x,h rows instead of a power law");
  drift_cmd->add_option("--x0", drift.x0, "start state (lw14, validation)");
  drift_cmd->add_option("--x-lo", drift.x_lo, "lower end of the lw14 integral");
  drift_cmd->add_option("--m", drift.m, "start state (additive, generalized)");
  drift_cmd->add_option("--k-prime", drift.k_prime, "target threshold (additive, generalized)");
  drift_cmd->add_option("--c", drift.c, "constant drift (additive)");
  drift_cmd->add_option("--validate", drift.validate, "validate against a chain: coalescence");
  drift_cmd->add_option("--n", drift.n, "population for the coalescence chain");
  drift_cmd->add_option("--k", drift.k, "target walk count for validation");
  drift_cmd->add_option("--drift-samples", drift.drift_samples, "samples per drift check");
  add_run_options(drift_cmd, drift.common);

  LowerBoundArgs lb;
  auto* lower = app.add_subcommand("lower-bound", "2-Choices support growth before t0");
  lower->add_option("--n", lb.n, "population size")->required();
  lower->add_option("--gamma", lb.gamma, "threshold constant");
  lower->add_option("--init", lb.init, "initial configuration");
  lower->add_flag("--record-trajectory", lb.trajectory, "record every round");
  lower->add_option("--max-exceedance", lb.max_exceedance,
                    "exit 2 if the exceedance fraction is larger");
  lower->add_option("--coupled-runs", lb.coupled_runs, "runs of the coupled dominating process");
  add_run_options(lower, lb.common);

  TwoPhaseArgs tp;
  auto* two_phase = app.add_subcommand("two-phase", "3-Majority phase split against Voter");
  two_phase->add_option("--n", tp.n, "population size")->required();
  two_phase->add_option("--phase-k", tp.phase_k, "phase split (default ceil(n^(1/4)))");
  two_phase->add_option("--max-rounds", tp.max_rounds, "round budget per phase");
  two_phase->add_option("--min-win-fraction", tp.min_win_fraction,
                        "exit 2 if 3-Majority wins fewer pairs");
  add_run_options(two_phase, tp.common);

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  if (args.empty()) argv.push_back("pullcons");
  for (const auto& s : args) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    out << kVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*simulate) return run_simulate(simulate, sim, out, err);
    if (*compare) return run_compare(compare, cmp, out, err);
    if (*dominance) return run_dominance(dom, out, err);
    if (*duality) return run_duality(dual, out, err);
    if (*drift_cmd) return run_drift(drift, out, err);
    if (*lower) return run_lower_bound(lb, out, err);
    if (*two_phase) return run_two_phase(tp, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return e.code() == Errc::CouplingViolation ? kExitValidation : kExitUsage;
  }
  return kExitUsage;
}

}  // namespace pullcons
