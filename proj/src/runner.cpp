#include "backoff/runner.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "backoff/classify.hpp"
#include "backoff/engine.hpp"
#include "backoff/hls.hpp"
#include "backoff/metrics.hpp"
#include "backoff/recurrence.hpp"
#include "backoff/version.hpp"
#include "backoff/volume.hpp"

namespace backoff {

namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Output {
 public:
  Output(const std::string& path, RunOutcome& outcome) : path_(path) {
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) raise(errc::io_failure, "cannot open " + path + " for writing");
    outcome.files.push_back(path);
  }
  template <typename T>
  Output& operator<<(const T& v) {
    out_ << v;
    return *this;
  }

 private:
  std::string path_;
  std::ofstream out_;
};

ProcessState build_process(const ExperimentConfig& c, const SendSequence& seq,
                           std::uint64_t seed) {
  ProcessOptions o;
  o.mode = c.mode == "identities" ? PopulationMode::identities
                                  : PopulationMode::counts;
  o.lambda = c.lambda;
  o.jam_level = std::max<std::uint32_t>(1, c.j);
  o.arrival_rate = c.nu;
  o.seed = seed;
  ProcessKind kind;
  if (c.kind == "backoff") kind = ProcessKind::backoff;
  else if (c.kind == "externally_jammed") kind = ProcessKind::externally_jammed;
  else if (c.kind == "jjammed") kind = ProcessKind::j_jammed;
  else if (c.kind == "two_stream") kind = ProcessKind::two_stream;
  else if (c.kind == "under_backoff") kind = ProcessKind::under_backoff;
  else if (c.kind == "constant_escape") kind = ProcessKind::constant_escape;
  else if (c.kind == "escape") kind = ProcessKind::escape;
  else raise(errc::validation_error, "kind '" + c.kind + "' is not simulatable");
  if (kind == ProcessKind::escape) {
    ProcessOptions& eo = o;
    for (const auto& [name, set] : c.observers.noise_sets)
      eo.noise_sets.push_back(set);
  }
  ProcessState p(kind, seq, o);
  if (c.initial_counts) p.set_initial_counts(*c.initial_counts);
  if (c.initial_poisson) p.sample_initial_poisson(*c.initial_poisson);
  return p;
}

void write_manifest(const ExperimentConfig& c, const std::string& command,
                    const std::string& out_dir, RunOutcome& outcome) {
  Output m(out_dir + "/manifest.txt", outcome);
  m << "tool = backoff-lab " << kVersion << "\n";
  m << "command = " << command << "\n\n";
  m << render_config(c);
}

struct RecordWriter {
  // long-format rows: experiment, seed, step, metric, value
  Output out;
  bool jsonl;
  std::string experiment;
  RecordWriter(const std::string& path, RunOutcome& oc, bool jsonl_,
               const std::string& exp)
      : out(path, oc), jsonl(jsonl_), experiment(exp) {
    if (!jsonl) out << "experiment,seed,step,metric,value\n";
  }
  void row(std::uint64_t seed, std::uint64_t step, const std::string& metric,
           double value) {
    if (jsonl) {
      out << "{\"experiment\":\"" << experiment << "\",\"seed\":" << seed
          << ",\"step\":" << step << ",\"metric\":\"" << metric
          << "\",\"value\":" << fmt(value) << "}\n";
    } else {
      out << experiment << "," << seed << "," << step << "," << metric << ","
          << fmt(value) << "\n";
    }
  }
};

int cmd_simulate(const ExperimentConfig& c, const std::string& out_dir,
                 RunOutcome& oc) {
  SendSequence seq = build_sequence(c.sequence, c.lambda, c.synthetic);
  std::string ext = c.format == "jsonl" ? "jsonl" : "csv";
  RecordWriter records(out_dir + "/records." + ext, oc, c.format == "jsonl",
                       c.experiment);
  Output summary(out_dir + "/summary.csv", oc);
  summary << "experiment,seed,window_start,backlog_mean";
  for (const auto& [name, set] : c.observers.noise_sets) summary << ",noise_" << name;
  for (std::uint32_t bin : c.observers.bins) summary << ",bin_" << bin << "_mean";
  summary << ",escapes_cum,empty_visits,max_bin\n";

  bool any_failed = false;
  for (std::uint64_t r = 0; r < c.replicas; ++r) {
    std::uint64_t seed = c.base_seed ^ r;
    try {
      ProcessState p = build_process(c, seq, seed);
      StatsObserver stats(c.observers.noise_sets, c.observers.bins);
      std::vector<StepObserver*> obs{&stats};
      run(p, c.horizon, obs);
      RunSummary sum = summarize(stats.trace(), c.observers.window);
      for (const SummaryWindow& w : sum.windows) {
        summary << c.experiment << "," << seed << "," << w.window_start << ","
                << fmt(w.backlog_mean);
        for (const auto& [name, set] : c.observers.noise_sets) {
          auto it = w.noise_mean.find(name);
          summary << "," << fmt(it == w.noise_mean.end() ? 0.0 : it->second);
        }
        for (std::uint32_t bin : c.observers.bins) {
          auto it = w.bin_mean.find(bin);
          summary << "," << fmt(it == w.bin_mean.end() ? 0.0 : it->second);
        }
        summary << "," << w.escapes_cum << "," << w.empty_visits << ","
                << w.max_bin << "\n";
        records.row(seed, w.window_start, "backlog_mean", w.backlog_mean);
        records.row(seed, w.window_start, "escapes_cum",
                    static_cast<double>(w.escapes_cum));
        for (const auto& [name, v] : w.noise_mean)
          records.row(seed, w.window_start, "noise_" + name, v);
        for (const auto& [bin, v] : w.bin_mean)
          records.row(seed, w.window_start, "bin_" + std::to_string(bin) + "_mean", v);
      }
      records.row(seed, c.horizon, "sojourn",
                  sum.sojourn ? static_cast<double>(*sum.sojourn) : -1.0);
      records.row(seed, c.horizon, "sojourn_censored",
                  sum.sojourn_censored ? 1.0 : 0.0);
    } catch (const error& e) {
      any_failed = true;
      records.row(seed, 0, "replica_failed", 1.0);
      oc.message += std::string("replica ") + std::to_string(r) + ": " + e.what() + "\n";
    }
  }
  return any_failed ? 2 : 0;
}

int cmd_classify(const ExperimentConfig& c, const std::string& out_dir,
                 RunOutcome& oc) {
  SendSequence seq = build_sequence(c.sequence, c.lambda, c.synthetic);
  ClassifierConstants cc = c.synthetic ? ClassifierConstants::synthetic(c.lambda)
                                       : ClassifierConstants::canonical(c.lambda);
  Output out(out_dir + "/classify.csv", oc);
  out << "j,class,prop1,prop2,prop3,wtilde,upsilon_count,log_weight\n";
  for (std::uint64_t j = c.classify.j_min; j <= c.classify.j_max; ++j) {
    BinClassification r = classify_bin(seq, cc, j);
    out << j << "," << bin_class_name(r.bin_class) << "," << (r.prop1 ? 1 : 0)
        << "," << (r.prop2 ? 1 : 0) << "," << (r.prop3 ? 1 : 0) << ","
        << fmt(r.threshold.value) << "," << r.threshold.count << ","
        << fmt(r.log_weight) << "\n";
  }
  return 0;
}

int cmd_trace(const ExperimentConfig& c, const std::string& out_dir,
              RunOutcome& oc) {
  SendSequence seq = build_sequence(c.sequence, c.lambda, c.synthetic);
  std::uint32_t j = std::max<std::uint32_t>(1, c.j);
  std::vector<double> init = c.trace.init;
  if (init.empty()) init.assign(j, 0.0);
  j = static_cast<std::uint32_t>(init.size());
  ExpectationTrace tr;
  std::string prefix;
  if (c.trace.which == "h") {
    tr = run_arrival_trace(seq, c.trace.nu, init, c.trace.steps);
    prefix = "h_";
  } else {
    std::vector<double> damping = c.trace.damping == "canonical"
                                      ? canonical_damping(j, c.synthetic ? 2.0 : 100.0)
                                      : std::vector<double>(j, 0.0);
    tr = run_fill_trace(seq, c.lambda, damping, init, c.trace.steps);
    prefix = c.trace.which == "F" ? "F_" : "f_";
  }
  Output out(out_dir + "/trace.csv", oc);
  out << "t";
  for (std::uint32_t k = 1; k <= j; ++k) out << "," << prefix << k;
  out << "\n";
  RecordWriter records(out_dir + "/records.csv", oc, false, c.experiment);
  for (std::size_t t = 0; t < tr.values.size(); ++t) {
    out << t;
    for (std::uint32_t k = 1; k <= j; ++k) {
      out << "," << fmt(tr.values[t][k - 1]);
      records.row(c.base_seed, t, prefix + std::to_string(k), tr.values[t][k - 1]);
    }
    out << "\n";
  }
  return 0;
}

int cmd_couple(const ExperimentConfig& c, const std::string& out_dir,
               RunOutcome& oc) {
  SendSequence seq = build_sequence(c.sequence, c.lambda, c.synthetic);
  CouplingKind kind = CouplingKind::backoff_pair;
  double lower = c.couple.lambda_lower;
  if (c.couple.pair == "two_stream") {
    kind = CouplingKind::two_stream_under;
    lower = c.lambda;
  } else if (c.couple.pair == "under_backoff") {
    kind = CouplingKind::under_backoff_under;
    lower = c.lambda;
  }
  Output out(out_dir + "/couple.csv", oc);
  out << "seed,steps,subset_violations\n";
  std::uint64_t total = 0;
  for (std::uint64_t s = 0; s < c.couple.seeds; ++s) {
    std::uint64_t seed = c.base_seed ^ s;
    StandardCoupling cp(kind, seq, lower, c.lambda, seed);
    for (std::uint64_t i = 0; i < c.couple.steps; ++i) cp.step();
    out << seed << "," << c.couple.steps << "," << cp.total_violations() << "\n";
    total += cp.total_violations();
  }
  oc.message = "subset violations: " + std::to_string(total);
  return total == 0 ? 0 : 3;
}

int cmd_hls_check(const ExperimentConfig& c, const std::string& out_dir,
                  RunOutcome& oc) {
  SendSequence seq = build_sequence(c.sequence, c.lambda, c.synthetic);
  RuleParams params = c.synthetic ? RuleParams::synthetic(seq, c.lambda)
                                  : RuleParams::canonical(seq, c.lambda);
  params.debug_skip_refill_zeroing = c.hlscheck.mutation;
  Rng rng(c.base_seed);
  std::vector<AxiomSample> samples = sample_axiom_domain(
      params, c.hlscheck.samples, c.hlscheck.j_min, c.hlscheck.j_max, rng);
  std::vector<AxiomViolation> violations =
      check_axioms(params, samples, rng, c.hlscheck.raises);
  Output out(out_dir + "/hlscheck.csv", oc);
  out << "sample,axiom,detail\n";
  for (const AxiomViolation& v : violations)
    out << v.sample << "," << v.axiom << ",\"" << v.detail << "\"\n";
  oc.message = std::to_string(violations.size()) + " violations over " +
               std::to_string(samples.size()) + " samples";
  return violations.empty() ? 0 : 3;
}

int cmd_veb(const ExperimentConfig& c, const std::string& out_dir,
            RunOutcome& oc) {
  SendSequence seq = build_sequence(c.sequence, c.lambda, c.synthetic);
  Output out(out_dir + "/veb.jsonl", oc);
  std::uint64_t bad = 0;
  for (std::uint64_t s = 0; s < c.veb.seeds; ++s) {
    VebOptions vo;
    vo.j0 = c.veb.j0;
    vo.horizon = c.veb.horizon;
    vo.seed = c.base_seed ^ s;
    vo.synthetic = c.synthetic;
    vo.shat_floor = c.veb.shat_floor;
    VebResult r = veb_run(seq, c.lambda, vo);
    for (const TransitionRecord& t : r.transitions) {
      out << "{\"seed\":" << vo.seed << ",\"g\":" << t.g << ",\"tau\":" << t.tau
          << ",\"j\":" << t.j << ",\"type\":\"" << state_type_name(t.type)
          << "\",\"rule\":\"" << rule_tag_name(t.via) << "\",\"back_transition\":"
          << (t.back_transition ? "true" : "false") << "}\n";
    }
    out << "{\"seed\":" << vo.seed << ",\"summary\":true,\"steps\":" << r.steps
        << ",\"warmup\":" << r.warmup << ",\"i1_violations\":" << r.i1_violations
        << ",\"i2_violations\":" << r.i2_violations
        << ",\"max_backlog\":" << r.max_backlog << ",\"ever_failed\":"
        << (r.ever_failed ? "true" : "false") << "}\n";
    bad += r.i1_violations + r.i2_violations;
  }
  oc.message = "invariant violations: " + std::to_string(bad);
  return bad == 0 ? 0 : 3;
}

int cmd_plotdata(const ExperimentConfig& c, const std::string& out_dir,
                 RunOutcome& oc) {
  if (c.plotdata.input.empty())
    raise(errc::validation_error, "plotdata.input is required");
  std::ifstream in(c.plotdata.input);
  if (!in) raise(errc::io_failure, "cannot read " + c.plotdata.input);
  std::string line;
  if (!std::getline(in, line))
    raise(errc::io_failure, "empty records file");
  // rows: experiment,seed,step,metric,value -> mean of value per (metric, step)
  std::map<std::string, std::map<std::uint64_t, std::pair<double, std::uint64_t>>> acc;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string exp, seed, step, metric, value;
    if (!std::getline(row, exp, ',') || !std::getline(row, seed, ',') ||
        !std::getline(row, step, ',') || !std::getline(row, metric, ',') ||
        !std::getline(row, value))
      continue;
    auto& cell = acc[metric][std::stoull(step)];
    cell.first += std::stod(value);
    cell.second += 1;
  }
  for (const std::string& s : c.plotdata.series)
    if (!acc.count(s)) raise(errc::unknown_series, "no series named '" + s + "'");
  Output out(out_dir + "/plot.csv", oc);
  out << "series,x,y\n";
  std::vector<std::string> series = c.plotdata.series;
  if (series.empty())
    for (const auto& [name, pts] : acc) series.push_back(name);
  for (const std::string& name : series) {
    for (const auto& [x, cell] : acc[name])
      out << name << "," << x << ","
          << fmt(cell.first / static_cast<double>(cell.second)) << "\n";
  }
  return 0;
}

}  // namespace

RunOutcome run_command(const std::string& command, const ExperimentConfig& config,
                       const std::string& out_dir, const RunOverrides& overrides) {
  RunOutcome oc;
  ExperimentConfig c = config;
  if (overrides.seed) c.base_seed = *overrides.seed;
  if (overrides.format) c.format = *overrides.format;
  if (overrides.synthetic) c.synthetic = true;
  try {
    fs::create_directories(out_dir);
    write_manifest(c, command, out_dir, oc);
    if (command == "simulate") oc.exit_code = cmd_simulate(c, out_dir, oc);
    else if (command == "classify") oc.exit_code = cmd_classify(c, out_dir, oc);
    else if (command == "trace") oc.exit_code = cmd_trace(c, out_dir, oc);
    else if (command == "couple") oc.exit_code = cmd_couple(c, out_dir, oc);
    else if (command == "hls-check") oc.exit_code = cmd_hls_check(c, out_dir, oc);
    else if (command == "veb") oc.exit_code = cmd_veb(c, out_dir, oc);
    else if (command == "plotdata") oc.exit_code = cmd_plotdata(c, out_dir, oc);
    else {
      oc.exit_code = 1;
      oc.message = "unknown command '" + command + "'";
    }
  } catch (const error& e) {
    oc.message = e.what();
    oc.exit_code =
        e.code() == errc::validation_error || e.code() == errc::parse_error ? 1 : 2;
  } catch (const std::exception& e) {
    oc.message = e.what();
    oc.exit_code = 2;
  }
  return oc;
}

RunOutcome run_command_text(const std::string& command,
                            const std::string& config_text,
                            const std::string& out_dir,
                            const RunOverrides& overrides) {
  try {
    ExperimentConfig c = parse_config(config_text);
    return run_command(command, c, out_dir, overrides);
  } catch (const error& e) {
    RunOutcome oc;
    oc.message = e.what();
    oc.exit_code = 1;
    return oc;
  }
}

}  // namespace backoff
