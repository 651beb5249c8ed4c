#include "backoff/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "backoff/constants.hpp"

namespace backoff {

namespace {

struct RawEntry {
  std::string scalar;
  std::vector<std::string> list;
  bool is_list = false;
  int line = 0;
};

using RawMap = std::map<std::string, RawEntry>;

[[noreturn]] void parse_fail(int line, int col, const std::string& what) {
  std::ostringstream os;
  os << "parse error at " << line << ":" << col << ": " << what;
  raise(errc::parse_error, os.str());
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

RawMap parse_raw(const std::string& text) {
  RawMap out;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') parse_fail(lineno, static_cast<int>(t.size()), "unterminated section header");
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty()) parse_fail(lineno, 1, "empty section name");
      continue;
    }
    std::size_t eq = t.find('=');
    if (eq == std::string::npos) parse_fail(lineno, 1, "expected key = value");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty()) parse_fail(lineno, 1, "empty key");
    if (value.empty()) parse_fail(lineno, static_cast<int>(eq + 2), "empty value");
    RawEntry e;
    e.line = lineno;
    if (value.front() == '[') {
      if (value.back() != ']')
        parse_fail(lineno, static_cast<int>(t.size()), "unterminated list");
      e.is_list = true;
      std::string body = value.substr(1, value.size() - 2);
      std::string item;
      std::istringstream items(body);
      while (std::getline(items, item, ',')) {
        std::string v = trim(item);
        if (v.empty())
          parse_fail(lineno, static_cast<int>(eq + 2), "empty list element");
        e.list.push_back(v);
      }
    } else {
      e.scalar = value;
    }
    std::string full = section.empty() ? key : section + "." + key;
    out[full] = std::move(e);
  }
  return out;
}

class Extractor {
 public:
  explicit Extractor(RawMap raw) : raw_(std::move(raw)) {}

  bool has(const std::string& key) const { return raw_.count(key) > 0; }

  std::string str(const std::string& key, const std::string& dflt) {
    auto it = raw_.find(key);
    if (it == raw_.end()) return dflt;
    mark(key);
    if (it->second.is_list) complain(key, "expected a scalar, got a list");
    return it->second.scalar;
  }

  double num(const std::string& key, double dflt) {
    auto it = raw_.find(key);
    if (it == raw_.end()) return dflt;
    mark(key);
    return to_num(key, it->second.scalar);
  }

  std::uint64_t uns(const std::string& key, std::uint64_t dflt) {
    double v = num(key, static_cast<double>(dflt));
    if (v < 0 || v != std::floor(v))
      complain(key, "expected a non-negative integer");
    return static_cast<std::uint64_t>(v);
  }

  bool flag(const std::string& key, bool dflt) {
    auto it = raw_.find(key);
    if (it == raw_.end()) return dflt;
    mark(key);
    const std::string& v = it->second.scalar;
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    complain(key, "expected true or false");
    return dflt;
  }

  std::vector<double> nums(const std::string& key) {
    auto it = raw_.find(key);
    if (it == raw_.end()) return {};
    mark(key);
    if (!it->second.is_list) complain(key, "expected a list");
    std::vector<double> out;
    for (const std::string& v : it->second.list) out.push_back(to_num(key, v));
    return out;
  }

  std::vector<std::string> strs(const std::string& key) {
    auto it = raw_.find(key);
    if (it == raw_.end()) return {};
    mark(key);
    if (!it->second.is_list) complain(key, "expected a list");
    return it->second.list;
  }

  // keys under `prefix.` that have not been consumed yet
  std::vector<std::string> keys_under(const std::string& prefix) {
    std::vector<std::string> out;
    for (const auto& [k, v] : raw_)
      if (k.rfind(prefix + ".", 0) == 0) out.push_back(k);
    return out;
  }

  void complain(const std::string& key, const std::string& what) {
    problems_.push_back(key + ": " + what);
  }
  void complain(const std::string& what) { problems_.push_back(what); }

  void finish() {
    for (const auto& [k, v] : raw_)
      if (!used_.count(k)) complain(k, "unknown key");
    if (!problems_.empty()) {
      std::ostringstream os;
      os << "invalid config (" << problems_.size() << " problems):";
      for (const std::string& p : problems_) os << "\n  - " << p;
      raise(errc::validation_error, os.str());
    }
  }

 private:
  void mark(const std::string& key) { used_.insert(key); }

  double to_num(const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      double d = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      complain(key, "not a number: '" + v + "'");
      return 0.0;
    }
  }

  RawMap raw_;
  std::set<std::string> used_;
  std::vector<std::string> problems_;
};

const std::vector<std::string> kKinds = {
    "backoff",    "externally_jammed", "jjammed",
    "two_stream", "under_backoff",     "constant_escape",
    "escape",     "veb"};

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  Extractor x(parse_raw(text));
  ExperimentConfig c;
  c.experiment = x.str("experiment", c.experiment);
  c.kind = x.str("kind", c.kind);
  c.lambda = x.num("lambda", c.lambda);
  c.horizon = x.uns("horizon", c.horizon);
  c.replicas = x.uns("replicas", c.replicas);
  c.base_seed = x.uns("seed", c.base_seed);
  c.format = x.str("format", c.format);
  c.mode = x.str("mode", c.mode);
  c.j = static_cast<std::uint32_t>(x.uns("j", c.j));
  c.nu = x.num("nu", c.nu);
  c.synthetic = x.flag("synthetic", c.synthetic);

  c.sequence.family = x.str("sequence.family", c.sequence.family);
  c.sequence.p = x.num("sequence.p", c.sequence.p);
  c.sequence.base = x.num("sequence.base", c.sequence.base);
  c.sequence.exponent = x.num("sequence.exponent", c.sequence.exponent);
  if (x.has("sequence.probs")) c.sequence.probs = x.nums("sequence.probs");
  if (x.has("sequence.schedule")) {
    for (double v : x.nums("sequence.schedule")) {
      if (v < 0 || v != std::floor(v))
        x.complain("sequence.schedule", "entries must be non-negative integers");
      else
        c.sequence.schedule.push_back(static_cast<std::uint64_t>(v));
    }
  }
  c.sequence.k0 = static_cast<std::uint32_t>(x.uns("sequence.k0", c.sequence.k0));

  if (x.has("initial.poisson")) c.initial_poisson = x.nums("initial.poisson");
  if (x.has("initial.counts")) {
    std::vector<std::uint64_t> counts;
    for (double v : x.nums("initial.counts")) {
      if (v < 0 || v != std::floor(v))
        x.complain("initial.counts", "entries must be non-negative integers");
      else
        counts.push_back(static_cast<std::uint64_t>(v));
    }
    c.initial_counts = std::move(counts);
  }

  c.observers.window = x.uns("observers.window", c.observers.window);
  for (const std::string& key : x.keys_under("observers.noise")) {
    std::string name = key.substr(std::string("observers.noise.").size());
    std::vector<std::uint32_t> set;
    for (double v : x.nums(key)) {
      if (v < 1 || v != std::floor(v))
        x.complain(key, "bin indices must be positive integers");
      else
        set.push_back(static_cast<std::uint32_t>(v));
    }
    c.observers.noise_sets[name] = std::move(set);
  }
  if (x.has("observers.bins")) {
    for (double v : x.nums("observers.bins")) {
      if (v < 1 || v != std::floor(v))
        x.complain("observers.bins", "bin indices must be positive integers");
      else
        c.observers.bins.push_back(static_cast<std::uint32_t>(v));
    }
  }

  c.classify.j_min = x.uns("classify.j_min", c.classify.j_min);
  c.classify.j_max = x.uns("classify.j_max", c.classify.j_max);
  c.trace.which = x.str("trace.which", c.trace.which);
  c.trace.steps = x.uns("trace.steps", c.trace.steps);
  c.trace.damping = x.str("trace.damping", c.trace.damping);
  if (x.has("trace.init")) c.trace.init = x.nums("trace.init");
  c.trace.nu = x.num("trace.nu", c.trace.nu);
  c.couple.pair = x.str("couple.pair", c.couple.pair);
  c.couple.lambda_lower = x.num("couple.lambda_lower", c.lambda / 2.0);
  c.couple.steps = x.uns("couple.steps", c.couple.steps);
  c.couple.seeds = x.uns("couple.seeds", c.couple.seeds);
  c.hlscheck.samples = x.uns("hlscheck.samples", c.hlscheck.samples);
  c.hlscheck.j_min = static_cast<std::uint32_t>(x.uns("hlscheck.j_min", c.hlscheck.j_min));
  c.hlscheck.j_max = static_cast<std::uint32_t>(x.uns("hlscheck.j_max", c.hlscheck.j_max));
  c.hlscheck.raises = static_cast<std::uint32_t>(x.uns("hlscheck.raises", c.hlscheck.raises));
  c.hlscheck.mutation = x.flag("hlscheck.mutation", c.hlscheck.mutation);
  c.veb.j0 = static_cast<std::uint32_t>(x.uns("veb.j0", c.veb.j0));
  c.veb.horizon = x.uns("veb.horizon", c.veb.horizon);
  c.veb.seeds = x.uns("veb.seeds", c.veb.seeds);
  c.veb.shat_floor = x.num("veb.shat_floor", c.veb.shat_floor);
  c.plotdata.input = x.str("plotdata.input", c.plotdata.input);
  if (x.has("plotdata.series")) c.plotdata.series = x.strs("plotdata.series");

  // validation, collecting every problem
  if (!(c.lambda > 0.0 && c.lambda < 1.0))
    x.complain("lambda", "birth rate out of range (0,1)");
  if (c.kind == "veb" && !(c.lambda < 1.0 / 120.0))
    x.complain("lambda", "veb runs need lambda below 1/120");
  if (c.replicas < 1) x.complain("replicas", "need at least one replica");
  if (c.format != "csv" && c.format != "jsonl")
    x.complain("format", "must be csv or jsonl");
  if (c.mode != "counts" && c.mode != "identities")
    x.complain("mode", "must be counts or identities");
  if (std::find(kKinds.begin(), kKinds.end(), c.kind) == kKinds.end())
    x.complain("kind", "unknown process kind '" + c.kind + "'");
  if (c.kind == "constant_escape" && !(c.nu >= 0.0 && c.nu <= 1.0))
    x.complain("nu", "arrival rate must lie in [0,1]");
  if (c.trace.which != "f" && c.trace.which != "h" && c.trace.which != "F")
    x.complain("trace.which", "must be f, h or F");
  if (c.trace.damping != "zero" && c.trace.damping != "canonical")
    x.complain("trace.damping", "must be zero or canonical");
  if (c.couple.pair != "standard" && c.couple.pair != "two_stream" &&
      c.couple.pair != "under_backoff")
    x.complain("couple.pair", "must be standard, two_stream or under_backoff");
  if (!(c.couple.lambda_lower > 0.0 && c.couple.lambda_lower <= c.lambda))
    x.complain("couple.lambda_lower", "must lie in (0, lambda]");
  if (c.hlscheck.j_min < 1 || c.hlscheck.j_max < c.hlscheck.j_min)
    x.complain("hlscheck", "need 1 <= j_min <= j_max");
  if (c.veb.j0 < 1) x.complain("veb.j0", "need j0 >= 1");
  x.finish();
  return c;
}

namespace {

void put(std::ostringstream& os, const std::string& key, const std::string& v) {
  os << key << " = " << v << "\n";
}

std::string fmt_num(double v) {
  std::ostringstream os;
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    os << static_cast<long long>(v);
  } else {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
  }
  return os.str();
}

template <typename T>
std::string fmt_list(const std::vector<T>& v) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << ", ";
    os << fmt_num(static_cast<double>(v[i]));
  }
  os << "]";
  return os.str();
}

}  // namespace

std::string render_config(const ExperimentConfig& c) {
  std::ostringstream os;
  put(os, "experiment", c.experiment);
  put(os, "kind", c.kind);
  put(os, "lambda", fmt_num(c.lambda));
  put(os, "horizon", fmt_num(static_cast<double>(c.horizon)));
  put(os, "replicas", fmt_num(static_cast<double>(c.replicas)));
  put(os, "seed", fmt_num(static_cast<double>(c.base_seed)));
  put(os, "format", c.format);
  put(os, "mode", c.mode);
  put(os, "j", fmt_num(c.j));
  put(os, "nu", fmt_num(c.nu));
  put(os, "synthetic", c.synthetic ? "true" : "false");
  os << "\n[sequence]\n";
  put(os, "family", c.sequence.family);
  put(os, "p", fmt_num(c.sequence.p));
  put(os, "base", fmt_num(c.sequence.base));
  put(os, "exponent", fmt_num(c.sequence.exponent));
  if (!c.sequence.probs.empty()) put(os, "probs", fmt_list(c.sequence.probs));
  if (!c.sequence.schedule.empty())
    put(os, "schedule", fmt_list(c.sequence.schedule));
  put(os, "k0", fmt_num(c.sequence.k0));
  if (c.initial_poisson || c.initial_counts) {
    os << "\n[initial]\n";
    if (c.initial_poisson) put(os, "poisson", fmt_list(*c.initial_poisson));
    if (c.initial_counts) put(os, "counts", fmt_list(*c.initial_counts));
  }
  os << "\n[observers]\n";
  put(os, "window", fmt_num(static_cast<double>(c.observers.window)));
  if (!c.observers.bins.empty()) put(os, "bins", fmt_list(c.observers.bins));
  if (!c.observers.noise_sets.empty()) {
    os << "\n[observers.noise]\n";
    for (const auto& [name, set] : c.observers.noise_sets)
      put(os, name, fmt_list(set));
  }
  os << "\n[classify]\n";
  put(os, "j_min", fmt_num(static_cast<double>(c.classify.j_min)));
  put(os, "j_max", fmt_num(static_cast<double>(c.classify.j_max)));
  os << "\n[trace]\n";
  put(os, "which", c.trace.which);
  put(os, "steps", fmt_num(static_cast<double>(c.trace.steps)));
  put(os, "damping", c.trace.damping);
  if (!c.trace.init.empty()) put(os, "init", fmt_list(c.trace.init));
  put(os, "nu", fmt_num(c.trace.nu));
  os << "\n[couple]\n";
  put(os, "pair", c.couple.pair);
  put(os, "lambda_lower", fmt_num(c.couple.lambda_lower));
  put(os, "steps", fmt_num(static_cast<double>(c.couple.steps)));
  put(os, "seeds", fmt_num(static_cast<double>(c.couple.seeds)));
  os << "\n[hlscheck]\n";
  put(os, "samples", fmt_num(static_cast<double>(c.hlscheck.samples)));
  put(os, "j_min", fmt_num(c.hlscheck.j_min));
  put(os, "j_max", fmt_num(c.hlscheck.j_max));
  put(os, "raises", fmt_num(c.hlscheck.raises));
  put(os, "mutation", c.hlscheck.mutation ? "true" : "false");
  os << "\n[veb]\n";
  put(os, "j0", fmt_num(c.veb.j0));
  put(os, "horizon", fmt_num(static_cast<double>(c.veb.horizon)));
  put(os, "seeds", fmt_num(static_cast<double>(c.veb.seeds)));
  put(os, "shat_floor", fmt_num(c.veb.shat_floor));
  if (!c.plotdata.input.empty() || !c.plotdata.series.empty()) {
    os << "\n[plotdata]\n";
    if (!c.plotdata.input.empty()) put(os, "input", c.plotdata.input);
    if (!c.plotdata.series.empty()) {
      std::ostringstream ls;
      ls << "[";
      for (std::size_t i = 0; i < c.plotdata.series.size(); ++i) {
        if (i) ls << ", ";
        ls << c.plotdata.series[i];
      }
      ls << "]";
      put(os, "series", ls.str());
    }
  }
  return os.str();
}

SendSequence build_sequence(const SequenceSpec& s, double lambda,
                            bool synthetic) {
  if (s.family == "constant") return SendSequence::constant(s.p);
  if (s.family == "binary_exponential") return SendSequence::binary_exponential();
  if (s.family == "geometric") return SendSequence::geometric(s.base);
  if (s.family == "polynomial") return SendSequence::polynomial(s.exponent);
  if (s.family == "explicit") return SendSequence::explicit_list(s.probs);
  if (s.family == "interleaved_aloha_exp")
    return SendSequence::interleaved_aloha_exp(s.base, s.schedule);
  if (s.family == "weakly_exposed_example") {
    ClassifierConstants cc = synthetic ? ClassifierConstants::synthetic(lambda)
                                       : ClassifierConstants::canonical(lambda);
    return SendSequence::weakly_exposed_example(s.base, s.k0, lambda, cc);
  }
  raise(errc::invalid_family_parameter, "unknown sequence family '" + s.family + "'");
}

}  // namespace backoff
