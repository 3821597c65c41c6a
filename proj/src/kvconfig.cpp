#include "sptlaw/kvconfig.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "sptlaw/units.hpp"

namespace sptlaw {

namespace {

std::string trim(std::string s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  return s;
}

std::string format_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}

void expect_keys(const KvConfig& kv, const std::set<std::string>& known) {
  for (const auto& [key, value] : kv.entries()) {
    if (known.count(key) == 0) {
      throw FormatError("unknown config key: " + key);
    }
  }
}

}  // namespace

KvConfig KvConfig::parse(const std::string& text) {
  KvConfig kv;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError("missing '=' on config line " + std::to_string(line_no));
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw FormatError("empty key on config line " + std::to_string(line_no));
    }
    kv.values_[key] = value;
  }
  return kv;
}

const std::string& KvConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw FormatError("missing config key: " + key);
  return it->second;
}

std::optional<std::string> KvConfig::maybe(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

double KvConfig::get_double(const std::string& key) const {
  const std::string& s = get(key);
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw FormatError("");
    return v;
  } catch (const std::exception&) {
    throw FormatError("config key " + key + " is not a number: " + s);
  }
}

std::uint64_t KvConfig::get_u64(const std::string& key) const {
  const std::string& s = get(key);
  try {
    std::size_t pos = 0;
    const std::uint64_t v = std::stoull(s, &pos);
    if (pos != s.size()) throw FormatError("");
    return v;
  } catch (const std::exception&) {
    throw FormatError("config key " + key + " is not an integer: " + s);
  }
}

TokenCount KvConfig::get_tokens(const std::string& key) const {
  return parse_token_count(get(key));
}

std::vector<std::string> KvConfig::get_list(const std::string& key) const {
  const std::string& s = get(key);
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  cur = trim(cur);
  if (!cur.empty()) out.push_back(cur);
  return out;
}

void KvConfig::set(const std::string& key, const std::string& value) {
  values_[key] = value;
}

std::string KvConfig::serialize() const {
  std::string out;
  for (const auto& [key, value] : values_) {
    out += key;
    out += " = ";
    out += value;
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------

KvConfig to_kv(const FitOptions& o) {
  KvConfig kv;
  kv.set("max_iterations", std::to_string(o.max_iterations));
  kv.set("restarts", std::to_string(o.restarts));
  kv.set("seed", std::to_string(o.seed));
  kv.set("convergence_tol", format_double(o.convergence_tol));
  kv.set("loss_space", o.loss_space == LossSpace::Log ? "log" : "linear");
  kv.set("strategy", o.strategy == FitStrategy::Staged ? "staged" : "joint");
  kv.set("weight_per_curve", o.weight_per_curve ? "true" : "false");
  kv.set("token_unit", format_token_count(o.token_unit));
  return kv;
}

FitOptions fit_options_from_kv(const KvConfig& kv) {
  expect_keys(kv, {"max_iterations", "restarts", "seed", "convergence_tol",
                   "loss_space", "strategy", "weight_per_curve", "token_unit"});
  FitOptions o;
  if (kv.has("max_iterations")) o.max_iterations = kv.get_u64("max_iterations");
  if (kv.has("restarts")) o.restarts = static_cast<int>(kv.get_u64("restarts"));
  if (kv.has("seed")) o.seed = kv.get_u64("seed");
  if (kv.has("convergence_tol")) o.convergence_tol = kv.get_double("convergence_tol");
  if (kv.has("loss_space")) {
    const std::string& s = kv.get("loss_space");
    if (s == "log") {
      o.loss_space = LossSpace::Log;
    } else if (s == "linear") {
      o.loss_space = LossSpace::Linear;
    } else {
      throw FormatError("loss_space must be log or linear, got " + s);
    }
  }
  if (kv.has("strategy")) {
    const std::string& s = kv.get("strategy");
    if (s == "staged") {
      o.strategy = FitStrategy::Staged;
    } else if (s == "joint") {
      o.strategy = FitStrategy::Joint;
    } else {
      throw FormatError("strategy must be staged or joint, got " + s);
    }
  }
  if (kv.has("weight_per_curve")) {
    o.weight_per_curve = kv.get("weight_per_curve") == "true";
  }
  if (kv.has("token_unit")) o.token_unit = kv.get_tokens("token_unit");
  o.validate();
  return o;
}

KvConfig to_kv(const CostModel& m) {
  KvConfig kv;
  kv.set("train_flops_per_param_token", format_double(m.train_flops_per_param_token));
  kv.set("infer_flops_per_param_token", format_double(m.infer_flops_per_param_token));
  kv.set("spt_params", std::to_string(m.spt_params));
  kv.set("spt_pretrain_tokens", format_token_count(m.spt_pretrain_tokens));
  kv.set("spt_ft_tokens", format_token_count(m.spt_ft_tokens));
  kv.set("base_params", std::to_string(m.base_params));
  kv.set("base_ft_tokens", format_token_count(m.base_ft_tokens));
  if (m.dollars_per_flop.has_value()) {
    kv.set("dollars_per_flop", format_double(*m.dollars_per_flop));
  }
  return kv;
}

CostModel cost_model_from_kv(const KvConfig& kv) {
  expect_keys(kv, {"train_flops_per_param_token", "infer_flops_per_param_token",
                   "spt_params", "spt_pretrain_tokens", "spt_ft_tokens",
                   "base_params", "base_ft_tokens", "dollars_per_flop"});
  CostModel m;
  if (kv.has("train_flops_per_param_token")) {
    m.train_flops_per_param_token = kv.get_double("train_flops_per_param_token");
  }
  if (kv.has("infer_flops_per_param_token")) {
    m.infer_flops_per_param_token = kv.get_double("infer_flops_per_param_token");
  }
  if (kv.has("spt_params")) m.spt_params = kv.get_u64("spt_params");
  if (kv.has("spt_pretrain_tokens")) m.spt_pretrain_tokens = kv.get_tokens("spt_pretrain_tokens");
  if (kv.has("spt_ft_tokens")) m.spt_ft_tokens = kv.get_tokens("spt_ft_tokens");
  if (kv.has("base_params")) m.base_params = kv.get_u64("base_params");
  if (kv.has("base_ft_tokens")) m.base_ft_tokens = kv.get_tokens("base_ft_tokens");
  if (kv.has("dollars_per_flop")) m.dollars_per_flop = kv.get_double("dollars_per_flop");
  m.validate();
  return m;
}

KvConfig to_kv(const OverfitLawParams& p) {
  KvConfig kv;
  kv.set("a_train", format_double(p.a_train));
  kv.set("b_train_g", format_double(p.b_train_g));
  kv.set("b_train_s", format_double(p.b_train_s));
  kv.set("b_gap_g", format_double(p.b_gap_g));
  kv.set("b_gap_s", format_double(p.b_gap_s));
  kv.set("alpha1", format_double(p.alpha1));
  kv.set("alpha2", format_double(p.alpha2));
  kv.set("alpha3", format_double(p.alpha3));
  kv.set("kappa0", format_double(p.kappa0));
  kv.set("kappa1", format_double(p.kappa1));
  kv.set("kappa2", format_double(p.kappa2));
  kv.set("kappa3", format_double(p.kappa3));
  kv.set("token_unit", format_token_count(p.token_unit));
  return kv;
}

OverfitLawParams overfit_params_from_kv(const KvConfig& kv) {
  expect_keys(kv, {"a_train", "b_train_g", "b_train_s", "b_gap_g", "b_gap_s",
                   "alpha1", "alpha2", "alpha3", "kappa0", "kappa1", "kappa2",
                   "kappa3", "token_unit"});
  OverfitLawParams p;
  p.a_train = kv.get_double("a_train");
  p.b_train_g = kv.get_double("b_train_g");
  p.b_train_s = kv.get_double("b_train_s");
  p.b_gap_g = kv.get_double("b_gap_g");
  p.b_gap_s = kv.get_double("b_gap_s");
  p.alpha1 = kv.get_double("alpha1");
  p.alpha2 = kv.get_double("alpha2");
  p.alpha3 = kv.get_double("alpha3");
  p.kappa0 = kv.get_double("kappa0");
  p.kappa1 = kv.get_double("kappa1");
  p.kappa2 = kv.get_double("kappa2");
  p.kappa3 = kv.get_double("kappa3");
  if (kv.has("token_unit")) p.token_unit = kv.get_tokens("token_unit");
  p.validate();
  return p;
}

KvConfig to_kv(const SyntheticSpec& s) {
  KvConfig kv = to_kv(s.truth);
  std::string deltas;
  for (const auto& d : s.deltas) {
    if (!deltas.empty()) deltas += ',';
    deltas += format_double(d.value());
  }
  kv.set("deltas", deltas);
  std::string grid;
  for (const auto& t : s.token_grid) {
    if (!grid.empty()) grid += ',';
    grid += format_token_count(t);
  }
  kv.set("token_grid", grid);
  kv.set("noise_sigma", format_double(s.noise_sigma));
  kv.set("seed", std::to_string(s.seed));
  return kv;
}

SyntheticSpec synthetic_spec_from_kv(const KvConfig& kv) {
  expect_keys(kv, {"a_train", "b_train_g", "b_train_s", "b_gap_g", "b_gap_s",
                   "alpha1", "alpha2", "alpha3", "kappa0", "kappa1", "kappa2",
                   "kappa3", "token_unit", "deltas", "token_grid",
                   "noise_sigma", "seed"});
  SyntheticSpec s;
  KvConfig truth_kv;
  for (const auto& [key, value] : kv.entries()) {
    if (key != "deltas" && key != "token_grid" && key != "noise_sigma" &&
        key != "seed") {
      truth_kv.set(key, value);
    }
  }
  s.truth = overfit_params_from_kv(truth_kv);
  for (const auto& item : kv.get_list("deltas")) {
    s.deltas.push_back(MixtureFraction::parse(item));
  }
  s.token_grid = parse_token_grid(kv.get("token_grid"));
  if (kv.has("noise_sigma")) s.noise_sigma = kv.get_double("noise_sigma");
  if (kv.has("seed")) s.seed = kv.get_u64("seed");
  s.validate();
  return s;
}

std::vector<TokenCount> parse_token_grid(const std::string& text) {
  const std::string s = trim(text);
  auto spec_parts = [&](const std::string& body) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : body) {
      if (c == ':') {
        parts.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    parts.push_back(cur);
    return parts;
  };

  const bool is_log = s.rfind("log:", 0) == 0;
  const bool is_lin = s.rfind("lin:", 0) == 0;
  if (is_log || is_lin) {
    auto parts = spec_parts(s.substr(4));
    if (parts.size() != 3) {
      throw FormatError("grid spec needs lo:hi:n, got " + text);
    }
    const TokenCount lo = parse_token_count(parts[0]);
    const TokenCount hi = parse_token_count(parts[1]);
    std::uint64_t n = 0;
    try {
      n = std::stoull(parts[2]);
    } catch (const std::exception&) {
      throw FormatError("bad grid point count: " + parts[2]);
    }
    if (n < 2 || lo.value == 0 || !(lo < hi)) {
      throw FormatError("grid needs lo < hi, lo > 0, n >= 2: " + text);
    }
    std::vector<TokenCount> grid;
    grid.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      const double frac = static_cast<double>(i) / static_cast<double>(n - 1);
      double v;
      if (is_log) {
        v = static_cast<double>(lo.value) *
            std::exp(std::log(static_cast<double>(hi.value) /
                              static_cast<double>(lo.value)) *
                     frac);
      } else {
        v = static_cast<double>(lo.value) +
            (static_cast<double>(hi.value) - static_cast<double>(lo.value)) * frac;
      }
      const TokenCount t{static_cast<std::uint64_t>(std::llround(v))};
      if (grid.empty() || grid.back() < t) grid.push_back(t);
    }
    if (grid.back() < hi) grid.back() = hi;
    return grid;
  }

  std::vector<TokenCount> grid;
  std::string cur;
  auto flush = [&]() {
    const std::string item = trim(cur);
    cur.clear();
    if (item.empty()) return;
    const TokenCount t = parse_token_count(item);
    if (!grid.empty() && !(grid.back() < t)) {
      throw FormatError("token grid must be strictly increasing");
    }
    grid.push_back(t);
  };
  for (char c : s) {
    if (c == ',') {
      flush();
    } else {
      cur += c;
    }
  }
  flush();
  if (grid.empty()) throw FormatError("empty token grid");
  return grid;
}

}  // namespace sptlaw
