#include "sptlaw/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace sptlaw {

namespace {

json token_range_json(const TokenRange& r) {
  return json{{"min", r.min.value}, {"max", r.max.value}};
}

TokenRange token_range_from_json(const json& j) {
  return TokenRange{TokenCount{j.at("min").get<std::uint64_t>()},
                    TokenCount{j.at("max").get<std::uint64_t>()}};
}

}  // namespace

json to_json(const OverfitLawParams& p) {
  json j{{"a_train", p.a_train},
         {"b_train_g", p.b_train_g},
         {"b_train_s", p.b_train_s},
         {"b_gap_g", p.b_gap_g},
         {"b_gap_s", p.b_gap_s},
         {"alpha1", p.alpha1},
         {"alpha2", p.alpha2},
         {"alpha3", p.alpha3},
         {"kappa0", p.kappa0},
         {"kappa1", p.kappa1},
         {"kappa2", p.kappa2},
         {"kappa3", p.kappa3},
         {"token_unit", p.token_unit.value}};
  if (p.fitted_tokens.has_value()) {
    j["fitted_tokens"] = token_range_json(*p.fitted_tokens);
  }
  if (p.fitted_deltas.has_value()) {
    j["fitted_deltas"] =
        json{{"min", p.fitted_deltas->first}, {"max", p.fitted_deltas->second}};
  }
  return j;
}

OverfitLawParams overfit_params_from_json(const json& j) {
  OverfitLawParams p;
  p.a_train = j.at("a_train").get<double>();
  p.b_train_g = j.at("b_train_g").get<double>();
  p.b_train_s = j.at("b_train_s").get<double>();
  p.b_gap_g = j.at("b_gap_g").get<double>();
  p.b_gap_s = j.at("b_gap_s").get<double>();
  p.alpha1 = j.at("alpha1").get<double>();
  p.alpha2 = j.at("alpha2").get<double>();
  p.alpha3 = j.at("alpha3").get<double>();
  p.kappa0 = j.at("kappa0").get<double>();
  p.kappa1 = j.at("kappa1").get<double>();
  p.kappa2 = j.at("kappa2").get<double>();
  p.kappa3 = j.at("kappa3").get<double>();
  p.token_unit = TokenCount{j.at("token_unit").get<std::uint64_t>()};
  if (j.contains("fitted_tokens")) {
    p.fitted_tokens = token_range_from_json(j.at("fitted_tokens"));
  }
  if (j.contains("fitted_deltas")) {
    p.fitted_deltas = {j.at("fitted_deltas").at("min").get<double>(),
                       j.at("fitted_deltas").at("max").get<double>()};
  }
  p.validate();
  return p;
}

json to_json(const DeltaTestLawParams& p) {
  json j{{"delta", p.delta.value()},
         {"a", p.a},
         {"b", p.b},
         {"c", p.c},
         {"token_unit", p.token_unit.value}};
  if (p.fitted_tokens.has_value()) {
    j["fitted_tokens"] = token_range_json(*p.fitted_tokens);
  }
  return j;
}

DeltaTestLawParams delta_test_params_from_json(const json& j) {
  DeltaTestLawParams p;
  p.delta = MixtureFraction(j.at("delta").get<double>());
  p.a = j.at("a").get<double>();
  p.b = j.at("b").get<double>();
  p.c = j.at("c").get<double>();
  p.token_unit = TokenCount{j.at("token_unit").get<std::uint64_t>()};
  if (j.contains("fitted_tokens")) {
    p.fitted_tokens = token_range_from_json(j.at("fitted_tokens"));
  }
  p.validate();
  return p;
}

json to_json(const FitReport& r) {
  json r2 = json::object();
  for (const auto& [key, value] : r.per_curve_r2) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g/%s", key.first,
                  to_string(key.second).c_str());
    r2[buf] = value;
  }
  return json{{"residual_mse", r.residual_mse},
              {"per_curve_r2", r2},
              {"iterations", r.iterations},
              {"converged", r.converged},
              {"restarts_used", r.restarts_used},
              {"seed", r.seed}};
}

json to_json(const ForecastPoint& p) {
  json j{{"delta", p.delta},
         {"tokens", p.tokens.value},
         {"pt_test_loss", p.predicted_pt_test_loss},
         {"extrapolated", p.extrapolated}};
  if (p.predicted_delta_test.has_value()) {
    j["delta_test"] = *p.predicted_delta_test;
    j["delta_test_clamped"] = p.delta_test_clamped;
  }
  if (p.predicted_post_ft_loss.has_value()) {
    j["post_ft_loss"] = *p.predicted_post_ft_loss;
  }
  return j;
}

json to_json(const MixturePlan& plan) {
  json cands = json::array();
  for (const auto& c : plan.candidates) {
    json j{{"delta", c.delta},
           {"predicted_loss", c.predicted_loss},
           {"used_post_ft", c.used_post_ft},
           {"extrapolated", c.extrapolated}};
    if (c.onset_tokens.has_value()) {
      j["onset_tokens"] = c.onset_tokens->value;
    } else {
      j["onset_tokens"] = nullptr;
    }
    cands.push_back(j);
  }
  return json{{"budget_tokens", plan.budget_tokens.value},
              {"candidates", cands},
              {"chosen_delta", plan.chosen_delta.value()},
              {"predicted_loss", plan.predicted_loss}};
}

json to_json(const CostModel& m) {
  json j{{"train_flops_per_param_token", m.train_flops_per_param_token},
         {"infer_flops_per_param_token", m.infer_flops_per_param_token},
         {"spt_params", m.spt_params},
         {"spt_pretrain_tokens", m.spt_pretrain_tokens.value},
         {"spt_ft_tokens", m.spt_ft_tokens.value},
         {"base_params", m.base_params},
         {"base_ft_tokens", m.base_ft_tokens.value}};
  if (m.dollars_per_flop.has_value()) j["dollars_per_flop"] = *m.dollars_per_flop;
  return j;
}

json to_json(const ScheduleSummary& s) {
  json j{{"domain_tokens", s.domain_tokens.value},
         {"general_tokens", s.general_tokens.value},
         {"max_prefix_deviation", s.max_prefix_deviation}};
  if (s.epochs.has_value()) {
    j["epochs"] = *s.epochs;
  } else {
    j["epochs"] = nullptr;
  }
  return j;
}

json ReportEnvelope::to_json() const {
  return json{{"tool_version", tool_version}, {"command", command},
              {"inputs_digest", inputs_digest}, {"seed", seed},
              {"payload", payload},           {"warnings", warnings}};
}

std::string ReportEnvelope::dump() const { return to_json().dump(2) + "\n"; }

std::string digest_inputs(const std::vector<std::string>& contents) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&](const std::string& bytes) {
    const std::string len = std::to_string(bytes.size()) + ":";
    for (unsigned char c : len) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    for (unsigned char c : bytes) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& c : contents) feed(c);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  if (path == "-") {
    std::cout << contents;
    std::cout.flush();
    return;
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp + " for writing");
    out << contents;
    if (!out) throw Error("short write to " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw Error("cannot rename " + tmp + " to " + path);
  }
}

std::string read_file_or_stdin(const std::string& path) {
  if (path == "-") {
    std::ostringstream buf;
    buf << std::cin.rdbuf();
    return buf.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace sptlaw
