#include "sptlaw/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sptlaw/units.hpp"

namespace sptlaw {

namespace {

using json = nlohmann::json;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  for (auto& f : fields) {
    while (!f.empty() && std::isspace(static_cast<unsigned char>(f.front()))) f.erase(f.begin());
    while (!f.empty() && std::isspace(static_cast<unsigned char>(f.back()))) f.pop_back();
  }
  return fields;
}

double parse_loss_field(const std::string& s) {
  std::size_t pos = 0;
  double v = std::stod(s, &pos);
  if (pos != s.size()) throw FormatError("trailing characters in loss: " + s);
  return v;
}

struct RawRow {
  std::string run_id;
  MixtureFraction delta;
  Split split;
  TokenCount tokens;
  double loss;
};

struct RowSink {
  // (run_id, split) -> tokens -> loss
  std::map<std::pair<std::string, Split>, std::map<std::uint64_t, double>> cells;
  std::map<std::string, MixtureFraction> run_deltas;
  std::vector<ParseWarning> warnings;

  void add(const RawRow& row, std::size_t line) {
    if (!(row.loss > 0.0) || !std::isfinite(row.loss)) {
      warnings.push_back({line, "loss must be positive and finite, row skipped"});
      return;
    }
    auto [it, inserted] = run_deltas.emplace(row.run_id, row.delta);
    if (!inserted && !(it->second == row.delta)) {
      warnings.push_back({line, "run " + row.run_id +
                                    " has inconsistent delta, keeping first"});
    }
    auto& curve = cells[{row.run_id, row.split}];
    auto [pt, fresh] = curve.emplace(row.tokens.value, row.loss);
    if (!fresh) {
      if (pt->second != row.loss) {
        throw DuplicatePointError(
            "conflicting loss for run " + row.run_id + " split " +
            to_string(row.split) + " at " + std::to_string(row.tokens.value) +
            " tokens (line " + std::to_string(line) + ")");
      }
      warnings.push_back({line, "exact duplicate row collapsed"});
    }
  }
};

TokenCount token_field_from_json(const json& v) {
  if (v.is_number_unsigned()) return TokenCount{v.get<std::uint64_t>()};
  if (v.is_number_integer()) {
    auto i = v.get<std::int64_t>();
    if (i < 0) throw FormatError("negative token count");
    return TokenCount{static_cast<std::uint64_t>(i)};
  }
  if (v.is_number_float()) {
    double d = v.get<double>();
    if (d < 0 || d != std::floor(d)) throw FormatError("token count must be a whole number");
    return TokenCount{static_cast<std::uint64_t>(d)};
  }
  if (v.is_string()) return parse_token_count(v.get<std::string>());
  throw FormatError("token count must be a number or string");
}

MixtureFraction delta_field_from_json(const json& v) {
  if (v.is_number()) return MixtureFraction(v.get<double>());
  if (v.is_string()) return MixtureFraction::parse(v.get<std::string>());
  throw FormatError("delta must be a number or string");
}

void parse_csv(const std::string& bytes, RowSink& sink) {
  std::istringstream in(bytes);
  std::string line;
  if (!std::getline(in, line)) return;  // empty file: empty result
  auto header = split_csv_line(line);
  const std::vector<std::string> expected = {"run_id", "delta", "split",
                                             "tokens", "loss"};
  if (header != expected) {
    throw FormatError("bad CSV header, expected run_id,delta,split,tokens,loss");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 5) {
      sink.warnings.push_back({line_no, "expected 5 fields, got " +
                                            std::to_string(fields.size())});
      continue;
    }
    try {
      RawRow row{fields[0], MixtureFraction::parse(fields[1]),
                 split_from_string(fields[2]), parse_token_count(fields[3]),
                 parse_loss_field(fields[4])};
      sink.add(row, line_no);
    } catch (const DuplicatePointError&) {
      throw;
    } catch (const Error& e) {
      sink.warnings.push_back({line_no, e.what()});
    } catch (const std::exception& e) {
      sink.warnings.push_back({line_no, std::string("unparseable row: ") + e.what()});
    }
  }
}

void parse_jsonl(const std::string& bytes, RowSink& sink) {
  std::istringstream in(bytes);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    try {
      json obj = json::parse(line);
      if (!obj.is_object()) throw FormatError("row is not a JSON object");
      RawRow row{obj.at("run_id").get<std::string>(),
                 delta_field_from_json(obj.at("delta")),
                 split_from_string(obj.at("split").get<std::string>()),
                 token_field_from_json(obj.at("tokens")),
                 obj.at("loss").get<double>()};
      sink.add(row, line_no);
    } catch (const DuplicatePointError&) {
      throw;
    } catch (const std::exception& e) {
      sink.warnings.push_back({line_no, std::string("unparseable row: ") + e.what()});
    }
  }
}

}  // namespace

const LossCurve* RunDataset::find_curve(const std::string& run_id,
                                        Split split) const {
  for (const auto& c : curves) {
    if (c.run_id == run_id && c.split == split) return &c;
  }
  return nullptr;
}

const GapSeries* RunDataset::find_gap(const std::string& run_id) const {
  for (const auto& g : derived_gap_curves) {
    if (g.run_id == run_id) return &g;
  }
  return nullptr;
}

void FinetuneOutcome::validate() const {
  if (!(best_post_ft_domain_loss > 0) || !(pt_domain_test_loss > 0)) {
    throw InvariantViolation("outcome losses must be positive for " + run_id);
  }
  if (best_post_ft_domain_loss > pt_domain_test_loss) {
    throw InvariantViolation(
        "post-finetuning loss exceeds pretrained loss for " + run_id +
        "; early stopping guarantees improvement-or-equal");
  }
}

ParsedCurves parse_loss_log(const std::string& bytes, LogFormat format) {
  RowSink sink;
  if (format == LogFormat::CSV) {
    parse_csv(bytes, sink);
  } else {
    parse_jsonl(bytes, sink);
  }
  ParsedCurves out;
  out.warnings = std::move(sink.warnings);
  out.run_deltas = std::move(sink.run_deltas);
  for (auto& [key, pts] : sink.cells) {
    LossCurve curve;
    curve.run_id = key.first;
    curve.split = key.second;
    curve.points.reserve(pts.size());
    for (auto& [tok, loss] : pts) {
      curve.points.push_back({TokenCount{tok}, loss});
    }
    curve.validate();
    out.curves.push_back(std::move(curve));
  }
  return out;
}

GapSeries derive_gap(const LossCurve& train, const LossCurve& test) {
  if (train.run_id != test.run_id) {
    throw InvariantViolation("gap requires curves from the same run");
  }
  GapSeries gap;
  gap.run_id = train.run_id;
  std::size_t i = 0, j = 0;
  while (i < train.points.size() && j < test.points.size()) {
    const auto a = train.points[i].tokens;
    const auto b = test.points[j].tokens;
    if (a == b) {
      gap.points.push_back({a, test.points[j].loss - train.points[i].loss});
      ++i;
      ++j;
    } else if (a < b) {
      ++i;
    } else {
      ++j;
    }
  }
  if (gap.points.empty()) {
    throw NoOverlapError("curves for run " + train.run_id +
                         " share no token abscissae");
  }
  return gap;
}

RunDataset assemble_dataset(const ParsedCurves& parsed) {
  RunDataset ds;
  ds.curves = parsed.curves;
  std::sort(ds.curves.begin(), ds.curves.end(),
            [](const LossCurve& a, const LossCurve& b) {
              if (a.run_id != b.run_id) return a.run_id < b.run_id;
              return static_cast<int>(a.split) < static_cast<int>(b.split);
            });
  for (const auto& [run_id, delta] : parsed.run_deltas) {
    RunConfig cfg;
    cfg.run_id = run_id;
    cfg.delta = delta;
    for (const auto& c : ds.curves) {
      if (c.run_id == run_id && !c.points.empty()) {
        cfg.pretrain_budget_tokens =
            std::max(cfg.pretrain_budget_tokens, c.points.back().tokens);
      }
    }
    ds.runs.emplace(run_id, std::move(cfg));
  }
  for (const auto& [run_id, cfg] : ds.runs) {
    const LossCurve* train = ds.find_curve(run_id, Split::DomainTrain);
    const LossCurve* test = ds.find_curve(run_id, Split::DomainTest);
    if (train != nullptr && test != nullptr) {
      try {
        ds.derived_gap_curves.push_back(derive_gap(*train, *test));
      } catch (const NoOverlapError&) {
        // No shared abscissae: the run simply has no gap series.
      }
    }
  }
  return ds;
}

RunDataset load_dataset(const std::string& path,
                        std::vector<ParseWarning>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const LogFormat fmt = path.size() >= 6 && path.substr(path.size() - 6) == ".jsonl"
                            ? LogFormat::JSONL
                            : LogFormat::CSV;
  ParsedCurves parsed = parse_loss_log(buf.str(), fmt);
  if (warnings != nullptr) {
    warnings->insert(warnings->end(), parsed.warnings.begin(),
                     parsed.warnings.end());
  }
  return assemble_dataset(parsed);
}

std::vector<FinetuneOutcome> parse_finetune_outcomes(
    const std::string& bytes, std::vector<ParseWarning>* warnings) {
  std::istringstream in(bytes);
  std::string line;
  std::vector<FinetuneOutcome> out;
  if (!std::getline(in, line)) return out;
  auto header = split_csv_line(line);
  const std::vector<std::string> expected = {"run_id", "delta", "tokens",
                                             "pt_loss", "post_ft_loss"};
  if (header != expected) {
    throw FormatError(
        "bad outcomes header, expected run_id,delta,tokens,pt_loss,post_ft_loss");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 5) {
      if (warnings != nullptr) {
        warnings->push_back({line_no, "expected 5 fields, got " +
                                          std::to_string(fields.size())});
      }
      continue;
    }
    try {
      FinetuneOutcome o;
      o.run_id = fields[0];
      o.delta = MixtureFraction::parse(fields[1]);
      o.pretrain_tokens_at_ft = parse_token_count(fields[2]);
      o.pt_domain_test_loss = parse_loss_field(fields[3]);
      o.best_post_ft_domain_loss = parse_loss_field(fields[4]);
      o.validate();
      out.push_back(std::move(o));
    } catch (const std::exception& e) {
      if (warnings != nullptr) warnings->push_back({line_no, e.what()});
    }
  }
  return out;
}

std::vector<std::pair<TokenCount, double>> compute_delta_test_points(
    const std::vector<FinetuneOutcome>& outcomes) {
  std::vector<std::pair<TokenCount, double>> pts;
  pts.reserve(outcomes.size());
  for (const auto& o : outcomes) {
    const double dl = o.pt_domain_test_loss - o.best_post_ft_domain_loss;
    if (dl < 0) {
      throw InvariantViolation("negative finetuning improvement for " +
                               o.run_id);
    }
    pts.emplace_back(o.pretrain_tokens_at_ft, dl);
  }
  return pts;
}

std::string curves_to_csv(
    const std::vector<LossCurve>& curves,
    const std::map<std::string, MixtureFraction>& run_deltas) {
  std::vector<const LossCurve*> sorted;
  sorted.reserve(curves.size());
  for (const auto& c : curves) sorted.push_back(&c);
  std::sort(sorted.begin(), sorted.end(),
            [](const LossCurve* a, const LossCurve* b) {
              if (a->run_id != b->run_id) return a->run_id < b->run_id;
              return static_cast<int>(a->split) < static_cast<int>(b->split);
            });
  std::string out = "run_id,delta,split,tokens,loss\n";
  char buf[64];
  for (const LossCurve* c : sorted) {
    auto it = run_deltas.find(c->run_id);
    const double delta = it == run_deltas.end() ? 0.0 : it->second.value();
    for (const auto& p : c->points) {
      std::snprintf(buf, sizeof(buf), "%.17g", delta);
      out += c->run_id;
      out += ',';
      out += buf;
      out += ',';
      out += to_string(c->split);
      out += ',';
      out += std::to_string(p.tokens.value);
      out += ',';
      std::snprintf(buf, sizeof(buf), "%.17g", p.loss);
      out += buf;
      out += '\n';
    }
  }
  return out;
}

}  // namespace sptlaw
