// Copyright 2026 The hypex Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hypex/runner.h"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "hypex/bayes.h"
#include "hypex/design.h"
#include "hypex/error.h"
#include "hypex/inference.h"
#include "hypex/randomization.h"
#include "hypex/terms.h"

namespace hypex {
namespace {

template <typename F>
auto in_stage(const std::string& stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.kind(), stage + ": " + e.what());
  }
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigurationError("cannot write " + path.string());
  out.precision(17);
  return out;
}

std::string num(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "NA" : (v > 0 ? "Inf" : "-Inf");
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string cell(const Json& j) {
  if (j.is_null()) return "NA";
  if (j.is_number()) return num(j.get<double>());
  if (j.is_string()) return j.get<std::string>();
  return j.dump();
}

std::string file_stem(std::string name) {
  for (char& c : name) {
    if (c == '/' || c == '=' || c == ' ') c = '_';
  }
  return name;
}

Json summary_json(const std::string& sample, const CovariateSummary& s) {
  Json vars = Json::array();
  for (const auto& v : s.variables) {
    vars.push_back({{"name", v.name},
                    {"binary", v.binary},
                    {"n", v.n},
                    {"min", v.min},
                    {"q25", v.q25},
                    {"mean", v.mean},
                    {"median", v.median},
                    {"q75", v.q75},
                    {"max", v.max}});
  }
  return {{"sample", sample}, {"n", s.n}, {"n_treated", s.n_treated}, {"variables", vars}};
}

StatisticOptions statistic_options(const AnalysisSpec& a, std::uint64_t seed) {
  StatisticOptions o;
  o.covariates = a.covariates;
  o.bayes_fast = a.bayes_fast;
  o.bayes_seed = seed;
  return o;
}

Json fiducial_json(const FiducialResult& r, const FiducialOptions& o) {
  return {{"lower", r.lower},
          {"upper", r.upper},
          {"point", r.point},
          {"level", o.level},
          {"statistic", to_string(o.statistic)},
          {"draws", o.draws},
          {"seed", o.seed},
          {"grid", r.grid},
          {"p_values", r.p_values},
          {"warnings", r.warnings}};
}

}  // namespace

BlindedDataset load_input(const ProtocolConfig& cfg) {
  return in_stage("input", [&] { return load_csv(cfg.input, cfg.schema); });
}

DesignResult build_design(const ProtocolConfig& cfg, const BlindedDataset& ds) {
  return in_stage("design", [&]() -> DesignResult {
    const DesignConfig& dc = cfg.design;
    switch (dc.method) {
      case DesignMethod::kNone: return design_none(ds);
      case DesignMethod::kTrim: return trim_by_ranges(ds, dc.trim_rules);
      case DesignMethod::kStratify: {
        StratifyOptions opts = default_stratify_options(ds);
        if (!dc.bins.empty()) opts.bins = dc.bins;
        opts.exact = dc.exact;
        return coarsened_stratify(ds, opts);
      }
      case DesignMethod::kPsCaliper:
      case DesignMethod::kOptimalPair: break;
    }
    std::vector<std::vector<Term>> candidates;
    for (const auto& c : dc.propensity_candidates) candidates.push_back(parse_terms(c));
    const PropensityModel pm = fit_propensity(ds, candidates, dc.propensity_alpha);
    const DesignResult overlap = discard_nonoverlap(ds, pm, {dc.overlap_iterate});
    if (dc.method == DesignMethod::kPsCaliper) {
      return caliper_match(ds, overlap, pm, dc.caliper_sd_multiple, dc.criterion);
    }
    return optimal_match(ds, overlap, dc.match_covariates);
  });
}

Json design_summary(const DesignResult& design, const BlindedDataset& ds) {
  Json samples = Json::array();
  samples.push_back(summary_json("all", summarize(ds)));
  samples.push_back(summary_json(std::string(to_string(design.method)),
                                 summarize(ds, design.retained_ids)));
  Json experiments = Json::array();
  for (const auto& e : design.experiments) {
    experiments.push_back({{"kind", to_string(e.kind)},
                           {"n_treated", e.n_treated},
                           {"n_control", e.n_control}});
  }
  return {{"method", to_string(design.method)},
          {"n_retained", design.retained_ids.size()},
          {"n_discarded", design.provenance.discards.size()},
          {"n_pairs", design.pairs.size()},
          {"n_strata", design.strata.size()},
          {"experiments", experiments},
          {"samples", samples}};
}

BalanceReport run_balance(const ProtocolConfig& cfg, const DesignResult& design,
                          const BlindedDataset& ds) {
  return in_stage("balance", [&] {
    BalanceOptions opts;
    opts.alpha = cfg.balance_alpha;
    opts.bin_width = cfg.histogram_bin_width;
    opts.distance_covariates = cfg.design.match_covariates;
    return balance_report(design, ds, opts);
  });
}

DesignLock lock_design(const ProtocolConfig& cfg, const DesignResult& design) {
  return in_stage("lock", [&] {
    design.validate();
    return freeze(design, cfg.locked_json());
  });
}

void verify_lock(const ProtocolConfig& cfg, const DesignResult& design, const DesignLock& lock) {
  if (!lock.verifies(design)) {
    throw BlindingViolationError("design does not match lock " + lock.design_id() +
                                 " (design or protocol changed after locking)");
  }
  if (canonical_dump(lock.protocol()) != canonical_dump(cfg.locked_json())) {
    throw BlindingViolationError("protocol differs from the one frozen in lock " +
                                 lock.design_id());
  }
}

Json run_analyses(const ProtocolConfig& cfg, const AnalysisDataset& ad,
                  std::vector<DrawSeries>* draws) {
  std::map<ExperimentKind, RandomizationScheme> schemes;
  auto scheme_for = [&](ExperimentKind k) -> const RandomizationScheme& {
    auto it = schemes.find(k);
    if (it == schemes.end()) {
      it = schemes.emplace(k, RandomizationScheme::Make(ad, k, cfg.seed.value_or(0))).first;
    }
    return it->second;
  };

  Json out = Json::array();
  for (const auto& a : cfg.analyses) {
    const std::string name = a.name();
    Json entry = {{"name", name}, {"type", to_string(a.type)}};
    in_stage("analysis '" + name + "'", [&] {
      const std::uint64_t seed = cfg.seed.value_or(0);
      const int n_draws = cfg.draws.value_or(0);
      switch (a.type) {
        case AnalysisType::kCrude:
          entry["result"] = to_json(neyman_crude(ad, cfg.level));
          break;
        case AnalysisType::kAdjusted:
          entry["result"] = to_json(ols_adjusted(ad, a.covariates, cfg.level));
          break;
        case AnalysisType::kInteractions: {
          Json rows = Json::array();
          for (const auto& t : interaction_screen(ad, a.covariates)) {
            rows.push_back({{"term", t.term},
                            {"estimate", t.estimate},
                            {"standard_error", t.standard_error},
                            {"statistic", t.statistic},
                            {"p_value", t.p_value}});
          }
          entry["result"] = rows;
          break;
        }
        case AnalysisType::kFisher:
        case AnalysisType::kMixed: {
          const ExperimentKind k = cfg.experiment_of(a);
          entry["experiment"] = to_string(k);
          FisherOptions o;
          o.statistic = a.statistic;
          o.statistic_options = statistic_options(a, seed);
          o.tau0 = a.tau0;
          o.draws = n_draws;
          o.seed = seed;
          o.threads = cfg.threads;
          FisherResult r = fisher_test(ad, scheme_for(k), o);
          entry["result"] = to_json(r);
          if (draws) draws->push_back({file_stem(name), "statistic", std::move(r.null_draws)});
          break;
        }
        case AnalysisType::kFiducial: {
          const ExperimentKind k = cfg.experiment_of(a);
          entry["experiment"] = to_string(k);
          FiducialOptions o;
          o.statistic = a.statistic;
          o.statistic_options = statistic_options(a, seed);
          o.level = cfg.level;
          o.draws = n_draws;
          o.seed = seed;
          o.threads = cfg.threads;
          entry["result"] = fiducial_json(fiducial_interval(ad, scheme_for(k), o), o);
          break;
        }
        case AnalysisType::kBayes: {
          AceOptions o;
          o.covariates = a.covariates;
          o.draws = n_draws;
          o.seed = seed;
          o.threads = cfg.threads;
          AcePosterior p = ace_posterior(ad, o);
          entry["result"] = to_json(p);
          if (draws) draws->push_back({file_stem(name), "ace", std::move(p.draws)});
          break;
        }
      }
    });
    out.push_back(std::move(entry));
  }
  return {{"n", ad.size()},
          {"design_id", ad.lock().design_id()},
          {"lock_hash", ad.lock().hash()},
          {"seed", cfg.seed ? Json(*cfg.seed) : Json(nullptr)},
          {"draws", cfg.draws ? Json(*cfg.draws) : Json(nullptr)},
          {"analyses", out}};
}

ReportBundle run_protocol(const ProtocolConfig& cfg) {
  cfg.validate();
  const BlindedDataset ds = load_input(cfg);
  const DesignResult design = build_design(cfg, ds);
  const BalanceReport balance = run_balance(cfg, design, ds);
  const DesignLock lock = lock_design(cfg, design);

  const std::filesystem::path dir = cfg.out_dir.empty() ? "hypex-out" : cfg.out_dir;
  write_design_artifacts(dir, design, ds);
  write_balance_artifacts(dir, balance);
  write_json(dir / "lock.json", lock.to_json());

  const AnalysisDataset ad =
      in_stage("unseal", [&] { return unseal_outcomes(ds, lock, design); });
  ReportBundle bundle;
  bundle.design_summary = design_summary(design, ds);
  bundle.balance = to_json(balance);
  bundle.inference = run_analyses(cfg, ad, &bundle.draws);
  bundle.provenance = {{"version", kVersion},
                       {"config", cfg.source_text},
                       {"protocol", cfg.locked_json()},
                       {"design_id", lock.design_id()},
                       {"lock_hash", lock.hash()},
                       {"seed", cfg.seed ? Json(*cfg.seed) : Json(nullptr)},
                       {"draws", cfg.draws ? Json(*cfg.draws) : Json(nullptr)},
                       {"input_fingerprint", ds.fingerprint()}};
  write_inference_artifacts(dir, bundle.inference, bundle.draws);
  write_json(dir / "report.json", {{"design_summary", bundle.design_summary},
                                   {"balance", bundle.balance},
                                   {"inference", bundle.inference},
                                   {"provenance", bundle.provenance}});
  return bundle;
}

void write_json(const std::filesystem::path& path, const Json& j) {
  auto out = open_out(path);
  out << canonical_dump(j) << '\n';
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw BlindingViolationError("missing artifact " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_summary_csv(const std::filesystem::path& path, const Json& summary) {
  auto out = open_out(path);
  out << "sample,variable,n,n_treated,min,q25,mean,median,q75,max\n";
  for (const auto& s : summary.at("samples")) {
    for (const auto& v : s.at("variables")) {
      out << cell(s.at("sample")) << ',' << cell(v.at("name")) << ',' << cell(v.at("n")) << ','
          << cell(s.at("n_treated"));
      for (const char* k : {"min", "q25", "mean", "median", "q75", "max"}) out << ',' << cell(v.at(k));
      out << '\n';
    }
  }
}

void write_design_artifacts(const std::filesystem::path& dir, const DesignResult& design,
                            const BlindedDataset& ds) {
  write_json(dir / "design.json", to_json(design));
  const Json summary = design_summary(design, ds);
  write_json(dir / "design_summary.json", summary);
  write_summary_csv(dir / "table1.csv", summary);
}

void write_balance_artifacts(const std::filesystem::path& dir, const BalanceReport& report) {
  write_json(dir / "balance.json", to_json(report));
  {
    auto out = open_out(dir / "table2.csv");
    const BalanceRow& r = report.table;
    out << "n,n_treated,n_control,age_treated_mean,age_treated_sd,age_control_mean,"
           "age_control_sd,height_treated_mean,height_treated_sd,height_control_mean,"
           "height_control_sd,male_treated,male_control,plausible\n";
    out << r.n << ',' << r.n_treated << ',' << r.n_control << ',' << num(r.age_treated.mean) << ','
        << num(r.age_treated.sd) << ',' << num(r.age_control.mean) << ',' << num(r.age_control.sd)
        << ',' << num(r.height_treated.mean) << ',' << num(r.height_treated.sd) << ','
        << num(r.height_control.mean) << ',' << num(r.height_control.sd) << ','
        << num(r.male_treated) << ',' << num(r.male_control) << ','
        << (report.verdict.plausible ? "true" : "false") << '\n';
  }
  {
    auto out = open_out(dir / "love.csv");
    out << "term,phase,value\n";
    for (std::size_t i = 0; i < report.terms.size(); ++i) {
      out << report.terms[i] << ",before," << num(report.smd_before[i]) << '\n';
      out << report.terms[i] << ",after," << num(report.smd_after[i]) << '\n';
    }
  }
  {
    auto out = open_out(dir / "ks.csv");
    out << "covariate,phase,statistic,p_value,exact\n";
    for (const auto& k : report.ks) {
      out << k.covariate << ',' << k.phase << ',' << num(k.result.statistic) << ','
          << num(k.result.p_value) << ',' << (k.result.exact ? "true" : "false") << '\n';
    }
  }
  if (report.pair_histogram) {
    const auto& h = *report.pair_histogram;
    auto out = open_out(dir / "pair_distance_histogram.csv");
    out << "bin_lo,bin_hi,count\n";
    for (std::size_t k = 0; k < h.counts.size(); ++k) {
      out << num(static_cast<double>(k) * h.bin_width) << ','
          << num(static_cast<double>(k + 1) * h.bin_width) << ',' << h.counts[k] << '\n';
    }
    auto pairs = open_out(dir / "pair_distances.csv");
    pairs << "pair,squared_mahalanobis\n";
    for (std::size_t k = 0; k < h.distances.size(); ++k) {
      pairs << k + 1 << ',' << num(h.distances[k]) << '\n';
    }
  }
}

void write_inference_artifacts(const std::filesystem::path& dir, const Json& inference,
                               const std::vector<DrawSeries>& draws) {
  write_json(dir / "inference.json", inference);
  auto out = open_out(dir / "table3.csv");
  out << "analysis,experiment,estimate,lower,upper,statistic,p_value\n";
  for (const auto& a : inference.at("analyses")) {
    const Json& r = a.at("result");
    const std::string experiment = a.contains("experiment") ? cell(a.at("experiment")) : "NA";
    if (r.is_array()) {
      for (const auto& t : r) {
        out << cell(a.at("name")) << '/' << cell(t.at("term")) << ',' << experiment << ','
            << cell(t.at("estimate")) << ",NA,NA," << cell(t.at("statistic")) << ','
            << cell(t.at("p_value")) << '\n';
      }
      continue;
    }
    auto get = [&](const char* k) { return r.contains(k) ? cell(r.at(k)) : std::string("NA"); };
    const std::string estimate = r.contains("estimate") ? get("estimate")
                                 : r.contains("point")  ? get("point")
                                                        : get("mean");
    out << cell(a.at("name")) << ',' << experiment << ',' << estimate << ',' << get("lower") << ','
        << get("upper") << ','
        << (r.contains("observed")                                   ? get("observed")
            : r.contains("statistic") && r.at("statistic").is_number() ? get("statistic")
                                                                         : std::string("NA"))
        << ',' << get("p_value") << '\n';
  }
  for (const auto& d : draws) {
    auto f = open_out(dir / "draws" / (d.name + ".csv"));
    f << d.column << '\n';
    for (double v : d.values) f << num(v) << '\n';
  }
}

}  // namespace hypex
