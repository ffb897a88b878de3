#include "commscape/stages.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "commscape/binio.hpp"
#include "commscape/engagement.hpp"
#include "commscape/errors.hpp"
#include "commscape/forest.hpp"
#include "commscape/ingest.hpp"
#include "commscape/rng.hpp"
#include "commscape/stats.hpp"

namespace commscape {

namespace {

constexpr char kEnsembleMagic[4] = {'C', 'S', 'L', 'E'};
constexpr std::uint32_t kEnsembleVersion = 1;

std::string sanitize_component(const std::string& s) {
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '_' || c == '-') {
      out += static_cast<char>(c);
    } else {
      char buf[8];
      std::snprintf(buf, sizeof(buf), "~%02x", c);
      out += buf;
    }
  }
  return out;
}

std::string hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

// A stage depends on its upstream stages' artifacts; the lineage hash
// chains each stage's own config hash with its upstream lineages, so a
// rerun with any upstream input changed recomputes instead of serving
// stale artifacts.
const std::vector<std::string>& stage_deps(const std::string& stage) {
  static const std::map<std::string, std::vector<std::string>> deps = {
      {"ingest", {}},
      {"measure", {"ingest"}},
      {"slm", {"ingest", "measure"}},
      {"engagement", {"ingest", "measure", "slm"}},
      {"predict", {"measure", "engagement"}},
      {"report", {"predict"}},
  };
  return deps.at(stage);
}

std::map<std::string, std::string> read_meta(const RunConfig& cfg,
                                             const std::string& stage) {
  StagePaths paths{cfg.output_root};
  std::map<std::string, std::string> kv;
  std::ifstream in(paths.meta(stage));
  if (!in) return kv;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

std::uint64_t require_lineage(const RunConfig& cfg, const std::string& stage) {
  auto kv = read_meta(cfg, stage);
  if (kv["status"] != "complete" || kv["version"] != kToolVersion ||
      kv["lineage"].empty()) {
    throw DataError("stage '" + stage + "' has no completed artifacts in " +
                    cfg.output_root + "; run the '" + stage +
                    "' subcommand first");
  }
  return std::strtoull(kv["lineage"].c_str(), nullptr, 16);
}

std::uint64_t compute_lineage(const RunConfig& cfg, const std::string& stage) {
  std::string acc = hex64(cfg.config_hash());
  for (const auto& dep : stage_deps(stage)) {
    acc += ":" + hex64(require_lineage(cfg, dep));
  }
  return hash_bytes(acc);
}

void write_meta(const RunConfig& cfg, const std::string& stage,
                std::uint64_t lineage) {
  StagePaths paths{cfg.output_root};
  std::ofstream out(paths.meta(stage), std::ios::binary);
  if (!out) throw IoError("cannot write: " + paths.meta(stage));
  out << "stage=" << stage << "\n"
      << "version=" << kToolVersion << "\n"
      << "config_hash=" << hex64(cfg.config_hash()) << "\n"
      << "lineage=" << hex64(lineage) << "\n"
      << "status=complete\n";
}

bool meta_matches(const RunConfig& cfg, const std::string& stage,
                  std::uint64_t lineage) {
  auto kv = read_meta(cfg, stage);
  return kv["status"] == "complete" && kv["version"] == kToolVersion &&
         kv["lineage"] == hex64(lineage);
}

bool skip_if_complete(const RunConfig& cfg, const std::string& stage,
                      std::uint64_t lineage, bool force) {
  if (!force && meta_matches(cfg, stage, lineage)) {
    std::cout << stage << ": up to date, skipping\n";
    return true;
  }
  return false;
}

IngestOptions make_ingest_options(const RunConfig& cfg) {
  IngestOptions opts;
  if (cfg.noun_mode == "lexicon") {
    opts.nouns = NounFilter::from_lexicon_file(cfg.noun_resource);
  } else if (cfg.noun_mode == "sidecar") {
    opts.nouns = NounFilter::from_tag_sidecar(cfg.noun_resource);
  }
  if (!cfg.stoplist.empty()) opts.stoplist = load_word_set(cfg.stoplist);
  if (!cfg.language_overrides.empty()) {
    opts.foreign_overrides = load_foreign_overrides(cfg.language_overrides);
  }
  opts.foreign_threshold = cfg.foreign_threshold;
  opts.foreign_min_tokens = cfg.foreign_min_tokens;
  return opts;
}

struct Pipeline {
  BucketedCorpus corpus;
  CorpusTables tables;
  std::map<std::string, CommunityProfile> profiles;
};

Pipeline load_pipeline(const RunConfig& cfg) {
  StagePaths paths{cfg.output_root};
  Pipeline p;
  p.corpus = load_corpus(paths.corpus_bin());
  p.tables = build_tables(p.corpus, cfg.eligibility());
  p.profiles = build_profiles(p.corpus, p.tables, cfg.typology_options());
  quadrant_label(&p.profiles);
  return p;
}

// Eligible months of eligible communities, the per-month analysis set.
std::vector<CommunityMonthKey> analysis_keys(const CorpusTables& tables) {
  std::vector<CommunityMonthKey> keys;
  for (const auto& [key, vocab] : tables.scoring) {
    if (tables.eligible_comms.count(key.community)) keys.push_back(key);
  }
  return keys;
}

MonthIndex resolve_tenure_slice(const RunConfig& cfg,
                                const BucketedCorpus& corpus) {
  if (!cfg.tenure_slice.empty()) {
    return month_index_from_label(cfg.tenure_slice);
  }
  std::set<MonthIndex> months;
  for (const auto& [key, bucket] : corpus.buckets) months.insert(key.month);
  if (months.empty()) throw DataError("corpus has no bucketed months");
  std::vector<MonthIndex> sorted(months.begin(), months.end());
  return sorted[(sorted.size() - 1) / 2];
}

double to_double(const std::string& s, const std::string& what) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw DataError("cannot parse number '" + s + "' in " + what);
  }
  return v;
}

// Rank correlation with a cluster-bootstrap interval: clusters resampled
// with replacement, correlation recomputed on the pooled points, outward
// percentile interval. Replicates where the correlation is undefined are
// dropped.
struct CorrSummary {
  bool defined = false;
  double rho = 0.0;
  double p = 1.0;
  bool exact = false;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::int64_t points = 0;
  std::int64_t clusters = 0;
};

CorrSummary rank_corr_summary(
    const std::vector<std::vector<std::pair<double, double>>>& clusters,
    int n_boot, std::uint64_t seed) {
  CorrSummary out;
  std::vector<double> xs, ys;
  for (const auto& cl : clusters) {
    for (const auto& [x, y] : cl) {
      xs.push_back(x);
      ys.push_back(y);
    }
  }
  out.points = static_cast<std::int64_t>(xs.size());
  out.clusters = static_cast<std::int64_t>(clusters.size());
  if (xs.size() < 3) return out;
  auto base = spearman(xs, ys);
  if (!base) return out;
  out.defined = true;
  out.rho = base->statistic;
  out.p = base->p_value;
  out.exact = base->exact;

  Rng rng(seed);
  std::vector<double> stats;
  stats.reserve(static_cast<std::size_t>(n_boot));
  std::vector<double> bx, by;
  for (int b = 0; b < n_boot; ++b) {
    bx.clear();
    by.clear();
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      const auto& cl = clusters[rng.below(clusters.size())];
      for (const auto& [x, y] : cl) {
        bx.push_back(x);
        by.push_back(y);
      }
    }
    auto r = spearman(bx, by);
    if (r) stats.push_back(r->statistic);
  }
  if (stats.empty()) {
    out.ci_lo = out.rho;
    out.ci_hi = out.rho;
    return out;
  }
  std::sort(stats.begin(), stats.end());
  std::size_t n = stats.size();
  auto lo_idx = static_cast<std::size_t>(
      std::floor(0.025 * static_cast<double>(n - 1)));
  auto hi_idx = static_cast<std::size_t>(
      std::ceil(0.975 * static_cast<double>(n - 1)));
  out.ci_lo = stats[lo_idx];
  out.ci_hi = stats[hi_idx];
  return out;
}

}  // namespace

std::string StagePaths::ensemble(const std::string& community,
                                 MonthIndex month) const {
  return slm_dir() + "/" + sanitize_component(community) + "__" +
         month_label(month) + ".slme";
}

bool stage_complete(const RunConfig& cfg, const std::string& stage) {
  try {
    return meta_matches(cfg, stage, compute_lineage(cfg, stage));
  } catch (const DataError&) {
    return false;
  }
}

void require_stage(const RunConfig& cfg, const std::string& stage) {
  require_lineage(cfg, stage);
}

void save_ensemble(const std::string& path,
                   const std::vector<SnapshotLM>& models) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write: " + path);
  ByteWriter w(out);
  out.write(kEnsembleMagic, 4);
  w.u32(kEnsembleVersion);
  w.u64(models.size());
  for (const auto& m : models) m.save(out);
  if (!out) throw IoError("write failed: " + path);
}

std::vector<SnapshotLM> load_ensemble(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open ensemble artifact: " + path);
  ByteReader r(in);
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::string_view(magic, 4) !=
                              std::string_view(kEnsembleMagic, 4)) {
    throw DataError("not an ensemble artifact: " + path);
  }
  std::uint32_t version = r.u32();
  if (version != kEnsembleVersion) {
    throw DataError("unsupported ensemble artifact version " +
                    std::to_string(version) + ": " + path);
  }
  std::uint64_t count = r.u64();
  std::vector<SnapshotLM> models;
  models.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    models.push_back(SnapshotLM::load(in));
  }
  return models;
}

bool run_ingest_stage(const RunConfig& cfg, bool force) {
  cfg.validate();
  if (cfg.input.empty()) throw ConfigError("ingest needs an input file");
  std::filesystem::create_directories(cfg.output_root);
  std::uint64_t lineage = compute_lineage(cfg, "ingest");
  if (skip_if_complete(cfg, "ingest", lineage, force)) return false;

  BucketedCorpus corpus = run_ingest(cfg.input, make_ingest_options(cfg));
  StagePaths paths{cfg.output_root};
  save_corpus(corpus, paths.corpus_bin());
  write_drop_report_csv(corpus.drops, paths.drop_report(),
                        cfg.metadata("ingest"));
  write_foreign_flags_csv(corpus, paths.foreign_flags(),
                          cfg.metadata("ingest"));
  write_meta(cfg, "ingest", lineage);
  std::int64_t foreign = 0;
  for (const auto& [name, flag] : corpus.flags) foreign += flag.foreign;
  std::cout << "ingest: " << corpus.drops.bucketed << " comments in "
            << corpus.flags.size() << " communities (" << foreign
            << " flagged foreign), " << corpus.buckets.size()
            << " community-months\n";
  return true;
}

bool run_measure_stage(const RunConfig& cfg, bool force) {
  cfg.validate();
  std::filesystem::create_directories(cfg.output_root);
  std::uint64_t lineage = compute_lineage(cfg, "measure");
  if (skip_if_complete(cfg, "measure", lineage, force)) return false;

  Pipeline p = load_pipeline(cfg);
  StagePaths paths{cfg.output_root};

  std::vector<WordScores> all_scores;
  for (const auto& key : analysis_keys(p.tables)) {
    all_scores.push_back(score_words(p.tables, key, cfg.background_mode()));
  }
  export_word_scores_csv(all_scores, paths.word_scores(),
                         cfg.metadata("measure"));

  {
    CsvWriter csv(paths.month_measures(), cfg.metadata("measure"),
                  {"community", "month", "distinctiveness", "dynamicity",
                   "scored_utterances", "skipped_utterances"});
    for (const auto& [name, prof] : p.profiles) {
      for (const auto& [t, mm] : prof.per_month) {
        csv.field(name)
            .field(month_label(t))
            .field(mm.distinctiveness)
            .field(mm.dynamicity)
            .field(mm.scored_utterances)
            .field(mm.skipped_utterances);
        csv.end_row();
      }
    }
  }
  export_profiles_csv(p.profiles, paths.profiles(), cfg.metadata("measure"));
  write_meta(cfg, "measure", lineage);
  std::cout << "measure: " << p.profiles.size() << " eligible communities, "
            << all_scores.size() << " scored community-months\n";
  return true;
}

bool run_slm_stage(const RunConfig& cfg, bool force) {
  cfg.validate();
  std::filesystem::create_directories(cfg.output_root);
  std::uint64_t lineage = compute_lineage(cfg, "slm");
  if (skip_if_complete(cfg, "slm", lineage, force)) return false;

  Pipeline p = load_pipeline(cfg);
  StagePaths paths{cfg.output_root};
  std::filesystem::create_directories(paths.slm_dir());

  SlmProtocol proto = cfg.slm_protocol();
  CsvWriter manifest(paths.slm_manifest(), cfg.metadata("slm"),
                     {"community", "month", "replicate", "seed", "users",
                      "spans", "vocab", "gt_fallback"});
  std::int64_t trained = 0, skipped = 0;
  for (const auto& key : analysis_keys(p.tables)) {
    const auto& bucket = p.corpus.buckets.at(key);
    std::vector<SnapshotLM> models =
        bootstrap_slms(bucket, key, proto, cfg.seed);
    if (models.empty()) {
      ++skipped;
      continue;
    }
    save_ensemble(paths.ensemble(key.community, key.month), models);
    for (std::size_t m = 0; m < models.size(); ++m) {
      const auto& mf = models[m].manifest();
      manifest.field(key.community)
          .field(month_label(key.month))
          .field(static_cast<std::int64_t>(m))
          .field(std::to_string(mf.seed))
          .field(static_cast<std::int64_t>(mf.users.size()))
          .field(static_cast<std::int64_t>(mf.spans.size()))
          .field(static_cast<std::int64_t>(models[m].vocab_size()))
          .field(std::int64_t{models[m].gt_fallback() ? 1 : 0});
      manifest.end_row();
    }
    ++trained;
  }
  write_meta(cfg, "slm", lineage);
  std::cout << "slm: ensembles for " << trained << " community-months ("
            << skipped << " without qualifying users)\n";
  return true;
}

bool run_engagement_stage(const RunConfig& cfg, bool force) {
  cfg.validate();
  std::filesystem::create_directories(cfg.output_root);
  std::uint64_t lineage = compute_lineage(cfg, "engagement");
  if (skip_if_complete(cfg, "engagement", lineage, force)) return false;

  Pipeline p = load_pipeline(cfg);
  StagePaths paths{cfg.output_root};
  ActivityIndex idx = ActivityIndex::build(p.corpus);
  MonthIndex slice = resolve_tenure_slice(cfg, p.corpus);

  // Per community: per-measure accumulators for the merged table.
  std::map<std::string, std::vector<double>> retention_included;
  std::map<std::string, std::vector<double>> accult_values;
  std::map<std::string, double> tenure_values;
  std::map<std::string, CommunityGaps> gap_values;

  {
    CsvWriter csv(paths.retention(), cfg.metadata("engagement"),
                  {"community", "month", "included", "contributors",
                   "retention"});
    for (const auto& [key, authors] : idx.per_ct) {
      auto prof = p.profiles.find(key.community);
      if (prof == p.profiles.end()) continue;
      auto r = monthly_retention(idx, key.community, key.month);
      if (!r) continue;
      bool included = prof->second.per_month.count(key.month) > 0;
      if (included) retention_included[key.community].push_back(*r);
      csv.field(key.community)
          .field(month_label(key.month))
          .field(std::int64_t{included ? 1 : 0})
          .field(static_cast<std::int64_t>(authors.size()))
          .field(*r);
      csv.end_row();
    }
  }

  {
    CsvMetadata meta = cfg.metadata("engagement");
    meta.push_back({"tenure_slice_resolved", month_label(slice)});
    CsvWriter csv(paths.tenure(), meta,
                  {"community", "slice_month", "slice_users", "mean_tenure"});
    for (const auto& [name, prof] : p.profiles) {
      auto ct = idx.per_ct.find({name, slice});
      std::int64_t users =
          ct == idx.per_ct.end()
              ? 0
              : static_cast<std::int64_t>(ct->second.size());
      auto tenure = mean_tenure(idx, name, slice);
      csv.field(name).field(month_label(slice)).field(users);
      if (tenure) {
        csv.field(*tenure);
        tenure_values[name] = *tenure;
      } else {
        csv.field("");
      }
      csv.end_row();
    }
  }

  {
    AcculturationProtocol proto = cfg.acculturation_protocol();
    CsvWriter csv(paths.acculturation(), cfg.metadata("engagement"),
                  {"community", "month", "status", "replicates", "gap",
                   "ci_lo", "ci_hi"});
    for (const auto& key : analysis_keys(p.tables)) {
      if (!p.profiles.count(key.community)) continue;
      std::string path = paths.ensemble(key.community, key.month);
      csv.field(key.community).field(month_label(key.month));
      if (!std::filesystem::exists(path)) {
        csv.field("no_models").field(std::int64_t{0}).field("").field("")
            .field("");
        csv.end_row();
        continue;
      }
      std::vector<SnapshotLM> models = load_ensemble(path);
      Cohorts cohorts = identify_cohorts(idx, key, cfg.active_min);
      AcculturationResult res = acculturation_gap(
          p.corpus.buckets.at(key), key, cohorts, models, proto, cfg.seed);
      if (!res.defined) {
        csv.field(res.skip_reason).field(std::int64_t{0}).field("").field("")
            .field("");
        csv.end_row();
        continue;
      }
      accult_values[key.community].push_back(res.gap);
      csv.field("ok")
          .field(static_cast<std::int64_t>(res.per_replicate.size()))
          .field(res.gap)
          .field(res.ci_lo)
          .field(res.ci_hi);
      csv.end_row();
    }
  }

  {
    CsvWriter csv(paths.gaps(), cfg.metadata("engagement"),
                  {"community", "status", "spec_gap", "spec_gap_eq",
                   "vol_gap", "vol_gap_eq", "mu_active_spec",
                   "mu_outsider_spec", "mu_active_vol", "mu_outsider_vol",
                   "active_points", "outsider_points"});
    for (const auto& [name, prof] : p.profiles) {
      CommunityGaps gaps = content_affinity_gaps(
          p.corpus, p.tables, idx, name, cfg.typology_options(),
          cfg.active_min);
      gap_values[name] = gaps;
      csv.field(name);
      if (!gaps.defined) {
        csv.field(gaps.skip_reason);
        for (int i = 0; i < 10; ++i) csv.field("");
        csv.end_row();
        continue;
      }
      csv.field("ok")
          .field(gaps.specificity.symmetric)
          .field(gaps.specificity.eq_style)
          .field(gaps.volatility.symmetric)
          .field(gaps.volatility.eq_style)
          .field(gaps.specificity.mu_active)
          .field(gaps.specificity.mu_outsider)
          .field(gaps.volatility.mu_active)
          .field(gaps.volatility.mu_outsider)
          .field(gaps.specificity.active_points)
          .field(gaps.specificity.outsider_points);
      csv.end_row();
    }
  }

  {
    CsvWriter csv(paths.analysis_table(), cfg.metadata("engagement"),
                  {"community", "months_included", "distinctiveness",
                   "dynamicity", "users", "log_users", "activity",
                   "log_activity", "retention_months", "mean_retention",
                   "mean_tenure", "acculturation_months", "acculturation",
                   "spec_gap", "vol_gap"});
    for (const auto& [name, prof] : p.profiles) {
      std::set<std::string> users;
      std::int64_t comments = 0;
      for (const auto& [t, mm] : prof.per_month) {
        const auto& bucket = p.corpus.buckets.at({name, t});
        comments += static_cast<std::int64_t>(bucket.size());
        for (const auto& u : bucket) users.insert(u.author);
      }
      double n_users = static_cast<double>(users.size());
      double activity = comments > 0 && !users.empty()
                            ? static_cast<double>(comments) / n_users
                            : 0.0;
      csv.field(name)
          .field(static_cast<std::int64_t>(prof.per_month.size()))
          .field(prof.distinctiveness)
          .field(prof.dynamicity)
          .field(static_cast<std::int64_t>(users.size()));
      if (!users.empty() && activity > 0.0) {
        csv.field(std::log(n_users)).field(activity).field(
            std::log(activity));
      } else {
        csv.field("").field("").field("");
      }
      const auto& rets = retention_included[name];
      csv.field(static_cast<std::int64_t>(rets.size()));
      if (!rets.empty()) {
        double mean = 0.0;
        for (double r : rets) mean += r;
        csv.field(mean / static_cast<double>(rets.size()));
      } else {
        csv.field("");
      }
      auto ten = tenure_values.find(name);
      if (ten != tenure_values.end()) {
        csv.field(ten->second);
      } else {
        csv.field("");
      }
      const auto& accs = accult_values[name];
      csv.field(static_cast<std::int64_t>(accs.size()));
      if (!accs.empty()) {
        double mean = 0.0;
        for (double a : accs) mean += a;
        csv.field(mean / static_cast<double>(accs.size()));
      } else {
        csv.field("");
      }
      const auto& gaps = gap_values[name];
      if (gaps.defined) {
        csv.field(gaps.specificity.symmetric)
            .field(gaps.volatility.symmetric);
      } else {
        csv.field("").field("");
      }
      csv.end_row();
    }
  }

  write_meta(cfg, "engagement", lineage);
  std::cout << "engagement: " << p.profiles.size()
            << " communities measured\n";
  return true;
}

bool run_predict_stage(const RunConfig& cfg, bool force) {
  cfg.validate();
  std::filesystem::create_directories(cfg.output_root);
  std::uint64_t lineage = compute_lineage(cfg, "predict");
  if (skip_if_complete(cfg, "predict", lineage, force)) return false;

  StagePaths paths{cfg.output_root};
  CsvFile table = read_csv_file(paths.analysis_table());

  std::vector<FeatureRow> rows;
  std::map<std::string, std::map<std::string, double>> by_community;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const std::string& name = table.at(i, "community");
    auto& vals = by_community[name];
    for (const char* col : {"distinctiveness", "dynamicity", "log_users",
                            "log_activity", "mean_retention", "mean_tenure",
                            "acculturation"}) {
      const std::string& cell = table.at(i, col);
      if (!cell.empty()) vals[col] = to_double(cell, paths.analysis_table());
    }
    if (vals.count("distinctiveness") && vals.count("dynamicity") &&
        vals.count("log_users") && vals.count("log_activity") &&
        vals.count("mean_retention")) {
      FeatureRow row;
      row.community = name;
      row.distinctiveness = vals["distinctiveness"];
      row.dynamicity = vals["dynamicity"];
      row.log_users = vals["log_users"];
      row.log_activity = vals["log_activity"];
      row.target = vals["mean_retention"];
      rows.push_back(std::move(row));
    }
  }

  ForestOptions fopts;
  fopts.n_trees = static_cast<int>(cfg.forest_trees);
  std::vector<CVResult> results;
  if (rows.size() >= 3) {
    for (FeatureSet fs : {FeatureSet::identity, FeatureSet::activity,
                          FeatureSet::combined}) {
      results.push_back(loco_cv(
          rows, fs, fopts,
          derive_seed(cfg.seed, {hash_bytes("loco"),
                                 static_cast<std::uint64_t>(fs)})));
    }
  } else {
    std::cerr << "warning: only " << rows.size()
              << " communities with complete feature rows; prediction "
                 "experiment skipped (needs 3)\n";
  }

  {
    CsvWriter csv(paths.cv_summary(), cfg.metadata("predict"),
                  {"model", "folds", "mse", "r2"});
    for (const auto& cv : results) {
      csv.field(cv.model_id)
          .field(static_cast<std::int64_t>(cv.communities.size()))
          .field(cv.mse)
          .field(cv.r2);
      csv.end_row();
    }
  }
  {
    CsvWriter csv(paths.cv_errors(), cfg.metadata("predict"),
                  {"model", "community", "target", "prediction",
                   "squared_error"});
    for (const auto& cv : results) {
      for (std::size_t i = 0; i < cv.communities.size(); ++i) {
        const FeatureRow& row = rows[i];
        csv.field(cv.model_id)
            .field(cv.communities[i])
            .field(row.target)
            .field(cv.predictions[i])
            .field(cv.squared_errors[i]);
        csv.end_row();
      }
    }
  }
  {
    CsvWriter csv(paths.comparisons(), cfg.metadata("predict"),
                  {"model_a", "model_b", "pairs", "mse_a", "mse_b",
                   "statistic", "p", "p_adjusted", "exact"});
    struct Comparison {
      const CVResult* a;
      const CVResult* b;
      std::optional<TestResult> test;
    };
    std::vector<Comparison> comps;
    if (results.size() == 3) {
      for (auto [i, j] : {std::pair<int, int>{0, 1}, {0, 2}, {1, 2}}) {
        comps.push_back({&results[i], &results[j],
                         wilcoxon_signed_rank(results[i].squared_errors,
                                              results[j].squared_errors)});
      }
    }
    std::vector<double> ps;
    for (const auto& c : comps) {
      if (c.test) ps.push_back(c.test->p_value);
    }
    std::vector<double> adjusted = bonferroni(ps);
    std::size_t next = 0;
    for (const auto& c : comps) {
      csv.field(c.a->model_id)
          .field(c.b->model_id)
          .field(static_cast<std::int64_t>(c.a->squared_errors.size()))
          .field(c.a->mse)
          .field(c.b->mse);
      if (c.test) {
        csv.field(c.test->statistic)
            .field(c.test->p_value)
            .field(adjusted[next++])
            .field(std::int64_t{c.test->exact ? 1 : 0});
      } else {
        csv.field("").field("").field("").field("");
      }
      csv.end_row();
    }
  }

  {
    // Month-level points for the community_month granularity.
    std::map<std::string, std::vector<double>> month_retention;
    CsvFile ret = read_csv_file(paths.retention());
    for (std::size_t i = 0; i < ret.rows.size(); ++i) {
      if (ret.at(i, "included") != "1") continue;
      month_retention[ret.at(i, "community")].push_back(
          to_double(ret.at(i, "retention"), paths.retention()));
    }
    std::map<std::string, std::vector<double>> month_accult;
    CsvFile acc = read_csv_file(paths.acculturation());
    for (std::size_t i = 0; i < acc.rows.size(); ++i) {
      if (acc.at(i, "status") != "ok") continue;
      month_accult[acc.at(i, "community")].push_back(
          to_double(acc.at(i, "gap"), paths.acculturation()));
    }

    bool monthly = cfg.granularity == "community_month";
    CsvWriter csv(paths.correlations(), cfg.metadata("predict"),
                  {"analysis", "granularity", "points", "clusters", "rho",
                   "p", "exact", "ci_lo", "ci_hi"});
    struct Analysis {
      const char* name;
      const char* x_col;
      const char* y_col;  // community_mean column
      const std::map<std::string, std::vector<double>>* monthly_y;
    };
    std::vector<Analysis> analyses = {
        {"distinctiveness_vs_retention", "distinctiveness", "mean_retention",
         &month_retention},
        {"dynamicity_vs_retention", "dynamicity", "mean_retention",
         &month_retention},
        {"distinctiveness_vs_tenure", "distinctiveness", "mean_tenure",
         nullptr},
        {"dynamicity_vs_tenure", "dynamicity", "mean_tenure", nullptr},
        {"distinctiveness_vs_acculturation", "distinctiveness",
         "acculturation", &month_accult},
        {"dynamicity_vs_acculturation", "dynamicity", "acculturation",
         &month_accult},
    };
    for (const auto& a : analyses) {
      std::vector<std::vector<std::pair<double, double>>> clusters;
      for (const auto& [name, vals] : by_community) {
        auto x = vals.find(a.x_col);
        if (x == vals.end()) continue;
        std::vector<std::pair<double, double>> cluster;
        if (monthly && a.monthly_y != nullptr) {
          auto ys = a.monthly_y->find(name);
          if (ys != a.monthly_y->end()) {
            for (double y : ys->second) cluster.push_back({x->second, y});
          }
        } else {
          auto y = vals.find(a.y_col);
          if (y != vals.end()) cluster.push_back({x->second, y->second});
        }
        if (!cluster.empty()) clusters.push_back(std::move(cluster));
      }
      std::string gran = monthly && a.monthly_y != nullptr
                             ? "community_month"
                             : "community_mean";
      CorrSummary s = rank_corr_summary(
          clusters, static_cast<int>(cfg.bootstrap_samples),
          derive_seed(cfg.seed, {hash_bytes("corr-ci"), hash_bytes(a.name)}));
      csv.field(a.name).field(gran).field(s.points).field(s.clusters);
      if (s.defined) {
        csv.field(s.rho)
            .field(s.p)
            .field(std::int64_t{s.exact ? 1 : 0})
            .field(s.ci_lo)
            .field(s.ci_hi);
      } else {
        csv.field("").field("").field("").field("").field("");
      }
      csv.end_row();
    }
  }

  write_meta(cfg, "predict", lineage);
  std::cout << "predict: " << rows.size()
            << " communities in the modeling table\n";
  return true;
}

bool run_report_stage(const RunConfig& cfg, bool force) {
  cfg.validate();
  std::filesystem::create_directories(cfg.output_root);
  std::uint64_t lineage = compute_lineage(cfg, "report");
  if (skip_if_complete(cfg, "report", lineage, force)) return false;

  StagePaths paths{cfg.output_root};
  CsvFile profiles = read_csv_file(paths.profiles());
  CsvFile table = read_csv_file(paths.analysis_table());
  CsvFile cv = read_csv_file(paths.cv_summary());
  CsvFile corr = read_csv_file(paths.correlations());
  CsvFile gaps = read_csv_file(paths.gaps());

  struct CommunityRow {
    double distinctiveness = 0.0;
    double dynamicity = 0.0;
    std::string distinct_label;
    std::string dynamic_label;
    std::optional<double> retention;
    std::optional<double> acculturation;
  };
  std::map<std::string, CommunityRow> comms;
  for (std::size_t i = 0; i < profiles.rows.size(); ++i) {
    CommunityRow row;
    row.distinctiveness =
        to_double(profiles.at(i, "distinctiveness"), paths.profiles());
    row.dynamicity = to_double(profiles.at(i, "dynamicity"), paths.profiles());
    row.distinct_label = profiles.at(i, "distinct_label");
    row.dynamic_label = profiles.at(i, "dynamic_label");
    comms[profiles.at(i, "community")] = std::move(row);
  }
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    auto it = comms.find(table.at(i, "community"));
    if (it == comms.end()) continue;
    const std::string& ret = table.at(i, "mean_retention");
    if (!ret.empty()) it->second.retention = to_double(ret, "analysis table");
    const std::string& acc = table.at(i, "acculturation");
    if (!acc.empty()) {
      it->second.acculturation = to_double(acc, "analysis table");
    }
  }
  if (comms.empty()) {
    std::cerr << "warning: no eligible communities; report tables are "
                 "empty\n";
  }

  {
    CsvWriter csv(paths.scatter(), cfg.metadata("report"),
                  {"community", "distinctiveness", "dynamicity",
                   "mean_retention", "distinct_label", "dynamic_label"});
    for (const auto& [name, row] : comms) {
      csv.field(name).field(row.distinctiveness).field(row.dynamicity);
      if (row.retention) {
        csv.field(*row.retention);
      } else {
        csv.field("");
      }
      csv.field(row.distinct_label).field(row.dynamic_label);
      csv.end_row();
    }
  }

  {
    CsvWriter csv(paths.retention_curves(), cfg.metadata("report"),
                  {"measure", "bin", "communities", "measure_mean",
                   "retention_mean", "ci_lo", "ci_hi"});
    for (const char* measure : {"distinctiveness", "dynamicity"}) {
      std::vector<std::pair<double, double>> points;  // (measure, retention)
      for (const auto& [name, row] : comms) {
        if (!row.retention) continue;
        double x = std::string(measure) == "distinctiveness"
                       ? row.distinctiveness
                       : row.dynamicity;
        points.push_back({x, *row.retention});
      }
      std::sort(points.begin(), points.end());
      std::size_t n = points.size();
      for (std::size_t bin = 0; bin < 10; ++bin) {
        std::size_t begin = bin * n / 10;
        std::size_t end = (bin + 1) * n / 10;
        if (begin >= end) continue;
        std::vector<std::vector<double>> clusters;
        double measure_sum = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
          measure_sum += points[i].first;
          clusters.push_back({points[i].second});
        }
        auto mean_stat = [](const std::vector<double>& v) {
          double s = 0.0;
          for (double x : v) s += x;
          return s / static_cast<double>(v.size());
        };
        BootstrapCi ci = cluster_bootstrap_ci(
            clusters, mean_stat, static_cast<int>(cfg.bootstrap_samples),
            derive_seed(cfg.seed, {hash_bytes("curve"), hash_bytes(measure),
                                   static_cast<std::uint64_t>(bin)}));
        csv.field(measure)
            .field(static_cast<std::int64_t>(bin))
            .field(static_cast<std::int64_t>(end - begin))
            .field(measure_sum / static_cast<double>(end - begin))
            .field(ci.point)
            .field(ci.lo)
            .field(ci.hi);
        csv.end_row();
      }
    }
  }

  auto group_of = [](const CommunityRow& row) -> std::string {
    if (row.distinct_label.empty() || row.dynamic_label.empty()) {
      return "middle";
    }
    return row.distinct_label + "_" + row.dynamic_label;
  };
  {
    CsvWriter csv(paths.acculturation_bins(), cfg.metadata("report"),
                  {"group", "communities", "gap_mean", "ci_lo", "ci_hi"});
    std::vector<std::string> groups = {
        "distinctive_dynamic", "distinctive_consistent", "generic_dynamic",
        "generic_consistent", "middle"};
    std::map<std::string, std::vector<double>> grouped;
    for (const auto& [name, row] : comms) {
      if (row.acculturation) grouped[group_of(row)].push_back(
          *row.acculturation);
    }
    for (const auto& g : groups) {
      const auto& vals = grouped[g];
      csv.field(g).field(static_cast<std::int64_t>(vals.size()));
      if (vals.empty()) {
        csv.field("").field("").field("");
      } else {
        std::vector<std::vector<double>> clusters;
        for (double v : vals) clusters.push_back({v});
        auto mean_stat = [](const std::vector<double>& v) {
          double s = 0.0;
          for (double x : v) s += x;
          return s / static_cast<double>(v.size());
        };
        BootstrapCi ci = cluster_bootstrap_ci(
            clusters, mean_stat, static_cast<int>(cfg.bootstrap_samples),
            derive_seed(cfg.seed, {hash_bytes("accult-bin"), hash_bytes(g)}));
        csv.field(ci.point).field(ci.lo).field(ci.hi);
      }
      csv.end_row();
    }
  }

  {
    std::ofstream out(paths.summary(), std::ios::binary);
    if (!out) throw IoError("cannot write: " + paths.summary());
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(cfg.config_hash()));
    out << "community landscape summary (" << kToolName << " "
        << kToolVersion << ", config " << hash << ")\n\n";
    out << "communities analyzed: " << comms.size() << "\n";
    if (comms.empty()) {
      out << "no community cleared the eligibility thresholds; all report "
             "tables are empty\n";
    }
    std::map<std::string, std::int64_t> type_counts;
    for (const auto& [name, row] : comms) ++type_counts[group_of(row)];
    for (const auto& [g, n] : type_counts) {
      out << "  type " << g << ": " << n << "\n";
    }
    out << "\ncorrelations (" << cfg.granularity << "):\n";
    for (std::size_t i = 0; i < corr.rows.size(); ++i) {
      out << "  " << corr.at(i, "analysis") << ": ";
      if (corr.at(i, "rho").empty()) {
        out << "undefined (" << corr.at(i, "points") << " points)\n";
      } else {
        out << "rho=" << corr.at(i, "rho") << " p=" << corr.at(i, "p")
            << " ci=[" << corr.at(i, "ci_lo") << ", " << corr.at(i, "ci_hi")
            << "] n=" << corr.at(i, "points") << "\n";
      }
    }
    out << "\nretention prediction (leave-one-community-out):\n";
    for (std::size_t i = 0; i < cv.rows.size(); ++i) {
      out << "  " << cv.at(i, "model") << ": mse=" << cv.at(i, "mse")
          << " r2=" << cv.at(i, "r2") << " folds=" << cv.at(i, "folds")
          << "\n";
    }
    std::int64_t accult_pos = 0, accult_n = 0;
    for (const auto& [name, row] : comms) {
      if (row.acculturation) {
        ++accult_n;
        if (*row.acculturation > 0) ++accult_pos;
      }
    }
    out << "\nacculturation gap positive in " << accult_pos << " of "
        << accult_n << " communities\n";
    std::int64_t gap_pos = 0, gap_n = 0;
    for (std::size_t i = 0; i < gaps.rows.size(); ++i) {
      if (gaps.at(i, "status") != "ok") continue;
      ++gap_n;
      if (to_double(gaps.at(i, "spec_gap"), paths.gaps()) > 0) ++gap_pos;
    }
    out << "specificity gap positive in " << gap_pos << " of " << gap_n
        << " communities\n";
  }

  write_meta(cfg, "report", lineage);
  std::cout << "report: tables for " << comms.size() << " communities\n";
  return true;
}

}  // namespace commscape
