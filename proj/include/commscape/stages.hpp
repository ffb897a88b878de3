#pragma once

#include <string>
#include <vector>

#include "commscape/config.hpp"
#include "commscape/slm.hpp"

namespace commscape {

// Artifact paths under one output root. Stage completion is recorded in a
// <stage>.meta file carrying the config hash; a stage re-runs only when
// forced or when the hash no longer matches.
struct StagePaths {
  std::string root;

  std::string corpus_bin() const { return root + "/corpus.bin"; }
  std::string drop_report() const { return root + "/drop_report.csv"; }
  std::string foreign_flags() const { return root + "/foreign_flags.csv"; }
  std::string profiles() const { return root + "/profiles.csv"; }
  std::string month_measures() const { return root + "/month_measures.csv"; }
  std::string word_scores() const { return root + "/word_scores.csv"; }
  std::string slm_dir() const { return root + "/slm"; }
  std::string slm_manifest() const { return root + "/slm_manifest.csv"; }
  std::string ensemble(const std::string& community, MonthIndex month) const;
  std::string retention() const { return root + "/retention.csv"; }
  std::string tenure() const { return root + "/tenure.csv"; }
  std::string acculturation() const { return root + "/acculturation.csv"; }
  std::string gaps() const { return root + "/gaps.csv"; }
  std::string analysis_table() const { return root + "/analysis_table.csv"; }
  std::string cv_summary() const { return root + "/cv_summary.csv"; }
  std::string cv_errors() const { return root + "/cv_errors.csv"; }
  std::string comparisons() const { return root + "/comparisons.csv"; }
  std::string correlations() const { return root + "/correlations.csv"; }
  std::string scatter() const { return root + "/scatter.csv"; }
  std::string retention_curves() const {
    return root + "/retention_curves.csv";
  }
  std::string acculturation_bins() const {
    return root + "/acculturation_bins.csv";
  }
  std::string summary() const { return root + "/summary.txt"; }
  std::string meta(const std::string& stage) const {
    return root + "/" + stage + ".meta";
  }
};

bool stage_complete(const RunConfig& cfg, const std::string& stage);
// Throws DataError naming the stage that must run first.
void require_stage(const RunConfig& cfg, const std::string& stage);

// Bootstrap-ensemble artifact: concatenated model blobs.
void save_ensemble(const std::string& path,
                   const std::vector<SnapshotLM>& models);
std::vector<SnapshotLM> load_ensemble(const std::string& path);

// Each returns false when the stage was already complete and was skipped.
bool run_ingest_stage(const RunConfig& cfg, bool force);
bool run_measure_stage(const RunConfig& cfg, bool force);
bool run_slm_stage(const RunConfig& cfg, bool force);
bool run_engagement_stage(const RunConfig& cfg, bool force);
bool run_predict_stage(const RunConfig& cfg, bool force);
bool run_report_stage(const RunConfig& cfg, bool force);

}  // namespace commscape
