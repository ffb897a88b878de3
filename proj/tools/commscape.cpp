#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commscape/config.hpp"
#include "commscape/errors.hpp"
#include "commscape/stages.hpp"
#include "commscape/synth.hpp"

namespace {

using commscape::RunConfig;

void add_run_options(CLI::App* cmd, RunConfig* cfg, bool* force,
                     std::string* config_path) {
  cmd->add_option("--config", *config_path,
                  "key=value file; keys as embedded in artifact headers");
  cmd->add_option("--output-root", cfg->output_root, "artifact directory")
      ->envname("COMMSCAPE_OUTPUT_ROOT")
      ->required();
  cmd->add_flag("--force", *force, "recompute even when artifacts are fresh");
  cmd->add_option("--seed", cfg->seed, "master seed for all sampling");

  cmd->add_option("--stoplist", cfg->stoplist,
                  "stopword list for the language screen");
  cmd->add_option("--language-overrides", cfg->language_overrides,
                  "final keep/drop decisions per community");
  cmd->add_option("--noun-mode", cfg->noun_mode, "all | lexicon | sidecar");
  cmd->add_option("--noun-resource", cfg->noun_resource,
                  "noun lexicon or tag sidecar file");
  cmd->add_option("--vocab-min", cfg->vocab_min,
                  "vocabulary floor per community-month");
  cmd->add_option("--months-min", cfg->months_min,
                  "eligible-month floor per community");
  cmd->add_option("--percentile", cfg->percentile,
                  "scoring-vocabulary frequency percentile");
  cmd->add_option("--min-scored", cfg->min_scored,
                  "scored-utterance floor per included month");
  cmd->add_option("--active-min", cfg->active_min,
                  "comments per month to count as active");
  cmd->add_option("--foreign-threshold", cfg->foreign_threshold,
                  "stopword-fraction cutoff of the language screen");
  cmd->add_option("--foreign-min-tokens", cfg->foreign_min_tokens,
                  "sample floor for the language screen");
  cmd->add_option("--background", cfg->background,
                  "specificity background: month_matched | pooled");
  cmd->add_option("--weighting", cfg->weighting,
                  "token weighting: per_occurrence | unique");
  cmd->add_option("--granularity", cfg->granularity,
                  "correlation points: community_mean | community_month");
  cmd->add_option("--tenure-slice", cfg->tenure_slice,
                  "YYYY-MM slice month for tenure (default: median month)");
  cmd->add_option("--slm-users", cfg->slm_users,
                  "users sampled per snapshot model");
  cmd->add_option("--slm-spans-per-user", cfg->slm_spans_per_user,
                  "spans sampled per user");
  cmd->add_option("--slm-span-len", cfg->slm_span_len,
                  "tokens per sampled span");
  cmd->add_option("--slm-models", cfg->slm_models,
                  "bootstrap replicates per community-month");
  cmd->add_option("--slm-vocab-cap", cfg->slm_vocab_cap,
                  "model vocabulary cap");
  cmd->add_option("--slm-gt-ceiling", cfg->slm_gt_ceiling,
                  "highest adjusted bigram count");
  cmd->add_option("--accult-eval-users", cfg->accult_eval_users,
                  "held-out active users scored per replicate");
  cmd->add_option("--accult-comments-per-user", cfg->accult_comments_per_user,
                  "comments sampled per held-out user");
  cmd->add_option("--accult-outsider-spans", cfg->accult_outsider_spans,
                  "outsider spans scored per replicate");
  cmd->add_option("--bootstrap-samples", cfg->bootstrap_samples,
                  "bootstrap replicates for confidence intervals");
  cmd->add_option("--forest-trees", cfg->forest_trees,
                  "trees per random forest");
}

int dispatch(const std::string& stage, const RunConfig& cfg, bool force) {
  if (stage == "ingest") return commscape::run_ingest_stage(cfg, force), 0;
  if (stage == "measure") return commscape::run_measure_stage(cfg, force), 0;
  if (stage == "slm") return commscape::run_slm_stage(cfg, force), 0;
  if (stage == "engagement") {
    return commscape::run_engagement_stage(cfg, force), 0;
  }
  if (stage == "predict") return commscape::run_predict_stage(cfg, force), 0;
  if (stage == "report") return commscape::run_report_stage(cfg, force), 0;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"community language landscape analytics"};
  app.require_subcommand(1);

  RunConfig cfg;
  bool force = false;
  std::string stage_to_run;
  std::string config_path;

  struct StageSpec {
    const char* name;
    const char* help;
    bool takes_input;
  };
  std::vector<StageSpec> stages = {
      {"ingest", "parse a JSON-lines dump into the bucketed corpus", true},
      {"measure", "score words and build community profiles", false},
      {"slm", "train bootstrap snapshot language models", false},
      {"engagement", "retention, tenure, and cohort gap measures", false},
      {"predict", "correlations and the retention prediction harness",
       false},
      {"report", "plot-ready tables and the text summary", false},
  };
  for (const auto& s : stages) {
    CLI::App* cmd = app.add_subcommand(s.name, s.help);
    add_run_options(cmd, &cfg, &force, &config_path);
    if (s.takes_input) {
      cmd->add_option("--input", cfg.input, "JSON-lines comment dump")
          ->required();
    }
    cmd->callback([&stage_to_run, name = std::string(s.name)]() {
      stage_to_run = name;
    });
  }

  commscape::SynthSpec synth_spec;
  int synth_communities = 10;
  std::string synth_out;
  std::string synth_first_month;
  std::vector<double> niche_weights, fad_weights, return_probs;
  bool no_hub = false;
  CLI::App* synth =
      app.add_subcommand("synth", "generate a planted-structure corpus");
  synth->add_option("--out", synth_out, "output file (default: stdout)");
  synth->add_option("--communities", synth_communities,
                    "number of communities");
  synth->add_option("--months", synth_spec.n_months, "months of activity");
  synth->add_option("--users", synth_spec.users_per_community,
                    "users per community");
  synth->add_option("--comments-per-user", synth_spec.comments_per_user,
                    "comments per user per month");
  synth->add_option("--comment-len", synth_spec.comment_len,
                    "tokens per comment");
  synth->add_option("--background-vocab", synth_spec.background_vocab,
                    "shared vocabulary size");
  synth->add_option("--niche-vocab", synth_spec.niche_vocab,
                    "per-community vocabulary size");
  synth->add_option("--fad-vocab", synth_spec.fad_vocab,
                    "per-month vocabulary size");
  synth->add_option("--outsiders", synth_spec.outsiders_per_month,
                    "drive-by commenters per community per month");
  synth->add_option("--first-month", synth_first_month,
                    "YYYY-MM of the first generated month");
  synth->add_flag("--no-hub", no_hub,
                  "skip the shared hub community for outsider activity");
  synth->add_option("--seed", synth_spec.seed, "generator seed");
  synth->add_option("--niche-weights", niche_weights,
                    "per-community niche token rates")
      ->delimiter(',');
  synth->add_option("--fad-weights", fad_weights,
                    "per-community fad token rates")
      ->delimiter(',');
  synth->add_option("--return-probs", return_probs,
                    "per-community monthly user return probabilities")
      ->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) {
      commscape::SynthSpec spec =
          commscape::default_synth_spec(synth_communities, synth_spec.seed);
      spec.n_months = synth_spec.n_months;
      spec.users_per_community = synth_spec.users_per_community;
      spec.comments_per_user = synth_spec.comments_per_user;
      spec.comment_len = synth_spec.comment_len;
      spec.background_vocab = synth_spec.background_vocab;
      spec.niche_vocab = synth_spec.niche_vocab;
      spec.fad_vocab = synth_spec.fad_vocab;
      spec.outsiders_per_month = synth_spec.outsiders_per_month;
      spec.hub = !no_hub;
      if (!synth_first_month.empty()) {
        spec.first_month = commscape::month_index_from_label(synth_first_month);
      }
      auto apply = [&spec](const std::vector<double>& values,
                           const char* what, auto member) {
        if (values.empty()) return;
        if (values.size() != spec.communities.size()) {
          throw commscape::ConfigError(
              std::string(what) + " needs one value per community");
        }
        for (std::size_t i = 0; i < values.size(); ++i) {
          spec.communities[i].*member = values[i];
        }
      };
      apply(niche_weights, "--niche-weights",
            &commscape::SynthCommunity::niche_weight);
      apply(fad_weights, "--fad-weights",
            &commscape::SynthCommunity::fad_weight);
      apply(return_probs, "--return-probs",
            &commscape::SynthCommunity::return_prob);
      std::string corpus = commscape::generate_corpus(spec);
      if (synth_out.empty()) {
        std::cout << corpus;
      } else {
        std::ofstream out(synth_out, std::ios::binary);
        if (!out) throw commscape::IoError("cannot write: " + synth_out);
        out << corpus;
        if (!out) throw commscape::IoError("write failed: " + synth_out);
        std::cout << "synth: wrote " << synth_out << "\n";
      }
      return 0;
    }
    if (!config_path.empty()) {
      CLI::App* cmd = app.get_subcommand(stage_to_run);
      for (const auto& [key, value] : commscape::load_config_file(config_path)) {
        std::string flag = "--" + key;
        for (auto& ch : flag) {
          if (ch == '_') ch = '-';
        }
        const CLI::Option* opt = cmd->get_option_no_throw(flag);
        if (opt != nullptr && opt->count() > 0) continue;  // flag wins
        commscape::apply_config_value(&cfg, key, value);
      }
    }
    return dispatch(stage_to_run, cfg, force);
  } catch (const commscape::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
