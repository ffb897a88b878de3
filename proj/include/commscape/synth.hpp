#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "commscape/month.hpp"

namespace commscape {

struct SynthCommunity {
  std::string name;
  double niche_weight = 0.0;  // rate of community-specific words
  double fad_weight = 0.0;    // rate of month-specific words
  double return_prob = 0.5;   // chance an active user stays next month
  double active_niche_affinity = 1.0;    // multiplies niche rate
  double outsider_niche_affinity = 1.0;  // for outsider comments
};

// Mixture-of-unigrams landscape: a shared background vocabulary, one niche
// vocabulary per community, one fad vocabulary per month (shared across
// communities so the two knobs stay orthogonal under the month-matched
// background). Departed users are replaced by fresh ones so community size
// stays level while monthly retention tracks return_prob.
struct SynthSpec {
  std::vector<SynthCommunity> communities;
  int n_months = 6;
  MonthIndex first_month = 0;  // 0 = generator picks a fixed default
  int users_per_community = 50;
  int comments_per_user = 8;  // per active month
  int comment_len = 30;       // tokens
  int background_vocab = 300;
  int niche_vocab = 25;  // per community
  int fad_vocab = 20;    // per month
  int outsiders_per_month = 0;  // per community
  bool hub = true;  // extra plain community hosting outsider filler activity
  std::uint64_t seed = 1;

  void validate() const;  // throws ConfigError on a bad knob
};

// Presets used by property and acceptance tests.
SynthSpec default_synth_spec(int n_communities, std::uint64_t seed);

// JSON-lines text in the exact ingest schema, one comment per line.
std::string generate_corpus(const SynthSpec& spec);

}  // namespace commscape
