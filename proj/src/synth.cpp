#include "commscape/synth.hpp"

#include <set>
#include <sstream>

#include "commscape/errors.hpp"
#include "commscape/rng.hpp"
#include "json.hpp"

namespace commscape {

namespace {

constexpr const char* kHubName = "hub";

double max3(double a, double b, double c) {
  return std::max(a, std::max(b, c));
}

}  // namespace

void SynthSpec::validate() const {
  if (communities.empty()) throw ConfigError("no communities in generator spec");
  std::set<std::string> names;
  for (const auto& c : communities) {
    if (c.name.empty()) throw ConfigError("community with empty name");
    if (c.name == kHubName) {
      throw ConfigError("community name '" + std::string(kHubName) +
                        "' is reserved");
    }
    if (!names.insert(c.name).second) {
      throw ConfigError("duplicate community name: " + c.name);
    }
    for (double w : {c.niche_weight, c.fad_weight, c.return_prob,
                     c.active_niche_affinity, c.outsider_niche_affinity}) {
      if (!(w >= 0.0)) throw ConfigError("negative weight in " + c.name);
    }
    if (c.niche_weight > 1.0 || c.fad_weight > 1.0 || c.return_prob > 1.0) {
      throw ConfigError("weight above 1 in " + c.name);
    }
    double peak = c.niche_weight * max3(1.0, c.active_niche_affinity,
                                        c.outsider_niche_affinity) +
                  c.fad_weight;
    if (peak > 0.95) {
      throw ConfigError("niche plus fad rate leaves no background mass in " +
                        c.name);
    }
  }
  if (n_months < 1 || users_per_community < 1 || comments_per_user < 1 ||
      comment_len < 1 || background_vocab < 1 || niche_vocab < 1 ||
      fad_vocab < 1 || outsiders_per_month < 0) {
    throw ConfigError("generator counts must be positive");
  }
}

SynthSpec default_synth_spec(int n_communities, std::uint64_t seed) {
  SynthSpec spec;
  spec.seed = seed;
  spec.communities.reserve(static_cast<std::size_t>(n_communities));
  for (int i = 0; i < n_communities; ++i) {
    SynthCommunity c;
    char name[32];
    std::snprintf(name, sizeof(name), "comm%02d", i);
    c.name = name;
    double frac = n_communities > 1
                      ? static_cast<double>(i) / (n_communities - 1)
                      : 0.0;
    // Decorrelated spreads so the two knobs are separately recoverable.
    double fad_frac = n_communities > 1
                          ? static_cast<double>((i * 7 + 3) % n_communities) /
                                (n_communities - 1)
                          : 0.0;
    c.niche_weight = 0.05 + 0.40 * frac;
    c.fad_weight = 0.05 + 0.30 * fad_frac;
    c.return_prob = 0.6;
    spec.communities.push_back(std::move(c));
  }
  return spec;
}

namespace {

struct TokenSampler {
  const SynthSpec* spec;
  int community_index;
  int month_offset;
  double niche_rate;
  double fad_rate;

  std::string sample(Rng* rng) const {
    char buf[32];
    double u = rng->unit();
    if (u < niche_rate) {
      std::snprintf(buf, sizeof(buf), "nch%dw%d", community_index,
                    static_cast<int>(rng->below(
                        static_cast<std::uint64_t>(spec->niche_vocab))));
    } else if (u < niche_rate + fad_rate) {
      std::snprintf(buf, sizeof(buf), "fad%dw%d", month_offset,
                    static_cast<int>(rng->below(
                        static_cast<std::uint64_t>(spec->fad_vocab))));
    } else {
      std::snprintf(buf, sizeof(buf), "bg%d",
                    static_cast<int>(rng->below(
                        static_cast<std::uint64_t>(spec->background_vocab))));
    }
    return buf;
  }
};

class CorpusEmitter {
 public:
  explicit CorpusEmitter(std::ostringstream* out) : out_(out) {}

  void emit(const std::string& author, const std::string& community,
            std::int64_t timestamp, const std::string& body) {
    char id[32];
    std::snprintf(id, sizeof(id), "c%08lld",
                  static_cast<long long>(serial_++));
    std::string link = std::string("t3_") + id;
    nlohmann::json j;
    j["id"] = id;
    j["author"] = author;
    j["subreddit"] = community;
    j["created_utc"] = timestamp;
    j["parent_id"] = link;  // top-level: parent is the thread root
    j["link_id"] = link;
    j["body"] = body;
    *out_ << j.dump() << "\n";
  }

 private:
  std::ostringstream* out_;
  std::int64_t serial_ = 0;
};

std::string make_body(const TokenSampler& sampler, int len, Rng* rng) {
  std::string body;
  for (int i = 0; i < len; ++i) {
    if (i) body += ' ';
    body += sampler.sample(rng);
  }
  return body;
}

}  // namespace

std::string generate_corpus(const SynthSpec& spec) {
  spec.validate();
  MonthIndex first = spec.first_month != 0 ? spec.first_month
                                           : month_index_from_label("2013-01");
  std::ostringstream out;
  CorpusEmitter emitter(&out);

  for (std::size_t ci = 0; ci < spec.communities.size(); ++ci) {
    const SynthCommunity& comm = spec.communities[ci];
    Rng rng(derive_seed(spec.seed, {hash_bytes("synth-community"), ci}));

    TokenSampler active_sampler{&spec, static_cast<int>(ci), 0,
                                comm.niche_weight * comm.active_niche_affinity,
                                comm.fad_weight};
    TokenSampler outsider_sampler{
        &spec, static_cast<int>(ci), 0,
        comm.niche_weight * comm.outsider_niche_affinity, comm.fad_weight};
    TokenSampler hub_sampler{&spec, 0, 0, 0.0, 0.0};

    std::vector<std::int64_t> alive(
        static_cast<std::size_t>(spec.users_per_community));
    for (std::size_t i = 0; i < alive.size(); ++i) {
      alive[i] = static_cast<std::int64_t>(i);
    }
    std::int64_t next_user = static_cast<std::int64_t>(alive.size());

    for (int t = 0; t < spec.n_months; ++t) {
      active_sampler.month_offset = t;
      outsider_sampler.month_offset = t;
      std::int64_t month_begin = month_start_epoch(first + t);
      std::int64_t month_len = month_start_epoch(first + t + 1) - month_begin;

      for (std::int64_t user : alive) {
        char author[48];
        std::snprintf(author, sizeof(author), "c%zuu%lld", ci,
                      static_cast<long long>(user));
        for (int k = 0; k < spec.comments_per_user; ++k) {
          std::int64_t ts =
              month_begin + static_cast<std::int64_t>(rng.below(
                                static_cast<std::uint64_t>(month_len)));
          emitter.emit(author, comm.name, ts,
                       make_body(active_sampler, spec.comment_len, &rng));
        }
      }

      for (int k = 0; k < spec.outsiders_per_month; ++k) {
        char author[48];
        std::snprintf(author, sizeof(author), "o%zum%dk%d", ci, t, k);
        std::int64_t ts =
            month_begin + static_cast<std::int64_t>(rng.below(
                              static_cast<std::uint64_t>(month_len)));
        emitter.emit(author, comm.name, ts,
                     make_body(outsider_sampler, spec.comment_len, &rng));
        // Filler activity elsewhere keeps the author above the site-wide
        // activity bar for the outsider cohort.
        for (int f = 0; f < 4; ++f) {
          std::int64_t fts =
              month_begin + static_cast<std::int64_t>(rng.below(
                                static_cast<std::uint64_t>(month_len)));
          emitter.emit(author, kHubName, fts,
                       make_body(hub_sampler, spec.comment_len, &rng));
        }
      }

      // Survival draw; departed users are replaced to keep size level.
      std::vector<std::int64_t> next_alive;
      next_alive.reserve(alive.size());
      for (std::int64_t user : alive) {
        if (rng.unit() < comm.return_prob) next_alive.push_back(user);
      }
      while (next_alive.size() < alive.size()) {
        next_alive.push_back(next_user++);
      }
      alive = std::move(next_alive);
    }
  }

  if (spec.hub) {
    Rng rng(derive_seed(spec.seed, {hash_bytes("synth-hub")}));
    TokenSampler hub_sampler{&spec, 0, 0, 0.0, 0.0};
    for (int t = 0; t < spec.n_months; ++t) {
      std::int64_t month_begin = month_start_epoch(first + t);
      std::int64_t month_len = month_start_epoch(first + t + 1) - month_begin;
      for (int u = 0; u < spec.users_per_community; ++u) {
        char author[48];
        std::snprintf(author, sizeof(author), "hubu%d", u);
        for (int k = 0; k < spec.comments_per_user; ++k) {
          std::int64_t ts =
              month_begin + static_cast<std::int64_t>(rng.below(
                                static_cast<std::uint64_t>(month_len)));
          emitter.emit(author, kHubName, ts,
                       make_body(hub_sampler, spec.comment_len, &rng));
        }
      }
    }
  }
  return out.str();
}

}  // namespace commscape
