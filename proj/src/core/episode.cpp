#include "episode.hpp"

namespace gasopt {

EpisodeOutcome<double> simulate_episode(const PolicyParams& policy, const StorageSpec& spec,
                                        const ScenarioSet& s, std::int64_t scenario,
                                        EpisodeLedger* ledger) {
  require(policy.days() == spec.days && spec.days == s.days(), errc::invalid_argument,
          "policy, storage and scenarios must share the horizon");
  NetworkProvider<double> provider{&policy, policy.values, {}};
  return run_episode<double>(policy.model, spec, s, scenario, policy.norm, provider, ledger);
}

}  // namespace gasopt
