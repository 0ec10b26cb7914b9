#include "kapcpd/serialize.hpp"

namespace kapcpd {

nlohmann::json to_json(const TestOutcome& outcome) {
  nlohmann::json j;
  j["method"] = to_string(outcome.method);
  j["p_value"] = outcome.p_value;
  j["tau_hat"] = outcome.tau_hat ? nlohmann::json(*outcome.tau_hat) : nlohmann::json(nullptr);
  j["s_star"] = outcome.s_star;
  if (!outcome.components.empty()) {
    auto& comps = j["components"] = nlohmann::json::array();
    for (const auto& c : outcome.components) comps.push_back({{"name", c.name}, {"max", c.max}, {"p_value", c.p_value}});
  }
  if (outcome.permutations > 0) {
    j["permutations"] = outcome.permutations;
    j["degenerate_replicas"] = outcome.degenerate_replicas;
  }
  j["elapsed_ms"] = outcome.elapsed_ms;
  return j;
}

nlohmann::json to_json(const SegmentationResult& result) {
  nlohmann::json cps = nlohmann::json::array();
  for (const auto& c : result.change_points)
    cps.push_back({{"start", c.start}, {"end", c.end}, {"tau", c.tau}, {"p_value", c.p_value}});
  return {{"change_points", cps}, {"trace", result.format_trace()}};
}

}  // namespace kapcpd
