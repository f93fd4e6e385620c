#include "gpumux/config_io.hpp"

#include <fstream>
#include <set>

#include "gpumux/workload.hpp"

namespace gpumux {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& known,
                    const std::string& section) {
  for (const auto& [key, value] : obj.items()) {
    if (!known.count(key)) {
      throw ConfigError("config: unknown key '" + section + "." + key + "'");
    }
  }
}

DeviceSpec parse_device(const json& value) {
  if (value.is_string()) {
    const std::string name = value.get<std::string>();
    if (name == "v100") return v100_profile();
    std::ifstream in(name);
    if (!in) throw ConfigError("config: device profile '" + name + "' not found");
    json doc;
    in >> doc;
    try {
      return device_from_json(doc);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }
  try {
    return device_from_json(value);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

std::vector<Tenant> parse_tenants(const json& value, std::string* workload_name) {
  std::vector<Tenant> tenants;
  if (value.is_object()) {
    reject_unknown(value, {"preset", "count", "concurrency"}, "tenants");
    const std::string preset_name = value.at("preset").get<std::string>();
    const WorkloadPreset* preset = find_preset(preset_name);
    if (!preset) throw ConfigError("config: unknown preset '" + preset_name + "'");
    const int count = value.value("count", 1);
    const int concurrency = value.value("concurrency", 1);
    *workload_name = preset_name;
    return make_tenants(*preset, count, concurrency);
  }
  if (!value.is_array()) {
    throw ConfigError("config: 'tenants' must be an object or array");
  }
  int index = 0;
  for (const json& spec : value) {
    reject_unknown(spec,
                   {"tenant_id", "layers", "weights_bytes", "activation_bytes",
                    "slo_latency", "concurrency"},
                   "tenants[" + std::to_string(index) + "]");
    Tenant t;
    t.tenant_id = spec.value("tenant_id", "t" + std::to_string(index));
    for (const json& layer : spec.at("layers")) {
      if (!layer.is_array() || layer.size() != 3) {
        throw ConfigError("config: layers entries must be [m,n,k]");
      }
      t.layers.push_back({layer[0].get<std::int64_t>(), layer[1].get<std::int64_t>(),
                          layer[2].get<std::int64_t>()});
    }
    t.weights_bytes = spec.value("weights_bytes", 0.0);
    t.activation_bytes = spec.value("activation_bytes", 0.0);
    t.slo_latency = spec.value("slo_latency", 0.1);
    t.concurrency = spec.value("concurrency", 1);
    tenants.push_back(std::move(t));
    ++index;
  }
  return tenants;
}

}  // namespace

SimConfig config_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config: document must be a JSON object");
  reject_unknown(doc, {"device", "policy", "scheduler", "tenants", "sim"}, "<root>");

  SimConfig cfg;
  cfg.device = doc.contains("device") ? parse_device(doc.at("device")) : v100_profile();

  if (doc.contains("policy")) {
    const json& pol = doc.at("policy");
    reject_unknown(pol,
                   {"kind", "quantum", "batch_size", "fairness_gap_even",
                    "fairness_gap_odd", "rng_seed"},
                   "policy");
    if (pol.contains("kind")) {
      const std::string kind = pol.at("kind").get<std::string>();
      auto parsed = policy_from_name(kind);
      if (!parsed) throw ConfigError("config: unknown policy '" + kind + "'");
      cfg.policy = *parsed;
    }
    cfg.policy_params.quantum = pol.value("quantum", cfg.policy_params.quantum);
    cfg.policy_params.batch_size =
        pol.value("batch_size", cfg.policy_params.batch_size);
    cfg.policy_params.fairness_gap_even =
        pol.value("fairness_gap_even", cfg.policy_params.fairness_gap_even);
    cfg.policy_params.fairness_gap_odd =
        pol.value("fairness_gap_odd", cfg.policy_params.fairness_gap_odd);
    cfg.policy_params.rng_seed = pol.value("rng_seed", cfg.policy_params.rng_seed);
  }

  if (doc.contains("scheduler")) {
    const json& sch = doc.at("scheduler");
    reject_unknown(sch,
                   {"max_wait", "target_batch", "allow_variable_size",
                    "slo_safety_margin", "variable_inefficiency", "ewma_alpha",
                    "min_observations", "threshold_ratio", "evict_stragglers"},
                   "scheduler");
    cfg.scheduler.max_wait = sch.value("max_wait", cfg.scheduler.max_wait);
    cfg.scheduler.target_batch = sch.value("target_batch", cfg.scheduler.target_batch);
    cfg.scheduler.allow_variable_size =
        sch.value("allow_variable_size", cfg.scheduler.allow_variable_size);
    cfg.scheduler.slo_safety_margin =
        sch.value("slo_safety_margin", cfg.scheduler.slo_safety_margin);
    cfg.scheduler.variable_inefficiency =
        sch.value("variable_inefficiency", cfg.scheduler.variable_inefficiency);
    cfg.detector.ewma_alpha = sch.value("ewma_alpha", cfg.detector.ewma_alpha);
    cfg.detector.min_observations =
        sch.value("min_observations", cfg.detector.min_observations);
    cfg.detector.threshold_ratio =
        sch.value("threshold_ratio", cfg.detector.threshold_ratio);
    cfg.detector.evict_stragglers =
        sch.value("evict_stragglers", cfg.detector.evict_stragglers);
  } else {
    cfg.scheduler.target_batch = 0;  // auto
  }

  if (!doc.contains("tenants")) throw ConfigError("config: missing 'tenants'");
  cfg.tenants = parse_tenants(doc.at("tenants"), &cfg.workload_name);

  if (doc.contains("sim")) {
    const json& sim = doc.at("sim");
    reject_unknown(sim,
                   {"duration", "warmup", "seed", "mode", "degradation"},
                   "sim");
    cfg.duration = sim.value("duration", cfg.duration);
    cfg.warmup = sim.contains("warmup") ? sim.at("warmup").get<double>()
                                        : 0.1 * cfg.duration;
    cfg.seed = sim.value("seed", cfg.seed);
    if (sim.contains("mode")) {
      const std::string mode = sim.at("mode").get<std::string>();
      if (mode == "forward_pass") {
        cfg.mode = SimMode::kForwardPass;
      } else if (mode == "microbench") {
        cfg.mode = SimMode::kMicrobench;
      } else {
        throw ConfigError("config: unknown sim.mode '" + mode + "'");
      }
    }
    if (sim.contains("degradation")) {
      const json& deg = sim.at("degradation");
      reject_unknown(deg, {"tenant", "slowdown", "start"}, "sim.degradation");
      DegradationSpec spec;
      spec.tenant_index = deg.at("tenant").get<int>();
      spec.slowdown = deg.value("slowdown", 1.0);
      spec.start = deg.value("start", 0.0);
      cfg.degradation = spec;
    }
  } else {
    cfg.warmup = 0.1 * cfg.duration;
  }

  cfg.validate();
  return cfg;
}

SimConfig load_config(const std::string& path,
                      const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("config: invalid JSON in '" + path + "': " + e.what());
  }
  for (const std::string& assignment : overrides) apply_override(doc, assignment);
  return config_from_json(doc);
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("config: override '" + assignment + "' is not key=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;  // unquoted strings like policy.kind=space-time
  }
  json* node = &doc;
  std::size_t begin = 0;
  while (true) {
    const std::size_t dot = path.find('.', begin);
    const std::string key = path.substr(begin, dot - begin);
    if (key.empty()) throw ConfigError("config: bad override path '" + path + "'");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      break;
    }
    node = &(*node)[key];
    begin = dot + 1;
  }
}

nlohmann::json config_to_json(const SimConfig& cfg) {
  json tenants = json::array();
  for (const Tenant& t : cfg.tenants) {
    json layers = json::array();
    for (const GemmShape& l : t.layers) layers.push_back({l.m, l.n, l.k});
    tenants.push_back({{"tenant_id", t.tenant_id},
                       {"layers", layers},
                       {"weights_bytes", t.weights_bytes},
                       {"activation_bytes", t.activation_bytes},
                       {"slo_latency", t.slo_latency},
                       {"concurrency", t.concurrency}});
  }
  json doc{
      {"device", device_to_json(cfg.device)},
      {"policy",
       {{"kind", std::string(policy_name(cfg.policy))},
        {"quantum", cfg.policy_params.quantum},
        {"batch_size", cfg.policy_params.batch_size},
        {"fairness_gap_even", cfg.policy_params.fairness_gap_even},
        {"fairness_gap_odd", cfg.policy_params.fairness_gap_odd},
        {"rng_seed", cfg.policy_params.rng_seed}}},
      {"scheduler",
       {{"max_wait", cfg.scheduler.max_wait},
        {"target_batch", cfg.scheduler.target_batch},
        {"allow_variable_size", cfg.scheduler.allow_variable_size},
        {"slo_safety_margin", cfg.scheduler.slo_safety_margin},
        {"variable_inefficiency", cfg.scheduler.variable_inefficiency},
        {"ewma_alpha", cfg.detector.ewma_alpha},
        {"min_observations", cfg.detector.min_observations},
        {"threshold_ratio", cfg.detector.threshold_ratio},
        {"evict_stragglers", cfg.detector.evict_stragglers}}},
      {"tenants", tenants},
      {"sim",
       {{"duration", cfg.duration},
        {"warmup", cfg.warmup},
        {"seed", cfg.seed},
        {"mode", cfg.mode == SimMode::kMicrobench ? "microbench" : "forward_pass"}}},
  };
  if (cfg.degradation) {
    doc["sim"]["degradation"] = {{"tenant", cfg.degradation->tenant_index},
                                 {"slowdown", cfg.degradation->slowdown},
                                 {"start", cfg.degradation->start}};
  }
  return doc;
}

}  // namespace gpumux
