#include "fes/cli/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fes/errors.hpp"

namespace fes::cli {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

// Strict reader over one JSON object: every key must be consumed.
class Section {
 public:
  Section(const json* j, std::string path) : j_(j), path_(std::move(path)) {
    if (j_ && !j_->is_object()) throw ConfigError("config: '" + path_ + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_ || !j_->contains(key)) return;
    try {
      out = (*j_)[key].get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config: '" + path_ + "." + key + "' has the wrong type");
    }
  }

  void get_path(const char* key, std::filesystem::path& out) {
    std::string s = out.string();
    get(key, s);
    out = s;
  }

  bool has(const char* key) const { return j_ && j_->contains(key); }

  Section sub(const char* key) {
    seen_.insert(key);
    return Section(j_ && j_->contains(key) ? &(*j_)[key] : nullptr, path_.empty() ? key : path_ + "." + key);
  }

  void finish() const {
    if (!j_) return;
    for (auto it = j_->begin(); it != j_->end(); ++it)
      if (!seen_.count(it.key()))
        throw ConfigError("config: unknown key '" + (path_.empty() ? it.key() : path_ + "." + it.key()) + "'");
  }

 private:
  const json* j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_adam(Section s, nn::AdamConfig& a) {
  s.get("beta1", a.beta1);
  s.get("beta2", a.beta2);
  s.get("eps", a.eps);
  double clip = a.max_grad_norm.value_or(0.0);
  s.get("max_grad_norm", clip);
  a.max_grad_norm = clip > 0.0 ? std::optional<double>(clip) : std::nullopt;
  s.finish();
}

ojson adam_json(const nn::AdamConfig& a) {
  return ojson{{"beta1", a.beta1}, {"beta2", a.beta2}, {"eps", a.eps}, {"max_grad_norm", a.max_grad_norm.value_or(0.0)}};
}

}  // namespace

std::uint64_t fork_seed(std::uint64_t seed, const std::string& component) {
  // FNV-1a over the component name, mixed with the run seed by splitmix64.
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : component) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (h | 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void apply_seed(RunConfig& c, std::uint64_t seed) {
  c.seed = seed;
  c.rtpnn.seed = fork_seed(seed, "rtpnn.init");
  c.stage1.seed = fork_seed(seed, "stage1");
  c.stage2.seed = fork_seed(seed, "stage2");
  c.ga.seed = fork_seed(seed, "ga");
  c.mlp.seed = fork_seed(seed, "mlp");
  c.data.synthetic.seed = fork_seed(seed, "synthetic");
}

void RunConfig::check() const {
  if (data.source != "csv" && data.source != "synthetic")
    throw ConfigError("config: data.source must be 'csv' or 'synthetic', got '" + data.source + "'");
  if (split.slots != scenario.slots)
    throw ConfigError("config: split.slots (" + std::to_string(split.slots) + ") differs from scenario.slots (" +
                      std::to_string(scenario.slots) + ")");
  if (split.train_days < 1 || split.test_days < 0) throw ConfigError("config: split needs train_days >= 1, test_days >= 0");
  if (stage1.epochs < 0 || stage1.batch_size < 1 || !(stage1.lr > 0.0))
    throw ConfigError("config: stage1 needs epochs >= 0, batch_size >= 1, lr > 0");
  if (stage2.epochs < 0 || stage2.batch_size < 1 || !(stage2.lr > 0.0))
    throw ConfigError("config: stage2 needs epochs >= 0, batch_size >= 1, lr > 0");
  if (rtpnn.l2 < 0.0) throw ConfigError("config: rtpnn.l2 must be >= 0");
  if (scenario.battery_fraction < 0.0 || scenario.battery_fraction > 1.0)
    throw ConfigError("config: scenario.battery_fraction must lie in [0, 1]");
  for (double f : eval.battery_sweep)
    if (f < 0.0 || f > 1.0) throw ConfigError("config: eval.battery_sweep entries must lie in [0, 1]");
  if (eval.repetitions < 0) throw ConfigError("config: eval.repetitions must be >= 0");
  if (scenario_generation && static_cast<int>(scenario_generation->size()) != scenario.slots)
    throw ConfigError("config: scenario.generation needs " + std::to_string(scenario.slots) + " values");
  try {
    ga.check();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ga: ") + e.what());
  }
}

RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  RunConfig c;
  Section top(&root, "");
  std::uint64_t seed = c.seed;
  top.get("seed", seed);
  apply_seed(c, seed);

  {
    auto s = top.sub("data");
    s.get("source", c.data.source);
    s.get_path("generation_csv", c.data.generation_csv);
    s.get_path("weather_csv", c.data.weather_csv);
    s.get("features", c.data.features);
    auto y = s.sub("synthetic");
    auto& sy = c.data.synthetic;
    y.get("days", sy.days);
    y.get("peak_kw", sy.peak_kw);
    y.get("day_persistence", sy.day_persistence);
    y.get("day_sigma", sy.day_sigma);
    y.get("hour_sigma", sy.hour_sigma);
    y.get("noise_kw", sy.noise_kw);
    y.get("clip_kw", sy.clip_kw);
    y.get("mean_clearness", sy.mean_clearness);
    y.get("season_hours", sy.season_hours);
    std::string start = format_timestamp(sy.start);
    y.get("start", start);
    auto ts = parse_timestamp(start);
    if (!ts) throw ConfigError("config: data.synthetic.start is not a timestamp: '" + start + "'");
    sy.start = *ts;
    y.finish();
    s.finish();
  }
  {
    auto s = top.sub("split");
    s.get("train_days", c.split.train_days);
    s.get("test_days", c.split.test_days);
    s.get("slots", c.split.slots);
    s.get("purge_gap", c.split.purge_gap);
    s.finish();
  }
  {
    auto s = top.sub("lags");
    s.get("generation_hours", c.lags.generation_hours);
    s.get("feature_hours", c.lags.feature_hours);
    s.finish();
  }
  {
    auto s = top.sub("devices");
    s.get_path("file", c.devices_file);
    s.finish();
  }
  {
    auto s = top.sub("scenario");
    c.scenario.slots = c.split.slots;
    s.get("slots", c.scenario.slots);
    s.get("horizon_hours", c.scenario.horizon_hours);
    s.get("battery_max_kwh", c.scenario.battery_max_kwh);
    s.get("inverter_kw", c.scenario.inverter_kw);
    s.get("battery_fraction", c.scenario.battery_fraction);
    if (s.has("generation")) {
      std::vector<double> g;
      s.get("generation", g);
      c.scenario_generation = std::move(g);
    }
    s.finish();
  }
  {
    auto s = top.sub("rtpnn");
    s.get("l2", c.rtpnn.l2);
    std::string out(nn::to_string(c.rtpnn.output));
    s.get("output", out);
    try {
      c.rtpnn.output = nn::parse_activation(out);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("config: rtpnn.output: ") + e.what());
    }
    s.finish();
  }
  {
    auto s = top.sub("stage1");
    s.get("epochs", c.stage1.epochs);
    s.get("lr", c.stage1.lr);
    s.get("batch_size", c.stage1.batch_size);
    s.get("shuffle", c.stage1.shuffle);
    read_adam(s.sub("adam"), c.stage1.adam);
    s.finish();
  }
  {
    auto s = top.sub("stage2");
    s.get("epochs", c.stage2.epochs);
    s.get("lr", c.stage2.lr);
    s.get("batch_size", c.stage2.batch_size);
    s.get("shuffle", c.stage2.shuffle);
    read_adam(s.sub("adam"), c.stage2.adam);
    s.finish();
  }
  {
    auto s = top.sub("ga");
    s.get("initial_samples", c.ga.initial_samples);
    s.get("population", c.ga.population);
    s.get("generations", c.ga.generations);
    s.get("mutation_probability", c.ga.mutation_probability);
    s.get("offspring", c.ga.offspring);
    s.get("repair_attempts", c.ga.repair_attempts);
    s.finish();
  }
  {
    auto s = top.sub("mlp");
    s.get("hidden", c.mlp.hidden);
    s.get("epochs", c.mlp.epochs);
    s.get("lr", c.mlp.lr);
    s.get("batch_size", c.mlp.batch_size);
    s.finish();
  }
  {
    auto s = top.sub("eval");
    s.get("exclude_nights", c.eval.exclude_nights);
    s.get("baselines", c.eval.baselines);
    s.get("timing", c.eval.timing);
    s.get("repetitions", c.eval.repetitions);
    s.get("battery_sweep", c.eval.battery_sweep);
    s.finish();
  }
  {
    auto s = top.sub("paths");
    s.get_path("checkpoint_dir", c.checkpoint_dir);
    s.finish();
  }
  top.finish();
  c.check();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const RunConfig& c) {
  const auto& sy = c.data.synthetic;
  ojson j;
  j["seed"] = c.seed;
  j["data"] = ojson{{"source", c.data.source},
                    {"generation_csv", c.data.generation_csv.string()},
                    {"weather_csv", c.data.weather_csv.string()},
                    {"features", c.data.features},
                    {"synthetic", ojson{{"days", sy.days},
                                        {"peak_kw", sy.peak_kw},
                                        {"day_persistence", sy.day_persistence},
                                        {"day_sigma", sy.day_sigma},
                                        {"hour_sigma", sy.hour_sigma},
                                        {"noise_kw", sy.noise_kw},
                                        {"clip_kw", sy.clip_kw},
                                        {"mean_clearness", sy.mean_clearness},
                                        {"season_hours", sy.season_hours},
                                        {"start", format_timestamp(sy.start)}}}};
  j["split"] = ojson{{"train_days", c.split.train_days},
                     {"test_days", c.split.test_days},
                     {"slots", c.split.slots},
                     {"purge_gap", c.split.purge_gap}};
  j["lags"] = ojson{{"generation_hours", c.lags.generation_hours}, {"feature_hours", c.lags.feature_hours}};
  j["devices"] = ojson{{"file", c.devices_file.string()}};
  j["scenario"] = ojson{{"slots", c.scenario.slots},
                        {"horizon_hours", c.scenario.horizon_hours},
                        {"battery_max_kwh", c.scenario.battery_max_kwh},
                        {"inverter_kw", c.scenario.inverter_kw},
                        {"battery_fraction", c.scenario.battery_fraction}};
  if (c.scenario_generation) j["scenario"]["generation"] = *c.scenario_generation;
  j["rtpnn"] = ojson{{"l2", c.rtpnn.l2}, {"output", std::string(nn::to_string(c.rtpnn.output))}};
  j["stage1"] = ojson{{"epochs", c.stage1.epochs},
                      {"lr", c.stage1.lr},
                      {"batch_size", c.stage1.batch_size},
                      {"shuffle", c.stage1.shuffle},
                      {"adam", adam_json(c.stage1.adam)}};
  j["stage2"] = ojson{{"epochs", c.stage2.epochs},
                      {"lr", c.stage2.lr},
                      {"batch_size", c.stage2.batch_size},
                      {"shuffle", c.stage2.shuffle},
                      {"adam", adam_json(c.stage2.adam)}};
  j["ga"] = ojson{{"initial_samples", c.ga.initial_samples},
                  {"population", c.ga.population},
                  {"generations", c.ga.generations},
                  {"mutation_probability", c.ga.mutation_probability},
                  {"offspring", c.ga.offspring},
                  {"repair_attempts", c.ga.repair_attempts}};
  j["mlp"] = ojson{{"hidden", c.mlp.hidden}, {"epochs", c.mlp.epochs}, {"lr", c.mlp.lr}, {"batch_size", c.mlp.batch_size}};
  j["eval"] = ojson{{"exclude_nights", c.eval.exclude_nights},
                    {"baselines", c.eval.baselines},
                    {"timing", c.eval.timing},
                    {"repetitions", c.eval.repetitions},
                    {"battery_sweep", c.eval.battery_sweep}};
  j["paths"] = ojson{{"checkpoint_dir", c.checkpoint_dir.string()}};
  return j.dump(2) + "\n";
}

}  // namespace fes::cli
