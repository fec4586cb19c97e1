#include "config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "elicit/error.hpp"
#include "json.hpp"

namespace elicit::cli {

using json = nlohmann::json;

namespace {

json chat_defaults() {
  return {
      {"mode", "replay"},     {"base_url", ""},         {"model", ""},
      {"transcript", ""},     {"temperature", nullptr}, {"max_in_flight", 4u},
      {"timeout_seconds", 120u}, {"retry_attempts", 3u}, {"retry_delay_ms", 1000u},
  };
}

json defaults() {
  json checker = chat_defaults();
  checker["enabled"] = false;
  return {
      {"paths",
       {{"commentary", ""},
        {"descriptions", ""},
        {"manifest", ""},
        {"output_dir", "out"},
        {"prompts_dir", ""},
        {"qa_train", ""},
        {"qa_eval", ""},
        {"checkpoint", ""},
        {"pools", ""}}},
      {"pipeline",
       {{"window", 7.0},
        {"grouping_window", 1.0},
        {"min_words", 8u},
        {"failure_threshold", 0.05},
        {"formatting_temperature", 0.0},
        {"checker_temperature", 0.0},
        {"generation_temperature", 0.7},
        {"verification_temperature", 0.0},
        {"max_in_flight", 4u}}},
      {"chat", chat_defaults()},
      {"checker", checker},
      {"embeddings",
       {{"base_url", ""},
        {"model", ""},
        {"max_batch", 128u},
        {"max_in_flight", 2u},
        {"timeout_seconds", 120u},
        {"retry_attempts", 3u},
        {"retry_delay_ms", 1000u}}},
      {"train",
       {{"batch_size", 512u},
        {"epochs", 10u},
        {"lr", 1e-2},
        {"tau", 0.05},
        {"weight_decay", 0.01},
        {"beta1", 0.9},
        {"beta2", 0.999},
        {"eps", 1e-8},
        {"shuffle_seed", 0u},
        {"buckets", 65536u},
        {"dim", 64u},
        {"init_seed", 0u}}},
      {"pool", {{"L", 50u}, {"seed", 0u}}},
      {"eval",
       {{"ks", json::array({1u, 5u, 10u})}, {"reps", 3u}, {"seed", 0u}, {"encoder", "checkpoint"}}},
  };
}

[[noreturn]] void bad_value(const std::string& key, const std::string& why) {
  throw ValidationError("config key " + key + ": " + why);
}

std::uint64_t parse_unsigned(const std::string& key, std::string_view text) {
  std::uint64_t v = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    bad_value(key, "expected a non-negative integer, got \"" + std::string(text) + "\"");
  }
  return v;
}

double parse_real(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(v)) {
    bad_value(key, "expected a number, got \"" + text + "\"");
  }
  return v;
}

// Converts override text into a value shaped like `def`.
json parse_override(const std::string& key, const json& def, const std::string& text) {
  switch (def.type()) {
    case json::value_t::string:
      return text;
    case json::value_t::boolean:
      if (text == "true" || text == "1") return true;
      if (text == "false" || text == "0") return false;
      bad_value(key, "expected true or false, got \"" + text + "\"");
    case json::value_t::number_unsigned:
      return parse_unsigned(key, text);
    case json::value_t::number_float:
      return parse_real(key, text);
    case json::value_t::null:
      if (text.empty() || text == "null") return nullptr;
      return parse_real(key, text);
    case json::value_t::array: {
      json out = json::array();
      std::string_view rest = text;
      while (!rest.empty()) {
        const auto comma = rest.find(',');
        out.push_back(parse_unsigned(key, rest.substr(0, comma)));
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
      }
      return out;
    }
    default:
      bad_value(key, "cannot be overridden");
  }
}

// A file value must have the default's type; integers are accepted for reals.
void check_type(const std::string& key, const json& def, const json& value) {
  bool ok = false;
  switch (def.type()) {
    case json::value_t::number_float:
      ok = value.is_number();
      break;
    case json::value_t::number_unsigned:
      ok = value.is_number_unsigned() || (value.is_number_integer() && value.get<std::int64_t>() >= 0);
      break;
    case json::value_t::null:
      ok = value.is_null() || value.is_number();
      break;
    case json::value_t::array:
      ok = value.is_array();
      if (ok) {
        for (const auto& v : value) ok = ok && v.is_number_unsigned();
      }
      break;
    default:
      ok = value.type() == def.type();
  }
  if (!ok) bad_value(key, "expected " + std::string(def.type_name()) + ", got " + value.dump());
}

void merge_file(json& config, const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ValidationError("cannot open config file " + file.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(file.string() + ": invalid JSON: " + e.what());
  }
  if (!doc.is_object()) throw ValidationError(file.string() + ": config must be a JSON object");
  for (const auto& [section, body] : doc.items()) {
    if (!config.contains(section)) throw ValidationError("unknown config section \"" + section + "\"");
    if (!body.is_object()) throw ValidationError("config section \"" + section + "\" must be an object");
    for (const auto& [key, value] : body.items()) {
      const auto dotted = section + "." + key;
      if (!config[section].contains(key)) throw ValidationError("unknown config key " + dotted);
      check_type(dotted, config[section][key], value);
      config[section][key] = value;
    }
  }
}

std::chrono::seconds seconds_of(const json& v) { return std::chrono::seconds(v.get<std::uint64_t>()); }

void require(bool ok, const std::string& key, const std::string& why) {
  if (!ok) bad_value(key, why);
}

ChatBackendConfig chat_from(const json& s, const std::string& section) {
  ChatBackendConfig c;
  const auto mode = s["mode"].get<std::string>();
  if (mode == "replay") {
    c.mode = BackendMode::kReplay;
  } else if (mode == "live") {
    c.mode = BackendMode::kLive;
  } else {
    bad_value(section + ".mode", "expected replay or live, got \"" + mode + "\"");
  }
  c.base_url = s["base_url"].get<std::string>();
  c.model_name = s["model"].get<std::string>();
  c.transcript = s["transcript"].get<std::string>();
  if (!s["temperature"].is_null()) {
    c.temperature = s["temperature"].get<double>();
    require(*c.temperature >= 0.0, section + ".temperature", "must be >= 0");
  }
  c.max_in_flight = s["max_in_flight"].get<std::size_t>();
  require(c.max_in_flight >= 1, section + ".max_in_flight", "must be >= 1");
  c.timeout = seconds_of(s["timeout_seconds"]);
  c.retry.attempts = s["retry_attempts"].get<int>();
  require(c.retry.attempts >= 1, section + ".retry_attempts", "must be >= 1");
  c.retry.initial_delay = std::chrono::milliseconds(s["retry_delay_ms"].get<std::uint64_t>());
  return c;
}

RunConfig from_json(const json& j) {
  RunConfig rc;
  const auto& p = j["paths"];
  rc.paths.commentary = p["commentary"].get<std::string>();
  rc.paths.descriptions = p["descriptions"].get<std::string>();
  rc.paths.manifest = p["manifest"].get<std::string>();
  rc.paths.output_dir = p["output_dir"].get<std::string>();
  rc.paths.prompts_dir = p["prompts_dir"].get<std::string>();
  rc.paths.qa_train = p["qa_train"].get<std::string>();
  rc.paths.qa_eval = p["qa_eval"].get<std::string>();
  rc.paths.checkpoint = p["checkpoint"].get<std::string>();
  rc.paths.pools = p["pools"].get<std::string>();
  require(!rc.paths.output_dir.empty(), "paths.output_dir", "must not be empty");

  const auto& pl = j["pipeline"];
  auto& pc = rc.pipeline;
  pc.window_seconds = pl["window"].get<double>();
  pc.grouping_window = pl["grouping_window"].get<double>();
  pc.min_words = pl["min_words"].get<std::size_t>();
  pc.failure_threshold = pl["failure_threshold"].get<double>();
  pc.formatting_temperature = pl["formatting_temperature"].get<double>();
  pc.checker_temperature = pl["checker_temperature"].get<double>();
  pc.generation_temperature = pl["generation_temperature"].get<double>();
  pc.verification_temperature = pl["verification_temperature"].get<double>();
  pc.max_in_flight = pl["max_in_flight"].get<std::size_t>();
  require(pc.window_seconds > 0.0, "pipeline.window", "must be > 0");
  require(pc.grouping_window >= 0.0, "pipeline.grouping_window", "must be >= 0");
  require(pc.failure_threshold >= 0.0 && pc.failure_threshold <= 1.0,
          "pipeline.failure_threshold", "must lie in [0, 1]");
  for (const char* key : {"formatting_temperature", "checker_temperature",
                          "generation_temperature", "verification_temperature"}) {
    require(pl[key].get<double>() >= 0.0, std::string("pipeline.") + key, "must be >= 0");
  }
  require(pc.max_in_flight >= 1, "pipeline.max_in_flight", "must be >= 1");

  rc.chat = chat_from(j["chat"], "chat");
  rc.checker.enabled = j["checker"]["enabled"].get<bool>();
  rc.checker.backend = chat_from(j["checker"], "checker");

  const auto& e = j["embeddings"];
  rc.embeddings.base_url = e["base_url"].get<std::string>();
  rc.embeddings.model_name = e["model"].get<std::string>();
  rc.embeddings.max_batch = e["max_batch"].get<std::size_t>();
  rc.embeddings.max_in_flight = e["max_in_flight"].get<std::size_t>();
  rc.embeddings.retry.attempts = e["retry_attempts"].get<int>();
  rc.embeddings.retry.initial_delay =
      std::chrono::milliseconds(e["retry_delay_ms"].get<std::uint64_t>());
  rc.embeddings_timeout = seconds_of(e["timeout_seconds"]);
  require(rc.embeddings.max_batch >= 1, "embeddings.max_batch", "must be >= 1");
  require(rc.embeddings.max_in_flight >= 1, "embeddings.max_in_flight", "must be >= 1");
  require(rc.embeddings.retry.attempts >= 1, "embeddings.retry_attempts", "must be >= 1");

  const auto& t = j["train"];
  auto& tc = rc.train;
  tc.batch_size = t["batch_size"].get<std::size_t>();
  tc.epochs = t["epochs"].get<std::size_t>();
  tc.lr = t["lr"].get<double>();
  tc.tau = t["tau"].get<double>();
  tc.weight_decay = t["weight_decay"].get<double>();
  tc.beta1 = t["beta1"].get<double>();
  tc.beta2 = t["beta2"].get<double>();
  tc.eps = t["eps"].get<double>();
  tc.shuffle_seed = t["shuffle_seed"].get<std::uint64_t>();
  const auto buckets = t["buckets"].get<std::uint64_t>();
  require(buckets >= 1 && buckets <= 0xffffffffu, "train.buckets", "must lie in [1, 2^32)");
  tc.buckets = static_cast<std::uint32_t>(buckets);
  tc.dim = t["dim"].get<std::size_t>();
  tc.init_seed = t["init_seed"].get<std::uint64_t>();
  tc.validate();

  rc.pool.L = j["pool"]["L"].get<std::size_t>();
  rc.pool.seed = j["pool"]["seed"].get<std::uint64_t>();
  require(rc.pool.L >= 1, "pool.L", "must be >= 1");

  const auto& ev = j["eval"];
  rc.eval.ks = ev["ks"].get<std::vector<std::size_t>>();
  rc.eval.reps = ev["reps"].get<std::size_t>();
  rc.eval.seed = ev["seed"].get<std::uint64_t>();
  rc.eval.encoder = ev["encoder"].get<std::string>();
  require(!rc.eval.ks.empty(), "eval.ks", "must not be empty");
  for (auto k : rc.eval.ks) require(k >= 1, "eval.ks", "every k must be >= 1");
  require(rc.eval.reps >= 1, "eval.reps", "must be >= 1");
  require(rc.eval.encoder == "checkpoint" || rc.eval.encoder == "untrained" ||
              rc.eval.encoder == "remote",
          "eval.encoder", "expected checkpoint, untrained or remote");
  return rc;
}

std::filesystem::path or_default(const std::filesystem::path& p, const std::filesystem::path& dir,
                                 const char* name) {
  return p.empty() ? dir / name : p;
}

}  // namespace

std::filesystem::path RunConfig::qa_train_path() const {
  return or_default(paths.qa_train, paths.output_dir, "qa_train.jsonl");
}
std::filesystem::path RunConfig::qa_seen_path() const { return paths.output_dir / "qa_seen.jsonl"; }
std::filesystem::path RunConfig::qa_eval_path() const {
  return or_default(paths.qa_eval, paths.output_dir, "qa_val.jsonl");
}
std::filesystem::path RunConfig::checkpoint_path() const {
  return or_default(paths.checkpoint, paths.output_dir, "model.ckpt");
}
std::filesystem::path RunConfig::pools_path() const {
  return or_default(paths.pools, paths.output_dir, "pools.jsonl");
}

std::string default_config_json() { return defaults().dump(2) + "\n"; }

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  const json all = defaults();
  for (const auto& [section, body] : all.items()) {
    for (const auto& [key, value] : body.items()) keys.push_back(section + "." + key);
  }
  return keys;
}

RunConfig resolve_config(const std::filesystem::path& file,
                         const std::vector<std::pair<std::string, std::string>>& overrides) {
  json config = defaults();
  if (!file.empty()) merge_file(config, file);
  for (const auto& [dotted, text] : overrides) {
    const auto dot = dotted.find('.');
    const auto section = dotted.substr(0, dot);
    const auto key = dot == std::string::npos ? std::string() : dotted.substr(dot + 1);
    if (!config.contains(section) || !config[section].contains(key)) {
      throw ValidationError("unknown config key " + dotted);
    }
    config[section][key] = parse_override(dotted, config[section][key], text);
  }
  try {
    return from_json(config);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("invalid config: ") + e.what());
  }
}

}  // namespace elicit::cli
