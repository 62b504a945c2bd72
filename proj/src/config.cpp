#include "das/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "das/error.hpp"

namespace das {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError("config key '" + key + "': cannot parse '" + value + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + value + "'");
}

struct Field {
  std::string key;
  std::function<std::string(const TrainConfig&)> get;
  std::function<void(TrainConfig&, const std::string&)> set;
};

template <typename T>
Field number_field(std::string key, T TrainConfig::*member) {
  return Field{key,
               [member](const TrainConfig& c) {
                 if constexpr (std::is_floating_point_v<T>) {
                   return format_double(c.*member);
                 } else {
                   return std::to_string(c.*member);
                 }
               },
               [key, member](TrainConfig& c, const std::string& v) {
                 c.*member = parse_number<T>(key, v);
               }};
}

Field bool_field(std::string key, bool TrainConfig::*member) {
  return Field{key, [member](const TrainConfig& c) { return std::string(c.*member ? "true" : "false"); },
               [key, member](TrainConfig& c, const std::string& v) { c.*member = parse_bool(key, v); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      Field{"variant", [](const TrainConfig& c) { return std::string(to_string(c.variant)); },
            [](TrainConfig& c, const std::string& v) { c.variant = parse_variant(v); }},
      number_field("lambda1", &TrainConfig::lambda1),
      number_field("lambda2", &TrainConfig::lambda2),
      number_field("lambda3", &TrainConfig::lambda3),
      number_field("alpha", &TrainConfig::alpha),
      number_field("learning_rate", &TrainConfig::learning_rate),
      number_field("epochs", &TrainConfig::epochs),
      number_field("batch_size", &TrainConfig::batch_size),
      number_field("seed", &TrainConfig::seed),
      number_field("window", &TrainConfig::window),
      number_field("hidden", &TrainConfig::hidden),
      number_field("dropout_rate", &TrainConfig::dropout_rate),
      number_field("max_norm", &TrainConfig::max_norm),
      number_field("vocab_size", &TrainConfig::vocab_size),
      number_field("embedding_dim", &TrainConfig::embedding_dim),
      number_field("num_classes", &TrainConfig::num_classes),
      Field{"distance_loss", [](const TrainConfig& c) { return to_string(c.distance_loss); },
            [](TrainConfig& c, const std::string& v) { c.distance_loss = parse_distance_loss(v); }},
      number_field("rmsprop_rho", &TrainConfig::rmsprop_rho),
      number_field("rmsprop_eps", &TrainConfig::rmsprop_eps),
      bool_field("balance_source", &TrainConfig::balance_source),
      bool_field("skip_first_epoch_bootstrap", &TrainConfig::skip_first_epoch_bootstrap),
      number_field("dev_size", &TrainConfig::dev_size),
      number_field("max_tokens", &TrainConfig::max_tokens),
      Field{"corpus_format",
            [](const TrainConfig& c) {
              return std::string(c.corpus_format == CorpusFormat::kJsonlRating ? "jsonl_rating"
                                                                               : "jsonl_label");
            },
            [](TrainConfig& c, const std::string& v) { c.corpus_format = parse_corpus_format(v); }},
      Field{"rating_scheme", [](const TrainConfig& c) { return std::string(to_string(c.rating_scheme)); },
            [](TrainConfig& c, const std::string& v) { c.rating_scheme = parse_rating_scheme(v); }},
      bool_field("log_wall_time", &TrainConfig::log_wall_time),
  };
  return table;
}

}  // namespace

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kNaiveNN: return "NaiveNN";
    case Variant::kFANN: return "FANN";
    case Variant::kDasEM: return "DAS-EM";
    case Variant::kDasSE: return "DAS-SE";
    case Variant::kDAS: return "DAS";
    case Variant::kMmdBaseline: return "MMD-baseline";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  for (Variant v : {Variant::kNaiveNN, Variant::kFANN, Variant::kDasEM, Variant::kDasSE,
                    Variant::kDAS, Variant::kMmdBaseline}) {
    if (to_string(v) == name) return v;
  }
  throw ConfigError("unknown variant '" + std::string(name) + "'");
}

LossWeights TrainConfig::effective_weights() const {
  LossWeights w{lambda1, lambda2, lambda3};
  switch (variant) {
    case Variant::kNaiveNN: w = {0.0, 0.0, 0.0}; break;
    case Variant::kFANN:
    case Variant::kMmdBaseline: w.lambda2 = w.lambda3 = 0.0; break;
    case Variant::kDasEM: w.lambda3 = 0.0; break;
    case Variant::kDasSE: w.lambda2 = 0.0; break;
    case Variant::kDAS: break;
  }
  return w;
}

DistanceLoss TrainConfig::effective_distance() const {
  return variant == Variant::kMmdBaseline ? DistanceLoss::kMmdRbf : distance_loss;
}

ModelShape TrainConfig::model_shape(std::size_t vocab) const {
  return ModelShape{vocab, embedding_dim, window, hidden, num_classes};
}

void TrainConfig::validate() const {
  auto check = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("invalid config: " + what);
  };
  check(lambda1 >= 0 && lambda2 >= 0 && lambda3 >= 0, "lambda values must be nonnegative");
  check(alpha >= 0 && alpha < 1, "alpha must lie in [0, 1)");
  check(learning_rate > 0, "learning_rate must be positive");
  check(epochs >= 1, "epochs must be at least 1");
  check(batch_size >= 1, "batch_size must be at least 1");
  check(window >= 1 && hidden >= 1 && embedding_dim >= 1, "model sizes must be positive");
  check(num_classes >= 2 && num_classes <= static_cast<std::size_t>(kNumLabels),
        "num_classes must lie in [2, 3]");
  check(dropout_rate >= 0 && dropout_rate < 1, "dropout_rate must lie in [0, 1)");
  check(max_norm > 0, "max_norm must be positive");
  check(vocab_size >= 1, "vocab_size must be positive");
  check(rmsprop_rho >= 0 && rmsprop_rho < 1, "rmsprop_rho must lie in [0, 1)");
  check(rmsprop_eps > 0, "rmsprop_eps must be positive");
  check(max_tokens >= 1, "max_tokens must be positive");
}

TrainConfig parse_config(std::string_view text) {
  TrainConfig config;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(content).substr(0, eq));
    const std::string value = trim(std::string_view(content).substr(eq + 1));
    bool known = false;
    for (const Field& f : fields()) {
      if (f.key == key) {
        f.set(config, value);
        known = true;
        break;
      }
    }
    if (!known) {
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  config.validate();
  return config;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string format_config(const TrainConfig& config) {
  std::string out;
  for (const Field& f : fields()) out += f.key + " = " + f.get(config) + "\n";
  return out;
}

std::map<std::string, std::string> config_entries(const TrainConfig& config) {
  std::map<std::string, std::string> out;
  for (const Field& f : fields()) out[f.key] = f.get(config);
  return out;
}

}  // namespace das
