#include "fedcpu/config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <variant>

#include <json.hpp>

namespace fedcpu {

namespace {

// ---------------------------------------------------------------------------
// Minimal TOML subset: [tables], key = value with strings, integers, floats,
// booleans and flat arrays, # comments. Enough for the experiment fixtures;
// everything else is rejected with a line number.
// ---------------------------------------------------------------------------

struct TomlValue {
  std::variant<bool, std::int64_t, double, std::string,
               std::vector<TomlValue>>
      v;
  int line = 0;
};

using TomlTable = std::map<std::string, TomlValue>;

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

TomlValue parse_scalar(const std::string& raw, int line_no);

TomlValue parse_value(const std::string& raw, int line_no) {
  const std::string s = trim(raw);
  if (s.empty()) throw ConfigError(line_no, "missing value");
  if (s.front() == '[') {
    if (s.back() != ']') throw ConfigError(line_no, "unterminated array");
    TomlValue out;
    out.line = line_no;
    std::vector<TomlValue> items;
    std::string body = s.substr(1, s.size() - 2);
    std::string cur;
    bool in_string = false;
    for (char c : body) {
      if (c == '"') in_string = !in_string;
      if (c == ',' && !in_string) {
        if (!trim(cur).empty()) items.push_back(parse_scalar(trim(cur), line_no));
        cur.clear();
      } else {
        cur += c;
      }
    }
    if (!trim(cur).empty()) items.push_back(parse_scalar(trim(cur), line_no));
    out.v = std::move(items);
    return out;
  }
  return parse_scalar(s, line_no);
}

TomlValue parse_scalar(const std::string& s, int line_no) {
  TomlValue out;
  out.line = line_no;
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    out.v = s.substr(1, s.size() - 2);
    return out;
  }
  if (s == "true" || s == "false") {
    out.v = (s == "true");
    return out;
  }
  // number: integer if it survives integer parsing exactly
  try {
    std::size_t pos = 0;
    if (s.find_first_of(".eE") == std::string::npos) {
      const std::int64_t i = std::stoll(s, &pos);
      if (pos == s.size()) {
        out.v = i;
        return out;
      }
    }
    const double d = std::stod(s, &pos);
    if (pos == s.size()) {
      out.v = d;
      return out;
    }
  } catch (const std::exception&) {
    // falls through to the error below
  }
  throw ConfigError(line_no, "cannot parse value '" + s + "'");
}

TomlTable parse_toml(const std::string& text) {
  TomlTable table;
  std::string current;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(line_no, "unterminated table header");
      current = trim(line.substr(1, line.size() - 2));
      if (current.empty()) throw ConfigError(line_no, "empty table name");
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(line_no, "expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(line_no, "empty key");
    const std::string full = current.empty() ? key : current + "." + key;
    if (table.count(full)) {
      throw ConfigError(line_no, "duplicate key '" + full + "'");
    }
    table[full] = parse_value(line.substr(eq + 1), line_no);
  }
  return table;
}

// typed getters -------------------------------------------------------------

template <typename T>
const char* type_name();
template <>
const char* type_name<std::int64_t>() { return "integer"; }
template <>
const char* type_name<bool>() { return "boolean"; }
template <>
const char* type_name<std::string>() { return "string"; }

double as_double(const TomlValue& v, const std::string& key) {
  if (std::holds_alternative<double>(v.v)) return std::get<double>(v.v);
  if (std::holds_alternative<std::int64_t>(v.v)) {
    return static_cast<double>(std::get<std::int64_t>(v.v));
  }
  throw ConfigError(v.line, "'" + key + "' must be a number");
}

class Reader {
 public:
  explicit Reader(TomlTable table) : table_(std::move(table)) {}

  bool has(const std::string& key) {
    const auto it = table_.find(key);
    if (it == table_.end()) return false;
    seen_.insert(key);
    return true;
  }
  const TomlValue& at(const std::string& key) { return table_.at(key); }

  void get(const std::string& key, int& out) {
    if (!has(key)) return;
    out = static_cast<int>(as<std::int64_t>(at(key), key));
  }
  void get(const std::string& key, std::int64_t& out) {
    if (!has(key)) return;
    out = as<std::int64_t>(at(key), key);
  }
  void get(const std::string& key, std::uint64_t& out) {
    if (!has(key)) return;
    const auto v = as<std::int64_t>(at(key), key);
    if (v < 0) throw ConfigError(at(key).line, "'" + key + "' must be >= 0");
    out = static_cast<std::uint64_t>(v);
  }
  void get(const std::string& key, double& out) {
    if (!has(key)) return;
    out = as_double(at(key), key);
  }
  void get(const std::string& key, bool& out) {
    if (!has(key)) return;
    out = as<bool>(at(key), key);
  }
  void get(const std::string& key, std::string& out) {
    if (!has(key)) return;
    out = as<std::string>(at(key), key);
  }
  void get(const std::string& key, std::vector<std::string>& out) {
    if (!has(key)) return;
    const auto& items = as<std::vector<TomlValue>>(at(key), key);
    out.clear();
    for (const auto& item : items) out.push_back(as<std::string>(item, key));
  }
  void get(const std::string& key, std::vector<std::uint64_t>& out) {
    if (!has(key)) return;
    const auto& items = as<std::vector<TomlValue>>(at(key), key);
    out.clear();
    for (const auto& item : items) {
      const auto v = as<std::int64_t>(item, key);
      if (v < 0) throw ConfigError(item.line, "'" + key + "' entries must be >= 0");
      out.push_back(static_cast<std::uint64_t>(v));
    }
  }
  void get(const std::string& key, std::vector<double>& out) {
    if (!has(key)) return;
    const auto& items = as<std::vector<TomlValue>>(at(key), key);
    out.clear();
    for (const auto& item : items) out.push_back(as_double(item, key));
  }

  void reject_unknown() const {
    for (const auto& [key, value] : table_) {
      if (!seen_.count(key)) {
        throw ConfigError(value.line, "unknown key '" + key + "'");
      }
    }
  }

 private:
  template <typename T>
  static const T& as(const TomlValue& v, const std::string& key) {
    if (!std::holds_alternative<T>(v.v)) {
      if constexpr (std::is_same_v<T, std::vector<TomlValue>>) {
        throw ConfigError(v.line, "'" + key + "' must be an array");
      } else {
        throw ConfigError(v.line,
                          "'" + key + "' must be a " + std::string(type_name<T>()));
      }
    }
    return std::get<T>(v.v);
  }

  TomlTable table_;
  std::set<std::string> seen_;
};

}  // namespace

ExperimentConfig ExperimentConfig::desk_preset() {
  ExperimentConfig cfg;
  cfg.devices = 10;
  cfg.antennas = 10;
  cfg.rounds = 30;
  return cfg;
}

void ExperimentConfig::validate() const {
  const auto bad = [](const std::string& msg) { throw ConfigError(0, msg); };
  if (devices < 1) bad("federation.devices must be >= 1");
  if (local_epochs < 1) bad("federation.local_epochs must be >= 1");
  if (learning_rate < 0.0) bad("federation.learning_rate must be >= 0");
  if (batch_size < 1) bad("federation.batch_size must be >= 1");
  if (rounds < 1) bad("federation.rounds must be >= 1");
  if (classes_per_device < 1) bad("federation.classes_per_device must be >= 1");
  if (dirichlet_alpha <= 0.0) bad("federation.dirichlet_alpha must be > 0");
  if (hidden_units < 1) bad("model.hidden_units must be >= 1");
  if (dataset_kind != "synthetic" && dataset_kind != "mnist") {
    bad("dataset.kind must be 'synthetic' or 'mnist'");
  }
  if (dataset_kind == "synthetic") {
    if (train_samples < devices) bad("dataset.train_samples too small for the fleet");
    if (test_samples < 1) bad("dataset.test_samples must be >= 1");
    if (input_dim < 1) bad("dataset.input_dim must be >= 1");
    if (classes < 2) bad("dataset.classes must be >= 2");
    if (classes_per_device > classes) {
      bad("federation.classes_per_device exceeds dataset.classes");
    }
    if (blob_noise <= 0.0) bad("dataset.blob_noise must be > 0");
  } else {
    if (train_images.empty() || train_labels.empty() || test_images.empty() ||
        test_labels.empty()) {
      bad("dataset.kind = 'mnist' needs train/test image and label paths");
    }
  }
  if (antennas < 1) bad("channel.antennas must be >= 1");
  if (snr <= 0.0) bad("channel.snr must be > 0");
  if (fading_rate <= 0.0) bad("channel.fading_rate must be > 0");
  if (power <= 0.0) bad("channel.power must be > 0");
  if (rho <= 0.0) bad("lattice.rho must be > 0");
  const Eigen::Matrix2d scaled = rho * generator;
  if (std::abs(scaled.determinant()) <= 1e-12 * scaled.squaredNorm()) {
    bad("lattice.generator is singular after scaling");
  }
  if (second_moment_samples < 100000) {
    bad("lattice.second_moment_samples must be >= 100000 for production values");
  }
  if (schemes.empty()) bad("run.schemes must not be empty");
  for (const auto& s : schemes) {
    if (s != "fedcpu" && s != "ideal" && s != "orthogonal_quantized" &&
        s != "blind_equal") {
      bad("run.schemes entry '" + s + "' is not a known scheme");
    }
  }
  if (seeds.empty()) bad("run.seeds must not be empty");
}

ExperimentConfig parse_config(const std::string& text) {
  Reader r(parse_toml(text));
  ExperimentConfig cfg;

  r.get("federation.devices", cfg.devices);
  r.get("federation.local_epochs", cfg.local_epochs);
  r.get("federation.learning_rate", cfg.learning_rate);
  r.get("federation.batch_size", cfg.batch_size);
  r.get("federation.rounds", cfg.rounds);
  r.get("federation.classes_per_device", cfg.classes_per_device);
  r.get("federation.dirichlet_alpha", cfg.dirichlet_alpha);

  r.get("model.hidden_units", cfg.hidden_units);

  r.get("dataset.kind", cfg.dataset_kind);
  r.get("dataset.train_samples", cfg.train_samples);
  r.get("dataset.test_samples", cfg.test_samples);
  r.get("dataset.input_dim", cfg.input_dim);
  r.get("dataset.classes", cfg.classes);
  r.get("dataset.blob_noise", cfg.blob_noise);
  r.get("dataset.data_seed", cfg.data_seed);
  r.get("dataset.train_images", cfg.train_images);
  r.get("dataset.train_labels", cfg.train_labels);
  r.get("dataset.test_images", cfg.test_images);
  r.get("dataset.test_labels", cfg.test_labels);

  r.get("channel.antennas", cfg.antennas);
  r.get("channel.snr", cfg.snr);
  r.get("channel.fading_rate", cfg.fading_rate);
  r.get("channel.power", cfg.power);
  r.get("channel.channel_csv", cfg.channel_csv);

  if (r.has("lattice.generator")) {
    std::vector<double> g;
    r.get("lattice.generator", g);
    if (g.size() != 4) {
      throw ConfigError(r.at("lattice.generator").line,
                        "'lattice.generator' needs 4 row-major entries");
    }
    cfg.generator << g[0], g[1], g[2], g[3];
  }
  r.get("lattice.rho", cfg.rho);
  r.get("lattice.second_moment_samples", cfg.second_moment_samples);
  r.get("lattice.seed", cfg.lattice_seed);

  r.get("run.schemes", cfg.schemes);
  r.get("run.seeds", cfg.seeds);
  r.get("run.output_dir", cfg.output_dir);
  r.get("run.omit_timing", cfg.omit_timing);

  r.reject_unknown();
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(0, "cannot open config file " + path);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["federation"] = {{"devices", cfg.devices},
                     {"local_epochs", cfg.local_epochs},
                     {"learning_rate", cfg.learning_rate},
                     {"batch_size", cfg.batch_size},
                     {"rounds", cfg.rounds},
                     {"classes_per_device", cfg.classes_per_device},
                     {"dirichlet_alpha", cfg.dirichlet_alpha}};
  j["model"] = {{"hidden_units", cfg.hidden_units}};
  j["dataset"] = {{"kind", cfg.dataset_kind},
                  {"train_samples", cfg.train_samples},
                  {"test_samples", cfg.test_samples},
                  {"input_dim", cfg.input_dim},
                  {"classes", cfg.classes},
                  {"blob_noise", cfg.blob_noise},
                  {"data_seed", cfg.data_seed},
                  {"train_images", cfg.train_images},
                  {"train_labels", cfg.train_labels},
                  {"test_images", cfg.test_images},
                  {"test_labels", cfg.test_labels}};
  j["channel"] = {{"antennas", cfg.antennas},
                  {"snr", cfg.snr},
                  {"fading_rate", cfg.fading_rate},
                  {"power", cfg.power},
                  {"channel_csv", cfg.channel_csv}};
  j["lattice"] = {{"generator",
                   {cfg.generator(0, 0), cfg.generator(0, 1), cfg.generator(1, 0),
                    cfg.generator(1, 1)}},
                  {"rho", cfg.rho},
                  {"second_moment_samples", cfg.second_moment_samples},
                  {"seed", cfg.lattice_seed}};
  j["run"] = {{"schemes", cfg.schemes},
              {"seeds", cfg.seeds},
              {"output_dir", cfg.output_dir},
              {"omit_timing", cfg.omit_timing}};
  return j.dump(2);
}

ExperimentConfig config_from_json(const std::string& json_text) {
  const auto j = nlohmann::json::parse(json_text);
  ExperimentConfig cfg;
  const auto& f = j.at("federation");
  cfg.devices = f.at("devices");
  cfg.local_epochs = f.at("local_epochs");
  cfg.learning_rate = f.at("learning_rate");
  cfg.batch_size = f.at("batch_size");
  cfg.rounds = f.at("rounds");
  cfg.classes_per_device = f.at("classes_per_device");
  cfg.dirichlet_alpha = f.at("dirichlet_alpha");
  cfg.hidden_units = j.at("model").at("hidden_units");
  const auto& d = j.at("dataset");
  cfg.dataset_kind = d.at("kind");
  cfg.train_samples = d.at("train_samples");
  cfg.test_samples = d.at("test_samples");
  cfg.input_dim = d.at("input_dim");
  cfg.classes = d.at("classes");
  cfg.blob_noise = d.at("blob_noise");
  cfg.data_seed = d.at("data_seed");
  cfg.train_images = d.at("train_images");
  cfg.train_labels = d.at("train_labels");
  cfg.test_images = d.at("test_images");
  cfg.test_labels = d.at("test_labels");
  const auto& c = j.at("channel");
  cfg.antennas = c.at("antennas");
  cfg.snr = c.at("snr");
  cfg.fading_rate = c.at("fading_rate");
  cfg.power = c.at("power");
  cfg.channel_csv = c.at("channel_csv");
  const auto& l = j.at("lattice");
  const auto& g = l.at("generator");
  cfg.generator << g.at(0).get<double>(), g.at(1).get<double>(),
      g.at(2).get<double>(), g.at(3).get<double>();
  cfg.rho = l.at("rho");
  cfg.second_moment_samples = l.at("second_moment_samples");
  cfg.lattice_seed = l.at("seed");
  const auto& r = j.at("run");
  cfg.schemes = r.at("schemes").get<std::vector<std::string>>();
  cfg.seeds = r.at("seeds").get<std::vector<std::uint64_t>>();
  cfg.output_dir = r.at("output_dir");
  cfg.omit_timing = r.at("omit_timing");
  cfg.validate();
  return cfg;
}

}  // namespace fedcpu
