#include "lsa/run_config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace lsa {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const std::uint64_t out = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer for " + key + ": \"" + v + "\"");
  }
}

double parse_f64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config: bad number for " + key + ": \"" + v + "\"");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config: bad boolean for " + key + ": \"" + v + "\"");
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

RunConfig RunConfig::parse_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected \"key = value\", got \"" + line + "\"");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty())
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": empty key or value");

    if (key == "env.seed") cfg.seed = parse_u64(key, val);
    else if (key == "env.nodes") cfg.n_nodes = parse_u64(key, val);
    else if (key == "env.connect_radius") cfg.connect_radius = parse_f64(key, val);
    else if (key == "env.box_size") cfg.box_size = parse_f64(key, val);
    else if (key == "features.noise") cfg.feature_noise = parse_f64(key, val);
    else if (key == "features.signal") cfg.feature_signal = parse_f64(key, val);
    else if (key == "features.signal_width") cfg.signal_width = parse_u64(key, val);
    else if (key == "model.d_image") cfg.model.dims.d_image = parse_u64(key, val);
    else if (key == "model.d_angle") cfg.model.dims.d_angle = parse_u64(key, val);
    else if (key == "model.d_h") cfg.model.d_h = parse_u64(key, val);
    else if (key == "model.decoder_layers") cfg.model.decoder_layers = parse_u64(key, val);
    else if (key == "model.mask") cfg.model.mask = MaskShape::parse(val);
    else if (key == "model.iterations") cfg.model.slot_iterations = parse_u64(key, val);
    else if (key == "model.dropout") cfg.model.dropout_p = parse_f64(key, val);
    else if (key == "model.literal_alg1") cfg.model.literal_alg1 = parse_bool(key, val);
    else if (key == "model.use_slot_attention") cfg.model.use_slot_attention = parse_bool(key, val);
    else if (key == "model.stop_slot_attends") cfg.model.stop_slot_attends = parse_bool(key, val);
    else if (key == "model.step_limit") cfg.model.step_limit = parse_u64(key, val);
    else if (key == "train.learning_rate") cfg.learning_rate = parse_f64(key, val);
    else if (key == "train.steps") cfg.train_steps = parse_u64(key, val);
    else if (key == "train.batch_size") cfg.batch_size = parse_u64(key, val);
    else if (key == "episodes.count") cfg.n_episodes = parse_u64(key, val);
    else if (key == "out.dir") cfg.out_dir = val;
    else
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": unknown key \"" + key + "\"");
  }
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::parse_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return parse_text(os.str());
}

std::string RunConfig::to_text() const {
  std::ostringstream os;
  os << "# resolved run configuration\n"
     << "env.seed = " << seed << "\n"
     << "env.nodes = " << n_nodes << "\n"
     << "env.connect_radius = " << fmt_double(connect_radius) << "\n"
     << "env.box_size = " << fmt_double(box_size) << "\n"
     << "features.noise = " << fmt_double(feature_noise) << "\n"
     << "features.signal = " << fmt_double(feature_signal) << "\n"
     << "features.signal_width = " << signal_width << "\n"
     << "model.d_image = " << model.dims.d_image << "\n"
     << "model.d_angle = " << model.dims.d_angle << "\n"
     << "model.d_h = " << model.d_h << "\n"
     << "model.decoder_layers = " << model.decoder_layers << "\n"
     << "model.mask = " << model.mask.label() << "\n"
     << "model.iterations = " << model.slot_iterations << "\n"
     << "model.dropout = " << fmt_double(model.dropout_p) << "\n"
     << "model.literal_alg1 = " << (model.literal_alg1 ? "true" : "false") << "\n"
     << "model.use_slot_attention = " << (model.use_slot_attention ? "true" : "false") << "\n"
     << "model.stop_slot_attends = " << (model.stop_slot_attends ? "true" : "false") << "\n"
     << "model.step_limit = " << model.step_limit << "\n"
     << "train.learning_rate = " << fmt_double(learning_rate) << "\n"
     << "train.steps = " << train_steps << "\n"
     << "train.batch_size = " << batch_size << "\n"
     << "episodes.count = " << n_episodes << "\n";
  if (!out_dir.empty()) os << "out.dir = " << out_dir << "\n";
  return os.str();
}

FeatureSource RunConfig::feature_source() const {
  FeatureSource fs;
  fs.dims = model.dims;
  fs.seed = seed;
  fs.noise_scale = feature_noise;
  fs.signal_scale = feature_signal;
  fs.signal_width = signal_width;
  return fs;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig tc;
  tc.learning_rate = learning_rate;
  tc.steps = train_steps;
  tc.batch_size = batch_size;
  tc.seed = seed;
  return tc;
}

void RunConfig::validate() const {
  if (n_nodes < 2) throw ConfigError("config: env.nodes must be at least 2");
  if (connect_radius <= 0.0) throw ConfigError("config: env.connect_radius must be positive");
  if (box_size <= 0.0) throw ConfigError("config: env.box_size must be positive");
  if (feature_noise < 0.0) throw ConfigError("config: features.noise must be non-negative");
  if (model.dims.d_image == 0) throw ConfigError("config: model.d_image must be positive");
  if (model.dims.d_angle == 0 || model.dims.d_angle % 4 != 0)
    throw ConfigError("config: model.d_angle must be a positive multiple of 4");
  if (model.d_h == 0) throw ConfigError("config: model.d_h must be positive");
  if (model.decoder_layers == 0) throw ConfigError("config: model.decoder_layers must be positive");
  if (model.dropout_p < 0.0 || model.dropout_p >= 1.0)
    throw ConfigError("config: model.dropout must be in [0, 1)");
  if (model.step_limit == 0) throw ConfigError("config: model.step_limit must be positive");
  if (n_episodes == 0) throw ConfigError("config: episodes.count must be positive");
  TrainConfig tc = train_config();
  tc.validate();
}

}  // namespace lsa
