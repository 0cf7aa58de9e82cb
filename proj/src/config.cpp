#include "reacher/config.hpp"

#include <fstream>
#include <sstream>

namespace reacher {

namespace {

std::vector<int> parse_int_list(const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  return out;
}

}  // namespace

void Settings::sync() {
  dataset.seed = seed;
  dataset.resolution = arch.resolution;
  train.seed = seed;
  harness.seed = seed;
  harness.resolution = arch.resolution;
  harness.oracle = dataset.oracle;
  harness.ranges = dataset.tools;
  harness.imagine = imagine;
}

Settings make_profile(const std::string& name) {
  Settings s;
  s.profile = name;
  if (name == "desk") {
    s.dataset.train_counts = {1000, 1000, 1000, 1000, 0};
    s.dataset.val_counts = {150, 150, 150, 150, 150};
    s.train.pretrain_steps = 2000;
    s.train.task_steps = 1000;
    s.imagine.max_steps = 2000;
    s.harness.selection_per_type = 100;
    s.harness.imagination_per_type = 50;
  } else if (name == "paper_scale") {
    s.arch = paper_scale_arch();
    s.dataset.train_counts = {4000, 4000, 4000, 4000, 0};
    s.dataset.val_counts = {500, 500, 500, 500, 500};
    s.train.pretrain_steps = 10000;
    s.train.task_steps = 5000;
    s.imagine.max_steps = 10000;
    s.harness.selection_per_type = 250;
    s.harness.imagination_per_type = 250;
  } else if (name == "ci") {
    s.arch.resolution = 32;
    s.arch.encoder_channels = {4, 8};
    s.arch.z_g = 16;
    s.arch.z_t = 16;
    s.arch.classifier_hidden = {32, 16};
    s.arch.decoder_hidden = {64, 128};
    s.dataset.train_counts = {8, 8, 8, 8, 0};
    s.dataset.val_counts = {4, 4, 4, 4, 4};
    s.train.pretrain_steps = 12;
    s.train.task_steps = 8;
    s.train.batch = 4;
    s.train.val_cadence = 4;
    s.imagine.max_steps = 25;
    s.imagine.snapshot_cadence = 5;
    s.harness.selection_per_type = 4;
    s.harness.imagination_per_type = 2;
    s.harness.strip_samples = 1;
  } else {
    throw std::invalid_argument("unknown profile: " + name);
  }
  s.sync();
  return s;
}

void apply_key(Settings& s, const std::string& key, const std::string& value) {
  auto as_d = [&] { return std::stod(value); };
  auto as_i = [&] { return std::stoi(value); };
  auto as_u64 = [&] { return static_cast<uint64_t>(std::stoull(value)); };
  auto as_b = [&] {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw std::invalid_argument("boolean expected for " + key);
  };

  if (key == "seed") s.seed = as_u64();
  else if (key == "arch.resolution") s.arch.resolution = as_i();
  else if (key == "arch.encoder_channels") s.arch.encoder_channels = parse_int_list(value);
  else if (key == "arch.kernel") s.arch.kernel = as_i();
  else if (key == "arch.pad") s.arch.pad = as_i();
  else if (key == "arch.z_g") s.arch.z_g = as_i();
  else if (key == "arch.z_t") s.arch.z_t = as_i();
  else if (key == "arch.classifier_hidden") s.arch.classifier_hidden = parse_int_list(value);
  else if (key == "arch.decoder_hidden") s.arch.decoder_hidden = parse_int_list(value);
  else if (key == "dataset.train_counts") {
    auto v = parse_int_list(value);
    if (v.size() != 5) throw std::invalid_argument("dataset.train_counts needs 5 values");
    std::copy(v.begin(), v.end(), s.dataset.train_counts.begin());
  } else if (key == "dataset.val_counts") {
    auto v = parse_int_list(value);
    if (v.size() != 5) throw std::invalid_argument("dataset.val_counts needs 5 values");
    std::copy(v.begin(), v.end(), s.dataset.val_counts.begin());
  } else if (key == "dataset.balance_budget") s.dataset.balance_budget = as_i();
  else if (key == "dataset.target_radius") s.dataset.target_radius = as_d();
  else if (key == "dataset.boundary_band_px") s.dataset.boundary_band_px = as_i();
  else if (key == "oracle.n_interior_points") s.dataset.oracle.n_interior_points = as_i();
  else if (key == "oracle.rotation_min_deg") s.dataset.oracle.rotation_min_deg = as_d();
  else if (key == "oracle.rotation_max_deg") s.dataset.oracle.rotation_max_deg = as_d();
  else if (key == "oracle.rotation_steps") s.dataset.oracle.rotation_steps = as_i();
  else if (key == "tools.stick_prob") s.dataset.tools.stick_prob = as_d();
  else if (key == "tools.handle_length_min") s.dataset.tools.handle_length_min = as_d();
  else if (key == "tools.handle_length_max") s.dataset.tools.handle_length_max = as_d();
  else if (key == "tools.handle_width_min") s.dataset.tools.handle_width_min = as_d();
  else if (key == "tools.handle_width_max") s.dataset.tools.handle_width_max = as_d();
  else if (key == "tools.hook_length_min") s.dataset.tools.hook_length_min = as_d();
  else if (key == "tools.hook_length_max") s.dataset.tools.hook_length_max = as_d();
  else if (key == "train.lr") s.train.lr = as_d();
  else if (key == "train.batch") s.train.batch = as_i();
  else if (key == "train.pretrain_steps") s.train.pretrain_steps = as_i();
  else if (key == "train.task_steps") s.train.task_steps = as_i();
  else if (key == "train.mu") s.train.mu = as_d();
  else if (key == "train.val_cadence") s.train.val_cadence = as_i();
  else if (key == "train.val_subset") s.train.val_subset = as_i();
  else if (key == "imagine.eta") s.imagine.eta = as_d();
  else if (key == "imagine.max_steps") s.imagine.max_steps = as_i();
  else if (key == "imagine.gamma") s.imagine.gamma = as_d();
  else if (key == "imagine.snapshot_cadence") s.imagine.snapshot_cadence = as_i();
  else if (key == "imagine.literal_sign") s.imagine.literal_sign = as_b();
  else if (key == "imagine.rw_scale") s.imagine.rw_scale = as_d();
  else if (key == "imagine.binarize_threshold") s.imagine.binarize_threshold = as_d();
  else if (key == "harness.selection_per_type") s.harness.selection_per_type = as_i();
  else if (key == "harness.imagination_per_type") s.harness.imagination_per_type = as_i();
  else if (key == "harness.scenario_budget") s.harness.scenario_budget = as_i();
  else if (key == "harness.probe_budget") s.harness.probe_budget = as_i();
  else if (key == "harness.strip_samples") s.harness.strip_samples = as_i();
  else throw std::invalid_argument("unknown config key: " + key);
  s.sync();
}

void apply_config_file(Settings& s, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config file: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      bool blank = true;
      for (char c : line) blank = blank && std::isspace(static_cast<unsigned char>(c));
      if (blank) continue;
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    }
    auto trim = [](std::string v) {
      const auto b = v.find_first_not_of(" \t\r");
      const auto e = v.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
    };
    apply_key(s, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

std::string Settings::dump() const {
  std::ostringstream o;
  auto list = [](const std::vector<int>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
  };
  o << "profile = " << profile << "\n";
  o << "seed = " << seed << "\n";
  o << "arch.resolution = " << arch.resolution << "\n";
  o << "arch.encoder_channels = " << list(arch.encoder_channels) << "\n";
  o << "arch.kernel = " << arch.kernel << "\n";
  o << "arch.pad = " << arch.pad << "\n";
  o << "arch.z_g = " << arch.z_g << "\n";
  o << "arch.z_t = " << arch.z_t << "\n";
  o << "arch.classifier_hidden = " << list(arch.classifier_hidden) << "\n";
  o << "arch.decoder_hidden = " << list(arch.decoder_hidden) << "\n";
  o << "dataset.train_counts = " << list({dataset.train_counts.begin(), dataset.train_counts.end()}) << "\n";
  o << "dataset.val_counts = " << list({dataset.val_counts.begin(), dataset.val_counts.end()}) << "\n";
  o << "dataset.balance_budget = " << dataset.balance_budget << "\n";
  o << "oracle.n_interior_points = " << dataset.oracle.n_interior_points << "\n";
  o << "oracle.rotation_min_deg = " << dataset.oracle.rotation_min_deg << "\n";
  o << "oracle.rotation_max_deg = " << dataset.oracle.rotation_max_deg << "\n";
  o << "oracle.rotation_steps = " << dataset.oracle.rotation_steps << "\n";
  o << "tools.stick_prob = " << dataset.tools.stick_prob << "\n";
  o << "tools.handle_length_min = " << dataset.tools.handle_length_min << "\n";
  o << "tools.handle_length_max = " << dataset.tools.handle_length_max << "\n";
  o << "tools.handle_width_min = " << dataset.tools.handle_width_min << "\n";
  o << "tools.handle_width_max = " << dataset.tools.handle_width_max << "\n";
  o << "tools.hook_length_min = " << dataset.tools.hook_length_min << "\n";
  o << "tools.hook_length_max = " << dataset.tools.hook_length_max << "\n";
  o << "train.lr = " << train.lr << "\n";
  o << "train.batch = " << train.batch << "\n";
  o << "train.pretrain_steps = " << train.pretrain_steps << "\n";
  o << "train.task_steps = " << train.task_steps << "\n";
  o << "train.mu = " << train.mu << "\n";
  o << "train.val_cadence = " << train.val_cadence << "\n";
  o << "train.val_subset = " << train.val_subset << "\n";
  o << "imagine.eta = " << imagine.eta << "\n";
  o << "imagine.max_steps = " << imagine.max_steps << "\n";
  o << "imagine.gamma = " << imagine.gamma << "\n";
  o << "imagine.snapshot_cadence = " << imagine.snapshot_cadence << "\n";
  o << "imagine.literal_sign = " << (imagine.literal_sign ? "true" : "false") << "\n";
  o << "imagine.rw_scale = " << imagine.rw_scale << "\n";
  o << "imagine.binarize_threshold = " << imagine.binarize_threshold << "\n";
  o << "harness.selection_per_type = " << harness.selection_per_type << "\n";
  o << "harness.imagination_per_type = " << harness.imagination_per_type << "\n";
  o << "harness.scenario_budget = " << harness.scenario_budget << "\n";
  o << "harness.probe_budget = " << harness.probe_budget << "\n";
  o << "harness.strip_samples = " << harness.strip_samples << "\n";
  return o.str();
}

}  // namespace reacher
