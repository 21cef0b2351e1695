#include "longvid/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace longvid {

using nlohmann::json;

TrainConfig TrainConfig::lowres_defaults() { return TrainConfig{}; }

TrainConfig TrainConfig::superres_defaults() {
  TrainConfig c;
  c.batch = 32;
  c.seq_len = 4;
  c.lr_g = 0.003;
  c.lr_d = 0.003;
  c.r1_gamma = 1.0;
  c.max_steps = 275000;
  return c;
}

namespace {

json bank_to_json(const FilterBankSpec& b) {
  return {{"n_filters", b.n_filters},
          {"k_min", b.k_min},
          {"k_max", b.k_max},
          {"beta", b.beta}};
}

json synthesis_to_json(const SynthesisConfig& s) {
  json scales = json::array();
  for (auto [t, sp] : s.scales) scales.push_back({t, sp});
  return {{"channels", s.channels},
          {"scales", scales},
          {"base_size", s.base_size},
          {"temporal_divisor", s.temporal_divisor},
          {"out_h", s.out_h},
          {"out_w", s.out_w},
          {"out_channels", s.out_channels},
          {"w_dim", s.w_dim},
          {"mapping_hidden", s.mapping_hidden},
          {"mapping_layers", s.mapping_layers}};
}

json disc_to_json(const DiscConfig& d) {
  return {{"in_channels", d.in_channels},
          {"base_channels", d.base_channels},
          {"max_channels", d.max_channels},
          {"blocks", d.blocks},
          {"temporal_convs", d.temporal_convs},
          {"temporal_kernel", d.temporal_kernel},
          {"hidden", d.hidden},
          {"in_t", d.in_t},
          {"in_h", d.in_h},
          {"in_w", d.in_w}};
}

json sr_to_json(const SRConfig& s) {
  return {{"low_h", s.low_h},
          {"low_w", s.low_w},
          {"factor", s.factor},
          {"latent_dim", s.latent_dim},
          {"w_dim", s.w_dim},
          {"dropout_p", s.dropout_p},
          {"stage_channels", s.stage_channels},
          {"disc_base_channels", s.disc_base_channels},
          {"disc_max_channels", s.disc_max_channels},
          {"disc_hidden", s.disc_hidden}};
}

json augment_to_json(const AugPolicy& a) {
  return {{"color", a.color},
          {"cutout", a.cutout},
          {"translation", a.translation},
          {"max_translate", a.max_translate},
          {"stretch_lo", a.stretch_lo},
          {"stretch_hi", a.stretch_hi},
          {"noise_std", a.noise_std},
          {"scale_std", a.scale_std},
          {"aniso_std", a.aniso_std},
          {"rotate_max", a.rotate_max},
          {"xfrac_std", a.xfrac_std},
          {"per_transform_prob", a.per_transform_prob}};
}

json train_to_json(const TrainConfig& t) {
  return {{"batch", t.batch},
          {"seq_len", t.seq_len},
          {"lr_g", t.lr_g},
          {"lr_d", t.lr_d},
          {"beta1", t.beta1},
          {"beta2", t.beta2},
          {"ema_beta", t.ema_beta},
          {"r1_gamma", t.r1_gamma},
          {"r1_interval", t.r1_interval},
          {"logit_drift", t.logit_drift},
          {"max_steps", t.max_steps},
          {"eval_interval", t.eval_interval},
          {"eval_segments", t.eval_segments},
          {"eval_segment_len", t.eval_segment_len},
          {"seed", t.seed}};
}

[[noreturn]] void unknown_key(const std::string& section,
                              const std::string& key) {
  throw std::invalid_argument("unknown config key: " + section + "." + key);
}

// Overwrites fields of `defaults` present in `j`; complains about the rest.
void check_keys(const json& j, const json& defaults,
                const std::string& section) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!defaults.contains(it.key())) unknown_key(section, it.key());
  }
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void bank_from_json(const json& j, FilterBankSpec& b) {
  check_keys(j, bank_to_json(b), "bank");
  read_field(j, "n_filters", b.n_filters);
  read_field(j, "k_min", b.k_min);
  read_field(j, "k_max", b.k_max);
  read_field(j, "beta", b.beta);
}

void synthesis_from_json(const json& j, SynthesisConfig& s) {
  check_keys(j, synthesis_to_json(s), "synthesis");
  read_field(j, "channels", s.channels);
  if (j.contains("scales")) {
    s.scales.clear();
    for (const auto& pair : j.at("scales")) {
      s.scales.emplace_back(pair.at(0).get<int64_t>(),
                            pair.at(1).get<int64_t>());
    }
  }
  read_field(j, "base_size", s.base_size);
  read_field(j, "temporal_divisor", s.temporal_divisor);
  read_field(j, "out_h", s.out_h);
  read_field(j, "out_w", s.out_w);
  read_field(j, "out_channels", s.out_channels);
  read_field(j, "w_dim", s.w_dim);
  read_field(j, "mapping_hidden", s.mapping_hidden);
  read_field(j, "mapping_layers", s.mapping_layers);
}

void disc_from_json(const json& j, DiscConfig& d) {
  check_keys(j, disc_to_json(d), "disc");
  read_field(j, "in_channels", d.in_channels);
  read_field(j, "base_channels", d.base_channels);
  read_field(j, "max_channels", d.max_channels);
  read_field(j, "blocks", d.blocks);
  read_field(j, "temporal_convs", d.temporal_convs);
  read_field(j, "temporal_kernel", d.temporal_kernel);
  read_field(j, "hidden", d.hidden);
  read_field(j, "in_t", d.in_t);
  read_field(j, "in_h", d.in_h);
  read_field(j, "in_w", d.in_w);
}

void sr_from_json(const json& j, SRConfig& s) {
  check_keys(j, sr_to_json(s), "superres");
  read_field(j, "low_h", s.low_h);
  read_field(j, "low_w", s.low_w);
  read_field(j, "factor", s.factor);
  read_field(j, "latent_dim", s.latent_dim);
  read_field(j, "w_dim", s.w_dim);
  read_field(j, "dropout_p", s.dropout_p);
  read_field(j, "stage_channels", s.stage_channels);
  read_field(j, "disc_base_channels", s.disc_base_channels);
  read_field(j, "disc_max_channels", s.disc_max_channels);
  read_field(j, "disc_hidden", s.disc_hidden);
}

void augment_from_json(const json& j, AugPolicy& a) {
  check_keys(j, augment_to_json(a), "augment");
  read_field(j, "color", a.color);
  read_field(j, "cutout", a.cutout);
  read_field(j, "translation", a.translation);
  read_field(j, "max_translate", a.max_translate);
  read_field(j, "stretch_lo", a.stretch_lo);
  read_field(j, "stretch_hi", a.stretch_hi);
  read_field(j, "noise_std", a.noise_std);
  read_field(j, "scale_std", a.scale_std);
  read_field(j, "aniso_std", a.aniso_std);
  read_field(j, "rotate_max", a.rotate_max);
  read_field(j, "xfrac_std", a.xfrac_std);
  read_field(j, "per_transform_prob", a.per_transform_prob);
}

void train_from_json(const json& j, TrainConfig& t,
                     const std::string& section) {
  check_keys(j, train_to_json(t), section);
  read_field(j, "batch", t.batch);
  read_field(j, "seq_len", t.seq_len);
  read_field(j, "lr_g", t.lr_g);
  read_field(j, "lr_d", t.lr_d);
  read_field(j, "beta1", t.beta1);
  read_field(j, "beta2", t.beta2);
  read_field(j, "ema_beta", t.ema_beta);
  read_field(j, "r1_gamma", t.r1_gamma);
  read_field(j, "r1_interval", t.r1_interval);
  read_field(j, "logit_drift", t.logit_drift);
  read_field(j, "max_steps", t.max_steps);
  read_field(j, "eval_interval", t.eval_interval);
  read_field(j, "eval_segments", t.eval_segments);
  read_field(j, "eval_segment_len", t.eval_segment_len);
  read_field(j, "seed", t.seed);
}

}  // namespace

json config_to_json(const ExperimentConfig& c) {
  return {{"data_root", c.data_root},
          {"out_dir", c.out_dir},
          {"seed", c.seed},
          {"bank", bank_to_json(c.bank)},
          {"synthesis", synthesis_to_json(c.synthesis)},
          {"disc", disc_to_json(c.disc)},
          {"superres", sr_to_json(c.superres)},
          {"augment", augment_to_json(c.augment)},
          {"train_lowres", train_to_json(c.train_lowres)},
          {"train_superres", train_to_json(c.train_superres)}};
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  static const std::set<std::string> sections = {
      "data_root", "out_dir",  "seed",          "bank",
      "synthesis", "disc",     "superres",      "augment",
      "train_lowres", "train_superres"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!sections.count(it.key())) unknown_key("<root>", it.key());
  }
  read_field(j, "data_root", c.data_root);
  read_field(j, "out_dir", c.out_dir);
  read_field(j, "seed", c.seed);
  if (j.contains("bank")) bank_from_json(j.at("bank"), c.bank);
  if (j.contains("synthesis")) synthesis_from_json(j.at("synthesis"), c.synthesis);
  if (j.contains("disc")) disc_from_json(j.at("disc"), c.disc);
  if (j.contains("superres")) sr_from_json(j.at("superres"), c.superres);
  if (j.contains("augment")) augment_from_json(j.at("augment"), c.augment);
  if (j.contains("train_lowres"))
    train_from_json(j.at("train_lowres"), c.train_lowres, "train_lowres");
  if (j.contains("train_superres"))
    train_from_json(j.at("train_superres"), c.train_superres, "train_superres");
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::vector<std::string>& overrides) {
  json j = json::object();
  if (!path.empty()) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot read config " + path.string());
    f >> j;
  }
  for (const auto& ov : overrides) {
    auto eq = ov.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("override must be key.path=value: " + ov);
    }
    std::string keypath = ov.substr(0, eq);
    std::string value = ov.substr(eq + 1);
    json* node = &j;
    std::stringstream ss(keypath);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    if (parts.empty()) throw std::invalid_argument("empty override key: " + ov);
    for (size_t i = 0; i + 1 < parts.size(); ++i) node = &(*node)[parts[i]];
    // Interpret the value as JSON when possible so numbers and lists work;
    // fall back to a plain string.
    json parsed = json::parse(value, nullptr, false);
    (*node)[parts.back()] = parsed.is_discarded() ? json(value) : parsed;
  }
  return config_from_json(j);
}

void dump_config(const ExperimentConfig& config,
                 const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << config_to_json(config).dump(2) << '\n';
}

}  // namespace longvid
