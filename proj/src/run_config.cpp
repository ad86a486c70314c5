#include "simcount/run_config.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "simcount/errors.hpp"
#include "simcount/task_io.hpp"

namespace simcount {

namespace {

enum class Kind { kUint, kReal, kBool, kUintList, kFusion, kLabelRule, kAlpha };

struct KeySpec {
  const char* name;
  Kind kind;
  const char* default_value;
};

const std::vector<KeySpec>& key_specs() {
  static const std::vector<KeySpec> specs = {
      {"alpha", Kind::kAlpha, "auto"},
      {"batch_size", Kind::kUint, "8"},
      {"count_max", Kind::kUint, "30"},
      {"count_min", Kind::kUint, "3"},
      {"d", Kind::kUint, "32"},
      {"distractors", Kind::kBool, "0"},
      {"dsm", Kind::kBool, "0"},
      {"epochs", Kind::kUint, "30"},
      {"exemplar_size", Kind::kUint, "32"},
      {"fusion", Kind::kFusion, "xs"},
      {"gamma_init", Kind::kReal, "0"},
      {"image_h", Kind::kUint, "64"},
      {"image_w", Kind::kUint, "64"},
      {"l_total", Kind::kUint, "20"},
      {"label_rule", Kind::kLabelRule, "at_least_one"},
      {"lr", Kind::kReal, "0.003"},
      {"max_steps", Kind::kUint, "0"},
      {"n_exemplars", Kind::kUint, "3"},
      {"per_cat", Kind::kUint, "10"},
      {"se", Kind::kBool, "0"},
      {"seed", Kind::kUint, "7"},
      {"sigma", Kind::kReal, "1"},
      {"sl", Kind::kBool, "0"},
      {"ss", Kind::kBool, "0"},
      {"test_categories", Kind::kUintList, "9"},
      {"train_categories", Kind::kUintList, "0,1,2,3,4,5,6,7"},
      {"val_categories", Kind::kUintList, "8"},
      {"weight_decay", Kind::kReal, "0.0001"},
      {"weight_decay_all", Kind::kBool, "0"},
      {"widths", Kind::kUintList, "16,32,32"},
  };
  return specs;
}

const KeySpec* find_spec(std::string_view key) {
  for (const auto& s : key_specs()) {
    if (key == s.name) return &s;
  }
  return nullptr;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::uint64_t to_uint(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError("config key '" + std::string(key) + "': expected a non-negative integer, got '" +
                      std::string(v) + "'");
  }
  return out;
}

double to_real(std::string_view key, std::string_view v) {
  std::istringstream in{std::string(v)};
  double out = 0;
  in >> out;
  if (!in || !in.eof() || !std::isfinite(out)) {
    throw ConfigError("config key '" + std::string(key) + "': expected a finite number, got '" + std::string(v) +
                      "'");
  }
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "1" || v == "true" || v == "on") return true;
  if (v == "0" || v == "false" || v == "off") return false;
  throw ConfigError("config key '" + std::string(key) + "': expected 0/1, got '" + std::string(v) + "'");
}

std::vector<std::uint64_t> to_list(std::string_view key, std::string_view v) {
  std::vector<std::uint64_t> out;
  if (trim(v).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = v.find(',', start);
    out.push_back(to_uint(key, trim(v.substr(start, comma - start))));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

void validate(const KeySpec& spec, std::string_view v) {
  switch (spec.kind) {
    case Kind::kUint: to_uint(spec.name, v); break;
    case Kind::kReal: to_real(spec.name, v); break;
    case Kind::kBool: to_bool(spec.name, v); break;
    case Kind::kUintList: to_list(spec.name, v); break;
    case Kind::kFusion: parse_fusion_mode(v); break;
    case Kind::kLabelRule: parse_label_rule(v); break;
    case Kind::kAlpha:
      if (v != "auto" && to_real(spec.name, v) < 0) throw ConfigError("config key 'alpha' must be >= 0 or 'auto'");
      break;
  }
}

std::vector<int> to_ids(std::string_view key, std::string_view v) {
  std::vector<int> ids;
  for (auto x : to_list(key, v)) ids.push_back(static_cast<int>(x));
  return ids;
}

}  // namespace

RunConfig::RunConfig() {
  for (const auto& s : key_specs()) values_.emplace(s.name, s.default_value);
}

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& s : key_specs()) out.emplace_back(s.name);
    return out;
  }();
  return names;
}

void RunConfig::set(std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  const KeySpec* spec = find_spec(key);
  if (spec == nullptr) throw ConfigError("unknown config key '" + std::string(key) + "'");
  try {
    validate(*spec, value);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string(e.what()));
  }
  values_.find(key)->second = std::string(value);
}

void RunConfig::set_assignment(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("expected key=value, got '" + std::string(assignment) + "'");
  }
  set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

RunConfig RunConfig::from_ini(std::string_view text) {
  RunConfig cfg;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    try {
      cfg.set_assignment(line);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) { return from_ini(read_text(path)); }

const std::string& RunConfig::get(std::string_view key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  return it->second;
}

std::string RunConfig::to_ini() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + '=' + v + '\n';
  return out;
}

std::uint64_t RunConfig::seed() const { return to_uint("seed", get("seed")); }

ModelConfig RunConfig::model() const {
  ModelConfig m;
  m.backbone.d = to_uint("d", get("d"));
  const auto widths = to_list("widths", get("widths"));
  if (widths.size() != 3) throw ConfigError("config key 'widths': expected three stage widths");
  for (std::size_t i = 0; i < 3; ++i) m.backbone.widths[i] = widths[i];
  m.backbone.l_total = to_uint("l_total", get("l_total"));
  m.backbone.gamma_init = to_real("gamma_init", get("gamma_init"));
  m.backbone.exemplar_size = to_uint("exemplar_size", get("exemplar_size"));
  m.fusion = parse_fusion_mode(get("fusion"));
  m.similarity_loss = to_bool("sl", get("sl"));
  m.self_similarity = to_bool("ss", get("ss"));
  m.scale_embedding = to_bool("se", get("se"));
  m.dynamic_metric = to_bool("dsm", get("dsm"));
  m.validate();
  return m;
}

TrainConfig RunConfig::train() const {
  TrainConfig t;
  t.epochs = to_uint("epochs", get("epochs"));
  t.batch_size = to_uint("batch_size", get("batch_size"));
  t.n_exemplars = to_uint("n_exemplars", get("n_exemplars"));
  t.max_steps = to_uint("max_steps", get("max_steps"));
  t.optim.lr = to_real("lr", get("lr"));
  t.optim.weight_decay = to_real("weight_decay", get("weight_decay"));
  t.optim.decay_all = to_bool("weight_decay_all", get("weight_decay_all"));
  if (get("alpha") != "auto") t.alpha = to_real("alpha", get("alpha"));
  t.label_rule = parse_label_rule(get("label_rule"));
  t.sigma = to_real("sigma", get("sigma"));
  t.seed = seed();
  if (t.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (t.n_exemplars == 0 || t.n_exemplars > 3) throw ConfigError("n_exemplars must be in [1, 3]");
  if (!(t.sigma > 0)) throw ConfigError("sigma must be positive");
  return t;
}

SplitConfig RunConfig::splits() const {
  SplitConfig s;
  s.train = to_ids("train_categories", get("train_categories"));
  s.val = to_ids("val_categories", get("val_categories"));
  s.test = to_ids("test_categories", get("test_categories"));
  s.tasks_per_category = to_uint("per_cat", get("per_cat"));
  s.seed = seed();
  s.counts = {to_uint("count_min", get("count_min")), to_uint("count_max", get("count_max"))};
  s.image = {to_uint("image_h", get("image_h")), to_uint("image_w", get("image_w"))};
  s.distractors = to_bool("distractors", get("distractors"));
  if (s.counts.min < 1 || s.counts.max < s.counts.min) throw ConfigError("count range must satisfy 1 <= min <= max");
  if (s.image.h % BackboneConfig::kStride != 0 || s.image.w % BackboneConfig::kStride != 0 || s.image.h == 0 ||
      s.image.w == 0) {
    throw ConfigError("image size must be a positive multiple of " + std::to_string(BackboneConfig::kStride));
  }
  return s;
}

void RunConfig::apply_variant(std::string_view variant) {
  if (variant == "bmnet") {
    set("sl", "0");
    set("ss", "0");
    set("se", "0");
    set("dsm", "0");
    set("alpha", "0");
  } else if (variant == "bmnet+") {
    set("sl", "1");
    set("ss", "1");
    set("se", "1");
    set("dsm", "1");
  } else {
    throw ConfigError("unknown variant '" + std::string(variant) + "' (expected bmnet or bmnet+)");
  }
}

void RunConfig::set_category_count(std::size_t n) {
  if (n < 3 || n > default_categories().size()) {
    throw ConfigError("--categories must be in [3, " + std::to_string(default_categories().size()) + "]");
  }
  std::string train;
  for (std::size_t i = 0; i + 2 < n; ++i) train += (i ? "," : "") + std::to_string(i);
  set("train_categories", train);
  set("val_categories", std::to_string(n - 2));
  set("test_categories", std::to_string(n - 1));
}

}  // namespace simcount
