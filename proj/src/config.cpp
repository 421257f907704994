// Copyright 2026 The MVZigAL Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mvzigal/config.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <vector>

#include "mvzigal/errors.hpp"

namespace mvz {

namespace {

constexpr std::array<std::pair<Method, std::string_view>, 8> kMethods{{
    {Method::kMvPg, "mv-pg"},
    {Method::kMvDpo, "mv-dpo"},
    {Method::kMvRdl, "mv-rdl"},
    {Method::kMvZigal, "mv-zigal"},
    {Method::kZigal, "zigal"},
    {Method::kWsZigal, "ws-zigal"},
    {Method::kMvcZigpg, "mvc-zigpg"},
    {Method::kMvcZigal, "mvc-zigal"},
}};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view what, std::string_view value) {
  throw ConfigError(std::string(key) + ": expected " + std::string(what) + ", got '" +
                    std::string(value) + "'");
}

template <class T>
T parse_number(std::string_view key, std::string_view value, std::string_view what) {
  T out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end || value.empty()) bad_value(key, what, value);
  return out;
}

double to_double(std::string_view key, std::string_view value) {
  const double out = parse_number<double>(key, value, "a real number");
  if (!std::isfinite(out)) bad_value(key, "a finite real number", value);
  return out;
}

int to_int(std::string_view key, std::string_view value) {
  return parse_number<int>(key, value, "an integer");
}

std::uint64_t to_u64(std::string_view key, std::string_view value) {
  return parse_number<std::uint64_t>(key, value, "a non-negative integer");
}

bool to_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, "true or false", value);
}

std::vector<std::string_view> split_list(std::string_view value) {
  if (!value.empty() && value.front() == '(' && value.back() == ')') {
    value = value.substr(1, value.size() - 2);
  }
  std::vector<std::string_view> out;
  if (trim(value).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = value.find(',', start);
    out.push_back(trim(value.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::pair<double, double> to_pair(std::string_view key, std::string_view value) {
  const auto parts = split_list(value);
  if (parts.size() != 2) bad_value(key, "two comma-separated reals", value);
  return {to_double(key, parts[0]), to_double(key, parts[1])};
}

void require(bool ok, std::string_view key, std::string_view rule) {
  if (!ok) throw ConfigError(std::string(key) + " must be " + std::string(rule));
}

std::string fmt(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

struct KeySpec {
  std::string_view name;
  std::function<void(TrainConfig&, std::string_view key, std::string_view)> set;
  std::function<std::string(const TrainConfig&)> get;  // empty for aliases
};

#define MVZ_INT(NAME, FIELD, RULE, CHECK)                                          \
  KeySpec{NAME,                                                                   \
          [](TrainConfig& c, std::string_view k, std::string_view v) {            \
            const int x = to_int(k, v);                                           \
            require(CHECK, k, RULE);                                              \
            c.FIELD = x;                                                          \
          },                                                                      \
          [](const TrainConfig& c) { return std::to_string(c.FIELD); }}

#define MVZ_REAL(NAME, FIELD, RULE, CHECK)                                         \
  KeySpec{NAME,                                                                   \
          [](TrainConfig& c, std::string_view k, std::string_view v) {            \
            const double x = to_double(k, v);                                     \
            require(CHECK, k, RULE);                                              \
            c.FIELD = x;                                                          \
          },                                                                      \
          [](const TrainConfig& c) { return fmt(c.FIELD); }}

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = {
      KeySpec{"method",
              [](TrainConfig& c, std::string_view, std::string_view v) {
                c.method = parse_method(v);
              },
              [](const TrainConfig& c) { return method_name(c.method); }},
      KeySpec{"seed",
              [](TrainConfig& c, std::string_view k, std::string_view v) { c.seed = to_u64(k, v); },
              [](const TrainConfig& c) { return std::to_string(c.seed); }},

      MVZ_INT("model.dim", model.dim, ">= 2", x >= 2),
      MVZ_INT("model.views", model.views, ">= 1", x >= 1),
      MVZ_INT("model.steps", model.steps, "in [2, 16]", x >= 2 && x <= 16),
      MVZ_INT("model.prompts", model.prompts, ">= 1", x >= 1),
      MVZ_INT("model.hidden", model.hidden, ">= 1", x >= 1),
      MVZ_INT("model.embed_dim", model.embed_dim, ">= 1", x >= 1),

      MVZ_REAL("schedule.beta_start", beta_start, "in (0, 1)", x > 0.0 && x < 1.0),
      MVZ_REAL("schedule.beta_end", beta_end, "in (0, 1)", x > 0.0 && x < 1.0),

      MVZ_REAL("scene.gamma", scene_gamma, ">= 0", x >= 0.0),
      KeySpec{"scene.seed",
              [](TrainConfig& c, std::string_view k, std::string_view v) {
                c.scene_seed = to_u64(k, v);
              },
              [](const TrainConfig& c) { return std::to_string(c.scene_seed); }},

      MVZ_REAL("guidance.omega_high", guidance.omega_high, ">= 0", x >= 0.0),
      MVZ_REAL("guidance.omega_low", guidance.omega_low, ">= 0", x >= 0.0),
      KeySpec{"guidance.scales",
              [](TrainConfig& c, std::string_view k, std::string_view v) {
                const auto [hi, lo] = to_pair(k, v);
                require(hi >= 0.0 && lo >= 0.0, k, "non-negative");
                c.guidance.omega_high = hi;
                c.guidance.omega_low = lo;
              },
              nullptr},

      KeySpec{"zigzag.mode",
              [](TrainConfig& c, std::string_view, std::string_view v) {
                c.zigzag.mode = parse_zigzag_mode(std::string(v));
              },
              [](const TrainConfig& c) { return zigzag_mode_name(c.zigzag.mode); }},
      KeySpec{"zigzag.steps",
              [](TrainConfig& c, std::string_view k, std::string_view v) {
                std::vector<int> steps;
                for (auto part : split_list(v)) steps.push_back(to_int(k, part));
                c.zigzag.steps = std::move(steps);
              },
              [](const TrainConfig& c) {
                std::string out;
                for (std::size_t i = 0; i < c.zigzag.steps.size(); ++i) {
                  if (i) out += ", ";
                  out += std::to_string(c.zigzag.steps[i]);
                }
                return out;
              }},
      MVZ_INT("zigzag.passes", zigzag.passes, ">= 1", x >= 1),

      MVZ_INT("pretrain.steps", pretrain.steps, ">= 0", x >= 0),
      MVZ_INT("pretrain.batch", pretrain.batch, ">= 1", x >= 1),
      MVZ_REAL("pretrain.lr", pretrain.lr, "> 0", x > 0.0),
      MVZ_REAL("pretrain.dropout", pretrain.dropout, "in [0, 1]", x >= 0.0 && x <= 1.0),

      MVZ_INT("train.epochs", epochs, ">= 0", x >= 0),
      MVZ_INT("train.inner_epochs", inner_epochs, ">= 1", x >= 1),
      MVZ_INT("train.batch", batch, ">= 1", x >= 1),
      MVZ_INT("train.batches_per_epoch", batches_per_epoch, ">= 1", x >= 1),
      MVZ_INT("train.grad_accum", grad_accum, ">= 1", x >= 1),
      MVZ_REAL("train.lr", adam.lr, "> 0", x > 0.0),
      MVZ_REAL("train.beta1", adam.beta1, "in [0, 1)", x >= 0.0 && x < 1.0),
      MVZ_REAL("train.beta2", adam.beta2, "in [0, 1)", x >= 0.0 && x < 1.0),
      KeySpec{"train.betas",
              [](TrainConfig& c, std::string_view k, std::string_view v) {
                const auto [b1, b2] = to_pair(k, v);
                require(b1 >= 0.0 && b1 < 1.0 && b2 >= 0.0 && b2 < 1.0, k, "in [0, 1)");
                c.adam.beta1 = b1;
                c.adam.beta2 = b2;
              },
              nullptr},
      MVZ_REAL("train.eps", adam.eps, "> 0", x > 0.0),
      MVZ_REAL("train.weight_decay", adam.weight_decay, ">= 0", x >= 0.0),
      MVZ_REAL("train.max_grad_norm", max_grad_norm, "> 0", x > 0.0),
      MVZ_INT("train.checkpoint_every", checkpoint_every, ">= 0", x >= 0),
      KeySpec{"train.record_wall_time",
              [](TrainConfig& c, std::string_view k, std::string_view v) {
                c.record_wall_time = to_bool(k, v);
              },
              [](const TrainConfig& c) {
                return std::string(c.record_wall_time ? "true" : "false");
              }},

      MVZ_REAL("objective.eta", objective.eta, "> 0", x > 0.0),
      MVZ_REAL("objective.beta_dpo", objective.beta_dpo, "> 0", x > 0.0),
      MVZ_REAL("objective.w_mv", objective.w_mv, ">= 0", x >= 0.0),
      MVZ_REAL("objective.prob_floor", objective.prob_floor, "in (0, 1)", x > 0.0 && x < 1.0),

      KeySpec{"normalize.mode",
              [](TrainConfig& c, std::string_view k, std::string_view v) {
                if (v == "running") {
                  c.normalize_mode = NormalizationMode::kRunning;
                } else if (v == "batch") {
                  c.normalize_mode = NormalizationMode::kBatch;
                } else {
                  bad_value(k, "running or batch", v);
                }
              },
              [](const TrainConfig& c) { return normalization_mode_name(c.normalize_mode); }},
      MVZ_REAL("normalize.decay", normalize_decay, "in [0, 1)", x >= 0.0 && x < 1.0),
      MVZ_REAL("normalize.epsilon", normalize_epsilon, "> 0", x > 0.0),

      MVZ_REAL("controller.alpha_plus", controller.alpha_plus, ">= 0", x >= 0.0),
      MVZ_REAL("controller.alpha_minus", controller.alpha_minus, ">= 0", x >= 0.0),
      MVZ_REAL("controller.beta_tau", controller.beta_tau, "in [0, 1)", x >= 0.0 && x < 1.0),
      MVZ_REAL("controller.lambda_init", controller.lambda_init, ">= 0", x >= 0.0),
      MVZ_REAL("controller.lambda_max", controller.lambda_max, ">= 0", x >= 0.0),
      KeySpec{"controller.tau_mode",
              [](TrainConfig& c, std::string_view k, std::string_view v) {
                if (v == "self-paced") {
                  c.controller.tau_mode = TauMode::kSelfPaced;
                } else if (v == "fixed") {
                  c.controller.tau_mode = TauMode::kFixed;
                } else {
                  bad_value(k, "self-paced or fixed", v);
                }
              },
              [](const TrainConfig& c) { return tau_mode_name(c.controller.tau_mode); }},
      MVZ_REAL("controller.tau_fixed", controller.tau_fixed, "finite", true),
      KeySpec{"controller.alpha_mode",
              [](TrainConfig& c, std::string_view k, std::string_view v) {
                if (v == "adaptive") {
                  c.controller.alpha_mode = AlphaMode::kAdaptive;
                } else if (v == "fixed") {
                  c.controller.alpha_mode = AlphaMode::kFixed;
                } else {
                  bad_value(k, "adaptive or fixed", v);
                }
              },
              [](const TrainConfig& c) { return alpha_mode_name(c.controller.alpha_mode); }},
      MVZ_REAL("controller.alpha_fixed", controller.alpha_fixed, ">= 0", x >= 0.0),
      KeySpec{"controller.tau_indexing",
              [](TrainConfig& c, std::string_view k, std::string_view v) {
                if (v == "algorithm") {
                  c.controller.tau_indexing = TauIndexing::kAlgorithm;
                } else if (v == "equation") {
                  c.controller.tau_indexing = TauIndexing::kEquation;
                } else {
                  bad_value(k, "algorithm or equation", v);
                }
              },
              [](const TrainConfig& c) { return tau_indexing_name(c.controller.tau_indexing); }},

      MVZ_INT("eval.seeds", eval_seeds, ">= 1", x >= 1),
      MVZ_INT("eval.prompts", eval_prompts, ">= 0", x >= 0),
      MVZ_INT("eval.every", eval_every, ">= 0", x >= 0),
  };
  return table;
}

#undef MVZ_INT
#undef MVZ_REAL

const KeySpec& find_key(std::string_view key) {
  for (const KeySpec& spec : key_table()) {
    if (spec.name == key) return spec;
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

}  // namespace

std::string method_name(Method method) {
  for (const auto& [m, name] : kMethods) {
    if (m == method) return std::string(name);
  }
  throw ContractError("unknown method value");
}

Method parse_method(std::string_view name) {
  for (const auto& [m, n] : kMethods) {
    if (n == name) return m;
  }
  std::string known;
  for (const auto& [m, n] : kMethods) known += (known.empty() ? "" : ", ") + std::string(n);
  throw ConfigError("method: unknown method '" + std::string(name) + "' (known: " + known + ")");
}

bool uses_zigzag_pairs(Method method) {
  switch (method) {
    case Method::kMvPg:
    case Method::kMvDpo:
    case Method::kMvRdl:
      return false;
    default:
      return true;
  }
}

bool uses_pairs(Method method) { return method != Method::kMvPg; }

bool uses_controller(Method method) {
  return method == Method::kMvcZigal || method == Method::kMvcZigpg;
}

void TrainConfig::validate() const {
  model.validate();
  if (!(beta_start < beta_end)) throw ConfigError("schedule.beta_start must be < schedule.beta_end");
  guidance.validate();
  zigzag.validate(model.steps);
  objective.validate();
  controller.validate();
  if (pretrain.batch < 1) throw ConfigError("pretrain.batch must be >= 1");
  if (eval_prompts > model.prompts) throw ConfigError("eval.prompts must be <= model.prompts");
  if (grad_accum > batches_per_epoch) {
    throw ConfigError("train.grad_accum must be <= train.batches_per_epoch");
  }
}

void apply_config_value(TrainConfig& config, std::string_view key, std::string_view value) {
  find_key(key).set(config, key, trim(value));
}

TrainConfig parse_config_text(std::string_view text) {
  TrainConfig config;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    std::string_view line =
        text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (!seen.insert(std::string(key)).second) {
      throw ConfigError("duplicate config key '" + std::string(key) + "'");
    }
    apply_config_value(config, key, value);
  }
  config.validate();
  return config;
}

TrainConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string config_to_text(const TrainConfig& config) {
  std::string out;
  for (const KeySpec& spec : key_table()) {
    if (!spec.get) continue;
    out += std::string(spec.name) + " = " + spec.get(config) + "\n";
  }
  return out;
}

std::string config_hash(const TrainConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config_to_text(config)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace mvz
