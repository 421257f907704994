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

#include "mvzigal/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mvzigal/errors.hpp"

namespace mvz {

namespace {

using nlohmann::json;

json array_json(const DenseArray& a) {
  return json{{"shape", a.shape()}, {"values", a.storage()}};
}

DenseArray array_from(const json& j) {
  Shape shape = j.at("shape").get<Shape>();
  std::vector<double> values = j.at("values").get<std::vector<double>>();
  if (shape_size(shape) != values.size()) throw FormatError("checkpoint array size mismatch");
  return DenseArray(std::move(shape), std::move(values));
}

json arrays_json(const std::vector<DenseArray>& arrays) {
  json out = json::array();
  for (const DenseArray& a : arrays) out.push_back(array_json(a));
  return out;
}

std::vector<DenseArray> arrays_from(const json& j) {
  std::vector<DenseArray> out;
  for (const json& a : j) out.push_back(array_from(a));
  return out;
}

json stat_json(const RunningStat& s) {
  return json{{"mean", s.mean}, {"var", s.var}, {"count", s.count}};
}

RunningStat stat_from(const json& j) {
  RunningStat s;
  s.mean = j.at("mean").get<double>();
  s.var = j.at("var").get<double>();
  s.count = j.at("count").get<std::uint64_t>();
  return s;
}

}  // namespace

std::string checkpoint_to_json(const Checkpoint& ckpt) {
  const ModelSpec& spec = ckpt.params.spec;
  json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["model"] = {{"dim", spec.dim},         {"views", spec.views},   {"steps", spec.steps},
                {"prompts", spec.prompts}, {"hidden", spec.hidden}, {"embed_dim", spec.embed_dim}};
  j["schedule"] = {{"steps", ckpt.schedule.steps},
                   {"beta_start", ckpt.schedule.beta_start},
                   {"beta_end", ckpt.schedule.beta_end},
                   {"alphabar", ckpt.schedule.alphabar}};
  json params = json::array();
  const auto& names = DenoiserParams::names();
  for (std::size_t s = 0; s < ckpt.params.arrays.size(); ++s) {
    json a = array_json(ckpt.params.arrays[s]);
    a["name"] = names[s];
    params.push_back(std::move(a));
  }
  j["params"] = std::move(params);
  j["config_hash"] = ckpt.config_hash;
  if (ckpt.trainer) {
    const TrainerState& st = *ckpt.trainer;
    j["trainer"] = {
        {"epoch", st.epoch},
        {"controller",
         {{"lambda", st.controller.lambda},
          {"tau", st.controller.tau},
          {"initialized", st.controller.initialized}}},
        {"normalizer",
         {{"single", stat_json(st.normalizer.single)}, {"joint", stat_json(st.normalizer.joint)}}},
        {"optimizer",
         {{"steps", st.optimizer.steps()},
          {"m", arrays_json(st.optimizer.first_moments())},
          {"v", arrays_json(st.optimizer.second_moments())}}},
    };
  }
  return j.dump(1) + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    const int version = j.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion) {
      throw FormatError("unsupported checkpoint format_version " + std::to_string(version));
    }
    Checkpoint ckpt;
    ModelSpec spec;
    const json& m = j.at("model");
    spec.dim = m.at("dim").get<int>();
    spec.views = m.at("views").get<int>();
    spec.steps = m.at("steps").get<int>();
    spec.prompts = m.at("prompts").get<int>();
    spec.hidden = m.at("hidden").get<int>();
    spec.embed_dim = m.at("embed_dim").get<int>();
    spec.validate();
    const json& s = j.at("schedule");
    ckpt.schedule = build_noise_schedule(s.at("steps").get<int>(), s.at("beta_start").get<double>(),
                                         s.at("beta_end").get<double>());
    if (s.at("alphabar").get<std::vector<double>>() != ckpt.schedule.alphabar) {
      throw FormatError("checkpoint schedule constants do not match their rebuilt values");
    }
    DenoiserParams params = DenoiserParams::initialize(spec, 0);
    const json& arrays = j.at("params");
    const auto& names = DenoiserParams::names();
    if (arrays.size() != params.arrays.size()) throw FormatError("checkpoint array count mismatch");
    for (std::size_t k = 0; k < arrays.size(); ++k) {
      if (arrays[k].at("name").get<std::string>() != names[k]) {
        throw FormatError("checkpoint array " + std::to_string(k) + " is not '" + names[k] + "'");
      }
      DenseArray a = array_from(arrays[k]);
      if (a.shape() != params.arrays[k].shape()) {
        throw FormatError(std::string("checkpoint array '") + names[k] + "' has shape " +
                          shape_to_string(a.shape()));
      }
      params.arrays[k] = std::move(a);
    }
    ckpt.params = std::move(params);
    ckpt.config_hash = j.value("config_hash", std::string());
    if (j.contains("trainer")) {
      const json& t = j.at("trainer");
      TrainerState st;
      st.epoch = t.at("epoch").get<int>();
      const json& c = t.at("controller");
      st.controller.lambda = c.at("lambda").get<double>();
      st.controller.tau = c.at("tau").get<double>();
      st.controller.initialized = c.at("initialized").get<bool>();
      st.normalizer.single = stat_from(t.at("normalizer").at("single"));
      st.normalizer.joint = stat_from(t.at("normalizer").at("joint"));
      const json& o = t.at("optimizer");
      st.optimizer.restore(o.at("steps").get<long long>(), arrays_from(o.at("m")),
                           arrays_from(o.at("v")));
      ckpt.trainer = std::move(st);
    }
    return ckpt;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write checkpoint '" + path + "'");
  out << checkpoint_to_json(ckpt);
  if (!out) throw FormatError("failed writing checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_json(buf.str());
}

}  // namespace mvz
