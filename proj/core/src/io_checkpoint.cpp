#include "patchwork/checkpoint.hpp"

#include "patchwork/error.hpp"

#include "json.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>

namespace patchwork {
namespace {

using json = nlohmann::json;

constexpr const char* kFormat = "patchwork-checkpoint";

json vec_json(const Vec3& v, int dim) {
  json a = json::array();
  for (int k = 0; k < dim; ++k) a.push_back(v[k]);
  return a;
}

Vec3 vec_from(const json& j, int dim) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim) {
    raise(ErrorCode::ParseError, "vector has the wrong length");
  }
  Vec3 v = Vec3::Zero();
  for (int k = 0; k < dim; ++k) v[k] = j.at(static_cast<std::size_t>(k)).get<double>();
  return v;
}

json model_json(const PatchworkModel& model) {
  json m;
  m["dim"] = model.dim;
  m["beta_plus"] = model.beta_plus;
  m["beta_minus"] = model.beta_minus;
  m["weightnorm"] = model.weightnorm;
  json terms = json::array();
  for (const auto& t : model.terms) {
    json jt;
    jt["a"] = vec_json(t.a, model.dim);
    jt["c"] = t.c;
    jt["log_s"] = t.log_s;
    jt["group"] = t.group == Group::Plus ? "plus" : "minus";
    jt["active"] = t.active;
    if (model.weightnorm) {
      jt["g"] = t.g;
      jt["v"] = vec_json(t.v, model.dim);
    }
    terms.push_back(std::move(jt));
  }
  m["terms"] = std::move(terms);
  return m;
}

PatchworkModel model_from(const json& m) {
  PatchworkModel model;
  model.dim = m.at("dim").get<int>();
  if (model.dim != 2 && model.dim != 3) raise(ErrorCode::ParseError, "bad dimension");
  model.beta_plus = m.at("beta_plus").get<double>();
  model.beta_minus = m.at("beta_minus").get<double>();
  model.weightnorm = m.at("weightnorm").get<bool>();
  for (const auto& jt : m.at("terms")) {
    LinearTerm t;
    t.a = vec_from(jt.at("a"), model.dim);
    t.c = jt.at("c").get<double>();
    t.log_s = jt.at("log_s").get<double>();
    const std::string g = jt.at("group").get<std::string>();
    if (g != "plus" && g != "minus") raise(ErrorCode::ParseError, "bad group '" + g + "'");
    t.group = g == "plus" ? Group::Plus : Group::Minus;
    t.active = jt.at("active").get<bool>();
    if (model.weightnorm) {
      t.g = jt.at("g").get<double>();
      t.v = vec_from(jt.at("v"), model.dim);
    }
    model.terms.push_back(t);
  }
  return model;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void spill(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  out << text;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fnv1a64_hex(std::string_view bytes) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

std::string checkpoint_to_json(const PatchworkModel& model) {
  json doc;
  doc["format"] = kFormat;
  doc["version"] = kCheckpointVersion;
  doc["model"] = model_json(model);
  const std::string body = doc.dump();
  doc["checksum"] = fnv1a64_hex(body);
  return doc.dump() + "\n";
}

PatchworkModel checkpoint_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    raise(ErrorCode::ParseError, std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (!doc.is_object() || doc.value("format", "") != kFormat) {
      raise(ErrorCode::ParseError, "not a patchwork checkpoint");
    }
    const int version = doc.at("version").get<int>();
    if (version != kCheckpointVersion) {
      raise(ErrorCode::VersionMismatch,
            "checkpoint version " + std::to_string(version) + ", this build reads " +
                std::to_string(kCheckpointVersion));
    }
    const std::string stored = doc.at("checksum").get<std::string>();
    json body = doc;
    body.erase("checksum");
    if (fnv1a64_hex(body.dump()) != stored) {
      raise(ErrorCode::CorruptCheckpoint, "checksum mismatch");
    }
    PatchworkModel model = model_from(doc.at("model"));
    model.validate();
    return model;
  } catch (const json::exception& e) {
    raise(ErrorCode::ParseError, std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const PatchworkModel& model, const std::filesystem::path& path) {
  spill(path, checkpoint_to_json(model));
}

PatchworkModel load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_json(slurp(path));
}

std::string fit_config_to_json(const FitConfig& c) {
  json j;
  j["iterations"] = c.iterations;
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.learning_rate;
  j["adam_beta1"] = c.adam_beta1;
  j["adam_beta2"] = c.adam_beta2;
  j["adam_eps"] = c.adam_eps;
  j["prune_interval"] = c.prune_interval;
  j["prune_threshold"] = c.prune_threshold;
  j["prune_disable_value"] = c.prune_disable_value;
  j["rho"] = c.rho;
  j["beta"] = c.beta;
  j["seed"] = c.seed;
  j["pruning"] = c.pruning;
  j["geometric_init"] = c.geometric_init;
  j["weightnorm"] = c.weightnorm;
  j["losses"] = {{"surface", c.losses.surface},
                 {"normal", c.losses.normal},
                 {"occupancy", c.losses.occupancy},
                 {"prune", c.losses.prune}};
  return j.dump(2) + "\n";
}

FitConfig fit_config_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    raise(ErrorCode::InvalidConfig, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) raise(ErrorCode::InvalidConfig, "config must be a JSON object");
  static const std::set<std::string> known = {
      "iterations", "batch_size", "learning_rate", "adam_beta1", "adam_beta2",
      "adam_eps", "prune_interval", "prune_threshold", "prune_disable_value",
      "rho", "beta", "seed", "pruning", "geometric_init", "weightnorm", "losses"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) raise(ErrorCode::InvalidConfig, "unknown config key '" + key + "'");
  }
  FitConfig c;
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("iterations", c.iterations);
    get("batch_size", c.batch_size);
    get("learning_rate", c.learning_rate);
    get("adam_beta1", c.adam_beta1);
    get("adam_beta2", c.adam_beta2);
    get("adam_eps", c.adam_eps);
    get("prune_interval", c.prune_interval);
    get("prune_threshold", c.prune_threshold);
    get("prune_disable_value", c.prune_disable_value);
    get("rho", c.rho);
    get("beta", c.beta);
    get("seed", c.seed);
    get("pruning", c.pruning);
    get("geometric_init", c.geometric_init);
    get("weightnorm", c.weightnorm);
    if (j.contains("losses")) {
      const json& l = j.at("losses");
      for (const auto& [key, value] : l.items()) {
        if (key != "surface" && key != "normal" && key != "occupancy" && key != "prune") {
          raise(ErrorCode::InvalidConfig, "unknown loss '" + key + "'");
        }
      }
      c.losses.surface = l.value("surface", c.losses.surface);
      c.losses.normal = l.value("normal", c.losses.normal);
      c.losses.occupancy = l.value("occupancy", c.losses.occupancy);
      c.losses.prune = l.value("prune", c.losses.prune);
    }
  } catch (const json::exception& e) {
    raise(ErrorCode::InvalidConfig, std::string("bad config value: ") + e.what());
  }
  c.validate();
  return c;
}

FitConfig load_fit_config(const std::filesystem::path& path) {
  return fit_config_from_json(slurp(path));
}

}  // namespace patchwork
