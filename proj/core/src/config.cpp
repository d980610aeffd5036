#include "cvgae/config.hpp"

#include <fstream>
#include <functional>
#include <map>

namespace cvgae {
namespace {

using Setter = std::function<void(TrainConfig&, const nlohmann::json&)>;

template <typename T>
Setter field_setter(T TrainConfig::*field) {
  return [field](TrainConfig& cfg, const nlohmann::json& v) { cfg.*field = v.get<T>(); };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"alpha", field_setter(&TrainConfig::alpha)},
      {"M", field_setter(&TrainConfig::M)},
      {"T1", field_setter(&TrainConfig::T1)},
      {"max_clus_iters", field_setter(&TrainConfig::max_clus_iters)},
      {"K", field_setter(&TrainConfig::K)},
      {"h", field_setter(&TrainConfig::h)},
      {"d", field_setter(&TrainConfig::d)},
      {"L", field_setter(&TrainConfig::L)},
      {"lr_pre", field_setter(&TrainConfig::lr_pre)},
      {"lr_clus", field_setter(&TrainConfig::lr_clus)},
      {"beta1", field_setter(&TrainConfig::beta1)},
      {"beta2", field_setter(&TrainConfig::beta2)},
      {"adam_eps", field_setter(&TrainConfig::adam_eps)},
      {"seed", field_setter(&TrainConfig::seed)},
      {"scale",
       [](TrainConfig& cfg, const nlohmann::json& v) {
         if (v.is_null()) {
           cfg.scale.reset();
         } else {
           cfg.scale = v.get<double>();
         }
       }},
      {"kl_weight",
       [](TrainConfig& cfg, const nlohmann::json& v) {
         if (v.is_null()) {
           cfg.kl_weight.reset();
         } else {
           cfg.kl_weight = v.get<double>();
         }
       }},
      {"stop_fraction", field_setter(&TrainConfig::stop_fraction)},
      {"no_fr", field_setter(&TrainConfig::no_fr)},
      {"no_fd", field_setter(&TrainConfig::no_fd)},
      {"no_pc", field_setter(&TrainConfig::no_pc)},
      {"no_cl", field_setter(&TrainConfig::no_cl)},
      {"include_self_pairs", field_setter(&TrainConfig::include_self_pairs)},
      {"l3_full_gradient", field_setter(&TrainConfig::l3_full_gradient)},
      {"refine_all_members", field_setter(&TrainConfig::refine_all_members)},
      {"nmi_norm", field_setter(&TrainConfig::nmi_norm)},
      {"au_delta", field_setter(&TrainConfig::au_delta)},
      {"kmeans_iters", field_setter(&TrainConfig::kmeans_iters)},
      {"kmeans_tol", field_setter(&TrainConfig::kmeans_tol)},
      {"diagnostics", field_setter(&TrainConfig::diagnostics)},
  };
  return table;
}

}  // namespace

void TrainConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& why) {
    throw ConfigError("config key '" + key + "': " + why);
  };
  if (!(alpha > 0.0)) fail("alpha", "must be > 0");
  if (M < 1) fail("M", "must be >= 1");
  if (h < 1) fail("h", "must be >= 1");
  if (d < 1) fail("d", "must be >= 1");
  if (L < 1) fail("L", "must be >= 1");
  if (K == 1) fail("K", "must be >= 2 (or 0 to infer from labels)");
  if (!(stop_fraction > 0.0 && stop_fraction <= 1.0)) fail("stop_fraction", "must lie in (0, 1]");
  if (!(lr_pre > 0.0)) fail("lr_pre", "must be > 0");
  if (!(lr_clus > 0.0)) fail("lr_clus", "must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) fail("beta1", "must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) fail("beta2", "must lie in [0, 1)");
  if (!(adam_eps > 0.0)) fail("adam_eps", "must be > 0");
  if (scale && !(*scale > 0.0)) fail("scale", "must be > 0 or null");
  if (kl_weight && !(*kl_weight >= 0.0)) fail("kl_weight", "must be >= 0 or null");
  if (!(au_delta >= 0.0)) fail("au_delta", "must be >= 0");
  if (nmi_norm != "arithmetic" && nmi_norm != "geometric" && nmi_norm != "min" &&
      nmi_norm != "max") {
    fail("nmi_norm", "must be one of arithmetic, geometric, min, max");
  }
}

double TrainConfig::resolved_scale(std::size_t num_nodes) const {
  if (scale) return *scale;
  const double n = static_cast<double>(num_nodes);
  return 1.0 / (n * n);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t TrainConfig::model_hash() const {
  const nlohmann::json j = {{"h", h},
                            {"d", d},
                            {"seed", seed},
                            {"T1", T1},
                            {"L", L},
                            {"lr_pre", lr_pre},
                            {"beta1", beta1},
                            {"beta2", beta2},
                            {"adam_eps", adam_eps},
                            {"scale", scale ? nlohmann::json(*scale) : nlohmann::json(nullptr)},
                            {"kl_weight", kl_weight ? nlohmann::json(*kl_weight)
                                                                      : nlohmann::json(nullptr)},
                            {"include_self_pairs", include_self_pairs}};
  return fnv1a64(j.dump());
}

nlohmann::json to_json(const TrainConfig& cfg) {
  nlohmann::json j;
  j["alpha"] = cfg.alpha;
  j["M"] = cfg.M;
  j["T1"] = cfg.T1;
  j["max_clus_iters"] = cfg.max_clus_iters;
  j["K"] = cfg.K;
  j["h"] = cfg.h;
  j["d"] = cfg.d;
  j["L"] = cfg.L;
  j["lr_pre"] = cfg.lr_pre;
  j["lr_clus"] = cfg.lr_clus;
  j["beta1"] = cfg.beta1;
  j["beta2"] = cfg.beta2;
  j["adam_eps"] = cfg.adam_eps;
  j["seed"] = cfg.seed;
  j["scale"] = cfg.scale ? nlohmann::json(*cfg.scale) : nlohmann::json(nullptr);
  j["kl_weight"] =
      cfg.kl_weight ? nlohmann::json(*cfg.kl_weight) : nlohmann::json(nullptr);
  j["stop_fraction"] = cfg.stop_fraction;
  j["no_fr"] = cfg.no_fr;
  j["no_fd"] = cfg.no_fd;
  j["no_pc"] = cfg.no_pc;
  j["no_cl"] = cfg.no_cl;
  j["include_self_pairs"] = cfg.include_self_pairs;
  j["l3_full_gradient"] = cfg.l3_full_gradient;
  j["refine_all_members"] = cfg.refine_all_members;
  j["nmi_norm"] = cfg.nmi_norm;
  j["au_delta"] = cfg.au_delta;
  j["kmeans_iters"] = cfg.kmeans_iters;
  j["kmeans_tol"] = cfg.kmeans_tol;
  j["diagnostics"] = cfg.diagnostics;
  return j;
}

TrainConfig config_from_json(const nlohmann::json& j, TrainConfig base) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  const auto& table = setters();
  for (const auto& [key, value] : j.items()) {
    auto it = table.find(key);
    if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
    try {
      it->second(base, value);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    }
  }
  base.validate();
  return base;
}

TrainConfig load_config(const std::string& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file " + path + ": " + e.what());
  }
  return config_from_json(j, std::move(base));
}

}  // namespace cvgae
