#include "fvkit/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>
#include <toml.hpp>

#include "fvkit/errors.hpp"
#include "fvkit/random.hpp"

namespace fvkit {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) {
    throw Error(ErrorKind::kInvalidArgument, "config section '" + where + "' must be a table");
  }
  for (const auto& item : j.items()) {
    if (!allowed.contains(item.key())) {
      throw Error(ErrorKind::kInvalidArgument,
                  "unknown config key '" + (where.empty() ? "" : where + ".") + item.key() + "'");
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

std::size_t read_count(const json& j, const char* key, std::size_t fallback) {
  if (!j.contains(key)) return fallback;
  const auto v = j.at(key).get<std::int64_t>();
  if (v < 0) {
    throw Error(ErrorKind::kInvalidArgument, std::string("config key '") + key + "' is negative");
  }
  return static_cast<std::size_t>(v);
}

json toml_to_json(const toml::node& node) {
  if (const auto* table = node.as_table()) {
    json out = json::object();
    for (const auto& [key, value] : *table) out[std::string(key.str())] = toml_to_json(value);
    return out;
  }
  if (const auto* array = node.as_array()) {
    json out = json::array();
    for (const auto& value : *array) out.push_back(toml_to_json(value));
    return out;
  }
  if (const auto v = node.value_exact<std::int64_t>()) return *v;
  if (const auto v = node.value_exact<double>()) return *v;
  if (const auto v = node.value_exact<bool>()) return *v;
  if (const auto v = node.value_exact<std::string>()) return *v;
  throw Error(ErrorKind::kInvalidArgument, "unsupported TOML value type in config");
}

PipelineConfig config_from_json(const json& j) {
  reject_unknown(j,
                 {"components", "codebook_image_cap", "codebook_row_cap", "scales", "classes",
                  "seed", "codebook_seed", "threads", "em", "svm", "decomposition"},
                 "");
  PipelineConfig c;
  if (j.contains("seed")) c.reseed(j.at("seed").get<std::uint64_t>());
  read(j, "codebook_seed", c.codebook_seed);
  c.num_components = read_count(j, "components", c.num_components);
  c.codebook_image_cap = read_count(j, "codebook_image_cap", c.codebook_image_cap);
  c.codebook_row_cap = read_count(j, "codebook_row_cap", c.codebook_row_cap);
  if (j.contains("scales")) {
    const auto& s = j.at("scales");
    c.schedule = s.is_string() ? parse_schedule(s.get<std::string>())
                               : ScaleSchedule(s.get<std::vector<double>>());
  }
  read(j, "classes", c.classes);
  c.set_threads(read_count(j, "threads", c.threads));

  if (j.contains("em")) {
    const auto& e = j.at("em");
    reject_unknown(e, {"max_iters", "tol", "variance_floor_fraction", "kmeans_iters", "seed"}, "em");
    read(e, "max_iters", c.em.max_iters);
    read(e, "tol", c.em.tol);
    read(e, "variance_floor_fraction", c.em.variance_floor_fraction);
    read(e, "kmeans_iters", c.em.kmeans_iters);
    read(e, "seed", c.em.seed);
  }
  if (j.contains("svm")) {
    const auto& s = j.at("svm");
    reject_unknown(s, {"lambda", "epochs", "average_epochs", "t0", "balance_classes", "seed"},
                   "svm");
    read(s, "lambda", c.svm.lambda);
    read(s, "epochs", c.svm.epochs);
    read(s, "average_epochs", c.svm.average_epochs);
    read(s, "t0", c.svm.t0);
    read(s, "balance_classes", c.svm.balance_classes);
    read(s, "seed", c.svm.seed);
  }
  if (j.contains("decomposition")) {
    const auto& d = j.at("decomposition");
    reject_unknown(d,
                   {"dim", "foreground_components", "background_components",
                    "codebook_components", "w", "samples", "separation"},
                   "decomposition");
    auto& dc = c.decomposition;
    dc.dim = read_count(d, "dim", dc.dim);
    dc.foreground_components = read_count(d, "foreground_components", dc.foreground_components);
    dc.background_components = read_count(d, "background_components", dc.background_components);
    dc.codebook_components = read_count(d, "codebook_components", dc.codebook_components);
    read(d, "w", dc.w);
    dc.samples = read_count(d, "samples", dc.samples);
    read(d, "separation", dc.separation);
  }
  c.validate();
  return c;
}

}  // namespace

std::vector<std::string> PipelineConfig::default_classes() {
  return {"MEL", "NV", "BCC", "AKIEC", "BKL", "DF", "VASC"};
}

void PipelineConfig::reseed(std::uint64_t base) {
  seed = base;
  codebook_seed = derive_seed(base, 0);
  em.seed = derive_seed(base, 1);
  svm.seed = derive_seed(base, 2);
}

void PipelineConfig::set_threads(std::size_t n) {
  threads = std::max<std::size_t>(1, n);
  em.threads = threads;
  svm.threads = threads;
}

void PipelineConfig::validate() const {
  if (num_components < 1) throw Error(ErrorKind::kInvalidArgument, "components must be >= 1");
  if (codebook_image_cap < 1) {
    throw Error(ErrorKind::kInvalidArgument, "codebook_image_cap must be >= 1");
  }
  if (codebook_row_cap < num_components) {
    throw Error(ErrorKind::kInvalidArgument, "codebook_row_cap must be >= components");
  }
  if (classes.size() < 2) throw Error(ErrorKind::kInvalidArgument, "need at least two classes");
  std::set<std::string> unique(classes.begin(), classes.end());
  if (unique.size() != classes.size()) {
    throw Error(ErrorKind::kInvalidArgument, "class names must be unique");
  }
  em.validate();
  svm.validate();
  const auto& d = decomposition;
  if (d.dim < 1 || d.foreground_components < 1 || d.background_components < 1 ||
      d.codebook_components < 1) {
    throw Error(ErrorKind::kInvalidArgument, "decomposition sizes must be >= 1");
  }
  if (!(d.w >= 0.0 && d.w <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "decomposition w must lie in [0, 1]");
  }
  if (d.samples < 1000) {
    throw Error(ErrorKind::kInvalidArgument, "decomposition samples must be >= 1000");
  }
}

PipelineConfig parse_config_json(std::string_view text) {
  try {
    return config_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kInvalidArgument, std::string("bad JSON config: ") + e.what());
  }
}

PipelineConfig parse_config_toml(std::string_view text) {
  try {
    const toml::table table = toml::parse(text);
    return config_from_json(toml_to_json(table));
  } catch (const toml::parse_error& e) {
    throw Error(ErrorKind::kInvalidArgument,
                std::string("bad TOML config: ") + std::string(e.description()));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kInvalidArgument, std::string("bad TOML config: ") + e.what());
  }
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open config '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return path.extension() == ".toml" ? parse_config_toml(buffer.str())
                                     : parse_config_json(buffer.str());
}

std::string config_to_json(const PipelineConfig& c) {
  nlohmann::ordered_json j;
  j["components"] = c.num_components;
  j["codebook_image_cap"] = c.codebook_image_cap;
  j["codebook_row_cap"] = c.codebook_row_cap;
  j["scales"] = std::vector<double>(c.schedule.exponents().begin(), c.schedule.exponents().end());
  j["classes"] = c.classes;
  j["seed"] = c.seed;
  j["codebook_seed"] = c.codebook_seed;
  j["threads"] = c.threads;
  j["em"] = {{"max_iters", c.em.max_iters},
             {"tol", c.em.tol},
             {"variance_floor_fraction", c.em.variance_floor_fraction},
             {"kmeans_iters", c.em.kmeans_iters},
             {"seed", c.em.seed}};
  j["svm"] = {{"lambda", c.svm.lambda},
              {"epochs", c.svm.epochs},
              {"average_epochs", c.svm.average_epochs},
              {"t0", c.svm.t0},
              {"balance_classes", c.svm.balance_classes},
              {"seed", c.svm.seed}};
  const auto& d = c.decomposition;
  j["decomposition"] = {{"dim", d.dim},
                        {"foreground_components", d.foreground_components},
                        {"background_components", d.background_components},
                        {"codebook_components", d.codebook_components},
                        {"w", d.w},
                        {"samples", d.samples},
                        {"separation", d.separation}};
  return j.dump(2);
}

}  // namespace fvkit
