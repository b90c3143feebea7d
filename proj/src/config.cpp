#include "dsm/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "dsm/error.hpp"

namespace dsm {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& key, const std::string& why) {
  throw Error(Errc::kConfigInvalid, key + ": " + why);
}

// Reads keys out of one JSON object and rejects whatever is left unread.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) invalid(label(), "expected an object");
  }

  std::string key(const std::string& name) const {
    return path_.empty() ? name : path_ + "." + name;
  }

  const json* get(const std::string& name) {
    seen_.insert(name);
    auto it = node_.find(name);
    return it == node_.end() ? nullptr : &*it;
  }

  template <typename T>
  void read(const std::string& name, T& out) {
    const json* v = get(name);
    if (v == nullptr) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v->is_boolean()) invalid(key(name), "expected true or false");
      } else if constexpr (std::is_arithmetic_v<T>) {
        if (!v->is_number()) invalid(key(name), "expected a number");
        if constexpr (std::is_integral_v<T>) {
          if (!v->is_number_integer() && !v->is_number_unsigned()) {
            invalid(key(name), "expected an integer");
          }
        }
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v->is_string()) invalid(key(name), "expected a string");
      }
      out = v->get<T>();
    } catch (const json::exception& e) {
      invalid(key(name), e.what());
    }
  }

  void read_time(const std::string& name, int& slot) {
    const json* v = get(name);
    if (v == nullptr) return;
    if (!v->is_string()) invalid(key(name), "expected an \"HH:MM\" time");
    try {
      slot = TimeGrid::parse_label(v->get<std::string>());
    } catch (const Error& e) {
      invalid(key(name), e.what());
    }
  }

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      if (!seen_.contains(it.key())) invalid(key(it.key()), "unknown key");
    }
  }

  std::string label() const { return path_.empty() ? "config" : path_; }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_synth(const json& node, SynthConfig& c) {
  Section s(node, "synth");
  s.read("seed", c.seed);
  s.read_time("morning_peak_start", c.morning_peak_start);
  s.read_time("morning_peak_end", c.morning_peak_end);
  s.read_time("evening_peak_start", c.evening_peak_start);
  s.read_time("evening_peak_end", c.evening_peak_end);
  s.read_time("night_start", c.night_start);
  s.read("price_offpeak", c.price_offpeak);
  s.read("price_mid", c.price_mid);
  s.read("price_peak", c.price_peak);
  s.read_time("pv_sunrise", c.pv_sunrise);
  s.read_time("pv_sunset", c.pv_sunset);
  s.read("pv_rated_kw", c.pv_rated_kw);
  s.read("pv_shape_exponent", c.pv_shape_exponent);
  s.finish();
  try {
    c.validate();
  } catch (const Error& e) {
    invalid("synth", e.what());
  }
}

FeederSpec read_feeder(const json& node) {
  if (node.is_string()) {
    if (node.get<std::string>() != "default31") invalid("feeder", "unknown built-in feeder");
    return default_feeder_spec();
  }
  Section s(node, "feeder");
  FeederSpec spec;
  s.read("bus_count", spec.bus_count);
  s.read("base_kv", spec.base_kv);
  s.read("base_kva", spec.base_kva);
  s.read("slack_voltage_pu", spec.slack_voltage_pu);
  const json* branches = s.get("branches");
  if (branches == nullptr || !branches->is_array()) invalid(s.key("branches"), "expected an array");
  for (std::size_t k = 0; k < branches->size(); ++k) {
    Section b((*branches)[k], "feeder.branches[" + std::to_string(k) + "]");
    BranchSpec br;
    b.read("from", br.from);
    b.read("to", br.to);
    b.read("r_pu", br.r_pu);
    b.read("x_pu", br.x_pu);
    b.finish();
    --br.from;
    --br.to;
    spec.branches.push_back(br);
  }
  s.finish();
  try {
    (void)Feeder::build(spec);
  } catch (const Error& e) {
    invalid("feeder", e.what());
  }
  return spec;
}

void read_grid(const json& node, GridSpec& g) {
  Section s(node, "grid");
  auto list = [&](const std::string& name, auto& out) {
    const json* v = s.get(name);
    if (v == nullptr) return;
    if (!v->is_array() || v->empty()) invalid(s.key(name), "expected a non-empty array");
    try {
      out = v->get<std::remove_reference_t<decltype(out)>>();
    } catch (const json::exception& e) {
      invalid(s.key(name), e.what());
    }
  };
  list("participation", g.participation);
  list("penalty_price", g.penalty_prices);
  list("pv", g.pv);
  s.read("pv_reference", g.pv_reference);
  s.finish();
  try {
    g.validate();
  } catch (const Error& e) {
    invalid("grid", e.what());
  }
}

void read_solver(const json& node, RunConfig& c) {
  Section s(node, "solver");
  std::string kind = to_string(c.grid.solver);
  s.read("kind", kind);
  try {
    c.grid.solver = parse_solver(kind);
  } catch (const Error&) {
    invalid(s.key("kind"), "expected \"exact\" or \"heuristic\"");
  }
  s.read("max_nodes", c.budget.max_nodes);
  s.read("time_limit_s", c.budget.time_limit_s);
  s.read("restarts", c.budget.restarts);
  s.read("seed", c.grid.seed);
  s.finish();
  try {
    c.budget.validate();
  } catch (const Error& e) {
    invalid("solver", e.what());
  }
}

void read_power_flow(const json& node, PowerFlowOptions& o) {
  Section s(node, "power_flow");
  s.read("tolerance_pu", o.tolerance_pu);
  s.read("max_iterations", o.max_iterations);
  s.finish();
  if (!(o.tolerance_pu > 0.0) || o.max_iterations < 1) {
    invalid("power_flow", "tolerance and iteration cap must be positive");
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kConfigInvalid, "cannot read '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

const char* preference_name(Preference p) {
  switch (p) {
    case Preference::kMorning:
      return "morning";
    case Preference::kEvening:
      return "evening";
    case Preference::kAnytime:
      break;
  }
  return "anytime";
}

}  // namespace

ScenarioInputs RunConfig::inputs() const {
  ScenarioInputs in{build_community(synth, catalog, feeder), gen_price_profile(synth),
                    gen_pv_profile(synth), budget, power_flow};
  return in;
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::kConfigInvalid, std::string("malformed JSON: ") + e.what());
  }
  RunConfig c;
  Section root(doc, "");
  if (const json* v = root.get("synth")) read_synth(*v, c.synth);
  root.read("catalog", c.catalog_source);
  if (c.catalog_source != "default") {
    std::filesystem::path path(c.catalog_source);
    if (path.is_relative()) path = base_dir / path;
    try {
      c.catalog = load_catalog(path);
    } catch (const Error& e) {
      invalid("catalog", e.what());
    }
  }
  if (const json* v = root.get("feeder")) {
    c.feeder = read_feeder(*v);
    c.feeder_source = v->is_string() ? v->get<std::string>() : "custom";
  }
  if (const json* v = root.get("grid")) read_grid(*v, c.grid);
  if (const json* v = root.get("solver")) read_solver(*v, c);
  if (const json* v = root.get("power_flow")) read_power_flow(*v, c.power_flow);
  root.read("output_dir", c.output_dir);
  root.finish();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return parse_config(text, path.parent_path());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

ApplianceCatalog parse_catalog(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::kConfigInvalid, std::string("malformed JSON: ") + e.what());
  }
  ApplianceCatalog catalog;
  Section root(doc, "");
  const json* classes = root.get("classes");
  if (classes == nullptr || !classes->is_array()) invalid("classes", "expected an array");
  root.finish();
  for (std::size_t i = 0; i < classes->size(); ++i) {
    const std::string where = "classes[" + std::to_string(i) + "]";
    Section s((*classes)[i], where);
    HouseholdClass cls;
    s.read("name", cls.name);
    s.read("md_kw", cls.md_kw);
    s.read("base_scale", cls.base_scale);
    const json* apps = s.get("appliances");
    if (apps == nullptr || !apps->is_array()) invalid(s.key("appliances"), "expected an array");
    s.finish();
    if (cls.name.empty() || !(cls.md_kw > 0.0) || !(cls.base_scale >= 0.0)) {
      invalid(where, "needs a name, a positive md_kw and a non-negative base_scale");
    }
    for (std::size_t k = 0; k < apps->size(); ++k) {
      Section a((*apps)[k], where + ".appliances[" + std::to_string(k) + "]");
      CatalogEntry e;
      std::string preference = "anytime";
      a.read("name", e.name);
      a.read("rated_kw", e.rated_kw);
      a.read("duration_slots", e.duration_slots);
      a.read_time("window_start", e.window_start);
      a.read_time("window_end", e.window_end);
      a.read("interruptible", e.interruptible);
      a.read("preference", preference);
      a.finish();
      if (preference == "morning") {
        e.preference = Preference::kMorning;
      } else if (preference == "evening") {
        e.preference = Preference::kEvening;
      } else if (preference == "anytime") {
        e.preference = Preference::kAnytime;
      } else {
        invalid(a.key("preference"), "expected morning, evening or anytime");
      }
      if (e.name.empty() || !(e.rated_kw > 0.0) || e.duration_slots < 1 ||
          e.window_end < e.window_start || e.window_end >= TimeGrid::kSlotsPerDay ||
          e.window_end - e.window_start + 1 < e.duration_slots) {
        invalid(a.label(), "needs a name, positive rating and a window that fits its duration");
      }
      cls.appliances.push_back(std::move(e));
    }
    catalog.classes.push_back(std::move(cls));
  }
  return catalog;
}

ApplianceCatalog load_catalog(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return parse_catalog(text);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::string catalog_to_json(const ApplianceCatalog& catalog) {
  json classes = json::array();
  for (const auto& cls : catalog.classes) {
    json apps = json::array();
    for (const auto& e : cls.appliances) {
      apps.push_back(json{{"name", e.name},
                          {"rated_kw", e.rated_kw},
                          {"duration_slots", e.duration_slots},
                          {"window_start", TimeGrid::label(e.window_start)},
                          {"window_end", TimeGrid::label(e.window_end)},
                          {"interruptible", e.interruptible},
                          {"preference", preference_name(e.preference)}});
    }
    classes.push_back(json{{"name", cls.name},
                           {"md_kw", cls.md_kw},
                           {"base_scale", cls.base_scale},
                           {"appliances", std::move(apps)}});
  }
  return json{{"classes", std::move(classes)}}.dump(2) + "\n";
}

}  // namespace dsm
