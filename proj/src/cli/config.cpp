#include "seqlrp/cli/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace seqlrp::cli {

using nlohmann::json;

json default_config() {
  return {
      {"output_dir", "seqlrp_out"},
      {"seed", 7u},
      {"workers", 1u},
      {"gen", {{"n_train", 2000u}, {"n_test", 500u}, {"length", 200u}, {"motif", "TATAAT"}}},
      {"data", {{"train", ""}, {"test", ""}}},
      {"vocab", "data/vocab.txt"},
      {"models", {"glm", "cnn"}},
      {"glm", {{"layers", 2u}, {"heads", 2u}, {"dim", 32u}, {"ffn_dim", 64u}, {"max_length", 512u}, {"ln_eps", 1e-5}}},
      {"cnn", models::CnnConfig{}.to_json()},
      {"train",
       {{"glm", {{"epochs", 3u}, {"learning_rate", 1e-3}, {"batch_size", 32u}}},
        {"cnn", {{"epochs", 30u}, {"learning_rate", 1e-3}, {"batch_size", 32u}}}}},
      {"explain", {{"epsilon", 1e-6}, {"start", "logit"}, {"target", 1}}},
      {"transform", {{"order", "renormalize_first"}}},
      {"metrics", {{"subset", "correct_positive"}, {"pairs", json::array()}}},
      {"faithfulness",
       {{"ks", {1, 5, 10, 20, 50}},
        {"orders", {"MIF", "LIF"}},
        {"schemes", {"unknown", "random", "complement"}},
        {"subset", "positive"},
        {"absolute", false}}},
      {"motifs",
       {{"database", "data/motifs.meme"},
        {"sets", {"glm_nucleo_c", "cnn_nucleo"}},
        {"subset", "positive"},
        {"window", 10u},
        {"percentile", 90.0},
        {"sd_factor", 2.0},
        {"absolute", false},
        {"similarity", 0.6},
        {"trim_ic", 0.2},
        {"min_overlap", 0.5},
        {"nulls", 1000u},
        {"null_model", "column_and_letter_shuffle"},
        {"p_cutoff", 0.05},
        {"max_logos", 5u},
        {"sample_logos", 3u}}},
  };
}

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

bool compatible(const json& def, const json& v) {
  if (def.is_number_unsigned()) return v.is_number_unsigned();
  if (def.is_number_integer()) return v.is_number_integer();
  if (def.is_number()) return v.is_number();
  return def.type() == v.type();
}

// Merges `user` into `base` (which holds the defaults) with strict checking.
void merge_checked(json& base, const json& user, const std::string& path) {
  if (!user.is_object()) throw ConfigError("config" + (path.empty() ? "" : " key '" + path + "'") + " must be an object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = join(path, it.key());
    if (!base.contains(it.key())) throw ConfigError("unknown config key '" + key + "'");
    json& slot = base[it.key()];
    if (slot.is_object() && !slot.empty()) {
      merge_checked(slot, it.value(), key);
    } else if (!compatible(slot, it.value())) {
      throw ConfigError("config key '" + key + "' expects " + std::string(slot.type_name()) + ", got " +
                        std::string(it.value().type_name()));
    } else {
      slot = it.value();
    }
  }
}

}  // namespace

void apply_override(json& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) throw ConfigError("override must look like key.path=value");
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json* node = &config;
  std::string rest = key;
  for (;;) {
    const auto dot = rest.find('.');
    const std::string part = rest.substr(0, dot);
    if (part.empty()) throw ConfigError("bad override key '" + key + "'");
    if (!node->is_object()) throw ConfigError("override '" + key + "' descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    rest = rest.substr(dot + 1);
  }
}

json resolve_config(const json& user, const std::vector<std::string>& overrides) {
  json merged = user.is_null() ? json::object() : user;
  for (const auto& o : overrides) apply_override(merged, o);
  json resolved = default_config();
  merge_checked(resolved, merged, "");
  return resolved;
}

json load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::uint64_t step_seed(std::uint64_t seed, std::string_view step) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (char c : step) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return metrics::derive_seed(seed, h);
}

namespace {

template <typename F>
auto checked(const std::string& key, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

std::vector<std::string> string_list(const json& j, const std::string& key) {
  std::vector<std::string> out;
  for (const auto& v : j) {
    if (!v.is_string()) throw ConfigError("config key '" + key + "' must list strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::string one_of(const json& j, const std::string& key, std::set<std::string> allowed) {
  const auto v = j.get<std::string>();
  if (!allowed.count(v)) throw ConfigError("config key '" + key + "' has unsupported value '" + v + "'");
  return v;
}

const std::set<std::string> kSubsets{"all", "positive", "correct_positive"};
const std::set<std::string> kMapSets{"glm_token", "glm_nucleo_c", "glm_nucleo_d",
                                     "cnn_nucleo", "cnn_token_a", "cnn_token_b"};

std::filesystem::path resolve_output(const std::string& dir) {
  std::filesystem::path p(dir);
  if (p.is_relative())
    if (const char* root = std::getenv(kOutputRootEnv); root && *root) p = std::filesystem::path(root) / p;
  return p;
}

}  // namespace

Settings Settings::from(const json& r) {
  Settings s;
  s.resolved = r;
  if (r.at("output_dir").get<std::string>().empty()) throw ConfigError("output_dir must not be empty");
  s.output_dir = resolve_output(r.at("output_dir"));
  s.seed = r.at("seed");
  s.workers = r.at("workers");
  if (s.workers == 0) throw ConfigError("workers must be at least 1");

  const auto& g = r.at("gen");
  s.gen.n_train = g.at("n_train");
  s.gen.n_test = g.at("n_test");
  s.gen.length = g.at("length");
  s.gen.motif = g.at("motif");
  checked("gen.motif", [&] { return seqdata::DnaSequence(s.gen.motif).length(); });
  if (s.gen.n_train == 0 || s.gen.n_test == 0 || s.gen.n_train % 2 || s.gen.n_test % 2)
    throw ConfigError("gen.n_train and gen.n_test must be positive and even");
  if (s.gen.motif.size() >= s.gen.length) throw ConfigError("gen.motif must be shorter than gen.length");
  s.gen.train = r.at("data").at("train").get<std::string>();
  s.gen.test = r.at("data").at("test").get<std::string>();
  if (s.gen.train.empty() != s.gen.test.empty()) throw ConfigError("data.train and data.test must be given together");

  s.vocab = r.at("vocab").get<std::string>();
  s.models = string_list(r.at("models"), "models");
  if (s.models.empty()) throw ConfigError("models must name at least one model");
  for (const auto& m : s.models)
    if (m != "glm" && m != "cnn") throw ConfigError("unknown model '" + m + "' (expected glm or cnn)");

  s.glm = r.at("glm");
  checked("glm", [&] {
    json full = s.glm;
    full["vocab_size"] = 8;
    full["cls_id"] = 2;
    full["sep_id"] = 3;
    full["pad_id"] = 0;
    return models::GlmConfig::from_json(full);
  });
  s.cnn = checked("cnn", [&] { return models::CnnConfig::from_json(r.at("cnn")); });

  for (const char* m : {"glm", "cnn"}) {
    const auto& t = r.at("train").at(m);
    nn::TrainConfig tc;
    tc.epochs = t.at("epochs");
    tc.learning_rate = t.at("learning_rate");
    tc.batch_size = t.at("batch_size");
    tc.seed = step_seed(s.seed, std::string("train.") + m);
    checked(std::string("train.") + m, [&] {
      tc.validate();
      return 0;
    });
    s.train[m] = tc;
  }

  const auto& e = r.at("explain");
  s.rules.epsilon = e.at("epsilon");
  s.rules.start = one_of(e.at("start"), "explain.start", {"logit", "probability"}) == "logit"
                      ? lrp::RuleConfig::Start::Logit
                      : lrp::RuleConfig::Start::Probability;
  checked("explain.epsilon", [&] {
    s.rules.validate();
    return 0;
  });
  s.target = e.at("target");
  if (s.target != 0 && s.target != 1) throw ConfigError("explain.target must be 0 or 1");

  s.renormalize_first =
      one_of(r.at("transform").at("order"), "transform.order", {"renormalize_first", "aggregate_first"}) ==
      "renormalize_first";

  const auto& m = r.at("metrics");
  s.metrics.subset = one_of(m.at("subset"), "metrics.subset", kSubsets);
  for (const auto& p : m.at("pairs")) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_string() || !p[1].is_string())
      throw ConfigError("metrics.pairs entries must be [set, set]");
    for (const auto& name : p)
      if (!kMapSets.count(name)) throw ConfigError("metrics.pairs: unknown map set '" + name.get<std::string>() + "'");
    s.metrics.pairs.emplace_back(p[0], p[1]);
  }

  const auto& f = r.at("faithfulness");
  for (const auto& k : f.at("ks")) {
    if (!k.is_number()) throw ConfigError("faithfulness.ks must list numbers");
    s.faithfulness.ks.push_back(k.get<double>());
  }
  for (std::size_t i = 0; i < s.faithfulness.ks.size(); ++i) {
    const double k = s.faithfulness.ks[i];
    if (!(k > 0.0 && k <= 100.0)) throw ConfigError("faithfulness.ks values must lie in (0, 100]");
    if (i > 0 && !(k > s.faithfulness.ks[i - 1])) throw ConfigError("faithfulness.ks must be strictly increasing");
  }
  for (const auto& o : string_list(f.at("orders"), "faithfulness.orders"))
    s.faithfulness.orders.push_back(checked("faithfulness.orders", [&] { return metrics::order_from_string(o); }));
  for (const auto& sc : string_list(f.at("schemes"), "faithfulness.schemes"))
    s.faithfulness.schemes.push_back(checked("faithfulness.schemes", [&] { return metrics::scheme_from_string(sc); }));
  s.faithfulness.subset = one_of(f.at("subset"), "faithfulness.subset", kSubsets);
  s.faithfulness.absolute = f.at("absolute");

  const auto& mo = r.at("motifs");
  s.motifs.database = mo.at("database").get<std::string>();
  s.motifs.sets = string_list(mo.at("sets"), "motifs.sets");
  for (const auto& set : s.motifs.sets)
    if (set != "glm_nucleo_c" && set != "glm_nucleo_d" && set != "cnn_nucleo")
      throw ConfigError("motifs.sets: '" + set + "' is not a nucleotide-level map set");
  s.motifs.subset = one_of(mo.at("subset"), "motifs.subset", kSubsets);
  s.motifs.seqlets.window = mo.at("window");
  s.motifs.seqlets.percentile = mo.at("percentile");
  s.motifs.seqlets.sd_factor = mo.at("sd_factor");
  s.motifs.seqlets.absolute = mo.at("absolute");
  if (s.motifs.seqlets.window == 0) throw ConfigError("motifs.window must be positive");
  if (!(s.motifs.seqlets.percentile >= 0.0 && s.motifs.seqlets.percentile <= 100.0))
    throw ConfigError("motifs.percentile must lie in [0, 100]");
  s.motifs.clusters.similarity = mo.at("similarity");
  s.motifs.clusters.trim_ic = mo.at("trim_ic");
  s.motifs.clusters.min_overlap = mo.at("min_overlap");
  if (!(s.motifs.clusters.min_overlap > 0.0 && s.motifs.clusters.min_overlap <= 1.0))
    throw ConfigError("motifs.min_overlap must lie in (0, 1]");
  s.motifs.match.nulls = mo.at("nulls");
  if (s.motifs.match.nulls < 100) throw ConfigError("motifs.nulls must be at least 100");
  s.motifs.match.seed = step_seed(s.seed, "motifs");
  s.motifs.match.null_model =
      one_of(mo.at("null_model"), "motifs.null_model", {"column_shuffle", "column_and_letter_shuffle"}) ==
              "column_shuffle"
          ? motifdb::NullModel::ColumnShuffle
          : motifdb::NullModel::ColumnAndLetterShuffle;
  s.motifs.p_cutoff = mo.at("p_cutoff");
  if (!(s.motifs.p_cutoff > 0.0 && s.motifs.p_cutoff <= 1.0)) throw ConfigError("motifs.p_cutoff must lie in (0, 1]");
  s.motifs.max_logos = mo.at("max_logos");
  s.motifs.sample_logos = mo.at("sample_logos");
  return s;
}

}  // namespace seqlrp::cli
