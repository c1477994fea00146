#include "seqlrp/cli/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <thread>
#include <variant>

#include "seqlrp/error.hpp"
#include "seqlrp/models/classifier.hpp"
#include "seqlrp/seqdata/dataset.hpp"
#include "seqlrp/seqdata/tokenizer.hpp"

namespace seqlrp::cli {

namespace fs = std::filesystem;
using lrp::RelevanceMap;
using seqdata::LabeledDataset;

int exit_code_for(const std::exception& e) noexcept {
  if (dynamic_cast<const ConfigError*>(&e)) return kExitUsage;
  if (dynamic_cast<const NumericalError*>(&e)) return kExitNumerical;
  return kExitData;
}

fs::path Layout::config(std::string_view command) const { return root / "config" / (std::string(command) + ".json"); }
fs::path Layout::checkpoint(std::string_view model) const { return root / "models" / (std::string(model) + ".json"); }
fs::path Layout::train_log(std::string_view model) const {
  return root / "models" / (std::string(model) + "_train.tsv");
}
fs::path Layout::raw_maps(std::string_view model) const { return root / "maps" / (std::string(model) + "_raw.jsonl"); }
fs::path Layout::predictions(std::string_view model) const {
  return root / "maps" / (std::string(model) + "_predictions.tsv");
}
fs::path Layout::map_set(std::string_view name) const { return root / "maps" / (std::string(name) + ".jsonl"); }
fs::path Layout::faithfulness(std::string_view model) const {
  return root / "faithfulness" / (std::string(model) + ".tsv");
}

namespace {

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void require(const fs::path& path, std::string_view producer) {
  if (!fs::exists(path))
    throw DataError("missing " + path.string() + "; run the '" + std::string(producer) + "' command first");
}

void echo_config(const Layout& layout, std::string_view command, const Settings& s) {
  write_text(layout.config(command), s.resolved.dump(2) + "\n");
}

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Results must be
/// written to per-index slots so the outcome does not depend on scheduling.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

bool contains(const std::vector<std::string>& v, std::string_view x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

std::string set_model(std::string_view set) { return std::string(set.substr(0, 3)); }

// ---------------------------------------------------------------- loading

struct Prediction {
  int label = 0;
  double p1 = 0.0;
  bool predicted_positive() const { return p1 > 0.5; }
};

std::map<std::string, Prediction> load_predictions(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  std::getline(in, line);  // header
  std::map<std::string, Prediction> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string id;
    Prediction p;
    int predicted = 0;
    if (!(ls >> id >> p.label >> p.p1 >> predicted)) throw ParseError(path.string() + ": malformed row", lineno);
    out[id] = p;
  }
  return out;
}

std::vector<RelevanceMap> load_maps_for(const fs::path& path, const LabeledDataset& data) {
  auto maps = lrp::load_relevance_maps(path);
  if (maps.size() != data.size())
    throw DataError(path.string() + " holds " + std::to_string(maps.size()) + " maps for " +
                    std::to_string(data.size()) + " test samples; rerun 'explain'");
  for (std::size_t i = 0; i < maps.size(); ++i)
    if (maps[i].sample_id != data.samples[i].id)
      throw DataError(path.string() + ": map " + std::to_string(i) + " explains '" + maps[i].sample_id +
                      "', expected '" + data.samples[i].id + "'");
  return maps;
}

struct LoadedGlm {
  models::ToyGlm model;
  seqdata::Vocab vocab;
};

LoadedGlm load_glm(const Layout& layout) {
  require(layout.checkpoint("glm"), "train");
  require(layout.vocab(), "train");
  auto any = models::load_model(layout.checkpoint("glm"));
  if (!std::holds_alternative<models::ToyGlm>(any)) throw DataError(layout.checkpoint("glm").string() + " is not a gLM");
  return {std::get<models::ToyGlm>(std::move(any)), seqdata::Vocab::load(layout.vocab())};
}

models::ToyCnn load_cnn(const Layout& layout) {
  require(layout.checkpoint("cnn"), "train");
  auto any = models::load_model(layout.checkpoint("cnn"));
  if (!std::holds_alternative<models::ToyCnn>(any)) throw DataError(layout.checkpoint("cnn").string() + " is not a CNN");
  return std::get<models::ToyCnn>(std::move(any));
}

/// Indices of the samples in `subset`; correct_positive consults the
/// predictions of every model in `models`.
std::vector<std::size_t> select_subset(const Layout& layout, const LabeledDataset& data, const std::string& subset,
                                       const std::vector<std::string>& models) {
  std::vector<std::map<std::string, Prediction>> preds;
  if (subset == "correct_positive")
    for (const auto& m : models) {
      require(layout.predictions(m), "explain");
      preds.push_back(load_predictions(layout.predictions(m)));
    }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& s = data.samples[i];
    if (subset != "all" && s.label != 1) continue;
    bool ok = true;
    for (const auto& p : preds) {
      const auto it = p.find(s.id);
      ok = ok && it != p.end() && it->second.predicted_positive();
    }
    if (ok) out.push_back(i);
  }
  return out;
}

// ---------------------------------------------------------------- commands

void cmd_gen(const Settings& s, const Layout& layout, std::ostream& log) {
  LabeledDataset train, test;
  if (!s.gen.train.empty()) {
    train = seqdata::load_dataset(s.gen.train);
    test = seqdata::load_dataset(s.gen.test);
    log << "gen: ingested " << train.size() << " training and " << test.size() << " test sequences\n";
  } else {
    const seqdata::DnaSequence motif(s.gen.motif);
    train = seqdata::gen_planted(s.gen.n_train, s.gen.length, motif, step_seed(s.seed, "gen.train"));
    test = seqdata::gen_planted(s.gen.n_test, s.gen.length, motif, step_seed(s.seed, "gen.test"));
    log << "gen: planted " << s.gen.motif << " into " << train.size() << " + " << test.size()
        << " sequences of length " << s.gen.length << "\n";
  }
  train.split = seqdata::Split::Train;
  test.split = seqdata::Split::Test;
  echo_config(layout, "gen", s);
  write_text(layout.train_data(), seqdata::to_csv(train));
  write_text(layout.test_data(), seqdata::to_csv(test));
}

std::string history_tsv(const nn::TrainHistory& h) {
  std::string out = "epoch\ttrain_loss\ttest_accuracy\n";
  for (std::size_t e = 0; e < h.train_loss.size(); ++e)
    out += std::to_string(e + 1) + '\t' + fmt6(h.train_loss[e]) + '\t' + fmt6(h.test_accuracy[e]) + '\n';
  return out;
}

void cmd_train(const Settings& s, const Layout& layout, std::ostream& log) {
  require(layout.train_data(), "gen");
  require(layout.test_data(), "gen");
  const auto train = seqdata::load_dataset(layout.train_data());
  const auto test = seqdata::load_dataset(layout.test_data());
  std::optional<seqdata::Vocab> vocab;
  if (contains(s.models, "glm")) {
    if (!fs::exists(s.vocab)) throw DataError("vocabulary file " + s.vocab.string() + " not found");
    vocab = seqdata::Vocab::load(s.vocab);
  }
  std::vector<int> ytr, yte;
  for (const auto& x : train.samples) ytr.push_back(x.label);
  for (const auto& x : test.samples) yte.push_back(x.label);
  echo_config(layout, "train", s);

  auto progress = [&log](const char* name) {
    return [&log, name](std::size_t epoch, double loss, double acc) {
      log << name << " epoch " << epoch + 1 << ": loss " << fmt6(loss) << ", test accuracy " << fmt6(acc) << "\n";
    };
  };

  for (const auto& m : s.models) {
    if (m == "glm") {
      nlohmann::json cj = s.glm;
      cj["vocab_size"] = vocab->size();
      cj["cls_id"] = vocab->cls_id();
      cj["sep_id"] = vocab->sep_id();
      cj["pad_id"] = vocab->pad_id();
      const auto cfg = models::GlmConfig::from_json(cj);
      std::vector<std::vector<int>> xtr, xte;
      for (const auto& x : train.samples) xtr.push_back(seqdata::bpe_tokenize(x.sequence, *vocab).ids);
      for (const auto& x : test.samples) xte.push_back(seqdata::bpe_tokenize(x.sequence, *vocab).ids);
      for (const auto* set : {&xtr, &xte})
        for (const auto& ids : *set)
          if (ids.size() > cfg.max_length)
            throw DataError("a tokenized sequence has " + std::to_string(ids.size()) +
                            " tokens, above glm.max_length = " + std::to_string(cfg.max_length));
      auto model = models::ToyGlm::init(cfg, step_seed(s.seed, "init.glm"));
      const auto h = nn::train_classifier(model, std::span<const std::vector<int>>(xtr), std::span<const int>(ytr),
                                          std::span<const std::vector<int>>(xte), std::span<const int>(yte),
                                          s.train.at("glm"), progress("glm"));
      fs::create_directories(layout.checkpoint("glm").parent_path());
      models::save_model(layout.checkpoint("glm"), model);
      write_text(layout.vocab(), vocab->to_text());
      write_text(layout.train_log("glm"), history_tsv(h));
    } else {
      std::vector<nn::Matrix> xtr, xte;
      for (const auto& x : train.samples) xtr.push_back(seqdata::one_hot_encode(x.sequence));
      for (const auto& x : test.samples) xte.push_back(seqdata::one_hot_encode(x.sequence));
      auto model = models::ToyCnn::init(s.cnn, step_seed(s.seed, "init.cnn"));
      const auto h = nn::train_classifier(model, std::span<const nn::Matrix>(xtr), std::span<const int>(ytr),
                                          std::span<const nn::Matrix>(xte), std::span<const int>(yte),
                                          s.train.at("cnn"), progress("cnn"));
      fs::create_directories(layout.checkpoint("cnn").parent_path());
      models::save_model(layout.checkpoint("cnn"), model);
      write_text(layout.train_log("cnn"), history_tsv(h));
    }
  }
}

void cmd_explain(const Settings& s, const Layout& layout, std::ostream& log) {
  require(layout.test_data(), "gen");
  const auto test = seqdata::load_dataset(layout.test_data());
  std::optional<LoadedGlm> glm;
  std::optional<models::ToyCnn> cnn;
  if (contains(s.models, "glm")) glm = load_glm(layout);
  if (contains(s.models, "cnn")) cnn = load_cnn(layout);
  echo_config(layout, "explain", s);

  for (const auto& m : s.models) {
    std::vector<RelevanceMap> maps(test.size());
    std::vector<double> p1(test.size());
    std::unique_ptr<models::SequenceClassifier> clf;
    if (m == "glm")
      clf = std::make_unique<models::GlmClassifier>(glm->model, glm->vocab);
    else
      clf = std::make_unique<models::CnnClassifier>(*cnn);
    parallel_for(test.size(), s.workers, [&](std::size_t i) {
      const auto& x = test.samples[i];
      maps[i] = m == "glm" ? lrp::explain(glm->model, seqdata::bpe_tokenize(x.sequence, glm->vocab), s.target, s.rules)
                           : lrp::explain(*cnn, x.sequence, s.target, s.rules);
      maps[i].sample_id = x.id;
      maps[i].model = m;
      p1[i] = clf->probability(x.sequence, 1);
    });
    fs::create_directories(layout.raw_maps(m).parent_path());
    lrp::save_relevance_maps(layout.raw_maps(m), maps);
    std::string tsv = "id\tlabel\tp1\tpredicted\n";
    for (std::size_t i = 0; i < test.size(); ++i)
      tsv += test.samples[i].id + '\t' + std::to_string(test.samples[i].label) + '\t' + fmt6(p1[i]) + '\t' +
             (p1[i] > 0.5 ? "1" : "0") + '\n';
    write_text(layout.predictions(m), tsv);
    log << "explain: " << m << " maps for " << test.size() << " test sequences\n";
  }
}

void cmd_transform(const Settings& s, const Layout& layout, std::ostream& log) {
  require(layout.test_data(), "gen");
  const auto test = seqdata::load_dataset(layout.test_data());
  const bool glm = contains(s.models, "glm") && fs::exists(layout.raw_maps("glm"));
  const bool cnn = contains(s.models, "cnn") && fs::exists(layout.raw_maps("cnn"));
  if (!glm && !cnn) throw DataError("no raw relevance maps under " + (layout.root / "maps").string() +
                                    "; run the 'explain' command first");
  std::optional<seqdata::Vocab> vocab;
  if (fs::exists(layout.vocab()))
    vocab = seqdata::Vocab::load(layout.vocab());
  else if (fs::exists(s.vocab))
    vocab = seqdata::Vocab::load(s.vocab);
  std::vector<RelevanceMap> glm_raw, cnn_raw;
  if (glm) glm_raw = load_maps_for(layout.raw_maps("glm"), test);
  if (cnn) cnn_raw = load_maps_for(layout.raw_maps("cnn"), test);
  echo_config(layout, "transform", s);

  using attrib::Strategy;
  if (glm) {
    std::vector<RelevanceMap> token, c, d;
    for (const auto& raw : glm_raw) {
      token.push_back(attrib::strip_special_renormalize(raw));
      c.push_back(attrib::disaggregate(token.back(), Strategy::CPassedOn));
      d.push_back(attrib::disaggregate(token.back(), Strategy::DEqual));
      if (!s.renormalize_first) {
        c.back() = attrib::renormalize(c.back());
        d.back() = attrib::renormalize(d.back());
      }
    }
    lrp::save_relevance_maps(layout.map_set("glm_token"), token);
    lrp::save_relevance_maps(layout.map_set("glm_nucleo_c"), c);
    lrp::save_relevance_maps(layout.map_set("glm_nucleo_d"), d);
    log << "transform: glm_token, glm_nucleo_c, glm_nucleo_d\n";
  }
  if (cnn) {
    std::vector<RelevanceMap> nucleo, a, b;
    for (std::size_t i = 0; i < cnn_raw.size(); ++i) {
      nucleo.push_back(attrib::renormalize(cnn_raw[i]));
      if (!vocab) continue;
      const auto partition = seqdata::bpe_tokenize(test.samples[i].sequence, *vocab).partition;
      if (s.renormalize_first) {
        a.push_back(attrib::aggregate(nucleo.back(), partition, Strategy::ASum));
        b.push_back(attrib::aggregate(nucleo.back(), partition, Strategy::BMean));
      } else {
        a.push_back(attrib::renormalize(attrib::aggregate(cnn_raw[i], partition, Strategy::ASum)));
        b.push_back(attrib::renormalize(attrib::aggregate(cnn_raw[i], partition, Strategy::BMean)));
      }
    }
    lrp::save_relevance_maps(layout.map_set("cnn_nucleo"), nucleo);
    if (vocab) {
      lrp::save_relevance_maps(layout.map_set("cnn_token_a"), a);
      lrp::save_relevance_maps(layout.map_set("cnn_token_b"), b);
      log << "transform: cnn_nucleo, cnn_token_a, cnn_token_b\n";
    } else {
      log << "transform: cnn_nucleo (no vocabulary, token-level CNN sets skipped)\n";
    }
  }
}

const std::vector<std::string> kAllSets{"glm_token",  "glm_nucleo_c", "glm_nucleo_d",
                                        "cnn_nucleo", "cnn_token_a",  "cnn_token_b"};

std::string strategy_of(const RelevanceMap& m) { return m.strategy.empty() ? "none" : m.strategy; }

void cmd_metrics(const Settings& s, const Layout& layout, std::ostream& log) {
  require(layout.test_data(), "gen");
  const auto test = seqdata::load_dataset(layout.test_data());
  std::map<std::string, std::vector<RelevanceMap>> sets;
  for (const auto& name : kAllSets)
    if (fs::exists(layout.map_set(name))) sets[name] = load_maps_for(layout.map_set(name), test);
  if (sets.empty()) throw DataError("no post-processed relevance maps; run the 'transform' command first");
  auto pairs = s.metrics.pairs;
  if (pairs.empty()) {
    for (const auto& [a, b] : std::vector<std::pair<std::string, std::string>>{{"glm_nucleo_c", "cnn_nucleo"},
                                                                             {"glm_nucleo_d", "cnn_nucleo"},
                                                                             {"glm_token", "cnn_token_a"},
                                                                             {"glm_token", "cnn_token_b"}})
      if (sets.count(a) && sets.count(b)) pairs.emplace_back(a, b);
  } else {
    for (const auto& [a, b] : pairs)
      for (const auto& n : {a, b})
        if (!sets.count(n)) require(layout.map_set(n), "transform");
  }
  echo_config(layout, "metrics", s);

  std::vector<metrics::MetricRow> rows;
  for (const auto& [name, maps] : sets) {
    const auto model = set_model(name);
    const auto idx = select_subset(layout, test, s.metrics.subset, {model});
    std::vector<double> gini, entropy;
    for (std::size_t i : idx) {
      gini.push_back(metrics::gini_index(maps[i].scores));
      if (std::any_of(maps[i].scores.begin(), maps[i].scores.end(), [](double v) { return v != 0.0; }))
        entropy.push_back(metrics::shannon_entropy(maps[i].scores));
    }
    if (idx.empty()) continue;
    const auto gran = std::string(lrp::to_string(maps[idx.front()].granularity));
    const auto strat = strategy_of(maps[idx.front()]);
    const auto g = metrics::mean_sd(gini);
    rows.push_back({model, "gini", gran, strat, g.mean, g.sd});
    if (!entropy.empty()) {
      const auto e = metrics::mean_sd(entropy);
      rows.push_back({model, "entropy", gran, strat, e.mean, e.sd});
    }
    log << "metrics: " << name << " over " << idx.size() << " sequences\n";
  }
  for (const auto& [a, b] : pairs) {
    const auto& ma = sets.at(a);
    const auto& mb = sets.at(b);
    const auto idx = select_subset(layout, test, s.metrics.subset, {set_model(a), set_model(b)});
    if (idx.empty()) continue;
    std::vector<double> cj;
    for (std::size_t i : idx) cj.push_back(metrics::continuous_jaccard(ma[i].scores, mb[i].scores));
    std::string strat = ma[idx.front()].strategy;
    if (!mb[idx.front()].strategy.empty()) strat += (strat.empty() ? "" : "+") + mb[idx.front()].strategy;
    if (strat.empty()) strat = "none";
    const auto model = set_model(a) + "-vs-" + set_model(b);
    const auto gran = std::string(lrp::to_string(ma[idx.front()].granularity));
    const auto ms = metrics::mean_sd(cj);
    rows.push_back({model, "cj", gran, strat, ms.mean, ms.sd});
    rows.push_back({model, "cj_median", gran, strat, metrics::median(cj), 0.0});
    log << "metrics: CJ " << a << " vs " << b << " over " << idx.size() << " sequences\n";
  }
  write_text(layout.metrics(), metrics::metrics_tsv(rows));
}

void cmd_faithfulness(const Settings& s, const Layout& layout, std::ostream& log) {
  require(layout.test_data(), "gen");
  const auto test = seqdata::load_dataset(layout.test_data());
  struct Job {
    std::string model;
    std::vector<RelevanceMap> maps;
    std::vector<std::size_t> idx;
  };
  std::vector<Job> jobs;
  std::optional<LoadedGlm> glm;
  std::optional<models::ToyCnn> cnn;
  for (const auto& m : s.models) {
    const std::string set = m == "glm" ? "glm_token" : "cnn_nucleo";
    require(layout.map_set(set), "transform");
    if (m == "glm")
      glm = load_glm(layout);
    else
      cnn = load_cnn(layout);
    jobs.push_back({m, load_maps_for(layout.map_set(set), test), select_subset(layout, test, s.faithfulness.subset, {m})});
  }
  echo_config(layout, "faithfulness", s);

  for (const auto& job : jobs) {
    std::unique_ptr<models::SequenceClassifier> clf;
    if (job.model == "glm")
      clf = std::make_unique<models::GlmClassifier>(glm->model, glm->vocab);
    else
      clf = std::make_unique<models::CnnClassifier>(*cnn);
    std::vector<seqdata::Sample> samples;
    std::vector<RelevanceMap> maps;
    for (std::size_t i : job.idx) {
      samples.push_back(test.samples[i]);
      maps.push_back(job.maps[i]);
    }
    std::vector<std::pair<metrics::Order, metrics::Scheme>> grid;
    for (auto o : s.faithfulness.orders)
      for (auto sc : s.faithfulness.schemes) grid.emplace_back(o, sc);
    std::vector<metrics::FaithfulnessCurve> curves(grid.size());
    parallel_for(grid.size(), s.workers, [&](std::size_t g) {
      metrics::FaithfulnessOptions opts;
      opts.order = grid[g].first;
      opts.scheme = grid[g].second;
      opts.ks = s.faithfulness.ks;
      opts.seed = step_seed(s.seed, "faithfulness");
      opts.absolute = s.faithfulness.absolute;
      curves[g] = metrics::faithfulness_curve(*clf, samples, maps, opts);
    });
    write_text(layout.faithfulness(job.model), metrics::curves_tsv(job.model, curves));
    log << "faithfulness: " << job.model << " over " << samples.size() << " sequences\n";
  }
}

std::string clusters_tsv(const std::vector<motifdb::Cluster>& clusters) {
  std::string out = "id\tsupport\twidth\ttrimmed_left\treverse_members\n";
  for (const auto& c : clusters) {
    std::size_t rev = 0;
    for (const auto& m : c.members) rev += m.reverse;
    out += c.pwm.id + '\t' + std::to_string(c.pwm.support) + '\t' + std::to_string(c.pwm.width()) + '\t' +
           std::to_string(c.trimmed_left) + '\t' + std::to_string(rev) + '\n';
  }
  return out;
}

std::string seqlets_tsv(const std::vector<motifdb::Seqlet>& seqlets) {
  std::string out = "sample\tstart\tend\tletters\n";
  for (const auto& q : seqlets)
    out += q.sample_id + '\t' + std::to_string(q.start) + '\t' + std::to_string(q.end) + '\t' + q.letters + '\n';
  return out;
}

void cmd_motifs(const Settings& s, const Layout& layout, std::ostream& log) {
  require(layout.test_data(), "gen");
  const auto test = seqdata::load_dataset(layout.test_data());
  if (!fs::exists(s.motifs.database)) throw DataError("motif database " + s.motifs.database.string() + " not found");
  const auto db = motifdb::load_meme(s.motifs.database);
  std::vector<std::pair<std::string, std::vector<RelevanceMap>>> inputs;
  for (const auto& set : s.motifs.sets)
    if (contains(s.models, set_model(set)) && fs::exists(layout.map_set(set)))
      inputs.emplace_back(set, load_maps_for(layout.map_set(set), test));
  if (inputs.empty()) throw DataError("no nucleotide-level map sets found; run the 'transform' command first");
  echo_config(layout, "motifs", s);

  for (const auto& [set, all_maps] : inputs) {
    const auto idx = select_subset(layout, test, s.motifs.subset, {set_model(set)});
    std::vector<RelevanceMap> maps;
    std::vector<seqdata::Sample> samples;
    for (std::size_t i : idx) {
      maps.push_back(all_maps[i]);
      samples.push_back(test.samples[i]);
    }
    const auto report = motifdb::extract_seqlets(maps, samples, s.motifs.seqlets);
    for (const auto& id : report.skipped) log << "motifs: warning: " << id << " is shorter than the window, skipped\n";
    write_text(layout.motifs() / (set + "_seqlets.tsv"), seqlets_tsv(report.seqlets));
    std::vector<motifdb::Cluster> clusters;
    std::vector<motifdb::Pwm> pwms;
    if (!report.seqlets.empty()) {
      clusters = motifdb::build_pwms(report.seqlets, s.motifs.clusters);
      for (const auto& c : clusters) pwms.push_back(c.pwm);
    } else {
      log << "motifs: warning: no seqlets passed the threshold for " << set << "\n";
    }
    write_text(layout.motifs() / (set + "_pwms.meme"), motifdb::to_meme(pwms));
    write_text(layout.motifs() / (set + "_clusters.tsv"), clusters_tsv(clusters));
    std::vector<motifdb::MotifMatch> matches;
    if (!pwms.empty()) matches = motifdb::match_database(pwms, db, s.motifs.match);
    std::vector<motifdb::MotifMatch> significant;
    for (const auto& m : matches)
      if (m.p_value <= s.motifs.p_cutoff) significant.push_back(m);
    write_text(layout.motifs() / (set + "_matches.tsv"), motifdb::matches_tsv(significant));
    for (std::size_t k = 0; k < std::min(s.motifs.max_logos, pwms.size()); ++k)
      write_text(layout.logos() / (set + "_" + pwms[k].id + ".svg"), motifdb::render_logo(pwms[k]));
    for (std::size_t k = 0; k < std::min(s.motifs.sample_logos, maps.size()); ++k)
      write_text(layout.logos() / (set + "_" + samples[k].id + ".svg"),
                 motifdb::render_logo(maps[k], samples[k].sequence.str()));
    log << "motifs: " << set << ": " << report.seqlets.size() << " seqlets, " << pwms.size() << " PWMs, "
        << significant.size() << " significant matches\n";
  }
}

// ---------------------------------------------------------------- report

std::vector<std::vector<std::string>> read_tsv(const fs::path& path) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(read_text(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
      const auto tab = line.find('\t', start);
      cells.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::string markdown_table(const std::vector<std::vector<std::string>>& rows) {
  if (rows.empty()) return "";
  std::string out;
  auto line = [&](const std::vector<std::string>& r) {
    out += "|";
    for (const auto& c : r) out += " " + c + " |";
    out += "\n";
  };
  line(rows[0]);
  out += "|";
  for (std::size_t i = 0; i < rows[0].size(); ++i) out += " --- |";
  out += "\n";
  for (std::size_t i = 1; i < rows.size(); ++i) line(rows[i]);
  return out;
}

std::string rel(const Layout& layout, const fs::path& p) { return fs::relative(p, layout.root).generic_string(); }

void cmd_report(const Settings& s, const Layout& layout, std::ostream& log) {
  if (!fs::exists(layout.root)) throw DataError("output directory " + layout.root.string() + " does not exist; run 'gen' first");
  echo_config(layout, "report", s);
  std::string md = "# seqlrp report\n\n";

  md += "## Training\n\n";
  bool any = false;
  for (const char* m : {"glm", "cnn"}) {
    if (!fs::exists(layout.train_log(m))) continue;
    const auto rows = read_tsv(layout.train_log(m));
    if (rows.size() < 2) continue;
    any = true;
    md += "- " + std::string(m) + ": " + std::to_string(rows.size() - 1) + " epochs, final test accuracy " +
          rows.back()[2] + " ([log](" + rel(layout, layout.train_log(m)) + "))\n";
  }
  md += any ? "\n" : "No trained models.\n\n";

  md += "## Attribution metrics\n\n";
  md += fs::exists(layout.metrics()) ? markdown_table(read_tsv(layout.metrics())) + "\n" : "Not computed.\n\n";

  md += "## Faithfulness\n\n";
  any = false;
  for (const char* m : {"glm", "cnn"}) {
    if (!fs::exists(layout.faithfulness(m))) continue;
    any = true;
    md += "### " + std::string(m) + "\n\n" + markdown_table(read_tsv(layout.faithfulness(m))) + "\n";
  }
  if (!any) md += "Not computed.\n\n";

  md += "## Motifs\n\n";
  any = false;
  for (const auto& set : {"glm_nucleo_c", "glm_nucleo_d", "cnn_nucleo"}) {
    const auto matches = layout.motifs() / (std::string(set) + "_matches.tsv");
    const auto clusters = layout.motifs() / (std::string(set) + "_clusters.tsv");
    if (!fs::exists(clusters)) continue;
    any = true;
    md += "### " + std::string(set) + "\n\n" + markdown_table(read_tsv(clusters)) + "\n";
    if (fs::exists(matches)) {
      const auto rows = read_tsv(matches);
      md += rows.size() > 1 ? "Significant matches (p <= " + fmt6(s.motifs.p_cutoff) + "):\n\n" + markdown_table(rows) + "\n"
                            : "No significant matches.\n\n";
    }
  }
  if (!any) md += "Not computed.\n\n";

  md += "## Artifacts\n\n";
  std::vector<std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(layout.root))
    if (e.is_regular_file() && e.path() != layout.report()) files.push_back(rel(layout, e.path()));
  std::sort(files.begin(), files.end());
  for (const auto& f : files) md += "- [" + f + "](" + f + ")\n";
  write_text(layout.report(), md);
  log << "report: " << layout.report().string() << "\n";
}

}  // namespace

void run(std::string_view command, const Settings& settings, std::ostream& log) {
  const Layout layout{settings.output_dir};
  if (command == "gen") return cmd_gen(settings, layout, log);
  if (command == "train") return cmd_train(settings, layout, log);
  if (command == "explain") return cmd_explain(settings, layout, log);
  if (command == "transform") return cmd_transform(settings, layout, log);
  if (command == "metrics") return cmd_metrics(settings, layout, log);
  if (command == "faithfulness") return cmd_faithfulness(settings, layout, log);
  if (command == "motifs") return cmd_motifs(settings, layout, log);
  if (command == "report") return cmd_report(settings, layout, log);
  throw ConfigError("unknown command '" + std::string(command) + "'");
}

void run_all(const Settings& settings, std::ostream& log) {
  for (auto c : kCommands) run(c, settings, log);
}

}  // namespace seqlrp::cli
