#include "topicdpr/cli.hpp"

#include "topicdpr/corpus.hpp"
#include "topicdpr/embeddings.hpp"
#include "topicdpr/error.hpp"
#include "topicdpr/experiment.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>

namespace topicdpr::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  std::string corpus, emb, queries, query_emb, context_emb;
  std::string test_queries, test_query_emb, test_context_emb;
  std::string model, index, distributions, assignment, word_vectors;
  std::string metrics;
  std::string out;
  std::string config;
  int k = 10;
  int t = 0;
  int t_min = 1;
  int t_max = 8;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  int runs = 1;
  int max_iters = 100;
  double tolerance = 1e-4;
  int restarts = 1;
  SyntheticSpec synth;
};

fs::path prepare_out(const std::string& out) {
  fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  f << text;
  if (!f) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, path.string() + ": " + e.what());
  }
}

std::string fixed(double v, int precision = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json report_json(const EvalReport& report) {
  json per_query = json::object();
  for (const auto& [id, m] : report.per_query) {
    json q{{"history_length_tokens", m.history_length_tokens}};
    if (m.recall_at_k) q["r@" + std::to_string(report.k_used)] = *m.recall_at_k;
    if (m.p_at_1) q["p@1"] = *m.p_at_1;
    if (m.f1) q["f1"] = *m.f1;
    if (m.kilt_f1) q["kilt_f1"] = *m.kilt_f1;
    per_query[id] = std::move(q);
  }
  json j{{"aggregate", report.aggregate},
         {"per_query", std::move(per_query)},
         {"k_used", report.k_used},
         {"retrieval_k", report.retrieval_k}};
  if (report.pearson_length_f1) {
    j["pearson_length_f1"] = {{"r", report.pearson_length_f1->r}, {"p_value", report.pearson_length_f1->p_value}};
  } else {
    j["pearson_length_f1"] = nullptr;
  }
  return j;
}

std::string aggregate_table(const EvalReport& report) {
  std::size_t width = 6;
  for (const auto& [name, _] : report.aggregate) width = std::max(width, name.size());
  std::ostringstream s;
  s << std::left << std::setw(static_cast<int>(width)) << "metric" << "  value\n";
  for (const auto& [name, value] : report.aggregate) {
    s << std::left << std::setw(static_cast<int>(width)) << name << "  " << fixed(value) << "\n";
  }
  if (report.pearson_length_f1) {
    s << "pearson(history length, f1): r=" << fixed(report.pearson_length_f1->r)
      << " p=" << fixed(report.pearson_length_f1->p_value) << "\n";
  }
  return s.str();
}

std::vector<EvalQuery> load_eval_queries(const std::string& queries, const std::string& query_emb,
                                         const std::string& context_emb) {
  const auto records = load_queries(queries);
  const auto qemb = load_embeddings(query_emb);
  if (context_emb.empty()) return attach_vectors(records, qemb);
  const auto cemb = load_embeddings(context_emb);
  return attach_vectors(records, qemb, &cemb);
}

std::unique_ptr<TopicProvider> make_provider(const Options& o, std::unique_ptr<TopicModel>& model_holder) {
  if (!o.distributions.empty()) return std::make_unique<ExternalTopicProvider>(load_distributions(o.distributions));
  model_holder = std::make_unique<TopicModel>(load_model(o.model));
  return std::make_unique<ModelTopicProvider>(*model_holder);
}

TrainConfig train_config(const Options& o) {
  TrainConfig c;
  c.max_iters = o.max_iters;
  c.tolerance = o.tolerance;
  c.seed = o.seed;
  c.temperature = o.temperature;
  c.restarts = o.restarts;
  return c;
}

void require_runs_one(const Options& o, const char* command) {
  if (o.runs != 1) {
    throw Error(ErrorCode::kUsage, std::string(command) + " is deterministic; --runs > 1 applies only to sweep-t");
  }
}

int cmd_ingest_check(const Options& o, std::ostream& out) {
  const auto corpus = load_corpus(o.corpus);
  json report{{"passages", corpus.size()}, {"pages", corpus.pages().size()}, {"corpus_hash", corpus_hash(corpus)}};
  out << "passages: " << corpus.size() << "\npages: " << corpus.pages().size() << "\n";
  if (!o.emb.empty()) {
    const auto emb = load_embeddings(o.emb);
    const auto a = validate_alignment(corpus, emb);
    report["dim"] = emb.dim();
    report["missing_embeddings"] = a.missing_embeddings;
    report["extraneous"] = a.extraneous;
    report["same_order"] = a.same_order;
    out << "dim: " << emb.dim() << "\nmissing embeddings: " << a.missing_embeddings.size()
        << "\nextraneous embeddings: " << a.extraneous.size() << "\nsame order: " << (a.same_order ? "yes" : "no")
        << "\n";
    if (!o.out.empty()) write_json(prepare_out(o.out) / "ingest.json", report);
    if (!a.missing_embeddings.empty() || !a.extraneous.empty()) {
      throw Error(ErrorCode::kMissingField, std::to_string(a.missing_embeddings.size()) +
                                                " passages lack embeddings and " +
                                                std::to_string(a.extraneous.size()) + " embeddings are not in the corpus");
    }
  }
  if (!o.queries.empty()) {
    const auto queries = load_queries(o.queries);
    for (const auto& q : queries) validate(q);
    report["queries"] = queries.size();
    out << "queries: " << queries.size() << "\n";
    if (!o.query_emb.empty()) {
      load_eval_queries(o.queries, o.query_emb, o.context_emb);
      out << "query vectors: ok\n";
    }
  }
  if (!o.out.empty()) write_json(prepare_out(o.out) / "ingest.json", report);
  return 0;
}

int cmd_train_topics(const Options& o, std::ostream& out) {
  require_runs_one(o, "train-topics");
  const auto emb = load_embeddings(o.emb);
  const auto model = train_topics(emb, o.t, train_config(o));
  const auto dir = prepare_out(o.out);
  save_model(dir / "model.tpm", model);
  out << "trained " << model.num_topics() << " topics on " << emb.count() << " vectors -> "
      << (dir / "model.tpm").string() << "\n";
  return 0;
}

json assignment_json(const TopicAssignment& assignment, Eigen::Index num_topics) {
  return json{{"T", num_topics}, {"assignment", assignment}};
}

std::pair<TopicAssignment, int> read_assignment(const fs::path& path) {
  const auto j = read_json(path);
  try {
    const int t = j.at("T").get<int>();
    auto a = j.at("assignment").get<TopicAssignment>();
    for (const auto& [id, topic] : a) {
      if (topic < 0 || topic >= t) {
        throw Error(ErrorCode::kFormat, path.string() + ": topic " + std::to_string(topic) + " of \"" + id +
                                            "\" outside [0, " + std::to_string(t) + ")");
      }
    }
    return {std::move(a), t};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, path.string() + ": " + e.what());
  }
}

int cmd_assign(const Options& o, std::ostream& out) {
  const auto model = load_model(o.model);
  const auto emb = load_embeddings(o.emb);
  const auto assignment = assign_all(model, emb);
  write_json(prepare_out(o.out) / "assignment.json", assignment_json(assignment, model.num_topics()));
  std::vector<int> sizes(static_cast<std::size_t>(model.num_topics()), 0);
  for (const auto& [_, t] : assignment) ++sizes[static_cast<std::size_t>(t)];
  for (std::size_t t = 0; t < sizes.size(); ++t) out << "topic " << t << ": " << sizes[t] << " passages\n";
  return 0;
}

int cmd_build_index(const Options& o, std::ostream& out) {
  const auto corpus = load_corpus(o.corpus);
  const auto emb = load_embeddings(o.emb);
  TopicAssignment assignment;
  int t = 0;
  if (!o.assignment.empty()) {
    std::tie(assignment, t) = read_assignment(o.assignment);
  } else {
    const auto model = load_model(o.model);
    assignment = assign_all(model, emb);
    t = static_cast<int>(model.num_topics());
  }
  const auto index = build_index(corpus, split_by_assignment(emb, assignment, t));
  const auto dir = prepare_out(o.out);
  save_index(dir, index, corpus);
  out << "index: " << index.num_topics() << " shards, " << index.total_passages() << " passages -> " << dir.string()
      << "\n";
  for (int e : index.empty_shards()) out << "warning: shard " << e << " is empty\n";
  return 0;
}

int cmd_retrieve(const Options& o, std::ostream& out) {
  require_runs_one(o, "retrieve");
  const auto corpus = load_corpus(o.corpus);
  const auto index = load_index(o.index, &corpus);
  const auto queries = load_eval_queries(o.queries, o.query_emb, o.context_emb);
  std::unique_ptr<TopicModel> model;
  const auto provider = make_provider(o, model);
  std::vector<RetrievalRecord> records;
  records.reserve(queries.size());
  for (const auto& q : queries) {
    const auto w = provider->distribution(q.record.id, q.topic_input());
    records.push_back({q.record.id, retrieve(index, q.vector, w, o.k)});
  }
  const auto dir = prepare_out(o.out);
  write_retrieval(dir / "retrieval.jsonl", records);
  out << "retrieved top-" << o.k << " for " << records.size() << " queries -> "
      << (dir / "retrieval.jsonl").string() << "\n";
  return 0;
}

int cmd_evaluate(const Options& o, std::ostream& out) {
  require_runs_one(o, "evaluate");
  const auto corpus = load_corpus(o.corpus);
  const auto index = load_index(o.index, &corpus);
  const auto queries = load_eval_queries(o.queries, o.query_emb, o.context_emb);
  std::unique_ptr<TopicModel> model;
  const auto provider = make_provider(o, model);
  EvalOptions options;
  options.k = o.k;
  if (!o.metrics.empty()) options.metrics = parse_metrics(o.metrics, &options.recall_k);
  const auto run = run_eval(index, *provider, corpus, queries, options);
  const auto dir = prepare_out(o.out);
  write_json(dir / "report.json", report_json(run.report));
  write_retrieval(dir / "retrieval.jsonl", run.retrievals);
  out << aggregate_table(run.report);
  return 0;
}

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double stdev_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

std::string sweep_table(const SweepResult& result, int recall_k) {
  const std::string r = "R@" + std::to_string(recall_k);
  const std::vector<std::pair<std::string, int>> rows{{"Topic coherence", 0}, {"Validation " + r, 1}, {"Test " + r, 2}};
  std::size_t label = std::string("Number of Topics (T)").size();
  std::ostringstream s;
  s << std::left << std::setw(static_cast<int>(label)) << "Number of Topics (T)";
  for (const auto& [t, _] : result.per_t) s << "  " << std::right << std::setw(7) << t;
  s << "\n";
  for (const auto& [name, which] : rows) {
    s << std::left << std::setw(static_cast<int>(label)) << name;
    for (const auto& [t, row] : result.per_t) {
      std::string cell;
      if (which == 0) {
        cell = row.coherence ? fixed(*row.coherence, 3) : "-";
      } else {
        cell = fixed(100.0 * (which == 1 ? row.validation_r_at_k : row.test_r_at_k), 1);
      }
      s << "  " << std::right << std::setw(7) << cell;
    }
    s << "\n";
  }
  s << "chosen T = " << result.chosen_t << "\n";
  return s.str();
}

int cmd_sweep_t(const Options& o, std::ostream& out) {
  if (o.runs < 1) throw Error(ErrorCode::kUsage, "--runs must be >= 1");
  const auto corpus = load_corpus(o.corpus);
  const auto emb = load_embeddings(o.emb);
  const auto validation = load_eval_queries(o.queries, o.query_emb, o.context_emb);
  std::vector<EvalQuery> test;
  if (!o.test_queries.empty()) {
    if (o.test_query_emb.empty()) throw Error(ErrorCode::kUsage, "--test-queries requires --test-query-emb");
    test = load_eval_queries(o.test_queries, o.test_query_emb, o.test_context_emb);
  }
  std::optional<WordVectors> words;
  if (!o.word_vectors.empty()) words = word_vectors_from(load_embeddings(o.word_vectors));

  SweepConfig config;
  config.train = train_config(o);
  config.k = o.k;

  std::vector<SweepResult> runs;
  for (int r = 0; r < o.runs; ++r) {
    config.train.seed = o.seed + static_cast<std::uint64_t>(r);
    runs.push_back(sweep_t(corpus, emb, validation, test, o.t_min, o.t_max, config, words ? &*words : nullptr));
  }

  SweepResult mean;
  const std::string suffix = "_r_at_" + std::to_string(config.recall_k);
  json per_t = json::object();
  for (const auto& [t, _] : runs.front().per_t) {
    std::vector<double> val, tst, coh;
    for (const auto& run : runs) {
      const auto& row = run.per_t.at(t);
      val.push_back(row.validation_r_at_k);
      tst.push_back(row.test_r_at_k);
      if (row.coherence) coh.push_back(*row.coherence);
    }
    SweepRow row{mean_of(val), mean_of(tst), coh.size() == runs.size() ? std::optional(mean_of(coh)) : std::nullopt};
    json j{{"validation" + suffix, row.validation_r_at_k},
           {"test" + suffix, test.empty() ? json(nullptr) : json(row.test_r_at_k)},
           {"coherence", optional_json(row.coherence)}};
    if (o.runs > 1) {
      j["validation" + suffix + "_stdev"] = stdev_of(val);
      j["test" + suffix + "_stdev"] = test.empty() ? json(nullptr) : json(stdev_of(tst));
      j["coherence_stdev"] = row.coherence ? json(stdev_of(coh)) : json(nullptr);
    }
    per_t[std::to_string(t)] = std::move(j);
    mean.per_t.emplace(t, row);
  }
  mean.chosen_t = choose_t(mean.per_t);

  const auto dir = prepare_out(o.out);
  write_json(dir / "sweep.json", json{{"per_T", std::move(per_t)}, {"chosen_T", mean.chosen_t}, {"runs", o.runs}});
  const auto table = sweep_table(mean, config.recall_k);
  write_text(dir / "sweep.txt", table);
  out << table;
  return 0;
}

EmbeddingMatrix query_matrix(const std::vector<EvalQuery>& queries, bool context) {
  std::vector<std::string> ids;
  RowMatrixXf m(static_cast<Eigen::Index>(queries.size()),
                queries.empty() ? 0 : (context ? queries[0].topic_context.size() : queries[0].vector.size()));
  for (std::size_t i = 0; i < queries.size(); ++i) {
    ids.push_back(queries[i].record.id);
    m.row(static_cast<Eigen::Index>(i)) = (context ? queries[i].topic_context : queries[i].vector).transpose();
  }
  return EmbeddingMatrix(std::move(ids), std::move(m));
}

std::vector<QueryRecord> records_of(const std::vector<EvalQuery>& queries) {
  std::vector<QueryRecord> out;
  for (const auto& q : queries) out.push_back(q.record);
  return out;
}

int cmd_synth(const Options& o, std::ostream& out) {
  SyntheticSpec spec = o.synth;
  spec.seed = o.seed;
  const auto data = generate_synthetic(spec);
  const auto dir = prepare_out(o.out);
  write_corpus(dir / "corpus.jsonl", data.corpus);
  write_embeddings(dir / "passages.emb", data.passages);
  write_embeddings(dir / "words.emb", data.word_vectors);
  write_queries(dir / "val_queries.jsonl", records_of(data.validation));
  write_embeddings(dir / "val_query.emb", query_matrix(data.validation, false));
  write_embeddings(dir / "val_context.emb", query_matrix(data.validation, true));
  write_queries(dir / "test_queries.jsonl", records_of(data.test));
  write_embeddings(dir / "test_query.emb", query_matrix(data.test, false));
  write_embeddings(dir / "test_context.emb", query_matrix(data.test, true));
  write_json(dir / "planted.json", assignment_json(data.planted, spec.true_topics));
  out << "synthetic: " << data.corpus.size() << " passages, " << data.validation.size() << " validation and "
      << data.test.size() << " test queries, dim " << spec.dim << " -> " << dir.string() << "\n";
  return 0;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
}

// Splices `key = value` lines from a --config file into the argument list
// as --key value, skipping keys already given on the command line.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  auto it = std::find(args.begin(), args.end(), "--config");
  if (it == args.end() || std::next(it) == args.end()) return args;
  const fs::path path(*std::next(it));
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::kIo, "cannot open config " + path.string());
  std::vector<std::string> out = args;
  std::string line;
  int number = 0;
  while (std::getline(f, line)) {
    ++number;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kFormat, path.string() + ":" + std::to_string(number) + ": expected key=value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key.empty() || key == "config") {
      throw Error(ErrorCode::kFormat, path.string() + ":" + std::to_string(number) + ": bad key \"" + key + "\"");
    }
    const std::string flag = "--" + key;
    const bool given = std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == flag || a.starts_with(flag + "=");
    });
    if (!given) {
      out.push_back(flag);
      out.push_back(value);
    }
  }
  return out;
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Topic-sharded dense passage retrieval"};
  app.require_subcommand(1, 1);

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "key=value file; command-line flags override it");
    sub->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  };
  auto add_out = [&](CLI::App* sub, bool required = true) {
    auto* opt = sub->add_option("--out", o.out, "Output directory");
    if (required) opt->required();
  };
  auto add_training = [&](CLI::App* sub) {
    sub->add_option("--temperature", o.temperature, "Softmax temperature")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--max-iters", o.max_iters, "k-means iteration cap")->check(CLI::PositiveNumber);
    sub->add_option("--tolerance", o.tolerance, "Stop when this fraction of points moves")->check(CLI::NonNegativeNumber);
    sub->add_option("--restarts", o.restarts, "k-means++ restarts")->check(CLI::PositiveNumber);
  };
  auto add_queries = [&](CLI::App* sub) {
    sub->add_option("--queries", o.queries, "Query JSONL")->required();
    sub->add_option("--query-emb", o.query_emb, "Query vectors (EMB1)")->required();
    sub->add_option("--context-emb", o.context_emb, "Topic-context vectors (EMB1)");
  };
  auto add_provider = [&](CLI::App* sub) {
    auto* m = sub->add_option("--model", o.model, "Topic model (TPM1)");
    auto* d = sub->add_option("--distributions", o.distributions, "Precomputed topic distributions (JSONL)");
    m->excludes(d);
    d->excludes(m);
    sub->callback([m, d] {
      if (m->count() + d->count() == 0) throw CLI::RequiredError("--model or --distributions");
    });
  };
  auto add_k = [&](CLI::App* sub) {
    sub->add_option("--k", o.k, "Passages retrieved per query")->check(CLI::PositiveNumber)->capture_default_str();
  };
  auto add_runs = [&](CLI::App* sub) {
    sub->add_option("--runs", o.runs, "Repeated runs with seeds seed..seed+runs-1")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  };

  auto* ingest = app.add_subcommand("ingest-check", "Validate corpus, embeddings and queries");
  add_common(ingest);
  ingest->add_option("--corpus", o.corpus, "Corpus JSONL")->required();
  ingest->add_option("--emb", o.emb, "Passage vectors (EMB1)");
  ingest->add_option("--queries", o.queries, "Query JSONL");
  ingest->add_option("--query-emb", o.query_emb, "Query vectors (EMB1)");
  ingest->add_option("--context-emb", o.context_emb, "Topic-context vectors (EMB1)");
  add_out(ingest, false);

  auto* train = app.add_subcommand("train-topics", "Fit the spherical k-means topic model");
  add_common(train);
  train->add_option("--emb", o.emb, "Passage vectors (EMB1)")->required();
  train->add_option("--t", o.t, "Number of topics")->required()->check(CLI::PositiveNumber);
  add_training(train);
  add_runs(train);
  add_out(train);

  auto* assign = app.add_subcommand("assign", "Assign passages to their argmax topic");
  add_common(assign);
  assign->add_option("--model", o.model, "Topic model (TPM1)")->required();
  assign->add_option("--emb", o.emb, "Passage vectors (EMB1)")->required();
  add_out(assign);

  auto* build = app.add_subcommand("build-index", "Split passages into per-topic shards");
  add_common(build);
  build->add_option("--corpus", o.corpus, "Corpus JSONL")->required();
  build->add_option("--emb", o.emb, "Passage vectors (EMB1)")->required();
  {
    auto* a = build->add_option("--assignment", o.assignment, "Assignment JSON from `assign`");
    auto* m = build->add_option("--model", o.model, "Topic model (TPM1)");
    a->excludes(m);
    m->excludes(a);
    build->callback([a, m] {
      if (a->count() + m->count() == 0) throw CLI::RequiredError("--assignment or --model");
    });
  }
  add_out(build);

  auto* ret = app.add_subcommand("retrieve", "Topic-weighted top-K retrieval");
  add_common(ret);
  ret->add_option("--corpus", o.corpus, "Corpus JSONL")->required();
  ret->add_option("--index", o.index, "Index directory")->required();
  add_queries(ret);
  add_provider(ret);
  add_k(ret);
  add_runs(ret);
  add_out(ret);

  auto* eval = app.add_subcommand("evaluate", "Retrieve and score against gold fields");
  add_common(eval);
  eval->add_option("--corpus", o.corpus, "Corpus JSONL")->required();
  eval->add_option("--index", o.index, "Index directory")->required();
  add_queries(eval);
  add_provider(eval);
  add_k(eval);
  eval->add_option("--metrics", o.metrics, "Comma list of r@N, p@1, f1, kilt-f1 (default: all applicable)");
  add_runs(eval);
  add_out(eval);

  auto* sweep = app.add_subcommand("sweep-t", "Train, index and evaluate for each T in a range");
  add_common(sweep);
  sweep->add_option("--corpus", o.corpus, "Corpus JSONL")->required();
  sweep->add_option("--emb", o.emb, "Passage vectors (EMB1)")->required();
  add_queries(sweep);
  sweep->add_option("--test-queries", o.test_queries, "Test query JSONL");
  sweep->add_option("--test-query-emb", o.test_query_emb, "Test query vectors (EMB1)");
  sweep->add_option("--test-context-emb", o.test_context_emb, "Test topic-context vectors (EMB1)");
  sweep->add_option("--word-vectors", o.word_vectors, "Word vectors for coherence (EMB1, ids are words)");
  sweep->add_option("--t-min", o.t_min, "Smallest T")->check(CLI::PositiveNumber)->capture_default_str();
  sweep->add_option("--t-max", o.t_max, "Largest T")->check(CLI::PositiveNumber)->capture_default_str();
  add_training(sweep);
  add_k(sweep);
  add_runs(sweep);
  add_out(sweep);

  auto* synth = app.add_subcommand("synth", "Generate a planted-topic synthetic dataset");
  add_common(synth);
  synth->add_option("--true-t", o.synth.true_topics, "Planted topics")->check(CLI::PositiveNumber);
  synth->add_option("--passages-per-topic", o.synth.passages_per_topic)->check(CLI::PositiveNumber);
  synth->add_option("--dim", o.synth.dim)->check(CLI::PositiveNumber);
  synth->add_option("--noise-sigma", o.synth.noise_sigma)->check(CLI::NonNegativeNumber);
  synth->add_option("--queries-per-topic", o.synth.queries_per_topic)->check(CLI::PositiveNumber);
  synth->add_option("--vocab-per-topic", o.synth.vocab_per_topic)->check(CLI::PositiveNumber);
  synth->add_option("--words-per-passage", o.synth.words_per_passage)->check(CLI::PositiveNumber);
  synth->add_option("--query-noise", o.synth.query_noise)->check(CLI::NonNegativeNumber);
  synth->add_option("--context-noise", o.synth.context_noise)->check(CLI::NonNegativeNumber);
  add_out(synth);

  std::vector<std::string> expanded;
  try {
    expanded = expand_config(args);
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << one_line(e.what()) << "\n";
    return 1;
  }
  try {
    std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: " << to_string(ErrorCode::kUsage) << ": " << one_line(e.what()) << "\n";
    return 2;
  }

  try {
    if (*ingest) return cmd_ingest_check(o, out);
    if (*train) return cmd_train_topics(o, out);
    if (*assign) return cmd_assign(o, out);
    if (*build) return cmd_build_index(o, out);
    if (*ret) return cmd_retrieve(o, out);
    if (*eval) return cmd_evaluate(o, out);
    if (*sweep) return cmd_sweep_t(o, out);
    if (*synth) return cmd_synth(o, out);
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << one_line(e.what()) << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: internal: " << one_line(e.what()) << "\n";
    return 1;
  }
  return 1;
}

}  // namespace topicdpr::cli
