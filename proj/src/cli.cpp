#include "toporag/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "toporag/agents.hpp"
#include "toporag/budget.hpp"
#include "toporag/config.hpp"
#include "toporag/encoder.hpp"
#include "toporag/error.hpp"
#include "toporag/evalkit.hpp"
#include "toporag/io.hpp"
#include "toporag/retrieval.hpp"
#include "toporag/trainer.hpp"

namespace toporag {

namespace {

bool is_user_error(Errc code) {
  switch (code) {
    case Errc::InvalidArgument:
    case Errc::Io:
    case Errc::MalformedJson:
    case Errc::UnknownLinkEndpoint:
    case Errc::DuplicateInterface:
    case Errc::InfeasibleSizes:
    case Errc::EmptyGraph:
    case Errc::NonPositiveTau:
    case Errc::EmptyCorpus:
    case Errc::ParseFailure:
    case Errc::MissingDriver:
    case Errc::EmptyIndex:
    case Errc::FingerprintMismatch:
    case Errc::MissingKnowledgeFile:
    case Errc::UnknownReference:
    case Errc::BadCalibration:
    case Errc::EmptyRecords: return true;
    default: return false;
  }
}

std::string fmt(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void require_file(const std::filesystem::path& p, const std::string& what) {
  if (p.empty()) throw Error(Errc::InvalidArgument, what + " path is not set");
  if (!std::filesystem::is_regular_file(p)) throw Error(Errc::Io, what + " " + p.string() + " not found");
}

void require_dir(const std::filesystem::path& p, const std::string& what) {
  if (p.empty()) throw Error(Errc::InvalidArgument, what + " path is not set");
  if (!std::filesystem::is_directory(p)) throw Error(Errc::Io, what + " " + p.string() + " not found");
}

std::filesystem::path out_dir(const RunConfig& config) {
  if (config.out.empty()) throw Error(Errc::InvalidArgument, "--out is not set");
  return config.out;
}

std::vector<TopologyGraph> load_graphs(const std::vector<CorpusCase>& corpus, const std::set<std::string>& ids) {
  std::vector<TopologyGraph> out;
  for (const auto& c : corpus) {
    if (ids.count(c.case_id) == 0) continue;
    try {
      out.push_back(build_graph(parse_topology(read_text_file(c.topology_path), c.case_id)));
    } catch (const Error& e) {
      throw Error(Errc::ParseFailure, c.case_id + ": " + e.what());
    }
  }
  return out;
}

SplitManifest load_splits(const std::filesystem::path& p) {
  require_file(p, "splits file");
  return SplitManifest::from_json(read_json_file(p));
}

LoopConfig loop_config(const RunConfig& config) {
  LoopConfig loop = config.loop;
  loop.seed = config.seed;
  if (!config.prompts.empty()) {
    require_dir(config.prompts, "prompts directory");
    loop.prompts = PromptTemplates::load(config.prompts);
  }
  return loop;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Topology-grounded configuration synthesis toolkit", "toporag"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::string> config_file;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_flag;
  app.add_option("--config", config_file, "INI config file ([paths], [backend], [budget], [trainer], [loop])");
  app.add_option("--seed", seed, "Base seed for every stochastic step");
  app.add_option("--out", out_flag, "Output directory");

  // Path flags shared by several commands.
  std::optional<std::string> corpus, splits, model, index, knowledge, prompts;
  auto add_path = [](CLI::App* cmd, const std::string& name, std::optional<std::string>& target,
                     const std::string& help) { cmd->add_option(name, target, help); };

  // parse
  auto* parse_cmd = app.add_subcommand("parse", "Parse a topology and print a graph summary");
  std::string parse_path;
  parse_cmd->add_option("topology", parse_path, "Topology JSON file")->required();

  // split
  auto* split_cmd = app.add_subcommand("split", "Write a split manifest for a corpus");
  add_path(split_cmd, "--corpus", corpus, "Corpus directory");
  std::optional<std::size_t> n_val, n_test, n_reference, n_query;
  split_cmd->add_option("--val", n_val, "Validation size");
  split_cmd->add_option("--test", n_test, "Test size");
  split_cmd->add_option("--reference", n_reference, "Reference pool size");
  split_cmd->add_option("--query", n_query, "Query set size");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the encoder on the train/val splits");
  add_path(train_cmd, "--corpus", corpus, "Corpus directory");
  add_path(train_cmd, "--splits", splits, "Split manifest");
  std::optional<int> epochs, patience;
  std::optional<std::size_t> batch;
  std::optional<double> lr, tau;
  train_cmd->add_option("--epochs", epochs, "Maximum epochs");
  train_cmd->add_option("--patience", patience, "Early-stopping patience");
  train_cmd->add_option("--batch-size", batch, "Minibatch size");
  train_cmd->add_option("--lr", lr, "Learning rate");
  train_cmd->add_option("--tau", tau, "InfoNCE temperature");

  // embed
  auto* embed_cmd = app.add_subcommand("embed", "Embed a topology, or build the reference index");
  std::optional<std::string> embed_path;
  bool build_index_flag = false;
  embed_cmd->add_option("topology", embed_path, "Topology JSON file");
  embed_cmd->add_flag("--build-index", build_index_flag, "Embed the reference split into <out>/refs.index.json");
  add_path(embed_cmd, "--model", model, "Encoder model file");
  add_path(embed_cmd, "--corpus", corpus, "Corpus directory");
  add_path(embed_cmd, "--splits", splits, "Split manifest");

  // retrieve
  auto* retrieve_cmd = app.add_subcommand("retrieve", "Rank reference cases by similarity to a topology");
  std::string retrieve_path;
  std::size_t k = 1;
  retrieve_cmd->add_option("topology", retrieve_path, "Topology JSON file")->required();
  retrieve_cmd->add_option("--k", k, "Number of matches")->check(CLI::PositiveNumber);
  add_path(retrieve_cmd, "--model", model, "Encoder model file");
  add_path(retrieve_cmd, "--index", index, "Reference index file");

  // run / eval share loop and backend flags
  std::optional<std::string> backend_kind, fault_kind, base_url;
  std::optional<double> fault_rate;
  std::optional<std::size_t> replicas, parallel;
  bool no_toporag = false;
  bool unconstrained = false;
  auto add_loop_flags = [&](CLI::App* cmd) {
    add_path(cmd, "--corpus", corpus, "Corpus directory");
    add_path(cmd, "--model", model, "Encoder model file");
    add_path(cmd, "--index", index, "Reference index file");
    add_path(cmd, "--knowledge", knowledge, "Background knowledge file");
    add_path(cmd, "--prompts", prompts, "Directory with planning.txt, generation.txt, verify.txt");
    cmd->add_option("--backend", backend_kind, "mock or http");
    cmd->add_option("--replicas", replicas, "Backend replicas in the pool");
    cmd->add_option("--base-url", base_url, "HTTP backend base URL");
    cmd->add_option("--fault-rate", fault_rate, "Mock fault rate in [0, 1]");
    cmd->add_option("--fault-kind", fault_kind, "Mock fault kind: V3, V4, V5 or V6");
    cmd->add_flag("--no-toporag", no_toporag, "Ground on the target topology and knowledge only");
    cmd->add_flag("--unconstrained", unconstrained, "Disable constrained decoding");
  };

  auto* run_cmd = app.add_subcommand("run", "Run one case end to end");
  std::optional<std::string> case_id, topology_flag;
  run_cmd->add_option("--case", case_id, "Case id inside the corpus");
  run_cmd->add_option("--topology", topology_flag, "Topology JSON file (instead of --case)");
  add_loop_flags(run_cmd);

  auto* eval_cmd = app.add_subcommand("eval", "Run the query set and write reports");
  std::optional<std::string> query_ids;
  eval_cmd->add_option("--query-ids", query_ids, "Comma-separated case ids (default: the split's query set)");
  eval_cmd->add_option("--parallel", parallel, "Cases run concurrently");
  add_path(eval_cmd, "--splits", splits, "Split manifest");
  add_loop_flags(eval_cmd);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUserError;
  }

  try {
    RunConfig config;
    if (config_file) {
      require_file(*config_file, "config file");
      apply_config_file(config, *config_file);
    }
    apply_environment(config);
    if (seed) config.seed = *seed;
    if (out_flag) config.out = *out_flag;
    if (corpus) config.corpus = *corpus;
    if (splits) config.splits = *splits;
    if (model) config.model = *model;
    if (index) config.index = *index;
    if (knowledge) config.knowledge = *knowledge;
    if (prompts) config.prompts = *prompts;
    if (backend_kind) config.backend = *backend_kind;
    if (replicas) config.replicas = *replicas;
    if (base_url) config.http.base_url = *base_url;
    if (fault_rate) config.mock.fault_rate = *fault_rate;
    if (fault_kind) {
      const auto kind = parse_fault(*fault_kind);
      if (!kind) throw Error(Errc::InvalidArgument, "--fault-kind must be V3, V4, V5 or V6");
      config.mock.fault_kind = *kind;
    }
    if (unconstrained) config.loop.constrained_decoding = false;
    if (parallel) config.parallelism = *parallel;
    if (n_val) config.sizes.val = *n_val;
    if (n_test) config.sizes.test = *n_test;
    if (n_reference) config.sizes.reference = *n_reference;
    if (n_query) config.sizes.query = *n_query;
    if (epochs) config.train.max_epochs = *epochs;
    if (patience) config.train.patience = *patience;
    if (batch) config.train.batch_size = *batch;
    if (lr) config.train.learning_rate = *lr;
    if (tau) config.train.tau = *tau;
    config.train.seed = config.seed;
    config.augment.seed = config.seed;

    if (parse_cmd->parsed()) {
      require_file(parse_path, "topology");
      const TopologyDoc doc = parse_topology(read_text_file(parse_path),
                                             std::filesystem::path(parse_path).parent_path().filename().string());
      const TopologyGraph g = build_graph(doc);
      out << "nodes=" << g.num_nodes() << " edges=" << g.num_edges() << " max_degree=" << g.max_degree() << "\n";
      const std::size_t preview = std::min<std::size_t>(g.num_nodes(), 8);
      for (std::size_t i = 0; i < preview; ++i) {
        out << "  " << g.nodes[i] << " [";
        for (int c = 0; c < kFeatureDim; ++c) out << (c > 0 ? "," : "") << g.features(static_cast<int>(i), c);
        out << "]\n";
      }
      if (preview < g.num_nodes()) out << "  ... " << g.num_nodes() - preview << " more\n";
      return kExitOk;
    }

    if (split_cmd->parsed()) {
      require_dir(config.corpus, "corpus");
      const auto dir = out_dir(config);
      const auto cases = scan_corpus(config.corpus);
      std::vector<std::string> ids;
      std::set<std::string> verified;
      for (const auto& c : cases) {
        ids.push_back(c.case_id);
        if (c.driver_path) verified.insert(c.case_id);
      }
      const SplitManifest m = make_splits(ids, verified, config.sizes, config.seed);
      write_json_file(dir / "splits.json", m.to_json());
      out << "verified=" << m.verified_ids.size() << " train=" << m.train_ids.size() << " val=" << m.val_ids.size()
          << " test=" << m.test_ids.size() << " reference=" << m.reference_ids.size()
          << " query=" << m.query_ids.size() << "\n";
      return kExitOk;
    }

    if (train_cmd->parsed()) {
      require_dir(config.corpus, "corpus");
      const SplitManifest m = load_splits(config.splits);
      const auto dir = out_dir(config);
      config.train.validate();
      config.augment.validate();
      const auto cases = scan_corpus(config.corpus);
      const auto train_graphs = load_graphs(cases, m.train_ids);
      const auto val_graphs = load_graphs(cases, m.val_ids);
      const TrainResult result = train(train_graphs, val_graphs, config.augment, config.train);
      save_model(result.model, dir / "model.json");
      write_text_file(dir / "train_log.jsonl", result.log_jsonl());
      out << "epochs=" << result.log.size() << " best_epoch=" << result.best_epoch
          << " initial_val_loss=" << fmt(result.initial_val_loss, 6) << " best_val_loss=" << fmt(result.best_val_loss, 6)
          << "\n";
      return kExitOk;
    }

    if (embed_cmd->parsed()) {
      require_file(config.model, "model");
      const EncoderModel enc = load_model(config.model);
      if (build_index_flag) {
        require_dir(config.corpus, "corpus");
        const SplitManifest m = load_splits(config.splits);
        const auto dir = out_dir(config);
        std::vector<ReferenceCase> refs;
        for (const auto& c : scan_corpus(config.corpus)) {
          if (m.reference_ids.count(c.case_id) == 0) continue;
          refs.push_back({c.topology_path, c.driver_path.value_or(c.topology_path.parent_path() / "driver.py")});
        }
        const ReferenceIndex idx = build_index(enc, refs);
        save_index(idx, dir / "refs.index.json");
        out << "indexed=" << idx.entries.size() << " fingerprint=" << idx.model_fingerprint << "\n";
        return kExitOk;
      }
      if (!embed_path) throw Error(Errc::InvalidArgument, "embed needs a topology file or --build-index");
      require_file(*embed_path, "topology");
      const TopologyDoc doc = parse_topology(read_text_file(*embed_path),
                                             std::filesystem::path(*embed_path).parent_path().filename().string());
      const Embedding e = encode(enc, build_graph(doc));
      const nlohmann::json j = {{"case_id", e.case_id},
                                {"vector", std::vector<double>(e.vector.data(), e.vector.data() + e.vector.size())}};
      if (out_flag || !config.out.empty()) {
        write_json_file(out_dir(config) / (doc.case_id.empty() ? std::string("embedding.json")
                                                                : doc.case_id + ".embedding.json"),
                        j);
      }
      out << j.dump() << "\n";
      return kExitOk;
    }

    if (retrieve_cmd->parsed()) {
      require_file(retrieve_path, "topology");
      require_file(config.model, "model");
      require_file(config.index, "index");
      const EncoderModel enc = load_model(config.model);
      const ReferenceIndex idx = load_index(config.index);
      const TopologyDoc doc = parse_topology(read_text_file(retrieve_path),
                                             std::filesystem::path(retrieve_path).parent_path().filename().string());
      const auto hits = retrieve(idx, build_graph(doc), enc, k);
      for (std::size_t i = 0; i < hits.size(); ++i) {
        out << i + 1 << " " << hits[i].case_id << " " << fmt(hits[i].similarity, 9) << "\n";
      }
      return kExitOk;
    }

    const LoopConfig loop = loop_config(config);

    if (run_cmd->parsed()) {
      const auto dir = out_dir(config);
      require_file(config.knowledge, "knowledge file");
      std::filesystem::path topo_path;
      std::string id;
      if (topology_flag) {
        topo_path = *topology_flag;
        id = case_id.value_or(topo_path.parent_path().filename().string());
      } else if (case_id) {
        require_dir(config.corpus, "corpus");
        topo_path = config.corpus / *case_id / "topology.json";
        id = *case_id;
      } else {
        throw Error(Errc::InvalidArgument, "run needs --case or --topology");
      }
      require_file(topo_path, "topology");
      const std::string text = read_text_file(topo_path);
      const TopologyGraph graph = build_graph(parse_topology(text, id));
      if (graph.num_nodes() == 0) throw Error(Errc::EmptyGraph, "topology has no devices");
      TopoRagContext context;
      double s_star = 0.0;
      if (no_toporag) {
        context = target_only_context(text, config.knowledge);
      } else {
        require_file(config.model, "model");
        require_file(config.index, "index");
        const EncoderModel enc = load_model(config.model);
        const ReferenceIndex idx = load_index(config.index);
        const auto hits = retrieve(idx, graph, enc, 1);
        context = assemble_context(idx, text, hits.front(), config.knowledge);
        s_star = hits.front().similarity;
      }
      const BudgetEnvelope env = envelope(difficulty(
          {s_star, static_cast<int>(graph.num_nodes()), static_cast<int>(graph.num_edges()), graph.max_degree()},
          config.calibration));
      const auto backend = make_backend(config);
      const CaseState state = run_case(id, context, *backend, env, loop, dir);
      out << state.case_id << " phase=" << phase_name(state.phase) << " iterations=" << state.iteration
          << " verify_runs=" << state.verify_runs << " tokens=" << state.tokens_total
          << " max_iterations=" << env.max_iterations << " token_cap=" << env.token_cap_per_call;
      if (!state.failure_mode.empty()) out << " failure_mode=" << state.failure_mode;
      out << "\n";
      return state.phase == Phase::Failed ? kExitInternalError : kExitOk;
    }

    if (eval_cmd->parsed()) {
      const auto dir = out_dir(config);
      require_dir(config.corpus, "corpus");
      require_file(config.knowledge, "knowledge file");
      const auto corpus_cases = scan_corpus(config.corpus);
      std::set<std::string> wanted;
      if (query_ids) {
        std::stringstream ss(*query_ids);
        for (std::string id; std::getline(ss, id, ',');) {
          if (!id.empty()) wanted.insert(id);
        }
      } else if (!config.splits.empty()) {
        wanted = load_splits(config.splits).query_ids;
      } else {
        for (const auto& c : corpus_cases) {
          if (!c.driver_path) wanted.insert(c.case_id);
        }
      }
      std::vector<EvalCase> cases;
      for (const auto& c : corpus_cases) {
        if (wanted.erase(c.case_id) != 0) cases.push_back({c.case_id, c.topology_path});
      }
      if (!wanted.empty()) throw Error(Errc::InvalidArgument, "query case " + *wanted.begin() + " is not in the corpus");

      EncoderModel enc = EncoderModel::zeros();
      ReferenceIndex idx;
      if (!no_toporag) {
        require_file(config.model, "model");
        require_file(config.index, "index");
        enc = load_model(config.model);
        idx = load_index(config.index);
      }
      EvalConfig eval;
      eval.loop = loop;
      eval.calibration = config.calibration;
      eval.knowledge_path = config.knowledge;
      eval.out_dir = dir;
      eval.use_toporag = !no_toporag;
      eval.parallelism = config.parallelism;
      const auto backend = make_backend(config);
      const EvalReport report = run_eval(cases, idx, enc, *backend, eval);
      out << "cases=" << report.records.size();
      for (const auto& [kk, v] : report.pass_at) out << " pass@" << kk << "=" << fmt(v, 3);
      out << " avg_iterations=" << fmt(report.avg_iterations, 3) << " cap_fails=" << report.cap_fail_count << "\n";
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "toporag: " << e.what() << "\n";
    return is_user_error(e.code()) ? kExitUserError : kExitInternalError;
  } catch (const std::exception& e) {
    err << "toporag: internal error: " << e.what() << "\n";
    return kExitInternalError;
  }
  return kExitInternalError;
}

}  // namespace toporag
