#include "lltensor/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <regex>

#include "lltensor/error.hpp"
#include "lltensor/ranking_query.hpp"
#include "lltensor/sparse_tensor3.hpp"

namespace lltensor::cli {

namespace {

namespace fs = std::filesystem;

std::ifstream open_in(const fs::path& p, const std::string& stage) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw StageError(stage, "cannot open '" + p.string() + "' for reading");
  return in;
}

std::ofstream open_out(const fs::path& p, const std::string& stage) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw StageError(stage, "cannot open '" + p.string() + "' for writing");
  return out;
}

void finish(std::ofstream& out, const fs::path& p, const std::string& stage) {
  out.close();
  if (!out) throw StageError(stage, "failed writing '" + p.string() + "'");
}

// Runs `body`, rewrapping library errors so the message names the stage and file.
template <typename F>
auto staged(const std::string& stage, const fs::path& file, F&& body) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& ex) {
    throw StageError(stage, file.string() + ": " + ex.what());
  }
}

CharacteristicMatrix read_matrix(const fs::path& p, const std::string& stage) {
  auto in = open_in(p, stage);
  return staged(stage, p, [&] { return load_characteristic_matrix(in); });
}

CPModel read_model(const fs::path& p, const std::string& stage) {
  auto in = open_in(p, stage);
  return staged(stage, p, [&] { return model_from_json(nlohmann::json::parse(in)); });
}

// model_R<rank>.json files in a directory, ordered by rank.
std::vector<std::pair<std::size_t, fs::path>> list_models(const fs::path& dir) {
  std::vector<std::pair<std::size_t, fs::path>> found;
  if (!fs::is_directory(dir)) throw StageError("eval", "'" + dir.string() + "' is not a directory");
  static const std::regex pattern(R"(model_R(\d+)\.json)");
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && std::regex_match(name, m, pattern)) {
      found.emplace_back(std::stoul(m[1].str()), entry.path());
    }
  }
  std::sort(found.begin(), found.end());
  return found;
}

}  // namespace

std::string model_file_name(std::size_t rank) { return "model_R" + std::to_string(rank) + ".json"; }

void validate_ranks(const std::vector<std::size_t>& ranks) {
  if (ranks.empty()) throw InvalidArgument("ranks list is empty");
  for (std::size_t n = 0; n < ranks.size(); ++n) {
    if (ranks[n] == 0) throw InvalidArgument("ranks must be positive");
    if (n > 0 && ranks[n] <= ranks[n - 1]) throw InvalidArgument("ranks must be strictly increasing");
  }
}

void cmd_synth(const SynthConfig& cfg, std::ostream& log) {
  const std::string stage = "synth";
  auto net = staged(stage, cfg.out, [&] { return generate_synthetic_network(cfg.params); });
  auto out = open_out(cfg.out, stage);
  write_characteristic_matrix(out, net.matrix);
  finish(out, cfg.out, stage);
  log << "synth: wrote " << net.matrix.n_blogs() << " blogs x " << net.matrix.n_words()
      << " words to " << cfg.out.string() << '\n';
}

BuildSummary cmd_build(const BuildConfig& cfg, std::ostream& log) {
  const std::string stage = "build";
  auto c = read_matrix(cfg.input, stage);
  Stoplist stop;
  if (cfg.stoplist) {
    auto in = open_in(*cfg.stoplist, stage);
    stop = staged(stage, *cfg.stoplist, [&] { return Stoplist::read(in); });
  }
  auto filtered = staged(stage, cfg.input, [&] { return filter_vocabulary(c, stop, cfg.min_blogs); });
  auto x = build_adjacency_tensor(filtered);

  fs::create_directories(cfg.out);
  const auto tensor_path = cfg.out / kTensorFile;
  auto tout = open_out(tensor_path, stage);
  x.write_text(tout);
  finish(tout, tensor_path, stage);
  const auto matrix_path = cfg.out / kMatrixFile;
  auto mout = open_out(matrix_path, stage);
  write_characteristic_matrix(mout, filtered);
  finish(mout, matrix_path, stage);

  BuildSummary s{filtered.n_blogs(), filtered.n_words(), x.nnz()};
  log << "N " << s.n_blogs << "\nM " << s.n_words << "\nnnz " << s.nnz << '\n';
  return s;
}

std::vector<DecomposeRun> cmd_decompose(const DecomposeConfig& cfg, std::ostream& log) {
  const std::string stage = "decompose";
  staged(stage, cfg.input, [&] {
    validate_ranks(cfg.ranks);
    cfg.options.validate();
  });
  auto in = open_in(cfg.input, stage);
  auto x = staged(stage, cfg.input, [&] { return SparseTensor3::read_text(in); });

  const auto start = std::chrono::steady_clock::now();
  auto models = staged(stage, cfg.input, [&] { return decompose_prefixes(x, cfg.options, cfg.ranks); });
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  fs::create_directories(cfg.out);
  std::vector<DecomposeRun> runs;
  for (const auto& m : models) {
    DecomposeRun run{m.rank(), cfg.out / model_file_name(m.rank()), fit_error(x, m)};
    auto out = open_out(run.file, stage);
    out << to_json(m).dump(1) << '\n';
    finish(out, run.file, stage);

    log << "R " << m.rank() << ": fit_error " << std::setprecision(6) << run.fit_error << ", lambda";
    for (double l : m.lambda) log << ' ' << std::setprecision(6) << l;
    log << '\n';
    for (std::size_t r = 0; r < m.rank(); ++r) {
      const auto& st = m.status[r];
      if (!st.converged || st.exhausted) {
        log << "  note: group " << r + 1 << (st.converged ? "" : " did not converge")
            << (st.exhausted ? " (residual exhausted, lambda ~ 0)" : "") << " after "
            << st.iterations << " sweeps\n";
      }
    }
    runs.push_back(run);
  }

  // Timing is kept out of the model files so those stay byte-reproducible.
  const auto timing_path = cfg.out / kTimingFile;
  auto tout = open_out(timing_path, stage);
  tout << nlohmann::json{{"ranks", cfg.ranks}, {"wall_clock_seconds", seconds}}.dump(1) << '\n';
  finish(tout, timing_path, stage);
  log << "decompose: " << std::setprecision(4) << seconds << " s wall clock for ranks up to "
      << cfg.ranks.back() << '\n';
  return runs;
}

void cmd_rank(const RankConfig& cfg, std::ostream& out) {
  const std::string stage = "rank";
  auto model = read_model(cfg.model, stage);
  auto c = read_matrix(cfg.matrix, stage);
  auto listing = staged(stage, cfg.model, [&] { return group_listing(model, c, cfg.group, cfg.top_k); });
  switch (cfg.format) {
    case ListingFormat::Text:
      listing.write_text(out);
      break;
    case ListingFormat::Json:
      out << listing.to_json().dump(1) << '\n';
      break;
    case ListingFormat::Csv: {
      out << "Blog,Score,Word,Score\n";
      const std::size_t rows = std::max(listing.blogs.size(), listing.words.size());
      auto quote = [](const std::string& s) {
        if (s.find_first_of(",\"") == std::string::npos) return s;
        std::string q = "\"";
        for (char ch : s) {
          if (ch == '"') q.push_back('"');
          q.push_back(ch);
        }
        return q + "\"";
      };
      for (std::size_t n = 0; n < rows; ++n) {
        if (n < listing.blogs.size()) {
          out << quote(listing.blogs[n].label) << ',' << std::setprecision(10) << listing.blogs[n].score;
        } else {
          out << ',';
        }
        out << ',';
        if (n < listing.words.size()) {
          out << quote(listing.words[n].label) << ',' << std::setprecision(10) << listing.words[n].score;
        } else {
          out << ',';
        }
        out << '\n';
      }
      break;
    }
  }
}

void cmd_eval(const EvalConfig& cfg, std::ostream& log) {
  const std::string stage = "eval";
  auto c = read_matrix(cfg.input, stage);
  auto files = list_models(cfg.models);
  if (files.empty()) throw StageError(stage, "no model_R*.json files in '" + cfg.models.string() + "'");
  std::vector<CPModel> models;
  for (const auto& [rank, path] : files) models.push_back(read_model(path, stage));

  TaskOptions opts;
  opts.lambda_weighted = cfg.lambda_weighted;
  auto report = staged(stage, cfg.input, [&] { return evaluate_all_tasks(c, models, opts); });

  fs::create_directories(cfg.out);
  const auto csv_path = cfg.out / kReportCsv;
  auto csv = open_out(csv_path, stage);
  report.write_csv(csv);
  finish(csv, csv_path, stage);
  const auto json_path = cfg.out / kReportJson;
  auto js = open_out(json_path, stage);
  js << report.to_json().dump(1) << '\n';
  finish(js, json_path, stage);
  report.write_csv(log);
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Labeled-link network clustering with greedy PARAFAC"};
  app.require_subcommand(1);
  constexpr const char* kEnv = "LLTENSOR_";
  auto env = [&](const char* name) { return std::string(kEnv) + name; };

  SynthConfig synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a planted-partition characteristic matrix CSV");
  synth_cmd->add_option("--blogs", synth.params.n_blogs, "Number of blogs")->capture_default_str();
  synth_cmd->add_option("--words", synth.params.n_words, "Number of words")->capture_default_str();
  synth_cmd->add_option("--clusters", synth.params.n_clusters, "Planted blocks")->capture_default_str();
  synth_cmd->add_option("--noise", synth.params.noise, "Off-block nonzero probability")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  synth_cmd->add_option("--seed", synth.params.seed, "RNG seed")->envname(env("SEED"))->capture_default_str();
  synth_cmd->add_option("--out", synth.out, "Output CSV path")->required()->envname(env("OUT"));

  BuildConfig build;
  std::string build_stoplist;
  auto* build_cmd = app.add_subcommand("build", "Filter vocabulary and build the adjacency tensor");
  build_cmd->add_option("--input", build.input, "Characteristic matrix CSV")->required()->envname(env("INPUT"));
  build_cmd->add_option("--stoplist", build_stoplist, "Stoplist file")->envname(env("STOPLIST"));
  build_cmd->add_option("--min-blogs", build.min_blogs, "Minimum blogs per kept word")
      ->envname(env("MIN_BLOGS"))
      ->capture_default_str();
  build_cmd->add_option("--out", build.out, "Output directory")->required()->envname(env("OUT"));

  DecomposeConfig dec;
  std::string init = to_string(dec.options.init);
  auto* dec_cmd = app.add_subcommand("decompose", "Greedy PARAFAC for each requested rank");
  dec_cmd->add_option("--input", dec.input, "Tensor text file")->required()->envname(env("INPUT"));
  dec_cmd->add_option("--ranks", dec.ranks, "Comma-separated ranks, strictly increasing")
      ->delimiter(',')
      ->envname(env("RANKS"))
      ->capture_default_str();
  dec_cmd->add_option("--tol", dec.options.tol, "Relative lambda change to stop")
      ->envname(env("TOL"))
      ->capture_default_str();
  dec_cmd->add_option("--max-iters", dec.options.max_iters, "Sweeps per group")
      ->envname(env("MAX_ITERS"))
      ->capture_default_str();
  dec_cmd->add_option("--seed", dec.options.seed, "Seed for random restarts")
      ->envname(env("SEED"))
      ->capture_default_str();
  dec_cmd->add_option("--init", init, "slice-sum or seeded-random")
      ->check(CLI::IsMember({"slice-sum", "seeded-random"}))
      ->capture_default_str();
  dec_cmd->add_option("--out", dec.out, "Output directory")->required()->envname(env("OUT"));

  RankConfig rank;
  std::string format = "text";
  auto* rank_cmd = app.add_subcommand("rank", "Ranked blogs and words of one group");
  rank_cmd->add_option("--input", rank.model, "Model JSON file")->required();
  rank_cmd->add_option("--matrix", rank.matrix, "Filtered matrix CSV (labels)")->required();
  rank_cmd->add_option("--group", rank.group, "Group index, 1-based")->required()->check(CLI::PositiveNumber);
  rank_cmd->add_option("--top-k", rank.top_k, "Rows to print (0 = all)")
      ->envname(env("TOP_K"))
      ->capture_default_str();
  rank_cmd->add_option("--format", format, "text, csv or json")
      ->check(CLI::IsMember({"text", "csv", "json"}))
      ->capture_default_str();
  std::string rank_out;
  rank_cmd->add_option("--out", rank_out, "Write to file instead of stdout");

  EvalConfig eval;
  auto* eval_cmd = app.add_subcommand("eval", "Cosine similarity of decomposition vs standard rankings");
  eval_cmd->add_option("--input", eval.input, "Filtered matrix CSV")->required()->envname(env("INPUT"));
  eval_cmd->add_option("--models", eval.models, "Directory of model_R*.json files")->required();
  eval_cmd->add_flag("--lambda-weighted", eval.lambda_weighted, "Weight groups by lambda");
  eval_cmd->add_option("--out", eval.out, "Output directory")->required()->envname(env("OUT"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (synth_cmd->parsed()) {
      cmd_synth(synth, out);
    } else if (build_cmd->parsed()) {
      if (!build_stoplist.empty()) build.stoplist = build_stoplist;
      cmd_build(build, out);
    } else if (dec_cmd->parsed()) {
      dec.options.init = init_method_from_string(init);
      cmd_decompose(dec, out);
    } else if (rank_cmd->parsed()) {
      rank.format = format == "json" ? ListingFormat::Json
                    : format == "csv" ? ListingFormat::Csv
                                      : ListingFormat::Text;
      if (rank_out.empty()) {
        cmd_rank(rank, out);
      } else {
        auto f = open_out(rank_out, "rank");
        cmd_rank(rank, f);
        finish(f, rank_out, "rank");
      }
    } else if (eval_cmd->parsed()) {
      cmd_eval(eval, out);
    }
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace lltensor::cli
