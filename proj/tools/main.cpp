// dpne: command-line front end for training and evaluating distribution
// preserving embeddings.

#include "gradcheck.hpp"

#include "dpne/cluster_eval.hpp"
#include "dpne/data_io.hpp"
#include "dpne/error.hpp"
#include "dpne/trainer.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace dpne;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Common {
  std::uint64_t seed = 0;
  std::string out = ".";
  bool quiet = false;
};

struct InputFlags {
  std::string input;
  std::string delimiter = ",";
  int label_column = -1;
  bool raw = false;
  std::string idx_images;
  std::string idx_labels;
  std::size_t subsample = 0;
  bool stratified = false;
};

char delimiter_char(const std::string& d) {
  if (d == "tab" || d == "\\t") return '\t';
  if (d == "space" || d == "whitespace") return ' ';
  require(d.size() == 1, ErrorKind::kInvalidArgument, "delimiter must be one character, tab or space");
  return d[0];
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  sub->add_option("--out", c.out, "Output directory")->capture_default_str();
  sub->add_flag("--quiet", c.quiet, "Suppress progress output");
  sub->fallthrough();
}

void add_input(CLI::App* sub, InputFlags& in) {
  sub->add_option("--input", in.input, "Delimited text table");
  sub->add_option("--delimiter", in.delimiter, "Cell delimiter: a character, tab or space")
      ->capture_default_str();
  sub->add_option("--label-column", in.label_column, "0-based label column, -1 for none")
      ->capture_default_str();
  sub->add_flag("--raw", in.raw, "Skip min-max scaling; values must already lie in [0,1]");
  sub->add_option("--idx-images", in.idx_images, "IDX image file (magic 2051)");
  sub->add_option("--idx-labels", in.idx_labels, "IDX label file (magic 2049)");
  sub->add_option("--subsample", in.subsample, "Draw this many rows (0 keeps all)")
      ->capture_default_str();
  sub->add_flag("--stratified", in.stratified, "Keep class proportions when subsampling");
}

DataMatrix load_input(const InputFlags& in, std::uint64_t seed) {
  DataMatrix data;
  if (!in.idx_images.empty() || !in.idx_labels.empty()) {
    require(!in.idx_images.empty() && !in.idx_labels.empty() && in.input.empty(),
            ErrorKind::kInvalidArgument, "use --idx-images with --idx-labels, or --input alone");
    data = load_idx(in.idx_images, in.idx_labels);
  } else {
    require(!in.input.empty(), ErrorKind::kInvalidArgument,
            "an input is required: --input or --idx-images/--idx-labels");
    std::optional<std::size_t> label;
    if (in.label_column >= 0) label = static_cast<std::size_t>(in.label_column);
    data = load_delimited(in.input, delimiter_char(in.delimiter), label, !in.raw);
  }
  if (in.subsample > 0) data = subsample(data, in.subsample, seed, in.stratified);
  return data;
}

std::string command_line(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

// Replayable record of a run: `dpne <verb> --config manifest.ini` reproduces it.
void write_manifest(const CLI::App& app, const CLI::App* sub, const Common& c,
                    const std::string& command) {
  fs::create_directories(c.out);
  std::ofstream out(fs::path(c.out) / "manifest.ini");
  require(static_cast<bool>(out), ErrorKind::kIo, "cannot write manifest in " + c.out);
  out << "# dpne " << kVersion << '\n';
  out << "# verb: " << sub->get_name() << '\n';
  out << "# command: " << command << '\n';
  std::istringstream all(app.config_to_str(true, false));
  const std::string prefix = sub->get_name() + ".";
  for (std::string line; std::getline(all, line);) {
    if (line.rfind(prefix, 0) == 0) out << line << '\n';
  }
}

void progress(const Common& c, const std::string& msg) {
  if (!c.quiet) std::cerr << msg << '\n';
}

void write_table(const fs::path& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::kIo, "cannot write " + path.string());
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n' << std::setprecision(17);
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
}

// ---- synth ----------------------------------------------------------------

struct SynthFlags {
  Common common;
  SyntheticSpec spec;
};

void run_synth(const SynthFlags& f) {
  SyntheticSpec spec = f.spec;
  spec.seed = f.common.seed;
  const SyntheticData syn = gen_synthetic(spec);
  const fs::path dir(f.common.out);
  fs::create_directories(dir);
  write_embedding(dir / "data.csv", syn.data.values, syn.data.labels);
  write_embedding(dir / "latent.csv", syn.latent, syn.data.labels);
  progress(f.common, "wrote " + std::to_string(syn.data.rows()) + "x100 matrix to " +
                         (dir / "data.csv").string());
}

// ---- train ----------------------------------------------------------------

struct TrainFlags {
  Common common;
  InputFlags input;
  TrainConfig config;
  std::string mode = "dpne";
  std::string bandwidth = "calibrated";
  std::string gradient = "exact";
  std::string degenerate = "fail";
};

void apply_train_strings(TrainFlags& f) {
  f.config.seed = f.common.seed;
  if (f.bandwidth == "calibrated") {
    f.config.bandwidth = BandwidthPolicy::calibrated();
  } else {
    double v = 0.0;
    try {
      v = std::stod(f.bandwidth);
    } catch (const std::exception&) {
      fail(ErrorKind::kInvalidArgument, "--bandwidth must be 'calibrated' or a positive number");
    }
    require(v > 0.0, ErrorKind::kInvalidArgument, "--bandwidth must be positive");
    f.config.bandwidth = BandwidthPolicy::fixed(v);
  }
  f.config.gradient_form = f.gradient == "printed" ? DpGradientForm::kPrinted : DpGradientForm::kExact;
  f.config.degenerate = f.degenerate == "floor" ? DegeneratePolicy::kFloor : DegeneratePolicy::kFail;
}

void run_train(TrainFlags& f) {
  apply_train_strings(f);
  const DataMatrix data = load_input(f.input, f.common.seed);
  const Method method = f.mode == "sae" ? Method::kSae : f.mode == "ncae" ? Method::kNcae : Method::kDpne;
  progress(f.common, "training " + f.mode + " on " + std::to_string(data.rows()) + "x" +
                         std::to_string(data.cols()));

  const Pretrained init = pretrain(data.values, f.config, penalty_for(method));
  progress(f.common, "pretraining done");
  const TrainResult r = fine_tune(data.values, init, f.config, method);

  const fs::path dir(f.common.out);
  fs::create_directories(dir);
  save_params(dir / "params.txt", r.params);
  write_embedding(dir / "embedding.csv", r.embedding, data.labels);
  write_embedding(dir / "pretrained_embedding.csv", r.pretrained_embedding, data.labels);
  std::vector<std::vector<double>> rows;
  for (const auto& rec : r.log) {
    rows.push_back({static_cast<double>(rec.iteration), rec.reconstruction, rec.regularizer,
                    rec.preservation, rec.total});
  }
  write_table(dir / "log.csv", {"iter", "O_rec", "O_reg", "O_dp", "total"}, rows);
  if (!r.log.empty()) {
    std::ostringstream s;
    s << "fine-tuning: " << r.log.size() << " iterations, total " << r.log.front().total << " -> "
      << r.log.back().total << " in " << std::fixed << std::setprecision(1) << r.log.back().seconds
      << " s";
    progress(f.common, s.str());
  }
}

// ---- embed ----------------------------------------------------------------

struct EmbedFlags {
  Common common;
  InputFlags input;
  std::string params;
};

void run_embed(const EmbedFlags& f) {
  const NetworkParams params = load_params(f.params);
  const DataMatrix data = load_input(f.input, f.common.seed);
  require(data.cols() == params.input_dim(), ErrorKind::kShapeMismatch,
          "input has " + std::to_string(data.cols()) + " columns, network expects " +
              std::to_string(params.input_dim()));
  fs::create_directories(f.common.out);
  write_embedding(fs::path(f.common.out) / "embedding.csv", embed(params, data.values), data.labels);
}

// ---- eval -----------------------------------------------------------------

struct EvalFlags {
  Common common;
  std::string embedding;
  std::string delimiter = ",";
  int clusters = 0;
  int restarts = 10;
  int repeats = 10;
};

struct Summary {
  double mean = 0.0;
  double std = 0.0;
  double best = 0.0;
};

Summary summarize(const std::vector<double>& v) {
  Summary s;
  s.best = v.front();
  for (const double x : v) {
    s.mean += x;
    s.best = std::max(s.best, x);
  }
  s.mean /= static_cast<double>(v.size());
  for (const double x : v) s.std += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(s.std / static_cast<double>(v.size()));
  return s;
}

void run_eval(const EvalFlags& f) {
  require(f.restarts >= 1 && f.repeats >= 1, ErrorKind::kInvalidArgument,
          "--restarts and --repeats must be >= 1");
  const EmbeddingFile file = read_embedding(f.embedding, true, delimiter_char(f.delimiter));
  const Partition truth = Partition::from_labels(*file.labels);
  const int k = f.clusters > 0 ? f.clusters : truth.clusters;
  require(k <= file.embedding.rows(), ErrorKind::kInvalidArgument,
          "more clusters than embedded points");

  std::vector<double> acc, ami;
  for (int r = 0; r < f.repeats; ++r) {
    const KMeansResult km =
        kmeans_pp(file.embedding, k, f.restarts, derive_seed(f.common.seed, static_cast<std::uint64_t>(r)));
    const Metrics m = evaluate(truth, km.partition);
    acc.push_back(m.acc);
    ami.push_back(m.ami);
  }
  const Summary a = summarize(acc);
  const Summary m = summarize(ami);
  std::ostringstream s;
  s << std::setprecision(17);
  s << "clusters=" << k << "\nrestarts=" << f.restarts << "\nrepeats=" << f.repeats << '\n';
  s << "acc_mean=" << a.mean << "\nacc_std=" << a.std << "\nacc_best=" << a.best << '\n';
  s << "ami_mean=" << m.mean << "\nami_std=" << m.std << "\nami_best=" << m.best << '\n';
  fs::create_directories(f.common.out);
  std::ofstream(fs::path(f.common.out) / "metrics.txt") << s.str();
  std::cout << std::fixed << std::setprecision(4) << "ACC " << a.mean << " +/- " << a.std
            << " (best " << a.best << ")\nAMI " << m.mean << " +/- " << m.std << " (best " << m.best
            << ")\n";
}

// ---- gradcheck ------------------------------------------------------------

struct GradcheckFlags {
  Common common;
  tool::GradcheckOptions options;
};

bool run_gradcheck(GradcheckFlags& f) {
  f.options.seed = f.common.seed;
  const tool::GradcheckReport report = tool::run_gradcheck(f.options);
  std::ostringstream s;
  tool::print_report(s, report, f.options);
  std::cout << s.str();
  fs::create_directories(f.common.out);
  std::ofstream(fs::path(f.common.out) / "gradcheck.txt") << s.str();
  return report.passed(f.options);
}

// ---- fields ---------------------------------------------------------------

struct FieldsFlags {
  Common common;
  std::string params;
  std::size_t layer = 1;
  std::size_t count = 250;
  std::size_t side = 28;
};

void run_fields(const FieldsFlags& f) {
  const NetworkParams params = load_params(f.params);
  const auto files =
      save_receptive_fields(params, f.layer, f.count, f.side, fs::path(f.common.out) / "fields");
  progress(f.common, "wrote " + std::to_string(files.size()) + " images");
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* threads = std::getenv("DPNE_THREADS")) set_thread_count(std::atoi(threads));

  CLI::App app{"Distribution preserving network embedding"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.set_config("--config", "", "Read flags from a manifest or other key=value file");
  const std::string command = command_line(argc, argv);

  SynthFlags synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate the lifted 4-cluster synthetic data");
  add_common(synth_cmd, synth.common);
  synth_cmd->add_option("--clusters", synth.spec.clusters, "Number of clusters")->capture_default_str();
  synth_cmd->add_option("--per-cluster", synth.spec.points_per_cluster, "Points per cluster")
      ->capture_default_str();
  synth_cmd->add_option("--std", synth.spec.cluster_std, "Isotropic cluster spread")->capture_default_str();
  synth_cmd->add_option("--radius", synth.spec.radius, "Radius of the circle of centres")
      ->capture_default_str();

  TrainFlags train;
  auto* train_cmd = app.add_subcommand("train", "Pretrain and fine-tune an autoencoder");
  add_common(train_cmd, train.common);
  add_input(train_cmd, train.input);
  TrainConfig& cfg = train.config;
  train_cmd->add_option("--mode", train.mode, "dpne, sae or ncae")
      ->check(CLI::IsMember({"dpne", "sae", "ncae"}))
      ->capture_default_str();
  train_cmd->add_option("--beta", cfg.beta, "Regulariser weight")->capture_default_str();
  train_cmd->add_option("--gamma", cfg.gamma, "Preservation weight")->capture_default_str();
  train_cmd->add_option("--eta", cfg.eta, "Learning rate")->capture_default_str();
  train_cmd->add_option("--hidden", cfg.hidden, "Encoder hidden sizes, comma separated")
      ->delimiter(',')
      ->capture_default_str();
  train_cmd->add_option("--maxiter", cfg.maxiter, "Fine-tuning iterations")->capture_default_str();
  train_cmd->add_option("--pretrain-iterations", cfg.pretrain_iterations, "Iterations per pretraining pair")
      ->capture_default_str();
  train_cmd->add_option("--dim", cfg.embedding_dim, "Embedding dimension D")->capture_default_str();
  train_cmd->add_option("--neighbors", cfg.neighbors, "k of the input-space density")->capture_default_str();
  train_cmd->add_option("--perplexity", cfg.perplexity, "Target perplexity of embedding bandwidths")
      ->capture_default_str();
  train_cmd->add_option("--alpha", cfg.alpha, "Sparsity weight during pretraining")->capture_default_str();
  train_cmd->add_option("--sparsity", cfg.sparsity_target, "Sparsity target")->capture_default_str();
  train_cmd->add_option("--bandwidth", train.bandwidth, "'calibrated' or a fixed embedding bandwidth")
      ->capture_default_str();
  train_cmd->add_option("--gradient", train.gradient, "Preservation gradient: exact or printed")
      ->check(CLI::IsMember({"exact", "printed"}))
      ->capture_default_str();
  train_cmd->add_option("--degenerate", train.degenerate, "Duplicate points: fail or floor")
      ->check(CLI::IsMember({"fail", "floor"}))
      ->capture_default_str();
  train_cmd->add_flag("--early-stop", cfg.early_stop, "Stop when the objective stalls");

  EmbedFlags embed_flags;
  auto* embed_cmd = app.add_subcommand("embed", "Map data through a trained encoder");
  add_common(embed_cmd, embed_flags.common);
  add_input(embed_cmd, embed_flags.input);
  embed_cmd->add_option("--params", embed_flags.params, "Trained parameter file")->required();

  EvalFlags eval;
  auto* eval_cmd = app.add_subcommand("eval", "Cluster an embedding with k-means++ and score it");
  add_common(eval_cmd, eval.common);
  eval_cmd->add_option("--embedding", eval.embedding, "Embedding file with a trailing label column")
      ->required();
  eval_cmd->add_option("--delimiter", eval.delimiter, "Cell delimiter")->capture_default_str();
  eval_cmd->add_option("--k-clusters", eval.clusters, "Cluster count (0: number of labels)")
      ->capture_default_str();
  eval_cmd->add_option("--restarts", eval.restarts, "k-means++ restarts per repeat")->capture_default_str();
  eval_cmd->add_option("--repeats", eval.repeats, "Independent repeats")->capture_default_str();

  GradcheckFlags grad;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Check analytic gradients against finite differences");
  add_common(grad_cmd, grad.common);
  grad_cmd->add_option("--network-trials", grad.options.network_trials, "Random networks")
      ->capture_default_str();
  grad_cmd->add_option("--dp-trials", grad.options.dp_trials, "Random preservation instances")
      ->capture_default_str();

  FieldsFlags fields;
  auto* fields_cmd = app.add_subcommand("fields", "Write receptive fields as PGM images");
  add_common(fields_cmd, fields.common);
  fields_cmd->add_option("--params", fields.params, "Trained parameter file")->required();
  fields_cmd->add_option("--layer", fields.layer, "Weight layer (1-based)")->capture_default_str();
  fields_cmd->add_option("--count", fields.count, "Number of units")->capture_default_str();
  fields_cmd->add_option("--side", fields.side, "Image side length")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    bool ok = true;
    const CLI::App* used = app.get_subcommands().front();
    const Common* common = nullptr;
    if (used == synth_cmd) {
      run_synth(synth);
      common = &synth.common;
    } else if (used == train_cmd) {
      run_train(train);
      common = &train.common;
    } else if (used == embed_cmd) {
      run_embed(embed_flags);
      common = &embed_flags.common;
    } else if (used == eval_cmd) {
      run_eval(eval);
      common = &eval.common;
    } else if (used == grad_cmd) {
      ok = run_gradcheck(grad);
      common = &grad.common;
    } else {
      run_fields(fields);
      common = &fields.common;
    }
    write_manifest(app, used, *common, command);
    return ok ? 0 : 2;
  } catch (const Error& e) {
    std::cerr << "dpne: " << e.what() << '\n';
    return e.is_numeric() ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "dpne: " << e.what() << '\n';
    return 1;
  }
}
