#include "cli.hpp"

#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "cpwlslice/cpwlslice.hpp"

namespace cpwlslice::cli {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Config {
  std::string model;
  std::string roi;
  std::string out;
  std::string svg;
  std::string csv;
  std::string classes;
  std::string arch = "model";
  std::string log_level = "info";
  std::optional<std::size_t> layer;
  std::size_t samples = 0;
  std::size_t verify_samples = 3;
  unsigned long long seed = 0;
  std::size_t threads = 0;
  double tol_geom = Tolerances{}.geom;
  double tol_line = Tolerances{}.line;
  double tol_area = Tolerances{}.area;
  bool record_timings = false;
};

std::optional<std::pair<std::size_t, std::size_t>> parse_classes(const std::string& text) {
  if (text.empty()) return std::nullopt;
  std::size_t i = 0;
  std::size_t j = 0;
  char comma = 0;
  std::istringstream in(text);
  if (!(in >> i >> comma >> j) || comma != ',' || !in.eof()) {
    throw CLI::ValidationError("--classes", "expected two class indices 'i,j'");
  }
  return std::make_pair(i, j);
}

struct Loaded {
  CpwlNetwork net;
  std::optional<Roi> roi;
};

Loaded load_inputs(const Config& cfg, bool need_roi, bool self_check) {
  LoadOptions opts;
  opts.self_check = self_check;
  Loaded in{load_model(cfg.model, opts), std::nullopt};
  spdlog::info("loaded {} ({} layers, input dim {}, {} parameters)", cfg.model, in.net.num_layers(),
               in.net.input_dim(), in.net.parameter_count());
  if (need_roi) {
    in.roi = read_roi(cfg.roi);
    if (in.roi->input_dim() != in.net.input_dim()) {
      throw RoiError("ROI dimension " + std::to_string(in.roi->input_dim()) +
                     " does not match model input dimension " + std::to_string(in.net.input_dim()));
    }
  }
  return in;
}

PartitionOptions partition_options(const Config& cfg) {
  PartitionOptions opts;
  opts.up_to_layer = cfg.layer;
  opts.threads = cfg.threads == 0 ? 1 : cfg.threads;
  opts.tol = {cfg.tol_geom, cfg.tol_line, cfg.tol_area};
  return opts;
}

struct Computed {
  Partition partition;
  std::vector<BoundarySegment> boundary;
  double partition_seconds = 0.0;
  bool has_boundary = false;
};

/// Partition plus decision boundary when the whole network was processed.
Computed compute(const Loaded& in, const Config& cfg) {
  const auto opts = partition_options(cfg);
  const auto start = Clock::now();
  Computed c{compute_partition(in.net, *in.roi, opts), {}, 0.0, false};
  c.partition_seconds = seconds_since(start);
  spdlog::info("{} regions in {:.3f}s (per layer: {})", c.partition.regions.size(),
               c.partition_seconds, json(c.partition.layer_region_counts).dump());
  for (const auto& e : c.partition.errors) spdlog::error("{}", e);
  if (c.partition.depth == in.net.num_layers()) {
    const auto classes = parse_classes(cfg.classes);
    if (in.net.output_dim() == 1 || classes) {
      c.boundary = decision_boundary(c.partition, in.net, classes, opts.tol);
      c.has_boundary = true;
    } else {
      spdlog::warn("multi-output head and no --classes: decision boundary skipped");
    }
  }
  return c;
}

json summary(const std::string& command, const Computed& c) {
  return {{"command", command},
          {"ok", c.partition.ok()},
          {"regions", c.partition.regions.size()},
          {"layer_region_counts", c.partition.layer_region_counts},
          {"boundary_segments", c.boundary.size()},
          {"dropped_area", c.partition.dropped_area},
          {"dropped_faces", c.partition.dropped_faces},
          {"seconds", c.partition_seconds},
          {"errors", c.partition.errors}};
}

int finish(const Computed& c, const json& line, std::ostream& out) {
  out << line.dump() << std::endl;
  return c.partition.ok() ? kOk : kGeometryError;
}

int cmd_partition(const Config& cfg, std::ostream& out) {
  const auto in = load_inputs(cfg, true, true);
  const Computed c = compute(in, cfg);
  const Tolerances tol{cfg.tol_geom, cfg.tol_line, cfg.tol_area};
  if (!cfg.out.empty()) {
    RegionsMeta meta{tol, c.partition.dropped_area, c.partition.layer_region_counts, nullptr};
    if (cfg.record_timings) meta.timings = {{"partition_seconds", c.partition_seconds}};
    write_regions_json(c.partition, *in.roi, c.boundary, meta, cfg.out);
  }
  if (!cfg.svg.empty()) write_svg(c.partition, *in.roi, c.boundary, cfg.svg);
  if (!cfg.csv.empty()) write_stats_csv(aggregate_stats(c.partition, tol), cfg.csv);
  return finish(c, summary("partition", c), out);
}

int cmd_render(const Config& cfg, std::ostream& out) {
  const auto in = load_inputs(cfg, true, true);
  const Computed c = compute(in, cfg);
  write_svg(c.partition, *in.roi, c.boundary, cfg.svg);
  return finish(c, summary("render", c), out);
}

int cmd_stats(const Config& cfg, std::ostream& out) {
  const auto in = load_inputs(cfg, true, true);
  const Computed c = compute(in, cfg);
  const auto stats = aggregate_stats(c.partition, {cfg.tol_geom, cfg.tol_line, cfg.tol_area});
  if (!cfg.csv.empty()) write_stats_csv(stats, cfg.csv);
  const SummaryRow row = summary_row(cfg.arch, in.net, stats);
  json line = summary("stats", c);
  line["stats"] = {{"architecture", row.architecture},
                   {"parameters", row.parameters},
                   {"region_count", stats.region_count},
                   {"degenerate_regions", stats.degenerate_count},
                   {"arv", stats.avg_region_volume},
                   {"avg_vertices", stats.avg_n_vertices},
                   {"ecc_vertex_mean", stats.ecc_vertex_mean},
                   {"ecc_vertex_median", stats.ecc_vertex_median},
                   {"ecc_vertex_max", stats.ecc_vertex_max},
                   {"ecc_edge_mean", stats.ecc_edge_mean},
                   {"ecc_edge_median", stats.ecc_edge_median},
                   {"ecc_edge_max", stats.ecc_edge_max}};
  return finish(c, line, out);
}

int cmd_boundary_sample(const Config& cfg, std::ostream& out) {
  const auto in = load_inputs(cfg, true, true);
  const Computed c = compute(in, cfg);
  if (!c.has_boundary) throw Error("decision boundary unavailable (use all layers and --classes for multi-output heads)");
  const Mat points = sample_boundary(c.boundary, *in.roi, cfg.samples, cfg.seed);
  if (!cfg.out.empty()) {
    json pts = json::array();
    for (Eigen::Index k = 0; k < points.cols(); ++k) {
      pts.push_back(std::vector<double>(points.col(k).data(), points.col(k).data() + points.rows()));
    }
    write_text(cfg.out, dump_json({{"seed", cfg.seed}, {"points", std::move(pts)}}));
  }
  double residual = 0.0;
  for (Eigen::Index k = 0; k < points.cols(); ++k) {
    const Vec y = forward(in.net, points.col(k)).output();
    const auto classes = parse_classes(cfg.classes);
    const double r = classes ? y[static_cast<Eigen::Index>(classes->first)] -
                                   y[static_cast<Eigen::Index>(classes->second)]
                             : y[0];
    residual = std::max(residual, std::abs(r));
  }
  json line = summary("boundary-sample", c);
  line["samples"] = points.cols();
  line["seed"] = cfg.seed;
  line["max_abs_output"] = residual;
  return finish(c, line, out);
}

int cmd_verify(const Config& cfg, std::ostream& out) {
  const auto in = load_inputs(cfg, false, false);
  const auto report = verify_equivalence(in.net, cfg.verify_samples, 1e-10,
                                         static_cast<unsigned>(cfg.seed));
  spdlog::info("lowered vs structured forward check: {}", report.passed ? "pass" : "FAIL");
  out << json{{"command", "verify"},
              {"passed", report.passed},
              {"samples", report.samples},
              {"max_discrepancy", report.max_discrepancy}}
             .dump()
      << std::endl;
  return report.passed ? kOk : kInputError;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  sink->set_pattern("[%l] %v");
  auto logger = std::make_shared<spdlog::logger>("cpwlslice", sink);
  auto previous = spdlog::default_logger();
  spdlog::set_default_logger(logger);
  struct Restore {
    std::shared_ptr<spdlog::logger> logger;
    ~Restore() { spdlog::set_default_logger(logger); }
  } restore{previous};

  Config cfg;
  CLI::App app{"Exact linear regions and decision boundaries of piecewise-linear networks on 2D input slices",
               "cpwlslice"};
  app.require_subcommand(1);

  auto add_common = [&](CLI::App* sub, bool need_roi) {
    sub->add_option("--model", cfg.model, "SPLC model container")->required()->check(CLI::ExistingFile);
    if (need_roi) {
      sub->add_option("--roi", cfg.roi, "ROI JSON file")->required()->check(CLI::ExistingFile);
      sub->add_option("--layer", cfg.layer, "process only the first N layers");
      sub->add_option("--classes", cfg.classes, "class pair i,j for multi-output heads");
      sub->add_option("--threads", cfg.threads, "worker threads")->envname("SPLINECAM_THREADS");
      sub->add_option("--tol-geom", cfg.tol_geom, "incidence/merge tolerance")->capture_default_str();
      sub->add_option("--tol-line", cfg.tol_line, "minimum line normal norm")->capture_default_str();
      sub->add_option("--tol-area", cfg.tol_area, "degenerate face area")->capture_default_str();
    }
    sub->add_option("--log-level", cfg.log_level, "trace|debug|info|warn|error|off")->capture_default_str();
  };

  auto* partition = app.add_subcommand("partition", "compute the partition and decision boundary");
  add_common(partition, true);
  partition->add_option("--out", cfg.out, "regions JSON output");
  partition->add_option("--svg", cfg.svg, "SVG rendering output");
  partition->add_option("--csv", cfg.csv, "statistics CSV output");
  partition->add_flag("--record-timings", cfg.record_timings, "store timings in the regions JSON");

  auto* sample = app.add_subcommand("boundary-sample", "sample points on the decision boundary");
  add_common(sample, true);
  sample->add_option("--samples", cfg.samples, "number of points")->required();
  sample->add_option("--seed", cfg.seed, "random seed")->capture_default_str();
  sample->add_option("--out", cfg.out, "points JSON output");

  auto* stats = app.add_subcommand("stats", "partition statistics");
  add_common(stats, true);
  stats->add_option("--csv", cfg.csv, "statistics CSV output");
  stats->add_option("--arch", cfg.arch, "architecture label for the summary row");

  auto* render = app.add_subcommand("render", "render the partition as SVG");
  add_common(render, true);
  render->add_option("--svg", cfg.svg, "SVG output")->required();

  auto* verify = app.add_subcommand("verify", "check lowered-matrix and structured forward agree");
  add_common(verify, false);
  verify->add_option("--samples", cfg.verify_samples, "random inputs")->capture_default_str();
  verify->add_option("--seed", cfg.seed, "random seed")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }
  logger->set_level(spdlog::level::from_str(cfg.log_level));

  try {
    if (*partition) return cmd_partition(cfg, out);
    if (*sample) return cmd_boundary_sample(cfg, out);
    if (*stats) return cmd_stats(cfg, out);
    if (*render) return cmd_render(cfg, out);
    return cmd_verify(cfg, out);
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const GeometryError& e) {
    spdlog::error("geometry failure: {}", e.what());
    return kGeometryError;
  } catch (const FormatError& e) {
    spdlog::error("model error: {}", e.what());
    return kInputError;
  } catch (const RoiError& e) {
    spdlog::error("ROI error: {}", e.what());
    return kInputError;
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return kInputError;
  } catch (const nlohmann::json::exception& e) {
    spdlog::error("input error: {}", e.what());
    return kInputError;
  }
}

}  // namespace cpwlslice::cli
