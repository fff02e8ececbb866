#include "subtask_forge/cli.hpp"

#include <chrono>
#include <filesystem>
#include <functional>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "subtask_forge/analysis.hpp"
#include "subtask_forge/domains.hpp"
#include "subtask_forge/factorize.hpp"
#include "subtask_forge/hierarchy.hpp"
#include "subtask_forge/io.hpp"
#include "subtask_forge/multitask.hpp"
#include "subtask_forge/render.hpp"

namespace subtask_forge::cli {

namespace fs = std::filesystem;
using io::Json;

namespace {

/// Run record written next to every command's outputs.
class Manifest {
 public:
  Manifest(std::string command, const std::vector<std::string>& args)
      : command_(std::move(command)), args_(args), start_(std::chrono::steady_clock::now()) {}

  void input(const fs::path& p) {
    const std::string digest = fs::is_directory(p) ? dir_digest(p) : io::sha256_hex(io::read_file(p));
    inputs_.push_back({{"path", p.string()}, {"sha256", digest}});
  }
  void output(const fs::path& p) { outputs_.push_back(p.string()); }
  void seed(const std::string& name, std::uint64_t v) { seeds_[name] = v; }
  void config(const std::string& key, Json v) { config_[key] = std::move(v); }

  void write(const fs::path& where) const {
    Json j;
    j["command"] = command_;
    j["command_line"] = args_;
    j["config"] = config_;
    j["config_digest"] = io::sha256_hex(config_.dump() + inputs_.dump());
    j["seeds"] = seeds_;
    j["inputs"] = inputs_;
    j["outputs"] = outputs_;
    j["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    j["versions"] = {{"subtask_forge", kVersion},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                   std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
    io::write_atomic(where, j.dump(2) + "\n");
  }

 private:
  static std::string dir_digest(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::string all;
    for (const auto& f : files) all += f.filename().string() + ":" + io::sha256_hex(io::read_file(f)) + "\n";
    return io::sha256_hex(all);
  }

  std::string command_;
  std::vector<std::string> args_;
  std::chrono::steady_clock::time_point start_;
  Json config_ = Json::object();
  Json seeds_ = Json::object();
  Json inputs_ = Json::array();
  Json outputs_ = Json::array();
};

fs::path sidecar(const fs::path& file) {
  fs::path p = file;
  p += ".manifest.json";
  return p;
}

struct LoadedDomain {
  Lmdp lmdp;
  std::optional<DomainSpec> spec;
};

LoadedDomain load_domain(const fs::path& path) {
  const Json j = io::read_json(path);
  LoadedDomain d{io::lmdp_from_json(j), io::embedded_domain(j)};
  const Diagnostics diag = validate_lmdp(d.lmdp);
  if (!diag.pass) {
    std::string msg = path.string() + ": invalid Lmdp:";
    for (const auto& v : diag.violations) msg += "\n  " + v;
    throw InvalidInput(msg);
  }
  return d;
}

Domain geometry_for(const LoadedDomain& d, const fs::path& path) {
  if (!d.spec) throw InvalidInput(path.string() + ": no embedded \"domain\" spec to rebuild geometry from");
  Domain g = build_domain(*d.spec);
  if (g.lmdp.n_interior() != d.lmdp.n_interior()) {
    throw InvalidInput(path.string() + ": embedded domain spec does not match n_interior");
  }
  return g;
}

template <class T>
std::vector<T> parse_list(const std::string& text, const char* flag) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::istringstream is(item);
    T v{};
    if (!(is >> v) || !(is >> std::ws).eof()) {
      throw InvalidInput(std::string(flag) + ": cannot parse '" + item + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw InvalidInput(std::string(flag) + " must not be empty");
  return out;
}

struct NmfFlags {
  double beta = 1.0;
  std::uint64_t seed = 0;
  std::size_t restarts = 10;
  std::size_t max_iter = NmfOptions{}.max_iter;
  double tol = NmfOptions{}.tol;

  void add_to(CLI::App* app) {
    app->add_option("--beta", beta, "beta-divergence parameter")->capture_default_str();
    app->add_option("--seed", seed, "base random seed")->capture_default_str();
    app->add_option("--restarts", restarts, "independent initializations")->capture_default_str();
    app->add_option("--max-iter", max_iter, "iteration cap per restart")->capture_default_str();
    app->add_option("--tol", tol, "relative objective change to stop at")->capture_default_str();
  }
  NmfOptions options() const { return {max_iter, tol, restarts, seed}; }
  void record(Manifest& m) const {
    m.config("beta", beta);
    m.config("restarts", restarts);
    m.config("max_iter", max_iter);
    m.config("tol", tol);
    m.seed("seed", seed);
  }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Subtask discovery in multitask linearly-solvable MDPs", "subtask_forge"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  std::function<void()> action;

  // build
  std::string spec_path, out_path;
  auto* build = app.add_subcommand("build", "Generate a domain Lmdp from a domain-spec JSON");
  build->add_option("spec", spec_path, "domain-spec JSON")->required();
  build->add_option("out", out_path, "output Lmdp JSON")->required();
  build->callback([&] {
    action = [&] {
      Manifest m("build", args);
      m.input(spec_path);
      const DomainSpec spec = io::domain_spec_from_json(io::read_json(spec_path));
      const Domain d = build_domain(spec);
      io::write_atomic(out_path, io::lmdp_to_json(d.lmdp, &d.spec).dump() + "\n");
      m.output(out_path);
      m.write(sidecar(out_path));
      out << "n_interior=" << d.lmdp.n_interior() << " n_boundary=" << d.lmdp.n_boundary() << "\n";
    };
  });

  // solve
  std::string domain_path;
  double q_floor = 1e-12;
  auto* solve = app.add_subcommand("solve", "Solve the uniform task basis into Z.csv");
  solve->add_option("domain", domain_path, "Lmdp JSON")->required();
  solve->add_option("out", out_path, "output Z.csv")->required();
  solve->add_option("--q-floor", q_floor, "floor for zero boundary rewards")->capture_default_str();
  solve->callback([&] {
    action = [&] {
      Manifest m("solve", args);
      m.input(domain_path);
      m.config("q_floor", q_floor);
      m.config("task_basis", "uniform");
      const LoadedDomain d = load_domain(domain_path);
      const DesirabilityBasis z = solve_task_basis(d.lmdp, build_uniform_task_basis(d.lmdp), q_floor);
      io::write_atomic(out_path, io::matrix_to_csv(z.Z));
      m.output(out_path);
      m.write(sidecar(out_path));
      out << "Z " << z.Z.rows() << "x" << z.Z.cols() << "\n";
    };
  });

  // factor
  std::string z_path, out_dir;
  std::size_t k = 0;
  NmfFlags nmf_flags;
  auto* factor = app.add_subcommand("factor", "Factorize Z into D and W");
  factor->add_option("z", z_path, "Z.csv")->required();
  factor->add_option("out", out_dir, "output directory")->required();
  factor->add_option("--k", k, "decomposition factor")->required();
  nmf_flags.add_to(factor);
  factor->callback([&] {
    action = [&] {
      Manifest m("factor", args);
      m.input(z_path);
      nmf_flags.record(m);
      m.config("k", k);
      const Matrix Z = io::matrix_from_csv(io::read_file(z_path));
      const Factorization f = nmf(Z, k, nmf_flags.beta, nmf_flags.options());
      io::write_factorization(out_dir, f);
      for (const char* name : {"D.csv", "W.csv", "meta.json", "trace.csv"}) m.output(fs::path(out_dir) / name);
      m.write(fs::path(out_dir) / "manifest.json");
      out << "k=" << f.k << " divergence=" << io::format_double(f.divergence)
          << " normalized=" << io::format_double(f.normalized_divergence) << "\n";
      if (f.iteration_limit_hit) err << "warning: iteration limit reached\n";
    };
  });

  // select-k
  std::size_t k_max = 10;
  std::string rule_name = "sharpest";
  NmfFlags sel_flags;
  auto* select = app.add_subcommand("select-k", "Compute f(k) and the elbow k*");
  select->alias("select_k");
  select->add_option("z", z_path, "Z.csv")->required();
  select->add_option("out", out_path, "output k-curve CSV")->required();
  select->add_option("--kmax", k_max, "largest k evaluated")->capture_default_str();
  select->add_option("--rule", rule_name, "elbow rule")
      ->check(CLI::IsMember({"sharpest", "first"}))
      ->capture_default_str();
  sel_flags.add_to(select);
  select->callback([&] {
    action = [&] {
      Manifest m("select-k", args);
      m.input(z_path);
      sel_flags.record(m);
      m.config("kmax", k_max);
      m.config("rule", rule_name);
      const Matrix Z = io::matrix_from_csv(io::read_file(z_path));
      const KSelection sel = select_k(Z, sel_flags.beta, k_max, sel_flags.options(),
                                      rule_name == "first" ? ElbowRule::first_satisfying : ElbowRule::sharpest);
      std::string csv = "k,f\n";
      for (std::size_t i = 0; i < sel.f.size(); ++i) {
        csv += std::to_string(i + 1) + "," + io::format_double(sel.f[i]) + "\n";
      }
      io::write_atomic(out_path, csv);
      m.output(out_path);
      m.config("k_star", sel.k_star ? Json(*sel.k_star) : Json(nullptr));
      m.write(sidecar(out_path));
      out << "k_star=" << (sel.k_star ? std::to_string(*sel.k_star) : "none") << "\n";
    };
  });

  // hierarchy
  std::string ks_text = "16,4", alphas_text = "0.1,0.1";
  bool alpha_relative = false;
  NmfFlags hier_flags;
  auto* hierarchy = app.add_subcommand("hierarchy", "Recursively discover subtask layers");
  hierarchy->add_option("domain", domain_path, "Lmdp JSON")->required();
  hierarchy->add_option("out", out_dir, "output directory")->required();
  hierarchy->add_option("--ks", ks_text, "comma-separated k per level")->capture_default_str();
  hierarchy->add_option("--alphas", alphas_text, "comma-separated alpha per level")->capture_default_str();
  hierarchy->add_flag("--alpha-relative", alpha_relative, "read alphas as fractions of each level's alpha_max");
  hierarchy->add_option("--q-floor", q_floor, "floor for zero boundary rewards")->capture_default_str();
  hier_flags.add_to(hierarchy);
  hierarchy->callback([&] {
    action = [&] {
      Manifest m("hierarchy", args);
      m.input(domain_path);
      hier_flags.record(m);
      const auto ks = parse_list<std::size_t>(ks_text, "--ks");
      const auto alphas = parse_list<double>(alphas_text, "--alphas");
      m.config("ks", ks);
      m.config("alphas", alphas);
      m.config("alpha_relative", alpha_relative);
      m.config("q_floor", q_floor);
      const LoadedDomain d = load_domain(domain_path);
      HierarchyOptions opts;
      opts.beta = hier_flags.beta;
      opts.nmf = hier_flags.options();
      opts.q_floor = q_floor;
      opts.alpha_relative = alpha_relative;
      const HierarchicalMlmdp h = build_hierarchy(d.lmdp, ks, alphas, opts);
      const fs::path root(out_dir);
      Json levels = Json::array();
      for (const auto& layer : h.layers) {
        const fs::path dir = root / ("level_" + std::to_string(layer.level));
        const DomainSpec* spec = layer.level == 1 && d.spec ? &*d.spec : nullptr;
        io::write_atomic(dir / "domain.json", io::lmdp_to_json(layer.base, spec).dump() + "\n");
        io::write_factorization(dir, layer.factorization);
        Json meta = io::factorization_meta(layer.factorization);
        meta["level"] = layer.level;
        meta["alpha"] = layer.alpha;
        meta["alpha_max"] = layer.alpha_max;
        io::write_atomic(dir / "meta.json", meta.dump(2) + "\n");
        levels.push_back({{"level", layer.level},
                          {"dir", dir.filename().string()},
                          {"n_interior", layer.base.n_interior()},
                          {"k", layer.factorization.k},
                          {"alpha", layer.alpha},
                          {"alpha_max", layer.alpha_max},
                          {"seed", layer.factorization.seed},
                          {"normalized_divergence", layer.factorization.normalized_divergence}});
        m.output(dir);
        m.seed("level_" + std::to_string(layer.level), layer.factorization.seed);
      }
      io::write_atomic(root / "top.json", io::lmdp_to_json(h.top).dump() + "\n");
      Json manifest;
      manifest["levels"] = levels;
      manifest["k_schedule"] = h.k_schedule;
      manifest["alpha_schedule"] = h.alpha_schedule;
      manifest["seeds"] = h.seeds;
      manifest["beta"] = opts.beta;
      manifest["top"] = "top.json";
      io::write_atomic(root / "hierarchy.json", manifest.dump(2) + "\n");
      m.output(root / "top.json");
      m.output(root / "hierarchy.json");
      m.write(root / "manifest.json");
      out << "levels=" << h.layers.size() << " top_interior=" << h.top.n_interior() << "\n";
    };
  });

  // analyze
  std::string fact_dir, mode = "doorways", other_dir, labels_kind = "region", compare_mode = "actions";
  double epsilon = 0.1;
  auto* analyze = app.add_subcommand("analyze", "Doorway scores, purity, or subtask equivalence");
  analyze->add_option("factorization", fact_dir, "factorization directory")->required();
  analyze->add_option("domain", domain_path, "Lmdp JSON")->required();
  analyze->add_option("out", out_path, "output file")->required();
  analyze->add_option("--mode", mode, "analysis")
      ->check(CLI::IsMember({"doorways", "purity", "compare"}))
      ->capture_default_str();
  analyze->add_option("--labels", labels_kind, "purity ground truth")
      ->check(CLI::IsMember({"region", "quadrant"}))
      ->capture_default_str();
  analyze->add_option("--other", other_dir, "second factorization directory (compare)");
  analyze->add_option("--epsilon", epsilon, "equivalence threshold (compare)")->capture_default_str();
  analyze->add_option("--compare-mode", compare_mode, "compare D columns or DW")
      ->check(CLI::IsMember({"actions", "reconstruction"}))
      ->capture_default_str();
  analyze->callback([&] {
    action = [&] {
      Manifest m("analyze", args);
      m.input(fact_dir);
      m.input(domain_path);
      m.config("mode", mode);
      const LoadedDomain d = load_domain(domain_path);
      const Factorization f = io::read_factorization(fact_dir);
      if (static_cast<std::size_t>(f.D.rows()) != d.lmdp.n_interior()) {
        throw InvalidInput("factorization rows do not match the domain's interior states");
      }
      if (mode == "doorways") {
        const Vector g = boundary_score(f, d.lmdp);
        std::string csv = "state,g\n";
        for (Index s = 0; s < g.size(); ++s) csv += std::to_string(s) + "," + io::format_double(g[s]) + "\n";
        io::write_atomic(out_path, csv);
      } else if (mode == "purity") {
        const Domain geo = geometry_for(d, domain_path);
        std::vector<int> labels = geo.region;
        if (labels_kind == "quadrant") {
          const auto* rooms = std::get_if<RoomsSpec>(&geo.spec.params);
          if (!rooms) throw InvalidInput("--labels quadrant needs a rooms domain");
          for (int& l : labels) l = room_quadrant(*rooms, l);
        }
        m.config("labels", labels_kind);
        const PurityReport r = assignment_purity(f, labels);
        Json j;
        j["purity"] = r.purity;
        j["cluster_sizes"] = r.cluster_sizes;
        j["confusion"] = r.confusion;
        io::write_atomic(out_path, j.dump(2) + "\n");
        out << "purity=" << io::format_double(r.purity) << "\n";
      } else {
        if (other_dir.empty()) throw InvalidInput("--mode compare needs --other");
        m.input(other_dir);
        m.config("epsilon", epsilon);
        m.config("compare_mode", compare_mode);
        const Factorization g = io::read_factorization(other_dir);
        const CompareMode cm =
            compare_mode == "actions" ? CompareMode::generalized_actions : CompareMode::reconstruction;
        const double dist = subtask_distance(f, g, cm);
        Json j;
        j["distance"] = dist;
        j["epsilon"] = epsilon;
        j["equivalent"] = equivalent(f, g, epsilon, cm);
        j["compare_mode"] = compare_mode;
        io::write_atomic(out_path, j.dump(2) + "\n");
        out << "distance=" << io::format_double(dist) << "\n";
      }
      m.output(out_path);
      m.write(sidecar(out_path));
    };
  });

  // render
  auto* render_cmd = app.add_subcommand("render", "One SVG heatmap per D column");
  render_cmd->add_option("factorization", fact_dir, "factorization directory")->required();
  render_cmd->add_option("domain", domain_path, "Lmdp JSON")->required();
  render_cmd->add_option("out", out_dir, "output directory")->required();
  render_cmd->callback([&] {
    action = [&] {
      Manifest m("render", args);
      m.input(fact_dir);
      m.input(domain_path);
      const LoadedDomain d = load_domain(domain_path);
      const Domain geo = geometry_for(d, domain_path);
      const Factorization f = io::read_factorization(fact_dir);
      if (static_cast<std::size_t>(f.D.rows()) != geo.lmdp.n_interior()) {
        throw InvalidInput("factorization rows do not match the domain's interior states");
      }
      for (Index t = 0; t < f.D.cols(); ++t) {
        const fs::path p = fs::path(out_dir) / ("subtask_" + std::to_string(t) + ".svg");
        io::write_atomic(p, render::heatmap_svg(geo, f.D.col(t), "subtask " + std::to_string(t)));
        m.output(p);
      }
      m.write(fs::path(out_dir) / "manifest.json");
      out << "rendered " << f.D.cols() << " heatmaps\n";
    };
  });

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << "\n";
    return kExitInvalidInput;
  }

  try {
    if (action) action();
    return kExitOk;
  } catch (const RangeError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalidInput;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalidInput;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalidInput;
  }
}

}  // namespace subtask_forge::cli
