// Command line front end for the batch experiments.
//
//   thermo_cli <experiment> [--out DIR] [--svg] [options]   run, write CSV, print verdicts
//   thermo_cli verify --in DIR/<experiment>.csv                re-check verdicts from a CSV alone
//
// Exit status: 0 all verdicts pass, 2 some verdict fails, 1 error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "thermo/experiments.hpp"

using namespace thermo;

namespace {

std::vector<Verdict> verdicts_from_rows(const std::vector<ResultRow>& rows) {
  std::vector<Verdict> out;
  std::size_t inconsistent = 0;
  for (const auto& r : rows) inconsistent += !row_consistent(r);
  out.push_back({"rows: rate matches raw_value/lambda_n", inconsistent == 0,
                 std::to_string(inconsistent) + " of " + std::to_string(rows.size()) + " rows inconsistent"});
  if (rows.empty()) return out;
  const auto& ex = rows.front().experiment;
  if (ex == "doubling") {
    // targets are only present for the arc-indicator/constant potentials
    if (const auto* r = detail::last_row(rows, "doubling", "arcs", "Q"); r && r->bound)
      out.push_back(verdict_doubling(rows, 0.05));
  } else if (ex == "leakage") {
    std::uint64_t n_max = 0;
    std::string pizza;
    for (const auto& r : rows) {
      if (r.mode == "Q") n_max = std::max(n_max, r.lambda_n);
      if (r.cover.find("[non-admissible]") != std::string::npos) pizza = r.cover;
    }
    for (auto& v : verdict_leakage(rows, n_max, pizza)) out.push_back(std::move(v));
  } else if (ex == "finite-vp") {
    for (auto& v : verdict_finite_vp(rows)) out.push_back(std::move(v));
  } else if (ex == "lattice-check") {
    out.push_back(verdict_lattice(rows));
  } else if (ex == "fullshift") {
    for (auto& v : verdict_fullshift(rows)) out.push_back(std::move(v));
  }
  return out;
}

int report(const std::vector<Verdict>& vs) {
  bool ok = true;
  for (const auto& v : vs) {
    std::cerr << (v.pass ? "PASS " : "FAIL ") << v.name;
    if (!v.detail.empty()) std::cerr << " : " << v.detail;
    std::cerr << '\n';
    ok = ok && v.pass;
  }
  return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-model pressure experiments"};
  app.set_config("--config", "", "key=value configuration file (keys are long option names)");
  app.require_subcommand(1);

  ExperimentConfig cfg;
  std::string out_dir, in_path;
  bool svg = false;
  std::uint64_t n_max = 0;

  // shared options live on the root and are reachable after the subcommand
  app.add_option("--out", out_dir, "output directory for <experiment>.csv (default: CSV on stdout)");
  app.add_flag("--svg", svg, "also write <experiment>.svg (rate against min(n)) into --out");
  app.add_option("--n-max", n_max, "largest diagonal box side");
  app.add_option("--exact-limit", cfg.exact_limit, "largest component solved exactly")->capture_default_str();
  app.add_option("--node-limit", cfg.node_limit, "branch-and-bound node budget")->capture_default_str();
  app.add_option("--member-budget", cfg.member_budget, "largest joined cover size")->capture_default_str();
  app.add_option("--seed", cfg.seed, "random seed")->capture_default_str();
  app.add_option("--threads", cfg.threads, "worker threads (0 = all cores)")->capture_default_str();
  app.add_option("--tolerance", cfg.tolerance, "doubling verdict tolerance")->capture_default_str();

  auto* lat = app.add_subcommand("lattice-check", "tilings and residue bound on random boxes")->fallthrough();
  lat->add_option("--cases", cfg.cases)->capture_default_str();

  auto* dbl = app.add_subcommand("doubling", "circle doubling on m points")->fallthrough();
  dbl->add_option("--m", cfg.m)->capture_default_str();
  dbl->add_option("--potential", cfg.potential, "constant | arc-indicator | array")->capture_default_str();
  dbl->add_option("--a", cfg.potential_a, "constant value or arc height")->capture_default_str();
  dbl->add_option("--values", cfg.potential_values, "per-state values for --potential array");
  dbl->add_option("--eps", cfg.eps, "variation bound for the potential cover")->capture_default_str();

  auto* lk = app.add_subcommand("leakage", "open-disk model: non-admissible vs admissible covers")->fallthrough();
  lk->add_option("--rings", cfg.rings)->capture_default_str();
  lk->add_option("--sectors", cfg.sectors)->capture_default_str();
  lk->add_option("--slices", cfg.slices)->capture_default_str();
  lk->add_option("--sep-eps", cfg.sep_eps, "euclidean separation")->capture_default_str();
  lk->add_option("--boundary-gap", cfg.boundary_gap, "1 - radius of the sample points")->capture_default_str();

  auto* vp = app.add_subcommand("finite-vp", "variational principle on random finite systems")->fallthrough();
  vp->add_option("--instances", cfg.instances)->capture_default_str();
  vp->add_option("--max-states", cfg.max_states)->capture_default_str();
  vp->add_option("--min-box", cfg.vp_min_box, "smallest box for the increment estimate")->capture_default_str();

  auto* fs = app.add_subcommand("fullshift", "full shift closed forms")->fallthrough();
  fs->add_option("--k", cfg.symbols, "alphabet size")->capture_default_str();
  fs->add_option("--dim", cfg.shift_dim, "lattice dimension N")->capture_default_str();
  fs->add_option("--phi", cfg.phi, "site potential, one value per symbol (default 0)");

  auto* ver = app.add_subcommand("verify", "recompute verdicts from a CSV");
  ver->add_option("--in", in_path, "CSV produced by a run")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (ver->parsed()) {
      std::ifstream in(in_path);
      return report(verdicts_from_rows(read_csv(in)));
    }
    cfg.experiment = app.get_subcommands().front()->get_name();
    if (svg && out_dir.empty()) throw domain_error("--svg needs --out DIR");
    if (n_max) cfg.n_max = n_max;
    cfg.validate();
    const auto res = run_experiment(cfg);
    if (out_dir.empty()) {
      write_csv(std::cout, res.rows);
    } else {
      std::filesystem::create_directories(out_dir);
      const auto base = std::filesystem::path(out_dir) / cfg.experiment;
      std::ofstream out(base.string() + ".csv", std::ios::binary);
      if (!out) throw domain_error("cannot write " + base.string() + ".csv");
      write_csv(out, res.rows);
      if (svg) {
        std::ofstream plot(base.string() + ".svg", std::ios::binary);
        if (!plot) throw domain_error("cannot write " + base.string() + ".svg");
        plot << svg_plot(res.rows, cfg.experiment);
      }
    }
    auto vs = res.verdicts;
    vs.insert(vs.begin(), verdicts_from_rows(res.rows).front());
    return report(vs);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
