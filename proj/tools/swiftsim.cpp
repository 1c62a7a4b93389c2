#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "swift/experiment.hpp"

namespace {

int cmd_run(const std::string& config_path) {
  swift::ExperimentConfig cfg = swift::load_config(config_path);
  swift::ExperimentOutput out = swift::run_experiment(std::move(cfg));
  std::fputs(out.summary_text.c_str(), stdout);
  std::printf("trajectory: %s\nsummary: %s\nmodel: %s\n", out.trajectory_path.c_str(),
              out.summary_path.c_str(), out.model_path.c_str());
  return 0;
}

int cmd_suite(const std::vector<std::string>& configs) {
  swift::SuiteReport rep = swift::run_suite(configs);
  std::fputs(rep.text.c_str(), stdout);
  std::printf("comparison: %s\n", rep.csv_path.c_str());
  return 0;
}

int cmd_ccs_check(const std::string& topo_spec, const std::string& p_spec) {
  swift::Topology topo = swift::parse_topology_spec(topo_spec);
  swift::vector_t p = swift::parse_influence_spec(p_spec, topo.n);
  auto vectors = swift::ccs(topo, p);
  std::printf("clients: %lld, edges: %lld\n", static_cast<long long>(topo.n),
              static_cast<long long>(swift::edge_count(topo)));
  for (const auto& v : vectors) {
    std::printf("w[%lld] =", static_cast<long long>(v.owner));
    for (swift::index_t j = 0; j < v.w.size(); ++j) std::printf(" %s", swift::g17(v.w(j)).c_str());
    std::printf("\n");
  }
  swift::matrix_t mbar = swift::expected_matrix(vectors, p);
  swift::ExpectationReport rep = swift::verify_expectation(mbar, vectors, p);
  auto yn = [](bool b) { return b ? "yes" : "no"; };
  std::printf("symmetric: %s (max asymmetry %s)\n", yn(rep.symmetric),
              swift::g17(rep.max_asymmetry).c_str());
  std::printf("doubly_stochastic: %s (row %s, col %s, min entry %s)\n",
              yn(rep.doubly_stochastic), swift::g17(rep.max_row_sum_error).c_str(),
              swift::g17(rep.max_col_sum_error).c_str(), swift::g17(rep.min_entry).c_str());
  std::printf("column_stochastic_vectors: %s (max sum error %s)\n",
              yn(rep.column_stochastic_vectors), swift::g17(rep.max_vector_sum_error).c_str());
  std::printf("self_weight_floor: %s (min slack %s)\n", yn(rep.self_weight_floor),
              swift::g17(rep.min_self_weight_slack).c_str());
  std::printf("pairwise_balance_violation: %s\n", swift::g17(rep.max_pairwise_violation).c_str());
  swift::SpectralDiagnostics d = swift::spectral(mbar);
  std::printf("contraction: rho=%s nu=%s rho_nu=%s mixes=%s\n", swift::g17(d.rho).c_str(),
              swift::g17(d.nu).c_str(), swift::g17(d.rho_nu).c_str(), yn(d.mixes));
  return rep.all_ok() ? 0 : 1;
}

int cmd_decay(const std::string& topo_spec, const std::string& p_spec, swift::index_t horizon) {
  swift::Topology topo = swift::parse_topology_spec(topo_spec);
  swift::vector_t p = swift::parse_influence_spec(p_spec, topo.n);
  swift::matrix_t mbar = swift::expected_matrix(swift::ccs(topo, p), p);
  swift::DecayCheck check = swift::decay_check(mbar, horizon);
  std::printf("rho: %s\n", swift::g17(check.rho).c_str());
  std::printf("t,measured,bound\n");
  for (const auto& row : check.rows)
    std::printf("%lld,%s,%s\n", static_cast<long long>(row.t), swift::g17(row.measured).c_str(),
                swift::g17(row.bound).c_str());
  std::printf("bound_holds: %s (worst margin %s)\n", check.ok ? "yes" : "no",
              swift::g17(check.worst_margin).c_str());
  return check.ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Decentralized training simulator: wait-free asynchronous updates with "
      "influence-matched communication weights, plus round-synchronous baselines. "
      "Set SWIFTSIM_OUTPUT_DIR to redirect all file output."};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run one experiment config");
  run->add_option("config", config_path, "key = value config file")->required();

  std::vector<std::string> suite_paths;
  auto* suite = app.add_subcommand("suite", "Run several configs and emit a comparison table");
  suite->add_option("configs", suite_paths, "config files");

  std::string topo_spec, p_spec;
  auto* ccs_check =
      app.add_subcommand("ccs-check", "Derive communication weights and verify their invariants");
  ccs_check->add_option("topology", topo_spec, "ring:N | cliques:N:K | file:PATH")->required();
  ccs_check->add_option("influence", p_spec, "uniform | comma list")->required();

  swift::index_t horizon = 50;
  auto* decay = app.add_subcommand("decay", "Check the consensus-contraction bound over t powers");
  decay->add_option("topology", topo_spec, "ring:N | cliques:N:K | file:PATH")->required();
  decay->add_option("influence", p_spec, "uniform | comma list")->required();
  decay->add_option("horizon", horizon, "number of matrix powers")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path);
    if (suite->parsed()) return cmd_suite(suite_paths);
    if (ccs_check->parsed()) return cmd_ccs_check(topo_spec, p_spec);
    return cmd_decay(topo_spec, p_spec, horizon);
  } catch (const swift::DivergenceError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
