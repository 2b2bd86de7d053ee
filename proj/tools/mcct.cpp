#include "mcct/plot.hpp"
#include "mcct/scenario.hpp"
#include "mcct/simulation.hpp"
#include "mcct/telemetry.hpp"
#include "mcct/transport.hpp"
#include "mcct/wire.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace {

// Validation errors and missing inputs exit 2, everything else that fails exits 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_file(const std::string& path) {
  if (!std::filesystem::is_regular_file(path)) throw UsageError(path + ": no such file");
}

std::string strip_extension(const std::string& out) {
  std::filesystem::path p(out);
  const auto ext = p.extension().string();
  if (ext == ".jsonl" || ext == ".csv" || ext == ".svg" || ext == ".png") p.replace_extension();
  return p.string();
}

struct ScenarioFlags {
  std::string path;
  std::optional<std::uint64_t> seed;
  std::string mode;
  std::string links;
};

void add_scenario_flags(CLI::App* cmd, ScenarioFlags& f, bool with_links) {
  cmd->add_option("scenario", f.path, "Scenario JSON file")->required()->envname("MCCT_SCENARIO");
  cmd->add_option("--seed", f.seed, "Override the scenario seed")->envname("MCCT_SEED");
  cmd->add_option("--mode", f.mode, "lockstep or realtime")
      ->check(CLI::IsMember({"lockstep", "realtime"}))
      ->envname("MCCT_MODE");
  if (with_links)
    cmd->add_option("--links", f.links, "Replace every link delay model with a preset")
        ->check(CLI::IsMember({"measured", "zero"}))
        ->envname("MCCT_LINKS");
}

mcct::Scenario load(const ScenarioFlags& f) {
  require_file(f.path);
  mcct::Scenario sc = mcct::load_scenario(f.path);
  if (f.seed) sc.seed = *f.seed;
  if (f.mode == "lockstep") sc.mode = mcct::RunMode::Lockstep;
  if (f.mode == "realtime") sc.mode = mcct::RunMode::Realtime;
  if (!f.links.empty())
    for (mcct::LinkId id : mcct::kAllLinks)
      sc.links[id] = f.links == "zero" ? mcct::LinkModel::zero(id) : mcct::LinkModel::measured(id);
  sc.validate();
  return sc;
}

void write_telemetry(const mcct::Telemetry& t, const std::string& out) {
  const std::string base = strip_extension(out);
  const auto parent = std::filesystem::path(base).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  mcct::write_file(base + ".jsonl", mcct::to_jsonl(t));
  mcct::write_file(base + ".csv", mcct::to_csv(t));
  std::cerr << "telemetry written to " << base << ".jsonl and " << base << ".csv\n";
}

void print_metrics(const mcct::Telemetry& t) {
  try {
    std::cout << mcct::format_metrics(mcct::compute_metrics(t));
  } catch (const mcct::WindowNotFound& e) {
    std::cout << "no metrics: " << e.what() << "\n";
  }
}

void report_run(const mcct::RunResult& r) {
  if (r.stale_messages || r.dropped_messages)
    std::cerr << "stale messages: " << r.stale_messages << ", dropped messages: " << r.dropped_messages << "\n";
  if (r.off_track_stops) std::cerr << "stop commands for off-track vehicles: " << r.off_track_stops << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixed-space cooperative platoon coordinator"};
  app.require_subcommand(1);

  ScenarioFlags run_f;
  std::string run_out = "telemetry";
  auto* run = app.add_subcommand("run", "Run a scenario in-process and print metrics");
  add_scenario_flags(run, run_f, true);
  run->add_option("--out", run_out, "Telemetry path (writes .jsonl and .csv)")->envname("MCCT_OUT");

  ScenarioFlags serve_f;
  mcct::ServeOptions serve_opt;
  std::string serve_out;
  auto* serve = app.add_subcommand("serve", "Run the coordinator service for agent and console processes");
  add_scenario_flags(serve, serve_f, true);
  serve->get_option("--mode")->description("lockstep or realtime (default realtime)");
  serve->add_option("--listen", serve_opt.listen, "host:port to bind")->envname("MCCT_LISTEN");
  serve->add_option("--port-file", serve_opt.port_file, "Write the bound port here")->envname("MCCT_PORT_FILE");
  serve->add_option("--register-timeout", serve_opt.register_timeout, "Seconds to wait for agents")
      ->envname("MCCT_REGISTER_TIMEOUT");
  serve->add_option("--tick-timeout", serve_opt.tick_timeout, "Seconds to wait for a tick barrier")
      ->envname("MCCT_TICK_TIMEOUT");
  serve->add_option("--speed", serve_opt.realtime_speed, "Realtime pacing factor")->envname("MCCT_SPEED");
  serve->add_option("--out", serve_out, "Telemetry path (writes .jsonl and .csv)")->envname("MCCT_OUT");
  serve->add_flag("--verbose", serve_opt.verbose, "Log connections")->envname("MCCT_VERBOSE");

  ScenarioFlags agent_f;
  mcct::AgentOptions agent_opt;
  auto* agent = app.add_subcommand("agent", "Run one vehicle agent against a coordinator");
  add_scenario_flags(agent, agent_f, false);
  agent->add_option("--connect", agent_opt.connect, "Coordinator host:port")->envname("MCCT_CONNECT");
  agent->add_option("--id", agent_opt.id, "Vehicle id from the scenario")->required()->envname("MCCT_ID");
  agent->add_option("--kind", agent_opt.kind, "virtual, physical or hdv-script")
      ->required()
      ->check(CLI::IsMember({"virtual", "physical", "hdv-script"}))
      ->envname("MCCT_KIND");
  agent->add_option("--connect-timeout", agent_opt.connect_timeout, "Seconds to retry connecting")
      ->envname("MCCT_CONNECT_TIMEOUT");

  std::string plot_in, plot_out;
  double plot_from = -1.0, plot_to = -1.0;
  auto* plot = app.add_subcommand("plot", "Velocity and gap profiles as SVG and PNG");
  plot->add_option("telemetry", plot_in, "Telemetry .jsonl")->required()->envname("MCCT_TELEMETRY");
  plot->add_option("--out", plot_out, "Image path prefix (default: telemetry path)")->envname("MCCT_OUT");
  plot->add_option("--from", plot_from, "First time to show [s]")->envname("MCCT_FROM");
  plot->add_option("--to", plot_to, "Last time to show [s]")->envname("MCCT_TO");

  std::string metrics_in;
  auto* metrics = app.add_subcommand("metrics", "Compute string-stability metrics from telemetry");
  metrics->add_option("telemetry", metrics_in, "Telemetry .jsonl")->required()->envname("MCCT_TELEMETRY");

  std::string replay_in;
  double replay_speed = 1.0;
  auto* replay = app.add_subcommand("replay", "Stream recorded snapshots as wire frames on stdout");
  replay->add_option("telemetry", replay_in, "Telemetry .jsonl")->required()->envname("MCCT_TELEMETRY");
  replay->add_option("--speed", replay_speed, "Playback speed factor")->envname("MCCT_SPEED");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*run) {
      const mcct::Scenario sc = load(run_f);
      const mcct::RunResult r = mcct::run_scenario(sc);
      write_telemetry(r.telemetry, run_out);
      report_run(r);
      print_metrics(r.telemetry);
    } else if (*serve) {
      // The service paces to the wall clock unless lockstep is asked for.
      if (serve_f.mode.empty()) serve_f.mode = "realtime";
      const mcct::Scenario sc = load(serve_f);
      const mcct::RunResult r = mcct::serve(sc, serve_opt);
      if (!serve_out.empty()) write_telemetry(r.telemetry, serve_out);
      report_run(r);
      print_metrics(r.telemetry);
    } else if (*agent) {
      const mcct::Scenario sc = load(agent_f);
      mcct::run_agent(sc, agent_opt);
    } else if (*plot) {
      require_file(plot_in);
      const mcct::Telemetry t = mcct::read_telemetry(plot_in);
      mcct::PlotOptions opt;
      if (plot_from >= 0) opt.t_start = plot_from;
      if (plot_to >= 0) opt.t_end = plot_to;
      const std::string base = strip_extension(plot_out.empty() ? plot_in : plot_out);
      mcct::write_file(base + ".svg", mcct::render_svg(t, opt));
      mcct::write_png(mcct::render_raster(t, opt), base + ".png");
      std::cerr << "plots written to " << base << ".svg and " << base << ".png\n";
    } else if (*metrics) {
      require_file(metrics_in);
      std::cout << mcct::format_metrics(mcct::compute_metrics(mcct::read_telemetry(metrics_in)));
    } else if (*replay) {
      require_file(replay_in);
      mcct::replay(mcct::read_telemetry(replay_in), replay_speed, [](const mcct::wire::Snapshot& s) {
        std::cout << mcct::wire::encode(s) << std::flush;
      });
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const mcct::ValidationError& e) {
    std::cerr << "invalid scenario: " << e.what() << "\n";
    return 2;
  } catch (const mcct::MalformedRecord& e) {
    std::cerr << "invalid telemetry: " << e.what() << "\n";
    return 2;
  } catch (const mcct::InvalidSpeed& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
