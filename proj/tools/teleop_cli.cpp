// teleop: run, validate and report bimanual teleoperation sessions.
//
// Exit codes: 0 success, 2 configuration error, 3 input parse error,
// 4 runtime error.

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "teleop/bridge.hpp"
#include "teleop/errors.hpp"
#include "teleop/runner.hpp"
#include "teleop/session_log.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kParseError = 3;
constexpr int kRuntimeError = 4;

std::atomic<bool> g_stop{false};

void onSignal(int) { g_stop = true; }

// Relative config paths that do not exist from the working directory are
// looked up in $TELEOP_CONFIG_DIR.
std::string resolveConfig(const std::string& path) {
  namespace fs = std::filesystem;
  if (fs::exists(path) || fs::path(path).is_absolute()) return path;
  if (const char* dir = std::getenv("TELEOP_CONFIG_DIR")) {
    const fs::path candidate = fs::path(dir) / path;
    if (fs::exists(candidate)) return candidate.string();
  }
  return path;
}

int runCommand(const std::string& config_path, const std::string& replay_path, bool live, int port,
               const std::optional<std::uint64_t>& seed, const std::string& out) {
  teleop::RunConfig config = teleop::loadRunConfig(resolveConfig(config_path));
  if (!replay_path.empty()) config.mode = teleop::ReplayMode{std::filesystem::absolute(replay_path).string()};
  if (live) config.mode = teleop::LiveMode{port};
  if (seed) config.seed = *seed;
  if (!out.empty()) config.output_dir = std::filesystem::absolute(out).string();
  if (!config.mode) throw teleop::ConfigurationError("no mode: pass --replay <session> or --live");
  config.validate();

  if (std::holds_alternative<teleop::ReplayMode>(*config.mode)) {
    const teleop::RunMetrics m = teleop::runReplay(config);
    std::cout << teleop::renderReport(m, teleop::ReportFormat::Text);
    return kOk;
  }

  std::signal(SIGINT, onSignal);
  std::signal(SIGTERM, onSignal);
  teleop::LiveOptions options;
  options.stop = &g_stop;
  options.on_listening = [](int p) { std::cerr << "listening on port " << p << std::endl; };
  const teleop::LiveResult r = teleop::runLive(config, options);
  std::cerr << "session recorded to " << r.session_path << std::endl;
  std::cout << teleop::renderReport(r.metrics, teleop::ReportFormat::Text);
  return kOk;
}

int validateCommand(const std::string& config_path) {
  const teleop::RunConfig config = teleop::loadRunConfig(resolveConfig(config_path));
  const teleop::Assets assets = teleop::loadAssets(config);
  if (config.mode)
    if (const auto* replay = std::get_if<teleop::ReplayMode>(&*config.mode)) teleop::loadSession(replay->session);
  std::cout << "ok: scenario '" << assets.scenario.name << "', " << assets.templates.size() << " templates, "
            << assets.hand.dof() << "-joint hand\n";
  return kOk;
}

int reportCommand(const std::string& in, const std::string& format) {
  std::ifstream file(in);
  if (!file) throw teleop::ConfigurationError("cannot open '" + in + "'");
  std::stringstream text;
  text << file.rdbuf();
  const teleop::RunMetrics m = teleop::metricsFromJson(text.str());
  std::cout << teleop::renderReport(m, format == "json" ? teleop::ReportFormat::Json : teleop::ReportFormat::Text);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bimanual teleoperation simulator"};
  app.require_subcommand(1);

  std::string config_path, replay_path, out, in, format = "text";
  bool live = false;
  int port = 0;
  std::optional<std::uint64_t> seed;

  CLI::App* run = app.add_subcommand("run", "Run a scenario from a recorded session or a live bridge");
  run->add_option("--config", config_path, "Run configuration file")->required();
  CLI::Option* replay_opt = run->add_option("--replay", replay_path, "Session log to replay");
  CLI::Option* live_opt = run->add_flag("--live", live, "Serve the operator bridge");
  replay_opt->excludes(live_opt);
  run->add_option("--port", port, "Bridge port (0 picks one)")->needs(live_opt);
  run->add_option("--seed", seed, "Override the configured seed");
  run->add_option("--out", out, "Output directory");

  CLI::App* validate = app.add_subcommand("validate", "Check a configuration and the files it names");
  validate->add_option("--config", config_path, "Run configuration file")->required();

  CLI::App* report = app.add_subcommand("report", "Render a metrics document");
  report->add_option("--in", in, "metrics.json from a run")->required();
  report->add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (run->parsed()) return runCommand(config_path, replay_path, live, port, seed, out);
    if (validate->parsed()) return validateCommand(config_path);
    return reportCommand(in, format);
  } catch (const teleop::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kParseError;
  } catch (const teleop::UnsupportedFormatError& e) {
    std::cerr << "unsupported format: " << e.what() << '\n';
    return kParseError;
  } catch (const teleop::ConfigurationError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const teleop::StructuralError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const teleop::Error& e) {
    std::cerr << e.kind() << " error: " << e.what() << '\n';
    return kRuntimeError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
}
