// Command-line entry point: simulate, replay, validate, report, convert, serve.

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "teleop/config.hpp"
#include "teleop/error.hpp"
#include "teleop/gateway.hpp"
#include "teleop/metrics.hpp"
#include "teleop/report.hpp"
#include "teleop/run_log.hpp"
#include "teleop/session.hpp"
#include "teleop/world.hpp"

namespace fs = std::filesystem;
using namespace teleop;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitFault = 2;
constexpr int kExitIo = 3;

std::atomic<bool> g_stop{false};

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Fault: return kExitFault;
    case ErrorCode::Io: return kExitIo;
    default: return kExitValidation;
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
  out << contents;
  if (!out) throw Error(ErrorCode::Io, "write to '" + path + "' failed");
}

struct CommonOptions {
  std::string config_path;
  std::string maze_path;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("-c,--config", o.config_path, "Configuration file (all keys optional)");
  cmd->add_option("-m,--maze", o.maze_path, "Maze file (overrides world.maze)");
  cmd->add_option("--set", o.overrides, "Override a config key: key=value (repeatable)");
}

Config load_config(const CommonOptions& o) {
  Config c = o.config_path.empty() ? Config{} : Config::load(o.config_path);
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::Config, "--set expects key=value, got '" + kv + "'");
    c.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  c.validate();
  return c;
}

Maze load_maze_for(const CommonOptions& o, const Config& c) {
  return load_maze_file(o.maze_path.empty() ? c.resolved_maze_path() : o.maze_path);
}

int run_simulate(const CommonOptions& common, const std::string& trace_path, const std::string& out_path,
                 const std::string& format, const HeadlessOptions& options) {
  const Config config = load_config(common);
  const Maze maze = load_maze_for(common, config);
  std::vector<protocol::InboundMessage> trace;
  if (!trace_path.empty()) trace = parse_trace(read_file(trace_path));
  const HeadlessResult result = run_headless(config, maze, trace, options);
  if (!out_path.empty()) write_file(out_path, export_log(result.log, log_format_from(format)));
  if (result.halted) std::cerr << "error: vehicle fault, session halted: " << result.fault << "\n";
  std::cout << "summary " << summary_json(result) << "\n";
  return result.halted ? kExitFault : kExitOk;
}

int run_replay(const CommonOptions& common, const std::string& log_path, const std::string& out_path,
               const std::string& format) {
  const Config config = load_config(common);
  const Maze maze = load_maze_for(common, config);
  const RunLog log = import_log(read_file(log_path));
  const ReplayResult r = replay(log, config, maze);
  if (r.truncated) {
    std::cerr << "warning: log is truncated (no end marker); replayed the " << r.compared << "-tick prefix only\n";
  }
  std::cout << "replayed " << r.compared << " ticks, max odometry deviation " << r.max_deviation << ", "
            << (r.bit_identical ? "bit-identical" : "MISMATCH");
  if (r.first_mismatch) std::cout << " (first at tick " << *r.first_mismatch << ")";
  std::cout << "\n";
  if (!out_path.empty()) {
    RunLog out{log.header, r.records, r.events, !r.truncated};
    write_file(out_path, export_log(out, log_format_from(format)));
  }
  return r.bit_identical ? kExitOk : kExitValidation;
}

int run_validate(const CommonOptions& common, const std::vector<std::string>& traces,
                 const std::vector<std::string>& logs, bool canonical) {
  const Config config = load_config(common);
  std::cout << "config ok digest=" << config.digest() << " zone_digest=" << config.zone_digest() << "\n";
  if (canonical) std::cout << config.canonical();
  const Maze maze = load_maze_for(common, config);
  std::cout << "maze ok " << maze.rows << "x" << maze.cols << " walls=" << maze.wall_count()
            << " id=" << maze_id(maze) << "\n";
  for (const auto& t : traces) {
    try {
      std::cout << "trace ok " << parse_trace(read_file(t)).size() << " messages (" << t << ")\n";
    } catch (const Error& e) {
      throw Error(e.code(), t + ": " + e.what());
    }
  }
  for (const auto& l : logs) {
    RunLog log;
    try {
      log = import_log(read_file(l));
    } catch (const Error& e) {
      throw Error(e.code(), l + ": " + e.what());
    }
    std::cout << "log ok " << log.records.size() << " ticks, " << log.events.size() << " events"
              << (log.complete ? "" : ", truncated") << " (" << l << ")\n";
    if (log.header.config_digest != config.digest()) {
      std::cout << "  note: recorded with a different configuration\n";
    }
  }
  return kExitOk;
}

int run_report(const std::string& logs_dir, const std::string& participants_path, const std::string& tlx_path,
               const std::string& out_dir) {
  std::vector<RunLog> logs;
  if (!logs_dir.empty()) {
    if (!fs::is_directory(logs_dir)) throw Error(ErrorCode::Io, "'" + logs_dir + "' is not a directory");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(logs_dir)) {
      const auto ext = e.path().extension();
      if (e.is_regular_file() && (ext == ".jsonl" || ext == ".log" || ext == ".tsv")) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      try {
        logs.push_back(import_log(read_file(f.string())));
      } catch (const Error& e) {
        throw Error(e.code(), f.string() + ": " + e.what());
      }
    }
  }
  const auto participants =
      participants_path.empty() ? std::vector<ParticipantRecord>{} : parse_participants(read_file(participants_path));
  const auto tlx = tlx_path.empty() ? std::vector<TlxRecord>{} : parse_tlx(read_file(tlx_path));
  const ReportBundle bundle = build_report(logs, participants, tlx);
  fs::create_directories(out_dir);
  for (const auto& [name, contents] : bundle.files) write_file((fs::path(out_dir) / name).string(), contents);
  for (const auto& w : bundle.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << bundle.files.at("report.txt");
  return kExitOk;
}

int run_convert(const std::string& in_path, const std::string& out_path, const std::string& format) {
  const RunLog log = import_log(read_file(in_path));
  write_file(out_path, export_log(log, log_format_from(format)));
  if (!log.complete) std::cerr << "warning: input log is truncated\n";
  return kExitOk;
}

int run_serve(const CommonOptions& common, ServerOptions options, double duration, bool port_given) {
  const Config config = load_config(common);
  const Maze maze = load_maze_for(common, config);
  if (!port_given) options.port = config.port;
  Server server(config, maze, options);
  server.start();
  std::signal(SIGINT, [](int) { g_stop = true; });
  std::signal(SIGTERM, [](int) { g_stop = true; });
  std::cout << "listening on " << options.host << ":" << server.port() << " (ws:// or raw framed TCP)" << std::endl;
  const auto start = std::chrono::steady_clock::now();
  while (!g_stop) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    if (duration > 0.0 &&
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() >= duration) {
      break;
    }
  }
  server.stop();
  const ServerStats s = server.stats();
  std::cout << "stopped after " << s.ticks << " ticks; clients " << s.connections << ", inputs " << s.inputs
            << ", rate-limited " << s.rate_limited << ", decode errors " << s.decode_errors
            << ", dropped frames " << s.frames_dropped << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UAV teleoperation workbench: headless simulation, replay, reports and the live gateway"};
  app.require_subcommand(1);

  CommonOptions sim_common;
  std::string sim_trace, sim_out, sim_format = "jsonl";
  HeadlessOptions sim_opts;
  auto* sim = app.add_subcommand("simulate", "Run a trace headlessly and write the run log");
  add_common(sim, sim_common);
  sim->add_option("-t,--trace", sim_trace, "Trace file (JSON lines); omit for no input");
  sim->add_option("-o,--out", sim_out, "Run log output path");
  sim->add_option("--format", sim_format, "Log format: jsonl or table")->check(CLI::IsMember({"jsonl", "table"}));
  sim->add_option("-d,--duration", sim_opts.duration, "Simulated seconds")->capture_default_str();
  sim->add_flag("--stop-on-finish", sim_opts.stop_on_finish, "Stop when the finish gate is reached");
  sim->add_option("--participant", sim_opts.participant, "Participant id recorded in the log header");

  CommonOptions rep_common;
  std::string rep_log, rep_out, rep_format = "jsonl";
  auto* rep = app.add_subcommand("replay", "Re-simulate a log from its recorded references");
  add_common(rep, rep_common);
  rep->add_option("-l,--log", rep_log, "Run log to replay")->required();
  rep->add_option("-o,--out", rep_out, "Write the re-simulated log here");
  rep->add_option("--format", rep_format, "Output format: jsonl or table")->check(CLI::IsMember({"jsonl", "table"}));

  CommonOptions val_common;
  std::vector<std::string> val_traces, val_logs;
  bool val_canonical = false;
  auto* val = app.add_subcommand("validate", "Check a config, its maze and optional traces or logs");
  add_common(val, val_common);
  val->add_option("-t,--trace", val_traces, "Trace file to check (repeatable)");
  val->add_option("-l,--log", val_logs, "Run log to check (repeatable)");
  val->add_flag("--canonical", val_canonical, "Print the canonical configuration");

  std::string rpt_logs, rpt_participants, rpt_tlx, rpt_out = "report";
  auto* rpt = app.add_subcommand("report", "Build the workload/traversal report bundle");
  rpt->add_option("--logs", rpt_logs, "Directory of run logs (*.jsonl, *.log, *.tsv)");
  rpt->add_option("--participants", rpt_participants, "Participant questionnaire table");
  rpt->add_option("--tlx", rpt_tlx, "TLX ratings table");
  rpt->add_option("-o,--out", rpt_out, "Output directory")->capture_default_str();

  std::string cvt_in, cvt_out, cvt_format = "table";
  auto* cvt = app.add_subcommand("convert", "Convert a run log between jsonl and table formats");
  cvt->add_option("-l,--log", cvt_in, "Input log")->required();
  cvt->add_option("-o,--out", cvt_out, "Output path")->required();
  cvt->add_option("--format", cvt_format, "Output format")->check(CLI::IsMember({"jsonl", "table"}));

  CommonOptions srv_common;
  ServerOptions srv_opts;
  double srv_duration = 0.0;
  auto* srv = app.add_subcommand("serve", "Start the live gateway for cockpit clients");
  add_common(srv, srv_common);
  srv->add_option("--host", srv_opts.host, "Bind address")->capture_default_str();
  auto* port_opt = srv->add_option("-p,--port", srv_opts.port, "Port (default from gateway.port; 0 = any)");
  srv->add_option("--static", srv_opts.static_dir, "Directory served over plain HTTP");
  srv->add_option("--log", srv_opts.log_path, "Run log (JSONL) written during the session");
  srv->add_option("--tlx-out", srv_opts.tlx_path, "CSV that TLX submissions are appended to");
  srv->add_option("--participant", srv_opts.participant, "Participant id recorded in the log header");
  srv->add_option("--duration", srv_duration, "Stop after this many wall-clock seconds (0 = until interrupted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*sim) return run_simulate(sim_common, sim_trace, sim_out, sim_format, sim_opts);
    if (*rep) return run_replay(rep_common, rep_log, rep_out, rep_format);
    if (*val) return run_validate(val_common, val_traces, val_logs, val_canonical);
    if (*rpt) return run_report(rpt_logs, rpt_participants, rpt_tlx, rpt_out);
    if (*cvt) return run_convert(cvt_in, cvt_out, cvt_format);
    if (*srv) return run_serve(srv_common, srv_opts, srv_duration, port_opt->count() > 0);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error (io): " << e.what() << "\n";
    return kExitIo;
  }
  return kExitOk;
}
