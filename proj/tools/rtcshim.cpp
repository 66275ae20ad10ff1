// Copyright 2026 The rtcshim Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// rtcshim command line: run | scenario run | munge | stats | catalog | validate

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "rtcshim/config.hpp"
#include "rtcshim/engine.hpp"
#include "rtcshim/error.hpp"
#include "rtcshim/harness.hpp"
#include "rtcshim/service.hpp"
#include "rtcshim/stats.hpp"

using namespace rtcshim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;

std::atomic<bool> g_stop{false};

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::kInternal:
    case Errc::kUpstreamConnectFailed:
    case Errc::kUpstreamTimeout:
    case Errc::kSinkUnreachable:
    case Errc::kStepFailed: return kExitInternal;
    default: return kExitUsage;
  }
}

std::string read_all(std::istream& in) { return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()}; }

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::kInvalidInput, fmt::format("cannot open {}", path));
  return read_all(f);
}

json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::kInvalidInput, fmt::format("{}: {}", what, e.what()));
  }
}

EngineConfig config_or_default(const std::string& path) {
  if (path.empty()) {
    EngineConfig c;
    c.admin.enabled = false;
    apply_env_overrides(c, process_env);
    validate(c);
    return c;
  }
  return load_config_file(path);
}

// ---- munge ----

Scalar coerce(const ParamSchema& schema, const std::string& raw) {
  switch (schema.type) {
    case ParamType::kBool:
      if (raw == "true" || raw == "1") return true;
      if (raw == "false" || raw == "0") return false;
      throw Error(Errc::kInvalidParams, fmt::format("{} expects true or false", schema.name));
    case ParamType::kNumber:
    case ParamType::kInteger:
      try {
        std::size_t used = 0;
        const double d = std::stod(raw, &used);
        if (used != raw.size()) throw std::invalid_argument(raw);
        return d;
      } catch (const std::exception&) {
        throw Error(Errc::kInvalidParams, fmt::format("{} expects a number, got '{}'", schema.name, raw));
      }
    case ParamType::kString: break;
  }
  return raw;
}

int cmd_munge(const std::string& rewrite, const std::vector<std::string>& args, const std::string& type_name,
              const std::string& input) {
  auto catalog = Catalog::standard();
  const BuiltinInfo* info = catalog.find(CategoryId::kSession, rewrite);
  if (!info) info = catalog.find(CategoryId::kNetwork, rewrite);
  if (!info) throw Error(Errc::kUnknownBuiltin, fmt::format("'{}' is not a Session or Network builtin", rewrite));

  TransformSpec spec;
  spec.category = info->category;
  spec.builtin = info->name;
  for (const auto& kv : args) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(Errc::kInvalidParams, fmt::format("expected key=value, got '{}'", kv));
    const auto key = kv.substr(0, eq);
    auto it = std::find_if(info->params.begin(), info->params.end(), [&](const ParamSchema& p) { return p.name == key; });
    if (it == info->params.end()) throw Error(Errc::kInvalidParams, fmt::format("{} has no parameter '{}'", rewrite, key));
    spec.params[key] = coerce(*it, kv.substr(eq + 1));
  }

  auto type = parse_sdp_type(type_name);
  if (!type) throw Error(Errc::kInvalidValue, "--type must be offer or answer");
  auto sd = parse_sdp(input.empty() ? read_all(std::cin) : read_file(input), *type);

  Engine engine(EngineSettings{}, std::make_shared<ControlsBus>());
  engine.install_transform(spec);
  InterceptContext ctx;
  ctx.session_id = "munge";
  DispatchOutcome out;
  if (spec.category == CategoryId::kSession) {
    ctx.context = *type == SdpType::kOffer ? "createOffer" : "createAnswer";
    out = engine.dispatch(CategoryId::kSession, ctx, sd);
    if (auto* f = std::get_if<Fail>(&out)) throw Error(f->error.code, f->error.message);
    sd = std::get<SessionDescription>(*forwarded(out));
  } else {
    ctx.context = "icecandidate";
    ctx.kind = InterceptContext::Kind::kEvent;
    out = engine.dispatch(CategoryId::kNetwork, ctx, collect_candidates(sd));
    if (auto* f = std::get_if<Fail>(&out)) throw Error(f->error.code, f->error.message);
    std::multiset<std::string> keep;
    if (const auto* p = forwarded(out)) {
      for (const auto& c : std::get<CandidateList>(*p)) keep.insert(serialize_candidate(c));
    }
    for (auto& s : sd.media_sections) {
      std::erase_if(s.candidates, [&](const IceCandidate& c) {
        auto it = keep.find(serialize_candidate(c));
        if (it == keep.end()) return true;
        keep.erase(it);
        return false;
      });
    }
  }
  std::cout << serialize_sdp(sd);
  return kExitOk;
}

// ---- stats ----

std::vector<StatsReport> read_reports(const std::string& text) {
  std::vector<StatsReport> out;
  auto trimmed = text.find_first_not_of(" \t\r\n");
  if (trimmed != std::string::npos && text[trimmed] == '[') {
    for (const auto& r : parse_json_text(text, "stats input")) out.push_back(stats_report_from_json(r));
    return out;
  }
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(stats_report_from_json(parse_json_text(line, fmt::format("line {}", n))));
  }
  return out;
}

int cmd_stats(const std::string& path) {
  const auto reports = read_reports(path == "-" ? read_all(std::cin) : read_file(path));
  std::map<std::string, std::optional<StatsReport>> last;
  std::map<std::string, std::size_t> windows;
  for (const auto& r : reports) {
    auto& prev = last[r.session_id];
    if (prev) {
      if (!(r.taken_at_ms > prev->taken_at_ms)) {
        spdlog::warn("{}: report at {} is not after {}; skipped", r.session_id, r.taken_at_ms, prev->taken_at_ms);
        continue;
      }
      auto m = derive_metrics(*prev, r);
      json line = {{"session_id", r.session_id},
                   {"window", windows[r.session_id]++},
                   {"from_ms", prev->taken_at_ms},
                   {"to_ms", r.taken_at_ms},
                   {"metrics", to_json(m)}};
      if (m.packet_loss_rate) {
        auto q = compute_mos(*m.packet_loss_rate, m.rtt_ms.value_or(0), m.jitter_ms.value_or(0));
        line["r_factor"] = q.r_factor;
        line["mos"] = q.mos;
      }
      std::cout << line.dump() << "\n";
    }
    prev = r;
  }
  return kExitOk;
}

// ---- catalog ----

int cmd_catalog(const std::string& category, bool as_json) {
  std::optional<CategoryId> cat;
  if (!category.empty()) {
    cat = parse_category(category);
    if (!cat) throw Error(Errc::kInvalidValue, fmt::format("unknown category '{}'", category));
  }
  auto catalog = Catalog::standard();
  if (as_json) {
    std::cout << catalog.manifest(cat).dump(2) << "\n";
    return kExitOk;
  }
  for (CategoryId c : kAllCategories) {
    if (cat && c != *cat) continue;
    std::cout << to_string(c) << "\n";
    for (const auto* b : catalog.list(c)) {
      std::cout << fmt::format("  {}{}  {}\n", b->name, b->strict_safe ? "" : " (not strict-safe)", b->description);
      for (const auto& p : b->params) {
        auto pj = to_json(p);
        std::string line = fmt::format("      {}: {}", p.name, pj.value("type", std::string("?")));
        if (p.default_value) line += " = " + scalar_to_string(*p.default_value);
        if (p.required) line += " (required)";
        if (p.min || p.max) {
          line += fmt::format(" [{}, {}]", p.min ? fmt::format("{}", *p.min) : "", p.max ? fmt::format("{}", *p.max) : "");
        }
        if (!p.choices.empty()) line += " one of " + fmt::format("{}", fmt::join(p.choices, "|"));
        std::cout << line << "\n";
      }
    }
  }
  return kExitOk;
}

// ---- scenario ----

int cmd_scenario(const std::string& file, const std::string& config_path, const std::string& out_path,
                 std::optional<std::uint64_t> seed, const std::string& signaling_url) {
  auto config = config_or_default(config_path);
  if (seed) config.settings.seed = *seed;
  config.admin.enabled = false;
  config.proxy.enabled = false;
  config.cpu_monitor.enabled = false;
  auto scenario = parse_json_text(read_file(file), file);
  if (!signaling_url.empty()) scenario["signaling_url"] = signaling_url;

  Service svc(config);
  auto name = scenario.is_object() ? scenario.value("name", std::string("scenario")) : std::string("scenario");
  auto result = svc.run_scenario(scenario, name);

  std::string path = out_path;
  if (path.empty()) path = std::filesystem::path(file).stem().string() + ".transcript.ndjson";
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::kInternal, fmt::format("cannot write {}", path));
  f << to_ndjson(result.transcript);
  f.close();
  std::cout << path << "\n";
  if (!result.ok) {
    std::cerr << result.error << "\n";
    return kExitInternal;
  }
  return kExitOk;
}

// ---- run ----

int cmd_run(const std::string& config_path) {
  auto config = config_or_default(config_path);
  if (config_path.empty()) config.admin.enabled = true;
  Service svc(config);
  svc.start();
  std::signal(SIGINT, [](int) { g_stop = true; });
  std::signal(SIGTERM, [](int) { g_stop = true; });
  std::cout << fmt::format("running (admin port {}, proxy port {}); Ctrl-C to stop", svc.admin_port(), svc.proxy_port())
            << std::endl;
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(200));
  svc.stop();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"WebRTC signaling interception engine"};
  app.require_subcommand(1);
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off");

  std::string config_path;
  auto* run = app.add_subcommand("run", "Start engine, proxy and admin API; blocks until interrupted");
  run->add_option("-c,--config", config_path, "Config file");

  auto* scenario = app.add_subcommand("scenario", "Harness scenarios");
  scenario->require_subcommand(1);
  auto* scenario_run = scenario->add_subcommand("run", "Run a scenario file and write its NDJSON transcript");
  std::string scenario_file, out_path, signaling_url;
  std::optional<std::uint64_t> seed;
  scenario_run->add_option("file", scenario_file, "Scenario file")->required();
  scenario_run->add_option("-c,--config", config_path, "Config file");
  scenario_run->add_option("-o,--out", out_path, "Transcript path (default <file stem>.transcript.ndjson)");
  scenario_run->add_option("--seed", seed, "Engine seed");
  scenario_run->add_option("--signaling-url", signaling_url, "Carry signaling over this ws:// URL");

  auto* munge = app.add_subcommand("munge", "Rewrite an SDP from standard input with one Session or Network builtin");
  std::string rewrite, sdp_type = "offer", input;
  std::vector<std::string> params;
  munge->add_option("rewrite", rewrite, "Builtin name, e.g. prefer_codec")->required();
  munge->add_option("params", params, "key=value parameters");
  munge->add_option("--type", sdp_type, "offer or answer");
  munge->add_option("-i,--in", input, "Read the SDP from a file instead");

  auto* stats = app.add_subcommand("stats", "Derived metrics and MOS per window for a file of stats reports");
  std::string stats_file;
  stats->add_option("file", stats_file, "NDJSON or JSON array of reports; - for stdin")->required();

  auto* catalog = app.add_subcommand("catalog", "List builtins with their parameter schemas");
  std::string category;
  bool as_json = false;
  catalog->add_option("category", category, "Only this category");
  catalog->add_flag("--json", as_json, "Machine-readable manifest");

  auto* validate_cmd = app.add_subcommand("validate", "Check a config file and exit");
  std::string validate_path;
  validate_cmd->add_option("config", validate_path, "Config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*run) return cmd_run(config_path);
    if (*scenario_run) return cmd_scenario(scenario_file, config_path, out_path, seed, signaling_url);
    if (*munge) return cmd_munge(rewrite, params, sdp_type, input);
    if (*stats) return cmd_stats(stats_file);
    if (*catalog) return cmd_catalog(category, as_json);
    if (*validate_cmd) {
      load_config_file(validate_path);
      std::cout << "ok\n";
      return kExitOk;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << errc_name(e.code()) << ": " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}
