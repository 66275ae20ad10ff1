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

#include "rtcshim/stats.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "http_client.hpp"
#include "rtcshim/error.hpp"

namespace rtcshim {
namespace {

const std::map<std::string, std::string>& field_aliases() {
  static const std::map<std::string, std::string> m = {
      {"bytesSent", "bytes_sent"},
      {"bytesReceived", "bytes_received"},
      {"packetsSent", "packets_sent"},
      {"packetsReceived", "packets_received"},
      {"packetsLost", "packets_lost"},
      {"jitter", "jitter_s"},
      {"currentRoundTripTime", "current_rtt_s"},
      {"roundTripTime", "round_trip_time_s"},
      {"availableOutgoingBitrate", "available_outgoing_bitrate"},
      {"frameWidth", "frame_width"},
      {"frameHeight", "frame_height"},
      {"framesPerSecond", "frames_per_second"},
  };
  return m;
}

const std::vector<std::string> kCounters = {"bytes_sent", "bytes_received", "packets_sent", "packets_received",
                                            "packets_lost"};

struct Window {
  double sent = 0, received = 0, lost = 0, recv_packets = 0;
  bool have_send = false, have_recv = false;
};

}  // namespace

std::optional<double> StatsEntry::number(const std::string& name) const {
  auto it = fields.find(name);
  if (it == fields.end()) return std::nullopt;
  if (const auto* d = std::get_if<double>(&it->second)) return *d;
  return std::nullopt;
}

StatsReport stats_report_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::kInvalidValue, "stats report must be an object");
  StatsReport r;
  r.session_id = j.value("session_id", std::string());
  r.taken_at_ms = j.value("taken_at_ms", j.value("timestamp", 0.0));
  const json& entries = j.contains("entries") ? j.at("entries") : json::object();
  auto add = [&](const std::string& key, const json& e) {
    if (!e.is_object()) throw Error(Errc::kInvalidValue, "stats entry must be an object");
    StatsEntry s;
    s.id = e.value("id", key);
    s.type = e.value("type", e.value("entry_type", std::string()));
    s.timestamp_ms = e.value("timestamp_ms", e.value("timestamp", r.taken_at_ms));
    const json& fields = e.contains("fields") ? e.at("fields") : e;
    for (const auto& [k, v] : fields.items()) {
      if (k == "id" || k == "type" || k == "entry_type" || k == "timestamp" || k == "timestamp_ms") continue;
      auto alias = field_aliases().find(k);
      const std::string name = alias == field_aliases().end() ? k : alias->second;
      if (v.is_number()) {
        s.fields[name] = v.get<double>();
      } else if (v.is_string()) {
        s.fields[name] = v.get<std::string>();
      }
    }
    for (const auto& c : kCounters) {
      if (auto n = s.number(c); n && *n < 0) throw Error(Errc::kInvalidValue, "negative counter " + c);
    }
    if (!r.entries.emplace(s.id, s).second) throw Error(Errc::kInvalidValue, "duplicate entry id " + s.id);
  };
  if (entries.is_array()) {
    for (const auto& e : entries) add(e.value("id", std::string()), e);
  } else {
    for (const auto& [k, e] : entries.items()) add(k, e);
  }
  if (!(r.taken_at_ms > 0)) throw Error(Errc::kInvalidValue, "taken_at_ms must be positive");
  return r;
}

json to_json(const StatsReport& r) {
  json entries = json::object();
  for (const auto& [id, e] : r.entries) {
    json fields = json::object();
    for (const auto& [k, v] : e.fields) std::visit([&](const auto& x) { fields[k] = x; }, v);
    entries[id] = json{{"id", e.id}, {"type", e.type}, {"timestamp_ms", e.timestamp_ms}, {"fields", fields}};
  }
  return json{{"session_id", r.session_id}, {"taken_at_ms", r.taken_at_ms}, {"entries", entries}};
}

json to_json(const DerivedMetrics& m) {
  json j = json::object();
  auto put = [&](const char* k, const std::optional<double>& v) {
    if (v) j[k] = *v;
  };
  put("send_bitrate_bps", m.send_bitrate_bps);
  put("receive_bitrate_bps", m.receive_bitrate_bps);
  put("packet_loss_rate", m.packet_loss_rate);
  put("jitter_ms", m.jitter_ms);
  put("rtt_ms", m.rtt_ms);
  put("available_bitrate_bps", m.available_bitrate_bps);
  if (!m.missing_counterpart.empty()) j["missing_counterpart"] = m.missing_counterpart;
  if (!m.restarted.empty()) j["restarted"] = m.restarted;
  return j;
}

DerivedMetrics derive_metrics(const StatsReport& prev, const StatsReport& curr) {
  if (!(curr.taken_at_ms > prev.taken_at_ms)) throw Error(Errc::kInvalidInput, "reports are not time ordered");
  const double dt_s = (curr.taken_at_ms - prev.taken_at_ms) / 1000.0;
  DerivedMetrics m;
  Window w;
  std::optional<double> jitter_s, rtt_s, available;

  for (const auto& [id, e] : curr.entries) {
    if (e.type == "inbound-rtp") {
      if (auto j = e.number("jitter_s")) jitter_s = std::max(jitter_s.value_or(0), *j);
    }
    if (e.type == "candidate-pair") {
      if (auto r = e.number("current_rtt_s")) rtt_s = *r;
      if (auto a = e.number("available_outgoing_bitrate")) available = *a;
    }
    if (e.type == "remote-inbound-rtp" && !rtt_s) {
      if (auto r = e.number("round_trip_time_s")) rtt_s = *r;
    }
    if (e.type != "inbound-rtp" && e.type != "outbound-rtp") continue;

    auto base = prev.entries.find(id);
    if (base == prev.entries.end()) {
      m.missing_counterpart.push_back(id);
      continue;
    }
    bool regressed = false;
    for (const auto& c : kCounters) {
      auto now = e.number(c), before = base->second.number(c);
      if (now && before && *now < *before) regressed = true;
    }
    if (regressed) {
      m.restarted.push_back(id);
      continue;
    }
    auto delta = [&](const char* c) {
      auto now = e.number(c), before = base->second.number(c);
      return (now && before) ? std::optional<double>(*now - *before) : std::nullopt;
    };
    if (e.type == "outbound-rtp") {
      if (auto d = delta("bytes_sent")) {
        w.sent += *d;
        w.have_send = true;
      }
    } else {
      if (auto d = delta("bytes_received")) {
        w.received += *d;
        w.have_recv = true;
      }
      w.lost += delta("packets_lost").value_or(0);
      w.recv_packets += delta("packets_received").value_or(0);
    }
  }

  if (w.have_send) m.send_bitrate_bps = w.sent * 8 / dt_s;
  if (w.have_recv) {
    m.receive_bitrate_bps = w.received * 8 / dt_s;
    const double total = w.lost + w.recv_packets;
    m.packet_loss_rate = total > 0 ? std::clamp(w.lost / total, 0.0, 1.0) : 0.0;
  }
  if (jitter_s) m.jitter_ms = *jitter_s * 1000;
  if (rtt_s) m.rtt_ms = *rtt_s * 1000;
  if (available) m.available_bitrate_bps = *available;
  return m;
}

double mos_from_r(double r) {
  if (r <= 0) return 1.0;
  if (r >= 100) return 4.5;
  const double mos = 1 + 0.035 * r + r * (r - 60) * (100 - r) * 7e-6;
  return std::clamp(mos, 1.0, 4.5);
}

QualityScore compute_mos(double loss, double rtt_ms, double jitter_ms, const EModelParams& p) {
  if (!std::isfinite(loss) || !std::isfinite(rtt_ms) || !std::isfinite(jitter_ms)) {
    throw Error(Errc::kInvalidInput, "non-finite input");
  }
  if (loss < 0 || loss > 1) throw Error(Errc::kInvalidInput, "loss must be within [0,1]");
  if (rtt_ms < 0 || jitter_ms < 0) throw Error(Errc::kInvalidInput, "delays must be non-negative");
  const double d = rtt_ms / 2 + p.jitter_weight * jitter_ms + p.delay_offset_ms;
  double id = p.delay_slope * d;
  if (d > p.delay_knee_ms) id += p.delay_knee_slope * (d - p.delay_knee_ms);
  const double ie = p.loss_scale * std::log(1 + p.loss_gain * loss);
  const double r = std::clamp(p.base_r - id - ie, 0.0, 100.0);
  return QualityScore{r, mos_from_r(r)};
}

QualityGap detect_quality_gap(const VideoQuality& desired, const VideoQuality& actual) {
  QualityGap gap{false, desired, actual, {}};
  if (actual.height < desired.height / 2) {
    gap.reasons.push_back(fmt::format("height {} below half of {}", actual.height, desired.height));
  }
  if (actual.frame_rate < desired.frame_rate / 2) {
    gap.reasons.push_back(fmt::format("frame rate {} below half of {}", actual.frame_rate, desired.frame_rate));
  }
  gap.degraded = !gap.reasons.empty();
  return gap;
}

VideoQuality video_quality_of(const StatsEntry& entry) {
  return VideoQuality{entry.number("frame_width").value_or(0), entry.number("frame_height").value_or(0),
                      entry.number("frames_per_second").value_or(0)};
}

json to_json(const QualityGap& gap) {
  auto q = [](const VideoQuality& v) {
    return json{{"width", v.width}, {"height", v.height}, {"frame_rate", v.frame_rate}};
  };
  return json{{"degraded", gap.degraded}, {"desired", q(gap.desired)}, {"actual", q(gap.actual)},
              {"reasons", gap.reasons}};
}

json to_json(const MetricSeries& s) {
  json pts = json::array();
  for (const auto& p : s.points) pts.push_back(json::array({p.t_ms, p.value}));
  return json{{"name", s.name}, {"unit", s.unit}, {"points", pts}};
}

const std::vector<std::string>& known_metrics() {
  static const std::vector<std::string> names = {"send_bitrate_bps", "receive_bitrate_bps", "packet_loss_rate",
                                                 "jitter_ms",        "rtt_ms",              "available_bitrate_bps",
                                                 "mos",              "r_factor"};
  return names;
}

std::string_view metric_unit(std::string_view metric) {
  if (metric.ends_with("_bps")) return "bps";
  if (metric.ends_with("_ms")) return "ms";
  if (metric == "packet_loss_rate") return "fraction";
  if (metric == "mos") return "mos";
  return "";
}

IngestResult StatsEngine::ingest(const StatsReport& report) {
  std::lock_guard lock(mu_);
  auto& s = sessions_[report.session_id];
  IngestResult result;
  if (s.baseline && !(report.taken_at_ms > s.baseline->taken_at_ms)) {
    result.reason = "DuplicateTimestamp";
    return result;
  }
  result.accepted = true;
  ++s.reports;
  if (s.baseline) {
    auto m = derive_metrics(*s.baseline, report);
    const double t = report.taken_at_ms;
    auto record = [&](const std::string& name, const std::optional<double>& v) {
      if (!v) return;
      auto& series = s.series[name];
      if (series.name.empty()) {
        series.name = name;
        series.unit = std::string(metric_unit(name));
      }
      series.points.push_back({t, *v});
    };
    record("send_bitrate_bps", m.send_bitrate_bps);
    record("receive_bitrate_bps", m.receive_bitrate_bps);
    record("packet_loss_rate", m.packet_loss_rate);
    record("jitter_ms", m.jitter_ms);
    record("rtt_ms", m.rtt_ms);
    record("available_bitrate_bps", m.available_bitrate_bps);
    if (m.packet_loss_rate) {
      auto q = compute_mos(*m.packet_loss_rate, m.rtt_ms.value_or(0), m.jitter_ms.value_or(0), params_);
      record("mos", q.mos);
      record("r_factor", q.r_factor);
      result.quality = q;
    }
    result.metrics = std::move(m);
  }
  s.baseline = report;
  return result;
}

MetricSeries StatsEngine::query_series(const std::string& session_id, std::string_view metric, double from_ms,
                                       double to_ms) const {
  if (std::find(known_metrics().begin(), known_metrics().end(), metric) == known_metrics().end()) {
    throw Error(Errc::kUnknownMetric, fmt::format("unknown metric {}", metric));
  }
  MetricSeries out{std::string(metric), std::string(metric_unit(metric)), {}};
  std::lock_guard lock(mu_);
  auto s = sessions_.find(session_id);
  if (s == sessions_.end()) return out;
  auto it = s->second.series.find(metric);
  if (it == s->second.series.end()) return out;
  for (const auto& p : it->second.points) {
    if (p.t_ms >= from_ms && p.t_ms <= to_ms) out.points.push_back(p);
  }
  return out;
}

std::vector<MetricSeries> StatsEngine::all_series(const std::string& session_id) const {
  std::vector<MetricSeries> out;
  std::lock_guard lock(mu_);
  auto s = sessions_.find(session_id);
  if (s == sessions_.end()) return out;
  for (const auto& name : known_metrics()) {
    if (auto it = s->second.series.find(name); it != s->second.series.end()) out.push_back(it->second);
  }
  return out;
}

std::vector<std::string> StatsEngine::sessions() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, s] : sessions_) out.push_back(id);
  return out;
}

std::size_t StatsEngine::report_count(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  auto s = sessions_.find(session_id);
  return s == sessions_.end() ? 0 : s->second.reports;
}

std::optional<StatsReport> StatsEngine::latest(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  auto s = sessions_.find(session_id);
  if (s == sessions_.end()) return std::nullopt;
  return s->second.baseline;
}

// ---- wire format ----

namespace {

void put_varint(std::string& out, std::uint64_t v) {
  while (v >= 0x80) {
    out.push_back(static_cast<char>((v & 0x7f) | 0x80));
    v >>= 7;
  }
  out.push_back(static_cast<char>(v));
}

std::uint64_t get_varint(std::string_view in, std::size_t& pos) {
  std::uint64_t v = 0;
  for (int shift = 0; shift < 64; shift += 7) {
    if (pos >= in.size()) throw Error(Errc::kInvalidInput, "truncated varint");
    const auto b = static_cast<unsigned char>(in[pos++]);
    v |= static_cast<std::uint64_t>(b & 0x7f) << shift;
    if (!(b & 0x80)) return v;
  }
  throw Error(Errc::kInvalidInput, "varint too long");
}

std::uint64_t zigzag(std::int64_t v) { return (static_cast<std::uint64_t>(v) << 1) ^ static_cast<std::uint64_t>(v >> 63); }
std::int64_t unzigzag(std::uint64_t v) { return static_cast<std::int64_t>(v >> 1) ^ -static_cast<std::int64_t>(v & 1); }

void put_delta(std::string& out, double v, std::uint64_t& prev) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  put_varint(out, zigzag(static_cast<std::int64_t>(bits - prev)));
  prev = bits;
}

double get_delta(std::string_view in, std::size_t& pos, std::uint64_t& prev) {
  prev += static_cast<std::uint64_t>(unzigzag(get_varint(in, pos)));
  return std::bit_cast<double>(prev);
}

std::string deflate_bytes(const std::string& raw) {
  uLongf size = compressBound(raw.size());
  std::string out(size, '\0');
  if (compress2(reinterpret_cast<Bytef*>(out.data()), &size, reinterpret_cast<const Bytef*>(raw.data()), raw.size(),
                Z_BEST_COMPRESSION) != Z_OK) {
    throw Error(Errc::kInternal, "deflate failed");
  }
  out.resize(size);
  return out;
}

std::string inflate_bytes(std::string_view data) {
  z_stream zs{};
  if (inflateInit(&zs) != Z_OK) throw Error(Errc::kInternal, "inflateInit failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  zs.avail_in = static_cast<uInt>(data.size());
  std::string out;
  char buf[16384];
  int rc;
  do {
    zs.next_out = reinterpret_cast<Bytef*>(buf);
    zs.avail_out = sizeof(buf);
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw Error(Errc::kInvalidInput, "corrupt deflate stream");
    }
    out.append(buf, sizeof(buf) - zs.avail_out);
  } while (rc != Z_STREAM_END);
  inflateEnd(&zs);
  return out;
}

}  // namespace

std::string encode_series(const std::string& session_id, const std::vector<MetricSeries>& series) {
  std::string raw;
  double t0 = 0;
  bool have_t0 = false;
  json metrics = json::array();
  for (const auto& s : series) {
    metrics.push_back(json{{"name", s.name}, {"unit", s.unit}, {"count", s.points.size()}});
    std::uint64_t pt = 0, pv = 0;
    for (const auto& p : s.points) {
      if (!have_t0 || p.t_ms < t0) t0 = p.t_ms;
      have_t0 = true;
      put_delta(raw, p.t_ms, pt);
      put_delta(raw, p.value, pv);
    }
  }
  const auto body = deflate_bytes(raw);
  json header{{"session_id", session_id}, {"t0", t0}, {"metrics", metrics}, {"compressed_size", body.size()}};
  return header.dump() + "\n" + body;
}

DecodedSeries decode_series(std::string_view record) {
  const auto nl = record.find('\n');
  if (nl == std::string_view::npos) throw Error(Errc::kInvalidInput, "missing header line");
  json header;
  try {
    header = json::parse(record.substr(0, nl));
  } catch (const json::exception& e) {
    throw Error(Errc::kInvalidInput, e.what());
  }
  const auto size = header.at("compressed_size").get<std::size_t>();
  if (record.size() - nl - 1 < size) throw Error(Errc::kInvalidInput, "truncated body");
  const auto raw = inflate_bytes(record.substr(nl + 1, size));
  DecodedSeries out{header.at("session_id").get<std::string>(), {}};
  std::size_t pos = 0;
  for (const auto& m : header.at("metrics")) {
    MetricSeries s{m.at("name").get<std::string>(), m.at("unit").get<std::string>(), {}};
    std::uint64_t pt = 0, pv = 0;
    for (std::size_t i = 0, n = m.at("count").get<std::size_t>(); i < n; ++i) {
      const double t = get_delta(raw, pos, pt);
      const double v = get_delta(raw, pos, pv);
      s.points.push_back({t, v});
    }
    out.series.push_back(std::move(s));
  }
  if (pos != raw.size()) throw Error(Errc::kInvalidInput, "trailing bytes in body");
  return out;
}

StatsSink::StatsSink(std::string url, std::size_t buffer_limit) : url_(std::move(url)), buffer_limit_(buffer_limit) {}

bool StatsSink::deliver(const std::string& record) {
  if (url_.starts_with("file://")) {
    std::ofstream out(url_.substr(7), std::ios::binary | std::ios::app);
    if (!out) return false;
    out.write(record.data(), static_cast<std::streamsize>(record.size()));
    return static_cast<bool>(out);
  }
  if (url_.starts_with("http://") || url_.starts_with("https://")) {
    const auto status = detail::http_post(url_, record, "application/octet-stream");
    return status >= 200 && status < 300;
  }
  return false;
}

std::size_t StatsSink::send(std::string record) {
  std::lock_guard lock(mu_);
  backlog_.push_back(std::move(record));
  std::size_t written = 0;
  while (!backlog_.empty()) {
    if (!deliver(backlog_.front())) {
      while (backlog_.size() > buffer_limit_) {
        backlog_.pop_front();
        ++dropped_;
      }
      spdlog::warn("stats sink {} unreachable, {} record(s) buffered", url_, backlog_.size());
      throw Error(Errc::kSinkUnreachable, "sink unreachable: " + url_);
    }
    written += backlog_.front().size();
    backlog_.pop_front();
  }
  return written;
}

std::size_t StatsSink::pending() const {
  std::lock_guard lock(mu_);
  return backlog_.size();
}

std::size_t StatsSink::dropped() const {
  std::lock_guard lock(mu_);
  return dropped_;
}

std::size_t compress_and_send(const StatsEngine& engine, const std::string& session_id, StatsSink& sink) {
  return sink.send(encode_series(session_id, engine.all_series(session_id)));
}

}  // namespace rtcshim
