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

#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rtcshim/scalar.hpp"

namespace rtcshim {

using StatsValue = std::variant<double, std::string>;

struct StatsEntry {
  std::string id;
  std::string type;
  double timestamp_ms = 0;
  // Canonical snake_case names: bytes_sent, bytes_received, packets_sent,
  // packets_received, packets_lost, jitter_s, current_rtt_s,
  // available_outgoing_bitrate, frame_width, frame_height, frames_per_second.
  std::map<std::string, StatsValue> fields;

  std::optional<double> number(const std::string& name) const;

  bool operator==(const StatsEntry&) const = default;
};

struct StatsReport {
  std::string session_id;
  double taken_at_ms = 0;
  std::map<std::string, StatsEntry> entries;

  bool operator==(const StatsReport&) const = default;
};

// camelCase browser names map onto the canonical ones ("bytesSent",
// "currentRoundTripTime", ...). Throws Error(kInvalidValue).
StatsReport stats_report_from_json(const json& j);
json to_json(const StatsReport& r);

struct DerivedMetrics {
  std::optional<double> send_bitrate_bps;
  std::optional<double> receive_bitrate_bps;
  std::optional<double> packet_loss_rate;
  std::optional<double> jitter_ms;
  std::optional<double> rtt_ms;
  std::optional<double> available_bitrate_bps;
  // Entries of `curr` with no baseline in `prev`.
  std::vector<std::string> missing_counterpart;
  // Entries whose counters went backwards; they contribute nothing to this
  // window and become the new baseline.
  std::vector<std::string> restarted;
};

json to_json(const DerivedMetrics& m);

// Throws Error(kInvalidInput) unless curr is strictly later than prev.
DerivedMetrics derive_metrics(const StatsReport& prev, const StatsReport& curr);

// Constants of the simplified E-model. Defaults are the engine's choice.
struct EModelParams {
  double base_r = 93.2;
  double delay_offset_ms = 10;
  double jitter_weight = 2;
  double delay_slope = 0.024;
  double delay_knee_ms = 177.3;
  double delay_knee_slope = 0.11;
  double loss_scale = 30;
  double loss_gain = 15;
};

struct QualityScore {
  double r_factor = 0;
  double mos = 1;
};

// Throws Error(kInvalidInput) for loss outside [0,1], negative delays or
// non-finite input.
QualityScore compute_mos(double loss, double rtt_ms, double jitter_ms, const EModelParams& p = {});

// MOS from R. The cubic dips below 1 for small R, so the result is clamped
// to [1, 4.5].
double mos_from_r(double r);

struct VideoQuality {
  double width = 0;
  double height = 0;
  double frame_rate = 0;
};

struct QualityGap {
  bool degraded = false;
  VideoQuality desired;
  VideoQuality actual;
  std::vector<std::string> reasons;
};

QualityGap detect_quality_gap(const VideoQuality& desired, const VideoQuality& actual);
// Reads frame_width / frame_height / frames_per_second from an entry.
VideoQuality video_quality_of(const StatsEntry& entry);
json to_json(const QualityGap& gap);

struct SeriesPoint {
  double t_ms;
  double value;

  bool operator==(const SeriesPoint&) const = default;
};

struct MetricSeries {
  std::string name;
  std::string unit;
  std::vector<SeriesPoint> points;

  bool operator==(const MetricSeries&) const = default;
};

json to_json(const MetricSeries& s);

// Names accepted by query_series.
const std::vector<std::string>& known_metrics();
std::string_view metric_unit(std::string_view metric);

struct IngestResult {
  bool accepted = false;
  std::string reason;
  std::optional<DerivedMetrics> metrics;
  std::optional<QualityScore> quality;
};

class StatsEngine {
 public:
  explicit StatsEngine(EModelParams params = {}) : params_(params) {}

  // Rejects with reason "DuplicateTimestamp" unless the report is later than
  // the previous one for its session.
  IngestResult ingest(const StatsReport& report);

  // Points with from <= t <= to. Throws Error(kUnknownMetric).
  MetricSeries query_series(const std::string& session_id, std::string_view metric,
                            double from_ms = -1e300, double to_ms = 1e300) const;

  std::vector<MetricSeries> all_series(const std::string& session_id) const;
  std::vector<std::string> sessions() const;
  std::size_t report_count(const std::string& session_id) const;
  std::optional<StatsReport> latest(const std::string& session_id) const;

 private:
  struct SessionData {
    std::optional<StatsReport> baseline;
    std::size_t reports = 0;
    std::map<std::string, MetricSeries, std::less<>> series;
  };

  EModelParams params_;
  mutable std::mutex mu_;
  std::map<std::string, SessionData> sessions_;
};

// ---- savestats wire format ----
//
// One header line of JSON {"session_id", "t0", "metrics": [{name, unit,
// count}], "compressed_size"} then `compressed_size` bytes of deflate data.
// The deflated body holds, per series in header order, the points as
// zigzag-varint deltas of the IEEE-754 bit patterns of t and value.

std::string encode_series(const std::string& session_id, const std::vector<MetricSeries>& series);

struct DecodedSeries {
  std::string session_id;
  std::vector<MetricSeries> series;
};

// Throws Error(kInvalidInput) on a corrupt record.
DecodedSeries decode_series(std::string_view record);

// Delivers records to a sink URL: "file://<path>" appends, "http(s)://..."
// POSTs as application/octet-stream. Failed records are kept (oldest
// dropped beyond `buffer_limit`) and retried ahead of the next send.
class StatsSink {
 public:
  explicit StatsSink(std::string url, std::size_t buffer_limit = 64);

  // Returns bytes written for this record plus any flushed backlog. Throws
  // Error(kSinkUnreachable) after buffering the record.
  std::size_t send(std::string record);

  std::size_t pending() const;
  std::size_t dropped() const;
  const std::string& url() const { return url_; }

 private:
  bool deliver(const std::string& record);

  std::string url_;
  std::size_t buffer_limit_;
  mutable std::mutex mu_;
  std::deque<std::string> backlog_;
  std::size_t dropped_ = 0;
};

// encode_series + sink.send for everything the engine holds for a session.
std::size_t compress_and_send(const StatsEngine& engine, const std::string& session_id, StatsSink& sink);

}  // namespace rtcshim
