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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "rtcshim/error.hpp"

namespace rtcshim {
namespace {

StatsReport report(double t_ms, double bytes_recv, double packets_recv, double lost, double bytes_sent = 0) {
  StatsReport r;
  r.session_id = "s1";
  r.taken_at_ms = t_ms;
  r.entries["in"] = StatsEntry{"in", "inbound-rtp", t_ms,
                               {{"bytes_received", bytes_recv}, {"packets_received", packets_recv},
                                {"packets_lost", lost}, {"jitter_s", 0.004}}};
  r.entries["out"] = StatsEntry{"out", "outbound-rtp", t_ms, {{"bytes_sent", bytes_sent}}};
  r.entries["cp"] = StatsEntry{"cp", "candidate-pair", t_ms,
                               {{"current_rtt_s", 0.1}, {"available_outgoing_bitrate", 2.5e6}}};
  return r;
}

TEST(DeriveMetricsTest, ReceiveBitrate) {
  auto m = derive_metrics(report(1000, 1000, 0, 0), report(2000, 126000, 0, 0));
  EXPECT_DOUBLE_EQ(*m.receive_bitrate_bps, 1'000'000);
}

TEST(DeriveMetricsTest, LossFraction) {
  auto m = derive_metrics(report(1000, 0, 100, 10), report(2000, 0, 195, 15));
  EXPECT_DOUBLE_EQ(*m.packet_loss_rate, 0.05);
}

TEST(DeriveMetricsTest, IdenticalReportsGiveZero) {
  auto a = report(1000, 500, 10, 1, 700);
  auto b = report(2000, 500, 10, 1, 700);
  auto m = derive_metrics(a, b);
  EXPECT_EQ(*m.receive_bitrate_bps, 0);
  EXPECT_EQ(*m.send_bitrate_bps, 0);
  EXPECT_EQ(*m.packet_loss_rate, 0);
  EXPECT_DOUBLE_EQ(*m.jitter_ms, 4);
  EXPECT_DOUBLE_EQ(*m.rtt_ms, 100);
  EXPECT_DOUBLE_EQ(*m.available_bitrate_bps, 2.5e6);
}

TEST(DeriveMetricsTest, MissingCounterpartAndRegression) {
  auto prev = report(1000, 5000, 50, 0, 9000);
  auto curr = report(2000, 100, 1, 0, 10000);
  curr.entries["in2"] = StatsEntry{"in2", "inbound-rtp", 2000, {{"bytes_received", 1.0}}};
  auto m = derive_metrics(prev, curr);
  EXPECT_EQ(m.missing_counterpart, std::vector<std::string>{"in2"});
  EXPECT_EQ(m.restarted, std::vector<std::string>{"in"});
  EXPECT_FALSE(m.receive_bitrate_bps);
  EXPECT_DOUBLE_EQ(*m.send_bitrate_bps, 8000);
  EXPECT_THROW(derive_metrics(curr, prev), Error);
}

TEST(MosTest, HandComputedValues) {
  // d = 10, Id = 0.24, R = 92.96, cubic worked by hand.
  auto q = compute_mos(0, 0, 0);
  EXPECT_NEAR(q.r_factor, 92.96, 1e-9);
  EXPECT_NEAR(q.mos, 4.404592, 1e-5);
  // Ie = 30 ln 16 = 83.1777, R = 9.7823.
  q = compute_mos(1, 0, 0);
  EXPECT_NEAR(q.r_factor, 9.78234, 1e-4);
  EXPECT_NEAR(q.mos, 1.03215, 1e-4);
}

TEST(MosTest, ClampAndErrors) {
  EXPECT_EQ(mos_from_r(0), 1.0);
  EXPECT_EQ(mos_from_r(-5), 1.0);
  EXPECT_EQ(mos_from_r(100), 4.5);
  EXPECT_EQ(compute_mos(1, 5000, 500).mos, 1.0);
  EXPECT_THROW(compute_mos(1.5, 0, 0), Error);
  EXPECT_THROW(compute_mos(0, -1, 0), Error);
  EXPECT_THROW(compute_mos(std::nan(""), 0, 0), Error);
}

TEST(MosTest, KneeAddsDelayPenalty) {
  // rtt 400 -> d = 210 > 177.3.
  auto q = compute_mos(0, 400, 0);
  EXPECT_NEAR(q.r_factor, 93.2 - 0.024 * 210 - 0.11 * (210 - 177.3), 1e-9);
}

TEST(MosPropertyTest, MonotoneInLossAndRtt) {
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      const double loss = i / 9.0, rtt = j * 100.0;
      const auto here = compute_mos(loss, rtt, 5).mos;
      if (i < 9) EXPECT_GE(here, compute_mos((i + 1) / 9.0, rtt, 5).mos);
      if (j < 9) EXPECT_GE(here, compute_mos(loss, rtt + 100, 5).mos);
      EXPECT_GE(here, 1.0);
      EXPECT_LE(here, 4.5);
    }
  }
  double last = 0;
  for (double r = 0; r <= 100; r += 0.25) {
    EXPECT_GE(mos_from_r(r), last);
    last = mos_from_r(r);
  }
}

TEST(QualityGapTest, Examples) {
  EXPECT_TRUE(detect_quality_gap({1920, 1080, 30}, {640, 360, 30}).degraded);
  EXPECT_FALSE(detect_quality_gap({1280, 720, 30}, {1280, 720, 30}).degraded);
  EXPECT_TRUE(detect_quality_gap({1280, 720, 30}, {1280, 720, 14}).degraded);
  StatsEntry e{"v", "inbound-rtp", 1, {{"frame_height", 360.0}, {"frames_per_second", 30.0}}};
  EXPECT_EQ(video_quality_of(e).height, 360);
}

TEST(StatsEngineTest, IngestAndSeries) {
  StatsEngine engine;
  auto r1 = engine.ingest(report(1000, 0, 0, 0));
  EXPECT_TRUE(r1.accepted);
  EXPECT_FALSE(r1.metrics);
  EXPECT_TRUE(engine.ingest(report(2000, 125000, 100, 0)).metrics);
  engine.ingest(report(3000, 250000, 200, 0));
  auto rejected = engine.ingest(report(2500, 0, 0, 0));
  EXPECT_FALSE(rejected.accepted);
  EXPECT_EQ(rejected.reason, "DuplicateTimestamp");
  EXPECT_FALSE(engine.ingest(report(3000, 0, 0, 0)).accepted);

  EXPECT_EQ(engine.query_series("s1", "receive_bitrate_bps").points.size(), 2u);
  EXPECT_EQ(engine.query_series("s1", "mos").points.size(), 2u);
  EXPECT_TRUE(engine.query_series("s1", "rtt_ms", 5000, 6000).points.empty());
  EXPECT_TRUE(engine.query_series("nobody", "rtt_ms").points.empty());
  EXPECT_THROW(engine.query_series("s1", "bogus"), Error);
  EXPECT_EQ(engine.report_count("s1"), 3u);
}

TEST(StatsEngineTest, RegressionNeverNegative) {
  StatsEngine engine;
  std::mt19937_64 rng(3);
  double bytes = 0, pkts = 0, lost = 0;
  for (int i = 1; i <= 200; ++i) {
    if (rng() % 10 == 0) bytes = pkts = lost = 0;  // stream restart
    bytes += rng() % 100000;
    pkts += rng() % 100;
    lost += rng() % 5;
    auto res = engine.ingest(report(i * 1000.0, bytes, pkts, lost, bytes));
    ASSERT_TRUE(res.accepted);
  }
  for (const auto& name : known_metrics()) {
    for (const auto& p : engine.query_series("s1", name).points) EXPECT_GE(p.value, 0) << name;
  }
}

TEST(StatsJsonTest, CamelCaseAliases) {
  auto r = stats_report_from_json(json::parse(R"({"session_id":"a","taken_at_ms":5,"entries":[
      {"id":"x","type":"inbound-rtp","bytesReceived":10,"packetsLost":1,"jitter":0.01,"codecId":"c1"}]})"));
  const auto& e = r.entries.at("x");
  EXPECT_EQ(e.number("bytes_received"), 10);
  EXPECT_EQ(e.number("jitter_s"), 0.01);
  EXPECT_EQ(std::get<std::string>(e.fields.at("codecId")), "c1");
  EXPECT_EQ(stats_report_from_json(to_json(r)), r);
  EXPECT_THROW(stats_report_from_json(json::parse(R"({"taken_at_ms":0})")), Error);
}

TEST(WireFormatTest, RoundTripAndConstantCompresses) {
  MetricSeries constant{"send_bitrate_bps", "bps", {}};
  for (int i = 0; i < 100; ++i) constant.points.push_back({1000.0 * i, 1e6});
  MetricSeries noisy{"rtt_ms", "ms", {}};
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 300);
  for (int i = 0; i < 100; ++i) noisy.points.push_back({1000.0 * i + 0.5, u(rng)});
  const std::vector<MetricSeries> all{constant, noisy, MetricSeries{"mos", "mos", {}}};
  auto rec = encode_series("sess", all);
  auto back = decode_series(rec);
  EXPECT_EQ(back.session_id, "sess");
  EXPECT_EQ(back.series, all);

  auto only_constant = encode_series("sess", {constant});
  const auto body = only_constant.size() - only_constant.find('\n') - 1;
  EXPECT_LT(body, constant.points.size() * 16);
  EXPECT_THROW(decode_series("{}"), Error);
}

TEST(SinkTest, FileSinkAndUnreachable) {
  const auto path = std::filesystem::temp_directory_path() / "rtcshim_sink_test.bin";
  std::filesystem::remove(path);
  StatsEngine engine;
  for (int i = 1; i <= 3; ++i) engine.ingest(report(i * 1000.0, i * 1000.0, i * 10.0, 0));
  StatsSink sink("file://" + path.string());
  const auto n = compress_and_send(engine, "s1", sink);
  EXPECT_EQ(n, std::filesystem::file_size(path));
  std::ifstream in(path, std::ios::binary);
  std::string data((std::istreambuf_iterator<char>(in)), {});
  EXPECT_EQ(decode_series(data).series, engine.all_series("s1"));

  StatsSink down("http://127.0.0.1:1/ingest", 2);
  for (int i = 0; i < 4; ++i) {
    try {
      down.send("record");
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::kSinkUnreachable);
    }
  }
  EXPECT_EQ(down.pending(), 2u);
  EXPECT_EQ(down.dropped(), 2u);
}

}  // namespace
}  // namespace rtcshim
