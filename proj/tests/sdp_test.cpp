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

#include "rtcshim/sdp.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rtcshim/error.hpp"

namespace rtcshim {
namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::filesystem::path kCorpus = RTCSHIM_CORPUS_DIR;

constexpr const char* kMinimalOffer =
    "v=0\r\n"
    "o=- 1 1 IN IP4 0.0.0.0\r\n"
    "s=-\r\n"
    "t=0 0\r\n"
    "m=audio 9 RTP/AVP 111 0\r\n"
    "a=rtpmap:111 opus/48000/2\r\n"
    "a=rtpmap:0 PCMU/8000\r\n";

TEST(SdpParseTest, MinimalAudioOffer) {
  auto sd = parse_sdp(kMinimalOffer);
  ASSERT_EQ(sd.media_sections.size(), 1u);
  const auto& m = sd.media_sections[0];
  EXPECT_EQ(m.kind, MediaKind::kAudio);
  EXPECT_EQ(m.payload_ids, (std::vector<int>{111, 0}));
  EXPECT_EQ(m.rtpmap.at(111), (RtpMap{"opus", 48000, 2}));
  EXPECT_EQ(m.rtpmap.at(0), (RtpMap{"PCMU", 8000, std::nullopt}));
  EXPECT_EQ(sd.session_lines.size(), 4u);
}

TEST(SdpParseTest, UnmodifiedSerializesToCanonicalInput) {
  EXPECT_EQ(serialize_sdp(parse_sdp(kMinimalOffer)), kMinimalOffer);
}

TEST(SdpParseTest, GarbageMediaLineReportsLineNumber) {
  const std::string text = "v=0\r\no=- 1 1 IN IP4 0.0.0.0\r\ns=-\r\nt=0 0\r\nm=audio\r\n";
  try {
    parse_sdp(text);
    FAIL();
  } catch (const SdpParseError& e) {
    EXPECT_EQ(e.code(), Errc::kMalformedLine);
    EXPECT_EQ(e.line_no(), 5u);
  }
}

TEST(SdpParseTest, MalformedLines) {
  for (const char* body : {"m=audio x RTP/AVP 0\n", "m=audio 9 RTP/AVP 0\na=rtpmap:0 PCMU\n", "garbage\n",
                           "m=audio 9 RTP/AVP 0\na=candidate:broken\n", "m=audio 9 RTP/AVP 0\nb=AS:-1\n"}) {
    const std::string text = std::string("v=0\no=- 1 1 IN IP4 0.0.0.0\ns=-\nt=0 0\n") + body;
    EXPECT_THROW(parse_sdp(text), SdpParseError) << body;
  }
}

TEST(SdpParseTest, MissingMandatory) {
  try {
    parse_sdp("s=-\nm=audio 9 RTP/AVP 0\n");
    FAIL();
  } catch (const SdpParseError& e) {
    EXPECT_EQ(e.code(), Errc::kMissingMandatory);
  }
  EXPECT_THROW(parse_sdp("v=0\ns=-\nm=audio 9 RTP/AVP 0\n"), SdpParseError);
  EXPECT_THROW(parse_sdp(""), SdpParseError);
}

TEST(SdpParseTest, AcceptsBareLf) {
  std::string lf = kMinimalOffer;
  std::erase(lf, '\r');
  EXPECT_EQ(parse_sdp(lf), parse_sdp(kMinimalOffer));
  EXPECT_EQ(serialize_sdp(parse_sdp(lf)), kMinimalOffer);
}

TEST(SdpSerializeTest, EmptyMediaSections) {
  auto sd = parse_sdp("v=0\r\no=- 1 1 IN IP4 0.0.0.0\r\ns=-\r\nt=0 0\r\n");
  EXPECT_TRUE(sd.media_sections.empty());
  EXPECT_EQ(serialize_sdp(sd), "v=0\r\no=- 1 1 IN IP4 0.0.0.0\r\ns=-\r\nt=0 0\r\n");
}

TEST(SdpSerializeTest, BandwidthLineFollowsConnectionLine) {
  auto sd = parse_sdp(read_file(kCorpus / "03_chrome_video_only.sdp"));
  sd = set_receiver_bandwidth(sd, MediaKind::kVideo, 256);
  const auto text = serialize_sdp(sd);
  EXPECT_NE(text.find("c=IN IP4 0.0.0.0\r\nb=AS:256\r\n"), std::string::npos);
}

TEST(PreferCodecTest, MovesPcmuFirst) {
  auto sd = prefer_codec(parse_sdp(kMinimalOffer), MediaKind::kAudio, "PCMU");
  EXPECT_EQ(sd.media_sections[0].payload_ids, (std::vector<int>{0, 111}));
}

TEST(PreferCodecTest, AlreadyFirstIsUnchanged) {
  auto sd = prefer_codec(parse_sdp(kMinimalOffer), MediaKind::kAudio, "PCMU");
  EXPECT_EQ(prefer_codec(sd, MediaKind::kAudio, "pcmu"), sd);
}

TEST(PreferCodecTest, AbsentCodecWarns) {
  Warnings warnings;
  const auto in = parse_sdp(kMinimalOffer);
  EXPECT_EQ(prefer_codec(in, MediaKind::kAudio, "G729", &warnings), in);
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(PreferCodecTest, G711AliasRanksPcmuBeforePcma) {
  auto sd = parse_sdp(read_file(kCorpus / "17_sip_gateway_offer.sdp"));
  ASSERT_EQ(sd.media_sections[0].payload_ids, (std::vector<int>{8, 0, 9, 101}));
  sd = prefer_codec(sd, MediaKind::kAudio, "G.711");
  EXPECT_EQ(sd.media_sections[0].payload_ids, (std::vector<int>{0, 8, 9, 101}));
}

TEST(PreferCodecTest, RtxIsNotMoved) {
  auto sd = parse_sdp(read_file(kCorpus / "03_chrome_video_only.sdp"));
  sd = prefer_codec(sd, MediaKind::kVideo, "H.264");
  EXPECT_EQ(sd.media_sections[0].payload_ids,
            (std::vector<int>{102, 127, 96, 97, 98, 99, 103, 125, 116, 117, 118}));
}

TEST(MediaPolicyTest, DisableVideoSetsPortZero) {
  auto sd = parse_sdp(read_file(kCorpus / "01_chrome_audio_video.sdp"));
  sd = set_media_policy(sd, MediaKind::kVideo, DisableMedia{});
  EXPECT_EQ(sd.media_sections[1].port, 0);
  EXPECT_EQ(sd.media_sections[0].port, 9);
}

TEST(MediaPolicyTest, DirectionReplaced) {
  auto sd = parse_sdp(read_file(kCorpus / "01_chrome_audio_video.sdp"));
  sd = set_media_policy(sd, MediaKind::kAudio, Direction::kRecvOnly);
  EXPECT_EQ(sd.media_sections[0].direction, Direction::kRecvOnly);
  const auto text = serialize_sdp(sd);
  EXPECT_NE(text.find("a=recvonly\r\n"), std::string::npos);
  EXPECT_EQ(text.find("a=sendrecv\r\na=msid:stream0 audio0"), std::string::npos);
}

TEST(MediaPolicyTest, MissingKindWarns) {
  Warnings warnings;
  auto in = parse_sdp(read_file(kCorpus / "03_chrome_video_only.sdp"));
  EXPECT_EQ(set_media_policy(in, MediaKind::kAudio, DisableMedia{}, &warnings), in);
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(BandwidthTest, OverwritesExisting) {
  auto sd = parse_sdp(read_file(kCorpus / "09_existing_bandwidth.sdp"));
  EXPECT_EQ(sd.media_sections[1].bandwidth_as_kbps, 1000);
  sd = set_receiver_bandwidth(sd, MediaKind::kVideo, 256);
  const auto text = serialize_sdp(sd);
  EXPECT_EQ(text.find("b=AS:1000"), std::string::npos);
  EXPECT_NE(text.find("b=AS:256"), std::string::npos);
  EXPECT_NE(text.find("b=AS:64"), std::string::npos);
}

TEST(BandwidthTest, RejectsNonPositive) {
  auto sd = parse_sdp(kMinimalOffer);
  try {
    set_receiver_bandwidth(sd, MediaKind::kAudio, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kInvalidValue);
  }
}

TEST(BandwidthTest, PreservesOtherLinesByteForByte) {
  const auto original = serialize_sdp(parse_sdp(read_file(kCorpus / "01_chrome_audio_video.sdp")));
  auto modified = serialize_sdp(set_receiver_bandwidth(parse_sdp(original), MediaKind::kVideo, 300));
  const std::string inserted = "b=AS:300\r\n";
  auto pos = modified.find(inserted);
  ASSERT_NE(pos, std::string::npos);
  modified.erase(pos, inserted.size());
  EXPECT_EQ(modified, original);
}

TEST(FmtpTest, StereoOffOnOpus) {
  auto sd = set_fmtp_param(parse_sdp(read_file(kCorpus / "06_firefox_offer.sdp")), "opus", "stereo", "0");
  const auto& params = sd.media_sections[0].fmtp.at(109);
  auto it = std::find_if(params.begin(), params.end(), [](const FmtpParam& p) { return p.key == "stereo"; });
  ASSERT_NE(it, params.end());
  EXPECT_EQ(it->value, "0");
}

TEST(FmtpTest, CreatesEntryWhenAbsent) {
  auto sd = set_fmtp_param(parse_sdp(read_file(kCorpus / "26_h264_no_fmtp.sdp")), "H264", "packetization-mode", "1");
  EXPECT_EQ(sd.media_sections[0].fmtp.at(98), (FmtpParams{{"packetization-mode", "1"}}));
}

TEST(FmtpTest, AbsentCodecUnchanged) {
  Warnings warnings;
  auto in = parse_sdp(kMinimalOffer);
  EXPECT_EQ(set_fmtp_param(in, "H264", "packetization-mode", "1", &warnings), in);
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(FeedbackTest, RemoveNackDropsBothForms) {
  auto sd = parse_sdp(read_file(kCorpus / "20_video_section_info_line.sdp"));
  EXPECT_EQ(sd.media_sections[0].rtcp_fb.at(96), (std::vector<std::string>{"nack", "nack pli"}));
  sd = modify_feedback(sd, FeedbackAction::kRemoveNack);
  EXPECT_FALSE(sd.media_sections[0].rtcp_fb.count(96));
}

TEST(FeedbackTest, RemoveFecDropsRedUlpfecAndTheirRtx) {
  auto sd = modify_feedback(parse_sdp(read_file(kCorpus / "03_chrome_video_only.sdp")), FeedbackAction::kRemoveFec);
  const auto& m = sd.media_sections[0];
  for (int pt : {116, 117, 118}) {
    EXPECT_EQ(std::count(m.payload_ids.begin(), m.payload_ids.end(), pt), 0);
    EXPECT_FALSE(m.rtpmap.count(pt));
    EXPECT_FALSE(m.fmtp.count(pt));
  }
  EXPECT_EQ(m.payload_ids.size(), 8u);
}

TEST(FeedbackTest, RequireFecWarnsWhenAbsent) {
  Warnings warnings;
  auto in = parse_sdp(read_file(kCorpus / "12_no_fec_video.sdp"));
  EXPECT_EQ(modify_feedback(in, FeedbackAction::kRequireFec, &warnings), in);
  EXPECT_EQ(warnings.size(), 1u);
}

SessionDescription apply_case(const SessionDescription& in, const std::string& rewrite, const json& p) {
  if (rewrite == "roundtrip") return in;
  if (rewrite == "prefer_codec") {
    return prefer_codec(in, *parse_media_kind(p.at("kind").get<std::string>()), p.at("codec").get<std::string>());
  }
  if (rewrite == "set_receiver_bandwidth") {
    return set_receiver_bandwidth(in, *parse_media_kind(p.at("kind").get<std::string>()), p.at("kbps").get<int>());
  }
  if (rewrite == "set_fmtp_param") {
    return set_fmtp_param(in, p.at("codec").get<std::string>(), p.at("key").get<std::string>(),
                          p.at("value").get<std::string>());
  }
  if (rewrite == "modify_feedback") {
    return modify_feedback(in, *parse_feedback_action(p.at("action").get<std::string>()));
  }
  ADD_FAILURE() << "unknown rewrite " << rewrite;
  return in;
}

TEST(SdpCorpusTest, GoldenFiles) {
  const auto manifest = json::parse(read_file(kCorpus / "manifest.json"));
  ASSERT_GE(manifest.size(), 25u);
  for (const auto& c : manifest) {
    SCOPED_TRACE(c.at("name").get<std::string>());
    const auto in = parse_sdp(read_file(kCorpus / c.at("input").get<std::string>()));
    const auto out = apply_case(in, c.at("rewrite").get<std::string>(), c.at("params"));
    EXPECT_EQ(serialize_sdp(out), read_file(kCorpus / c.at("expected").get<std::string>()));
  }
}

TEST(SdpCorpusTest, RoundTripAndRewriteProperties) {
  std::size_t inputs = 0;
  for (const auto& entry : std::filesystem::directory_iterator(kCorpus)) {
    if (entry.path().extension() != ".sdp") continue;
    ++inputs;
    SCOPED_TRACE(entry.path().filename().string());
    const auto sd = parse_sdp(read_file(entry.path()));
    EXPECT_EQ(parse_sdp(serialize_sdp(sd)), sd);

    for (auto kind : {MediaKind::kAudio, MediaKind::kVideo}) {
      for (const char* codec : {"PCMU", "G.711", "H264", "opus", "VP9"}) {
        const auto once = prefer_codec(sd, kind, codec);
        EXPECT_EQ(prefer_codec(once, kind, codec), once);
        for (std::size_t i = 0; i < sd.media_sections.size(); ++i) {
          auto a = sd.media_sections[i].payload_ids;
          auto b = once.media_sections[i].payload_ids;
          std::sort(a.begin(), a.end());
          std::sort(b.begin(), b.end());
          EXPECT_EQ(a, b);
        }
        // Rewrites must survive their own serialization.
        EXPECT_EQ(parse_sdp(serialize_sdp(once)), once);
      }
    }
    for (auto action : {FeedbackAction::kRemoveNack, FeedbackAction::kRemoveFec}) {
      const auto once = modify_feedback(sd, action);
      EXPECT_EQ(modify_feedback(once, action), once);
      EXPECT_EQ(parse_sdp(serialize_sdp(once)), once);
    }
    const auto filtered = filter_sdp_candidates(sd, CandidatePolicy{.relay_only = true});
    for (const auto& c : collect_candidates(filtered)) EXPECT_EQ(c.type, CandidateType::kRelay);
    EXPECT_EQ(parse_sdp(serialize_sdp(filtered)), filtered);
  }
  EXPECT_GE(inputs, 25u);
}

}  // namespace
}  // namespace rtcshim
