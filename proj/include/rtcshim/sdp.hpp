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

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rtcshim/ice.hpp"
#include "rtcshim/scalar.hpp"

namespace rtcshim {

enum class SdpType { kOffer, kAnswer };
enum class MediaKind { kAudio, kVideo, kApplication, kOther };
enum class Direction { kSendRecv, kSendOnly, kRecvOnly, kInactive };

std::string_view to_string(SdpType type);
std::string_view to_string(MediaKind kind);
std::string_view to_string(Direction direction);
std::optional<SdpType> parse_sdp_type(std::string_view s);
std::optional<MediaKind> parse_media_kind(std::string_view s);
std::optional<Direction> parse_direction(std::string_view s);

struct RtpMap {
  std::string codec;
  int clock_rate = 0;
  std::optional<int> channels;

  bool operator==(const RtpMap&) const = default;
};

struct FmtpParam {
  std::string key;
  std::optional<std::string> value;

  bool operator==(const FmtpParam&) const = default;
};

using FmtpParams = std::vector<FmtpParam>;

// Where each recognized or preserved line sat in the original section, so a
// rewrite only disturbs the lines it targets.
struct LineSlot {
  enum class Kind { kVerbatim, kRtpmap, kFmtp, kRtcpFb, kRtcpFbWildcard, kDirection, kBandwidth, kCandidate };
  Kind kind = Kind::kVerbatim;
  int payload_id = -1;
};

struct MediaSection {
  MediaKind kind = MediaKind::kAudio;
  std::string media_token = "audio";
  int port = 9;
  std::optional<int> port_count;
  std::string protocol = "UDP/TLS/RTP/SAVPF";
  std::vector<int> payload_ids;
  // Non-numeric format tokens, e.g. "webrtc-datachannel".
  std::vector<std::string> formats;
  std::map<int, RtpMap> rtpmap;
  std::map<int, FmtpParams> fmtp;
  std::map<int, std::vector<std::string>> rtcp_fb;
  std::vector<std::string> rtcp_fb_wildcard;
  std::optional<Direction> direction;
  std::optional<int> bandwidth_as_kbps;
  CandidateList candidates;
  std::vector<std::string> other_lines;

  std::vector<LineSlot> layout;

  // Structural equality; layout is ignored.
  bool operator==(const MediaSection& other) const;

  std::optional<std::string> codec_of(int payload_id) const;
};

struct SessionDescription {
  SdpType type = SdpType::kOffer;
  std::vector<std::string> session_lines;
  std::vector<MediaSection> media_sections;

  bool operator==(const SessionDescription& other) const = default;
};

using Warnings = std::vector<std::string>;

// Accepts CR LF or bare LF framing. Throws SdpParseError (kMalformedLine with
// a 1-based line number, or kMissingMandatory).
SessionDescription parse_sdp(std::string_view text, SdpType type = SdpType::kOffer);

// CR LF framed, including a trailing CR LF.
std::string serialize_sdp(const SessionDescription& sd);

// Case-insensitive codec match. "G.711" covers PCMU and PCMA, "H.264" is
// H264 and "G.722" is G722.
bool codec_matches(std::string_view codec_name, std::string_view query);

SessionDescription prefer_codec(SessionDescription sd, MediaKind kind, std::string_view codec,
                                Warnings* warnings = nullptr);

struct DisableMedia {};
using MediaPolicy = std::variant<DisableMedia, Direction>;

SessionDescription set_media_policy(SessionDescription sd, MediaKind kind, const MediaPolicy& policy,
                                    Warnings* warnings = nullptr);

// Throws Error(kInvalidValue) for kbps <= 0.
SessionDescription set_receiver_bandwidth(SessionDescription sd, MediaKind kind, int kbps,
                                          Warnings* warnings = nullptr);

SessionDescription set_fmtp_param(SessionDescription sd, std::string_view codec, std::string_view key,
                                  std::string_view value, Warnings* warnings = nullptr);

enum class FeedbackAction { kRemoveNack, kRemoveFec, kRequireFec };
std::optional<FeedbackAction> parse_feedback_action(std::string_view s);

SessionDescription modify_feedback(SessionDescription sd, FeedbackAction action,
                                   Warnings* warnings = nullptr);

// Candidate helpers for munging candidates embedded in a description.
CandidateList collect_candidates(const SessionDescription& sd);
SessionDescription filter_sdp_candidates(SessionDescription sd, const CandidatePolicy& policy);

json to_json(const SessionDescription& sd);
SessionDescription session_description_from_json(const json& j);

}  // namespace rtcshim
