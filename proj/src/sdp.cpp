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

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>

#include <fmt/format.h>

#include "rtcshim/error.hpp"

namespace rtcshim {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

std::optional<int> to_int(std::string_view s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  for (auto part : split(s, ' ')) {
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

[[noreturn]] void malformed(std::size_t line_no, std::string_view line, std::string_view why) {
  throw SdpParseError(Errc::kMalformedLine, line_no,
                      fmt::format("line {}: {}: '{}'", line_no, why, line));
}

// "a=<name>:<pt> <rest>" -> (pt token, rest)
std::pair<std::string_view, std::string_view> split_pt(std::string_view value) {
  auto space = value.find(' ');
  if (space == std::string_view::npos) return {value, {}};
  return {value.substr(0, space), trim(value.substr(space + 1))};
}

FmtpParams parse_fmtp_params(std::string_view text) {
  FmtpParams params;
  for (auto part : split(text, ';')) {
    part = trim(part);
    if (part.empty()) continue;
    auto eq = part.find('=');
    if (eq == std::string_view::npos) {
      params.push_back({std::string(part), std::nullopt});
    } else {
      params.push_back({std::string(trim(part.substr(0, eq))), std::string(trim(part.substr(eq + 1)))});
    }
  }
  return params;
}

std::string format_fmtp(int pt, const FmtpParams& params) {
  std::string out = fmt::format("a=fmtp:{} ", pt);
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (i) out += ';';
    out += params[i].key;
    if (params[i].value) out += '=' + *params[i].value;
  }
  return out;
}

std::string format_rtpmap(int pt, const RtpMap& map) {
  std::string out = fmt::format("a=rtpmap:{} {}/{}", pt, map.codec, map.clock_rate);
  if (map.channels) out += fmt::format("/{}", *map.channels);
  return out;
}

MediaSection parse_mline(std::string_view value, std::size_t line_no, std::string_view line) {
  const auto tokens = split_ws(value);
  if (tokens.size() < 3) malformed(line_no, line, "m= line needs media, port and protocol");
  MediaSection section;
  section.media_token = std::string(tokens[0]);
  section.kind = parse_media_kind(tokens[0]).value_or(MediaKind::kOther);
  for (char ch : section.media_token) {
    if (!std::isalnum(static_cast<unsigned char>(ch))) malformed(line_no, line, "media token");
  }
  auto port_parts = split(tokens[1], '/');
  auto port = to_int(port_parts[0]);
  if (!port || *port < 0 || *port > 65535 || port_parts.size() > 2) malformed(line_no, line, "port");
  section.port = *port;
  if (port_parts.size() == 2) {
    auto count = to_int(port_parts[1]);
    if (!count || *count <= 0) malformed(line_no, line, "port count");
    section.port_count = *count;
  }
  section.protocol = std::string(tokens[2]);
  bool numeric = true;
  std::vector<int> ids;
  for (std::size_t i = 3; i < tokens.size(); ++i) {
    auto id = to_int(tokens[i]);
    if (!id || *id < 0 || *id > 127) {
      numeric = false;
      break;
    }
    ids.push_back(*id);
  }
  if (numeric) {
    section.payload_ids = std::move(ids);
  } else {
    for (std::size_t i = 3; i < tokens.size(); ++i) section.formats.emplace_back(tokens[i]);
  }
  return section;
}

bool contains(const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); }

void parse_media_line(MediaSection& section, std::string_view line, std::size_t line_no) {
  using Kind = LineSlot::Kind;
  auto verbatim = [&] {
    section.other_lines.emplace_back(line);
    section.layout.push_back({Kind::kVerbatim, -1});
  };

  if (starts_with(line, "b=AS:")) {
    auto kbps = to_int(line.substr(5));
    if (!kbps || *kbps <= 0) malformed(line_no, line, "b=AS value");
    if (section.bandwidth_as_kbps) return verbatim();
    section.bandwidth_as_kbps = *kbps;
    section.layout.push_back({Kind::kBandwidth, -1});
    return;
  }
  if (!starts_with(line, "a=")) return verbatim();
  const std::string_view attr = line.substr(2);

  if (auto dir = parse_direction(attr)) {
    if (section.direction) return verbatim();
    section.direction = *dir;
    section.layout.push_back({Kind::kDirection, -1});
    return;
  }
  if (starts_with(attr, "candidate:")) {
    try {
      section.candidates.push_back(parse_candidate(line));
    } catch (const Error& e) {
      malformed(line_no, line, e.what());
    }
    section.layout.push_back({Kind::kCandidate, -1});
    return;
  }
  if (starts_with(attr, "rtpmap:")) {
    auto [pt_token, rest] = split_pt(attr.substr(7));
    auto pt = to_int(pt_token);
    auto parts = split(rest, '/');
    if (!pt || rest.empty() || parts.size() < 2 || parts.size() > 3) malformed(line_no, line, "rtpmap");
    auto clock = to_int(parts[1]);
    if (!clock || *clock <= 0) malformed(line_no, line, "rtpmap clock rate");
    std::optional<int> channels;
    if (parts.size() == 3) {
      channels = to_int(parts[2]);
      if (!channels || *channels <= 0) malformed(line_no, line, "rtpmap channels");
    }
    if (!contains(section.payload_ids, *pt) || section.rtpmap.count(*pt)) return verbatim();
    section.rtpmap[*pt] = RtpMap{std::string(parts[0]), *clock, channels};
    section.layout.push_back({Kind::kRtpmap, *pt});
    return;
  }
  if (starts_with(attr, "fmtp:")) {
    auto [pt_token, rest] = split_pt(attr.substr(5));
    auto pt = to_int(pt_token);
    if (!pt || !contains(section.payload_ids, *pt) || section.fmtp.count(*pt)) return verbatim();
    section.fmtp[*pt] = parse_fmtp_params(rest);
    section.layout.push_back({Kind::kFmtp, *pt});
    return;
  }
  if (starts_with(attr, "rtcp-fb:")) {
    auto [pt_token, rest] = split_pt(attr.substr(8));
    if (rest.empty()) return verbatim();
    if (pt_token == "*") {
      section.rtcp_fb_wildcard.emplace_back(rest);
      section.layout.push_back({Kind::kRtcpFbWildcard, -1});
      return;
    }
    auto pt = to_int(pt_token);
    if (!pt || !contains(section.payload_ids, *pt)) return verbatim();
    section.rtcp_fb[*pt].emplace_back(rest);
    section.layout.push_back({Kind::kRtcpFb, *pt});
    return;
  }
  verbatim();
}

void serialize_section(const MediaSection& s, std::vector<std::string>& out) {
  using Kind = LineSlot::Kind;
  {
    std::string m = "m=" + s.media_token + " " + std::to_string(s.port);
    if (s.port_count) m += "/" + std::to_string(*s.port_count);
    m += " " + s.protocol;
    if (!s.payload_ids.empty()) {
      for (int pt : s.payload_ids) m += " " + std::to_string(pt);
    } else {
      for (const auto& f : s.formats) m += " " + f;
    }
    out.push_back(std::move(m));
  }

  std::vector<std::string> sec;
  std::map<int, std::size_t> last_slot_for_pt;
  std::optional<std::size_t> last_candidate_slot, last_wildcard_slot;
  for (std::size_t i = 0; i < s.layout.size(); ++i) {
    const auto& slot = s.layout[i];
    switch (slot.kind) {
      case Kind::kRtpmap:
      case Kind::kFmtp:
      case Kind::kRtcpFb: last_slot_for_pt[slot.payload_id] = i; break;
      case Kind::kCandidate: last_candidate_slot = i; break;
      case Kind::kRtcpFbWildcard: last_wildcard_slot = i; break;
      default: break;
    }
  }

  const std::set<int> live(s.payload_ids.begin(), s.payload_ids.end());
  std::set<int> rtpmap_done, fmtp_done;
  std::map<int, std::size_t> fb_next;
  std::size_t verbatim_next = 0, candidate_next = 0, wildcard_next = 0;
  bool direction_done = false, bandwidth_done = false;

  auto emit_rtpmap = [&](int pt) {
    if (!live.count(pt) || rtpmap_done.count(pt)) return;
    auto it = s.rtpmap.find(pt);
    if (it == s.rtpmap.end()) return;
    sec.push_back(format_rtpmap(pt, it->second));
    rtpmap_done.insert(pt);
  };
  auto emit_fmtp = [&](int pt) {
    if (!live.count(pt) || fmtp_done.count(pt)) return;
    auto it = s.fmtp.find(pt);
    if (it == s.fmtp.end()) return;
    sec.push_back(format_fmtp(pt, it->second));
    fmtp_done.insert(pt);
  };
  auto emit_next_fb = [&](int pt) {
    if (!live.count(pt)) return;
    auto it = s.rtcp_fb.find(pt);
    if (it == s.rtcp_fb.end()) return;
    auto& next = fb_next[pt];
    if (next < it->second.size()) sec.push_back(fmt::format("a=rtcp-fb:{} {}", pt, it->second[next++]));
  };
  auto emit_pending_pt = [&](int pt) {
    emit_rtpmap(pt);
    auto it = s.rtcp_fb.find(pt);
    if (it != s.rtcp_fb.end() && live.count(pt)) {
      while (fb_next[pt] < it->second.size()) emit_next_fb(pt);
    }
    emit_fmtp(pt);
  };
  auto emit_remaining_candidates = [&] {
    while (candidate_next < s.candidates.size()) {
      sec.push_back("a=" + serialize_candidate(s.candidates[candidate_next++]));
    }
  };
  auto emit_remaining_wildcard = [&] {
    while (wildcard_next < s.rtcp_fb_wildcard.size()) {
      sec.push_back("a=rtcp-fb:* " + s.rtcp_fb_wildcard[wildcard_next++]);
    }
  };

  for (std::size_t i = 0; i < s.layout.size(); ++i) {
    const auto& slot = s.layout[i];
    switch (slot.kind) {
      case Kind::kVerbatim:
        if (verbatim_next < s.other_lines.size()) sec.push_back(s.other_lines[verbatim_next++]);
        break;
      case Kind::kRtpmap: emit_rtpmap(slot.payload_id); break;
      case Kind::kFmtp: emit_fmtp(slot.payload_id); break;
      case Kind::kRtcpFb: emit_next_fb(slot.payload_id); break;
      case Kind::kRtcpFbWildcard:
        if (wildcard_next < s.rtcp_fb_wildcard.size()) {
          sec.push_back("a=rtcp-fb:* " + s.rtcp_fb_wildcard[wildcard_next++]);
        }
        if (last_wildcard_slot == i) emit_remaining_wildcard();
        break;
      case Kind::kDirection:
        if (s.direction && !direction_done) {
          sec.push_back("a=" + std::string(to_string(*s.direction)));
          direction_done = true;
        }
        break;
      case Kind::kBandwidth:
        if (s.bandwidth_as_kbps && !bandwidth_done) {
          sec.push_back(fmt::format("b=AS:{}", *s.bandwidth_as_kbps));
          bandwidth_done = true;
        }
        break;
      case Kind::kCandidate:
        if (candidate_next < s.candidates.size()) {
          sec.push_back("a=" + serialize_candidate(s.candidates[candidate_next++]));
        }
        if (last_candidate_slot == i) emit_remaining_candidates();
        break;
    }
    if (slot.payload_id >= 0) {
      auto it = last_slot_for_pt.find(slot.payload_id);
      if (it != last_slot_for_pt.end() && it->second == i) emit_pending_pt(slot.payload_id);
    }
  }

  while (verbatim_next < s.other_lines.size()) sec.push_back(s.other_lines[verbatim_next++]);
  if (s.direction && !direction_done) sec.push_back("a=" + std::string(to_string(*s.direction)));
  for (int pt : s.payload_ids) emit_pending_pt(pt);
  emit_remaining_wildcard();
  emit_remaining_candidates();

  if (s.bandwidth_as_kbps && !bandwidth_done) {
    // Field order within a media description is m, i, c, b, then attributes.
    std::size_t pos = 0;
    auto c_line = std::find_if(sec.begin(), sec.end(), [](const std::string& l) { return starts_with(l, "c="); });
    if (c_line != sec.end()) {
      pos = static_cast<std::size_t>(c_line - sec.begin()) + 1;
    } else {
      while (pos < sec.size() && starts_with(sec[pos], "i=")) ++pos;
    }
    sec.insert(sec.begin() + static_cast<std::ptrdiff_t>(pos), fmt::format("b=AS:{}", *s.bandwidth_as_kbps));
  }
  out.insert(out.end(), std::make_move_iterator(sec.begin()), std::make_move_iterator(sec.end()));
}

std::optional<int> fmtp_apt(const MediaSection& s, int pt) {
  auto it = s.fmtp.find(pt);
  if (it == s.fmtp.end()) return std::nullopt;
  for (const auto& p : it->second) {
    if (p.key == "apt" && p.value) return to_int(*p.value);
  }
  return std::nullopt;
}

void remove_payloads(MediaSection& s, const std::set<int>& doomed) {
  std::erase_if(s.payload_ids, [&](int pt) { return doomed.count(pt) > 0; });
  for (int pt : doomed) {
    s.rtpmap.erase(pt);
    s.fmtp.erase(pt);
    s.rtcp_fb.erase(pt);
  }
}

bool is_fec_codec(std::string_view codec) {
  const std::string c = lower(codec);
  return c == "red" || c == "ulpfec" || c == "flexfec-03";
}

// Preference rank of `codec_name` for `query`, or nullopt if it does not match.
std::optional<int> match_rank(std::string_view codec_name, std::string_view query) {
  const std::string name = lower(codec_name);
  const std::string q = lower(query);
  if (q == "g.711" || q == "g711") {
    if (name == "pcmu") return 0;
    if (name == "pcma") return 1;
    return std::nullopt;
  }
  std::string canonical = q;
  if (q == "h.264") canonical = "h264";
  if (q == "g.722") canonical = "g722";
  if (q == "g.729") canonical = "g729";
  if (name == canonical) return 0;
  return std::nullopt;
}

bool kind_matches(const MediaSection& s, MediaKind kind) { return s.kind == kind; }

}  // namespace

std::string_view to_string(SdpType type) { return type == SdpType::kOffer ? "offer" : "answer"; }

std::string_view to_string(MediaKind kind) {
  switch (kind) {
    case MediaKind::kAudio: return "audio";
    case MediaKind::kVideo: return "video";
    case MediaKind::kApplication: return "application";
    case MediaKind::kOther: return "other";
  }
  return "?";
}

std::string_view to_string(Direction direction) {
  switch (direction) {
    case Direction::kSendRecv: return "sendrecv";
    case Direction::kSendOnly: return "sendonly";
    case Direction::kRecvOnly: return "recvonly";
    case Direction::kInactive: return "inactive";
  }
  return "?";
}

std::optional<SdpType> parse_sdp_type(std::string_view s) {
  if (s == "offer") return SdpType::kOffer;
  if (s == "answer") return SdpType::kAnswer;
  return std::nullopt;
}

std::optional<MediaKind> parse_media_kind(std::string_view s) {
  if (s == "audio") return MediaKind::kAudio;
  if (s == "video") return MediaKind::kVideo;
  if (s == "application") return MediaKind::kApplication;
  return std::nullopt;
}

std::optional<Direction> parse_direction(std::string_view s) {
  if (s == "sendrecv") return Direction::kSendRecv;
  if (s == "sendonly") return Direction::kSendOnly;
  if (s == "recvonly") return Direction::kRecvOnly;
  if (s == "inactive") return Direction::kInactive;
  return std::nullopt;
}

bool MediaSection::operator==(const MediaSection& o) const {
  return kind == o.kind && media_token == o.media_token && port == o.port &&
         port_count == o.port_count && protocol == o.protocol && payload_ids == o.payload_ids &&
         formats == o.formats && rtpmap == o.rtpmap && fmtp == o.fmtp && rtcp_fb == o.rtcp_fb &&
         rtcp_fb_wildcard == o.rtcp_fb_wildcard && direction == o.direction &&
         bandwidth_as_kbps == o.bandwidth_as_kbps && candidates == o.candidates &&
         other_lines == o.other_lines;
}

std::optional<std::string> MediaSection::codec_of(int payload_id) const {
  auto it = rtpmap.find(payload_id);
  if (it != rtpmap.end()) return it->second.codec;
  // Static payload types that may appear without an rtpmap line.
  switch (payload_id) {
    case 0: return "PCMU";
    case 8: return "PCMA";
    case 9: return "G722";
    case 18: return "G729";
    default: return std::nullopt;
  }
}

SessionDescription parse_sdp(std::string_view text, SdpType type) {
  SessionDescription sd;
  sd.type = type;
  bool saw_v = false, saw_o = false;
  MediaSection* current = nullptr;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) continue;
    if (line.size() < 2 || line[1] != '=' || !std::islower(static_cast<unsigned char>(line[0]))) {
      malformed(line_no, line, "expected <type>=<value>");
    }
    const char kind = line[0];
    if (kind == 'm') {
      if (!saw_v || !saw_o) {
        throw SdpParseError(Errc::kMissingMandatory, line_no, "media section before v= and o= lines");
      }
      sd.media_sections.push_back(parse_mline(line.substr(2), line_no, line));
      current = &sd.media_sections.back();
      continue;
    }
    if (current) {
      parse_media_line(*current, line, line_no);
      continue;
    }
    if (kind == 'v') {
      if (saw_v || !sd.session_lines.empty()) malformed(line_no, line, "v= must be the first line");
      saw_v = true;
    } else if (!saw_v) {
      throw SdpParseError(Errc::kMissingMandatory, line_no, "description must start with v=");
    }
    if (kind == 'o') saw_o = true;
    sd.session_lines.emplace_back(line);
  }
  if (!saw_v || !saw_o) throw SdpParseError(Errc::kMissingMandatory, 0, "missing v= or o= line");
  return sd;
}

std::string serialize_sdp(const SessionDescription& sd) {
  std::vector<std::string> lines = sd.session_lines;
  for (const auto& section : sd.media_sections) serialize_section(section, lines);
  std::string out;
  for (const auto& l : lines) {
    out += l;
    out += "\r\n";
  }
  return out;
}

bool codec_matches(std::string_view codec_name, std::string_view query) {
  return match_rank(codec_name, query).has_value();
}

SessionDescription prefer_codec(SessionDescription sd, MediaKind kind, std::string_view codec,
                                Warnings* warnings) {
  bool found = false;
  for (auto& s : sd.media_sections) {
    if (!kind_matches(s, kind)) continue;
    std::vector<std::pair<int, int>> matched;  // (rank, pt)
    std::vector<int> rest;
    for (int pt : s.payload_ids) {
      auto name = s.codec_of(pt);
      auto rank = name ? match_rank(*name, codec) : std::nullopt;
      if (rank) {
        matched.emplace_back(*rank, pt);
      } else {
        rest.push_back(pt);
      }
    }
    if (matched.empty()) continue;
    found = true;
    std::stable_sort(matched.begin(), matched.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<int> reordered;
    for (const auto& [rank, pt] : matched) reordered.push_back(pt);
    reordered.insert(reordered.end(), rest.begin(), rest.end());
    s.payload_ids = std::move(reordered);
  }
  if (!found && warnings) {
    warnings->push_back(fmt::format("prefer_codec: no {} codec matching '{}'", to_string(kind), codec));
  }
  return sd;
}

SessionDescription set_media_policy(SessionDescription sd, MediaKind kind, const MediaPolicy& policy,
                                    Warnings* warnings) {
  bool found = false;
  for (auto& s : sd.media_sections) {
    if (!kind_matches(s, kind)) continue;
    found = true;
    if (std::holds_alternative<DisableMedia>(policy)) {
      s.port = 0;
    } else {
      s.direction = std::get<Direction>(policy);
    }
  }
  if (!found && warnings) {
    warnings->push_back(fmt::format("set_media_policy: no {} section", to_string(kind)));
  }
  return sd;
}

SessionDescription set_receiver_bandwidth(SessionDescription sd, MediaKind kind, int kbps,
                                          Warnings* warnings) {
  if (kbps <= 0) throw Error(Errc::kInvalidValue, fmt::format("bandwidth must be positive, got {}", kbps));
  bool found = false;
  for (auto& s : sd.media_sections) {
    if (!kind_matches(s, kind)) continue;
    found = true;
    s.bandwidth_as_kbps = kbps;
  }
  if (!found && warnings) {
    warnings->push_back(fmt::format("set_receiver_bandwidth: no {} section", to_string(kind)));
  }
  return sd;
}

SessionDescription set_fmtp_param(SessionDescription sd, std::string_view codec, std::string_view key,
                                  std::string_view value, Warnings* warnings) {
  bool found = false;
  for (auto& s : sd.media_sections) {
    for (int pt : s.payload_ids) {
      auto name = s.codec_of(pt);
      if (!name || !codec_matches(*name, codec)) continue;
      found = true;
      auto& params = s.fmtp[pt];
      auto it = std::find_if(params.begin(), params.end(), [&](const FmtpParam& p) { return p.key == key; });
      if (it != params.end()) {
        it->value = std::string(value);
      } else {
        params.push_back({std::string(key), std::string(value)});
      }
    }
  }
  if (!found && warnings) warnings->push_back(fmt::format("set_fmtp_param: codec '{}' not present", codec));
  return sd;
}

std::optional<FeedbackAction> parse_feedback_action(std::string_view s) {
  if (s == "remove_nack") return FeedbackAction::kRemoveNack;
  if (s == "remove_fec") return FeedbackAction::kRemoveFec;
  if (s == "require_fec") return FeedbackAction::kRequireFec;
  return std::nullopt;
}

SessionDescription modify_feedback(SessionDescription sd, FeedbackAction action, Warnings* warnings) {
  auto is_nack = [](const std::string& token) { return token == "nack" || starts_with(token, "nack "); };
  switch (action) {
    case FeedbackAction::kRemoveNack:
      for (auto& s : sd.media_sections) {
        for (auto& [pt, tokens] : s.rtcp_fb) std::erase_if(tokens, is_nack);
        std::erase_if(s.rtcp_fb, [](const auto& kv) { return kv.second.empty(); });
        std::erase_if(s.rtcp_fb_wildcard, is_nack);
      }
      break;
    case FeedbackAction::kRemoveFec:
      for (auto& s : sd.media_sections) {
        std::set<int> doomed;
        for (int pt : s.payload_ids) {
          auto name = s.codec_of(pt);
          if (name && is_fec_codec(*name)) doomed.insert(pt);
        }
        if (doomed.empty()) continue;
        // Retransmission payloads bound to a removed payload go with it.
        for (int pt : s.payload_ids) {
          auto name = s.codec_of(pt);
          auto apt = fmtp_apt(s, pt);
          if (name && lower(*name) == "rtx" && apt && doomed.count(*apt)) doomed.insert(pt);
        }
        remove_payloads(s, doomed);
      }
      break;
    case FeedbackAction::kRequireFec: {
      bool has_fec = false;
      for (const auto& s : sd.media_sections) {
        for (int pt : s.payload_ids) {
          auto name = s.codec_of(pt);
          if (name && is_fec_codec(*name)) has_fec = true;
        }
      }
      if (!has_fec && warnings) {
        warnings->push_back("require_fec: no FEC payload offered; the endpoint must add it");
      }
      break;
    }
  }
  return sd;
}

CandidateList collect_candidates(const SessionDescription& sd) {
  CandidateList out;
  for (const auto& s : sd.media_sections) out.insert(out.end(), s.candidates.begin(), s.candidates.end());
  return out;
}

SessionDescription filter_sdp_candidates(SessionDescription sd, const CandidatePolicy& policy) {
  for (auto& s : sd.media_sections) s.candidates = filter_candidates(s.candidates, policy);
  return sd;
}

json to_json(const SessionDescription& sd) {
  return {{"type", to_string(sd.type)}, {"sdp", serialize_sdp(sd)}};
}

SessionDescription session_description_from_json(const json& j) {
  if (!j.is_object() || !j.contains("sdp") || !j.at("sdp").is_string()) {
    throw Error(Errc::kInvalidValue, "session description must be {type, sdp}");
  }
  auto type = parse_sdp_type(j.value("type", std::string("offer")));
  if (!type) throw Error(Errc::kInvalidValue, "session description type must be offer or answer");
  return parse_sdp(j.at("sdp").get<std::string>(), *type);
}

}  // namespace rtcshim
