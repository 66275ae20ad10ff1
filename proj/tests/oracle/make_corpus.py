#!/usr/bin/env python3
"""Builds corpus/*.sdp inputs and hand-rule golden outputs.

The golden outputs are produced by line-level text edits that follow the
offer/answer and SDP field-order rules directly; this script shares no code
with the C++ implementation.
"""
import json
import os
import re
import sys

OUT = sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "..", "..", "corpus")

SESSION = ["v=0", "o=- {sid} 2 IN IP4 127.0.0.1", "s=-", "t=0 0"]


def session(sid, bundle=None, extra=()):
    lines = [l.format(sid=sid) for l in SESSION]
    if bundle:
        lines.append("a=group:BUNDLE " + " ".join(bundle))
    lines.extend(extra)
    lines.append("a=msid-semantic: WMS stream0")
    return lines


def chrome_audio(mid="0", port=9, cands=(), bw=None, direction="sendrecv", with_red=True):
    pts = ["111"] + (["63"] if with_red else []) + ["9", "0", "8", "13", "110", "126"]
    l = [f"m=audio {port} UDP/TLS/RTP/SAVPF " + " ".join(pts), "c=IN IP4 0.0.0.0"]
    if bw:
        l.append(f"b=AS:{bw}")
    l += ["a=rtcp:9 IN IP4 0.0.0.0"]
    l += [f"a={c}" for c in cands]
    l += ["a=ice-ufrag:EsAw", "a=ice-pwd:P2uYro0UCOQ4zxjKXaWCBui1", "a=ice-options:trickle",
          "a=fingerprint:sha-256 7B:8B:F0:65:5F:78:E2:51:3B:AC:6F:F3:3F:46:1B:35:DC:B8:5F:64:1A:24:C2:43:F0:A1:58:D0:A1:2C:19:08",
          "a=setup:actpass", f"a=mid:{mid}",
          "a=extmap:1 urn:ietf:params:rtp-hdrext:ssrc-audio-level", f"a={direction}",
          "a=msid:stream0 audio0", "a=rtcp-mux",
          "a=rtpmap:111 opus/48000/2", "a=rtcp-fb:111 transport-cc", "a=fmtp:111 minptime=10;useinbandfec=1"]
    if with_red:
        l += ["a=rtpmap:63 red/48000/2", "a=fmtp:63 111/111"]
    l += ["a=rtpmap:9 G722/8000", "a=rtpmap:0 PCMU/8000", "a=rtpmap:8 PCMA/8000",
          "a=rtpmap:13 CN/8000", "a=rtpmap:110 telephone-event/48000", "a=rtpmap:126 telephone-event/8000",
          "a=ssrc:1001 cname:abcd"]
    return l


def chrome_video(mid="1", port=9, bw=None, direction="sendrecv", fec=True, cands=()):
    pts = ["96", "97", "98", "99", "102", "103", "127", "125"] + (["116", "117", "118"] if fec else [])
    l = [f"m=video {port} UDP/TLS/RTP/SAVPF " + " ".join(pts), "c=IN IP4 0.0.0.0"]
    if bw:
        l.append(f"b=AS:{bw}")
    l += ["a=rtcp:9 IN IP4 0.0.0.0"]
    l += [f"a={c}" for c in cands]
    l += ["a=ice-ufrag:EsAw", "a=ice-pwd:P2uYro0UCOQ4zxjKXaWCBui1", "a=ice-options:trickle",
          "a=setup:actpass", f"a=mid:{mid}", "a=extmap:14 urn:ietf:params:rtp-hdrext:toffset",
          f"a={direction}", "a=msid:stream0 video0", "a=rtcp-mux", "a=rtcp-rsize"]
    def codec(pt, name, rtx, fmtp=None):
        out = [f"a=rtpmap:{pt} {name}/90000", f"a=rtcp-fb:{pt} goog-remb", f"a=rtcp-fb:{pt} transport-cc",
               f"a=rtcp-fb:{pt} ccm fir", f"a=rtcp-fb:{pt} nack", f"a=rtcp-fb:{pt} nack pli"]
        if fmtp:
            out.append(f"a=fmtp:{pt} {fmtp}")
        out += [f"a=rtpmap:{rtx} rtx/90000", f"a=fmtp:{rtx} apt={pt}"]
        return out
    l += codec(96, "VP8", 97)
    l += codec(98, "VP9", 99, "profile-id=0")
    l += codec(102, "H264", 103, "level-asymmetry-allowed=1;packetization-mode=1;profile-level-id=42001f")
    l += codec(127, "H264", 125, "level-asymmetry-allowed=1;packetization-mode=0;profile-level-id=42001f")
    if fec:
        l += ["a=rtpmap:116 red/90000", "a=rtpmap:117 rtx/90000", "a=fmtp:117 apt=116",
              "a=rtpmap:118 ulpfec/90000"]
    l += ["a=ssrc-group:FID 2001 2002", "a=ssrc:2001 cname:abcd", "a=ssrc:2002 cname:abcd"]
    return l


def datachannel(mid="2", port=9):
    return [f"m=application {port} UDP/DTLS/SCTP webrtc-datachannel", "c=IN IP4 0.0.0.0",
            "a=ice-ufrag:EsAw", "a=ice-pwd:P2uYro0UCOQ4zxjKXaWCBui1", "a=setup:actpass",
            f"a=mid:{mid}", "a=sctp-port:5000", "a=max-message-size:262144"]


def firefox_offer():
    l = ["v=0", "o=mozilla...THIS_IS_SDPARTA-99.0 5187563522306462532 0 IN IP4 0.0.0.0", "s=-", "t=0 0",
         "a=fingerprint:sha-256 1A:2B:3C:4D:5E:6F:70:81:92:A3:B4:C5:D6:E7:F8:09:1A:2B:3C:4D:5E:6F:70:81:92:A3:B4:C5:D6:E7:F8:09",
         "a=group:BUNDLE 0 1", "a=ice-options:trickle", "a=msid-semantic:WMS *",
         "m=audio 9 UDP/TLS/RTP/SAVPF 109 9 0 8 101", "c=IN IP4 0.0.0.0", "a=sendrecv",
         "a=extmap:1 urn:ietf:params:rtp-hdrext:ssrc-audio-level",
         "a=fmtp:109 maxplaybackrate=48000;stereo=1;useinbandfec=1", "a=fmtp:101 0-15",
         "a=ice-pwd:0b6b2ba5a2c9e8c8d1fb5bb2f1b2f4b1", "a=ice-ufrag:3f1c2a7d", "a=mid:0",
         "a=msid:{5d1e} {0c2b}", "a=rtcp-mux", "a=rtpmap:109 opus/48000/2", "a=rtpmap:9 G722/8000/1",
         "a=rtpmap:0 PCMU/8000", "a=rtpmap:8 PCMA/8000", "a=rtpmap:101 telephone-event/8000",
         "a=setup:actpass", "a=ssrc:3001 cname:{aa}",
         "m=video 9 UDP/TLS/RTP/SAVPF 120 124 121 125 126 127 97 98", "c=IN IP4 0.0.0.0", "a=sendrecv",
         "a=fmtp:126 profile-level-id=42e01f;level-asymmetry-allowed=1;packetization-mode=1",
         "a=fmtp:97 profile-level-id=42e01f;level-asymmetry-allowed=1",
         "a=fmtp:120 max-fs=12288;max-fr=60", "a=fmtp:124 apt=120", "a=fmtp:121 max-fs=12288;max-fr=60",
         "a=fmtp:125 apt=121", "a=fmtp:127 apt=126", "a=fmtp:98 apt=97",
         "a=ice-pwd:0b6b2ba5a2c9e8c8d1fb5bb2f1b2f4b1", "a=ice-ufrag:3f1c2a7d", "a=mid:1",
         "a=msid:{5d1e} {9f1a}", "a=rtcp-fb:120 nack", "a=rtcp-fb:120 nack pli", "a=rtcp-fb:120 ccm fir",
         "a=rtcp-fb:120 goog-remb", "a=rtcp-fb:121 nack", "a=rtcp-fb:121 nack pli", "a=rtcp-fb:121 ccm fir",
         "a=rtcp-fb:126 nack", "a=rtcp-fb:126 nack pli", "a=rtcp-fb:97 nack", "a=rtcp-mux",
         "a=rtpmap:120 VP8/90000", "a=rtpmap:124 rtx/90000", "a=rtpmap:121 VP9/90000",
         "a=rtpmap:125 rtx/90000", "a=rtpmap:126 H264/90000", "a=rtpmap:127 rtx/90000",
         "a=rtpmap:97 H264/90000", "a=rtpmap:98 rtx/90000", "a=setup:actpass", "a=ssrc:3002 cname:{aa}"]
    return l


HOST = "candidate:1467250027 1 udp 2122260223 192.168.1.2 54321 typ host generation 0"
HOST6 = "candidate:2 1 udp 2122262783 2001:db8::2 54322 typ host generation 0"
SRFLX = "candidate:842163049 1 udp 1686052607 203.0.113.5 61234 typ srflx raddr 192.168.1.2 rport 54321 generation 0"
RELAY = "candidate:3 1 udp 41885439 198.51.100.9 3478 typ relay raddr 203.0.113.5 rport 61234 generation 0"
MDNS = "candidate:4 1 udp 2122260223 7c2a9e4f-1d2b-4c3d-9e8f-0a1b2c3d4e5f.local 54323 typ host generation 0"
TCP = "candidate:5 1 tcp 1518280447 192.168.1.2 9 typ host tcptype active generation 0"

cases = {}
cases["01_chrome_audio_video"] = session(1001, ["0", "1"]) + chrome_audio() + chrome_video()
cases["02_chrome_audio_only"] = session(1002, ["0"]) + chrome_audio()
cases["03_chrome_video_only"] = session(1003, ["1"]) + chrome_video()
cases["04_chrome_av_datachannel"] = session(1004, ["0", "1", "2"]) + chrome_audio() + chrome_video() + datachannel()
cases["05_datachannel_only"] = session(1005, ["0"]) + datachannel("0")
cases["06_firefox_offer"] = firefox_offer()
cases["07_chrome_with_candidates"] = session(1007, ["0", "1"]) + chrome_audio(cands=[HOST, SRFLX, RELAY]) + chrome_video(cands=[HOST, SRFLX, RELAY])
cases["08_ipv6_and_mdns_candidates"] = session(1008, ["0"]) + chrome_audio(cands=[HOST6, MDNS, TCP, RELAY])
cases["09_existing_bandwidth"] = session(1009, ["0", "1"]) + chrome_audio(bw=64) + chrome_video(bw=1000)
cases["10_rejected_video"] = session(1010, ["0", "1"]) + chrome_audio() + chrome_video(port=0, direction="inactive")
cases["11_recvonly_audio"] = session(1011, ["0"]) + chrome_audio(direction="recvonly")
cases["12_no_fec_video"] = session(1012, ["0", "1"]) + chrome_audio(with_red=False) + chrome_video(fec=False)
cases["13_answer_minimal"] = ["v=0", "o=- 4611731400430051336 2 IN IP4 127.0.0.1", "s=-", "t=0 0",
                              "a=group:BUNDLE 0", "m=audio 9 UDP/TLS/RTP/SAVPF 0 111", "c=IN IP4 0.0.0.0",
                              "a=mid:0", "a=sendrecv", "a=rtcp-mux", "a=rtpmap:0 PCMU/8000",
                              "a=rtpmap:111 opus/48000/2", "a=fmtp:111 minptime=10;useinbandfec=1"]
cases["14_minimal_two_codec"] = ["v=0", "o=- 1 1 IN IP4 0.0.0.0", "s=-", "t=0 0",
                                 "m=audio 9 RTP/AVP 111 0", "a=rtpmap:111 opus/48000/2", "a=rtpmap:0 PCMU/8000"]
cases["15_static_payloads_no_rtpmap"] = ["v=0", "o=- 2 1 IN IP4 192.0.2.1", "s=call", "c=IN IP4 192.0.2.1",
                                         "t=0 0", "m=audio 49170 RTP/AVP 0 8 18 101", "a=rtpmap:101 telephone-event/8000",
                                         "a=fmtp:101 0-16", "a=ptime:20", "a=sendrecv"]
cases["16_wildcard_rtcp_fb"] = ["v=0", "o=- 3 1 IN IP4 0.0.0.0", "s=-", "t=0 0",
                                "m=video 9 UDP/TLS/RTP/SAVPF 100 101 102", "c=IN IP4 0.0.0.0", "a=mid:v",
                                "a=rtcp-fb:* nack", "a=rtcp-fb:* nack pli", "a=rtcp-fb:* ccm fir",
                                "a=rtpmap:100 VP8/90000", "a=rtpmap:101 H264/90000",
                                "a=fmtp:101 packetization-mode=1;profile-level-id=42e01f",
                                "a=rtpmap:102 ulpfec/90000", "a=sendrecv"]
cases["17_sip_gateway_offer"] = ["v=0", "o=gw 12345 67890 IN IP4 198.51.100.20", "s=SIP Call",
                                 "c=IN IP4 198.51.100.20", "t=0 0", "m=audio 30000 RTP/AVP 8 0 9 101",
                                 "a=rtpmap:8 PCMA/8000", "a=rtpmap:0 PCMU/8000", "a=rtpmap:9 G722/8000",
                                 "a=rtpmap:101 telephone-event/8000", "a=fmtp:101 0-15", "a=ptime:20",
                                 "a=maxptime:150", "a=sendrecv"]
cases["18_two_audio_sections"] = session(1018, ["0", "1"]) + chrome_audio("0") + chrome_audio("1")
cases["19_session_level_bandwidth"] = session(1019, ["0", "1"], extra=["b=AS:2000"]) + chrome_audio() + chrome_video()
cases["20_video_section_info_line"] = ["v=0", "o=- 20 1 IN IP4 0.0.0.0", "s=-", "t=0 0",
                                       "m=video 9 RTP/AVPF 96 97", "i=main camera", "a=mid:0",
                                       "a=rtpmap:96 VP8/90000", "a=rtcp-fb:96 nack", "a=rtcp-fb:96 nack pli",
                                       "a=rtpmap:97 H264/90000", "a=rtcp-fb:97 nack",
                                       "a=fmtp:97 packetization-mode=1", "a=sendonly"]
cases["21_end_of_candidates"] = session(1021, ["0"]) + chrome_audio(cands=[HOST, RELAY]) + ["a=end-of-candidates"]
cases["22_unknown_attributes"] = ["v=0", "o=- 22 1 IN IP4 0.0.0.0", "s=-", "t=0 0", "a=x-custom-session:yes",
                                  "m=audio 9 UDP/TLS/RTP/SAVPF 111 0", "c=IN IP4 0.0.0.0", "a=x-vendor:alpha",
                                  "a=rtpmap:111 opus/48000/2", "a=x-vendor:beta", "a=rtcp-fb:111 transport-cc",
                                  "a=rtcp-fb:111 nack", "a=rtpmap:0 PCMU/8000", "a=x-vendor:gamma",
                                  "a=rtcp-fb:111 nack pli", "a=inactive"]
cases["23_flexfec_video"] = ["v=0", "o=- 23 1 IN IP4 0.0.0.0", "s=-", "t=0 0",
                             "m=video 9 UDP/TLS/RTP/SAVPF 96 97 35 36 37", "c=IN IP4 0.0.0.0", "a=mid:0",
                             "a=sendrecv", "a=rtpmap:96 VP8/90000", "a=rtcp-fb:96 nack",
                             "a=rtpmap:97 rtx/90000", "a=fmtp:97 apt=96", "a=rtpmap:35 flexfec-03/90000",
                             "a=fmtp:35 repair-window=10000000", "a=rtpmap:36 red/90000",
                             "a=rtpmap:37 rtx/90000", "a=fmtp:37 apt=36"]
cases["24_lf_line_endings"] = session(1024, ["0"]) + chrome_audio()
cases["25_uppercase_transport_candidates"] = ["v=0", "o=- 25 1 IN IP4 0.0.0.0", "s=-", "t=0 0",
                                              "m=audio 9 UDP/TLS/RTP/SAVPF 109 0", "c=IN IP4 0.0.0.0",
                                              "a=candidate:0 1 UDP 2122252543 192.168.1.5 49784 typ host",
                                              "a=candidate:1 1 UDP 1686052863 203.0.113.9 49784 typ srflx raddr 192.168.1.5 rport 49784",
                                              "a=rtpmap:109 opus/48000/2", "a=rtpmap:0 PCMU/8000", "a=sendrecv"]
cases["26_h264_no_fmtp"] = ["v=0", "o=- 26 1 IN IP4 0.0.0.0", "s=-", "t=0 0",
                            "m=video 9 UDP/TLS/RTP/SAVPF 96 98", "c=IN IP4 0.0.0.0", "a=mid:0",
                            "a=rtpmap:96 VP8/90000", "a=rtcp-fb:96 nack", "a=rtpmap:98 H264/90000",
                            "a=rtcp-fb:98 nack", "a=rtcp-fb:98 nack pli", "a=sendrecv"]
cases["27_opus_no_fmtp_mono"] = ["v=0", "o=- 27 1 IN IP4 0.0.0.0", "s=-", "t=0 0",
                                 "m=audio 9 UDP/TLS/RTP/SAVPF 0 111", "a=mid:0",
                                 "a=rtpmap:0 PCMU/8000", "a=rtpmap:111 opus/48000/2", "a=sendrecv"]
cases["28_safari_style"] = ["v=0", "o=- 8056233457016352000 2 IN IP4 127.0.0.1", "s=-", "t=0 0",
                            "a=group:BUNDLE 0 1", "a=extmap-allow-mixed", "a=msid-semantic: WMS",
                            "m=audio 9 UDP/TLS/RTP/SAVPF 111 63 103 9 102 0 8 105 13 110 113 126",
                            "c=IN IP4 0.0.0.0", "a=rtcp:9 IN IP4 0.0.0.0", "a=mid:0", "a=recvonly", "a=rtcp-mux",
                            "a=rtpmap:111 opus/48000/2", "a=rtcp-fb:111 transport-cc",
                            "a=fmtp:111 minptime=10;useinbandfec=1", "a=rtpmap:63 red/48000/2", "a=fmtp:63 111/111",
                            "a=rtpmap:103 ISAC/16000", "a=rtpmap:9 G722/8000", "a=rtpmap:102 ILBC/8000",
                            "a=rtpmap:0 PCMU/8000", "a=rtpmap:8 PCMA/8000", "a=rtpmap:105 CN/16000",
                            "a=rtpmap:13 CN/8000", "a=rtpmap:110 telephone-event/48000",
                            "a=rtpmap:113 telephone-event/16000", "a=rtpmap:126 telephone-event/8000",
                            "m=video 9 UDP/TLS/RTP/SAVPF 96 97 98 99 100 101", "c=IN IP4 0.0.0.0",
                            "a=rtcp:9 IN IP4 0.0.0.0", "a=mid:1", "a=recvonly", "a=rtcp-mux", "a=rtcp-rsize",
                            "a=rtpmap:96 H264/90000", "a=rtcp-fb:96 goog-remb", "a=rtcp-fb:96 nack",
                            "a=rtcp-fb:96 nack pli",
                            "a=fmtp:96 level-asymmetry-allowed=1;packetization-mode=1;profile-level-id=640c1f",
                            "a=rtpmap:97 rtx/90000", "a=fmtp:97 apt=96", "a=rtpmap:98 VP8/90000",
                            "a=rtcp-fb:98 nack", "a=rtpmap:99 rtx/90000", "a=fmtp:99 apt=98",
                            "a=rtpmap:100 red/90000", "a=rtpmap:101 ulpfec/90000"]


# ---------------------------------------------------------------- hand rules

def split_sections(lines):
    head, sections = [], []
    for l in lines:
        if l.startswith("m="):
            sections.append([l])
        elif sections:
            sections[-1].append(l)
        else:
            head.append(l)
    return head, sections


def join(head, sections):
    out = list(head)
    for s in sections:
        out += s
    return out


def canon_line(l):
    m = re.match(r"^a=candidate:(\S+) (\d+) (\S+) (.*)$", l)
    if m:
        return f"a=candidate:{m.group(1)} {m.group(2)} {m.group(3).lower()} {m.group(4)}"
    return l


def canonical(lines):
    return [canon_line(l) for l in lines if l.strip()]


def mline_pts(mline):
    parts = mline.split()
    return parts[:3], parts[3:]


def codec_table(section):
    table = {"0": "PCMU", "8": "PCMA", "9": "G722", "18": "G729"}
    for l in section:
        m = re.match(r"^a=rtpmap:(\d+) ([^/]+)/", l)
        if m:
            table[m.group(1)] = m.group(2)
    return table


def prefer(lines, kind, names):
    """Move payloads whose codec is in `names` (ranked) to the front."""
    head, sections = split_sections(lines)
    for s in sections:
        if not s[0].startswith(f"m={kind} "):
            continue
        prefix, pts = mline_pts(s[0])
        table = codec_table(s)
        ranked = []
        for rank, name in enumerate(names):
            ranked += [p for p in pts if table.get(p, "").lower() == name.lower()]
        rest = [p for p in pts if p not in ranked]
        s[0] = " ".join(prefix + ranked + rest)
    return join(head, sections)


def bandwidth(lines, kind, kbps):
    head, sections = split_sections(lines)
    for s in sections:
        if not s[0].startswith(f"m={kind} "):
            continue
        body = [l for l in s[1:] if not l.startswith("b=AS:")]
        pos = None
        for i, l in enumerate(body):
            if l.startswith("c="):
                pos = i + 1
                break
        if pos is None:
            pos = 0
            while pos < len(body) and body[pos].startswith("i="):
                pos += 1
        body.insert(pos, f"b=AS:{kbps}")
        s[1:] = body
    return join(head, sections)


def fmtp_param(lines, codec, key, value):
    head, sections = split_sections(lines)
    for s in sections:
        _, pts = mline_pts(s[0])
        table = codec_table(s)
        for pt in pts:
            if table.get(pt, "").lower() != codec.lower():
                continue
            idx = [i for i, l in enumerate(s) if l.startswith(f"a=fmtp:{pt} ")]
            if idx:
                i = idx[0]
                params = s[i].split(" ", 1)[1].split(";")
                keys = [p.split("=")[0] for p in params]
                if key in keys:
                    params[keys.index(key)] = f"{key}={value}"
                else:
                    params.append(f"{key}={value}")
                s[i] = f"a=fmtp:{pt} " + ";".join(params)
            else:
                last = max(i for i, l in enumerate(s)
                           if re.match(rf"^a=(rtpmap|rtcp-fb|fmtp):{pt} ", l))
                s.insert(last + 1, f"a=fmtp:{pt} {key}={value}")
    return join(head, sections)


def remove_nack(lines):
    return [l for l in lines if not re.match(r"^a=rtcp-fb:\S+ nack( |$)", l)]


def remove_fec(lines):
    head, sections = split_sections(lines)
    for s in sections:
        prefix, pts = mline_pts(s[0])
        table = codec_table(s)
        doomed = {p for p in pts if table.get(p, "").lower() in ("red", "ulpfec", "flexfec-03")}
        if not doomed:
            continue
        for l in s:
            m = re.match(r"^a=fmtp:(\d+) apt=(\d+)$", l)
            if m and table.get(m.group(1), "").lower() == "rtx" and m.group(2) in doomed:
                doomed.add(m.group(1))
        s[0] = " ".join(prefix + [p for p in pts if p not in doomed])
        s[1:] = [l for l in s[1:]
                 if not any(re.match(rf"^a=(rtpmap|fmtp|rtcp-fb):{p} ", l) for p in doomed)]
    return join(head, sections)


def write(name, lines):
    with open(os.path.join(OUT, name), "w", newline="") as f:
        f.write("".join(l + "\r\n" for l in lines))


os.makedirs(OUT, exist_ok=True)
manifest = []
for name, lines in sorted(cases.items()):
    if name == "24_lf_line_endings":
        with open(os.path.join(OUT, name + ".sdp"), "w", newline="") as f:
            f.write("".join(l + "\n" for l in lines))
    else:
        write(name + ".sdp", lines)
    base = canonical(lines)
    write(name + ".expected", base)
    manifest.append({"name": name, "input": name + ".sdp", "rewrite": "roundtrip", "params": {},
                     "expected": name + ".expected"})

rewrites = [
    ("prefer_pcmu", "prefer_codec", {"kind": "audio", "codec": "PCMU"}, lambda l: prefer(l, "audio", ["PCMU"])),
    ("prefer_g711", "prefer_codec", {"kind": "audio", "codec": "G.711"}, lambda l: prefer(l, "audio", ["PCMU", "PCMA"])),
    ("prefer_h264", "prefer_codec", {"kind": "video", "codec": "H264"}, lambda l: prefer(l, "video", ["H264"])),
    ("bw256", "set_receiver_bandwidth", {"kind": "video", "kbps": 256}, lambda l: bandwidth(l, "video", 256)),
    ("stereo0", "set_fmtp_param", {"codec": "opus", "key": "stereo", "value": "0"}, lambda l: fmtp_param(l, "opus", "stereo", "0")),
    ("no_nack", "modify_feedback", {"action": "remove_nack"}, remove_nack),
    ("no_fec", "modify_feedback", {"action": "remove_fec"}, remove_fec),
]
targets = {
    "prefer_pcmu": ["01_chrome_audio_video", "02_chrome_audio_only", "06_firefox_offer", "14_minimal_two_codec",
                    "22_unknown_attributes", "28_safari_style"],
    "prefer_g711": ["04_chrome_av_datachannel", "17_sip_gateway_offer", "15_static_payloads_no_rtpmap"],
    "prefer_h264": ["01_chrome_audio_video", "03_chrome_video_only", "06_firefox_offer", "16_wildcard_rtcp_fb",
                    "28_safari_style"],
    "bw256": ["01_chrome_audio_video", "09_existing_bandwidth", "19_session_level_bandwidth",
              "20_video_section_info_line", "26_h264_no_fmtp"],
    "stereo0": ["01_chrome_audio_video", "06_firefox_offer", "27_opus_no_fmtp_mono", "22_unknown_attributes"],
    "no_nack": ["01_chrome_audio_video", "06_firefox_offer", "16_wildcard_rtcp_fb", "20_video_section_info_line",
                "22_unknown_attributes"],
    "no_fec": ["01_chrome_audio_video", "23_flexfec_video", "16_wildcard_rtcp_fb", "28_safari_style",
               "12_no_fec_video"],
}
for tag, rewrite, params, rule in rewrites:
    for name in targets[tag]:
        out = rule(canonical(cases[name]))
        exp = f"{name}.{tag}.expected"
        write(exp, out)
        manifest.append({"name": f"{name}.{tag}", "input": name + ".sdp", "rewrite": rewrite,
                         "params": params, "expected": exp})

with open(os.path.join(OUT, "manifest.json"), "w") as f:
    json.dump(manifest, f, indent=2)
    f.write("\n")
print(f"{len(cases)} inputs, {len(manifest)} cases")
