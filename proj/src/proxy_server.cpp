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

// Beast front end for SignalPipeline. Every connection lives on its own
// strand; the upstream HTTP leg runs on a small blocking pool.

#include <chrono>
#include <deque>
#include <thread>

#include <boost/asio.hpp>
#include <boost/asio/ssl.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/ssl.hpp>
#include <boost/beast/websocket.hpp>
#include <boost/beast/websocket/ssl.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "http_client.hpp"
#include "rtcshim/error.hpp"
#include "rtcshim/proxy.hpp"

namespace rtcshim {
namespace {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

using PlainStream = beast::tcp_stream;
using TlsStream = beast::ssl_stream<beast::tcp_stream>;

struct Shared {
  ProxyOptions options;
  std::shared_ptr<SignalPipeline> pipeline;
  asio::thread_pool* blocking = nullptr;
};

std::string remote_of(const tcp::socket& s) {
  boost::system::error_code ec;
  auto ep = s.remote_endpoint(ec);
  if (ec) return "unknown";
  return fmt::format("{}:{}", ep.address().to_string(), ep.port());
}

tcp::socket& raw_socket(PlainStream& s) { return s.socket(); }
tcp::socket& raw_socket(TlsStream& s) { return s.next_layer().socket(); }

// Upstream base with the scheme swapped, e.g. ws:// -> http://.
std::string with_scheme(const std::string& base, const std::string& scheme) {
  auto pos = base.find("://");
  auto rest = pos == std::string::npos ? base : base.substr(pos + 3);
  while (!rest.empty() && rest.back() == '/') rest.pop_back();
  return scheme + "://" + rest;
}

struct Outgoing {
  std::string data;
  bool binary = false;
  std::int64_t release_at = 0;
  std::optional<websocket::close_reason> close;
};

template <typename WS>
struct Leg {
  explicit Leg(WS& s, const asio::any_io_executor& ex) : ws(s), timer(ex) {}
  WS& ws;
  std::deque<Outgoing> queue;
  asio::steady_timer timer;
  bool waiting = false;  // timer armed for the front element
  bool writing = false;  // async_write or async_close in flight
  bool closed = false;   // close frame queued or sent
};

template <typename ClientStream>
class WsSession : public std::enable_shared_from_this<WsSession<ClientStream>> {
 public:
  WsSession(std::shared_ptr<Shared> shared, ClientStream stream, http::request<http::string_body> req)
      : shared_(std::move(shared)),
        client_(std::move(stream)),
        upstream_(raw_socket(client_.next_layer()).get_executor()),
        resolver_(upstream_.get_executor()),
        close_timer_(upstream_.get_executor()),
        poll_timer_(upstream_.get_executor()),
        to_client_(client_, upstream_.get_executor()),
        to_upstream_(upstream_, upstream_.get_executor()),
        req_(std::move(req)) {}

  void run() {
    auto& p = *shared_->pipeline;
    id_ = p.open_session(remote_of(raw_socket(client_.next_layer())),
                         with_scheme(shared_->options.upstream, "ws") + std::string(req_.target()));
    std::string url;
    try {
      url = p.resolve_upstream(id_);
      url_ = detail::split_url(url);
    } catch (const std::exception& e) {
      spdlog::warn("proxy {}: bad upstream url: {}", id_, e.what());
      return fail_upstream();
    }
    if (url_.scheme != "ws" && url_.scheme != "http") {
      spdlog::warn("proxy {}: unsupported upstream scheme {}", id_, url_.scheme);
      return fail_upstream();
    }
    beast::get_lowest_layer(upstream_).expires_after(std::chrono::milliseconds(shared_->options.upstream_timeout_ms));
    resolver_.async_resolve(url_.host, std::to_string(url_.port),
                            beast::bind_front_handler(&WsSession::on_resolve, this->shared_from_this()));
  }

 private:
  void on_resolve(beast::error_code ec, tcp::resolver::results_type results) {
    if (ec) return fail_upstream();
    beast::get_lowest_layer(upstream_).async_connect(
        results, beast::bind_front_handler(&WsSession::on_connect, this->shared_from_this()));
  }

  void on_connect(beast::error_code ec, tcp::resolver::results_type::endpoint_type) {
    if (ec) return fail_upstream();
    beast::get_lowest_layer(upstream_).expires_never();
    upstream_.set_option(websocket::stream_base::timeout{
        std::chrono::milliseconds(shared_->options.upstream_timeout_ms), websocket::stream_base::none(), false});
    const auto protocols = std::string(req_[http::field::sec_websocket_protocol]);
    upstream_.set_option(websocket::stream_base::decorator([protocols](websocket::request_type& r) {
      if (!protocols.empty()) r.set(http::field::sec_websocket_protocol, protocols);
    }));
    upstream_.async_handshake(upstream_res_, fmt::format("{}:{}", url_.host, url_.port), url_.target,
                              beast::bind_front_handler(&WsSession::on_upstream_handshake, this->shared_from_this()));
  }

  void on_upstream_handshake(beast::error_code ec) {
    if (ec) return fail_upstream();
    upstream_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::client));
    const auto chosen = std::string(upstream_res_[http::field::sec_websocket_protocol]);
    client_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    client_.set_option(websocket::stream_base::decorator([chosen](websocket::response_type& r) {
      if (!chosen.empty()) r.set(http::field::sec_websocket_protocol, chosen);
    }));
    client_.async_accept(req_, beast::bind_front_handler(&WsSession::on_client_accept, this->shared_from_this()));
  }

  // Accept the client so it can be told why, then close with a distinct code.
  void fail_upstream() {
    spdlog::info("proxy {}: upstream connect failed", id_);
    upstream_failed_ = true;
    client_.async_accept(req_, beast::bind_front_handler(&WsSession::on_client_accept, this->shared_from_this()));
  }

  void on_client_accept(beast::error_code ec) {
    if (ec) {
      spdlog::debug("proxy {}: client accept failed: {}", id_, ec.message());
      return finish();
    }
    if (upstream_failed_) {
      to_client_.closed = true;
      to_upstream_.closed = true;
      client_.async_close(websocket::close_reason(static_cast<websocket::close_code>(kCloseUpstreamFailed), "upstream unreachable"),
                          [self = this->shared_from_this()](beast::error_code) { self->finish(); });
      return;
    }
    auto& p = *shared_->pipeline;
    if (auto deadline = p.close_deadline(id_)) {
      close_timer_.expires_after(std::chrono::milliseconds(std::max<std::int64_t>(0, *deadline - p.now())));
      close_timer_.async_wait([self = this->shared_from_this()](beast::error_code e) {
        if (!e) self->close_both(websocket::close_reason(websocket::close_code::normal, "close_after_ms"));
      });
    }
    poll();
    read_client();
    read_upstream();
  }

  // Operator close requests are checked between messages and on this tick.
  void poll() {
    poll_timer_.expires_after(std::chrono::milliseconds(50));
    poll_timer_.async_wait([self = this->shared_from_this()](beast::error_code e) {
      if (e || self->done_) return;
      if (self->shared_->pipeline->close_requested(self->id_)) {
        self->close_both(websocket::close_reason(websocket::close_code::normal, "closed by control"));
        return;
      }
      self->poll();
    });
  }

  void read_client() {
    client_.async_read(client_buf_, beast::bind_front_handler(&WsSession::on_client_read, this->shared_from_this()));
  }

  void read_upstream() {
    upstream_.async_read(upstream_buf_,
                         beast::bind_front_handler(&WsSession::on_upstream_read, this->shared_from_this()));
  }

  void on_client_read(beast::error_code ec, std::size_t) {
    if (ec) {
      client_gone_ = true;
      close_leg(to_upstream_, ec == websocket::error::closed ? client_.reason()
                                                             : websocket::close_reason(websocket::close_code::going_away));
      return maybe_finish();
    }
    handle(FlowDirection::kClientToServer, beast::buffers_to_string(client_buf_.data()), client_.got_binary());
    client_buf_.consume(client_buf_.size());
    if (!to_upstream_.closed) read_client();
  }

  void on_upstream_read(beast::error_code ec, std::size_t) {
    if (ec) {
      upstream_gone_ = true;
      close_leg(to_client_, ec == websocket::error::closed
                                ? upstream_.reason()
                                : websocket::close_reason(websocket::close_code::going_away));
      return maybe_finish();
    }
    handle(FlowDirection::kServerToClient, beast::buffers_to_string(upstream_buf_.data()), upstream_.got_binary());
    upstream_buf_.consume(upstream_buf_.size());
    if (!to_client_.closed) read_upstream();
  }

  void handle(FlowDirection dir, std::string data, bool binary) {
    auto& p = *shared_->pipeline;
    if (p.close_requested(id_)) {
      close_both(websocket::close_reason(websocket::close_code::normal, "closed by control"));
      return;
    }
    auto d = p.on_message(id_, dir, SocketMessage{url_string(), std::move(data), binary});
    const bool c2s = dir == FlowDirection::kClientToServer;
    if (d.forward) {
      Outgoing o{std::move(d.forward->data), d.forward->binary, d.release_at_ms, std::nullopt};
      if (c2s) {
        enqueue(to_upstream_, std::move(o));
      } else {
        enqueue(to_client_, std::move(o));
      }
    }
    if (d.reply) {
      Outgoing o{std::move(d.reply->data), d.reply->binary, p.now(), std::nullopt};
      if (c2s) {
        enqueue(to_client_, std::move(o));
      } else {
        enqueue(to_upstream_, std::move(o));
      }
    }
  }

  std::string url_string() const { return fmt::format("{}://{}:{}{}", url_.scheme, url_.host, url_.port, url_.target); }

  template <typename WS>
  void enqueue(Leg<WS>& leg, Outgoing o) {
    if (leg.closed) return;
    leg.queue.push_back(std::move(o));
    pump(leg);
  }

  template <typename WS>
  void pump(Leg<WS>& leg) {
    if (leg.waiting || leg.writing || leg.queue.empty()) return;
    auto& front = leg.queue.front();
    const auto wait = front.release_at - shared_->pipeline->now();
    if (!front.close && wait > 0) {
      leg.waiting = true;
      leg.timer.expires_after(std::chrono::milliseconds(wait));
      leg.timer.async_wait([self = this->shared_from_this(), &leg](beast::error_code) {
        leg.waiting = false;
        if (!leg.queue.empty() && !leg.queue.front().close) {
          leg.queue.front().release_at = 0;
        }
        self->pump(leg);
      });
      return;
    }
    leg.writing = true;
    if (front.close) {
      leg.ws.async_close(*front.close, [self = this->shared_from_this(), &leg](beast::error_code) {
        leg.writing = false;
        leg.queue.clear();
        self->maybe_finish();
      });
      return;
    }
    leg.ws.binary(front.binary);
    leg.ws.async_write(asio::buffer(front.data), [self = this->shared_from_this(), &leg](beast::error_code ec, std::size_t) {
      leg.writing = false;
      if (!leg.queue.empty()) leg.queue.pop_front();
      if (ec) {
        leg.queue.clear();
        leg.closed = true;
        return self->maybe_finish();
      }
      self->pump(leg);
    });
  }

  // Pending delayed messages are discarded; a write already on the wire finishes first.
  template <typename WS>
  void close_leg(Leg<WS>& leg, websocket::close_reason reason) {
    if (leg.closed) return;
    leg.closed = true;
    if (!leg.ws.is_open()) return;
    if (leg.writing) {
      while (leg.queue.size() > 1) leg.queue.pop_back();
    } else {
      leg.queue.clear();
      if (leg.waiting) leg.timer.cancel();
    }
    leg.queue.push_back(Outgoing{{}, false, 0, reason});
    pump(leg);
  }

  void close_both(websocket::close_reason reason) {
    close_leg(to_client_, reason);
    close_leg(to_upstream_, reason);
    maybe_finish();
  }

  void maybe_finish() {
    const bool idle = !to_client_.writing && !to_upstream_.writing;
    if (to_client_.closed && to_upstream_.closed && idle) finish();
  }

  void finish() {
    if (done_) return;
    done_ = true;
    close_timer_.cancel();
    poll_timer_.cancel();
    try {
      shared_->pipeline->close_session(id_);
    } catch (const Error&) {
    }
  }

  std::shared_ptr<Shared> shared_;
  websocket::stream<ClientStream> client_;
  websocket::stream<beast::tcp_stream> upstream_;
  tcp::resolver resolver_;
  asio::steady_timer close_timer_;
  asio::steady_timer poll_timer_;
  Leg<websocket::stream<ClientStream>> to_client_;
  Leg<websocket::stream<beast::tcp_stream>> to_upstream_;
  http::request<http::string_body> req_;
  websocket::response_type upstream_res_;
  beast::flat_buffer client_buf_, upstream_buf_;
  detail::UrlParts url_;
  std::string id_;
  bool upstream_failed_ = false;
  bool client_gone_ = false, upstream_gone_ = false;
  bool done_ = false;
};

HttpMessage to_message(const http::request<http::string_body>& req, const std::string& base) {
  HttpMessage m;
  m.method = std::string(req.method_string());
  m.url = base + std::string(req.target());
  for (const auto& f : req) m.headers.emplace_back(std::string(f.name_string()), std::string(f.value()));
  m.body = req.body();
  return m;
}

http::response<http::string_body> to_response(const HttpMessage& m, unsigned version, bool keep_alive) {
  http::response<http::string_body> res;
  res.version(version);
  res.result(static_cast<unsigned>(m.status ? m.status : 200));
  for (const auto& [k, v] : m.headers) {
    if (beast::iequals(k, "content-length") || beast::iequals(k, "transfer-encoding") ||
        beast::iequals(k, "connection")) {
      continue;
    }
    res.insert(k, v);
  }
  res.body() = m.body;
  res.keep_alive(keep_alive);
  res.prepare_payload();
  return res;
}

template <typename Stream>
class HttpSession : public std::enable_shared_from_this<HttpSession<Stream>> {
 public:
  HttpSession(std::shared_ptr<Shared> shared, Stream stream)
      : shared_(std::move(shared)), stream_(std::move(stream)), delay_(raw_socket(stream_).get_executor()) {}

  void start_tls() {
    if constexpr (std::is_same_v<Stream, TlsStream>) {
      beast::get_lowest_layer(stream_).expires_after(std::chrono::seconds(30));
      stream_.async_handshake(asio::ssl::stream_base::server,
                              [self = this->shared_from_this()](beast::error_code ec) {
                                if (ec) return;
                                self->read();
                              });
    } else {
      read();
    }
  }

  void read() {
    req_ = {};
    beast::get_lowest_layer(stream_).expires_after(std::chrono::seconds(60));
    http::async_read(stream_, buf_, req_, beast::bind_front_handler(&HttpSession::on_read, this->shared_from_this()));
  }

 private:
  void on_read(beast::error_code ec, std::size_t) {
    if (ec) return shutdown();
    if (websocket::is_upgrade(req_)) {
      beast::get_lowest_layer(stream_).expires_never();
      std::make_shared<WsSession<Stream>>(shared_, std::move(stream_), std::move(req_))->run();
      return;
    }
    auto& p = *shared_->pipeline;
    const auto base = with_scheme(shared_->options.upstream, "http");
    id_ = p.open_session(remote_of(raw_socket(stream_)), base + std::string(req_.target()), "http");
    decision_ = p.on_request(id_, to_message(req_, base));
    if (decision_.delay_ms > 0) {
      delay_.expires_after(std::chrono::milliseconds(decision_.delay_ms));
      delay_.async_wait([self = this->shared_from_this()](beast::error_code) { self->proceed(); });
    } else {
      proceed();
    }
  }

  void proceed() {
    auto& p = *shared_->pipeline;
    if (decision_.local_response) {
      p.record_local_response(id_, *decision_.local_response);
      return respond(*decision_.local_response);
    }
    // Blocking upstream call off the io threads; the result comes back on our strand.
    auto self = this->shared_from_this();
    asio::post(*shared_->blocking, [self] {
      auto fwd = self->decision_.forward;
      detail::HttpResult r;
      try {
        r = detail::http_request(fwd.method, fwd.url, fwd.headers, fwd.body,
                                 static_cast<int>(self->shared_->options.upstream_timeout_ms));
      } catch (const std::exception& e) {
        r.failure = detail::HttpResult::Failure::kOther;
        r.body = e.what();
      }
      asio::post(raw_socket(self->stream_).get_executor(), [self, r = std::move(r)] { self->on_upstream(r); });
    });
  }

  void on_upstream(const detail::HttpResult& r) {
    auto& p = *shared_->pipeline;
    using F = detail::HttpResult::Failure;
    if (r.failure != F::kNone) {
      const int status = r.failure == F::kTimeout ? 504 : 502;
      HttpMessage local{decision_.forward.method, decision_.forward.url, status, {{"Content-Type", "text/plain"}},
                        status == 504 ? "upstream timeout\n" : "upstream unreachable\n"};
      p.record_local_response(id_, local);
      return respond(local);
    }
    HttpMessage resp{decision_.forward.method, decision_.forward.url, r.status, r.headers, r.body};
    respond(p.on_response(id_, std::move(resp)));
  }

  void respond(const HttpMessage& m) {
    try {
      shared_->pipeline->close_session(id_);
    } catch (const Error&) {
    }
    res_ = to_response(m, req_.version(), req_.keep_alive());
    http::async_write(stream_, res_, [self = this->shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec || !self->res_.keep_alive()) return self->shutdown();
      self->read();
    });
  }

  void shutdown() {
    beast::error_code ec;
    if constexpr (std::is_same_v<Stream, TlsStream>) {
      beast::get_lowest_layer(stream_).socket().shutdown(tcp::socket::shutdown_send, ec);
    } else {
      stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
    }
  }

  std::shared_ptr<Shared> shared_;
  Stream stream_;
  asio::steady_timer delay_;
  beast::flat_buffer buf_;
  http::request<http::string_body> req_;
  http::response<http::string_body> res_;
  RequestDecision decision_;
  std::string id_;
};

}  // namespace

struct ProxyServer::Impl {
  std::shared_ptr<Shared> shared;
  asio::io_context ioc;
  std::optional<asio::ssl::context> tls;
  std::unique_ptr<tcp::acceptor> acceptor;
  std::unique_ptr<asio::thread_pool> blocking;
  std::vector<std::thread> threads;
  std::optional<asio::executor_work_guard<asio::io_context::executor_type>> work;
  std::uint16_t port = 0;

  void accept() {
    acceptor->async_accept(asio::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) {
        if (ec != asio::error::operation_aborted) accept();
        return;
      }
      socket.set_option(tcp::no_delay(true), ec);
      if (tls) {
        std::make_shared<HttpSession<TlsStream>>(shared, TlsStream(std::move(socket), *tls))->start_tls();
      } else {
        std::make_shared<HttpSession<PlainStream>>(shared, PlainStream(std::move(socket)))->start_tls();
      }
      accept();
    });
  }
};

ProxyServer::ProxyServer(ProxyOptions options, std::shared_ptr<SignalPipeline> pipeline) : impl_(std::make_unique<Impl>()) {
  impl_->shared = std::make_shared<Shared>(Shared{std::move(options), std::move(pipeline), nullptr});
}

ProxyServer::~ProxyServer() { stop(); }

void ProxyServer::start() {
  auto& im = *impl_;
  const auto& o = im.shared->options;
  if (o.upstream.empty()) throw Error(Errc::kInvalidConfig, "proxy upstream is not set");
  if (o.tls_cert_file && o.tls_key_file) {
    im.tls.emplace(asio::ssl::context::tls_server);
    try {
      im.tls->use_certificate_chain_file(*o.tls_cert_file);
      im.tls->use_private_key_file(*o.tls_key_file, asio::ssl::context::pem);
    } catch (const std::exception& e) {
      throw Error(Errc::kInvalidConfig, fmt::format("tls: {}", e.what()));
    }
  }
  beast::error_code ec;
  auto addr = asio::ip::make_address(o.listen_host, ec);
  if (ec) throw Error(Errc::kInvalidConfig, fmt::format("bad listen address {}", o.listen_host));
  im.acceptor = std::make_unique<tcp::acceptor>(asio::make_strand(im.ioc));
  tcp::endpoint ep(addr, o.listen_port);
  im.acceptor->open(ep.protocol(), ec);
  if (!ec) im.acceptor->set_option(asio::socket_base::reuse_address(true), ec);
  if (!ec) im.acceptor->bind(ep, ec);
  if (!ec) im.acceptor->listen(asio::socket_base::max_listen_connections, ec);
  if (ec) throw Error(Errc::kInternal, fmt::format("proxy listen on {}:{}: {}", o.listen_host, o.listen_port, ec.message()));
  im.port = im.acceptor->local_endpoint().port();
  im.blocking = std::make_unique<asio::thread_pool>(4);
  im.shared->blocking = im.blocking.get();
  im.work.emplace(asio::make_work_guard(im.ioc));
  im.accept();
  for (int i = 0; i < o.threads; ++i) im.threads.emplace_back([&im] { im.ioc.run(); });
  spdlog::info("proxy listening on {}:{} -> {}", o.listen_host, im.port, o.upstream);
}

void ProxyServer::stop() {
  auto& im = *impl_;
  if (im.threads.empty()) return;
  asio::post(im.acceptor->get_executor(), [&im] {
    beast::error_code ec;
    im.acceptor->close(ec);
  });
  im.work.reset();
  im.ioc.stop();
  for (auto& t : im.threads) t.join();
  im.threads.clear();
  if (im.blocking) im.blocking->join();
}

std::uint16_t ProxyServer::port() const { return impl_->port; }

}  // namespace rtcshim
