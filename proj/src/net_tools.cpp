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

#include "rtcshim/net_tools.hpp"

#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <fmt/format.h>

#include "http_client.hpp"
#include "rtcshim/error.hpp"

namespace rtcshim {
namespace {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

std::int64_t steady_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

HttpMessage http_fetch(const HttpMessage& request, int timeout_ms) {
  auto r = detail::http_request(request.method, request.url, request.headers, request.body, timeout_ms);
  using F = detail::HttpResult::Failure;
  if (r.failure == F::kTimeout) throw Error(Errc::kUpstreamTimeout, fmt::format("{} timed out", request.url));
  if (r.failure != F::kNone) throw Error(Errc::kUpstreamConnectFailed, fmt::format("{} unreachable", request.url));
  return HttpMessage{request.method, request.url, r.status, std::move(r.headers), std::move(r.body)};
}

// ---- client ----

// All stream operations run on the client's own io thread; public calls post
// into it and wait on the inbox.
struct WsClient::Impl {
  asio::io_context ioc;
  std::optional<asio::executor_work_guard<asio::io_context::executor_type>> work;
  std::optional<websocket::stream<beast::tcp_stream>> ws;
  std::thread io_thread;
  beast::flat_buffer buf;
  std::deque<WsFrame> outbox;
  bool writing = false;
  bool closing = false;

  mutable std::mutex mu;
  std::condition_variable cv;
  std::deque<WsFrame> inbox;
  bool open = false;
  bool ended = false;
  std::uint16_t close_code = 0;

  void end(std::uint16_t code) {
    std::lock_guard lock(mu);
    close_code = code;
    open = false;
    ended = true;
    cv.notify_all();
  }

  void read() {
    ws->async_read(buf, [this](beast::error_code ec, std::size_t) {
      if (ec) {
        return end(ec == websocket::error::closed ? static_cast<std::uint16_t>(ws->reason().code) : 0);
      }
      {
        std::lock_guard lock(mu);
        inbox.push_back({beast::buffers_to_string(buf.data()), ws->got_binary()});
        cv.notify_all();
      }
      buf.consume(buf.size());
      read();
    });
  }

  void pump() {
    if (writing || outbox.empty()) return;
    writing = true;
    ws->binary(outbox.front().binary);
    ws->async_write(asio::buffer(outbox.front().data), [this](beast::error_code ec, std::size_t) {
      writing = false;
      outbox.pop_front();
      if (ec) {
        outbox.clear();
        return;
      }
      if (closing && outbox.empty()) return start_close();
      pump();
    });
  }

  void start_close() {
    ws->async_close(websocket::close_code::normal, [](beast::error_code) {});
  }
};

WsClient::WsClient() : impl_(std::make_unique<Impl>()) {}

WsClient::~WsClient() {
  try {
    close();
  } catch (...) {
  }
}

void WsClient::connect(const std::string& url, std::chrono::milliseconds timeout) {
  auto parts = detail::split_url(url);
  auto& im = *impl_;
  im.ws.emplace(im.ioc);
  auto& lowest = beast::get_lowest_layer(*im.ws);
  beast::error_code ec;
  tcp::resolver resolver(im.ioc);
  auto results = resolver.resolve(parts.host, std::to_string(parts.port), ec);
  if (ec) throw Error(Errc::kUpstreamConnectFailed, fmt::format("resolve {}: {}", parts.host, ec.message()));
  lowest.expires_after(timeout);
  lowest.connect(results, ec);
  if (ec) {
    throw Error(ec == beast::error::timeout ? Errc::kUpstreamTimeout : Errc::kUpstreamConnectFailed,
                fmt::format("connect {}: {}", url, ec.message()));
  }
  im.ws->handshake(fmt::format("{}:{}", parts.host, parts.port), parts.target, ec);
  if (ec) throw Error(Errc::kUpstreamConnectFailed, fmt::format("handshake {}: {}", url, ec.message()));
  lowest.expires_never();
  {
    std::lock_guard lock(im.mu);
    im.open = true;
    im.ended = false;
  }
  im.work.emplace(asio::make_work_guard(im.ioc));
  im.read();
  im.io_thread = std::thread([&im] { im.ioc.run(); });
}

void WsClient::send(const std::string& data, bool binary) {
  if (!is_open()) throw Error(Errc::kNotOpen, "websocket is not open");
  auto& im = *impl_;
  asio::post(im.ioc, [&im, f = WsFrame{data, binary}]() mutable {
    if (im.closing) return;
    im.outbox.push_back(std::move(f));
    im.pump();
  });
}

std::optional<WsFrame> WsClient::receive(std::chrono::milliseconds timeout) {
  auto& im = *impl_;
  std::unique_lock lock(im.mu);
  im.cv.wait_for(lock, timeout, [&] { return !im.inbox.empty() || im.ended; });
  if (im.inbox.empty()) return std::nullopt;
  auto f = std::move(im.inbox.front());
  im.inbox.pop_front();
  return f;
}

std::optional<std::uint16_t> WsClient::wait_closed(std::chrono::milliseconds timeout) {
  auto& im = *impl_;
  std::unique_lock lock(im.mu);
  if (!im.cv.wait_for(lock, timeout, [&] { return im.ended; })) return std::nullopt;
  return im.close_code;
}

void WsClient::close() {
  auto& im = *impl_;
  if (!im.ws || !im.io_thread.joinable()) return;
  if (is_open()) {
    // Queued frames go out before the close frame.
    asio::post(im.ioc, [&im] {
      if (im.closing) return;
      im.closing = true;
      if (!im.writing) im.start_close();
    });
    std::unique_lock lock(im.mu);
    im.cv.wait_for(lock, std::chrono::seconds(2), [&] { return im.ended; });
  }
  asio::post(im.ioc, [&im] {
    beast::error_code ec;
    beast::get_lowest_layer(*im.ws).socket().close(ec);
  });
  im.work.reset();
  im.io_thread.join();
  im.ws.reset();
}

bool WsClient::is_open() const {
  std::lock_guard lock(impl_->mu);
  return impl_->open;
}

// ---- echo server ----

namespace {

struct EchoState {
  std::int64_t slow_ms;
  std::mutex mu;
  std::vector<EchoServer::Arrival> arrivals;
  std::size_t http_hits = 0;
};

class EchoWs : public std::enable_shared_from_this<EchoWs> {
 public:
  EchoWs(std::shared_ptr<EchoState> st, tcp::socket s, http::request<http::string_body> req)
      : st_(std::move(st)), ws_(std::move(s)), req_(std::move(req)) {}

  void run() {
    silent_ = req_.target() == "/silent";
    ws_.set_option(websocket::stream_base::decorator([proto = std::string(req_[http::field::sec_websocket_protocol])](
                                                         websocket::response_type& r) {
      if (!proto.empty()) r.set(http::field::sec_websocket_protocol, proto.substr(0, proto.find(',')));
    }));
    ws_.async_accept(req_, [self = shared_from_this()](beast::error_code ec) {
      if (!ec) self->read();
    });
  }

 private:
  void read() {
    ws_.async_read(buf_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      auto data = beast::buffers_to_string(self->buf_.data());
      self->buf_.consume(self->buf_.size());
      {
        std::lock_guard lock(self->st_->mu);
        self->st_->arrivals.push_back({data, steady_ms()});
      }
      if (self->silent_) return self->read();
      self->out_ = std::move(data);
      self->ws_.binary(self->ws_.got_binary());
      self->ws_.async_write(asio::buffer(self->out_), [self](beast::error_code ec2, std::size_t) {
        if (!ec2) self->read();
      });
    });
  }

  std::shared_ptr<EchoState> st_;
  websocket::stream<beast::tcp_stream> ws_;
  http::request<http::string_body> req_;
  beast::flat_buffer buf_;
  std::string out_;
  bool silent_ = false;
};

class EchoHttp : public std::enable_shared_from_this<EchoHttp> {
 public:
  EchoHttp(std::shared_ptr<EchoState> st, tcp::socket s) : st_(std::move(st)), stream_(std::move(s)), timer_(stream_.get_executor()) {}

  void read() {
    req_ = {};
    http::async_read(stream_, buf_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (websocket::is_upgrade(self->req_)) {
        std::make_shared<EchoWs>(self->st_, self->stream_.release_socket(), std::move(self->req_))->run();
        return;
      }
      self->handle();
    });
  }

 private:
  void handle() {
    {
      std::lock_guard lock(st_->mu);
      ++st_->http_hits;
    }
    res_ = {};
    res_.version(req_.version());
    res_.result(http::status::ok);
    res_.set(http::field::content_type, "text/plain");
    const auto target = std::string(req_.target());
    if (target.rfind("/echo", 0) == 0) {
      for (const auto& f : req_) res_.insert("x-echo-" + std::string(f.name_string()), f.value());
      res_.body() = req_.body();
    } else if (target.rfind("/csp", 0) == 0) {
      res_.set("Content-Security-Policy", "default-src 'self'");
      res_.set("X-Frame-Options", "DENY");
      res_.body() = "guarded";
    } else if (target.rfind("/slow", 0) == 0) {
      res_.body() = "slow";
      timer_.expires_after(std::chrono::milliseconds(st_->slow_ms));
      timer_.async_wait([self = shared_from_this()](beast::error_code) { self->write(); });
      return;
    } else {
      res_.body() = "ok";
    }
    write();
  }

  void write() {
    res_.keep_alive(req_.keep_alive());
    res_.prepare_payload();
    http::async_write(stream_, res_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (self->res_.keep_alive()) return self->read();
      beast::error_code e;
      self->stream_.socket().shutdown(tcp::socket::shutdown_send, e);
    });
  }

  std::shared_ptr<EchoState> st_;
  beast::tcp_stream stream_;
  asio::steady_timer timer_;
  beast::flat_buffer buf_;
  http::request<http::string_body> req_;
  http::response<http::string_body> res_;
};

}  // namespace

struct EchoServer::Impl {
  std::shared_ptr<EchoState> st;
  asio::io_context ioc;
  std::unique_ptr<tcp::acceptor> acceptor;
  std::thread thread;
  std::uint16_t port = 0;

  void accept() {
    acceptor->async_accept(asio::make_strand(ioc), [this](beast::error_code ec, tcp::socket s) {
      if (ec) return;
      std::make_shared<EchoHttp>(st, std::move(s))->read();
      accept();
    });
  }
};

EchoServer::EchoServer(std::int64_t slow_ms) : impl_(std::make_unique<Impl>()) {
  impl_->st = std::make_shared<EchoState>();
  impl_->st->slow_ms = slow_ms;
}

EchoServer::~EchoServer() { stop(); }

void EchoServer::start(const std::string& host, std::uint16_t port) {
  auto& im = *impl_;
  tcp::endpoint ep(asio::ip::make_address(host), port);
  im.acceptor = std::make_unique<tcp::acceptor>(im.ioc);
  im.acceptor->open(ep.protocol());
  im.acceptor->set_option(asio::socket_base::reuse_address(true));
  im.acceptor->bind(ep);
  im.acceptor->listen();
  im.port = im.acceptor->local_endpoint().port();
  im.accept();
  im.thread = std::thread([&im] { im.ioc.run(); });
}

void EchoServer::stop() {
  auto& im = *impl_;
  if (!im.thread.joinable()) return;
  im.ioc.stop();
  im.thread.join();
}

std::uint16_t EchoServer::port() const { return impl_->port; }

std::vector<EchoServer::Arrival> EchoServer::arrivals() const {
  std::lock_guard lock(impl_->st->mu);
  return impl_->st->arrivals;
}

std::size_t EchoServer::http_hits() const {
  std::lock_guard lock(impl_->st->mu);
  return impl_->st->http_hits;
}

}  // namespace rtcshim
