#include "t3/service/server.hpp"

#include "t3/chain/merkle.hpp"
#include "t3/service/wire.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstring>

namespace t3::service {

namespace {

// Reads exactly n bytes, polling so shutdown is never stuck behind a
// blocking recv. false = peer closed or server stopping.
bool read_exact(int fd, uint8_t* buf, size_t n, const std::atomic<bool>& stop) {
    size_t got = 0;
    while (got < n) {
        if (stop.load(std::memory_order_relaxed)) return false;
        pollfd p{fd, POLLIN, 0};
        int pr = ::poll(&p, 1, 200);
        if (pr < 0) {
            if (errno == EINTR) continue;
            return false;
        }
        if (pr == 0) continue;
        ssize_t r = ::recv(fd, buf + got, n - got, 0);
        if (r == 0) return false;
        if (r < 0) {
            if (errno == EINTR || errno == EAGAIN) continue;
            return false;
        }
        got += static_cast<size_t>(r);
    }
    return true;
}

bool send_all(int fd, ByteSpan data) {
    size_t sent = 0;
    while (sent < data.size()) {
        ssize_t r = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
        if (r < 0) {
            if (errno == EINTR) continue;
            return false;
        }
        sent += static_cast<size_t>(r);
    }
    return true;
}

std::pair<std::string, uint16_t> split_listen(const std::string& addr) {
    auto colon = addr.rfind(':');
    if (colon == std::string::npos) throw std::runtime_error("listen address needs host:port");
    return {addr.substr(0, colon), static_cast<uint16_t>(std::stoul(addr.substr(colon + 1)))};
}

}  // namespace

Server::Server(ServiceConfig cfg, std::unique_ptr<store::TwoTreeStore> st, chain::HeaderChain hc,
               const Key256& attest_root)
    : cfg_(std::move(cfg)), store_(std::move(st)), chain_(std::move(hc)),
      attest_root_(attest_root) {}

Server::~Server() { stop(); }

void Server::start() {
    auto [host, port] = split_listen(cfg_.listen);
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw std::runtime_error("socket() failed");
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &sa.sin_addr) != 1)
        throw std::runtime_error("bad listen host " + host);
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) < 0)
        throw std::runtime_error("bind failed on " + cfg_.listen);
    if (::listen(listen_fd_, 64) < 0) throw std::runtime_error("listen failed");
    socklen_t slen = sizeof(sa);
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&sa), &slen);
    port_ = ntohs(sa.sin_port);

    stop_.store(false);
    acceptor_ = std::thread([this] { acceptor_loop(); });
    for (unsigned i = 0; i < cfg_.readers; ++i)
        readers_.emplace_back([this] { reader_loop(); });
    ingest_ = std::thread([this] { ingest_loop(); });
}

void Server::stop() {
    bool was = stop_.exchange(true);
    if (was) return;
    if (listen_fd_ >= 0) {
        ::shutdown(listen_fd_, SHUT_RDWR);
        ::close(listen_fd_);
        listen_fd_ = -1;
    }
    conn_cv_.notify_all();
    if (acceptor_.joinable()) acceptor_.join();
    for (auto& t : readers_)
        if (t.joinable()) t.join();
    if (ingest_.joinable()) ingest_.join();
    std::lock_guard lk(conn_mx_);
    for (int fd : pending_conns_) ::close(fd);
    pending_conns_.clear();
}

ServerStats Server::stats() const {
    std::lock_guard lk(stats_mx_);
    return stats_;
}

void Server::acceptor_loop() {
    while (!stop_.load()) {
        pollfd p{listen_fd_, POLLIN, 0};
        int pr = ::poll(&p, 1, 200);
        if (pr <= 0) continue;
        int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) continue;
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
        {
            std::lock_guard lk(conn_mx_);
            pending_conns_.push_back(fd);
        }
        {
            std::lock_guard lk(stats_mx_);
            ++stats_.connections;
        }
        conn_cv_.notify_one();
    }
}

void Server::reader_loop() {
    for (;;) {
        int fd = -1;
        {
            std::unique_lock lk(conn_mx_);
            conn_cv_.wait(lk, [&] { return stop_.load() || !pending_conns_.empty(); });
            if (stop_.load()) return;
            fd = pending_conns_.front();
            pending_conns_.pop_front();
        }
        handle_connection(fd);
        ::close(fd);
    }
}

void Server::handle_connection(int fd) {
    enclave::Session session;
    bool attested = false;

    auto send_env = [&](uint8_t type, ByteSpan body) {
        return send_all(fd, encode_envelope(type, body));
    };
    auto send_error = [&](ErrCode code) {
        {
            std::lock_guard lk(stats_mx_);
            ++stats_.errors_sent;
        }
        Bytes body = encode_error(code);
        if (attested) body = enclave::seal(session, body);
        return send_env(kError, body);
    };

    for (;;) {
        uint8_t head[5];
        if (!read_exact(fd, head, 5, stop_)) return;
        uint32_t len = get_u32be(head + 1);
        if (len > kMaxEnvelopeBody) {
            send_error(ErrCode::BadEncoding);
            return;  // framing is unrecoverable past a bogus length
        }
        Bytes body(len);
        if (!read_exact(fd, body.data(), len, stop_)) return;
        uint8_t type = head[0];

        try {
            switch (type) {
                case kAttestReq: {
                    auto hello = enclave::ClientHello::parse(body);
                    enclave::Session fresh;
                    auto quote = enclave::attest_server(attest_root_, hello, fresh);
                    session = fresh;
                    attested = true;
                    if (!send_env(kAttestResp, quote.serialize())) return;
                    break;
                }
                case kQuery: {
                    if (!attested) {
                        if (!send_error(ErrCode::AuthFail)) return;
                        break;
                    }
                    Bytes plain;
                    try {
                        plain = enclave::unseal(session, body);
                    } catch (const enclave::ReplayDetected&) {
                        if (!send_error(ErrCode::ReplayDetected)) return;
                        break;
                    } catch (const enclave::EnclaveError&) {
                        if (!send_error(ErrCode::AuthFail)) return;
                        break;
                    }
                    QueryBody q = parse_query(plain);
                    if (!enclave::verify_ownership(q.proof, q.proof.pkh, session,
                                                   cfg_.require_signature)) {
                        if (!send_error(ErrCode::BadProof)) return;
                        break;
                    }
                    store::ReadResult rr;
                    try {
                        rr = store_->serve_read(q.proof.pkh, q.delta);
                    } catch (const store::Unavailable&) {
                        if (!send_error(ErrCode::Unavailable)) return;
                        break;
                    } catch (const store::DuplicateRead&) {
                        if (!send_error(ErrCode::DuplicateRead)) return;
                        break;
                    } catch (const std::invalid_argument&) {
                        if (!send_error(ErrCode::BadEncoding)) return;
                        break;
                    }
                    QueryRespBody resp;
                    resp.interval = rr.interval;
                    resp.records = std::move(rr.records);
                    Bytes sealed = enclave::seal(session, encode_query_resp(resp));
                    {
                        // Counted before the send so the total is already
                        // visible to a client holding the response.
                        std::lock_guard lk(stats_mx_);
                        ++stats_.queries;
                    }
                    if (!send_env(kQueryResp, sealed)) return;
                    break;
                }
                default:
                    if (!send_error(ErrCode::BadEncoding)) return;
                    break;
            }
        } catch (const std::exception&) {
            // Parse failures and similar per-frame problems: report and
            // keep the connection; the framing itself is still intact.
            if (!send_error(ErrCode::BadEncoding)) return;
        }
    }
}

bool Server::ingest_one_block() {
    chain::DirBlockSource source(cfg_.chain_dir);
    uint32_t next = static_cast<uint32_t>(store_->interval());
    auto hex = source.get_block_hex(next);
    if (!hex) return false;
    chain::Block blk;
    try {
        Bytes raw = from_hex(*hex);
        blk = chain::parse_block(raw);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "[ingest] block %u undecodable: %s\n", next, e.what());
        std::lock_guard lk(stats_mx_);
        ++stats_.blocks_rejected;
        return false;
    }
    auto verdict = chain_.verify(blk.header);
    if (verdict != chain::HeaderVerdict::Accept) {
        std::fprintf(stderr, "[ingest] block %u header rejected: %s\n", next,
                     chain::verdict_name(verdict));
        std::lock_guard lk(stats_mx_);
        ++stats_.blocks_rejected;
        return false;
    }
    if (!chain::verify_block_body(blk)) {
        std::fprintf(stderr, "[ingest] block %u body does not match merkle root\n", next);
        std::lock_guard lk(stats_mx_);
        ++stats_.blocks_rejected;
        return false;
    }
    chain_.append(blk.header);
    auto batch = chain::prune(blk, next);
    auto summary = store_->apply_block(batch);
    if (!cfg_.state_dir.empty())
        chain_.save(cfg_.state_dir / "headers.dat", chain_integrity_key(store_->master_key()));
    {
        std::lock_guard lk(stats_mx_);
        ++stats_.blocks_ingested;
        stats_.evictions_drained += summary.evictions_drained;
    }
    std::fprintf(stderr,
                 "[ingest] block %u applied: %llu spends, %llu creates, %llu dropped, "
                 "interval %llu\n",
                 next, static_cast<unsigned long long>(summary.spends_applied),
                 static_cast<unsigned long long>(summary.creates_applied),
                 static_cast<unsigned long long>(summary.creates_dropped),
                 static_cast<unsigned long long>(summary.interval));
    return true;
}

void Server::ingest_loop() {
    auto last_poll = std::chrono::steady_clock::now() - std::chrono::milliseconds(cfg_.poll_ms);
    while (!stop_.load()) {
        bool advanced = false;
        auto now = std::chrono::steady_clock::now();
        if (!cfg_.chain_dir.empty() &&
            now - last_poll >= std::chrono::milliseconds(cfg_.poll_ms)) {
            while (!stop_.load() && ingest_one_block()) advanced = true;
            last_poll = std::chrono::steady_clock::now();
        }
        // Continuous eviction drain keeps the sync-time backlog short.
        uint64_t drained = store_->drain_evictions(64);
        if (drained) {
            std::lock_guard lk(stats_mx_);
            stats_.evictions_drained += drained;
        }
        if (!advanced && !drained)
            std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
}

}  // namespace t3::service
