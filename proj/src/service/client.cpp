#include "t3/service/client.hpp"

#include "t3/chain/tx.hpp"
#include "t3/crypto.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

namespace t3::service {

namespace {

void throw_errno(const char* what) {
    throw std::runtime_error(std::string(what) + ": " + std::strerror(errno));
}

}  // namespace

Client::~Client() { close(); }

void Client::close() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
    attested_ = false;
    session_ = {};
}

void Client::connect(const std::string& host, uint16_t port, const Key256& attest_root) {
    close();

    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    int rc = ::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res);
    if (rc != 0) throw std::runtime_error("resolve " + host + ": " + gai_strerror(rc));

    int fd = -1;
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
        fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0) throw_errno("connect");

    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    timeval tv{};
    tv.tv_sec = 60; // queries park during tree sync; allow for that
    ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    fd_ = fd;

    crypto::X25519KeyPair eph{};
    enclave::ClientHello hello = enclave::make_client_hello(eph);
    send_all(encode_envelope(static_cast<uint8_t>(MsgType::kAttestReq), hello.serialize()));

    uint8_t type = 0;
    Bytes body = recv_envelope(type);
    if (type == static_cast<uint8_t>(MsgType::kError)) {
        ErrCode code = parse_error(body); // pre-attestation errors are plaintext
        close();
        throw ServiceError(code);
    }
    if (type != static_cast<uint8_t>(MsgType::kAttestResp)) {
        close();
        throw std::runtime_error("handshake: unexpected message type");
    }
    enclave::AttestationQuote quote = enclave::AttestationQuote::parse(body);
    session_ = enclave::attest_client(attest_root, hello, eph, quote);
    measurement_ = quote.measurement;
    attested_ = true;
}

QueryRespBody Client::query(const Hash160& pkh, const Bytes& pubkey,
                            const std::optional<std::array<uint8_t, 32>>& sign_seed,
                            uint8_t delta) {
    if (fd_ < 0 || !attested_) throw std::runtime_error("query before connect");

    enclave::OwnershipProof proof;
    proof.pkh = pkh;
    proof.pubkey = pubkey;
    if (sign_seed) {
        Bytes msg = enclave::ownership_message(pkh, session_);
        auto sig = crypto::ed25519_sign(*sign_seed, msg);
        proof.signature.assign(sig.begin(), sig.end());
    }

    Bytes plain = encode_query(QueryBody{delta, proof});
    send_all(encode_envelope(static_cast<uint8_t>(MsgType::kQuery), enclave::seal(session_, plain)));

    uint8_t type = 0;
    Bytes body = recv_envelope(type);
    if (type == static_cast<uint8_t>(MsgType::kError))
        throw ServiceError(parse_error(enclave::unseal(session_, body)));
    if (type != static_cast<uint8_t>(MsgType::kQueryResp))
        throw std::runtime_error("query: unexpected message type");
    return parse_query_resp(enclave::unseal(session_, body));
}

void Client::send_all(ByteSpan data) {
    size_t off = 0;
    while (off < data.size()) {
        ssize_t n = ::send(fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw_errno("send");
        }
        off += static_cast<size_t>(n);
    }
}

Bytes Client::recv_envelope(uint8_t& type_out) {
    auto read_exact = [&](uint8_t* out, size_t len) {
        size_t off = 0;
        while (off < len) {
            ssize_t n = ::recv(fd_, out + off, len - off, 0);
            if (n == 0) throw std::runtime_error("connection closed by server");
            if (n < 0) {
                if (errno == EINTR) continue;
                throw_errno("recv");
            }
            off += static_cast<size_t>(n);
        }
    };
    uint8_t head[5];
    read_exact(head, sizeof head);
    type_out = head[0];
    uint32_t len = get_u32be(head + 1);
    if (len > kMaxEnvelopeBody) throw std::runtime_error("oversized response envelope");
    Bytes body(len);
    if (len) read_exact(body.data(), len);
    return body;
}

std::vector<KeyEntry> load_keyfile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open key file " + path);
    std::vector<KeyEntry> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto comma = line.find(',');
        std::string pub_hex = line.substr(0, comma);
        KeyEntry e;
        e.pubkey = from_hex(pub_hex);
        if (e.pubkey.empty())
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": empty public key");
        if (comma != std::string::npos) {
            Bytes seed = from_hex(line.substr(comma + 1));
            if (seed.size() != 32)
                throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                         ": signing seed must be 32 bytes");
            std::array<uint8_t, 32> s{};
            std::copy(seed.begin(), seed.end(), s.begin());
            e.seed = s;
        }
        e.pkh = crypto::hash160(e.pubkey);
        out.push_back(std::move(e));
    }
    return out;
}

std::pair<std::string, uint16_t> parse_hostport(const std::string& s, uint16_t default_port) {
    auto colon = s.rfind(':');
    if (colon == std::string::npos) return {s, default_port};
    std::string host = s.substr(0, colon);
    std::string port_str = s.substr(colon + 1);
    unsigned long port = std::stoul(port_str);
    if (port == 0 || port > 65535) throw std::runtime_error("bad port in " + s);
    return {host, static_cast<uint16_t>(port)};
}

chain::HeaderChain sync_headers_from_dir(const std::string& dir, std::ostream* log) {
    chain::DirBlockSource src(dir);
    chain::HeaderChain hc;
    for (uint32_t h = 0;; ++h) {
        auto hex = src.get_block_hex(h);
        if (!hex) break;
        chain::Block blk = chain::parse_block(from_hex(*hex));
        chain::HeaderVerdict v = hc.verify(blk.header);
        if (v != chain::HeaderVerdict::Accept)
            throw std::runtime_error("block " + std::to_string(h) + ": " +
                                     chain::verdict_name(v));
        if (!chain::verify_block_body(blk))
            throw std::runtime_error("block " + std::to_string(h) + ": body does not match header");
        hc.append(blk.header);
    }
    if (hc.empty()) throw std::runtime_error("no blocks found in " + dir);
    if (log)
        *log << "verified " << hc.size() << " headers, tip "
             << to_hex(ByteSpan(hc.tip_hash().data(), hc.tip_hash().size())) << "\n";
    return hc;
}

}  // namespace t3::service
