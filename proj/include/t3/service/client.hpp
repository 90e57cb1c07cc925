#pragma once

#include "t3/chain/chainfile.hpp"
#include "t3/enclave/session.hpp"
#include "t3/service/wire.hpp"

#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace t3::service {

// Error envelope received from the server, surfaced as an exception.
struct ServiceError : std::runtime_error {
    ErrCode code;
    explicit ServiceError(ErrCode c)
        : std::runtime_error(std::string("server error: ") + errcode_name(c)), code(c) {}
};

// Blocking single-connection client. Not thread safe; use one per thread.
class Client {
public:
    Client() = default;
    ~Client();
    Client(const Client&) = delete;
    Client& operator=(const Client&) = delete;

    // Connects and runs the attestation handshake. The root key must match the
    // server's, or the quote check throws QuoteInvalid.
    void connect(const std::string& host, uint16_t port, const Key256& attest_root);

    bool connected() const { return fd_ >= 0; }
    const Hash256& measurement() const { return measurement_; }

    // One oblivious lookup. sign_seed, when present, adds an Ed25519 signature
    // over (pkh || session nonce); servers in preimage mode ignore it. delta 0
    // sends no override. Throws ServiceError on an error envelope.
    QueryRespBody query(const Hash160& pkh, const Bytes& pubkey,
                        const std::optional<std::array<uint8_t, 32>>& sign_seed = std::nullopt,
                        uint8_t delta = 0);

    void close();

private:
    void send_all(ByteSpan data);
    Bytes recv_envelope(uint8_t& type_out);

    int fd_ = -1;
    bool attested_ = false;
    enclave::Session session_{};
    Hash256 measurement_{};
};

// One line of a key file. pkh is hash160 of the public key.
struct KeyEntry {
    Bytes pubkey;
    std::optional<std::array<uint8_t, 32>> seed; // signing seed, when the file has one
    Hash160 pkh{};
};

// Key file format: one key per line, "pubkey_hex" or "pubkey_hex,seed_hex".
// Blank lines and lines starting with '#' are skipped.
std::vector<KeyEntry> load_keyfile(const std::string& path);

// "host:port" with an optional port (defaults given by the caller).
std::pair<std::string, uint16_t> parse_hostport(const std::string& s, uint16_t default_port);

// Builds a verified header chain from the block files in dir: checks linkage,
// proof of work, and that each body's merkle root matches its header. Stops at
// the first missing height. Throws std::runtime_error on any invalid block.
chain::HeaderChain sync_headers_from_dir(const std::string& dir, std::ostream* log = nullptr);

}  // namespace t3::service
