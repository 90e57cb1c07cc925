#pragma once

#include "t3/chain/chainfile.hpp"
#include "t3/service/config.hpp"
#include "t3/store/two_tree.hpp"

#include <atomic>
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <thread>

namespace t3::service {

struct ServerStats {
    uint64_t connections = 0;
    uint64_t queries = 0;
    uint64_t errors_sent = 0;
    uint64_t blocks_ingested = 0;
    uint64_t blocks_rejected = 0;
    uint64_t evictions_drained = 0;
};

// One acceptor thread feeding a bounded pool of reader threads (one
// live connection per reader), plus one ingest/writer thread that owns
// the original tree: it polls the block stub, applies update batches,
// and continuously drains the eviction queue while serving.
class Server {
public:
    Server(ServiceConfig cfg, std::unique_ptr<store::TwoTreeStore> st, chain::HeaderChain hc,
           const Key256& attest_root);
    ~Server();

    void start();
    void stop();

    uint16_t port() const { return port_; }
    store::TwoTreeStore& store() { return *store_; }
    const chain::HeaderChain& header_chain() const { return chain_; }
    ServerStats stats() const;

private:
    void acceptor_loop();
    void reader_loop();
    void ingest_loop();
    void handle_connection(int fd);
    bool ingest_one_block();

    ServiceConfig cfg_;
    std::unique_ptr<store::TwoTreeStore> store_;
    chain::HeaderChain chain_;
    Key256 attest_root_{};

    int listen_fd_ = -1;
    uint16_t port_ = 0;
    std::atomic<bool> stop_{false};

    std::thread acceptor_;
    std::vector<std::thread> readers_;
    std::thread ingest_;

    mutable std::mutex conn_mx_;
    std::condition_variable conn_cv_;
    std::deque<int> pending_conns_;

    mutable std::mutex stats_mx_;
    ServerStats stats_;
};

}  // namespace t3::service
