// t3d: the UTXO service daemon. `init` builds a state directory from a
// block directory; `serve` loads it and answers queries while polling
// the block directory for new blocks.

#include "t3/chain/chainfile.hpp"
#include "t3/chain/tx.hpp"
#include "t3/service/config.hpp"
#include "t3/service/server.hpp"
#include "t3/store/two_tree.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace t3;

namespace {

bool is_pow2(uint32_t v) { return v != 0 && (v & (v - 1)) == 0; }

Key256 attest_root_or_warn() {
    bool defaulted = false;
    Key256 root = service::attest_root_from_env(&defaulted);
    if (defaulted)
        std::cerr << "warning: T3_ATTEST_ROOT is not set; using the all-zero root key.\n"
                     "         Quotes produced under it authenticate nothing.\n";
    return root;
}

int cmd_init(const std::string& chain_dir, const std::string& state_dir,
             const service::ServiceConfig& cfg_in) {
    service::ServiceConfig cfg = cfg_in;
    cfg.chain_dir = chain_dir;
    cfg.state_dir = state_dir;
    if (!is_pow2(cfg.store.n)) {
        std::cerr << "error: --n must be a power of two\n";
        return 1;
    }

    Key256 root = attest_root_or_warn();
    auto store = std::make_unique<store::TwoTreeStore>();
    store->init(cfg.store);

    chain::DirBlockSource src(chain_dir);
    chain::HeaderChain hc;
    uint64_t creates = 0, dropped = 0, spends = 0, unmatched = 0;
    uint32_t height = 0;
    for (;; ++height) {
        auto hex = src.get_block_hex(height);
        if (!hex) break;
        chain::Block blk;
        try {
            blk = chain::parse_block(from_hex(*hex));
        } catch (const std::exception& e) {
            std::cerr << "block " << height << ": " << e.what() << "\n";
            return 1;
        }
        chain::HeaderVerdict v = hc.verify(blk.header);
        if (v != chain::HeaderVerdict::Accept) {
            std::cerr << "block " << height << ": header rejected (" << chain::verdict_name(v)
                      << ")\n";
            return 1;
        }
        if (!chain::verify_block_body(blk)) {
            std::cerr << "block " << height << ": body does not match header merkle root\n";
            return 1;
        }
        hc.append(blk.header);
        chain::UpdateBatch batch = chain::prune(blk, height);
        auto s = store->apply_batch_initial(batch);
        creates += s.creates_applied;
        dropped += s.creates_dropped;
        spends += s.spends_applied;
        unmatched += s.spends_unmatched;
        if ((height + 1) % 50 == 0)
            std::cerr << "  " << (height + 1) << " blocks applied...\n";
    }
    if (hc.empty()) {
        std::cerr << "error: no blocks found in " << chain_dir << "\n";
        return 1;
    }
    store->finish_init();

    fs::create_directories(state_dir);
    const Key256 master = store->master_key();
    store->save(state_dir);
    service::seal_master_key(state_dir, master, root);
    hc.save(fs::path(state_dir) / "headers.dat", service::chain_integrity_key(master));
    service::save_service_config(cfg, state_dir);

    std::cout << "initialized " << state_dir << "\n"
              << "  blocks:    " << hc.size() << " (tip height " << hc.tip_height() << ")\n"
              << "  records:   " << creates << " created, " << spends << " spent";
    if (dropped || unmatched)
        std::cout << " (" << dropped << " dropped at capacity, " << unmatched
                  << " spends unmatched)";
    std::cout << "\n  interval:  " << store->interval() << "\n"
              << "  oram:      n=" << cfg.store.n << " strategy="
              << (cfg.store.strategy == oram::Strategy::CircuitOram ? "circuit" : "path")
              << " records_per_block=" << cfg.store.records_per_block
              << " max_out=" << cfg.store.max_out << "\n";
    return 0;
}

int cmd_serve(const std::string& state_dir, const std::string& listen_override,
              unsigned readers_override, const std::string& chain_override,
              unsigned poll_override, int persist_override) {
    Key256 root = attest_root_or_warn();
    service::ServiceConfig cfg = service::load_service_config(state_dir);
    cfg.state_dir = state_dir;
    if (!listen_override.empty()) cfg.listen = listen_override;
    if (readers_override) cfg.readers = readers_override;
    if (!chain_override.empty()) cfg.chain_dir = chain_override;
    if (poll_override) cfg.poll_ms = poll_override;
    if (persist_override >= 0) cfg.persist_each_sync = persist_override != 0;

    Key256 master = service::unseal_master_key(state_dir, root);
    auto store = store::TwoTreeStore::load(state_dir, master);
    chain::HeaderChain hc =
        chain::HeaderChain::load(fs::path(state_dir) / "headers.dat",
                                 service::chain_integrity_key(master));
    if (cfg.persist_each_sync) store->bind_dir(state_dir, true);

    // Block signals before spawning threads so they all inherit the mask.
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    service::Server server(cfg, std::move(store), std::move(hc), root);
    server.start();
    std::cout << "serving on " << cfg.listen;
    if (server.port() && cfg.listen.ends_with(":0")) std::cout << " (port " << server.port() << ")";
    std::cout << ", interval " << server.store().interval() << ", " << cfg.readers
              << " reader threads\n";
    if (!cfg.chain_dir.empty())
        std::cout << "polling " << cfg.chain_dir.string() << " every " << cfg.poll_ms << " ms\n";
    std::cout.flush();

    int sig = 0;
    sigwait(&set, &sig);
    std::cout << "signal " << sig << ", shutting down\n";
    server.stop();

    server.store().save(state_dir);
    server.header_chain().save(fs::path(state_dir) / "headers.dat",
                               service::chain_integrity_key(master));
    auto st = server.stats();
    std::cout << "served " << st.queries << " queries over " << st.connections << " connections, "
              << st.blocks_ingested << " blocks ingested\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"t3d: oblivious UTXO service daemon"};
    app.require_subcommand(1);

    // init
    std::string chain_dir, state_dir;
    service::ServiceConfig cfg;
    std::string strategy = "circuit";
    auto* init = app.add_subcommand("init", "build a state directory from a block directory");
    init->add_option("--chain", chain_dir, "directory of block_NNNNNN.bin files")->required();
    init->add_option("--state", state_dir, "state directory to create")->required();
    init->add_option("--n", cfg.store.n, "number of storage blocks (power of two)");
    init->add_option("--strategy", strategy, "path | circuit")
        ->check(CLI::IsMember({"path", "circuit"}));
    init->add_option("--z", cfg.store.z, "bucket slots (0 = strategy default)");
    init->add_option("--max-out", cfg.store.max_out, "records returned per block read");
    init->add_option("--delta", cfg.store.delta, "blocks per address");
    init->add_option("--delta-max", cfg.store.delta_max, "upper bound for client-chosen delta");
    init->add_flag("--client-delta", cfg.store.client_delta,
                   "route over delta-max blocks, let clients pick how many to read");
    init->add_option("--records-per-block", cfg.store.records_per_block,
                     "record slots per storage block");
    init->add_option("--seed", cfg.store.seed, "deterministic placement seed (0 = random)");
    init->add_flag("--reject-duplicates", cfg.store.reject_duplicates,
                   "refuse to serve a block twice within one interval");
    init->add_flag("--require-sig", cfg.require_signature,
                   "ownership proofs must carry a signature");
    init->add_option("--listen", cfg.listen, "default listen address for serve");
    init->add_option("--readers", cfg.readers, "default reader thread count");
    init->add_option("--poll-ms", cfg.poll_ms, "block directory polling interval");
    init->add_flag("--persist-each-sync", cfg.persist_each_sync,
                   "write both tree files at every sync");

    // serve
    std::string serve_state, listen_override, chain_override;
    unsigned readers_override = 0, poll_override = 0;
    int persist_override = -1;
    auto* serve = app.add_subcommand("serve", "serve queries from a state directory");
    serve->add_option("--state", serve_state, "state directory")->required();
    serve->add_option("--listen", listen_override, "listen address (host:port, port 0 = ephemeral)");
    serve->add_option("--readers", readers_override, "reader thread count");
    serve->add_option("--chain", chain_override, "block directory to poll");
    serve->add_option("--poll-ms", poll_override, "polling interval in ms");
    serve->add_option("--persist-each-sync", persist_override,
                      "0/1: write both tree files at every sync");

    CLI11_PARSE(app, argc, argv);

    try {
        if (init->parsed()) {
            cfg.store.strategy = strategy == "path" ? oram::Strategy::PathOram
                                                    : oram::Strategy::CircuitOram;
            return cmd_init(chain_dir, state_dir, cfg);
        }
        return cmd_serve(serve_state, listen_override, readers_override, chain_override,
                         poll_override, persist_override);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
