// t3: SPV-style client. Queries the daemon over the sealed channel and
// maintains a locally verified header chain.

#include "t3/chain/tx.hpp"
#include "t3/service/client.hpp"
#include "t3/service/config.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>

using namespace t3;

namespace {

Hash160 parse_pkh(const std::string& hex) {
    Bytes raw = from_hex(hex);
    if (raw.size() != 20) throw std::runtime_error("address hash must be 40 hex chars: " + hex);
    Hash160 h{};
    std::copy(raw.begin(), raw.end(), h.begin());
    return h;
}

int cmd_query(const std::string& server, const std::string& keyfile,
              const std::vector<std::string>& pkh_args, unsigned delta, bool json_out,
              bool verbose) {
    auto keys = service::load_keyfile(keyfile);
    if (keys.empty()) {
        std::cerr << "error: no keys in " << keyfile << "\n";
        return 1;
    }

    // Resolve which addresses to query: explicit arguments, or every
    // key in the file.
    std::vector<const service::KeyEntry*> targets;
    if (pkh_args.empty()) {
        for (auto& k : keys) targets.push_back(&k);
    } else {
        for (auto& arg : pkh_args) {
            Hash160 want = parse_pkh(arg);
            const service::KeyEntry* found = nullptr;
            for (auto& k : keys)
                if (k.pkh == want) {
                    found = &k;
                    break;
                }
            if (!found) {
                std::cerr << "error: no key in " << keyfile << " for " << arg << "\n";
                return 1;
            }
            targets.push_back(found);
        }
    }

    auto [host, port] = service::parse_hostport(server, 7733);
    // Attestation root comes from the same env variable the daemon uses.
    bool root_defaulted = false;
    Key256 root = service::attest_root_from_env(&root_defaulted);
    if (root_defaulted)
        std::cerr << "warning: T3_ATTEST_ROOT is not set; the quote check uses the all-zero "
                     "root and authenticates nothing\n";

    service::Client cli;
    cli.connect(host, port, root);
    if (verbose) {
        auto& m = cli.measurement();
        std::cerr << "attested, measurement " << to_hex(ByteSpan(m.data(), m.size())) << "\n";
    }

    nlohmann::json jroot;
    uint64_t interval = 0;
    int rc = 0;
    for (auto* k : targets) {
        std::string pkh_hex = to_hex(ByteSpan(k->pkh.data(), k->pkh.size()));
        try {
            auto resp = cli.query(k->pkh, k->pubkey, k->seed,
                                  static_cast<uint8_t>(delta));
            interval = resp.interval;
            nlohmann::json jrecs = nlohmann::json::array();
            for (auto& r : resp.records) {
                if (r.is_dummy()) continue;
                if (json_out) {
                    jrecs.push_back({{"txid", chain::txid_hex(r.txid)},
                                     {"vout", r.vout},
                                     {"amount", r.amount},
                                     {"height", r.height}});
                } else {
                    std::cout << pkh_hex << "\t" << chain::txid_hex(r.txid) << "\t" << r.vout
                              << "\t" << r.amount << "\t" << r.height << "\n";
                }
            }
            if (json_out) jroot["results"][pkh_hex] = std::move(jrecs);
        } catch (const service::ServiceError& e) {
            std::cerr << "error: " << pkh_hex << ": " << e.what() << "\n";
            rc = 1;
        }
    }
    if (json_out) {
        jroot["interval"] = interval;
        std::cout << jroot.dump(2) << "\n";
    } else if (verbose) {
        std::cerr << "interval " << interval << "\n";
    }
    return rc;
}

int cmd_headers_sync(const std::string& chain_dir, const std::string& out_file) {
    chain::HeaderChain hc = service::sync_headers_from_dir(chain_dir, &std::cerr);
    // Local cache file; the key only guards against corruption, the
    // real verification happened during the sync above.
    Key256 local = crypto::hmac_sha256(
        ByteSpan(reinterpret_cast<const uint8_t*>("t3-local-headers"), 16), ByteSpan{});
    hc.save(out_file, local);
    std::cout << "wrote " << hc.size() << " headers to " << out_file << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"t3: oblivious UTXO query client"};
    app.require_subcommand(1);

    std::string server = "127.0.0.1:7733", keyfile;
    std::vector<std::string> pkh_args;
    unsigned delta = 0;
    bool json_out = false, verbose = false;
    auto* query = app.add_subcommand("query", "look up the UTXOs of owned addresses");
    query->add_option("--server", server, "daemon address (host:port)");
    query->add_option("--keys", keyfile, "key file: pubkey_hex[,seed_hex] per line")->required();
    query->add_option("pkh", pkh_args, "address hashes to query (default: all keys in the file)");
    query->add_option("--delta", delta, "blocks to fetch per address (0 = server default)");
    query->add_flag("--json", json_out, "JSON output");
    query->add_flag("-v,--verbose", verbose, "print attestation and interval details");

    std::string chain_dir, out_file = "headers.local";
    auto* hsync = app.add_subcommand("headers-sync", "verify a block directory's headers");
    hsync->add_option("--chain", chain_dir, "directory of block_NNNNNN.bin files")->required();
    hsync->add_option("--out", out_file, "local header chain file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (query->parsed()) return cmd_query(server, keyfile, pkh_args, delta, json_out, verbose);
        return cmd_headers_sync(chain_dir, out_file);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
