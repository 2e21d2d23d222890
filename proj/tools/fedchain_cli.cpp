#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "fedchain/blobstore.hpp"
#include "fedchain/crypto.hpp"
#include "fedchain/dataset.hpp"
#include "fedchain/errors.hpp"
#include "fedchain/ledger.hpp"
#include "fedchain/model.hpp"
#include "fedchain/orchestrator.hpp"
#include "fedchain/synth.hpp"

namespace {

using namespace fedchain;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitRunAborted = 3;

Address parse_address_arg(const std::string& arg) {
    if (arg == "monitor") return monitor_address();
    if (arg == "treasury") return treasury_address();
    if (arg.starts_with("worker-")) {
        return worker_address(std::stoi(arg.substr(7)));
    }
    return Address::parse(arg);
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw NotFoundError("cannot open " + path.string());
    }
    nlohmann::json doc;
    in >> doc;
    return doc;
}

ChainDocument load_chain_file(const std::filesystem::path& path) {
    return import_chain(read_json_file(path));
}

std::pair<Dataset, Dataset> load_subset(const std::filesystem::path& dir,
                                        const std::string& subset, int cap) {
    auto [train, test] = load_cmapss(dir / ("train_" + subset + ".txt"),
                                     dir / ("test_" + subset + ".txt"),
                                     dir / ("RUL_" + subset + ".txt"));
    compute_rul_labels(train, cap);
    compute_rul_labels(test, cap);
    return {std::move(train), std::move(test)};
}

nlohmann::json dataset_to_json(const Dataset& ds) {
    nlohmann::json units = nlohmann::json::array();
    for (const UnitSeries& unit : ds.units) {
        units.push_back({{"unit_id", unit.unit_id},
                         {"cycles", unit.cycles},
                         {"rul", unit.rul},
                         {"final_rul", unit.final_rul},
                         {"features", unit.features}});
    }
    return units;
}

void write_prediction_csvs(const std::filesystem::path& dir, const Dataset& test,
                           const ModelWeights& weights, double cap) {
    std::filesystem::create_directories(dir);
    for (const UnitSeries& unit : test.units) {
        const std::vector<double> predicted = predict(weights, unit.features, cap);
        char name[32];
        std::snprintf(name, sizeof name, "unit_%04d.csv", unit.unit_id);
        std::ofstream out(dir / name, std::ios::trunc);
        out << "unit,cycle,actual_rul,predicted_rul\n";
        for (std::size_t i = 0; i < unit.cycles.size(); ++i) {
            char row[128];
            std::snprintf(row, sizeof row, "%d,%d,%.10f,%.10f\n", unit.unit_id,
                          unit.cycles[i], unit.rul[i], predicted[i]);
            out << row;
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fedchain: blockchain-anchored federated RUL prognostics simulator"};
    app.require_subcommand(1);

    // data
    auto* data = app.add_subcommand("data", "dataset utilities");
    data->require_subcommand(1);
    std::string subset = "FD001";
    std::filesystem::path data_dir = ".";
    std::uint64_t synth_seed = 1;
    int cap = 125;

    auto* data_synth = data->add_subcommand("synth", "write a synthetic CMAPSS-format fixture");
    data_synth->add_option("--subset", subset, "FD001..FD004");
    data_synth->add_option("--dir", data_dir, "output directory")->required();
    data_synth->add_option("--seed", synth_seed, "generator seed");

    std::filesystem::path cache_out = "cmapss_cache.json";
    auto* data_ingest = data->add_subcommand("ingest", "validate, label, normalize and cache");
    data_ingest->add_option("--subset", subset, "FD001..FD004");
    data_ingest->add_option("--dir", data_dir, "directory with the raw text files")->required();
    data_ingest->add_option("--out", cache_out, "cache file to write");
    data_ingest->add_option("--cap", cap, "RUL label cap");

    auto* data_stats = data->add_subcommand("stats", "print per-feature moments");
    data_stats->add_option("--subset", subset, "FD001..FD004");
    data_stats->add_option("--dir", data_dir, "directory with the raw text files")->required();
    data_stats->add_option("--cap", cap, "RUL label cap");

    // keys
    auto* keys = app.add_subcommand("keys", "RSA key utilities");
    keys->require_subcommand(1);
    unsigned key_bits = 1024;
    std::uint64_t key_seed = 1;
    std::filesystem::path key_dir = ".";
    auto* keys_generate = keys->add_subcommand("generate", "generate a keypair");
    keys_generate->add_option("--bits", key_bits, "modulus size (even, >= 512)");
    keys_generate->add_option("--seed", key_seed, "deterministic generator seed");
    keys_generate->add_option("--out-dir", key_dir, "directory for public.key/private.key");

    // run
    auto* run_cmd = app.add_subcommand("run", "run a full experiment");
    std::filesystem::path config_path;
    run_cmd->add_option("--config", config_path, "flat key = value config file")->required();
    std::optional<std::uint64_t> seed_override;
    std::optional<std::string> output_override;
    std::optional<std::string> data_dir_override;
    bool mine_per_upload = false;
    run_cmd->add_option("--seed", seed_override, "override the config seed");
    run_cmd->add_option("--output-dir", output_override, "override the output directory");
    run_cmd->add_option("--data-dir", data_dir_override, "override the data directory");
    run_cmd->add_flag("--mine-per-upload", mine_per_upload,
                      "mine a block after every upload instead of batching per round");

    // chain
    auto* chain = app.add_subcommand("chain", "inspect or validate a chain export");
    chain->require_subcommand(1);
    std::filesystem::path chain_path;
    std::optional<std::uint64_t> height_filter;
    auto* chain_inspect = chain->add_subcommand("inspect", "pretty-print blocks");
    chain_inspect->add_option("--chain", chain_path, "chain export JSON")->required();
    chain_inspect->add_option("--height", height_filter, "only this height");
    auto* chain_validate = chain->add_subcommand("validate", "full validation");
    chain_validate->add_option("--chain", chain_path, "chain export JSON")->required();

    // contract
    auto* contract = app.add_subcommand("contract", "query replayed contract state");
    contract->require_subcommand(1);
    std::string address_arg;
    auto* contract_balance = contract->add_subcommand("balance", "token balance of an address");
    contract_balance->add_option("address", address_arg, "hex or role label")->required();
    contract_balance->add_option("--chain", chain_path, "chain export JSON")->required();
    auto* contract_uploads = contract->add_subcommand("uploads", "stored model hashes");
    contract_uploads->add_option("address", address_arg, "hex or role label")->required();
    contract_uploads->add_option("--chain", chain_path, "chain export JSON")->required();
    auto* contract_history = contract->add_subcommand("history", "published global models");
    contract_history->add_option("--chain", chain_path, "chain export JSON")->required();

    // model
    auto* model = app.add_subcommand("model", "evaluate stored weights");
    model->require_subcommand(1);
    std::string weights_cid;
    std::filesystem::path store_dir;
    std::filesystem::path weights_file;
    std::filesystem::path eval_out;
    auto* model_eval = model->add_subcommand("eval", "RMSE of a weight blob on a subset");
    model_eval->add_option("--weights", weights_cid, "content hash (cid:...)");
    model_eval->add_option("--weights-file", weights_file, "weight blob file");
    model_eval->add_option("--store", store_dir, "blob store directory (for --weights)");
    model_eval->add_option("--subset", subset, "FD001..FD004");
    model_eval->add_option("--dir", data_dir, "directory with the raw text files")->required();
    model_eval->add_option("--cap", cap, "RUL label cap");
    model_eval->add_option("--out", eval_out, "directory for per-unit prediction CSVs");

    // report
    auto* report_cmd = app.add_subcommand("report", "summarize a completed run directory");
    std::filesystem::path run_dir;
    report_cmd->add_option("--run", run_dir, "run output directory")->required();

    // blob
    auto* blob = app.add_subcommand("blob", "content-addressed store utilities");
    blob->require_subcommand(1);
    std::filesystem::path blob_file;
    std::string blob_cid;
    std::filesystem::path blob_out;
    auto* blob_put = blob->add_subcommand("put", "store a file, print its cid");
    blob_put->add_option("file", blob_file, "payload file")->required();
    blob_put->add_option("--store", store_dir, "blob store directory")->required();
    auto* blob_get = blob->add_subcommand("get", "fetch a blob by cid");
    blob_get->add_option("cid", blob_cid, "content hash")->required();
    blob_get->add_option("--store", store_dir, "blob store directory")->required();
    blob_get->add_option("--out", blob_out, "write payload here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (data_synth->parsed()) {
            write_synth_cmapss(data_dir, subset, synth_seed);
            std::cout << "wrote " << subset << " fixture under " << data_dir.string() << "\n";
        } else if (data_ingest->parsed()) {
            auto [train, test] = load_subset(data_dir, subset, cap);
            const NormStats stats = fit_norm_stats(train);
            normalize(train, stats);
            normalize(test, stats);
            nlohmann::json cache = {{"subset", subset},
                                    {"cap", cap},
                                    {"norm", {{"mean", stats.mean}, {"stddev", stats.stddev}}},
                                    {"train", dataset_to_json(train)},
                                    {"test", dataset_to_json(test)}};
            std::ofstream out(cache_out, std::ios::trunc);
            out << cache.dump() << '\n';
            std::cout << "ingested " << train.units.size() << " train units, "
                      << test.units.size() << " test units -> " << cache_out.string() << "\n";
        } else if (data_stats->parsed()) {
            auto [train, test] = load_subset(data_dir, subset, cap);
            const NormStats stats = fit_norm_stats(train);
            std::cout << "feature  mean          stddev\n";
            for (std::size_t j = 0; j < stats.mean.size(); ++j) {
                std::printf("%-8zu %-13.5f %.5f\n", j, stats.mean[j], stats.stddev[j]);
            }
            std::cout << "train rows: " << train.row_count()
                      << ", test rows: " << test.row_count() << "\n";
        } else if (keys_generate->parsed()) {
            const KeyPair pair = generate_keypair(key_bits, key_seed);
            std::filesystem::create_directories(key_dir);
            save_public_key(pair.pub, key_dir / "public.key");
            save_private_key(pair.priv, key_dir / "private.key");
            std::cout << "wrote " << (key_dir / "public.key").string() << " and "
                      << (key_dir / "private.key").string() << "\n";
        } else if (run_cmd->parsed()) {
            RunConfig cfg = parse_run_config(config_path);
            if (seed_override) cfg.seed = *seed_override;
            if (output_override) cfg.output_dir = *output_override;
            if (data_dir_override) cfg.data_dir = *data_dir_override;
            if (mine_per_upload) cfg.mine_per_upload = true;
            try {
                Simulation sim(cfg);
                const RunReport report = sim.run();
                std::cout << "run finished: " << report.rounds_executed << " rounds, final test RMSE "
                          << report.final_test_rmse;
                if (const auto ref = reference_rmse(report.subset)) {
                    std::cout << " (reference " << *ref << ")";
                }
                std::cout << ", outputs under " << cfg.output_dir.string() << "\n";
            } catch (const DataError&) {
                throw;
            } catch (const Error& e) {
                std::cerr << "run aborted: " << e.what() << "\n";
                return kExitRunAborted;
            }
        } else if (chain_inspect->parsed()) {
            const ChainDocument doc = load_chain_file(chain_path);
            for (const Block& block : doc.chain.blocks) {
                if (height_filter && block.header.height != *height_filter) continue;
                std::cout << "block " << block.header.height << " hash " << digest_hex(block.hash)
                          << "\n  miner " << block.header.miner << ", tick "
                          << block.header.timestamp << ", nonce " << block.header.nonce
                          << ", difficulty " << block.header.difficulty << ", "
                          << block.transactions.size() << " tx\n";
                for (std::size_t t = 0; t < block.transactions.size(); ++t) {
                    const Transaction& tx = block.transactions[t];
                    std::cout << "  tx " << digest_hex(tx.tx_id).substr(0, 16) << " from "
                              << tx.sender.hex().substr(0, 12) << " nonce " << tx.nonce
                              << (block.applied[t] ? "" : " [failed]");
                    switch (tx.kind) {
                        case TxKind::UpdateModelHash:
                            std::cout << " update_model_hash ("
                                      << std::get<UpdateModelHashPayload>(tx.payload)
                                             .ciphertext.size()
                                      << " ciphertext bytes)";
                            break;
                        case TxKind::PublishGlobalModel:
                            std::cout << " publish_global "
                                      << std::get<PublishGlobalModelPayload>(tx.payload).cid;
                            break;
                        case TxKind::TokenTransfer: {
                            const auto& p = std::get<TokenTransferPayload>(tx.payload);
                            std::cout << (p.mint ? " mint " : " transfer ") << p.amount
                                      << " -> " << p.to.hex().substr(0, 12);
                            break;
                        }
                    }
                    std::cout << "\n";
                }
            }
        } else if (chain_validate->parsed()) {
            const ChainDocument doc = load_chain_file(chain_path);
            const ValidationReport report = validate_chain(doc.chain, doc.config, doc.policy);
            if (report.ok) {
                std::cout << "chain valid: " << doc.chain.blocks.size() << " blocks\n";
            } else {
                std::cout << "chain INVALID at height "
                          << (report.height ? std::to_string(*report.height) : "?") << ": "
                          << report.what << "\n";
                return kExitData;
            }
        } else if (contract_balance->parsed()) {
            const ChainDocument doc = load_chain_file(chain_path);
            const ReplayResult replayed = replay_chain(doc.chain, doc.policy);
            const Address addr = parse_address_arg(address_arg);
            const auto it = replayed.state.balances.find(addr);
            std::cout << (it == replayed.state.balances.end() ? 0 : it->second) << "\n";
        } else if (contract_uploads->parsed()) {
            const ChainDocument doc = load_chain_file(chain_path);
            const ReplayResult replayed = replay_chain(doc.chain, doc.policy);
            const Address addr = parse_address_arg(address_arg);
            const auto it = replayed.state.model_hashes.find(addr);
            if (it == replayed.state.model_hashes.end()) {
                std::cout << "no uploads for " << addr.hex() << "\n";
            } else {
                for (std::size_t i = 0; i < it->second.size(); ++i) {
                    std::cout << (i + 1) << ": " << it->second[i].substr(0, 64)
                              << (it->second[i].size() > 64 ? "..." : "") << "\n";
                }
            }
        } else if (contract_history->parsed()) {
            const ChainDocument doc = load_chain_file(chain_path);
            const ReplayResult replayed = replay_chain(doc.chain, doc.policy);
            for (std::size_t i = 0; i < replayed.state.global_model_history.size(); ++i) {
                std::cout << (i + 1) << ": " << replayed.state.global_model_history[i] << "\n";
            }
        } else if (model_eval->parsed()) {
            Bytes blob;
            if (!weights_file.empty()) {
                std::ifstream in(weights_file, std::ios::binary);
                if (!in) throw NotFoundError("cannot open " + weights_file.string());
                blob.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
            } else if (!weights_cid.empty()) {
                if (store_dir.empty()) {
                    throw InvalidArgumentError("--weights needs --store");
                }
                BlobStore store;
                store.load_dir(store_dir);
                blob = store.get(ContentHash::parse(weights_cid));
            } else {
                throw InvalidArgumentError("pass --weights <cid> or --weights-file <path>");
            }
            const ModelWeights weights = deserialize_weights(blob);
            auto [train, test] = load_subset(data_dir, subset, cap);
            const NormStats stats = fit_norm_stats(train);
            normalize(test, stats);
            const EvalData last = last_cycle_rows(test);
            const EvalData all = flatten(test);
            std::cout << "test RMSE (last cycle): "
                      << rmse(predict(weights, last.xs, cap), last.ys) << "\n"
                      << "test RMSE (all rows):   "
                      << rmse(predict(weights, all.xs, cap), all.ys) << "\n";
            if (!eval_out.empty()) {
                write_prediction_csvs(eval_out, test, weights, cap);
                std::cout << "prediction CSVs under " << eval_out.string() << "\n";
            }
        } else if (report_cmd->parsed()) {
            std::cout << report_from_dir(run_dir);
        } else if (blob_put->parsed()) {
            std::ifstream in(blob_file, std::ios::binary);
            if (!in) throw NotFoundError("cannot open " + blob_file.string());
            const Bytes payload((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
            BlobStore store;
            if (std::filesystem::is_directory(store_dir)) store.load_dir(store_dir);
            const ContentHash cid = store.put(payload);
            store.dump_dir(store_dir);
            std::cout << cid.render() << "\n";
        } else if (blob_get->parsed()) {
            BlobStore store;
            store.load_dir(store_dir);
            const Bytes payload = store.get(ContentHash::parse(blob_cid));
            if (blob_out.empty()) {
                std::cout.write(reinterpret_cast<const char*>(payload.data()),
                                static_cast<std::streamsize>(payload.size()));
            } else {
                std::ofstream out(blob_out, std::ios::binary | std::ios::trunc);
                out.write(reinterpret_cast<const char*>(payload.data()),
                          static_cast<std::streamsize>(payload.size()));
            }
        }
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const MissingArtifactError& e) {
        std::cerr << e.what() << "\n";
        return kExitData;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitData;
    } catch (const NotFoundError& e) {
        std::cerr << "not found: " << e.what() << "\n";
        return kExitData;
    } catch (const InvalidArgumentError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRunAborted;
    }
    return kExitOk;
}
