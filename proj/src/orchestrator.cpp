#include "fedchain/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <json.hpp>
#include <limits>
#include <sstream>

#include "fedchain/errors.hpp"
#include "fedchain/synth.hpp"

namespace fedchain {

namespace {

std::string fmt(double v, int precision = 10) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    return buf;
}

template <typename F>
auto run_step(int round, const char* name, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const std::exception& e) {
        throw RunError("round " + std::to_string(round) + ", step '" + name +
                       "': " + e.what());
    }
}

std::filesystem::path data_file(const RunConfig& cfg, const std::string& prefix) {
    return cfg.data_dir / (prefix + "_" + cfg.subset + ".txt");
}

void require_file(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw MissingArtifactError("missing artifact: " + path.string());
    }
}

}  // namespace

std::optional<double> reference_rmse(const std::string& subset) {
    // reference results used for the comparison column in summaries
    if (subset == "FD001") return 24.76;
    if (subset == "FD002") return 32.25;
    if (subset == "FD003") return 25.17;
    if (subset == "FD004") return 28.54;
    return std::nullopt;
}

RunConfig parse_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw NotFoundError("cannot open config file: " + path.string());
    }
    RunConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": expected key = value");
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "subset") cfg.subset = value;
            else if (key == "data_dir") cfg.data_dir = value;
            else if (key == "output_dir") cfg.output_dir = value;
            else if (key == "seed") cfg.seed = std::stoull(value);
            else if (key == "difficulty") cfg.difficulty = static_cast<std::uint32_t>(std::stoul(value));
            else if (key == "block_capacity") cfg.block_capacity = std::stoul(value);
            else if (key == "miner_count") cfg.miner_count = static_cast<std::uint32_t>(std::stoul(value));
            else if (key == "miner_schedule") {
                if (value != "round_robin" && value != "random") {
                    throw ParseError(path.string() + ":" + std::to_string(line_no) +
                                     ": miner_schedule must be round_robin or random");
                }
                cfg.random_miner_order = value == "random";
            }
            else if (key == "verify_mode") {
                // the monitor scores the candidate alone; scoring the merged
                // model instead is reserved behind this switch
                if (value != "candidate") {
                    throw ParseError(path.string() + ":" + std::to_string(line_no) +
                                     ": verify_mode '" + value +
                                     "' is not implemented (only: candidate)");
                }
            }
            else if (key == "rsa_bits") cfg.rsa_bits = static_cast<unsigned>(std::stoul(value));
            else if (key == "rul_cap") cfg.rul_cap = std::stoi(value);
            else if (key == "mine_per_upload") cfg.mine_per_upload = (value == "true" || value == "1");
            else if (key == "learning_rate") cfg.train.learning_rate = std::stod(value);
            else if (key == "epochs") cfg.train.epochs = std::stoi(value);
            else if (key == "epsilon") cfg.train.epsilon = std::stod(value);
            else if (key == "reg_lambda") cfg.train.reg_lambda = std::stod(value);
            else if (key == "batch_size") cfg.train.batch_size = std::stoul(value);
            else if (key == "workers") cfg.federation.worker_count = std::stoi(value);
            else if (key == "weighting") cfg.federation.weighting = weighting_from_name(value);
            else if (key == "rounds_max") cfg.federation.rounds_max = std::stoi(value);
            else if (key == "convergence_tol")
                cfg.federation.convergence_tol =
                    value == "inf" ? std::numeric_limits<double>::infinity() : std::stod(value);
            else if (key == "validation_fraction") cfg.federation.validation_fraction = std::stod(value);
            else if (key == "reward_amount") cfg.federation.reward_amount = std::stoull(value);
            else
                throw ParseError(path.string() + ":" + std::to_string(line_no) +
                                 ": unknown config key '" + key + "'");
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception&) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": bad value for '" + key + "': " + value);
        }
    }
    return cfg;
}

Simulation::Simulation(RunConfig config)
    : config_(std::move(config)),
      ledger_(LedgerConfig{config_.difficulty, config_.block_capacity,
                           std::uint64_t{1} << 32, config_.miner_count,
                           config_.random_miner_order, config_.seed},
              ContractPolicy{treasury_address(), monitor_address()}) {
    auto [train, test] = load_cmapss(data_file(config_, "train"), data_file(config_, "test"),
                                     data_file(config_, "RUL"));
    compute_rul_labels(train, config_.rul_cap);
    compute_rul_labels(test, config_.rul_cap);

    const NormStats stats = fit_norm_stats(train);
    normalize(train, stats);
    normalize(test, stats);

    auto [workers_view, holdout] =
        split_units(train, config_.federation.validation_fraction,
                    derive_seed(config_.seed, "validation-split"));
    train_ = std::move(workers_view);
    test_ = std::move(test);
    validation_ = flatten(holdout);
    test_last_cycle_ = last_cycle_rows(test_);
    test_all_rows_ = flatten(test_);

    shards_ = partition_workers(train_, config_.federation.worker_count,
                                derive_seed(config_.seed, "partition"));

    keys_ = generate_keypair(config_.rsa_bits, derive_seed(config_.seed, "rsa-keygen"));

    double label_sum = 0.0;
    std::size_t label_count = 0;
    for (const WorkerShard& shard : shards_) {
        for (double y : shard.ys) label_sum += y;
        label_count += shard.ys.size();
    }
    const std::size_t dim = shards_.front().xs.front().size();
    global_ = init_weights(dim, derive_seed(config_.seed, "init-weights"),
                           label_sum / static_cast<double>(label_count));

    initial_validation_rmse_ = validation_rmse(global_);
    initial_test_rmse_ = test_rmse_last_cycle(global_);
}

double Simulation::validation_rmse(const ModelWeights& weights) const {
    return rmse(predict(weights, validation_.xs, config_.rul_cap), validation_.ys);
}

double Simulation::test_rmse_last_cycle(const ModelWeights& weights) const {
    return rmse(predict(weights, test_last_cycle_.xs, config_.rul_cap), test_last_cycle_.ys);
}

double Simulation::test_rmse_all_rows(const ModelWeights& weights) const {
    return rmse(predict(weights, test_all_rows_.xs, config_.rul_cap), test_all_rows_.ys);
}

void Simulation::mine_pending(RoundRecord& record) {
    while (ledger_.mempool_size() > 0) {
        ledger_.mine_block(ledger_.next_miner());
        record.block_heights.push_back(ledger_.height());
    }
}

RoundRecord Simulation::run_round() {
    const int round = rounds_done_ + 1;
    const int worker_count = config_.federation.worker_count;
    RoundRecord record;
    record.round_index = round;

    // (1) local training, embarrassingly parallel between round barriers
    std::vector<ModelWeights> locals(static_cast<std::size_t>(worker_count));
    run_step(round, "train", [&] {
        std::vector<std::future<ModelWeights>> futures;
        futures.reserve(locals.size());
        for (int k = 0; k < worker_count; ++k) {
            futures.push_back(std::async(std::launch::async, [this, round, k] {
                TrainConfig cfg = config_.train;
                cfg.seed = derive_seed(config_.seed, "train",
                                       static_cast<std::uint64_t>(round),
                                       static_cast<std::uint64_t>(k));
                return train_local(global_, shards_[static_cast<std::size_t>(k)], cfg);
            }));
        }
        for (int k = 0; k < worker_count; ++k) {
            locals[static_cast<std::size_t>(k)] = futures[static_cast<std::size_t>(k)].get();
        }
    });

    // (2)+(3) store blob, encrypt the hash link, anchor it on-chain
    for (int k = 0; k < worker_count; ++k) {
        WorkerRoundEntry entry;
        entry.worker_id = k + 1;
        run_step(round, "store-and-anchor", [&] {
            const Bytes blob = serialize_weights(locals[static_cast<std::size_t>(k)]);
            entry.local_hash = store_.put(blob);
            Rng enc_rng(derive_seed(config_.seed, "encrypt",
                                    static_cast<std::uint64_t>(round),
                                    static_cast<std::uint64_t>(k)));
            const Ciphertext ct = encrypt(entry.local_hash.render(), keys_.pub, enc_rng);
            const Address sender = worker_address(k + 1);
            entry.upload_tx_id = ledger_.submit(Transaction::make_update(
                sender, ledger_.next_nonce(sender), ct.concat()));
        });
        record.workers.push_back(std::move(entry));
        if (config_.mine_per_upload) {
            run_step(round, "mine-upload", [&] { mine_pending(record); });
        }
    }

    // (4) a miner seals the pending uploads
    run_step(round, "mine-uploads", [&] { mine_pending(record); });

    // (5) the monitor walks the chain: decrypt, fetch, deserialize, verify
    std::vector<WorkerUpdate> accepted;
    for (int k = 0; k < worker_count; ++k) {
        WorkerRoundEntry& entry = record.workers[static_cast<std::size_t>(k)];
        const ModelWeights candidate = run_step(round, "verify", [&] {
            const Address sender = worker_address(k + 1);
            const std::uint64_t index = ledger_.state().upload_counts.at(sender);
            const std::string stored = get_model_hash(ledger_.state(), sender, index);
            const Ciphertext ct = Ciphertext::split(from_hex(stored), config_.rsa_bits);
            const Bytes link = decrypt(ct, keys_.priv);
            const ContentHash cid = ContentHash::parse(bytes_to_string(link));
            const ModelWeights weights = deserialize_weights(store_.get(cid));
            entry.verdict = verify_update(k + 1, weights, global_, validation_,
                                          config_.rul_cap);
            return weights;
        });
        if (entry.verdict.accepted) {
            accepted.push_back(WorkerUpdate{
                k + 1, candidate, shards_[static_cast<std::size_t>(k)].sample_count()});
        }
    }

    // (6) rewards for accepted updates
    run_step(round, "reward", [&] {
        for (WorkerRoundEntry& entry : record.workers) {
            reward_accepted(entry.verdict, ledger_, worker_address(entry.worker_id),
                            config_.federation.reward_amount);
        }
    });

    // (7) aggregate accepted updates; all rejected carries the incumbent forward
    const ModelWeights next = run_step(round, "aggregate", [&] {
        return accepted.empty() ? global_
                                : aggregate(accepted, config_.federation.weighting);
    });

    // (8) publish the global model openly
    run_step(round, "publish", [&] {
        const ContentHash cid = store_.put(serialize_weights(next));
        const Address monitor = ledger_.policy().monitor;
        ledger_.submit(Transaction::make_publish(monitor, ledger_.next_nonce(monitor),
                                                 cid.render()));
        record.global_hash = cid.render();
    });

    // (9) seal rewards + publish
    run_step(round, "mine-publish", [&] { mine_pending(record); });

    // (10) workers adopt the published model through the on-chain record
    run_step(round, "adopt", [&] {
        const std::string& published = ledger_.state().global_model_history.back();
        global_ = deserialize_weights(store_.get(ContentHash::parse(published)));
    });

    record.validation_rmse = validation_rmse(global_);
    record.test_rmse = test_rmse_last_cycle(global_);
    record.tokens_total = ledger_.state().total_minted;
    records_.push_back(record);
    ++rounds_done_;
    return record;
}

RunReport Simulation::run() {
    const double tol = config_.federation.convergence_tol;
    double prev = initial_validation_rmse_;
    int streak = 0;
    try {
        for (int r = 0; r < config_.federation.rounds_max; ++r) {
            const RoundRecord record = run_round();
            const double delta = std::abs(record.validation_rmse - prev);
            prev = record.validation_rmse;
            if (std::isinf(tol)) {
                converged_ = true;  // every future delta satisfies trivially
                break;
            }
            if (delta < tol) {
                if (++streak >= 3) {
                    converged_ = true;
                    break;
                }
            } else {
                streak = 0;
            }
        }
    } catch (...) {
        // flush whatever exists before propagating the abort
        if (!config_.output_dir.empty()) {
            write_outputs(build_report());
        }
        throw;
    }
    const RunReport report = build_report();
    if (!config_.output_dir.empty()) {
        write_outputs(report);
    }
    return report;
}

RunReport Simulation::build_report() const {
    RunReport report;
    report.subset = config_.subset;
    report.rounds_executed = rounds_done_;
    report.converged = converged_;
    report.initial_validation_rmse = initial_validation_rmse_;
    report.initial_test_rmse = initial_test_rmse_;
    report.rounds = records_;
    report.final_test_rmse =
        records_.empty() ? initial_test_rmse_ : records_.back().test_rmse;
    report.final_test_rmse_all_rows = test_rmse_all_rows(global_);
    report.total_minted = ledger_.state().total_minted;
    report.block_count = ledger_.chain().blocks.size();
    for (int k = 1; k <= config_.federation.worker_count; ++k) {
        const auto it = ledger_.state().balances.find(worker_address(k));
        report.worker_balances[k] = it == ledger_.state().balances.end() ? 0 : it->second;
    }
    return report;
}

void Simulation::write_outputs(const RunReport& report) const {
    const std::filesystem::path& dir = config_.output_dir;
    std::filesystem::create_directories(dir);

    {
        std::ofstream log(dir / "run_log.csv", std::ios::trunc);
        log << "round,worker_id,accepted,rmse_before,rmse_after,global_rmse,tokens_total\n";
        for (const RoundRecord& round : report.rounds) {
            for (const WorkerRoundEntry& w : round.workers) {
                log << round.round_index << ',' << w.worker_id << ','
                    << (w.verdict.accepted ? 1 : 0) << ',' << fmt(w.verdict.rmse_before)
                    << ',' << fmt(w.verdict.rmse_after) << ',' << fmt(round.validation_rmse)
                    << ',' << round.tokens_total << '\n';
            }
        }
    }

    {
        const std::filesystem::path pred_dir = dir / "predictions";
        std::filesystem::create_directories(pred_dir);
        for (const UnitSeries& unit : test_.units) {
            const std::vector<double> predicted =
                predict(global_, unit.features, config_.rul_cap);
            char name[32];
            std::snprintf(name, sizeof name, "unit_%04d.csv", unit.unit_id);
            std::ofstream out(pred_dir / name, std::ios::trunc);
            out << "unit,cycle,actual_rul,predicted_rul\n";
            for (std::size_t i = 0; i < unit.cycles.size(); ++i) {
                out << unit.unit_id << ',' << unit.cycles[i] << ',' << fmt(unit.rul[i]) << ','
                    << fmt(predicted[i]) << '\n';
            }
        }
    }

    {
        std::ofstream out(dir / "chain.json", std::ios::trunc);
        out << export_chain(ledger_.chain(), ledger_.config(), ledger_.policy()).dump(2)
            << '\n';
    }

    {
        nlohmann::json rounds = nlohmann::json::array();
        for (const RoundRecord& round : report.rounds) {
            nlohmann::json workers = nlohmann::json::array();
            for (const WorkerRoundEntry& w : round.workers) {
                nlohmann::json jw = {{"worker_id", w.worker_id},
                                     {"local_hash", w.local_hash.render()},
                                     {"upload_tx_id", digest_hex(w.upload_tx_id)},
                                     {"accepted", w.verdict.accepted},
                                     {"rmse_before", w.verdict.rmse_before},
                                     {"rmse_after", w.verdict.rmse_after}};
                if (w.verdict.reward_tx_id) {
                    jw["reward_tx_id"] = digest_hex(*w.verdict.reward_tx_id);
                }
                workers.push_back(std::move(jw));
            }
            rounds.push_back({{"round", round.round_index},
                              {"global_hash", round.global_hash},
                              {"validation_rmse", round.validation_rmse},
                              {"test_rmse", round.test_rmse},
                              {"tokens_total", round.tokens_total},
                              {"block_heights", round.block_heights},
                              {"workers", std::move(workers)}});
        }
        nlohmann::json balances = nlohmann::json::object();
        for (const auto& [worker, amount] : report.worker_balances) {
            balances[std::to_string(worker)] = amount;
        }
        nlohmann::json summary = {
            {"subset", report.subset},
            {"rounds_executed", report.rounds_executed},
            {"converged", report.converged},
            {"initial_validation_rmse", report.initial_validation_rmse},
            {"initial_test_rmse", report.initial_test_rmse},
            {"final_test_rmse", report.final_test_rmse},
            {"final_test_rmse_all_rows", report.final_test_rmse_all_rows},
            {"total_minted", report.total_minted},
            {"block_count", report.block_count},
            {"worker_balances", std::move(balances)},
            {"rounds", std::move(rounds)}};
        if (const auto ref = reference_rmse(report.subset)) {
            summary["reference_rmse"] = *ref;
        }
        std::ofstream out(dir / "summary.json", std::ios::trunc);
        out << summary.dump(2) << '\n';
    }

    {
        std::ofstream out(dir / "summary.txt", std::ios::trunc);
        out << "fedchain run summary\n"
            << "subset:                    " << report.subset << "\n"
            << "rounds executed:           " << report.rounds_executed
            << (report.converged ? " (converged)" : "") << "\n"
            << "initial test RMSE:         " << fmt(report.initial_test_rmse, 4) << "\n"
            << "final test RMSE:           " << fmt(report.final_test_rmse, 4);
        if (const auto ref = reference_rmse(report.subset)) {
            out << "   (reference: " << fmt(*ref, 2) << ")";
        }
        out << "\n"
            << "final test RMSE, all rows: " << fmt(report.final_test_rmse_all_rows, 4) << "\n"
            << "blocks mined:              " << report.block_count << "\n"
            << "tokens minted:             " << report.total_minted << "\n";
        out << "worker balances:          ";
        for (const auto& [worker, amount] : report.worker_balances) {
            out << " worker-" << worker << "=" << amount;
        }
        out << "\n";
    }

    store_.dump_dir(dir / "store");

    std::filesystem::create_directories(dir / "keys");
    save_public_key(keys_.pub, dir / "keys" / "public.key");
    save_private_key(keys_.priv, dir / "keys" / "private.key");
}

std::string report_from_dir(const std::filesystem::path& run_dir) {
    const std::filesystem::path summary_path = run_dir / "summary.json";
    const std::filesystem::path log_path = run_dir / "run_log.csv";
    const std::filesystem::path chain_path = run_dir / "chain.json";
    const std::filesystem::path pred_dir = run_dir / "predictions";
    require_file(summary_path);
    require_file(log_path);
    require_file(chain_path);
    if (!std::filesystem::is_directory(pred_dir)) {
        throw MissingArtifactError("missing artifact: " + pred_dir.string());
    }

    nlohmann::json summary;
    {
        std::ifstream in(summary_path);
        in >> summary;
    }

    // recompute both RMSE metrics from the prediction CSVs
    double sum_all = 0.0, sum_last = 0.0;
    std::size_t n_all = 0, n_last = 0;
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(pred_dir)) {
        if (entry.path().extension() == ".csv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        throw MissingArtifactError("missing artifact: " + (pred_dir / "*.csv").string());
    }
    for (const auto& file : files) {
        std::ifstream in(file);
        std::string line;
        std::getline(in, line);  // header
        double last_diff = 0.0;
        bool any = false;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::replace(line.begin(), line.end(), ',', ' ');
            std::istringstream ss(line);
            int unit = 0, cycle = 0;
            double actual = 0.0, predicted = 0.0;
            if (!(ss >> unit >> cycle >> actual >> predicted)) {
                throw ParseError("malformed prediction row in " + file.string());
            }
            const double d = predicted - actual;
            sum_all += d * d;
            ++n_all;
            last_diff = d;
            any = true;
        }
        if (any) {
            sum_last += last_diff * last_diff;
            ++n_last;
        }
    }
    const double rmse_all = std::sqrt(sum_all / static_cast<double>(n_all));
    const double rmse_last = std::sqrt(sum_last / static_cast<double>(n_last));

    // cross-check tokens against the chain export
    nlohmann::json chain_doc;
    {
        std::ifstream in(chain_path);
        in >> chain_doc;
    }
    const ChainDocument doc = import_chain(chain_doc);
    const ValidationReport valid = validate_chain(doc.chain, doc.config, doc.policy);
    const ReplayResult replayed = replay_chain(doc.chain, doc.policy);

    const double reported_last = summary.at("final_test_rmse").get<double>();
    const double reported_all = summary.at("final_test_rmse_all_rows").get<double>();
    const bool rmse_consistent =
        std::abs(reported_last - rmse_last) < 1e-6 && std::abs(reported_all - rmse_all) < 1e-6;

    bool balances_consistent = true;
    for (const auto& [worker, amount] : summary.at("worker_balances").items()) {
        const Address addr = worker_address(std::stoi(worker));
        const auto it = replayed.state.balances.find(addr);
        const std::uint64_t actual = it == replayed.state.balances.end() ? 0 : it->second;
        if (actual != amount.get<std::uint64_t>()) balances_consistent = false;
    }

    std::ostringstream out;
    out << "run report for " << run_dir.string() << "\n"
        << "subset:                 " << summary.at("subset").get<std::string>() << "\n"
        << "rounds executed:        " << summary.at("rounds_executed").get<int>() << "\n"
        << "final test RMSE:        " << fmt(reported_last, 4);
    if (summary.contains("reference_rmse")) {
        out << "   (reference: " << fmt(summary.at("reference_rmse").get<double>(), 2) << ")";
    }
    out << "\n"
        << "recomputed from CSVs:   " << fmt(rmse_last, 4) << " (last cycle), "
        << fmt(rmse_all, 4) << " (all rows)\n"
        << "RMSE consistent:        " << (rmse_consistent ? "yes" : "NO") << "\n"
        << "chain valid:            " << (valid.ok ? "yes" : "NO: " + valid.what) << "\n"
        << "balances consistent:    " << (balances_consistent ? "yes" : "NO") << "\n"
        << "tokens minted:          " << replayed.state.total_minted << "\n"
        << "prediction files:       " << files.size() << " under " << pred_dir.string()
        << "\n";
    return out.str();
}

}  // namespace fedchain
