#include "tlmp/sim.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "tlmp/math_util.hpp"

namespace tlmp::sim {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double stderr_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    return sd / std::sqrt(static_cast<double>(v.size()));
}

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stod(tok));
    }
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& v) {
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw std::invalid_argument("bad boolean value: " + v);
}

}  // namespace

std::string to_string(ChannelMode m) {
    return m == ChannelMode::kGmIid ? "gm_iid" : "one_ring";
}

std::string to_string(CollisionMode m) {
    switch (m) {
        case CollisionMode::kNatural: return "natural";
        case CollisionMode::kForced: return "forced";
        default: return "forbidden";
    }
}

void SimConfig::validate() const {
    if (n < 1 || m < 1 || k < 1 || b < 1 || l < 1)
        throw std::invalid_argument("SimConfig: dimensions must be >= 1");
    if (b % l != 0)
        throw std::invalid_argument("SimConfig: b must be divisible by l");
    if (trials < 1) throw std::invalid_argument("SimConfig: trials >= 1");
    if (!std::isfinite(snr_db))
        throw std::invalid_argument("SimConfig: snr_db must be finite");
    if (threads < 1) throw std::invalid_argument("SimConfig: threads >= 1");
    if (collision_mode == CollisionMode::kForbidden && (1 << l) < k)
        throw std::invalid_argument(
            "SimConfig: forbidden collisions need 2^l >= k");
    if (collision_mode == CollisionMode::kForced && k < 2)
        throw std::invalid_argument("SimConfig: forced collisions need k >= 2");
    gm.validate();
    if (channel_mode == ChannelMode::kOneRing && !(azimuth_spread_deg > 0.0))
        throw std::invalid_argument("SimConfig: azimuth_spread_deg > 0");
}

TrialResult run_trial(const SimConfig& cfg, std::uint64_t trial_seed) {
    cfg.validate();
    const auto t_start = std::chrono::steady_clock::now();

    std::mt19937_64 rng_msg(derive_seed(trial_seed, 0));
    std::mt19937_64 rng_channel(derive_seed(trial_seed, 2));
    std::mt19937_64 rng_noise(derive_seed(trial_seed, 3));
    std::mt19937_64 rng_decode(derive_seed(trial_seed, 4));

    const int j = cfg.j_blocks();
    const int section = 1 << cfg.l;

    // Block indices per user, shaped by the collision mode.
    std::vector<sparc::BlockIndices> idx(cfg.k, sparc::BlockIndices(j));
    std::uniform_int_distribution<int> pick(0, section - 1);
    for (int u = 0; u < cfg.k; ++u)
        for (int blk = 0; blk < j; ++blk) idx[u][blk] = pick(rng_msg);
    if (cfg.collision_mode == CollisionMode::kForbidden) {
        for (int blk = 0; blk < j; ++blk) {
            for (int u = 0; u < cfg.k; ++u) {
                bool clash = true;
                while (clash) {
                    clash = false;
                    for (int v = 0; v < u; ++v)
                        if (idx[v][blk] == idx[u][blk]) {
                            clash = true;
                            idx[u][blk] = pick(rng_msg);
                            break;
                        }
                }
            }
        }
    } else if (cfg.collision_mode == CollisionMode::kForced) {
        // minimal collision event: copy one block index between two users
        std::uniform_int_distribution<int> user(0, cfg.k - 1);
        std::uniform_int_distribution<int> block(0, j - 1);
        const int u = user(rng_msg);
        int v = user(rng_msg);
        while (v == u) v = user(rng_msg);
        const int blk = block(rng_msg);
        idx[v][blk] = idx[u][blk];
    }

    std::vector<sparc::MessageBits> sent;
    sent.reserve(cfg.k);
    for (int u = 0; u < cfg.k; ++u)
        sent.push_back(sparc::assemble_message(idx[u], cfg.l));

    const sparc::Codebook cb =
        sparc::build_codebook(derive_seed(trial_seed, 1), cfg.n, j, cfg.l);

    Eigen::MatrixXd x_stack(cb.width(), cfg.k);
    for (int u = 0; u < cfg.k; ++u)
        x_stack.col(u) = sparc::sparse_embed(idx[u], cfg.l);

    Eigen::MatrixXd h_truth;
    if (cfg.channel_mode == ChannelMode::kGmIid) {
        h_truth = channel::sample_gm_channel(cfg.gm, cfg.k, cfg.m, rng_channel);
    } else {
        const double spread = cfg.azimuth_spread_deg * std::numbers::pi / 180.0;
        std::mt19937_64 rng_az(cfg.azimuth_seed);
        std::uniform_real_distribution<double> az(-std::numbers::pi,
                                                  std::numbers::pi);
        std::vector<Eigen::MatrixXcd> covs;
        covs.reserve(cfg.k);
        Eigen::MatrixXcd avg = Eigen::MatrixXcd::Zero(cfg.m, cfg.m);
        for (int u = 0; u < cfg.k; ++u) {
            covs.push_back(channel::one_ring_covariance(cfg.m, az(rng_az),
                                                        spread));
            avg += covs.back();
        }
        avg /= static_cast<double>(cfg.k);
        const Eigen::MatrixXcd basis = channel::virtual_basis(avg, cfg.basis);
        h_truth.resize(cfg.k, 2 * cfg.m);
        for (int u = 0; u < cfg.k; ++u)
            h_truth.row(u) =
                channel::sample_one_ring_virtual(covs[u], basis, rng_channel)
                    .transpose();
    }

    const double sigma2 = std::pow(10.0, -cfg.snr_db / 10.0);
    const channel::Observation obs =
        channel::synthesize_observation(cb, x_stack, h_truth, sigma2,
                                        rng_noise);

    engine::EngineConfig ecfg = cfg.engine;
    ecfg.sigma2 = sigma2;
    const engine::DecodeResult res =
        engine::decode(obs.y, cb, cfg.k, ecfg, rng_decode, &h_truth);

    TrialResult out;
    out.seed = trial_seed;
    out.pe = sparc::per_user_error(sent, res.messages);
    out.iterations = res.diagnostics.iterations_used;
    out.nmse_db = 10.0 * std::log10(res.diagnostics.channel_nmse);
    out.final_g = res.diagnostics.final_g;
    out.cost_trace = res.diagnostics.cost_trace;
    out.runtime_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t_start)
                         .count();
    return out;
}

std::uint64_t trial_seed_for(const SimConfig& cfg, int value_index, int trial) {
    return derive_seed(cfg.seed,
                       static_cast<std::uint64_t>(value_index) *
                               static_cast<std::uint64_t>(cfg.trials > 0
                                                              ? cfg.trials
                                                              : 1) +
                           static_cast<std::uint64_t>(trial));
}

namespace {

void set_axis(SimConfig& cfg, const std::string& axis, double value) {
    if (axis == "n")
        cfg.n = static_cast<int>(value);
    else if (axis == "k")
        cfg.k = static_cast<int>(value);
    else if (axis == "m")
        cfg.m = static_cast<int>(value);
    else if (axis == "snr_db")
        cfg.snr_db = value;
    else if (axis == "l")
        cfg.l = static_cast<int>(value);
    else
        throw std::invalid_argument("run_sweep: unknown axis '" + axis + "'");
}

}  // namespace

SweepResult run_sweep(const SimConfig& base_cfg, const std::string& axis,
                      std::vector<double> values, int trials) {
    if (trials < 1) throw std::invalid_argument("run_sweep: trials >= 1");
    std::sort(values.begin(), values.end());
    SweepResult sweep;
    sweep.axis = axis;

    // Validate every point up front so a bad axis value fails fast.
    std::vector<SimConfig> cfgs;
    cfgs.reserve(values.size());
    for (double v : values) {
        SimConfig cfg = base_cfg;
        cfg.trials = trials;
        set_axis(cfg, axis, v);
        cfg.validate();
        cfgs.push_back(cfg);
    }

    const int total = static_cast<int>(values.size()) * trials;
    std::vector<TrialResult> results(total);
    std::atomic<int> next{0};
    auto worker = [&]() {
        while (true) {
            const int job = next.fetch_add(1);
            if (job >= total) return;
            const int vi = job / trials;
            const int ti = job % trials;
            results[job] = run_trial(cfgs[vi], trial_seed_for(cfgs[vi], vi, ti));
        }
    };
    const int nthreads = std::max(1, std::min(base_cfg.threads, total));
    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nthreads);
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    for (std::size_t vi = 0; vi < values.size(); ++vi) {
        SweepRow row;
        row.axis = axis;
        row.value = values[vi];
        row.trials = trials;
        std::vector<double> pes, iters, nmses, times;
        for (int ti = 0; ti < trials; ++ti) {
            const TrialResult& tr = results[vi * trials + ti];
            row.per_trial.push_back(tr);
            pes.push_back(tr.pe);
            iters.push_back(static_cast<double>(tr.iterations));
            nmses.push_back(tr.nmse_db);
            times.push_back(tr.runtime_ms);
        }
        row.pe_mean = mean_of(pes);
        row.pe_stderr = stderr_of(pes);
        row.iters_mean = mean_of(iters);
        row.nmse_db_mean = mean_of(nmses);
        row.runtime_ms_mean = mean_of(times);
        sweep.rows.push_back(std::move(row));
    }
    return sweep;
}

void emit_results(const SweepResult& sweep, const std::string& path,
                  OutputFormat format) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("emit_results: cannot open '" + path +
                                 "' for writing");
    if (format == OutputFormat::kCsv) {
        out << "axis,value,trials,pe_mean,pe_stderr,iters_mean,nmse_db_mean,"
               "runtime_ms_mean\n";
        for (const auto& r : sweep.rows)
            out << r.axis << ',' << fmt_double(r.value) << ',' << r.trials
                << ',' << fmt_double(r.pe_mean) << ','
                << fmt_double(r.pe_stderr) << ',' << fmt_double(r.iters_mean)
                << ',' << fmt_double(r.nmse_db_mean) << ','
                << fmt_double(r.runtime_ms_mean) << '\n';
    } else {
        nlohmann::json j;
        j["axis"] = sweep.axis;
        j["rows"] = nlohmann::json::array();
        for (const auto& r : sweep.rows) {
            nlohmann::json row;
            row["axis"] = r.axis;
            row["value"] = r.value;
            row["trials"] = r.trials;
            row["pe_mean"] = r.pe_mean;
            row["pe_stderr"] = r.pe_stderr;
            row["iters_mean"] = r.iters_mean;
            row["nmse_db_mean"] = r.nmse_db_mean;
            row["runtime_ms_mean"] = r.runtime_ms_mean;
            row["per_trial"] = nlohmann::json::array();
            for (const auto& tr : r.per_trial) {
                nlohmann::json t;
                t["seed"] = tr.seed;
                t["pe"] = tr.pe;
                t["iterations"] = tr.iterations;
                t["nmse_db"] = tr.nmse_db;
                t["runtime_ms"] = tr.runtime_ms;
                t["final_g"] = tr.final_g;
                t["cost_trace"] = tr.cost_trace;
                row["per_trial"].push_back(std::move(t));
            }
            j["rows"].push_back(std::move(row));
        }
        out << j.dump(2) << '\n';
    }
    if (!out.good())
        throw std::runtime_error("emit_results: write to '" + path +
                                 "' failed");
}

SweepResult read_results(const std::string& path, OutputFormat format) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("read_results: cannot open '" + path + "'");
    SweepResult sweep;
    if (format == OutputFormat::kCsv) {
        std::string line;
        if (!std::getline(in, line))
            throw std::runtime_error("read_results: '" + path + "' is empty");
        while (std::getline(in, line)) {
            if (trim(line).empty()) continue;
            std::stringstream ss(line);
            std::string tok;
            SweepRow r;
            std::getline(ss, r.axis, ',');
            std::getline(ss, tok, ',');
            r.value = std::stod(tok);
            std::getline(ss, tok, ',');
            r.trials = std::stoi(tok);
            std::getline(ss, tok, ',');
            r.pe_mean = std::stod(tok);
            std::getline(ss, tok, ',');
            r.pe_stderr = std::stod(tok);
            std::getline(ss, tok, ',');
            r.iters_mean = std::stod(tok);
            std::getline(ss, tok, ',');
            r.nmse_db_mean = std::stod(tok);
            std::getline(ss, tok, ',');
            r.runtime_ms_mean = std::stod(tok);
            sweep.rows.push_back(std::move(r));
        }
        if (!sweep.rows.empty()) sweep.axis = sweep.rows.front().axis;
    } else {
        nlohmann::json j;
        try {
            in >> j;
        } catch (const std::exception& e) {
            throw std::runtime_error("read_results: parse error in '" + path +
                                     "': " + e.what());
        }
        sweep.axis = j.value("axis", "");
        for (const auto& row : j.at("rows")) {
            SweepRow r;
            r.axis = row.value("axis", sweep.axis);
            r.value = row.at("value").get<double>();
            r.trials = row.at("trials").get<int>();
            r.pe_mean = row.at("pe_mean").get<double>();
            r.pe_stderr = row.at("pe_stderr").get<double>();
            r.iters_mean = row.at("iters_mean").get<double>();
            r.nmse_db_mean = row.at("nmse_db_mean").get<double>();
            r.runtime_ms_mean = row.at("runtime_ms_mean").get<double>();
            if (row.contains("per_trial"))
                for (const auto& t : row["per_trial"]) {
                    TrialResult tr;
                    tr.seed = t.at("seed").get<std::uint64_t>();
                    tr.pe = t.at("pe").get<double>();
                    tr.iterations = t.at("iterations").get<int>();
                    tr.nmse_db = t.at("nmse_db").get<double>();
                    tr.runtime_ms = t.at("runtime_ms").get<double>();
                    tr.final_g = t.at("final_g").get<int>();
                    tr.cost_trace =
                        t.at("cost_trace").get<std::vector<double>>();
                    r.per_trial.push_back(std::move(tr));
                }
            sweep.rows.push_back(std::move(r));
        }
    }
    return sweep;
}

void apply_key(SimConfig& cfg, const std::string& key,
               const std::string& value) {
    if (key == "n")
        cfg.n = std::stoi(value);
    else if (key == "m")
        cfg.m = std::stoi(value);
    else if (key == "k")
        cfg.k = std::stoi(value);
    else if (key == "b")
        cfg.b = std::stoi(value);
    else if (key == "l")
        cfg.l = std::stoi(value);
    else if (key == "snr_db")
        cfg.snr_db = std::stod(value);
    else if (key == "channel_mode") {
        if (value == "gm_iid")
            cfg.channel_mode = ChannelMode::kGmIid;
        else if (value == "one_ring")
            cfg.channel_mode = ChannelMode::kOneRing;
        else
            throw std::invalid_argument("bad channel_mode: " + value);
    } else if (key == "gm_weights")
        cfg.gm.weights = parse_double_list(value);
    else if (key == "gm_precisions")
        cfg.gm.precisions = parse_double_list(value);
    else if (key == "azimuth_spread_deg")
        cfg.azimuth_spread_deg = std::stod(value);
    else if (key == "azimuth_seed")
        cfg.azimuth_seed = std::stoull(value);
    else if (key == "virtual_basis") {
        if (value == "eigen")
            cfg.basis = channel::VirtualBasis::kEigen;
        else if (value == "dft")
            cfg.basis = channel::VirtualBasis::kDft;
        else
            throw std::invalid_argument("bad virtual_basis: " + value);
    } else if (key == "trials")
        cfg.trials = std::stoi(value);
    else if (key == "seed")
        cfg.seed = std::stoull(value);
    else if (key == "collision_mode") {
        if (value == "natural")
            cfg.collision_mode = CollisionMode::kNatural;
        else if (value == "forced")
            cfg.collision_mode = CollisionMode::kForced;
        else if (value == "forbidden")
            cfg.collision_mode = CollisionMode::kForbidden;
        else
            throw std::invalid_argument("bad collision_mode: " + value);
    } else if (key == "n0")
        cfg.n0 = std::stoi(value);
    else if (key == "threads")
        cfg.threads = std::stoi(value);
    else if (key == "theta1")
        cfg.engine.theta1 = std::stod(value);
    else if (key == "theta2")
        cfg.engine.theta2 = std::stod(value);
    else if (key == "t_max")
        cfg.engine.t_max = std::stoi(value);
    else if (key == "eps")
        cfg.engine.eps = std::stod(value);
    else if (key == "adaptive_damping")
        cfg.engine.adaptive_damping = parse_bool(value);
    else if (key == "init_mode") {
        if (value == "random")
            cfg.engine.init_mode = engine::InitMode::kRandom;
        else if (value == "noisy_oracle")
            cfg.engine.init_mode = engine::InitMode::kNoisyOracle;
        else
            throw std::invalid_argument("bad init_mode: " + value);
    } else if (key == "init_snr_db")
        cfg.engine.init_snr_db = std::stod(value);
    else if (key == "dp_alpha")
        cfg.engine.dp_hyper.alpha = std::stod(value);
    else if (key == "dp_a")
        cfg.engine.dp_hyper.a = std::stod(value);
    else if (key == "dp_b")
        cfg.engine.dp_hyper.b = std::stod(value);
    else if (key == "dp_g_init")
        cfg.engine.dp_hyper.g_init = std::stoi(value);
    else if (key == "prune_threshold")
        cfg.engine.dp_hyper.prune_threshold = std::stod(value);
    else
        throw std::invalid_argument("unknown config key: " + key);
}

SimConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("parse_config_file: cannot open '" + path +
                                 "'");
    SimConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("parse_config_file: '" + path +
                                     "' line " + std::to_string(line_no) +
                                     ": expected key = value");
        try {
            apply_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const std::exception& e) {
            throw std::runtime_error("parse_config_file: '" + path +
                                     "' line " + std::to_string(line_no) +
                                     ": " + e.what());
        }
    }
    return cfg;
}

}  // namespace tlmp::sim
