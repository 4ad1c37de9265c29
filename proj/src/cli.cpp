#include "judgekit/cli.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "judgekit/datagen.hpp"
#include "judgekit/eval.hpp"
#include "judgekit/inference.hpp"
#include "judgekit/prompts.hpp"
#include "judgekit/reward_service.hpp"
#include "judgekit/version.hpp"

namespace judgekit::cli {

using json = nlohmann::json;

namespace {

struct EndpointOptions {
    std::string base_url = "mock:fixtures";
    std::string model = "judge";
    long timeout_ms = 30000;
    int max_retries = 3;
    int max_in_flight = 8;
    long backoff_base_ms = 500;
    bool no_native_n = false;

    inference::EndpointConfig resolve() const {
        inference::EndpointConfig cfg;
        cfg.base_url = base_url;
        cfg.model = model;
        cfg.timeout = std::chrono::milliseconds(timeout_ms);
        cfg.max_retries = max_retries;
        cfg.max_in_flight = max_in_flight;
        cfg.backoff_base = std::chrono::milliseconds(backoff_base_ms);
        cfg.native_n = !no_native_n;
        if (const char* key = std::getenv(inference::kApiKeyEnvVar)) cfg.api_key = key;
        cfg.validate();
        return cfg;
    }

    /// Echoed into output artifacts; never includes the API key.
    json echo() const {
        return json{{"base_url", base_url},       {"model", model},
                    {"timeout_ms", timeout_ms},   {"max_retries", max_retries},
                    {"max_in_flight", max_in_flight}, {"backoff_base_ms", backoff_base_ms},
                    {"native_n", !no_native_n}};
    }

    void add_options(CLI::App& app) {
        app.add_option("--endpoint", base_url,
                       "Endpoint base URL (http(s)://... or mock:<fixtures-dir>)")
            ->envname("JUDGEKIT_ENDPOINT");
        app.add_option("--model", model, "Model name sent to the endpoint")
            ->envname("JUDGEKIT_MODEL");
        app.add_option("--timeout-ms", timeout_ms, "Per-request timeout");
        app.add_option("--max-retries", max_retries, "Retries for transient failures");
        app.add_option("--max-in-flight", max_in_flight, "Concurrent request bound");
        app.add_option("--backoff-base-ms", backoff_base_ms, "Retry backoff base delay");
        app.add_flag("--no-native-n", no_native_n,
                     "Issue n single-sample requests instead of one n-way request");
    }
};

struct SamplingOptions {
    double temperature = 0.6;
    double top_p = 0.95;
    int max_tokens = 4096;
    int n = 1;
    std::int64_t seed = -1;  // <0: unset

    SamplingParams resolve() const {
        SamplingParams p;
        p.temperature = temperature;
        p.top_p = top_p;
        p.max_tokens = max_tokens;
        p.n = n;
        if (seed >= 0) p.seed = seed;
        p.validate();
        return p;
    }

    void add_options(CLI::App& app) {
        app.add_option("--temperature", temperature, "Sampling temperature");
        app.add_option("--top-p", top_p, "Nucleus sampling threshold");
        app.add_option("--max-tokens", max_tokens, "Generation length limit");
        app.add_option("--n", n, "Samples (rollouts) per prompt");
        app.add_option("--sampling-seed", seed, "Endpoint sampling seed (>= 0)");
    }
};

void write_text_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path.string());
    out << content;
}

std::string zero_pad(std::size_t value, int width = 6) {
    std::string s = std::to_string(value);
    while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
    return s;
}

json example_record(const PreferenceExample& ex) {
    json record{{"id", ex.id},
                {"instruction", ex.instruction},
                {"response_a", ex.response_a},
                {"response_b", ex.response_b},
                {"gold", to_string(ex.gold)},
                {"source", to_string(ex.source)}};
    if (ex.category) record["category"] = *ex.category;
    return record;
}

void report_rejects(const LoadResult& loaded) {
    for (const auto& reject : loaded.rejects) {
        std::cerr << "skipping line " << reject.line << ": " << reject.message << "\n";
    }
}

// -----------------------------------------------------------------------
// gen-data
// -----------------------------------------------------------------------

int run_gen_data_openended(const std::filesystem::path& seeds_path,
                           const std::filesystem::path& out_path,
                           const EndpointOptions& endpoint_opts, const SamplingOptions& sampling) {
    std::ifstream in(seeds_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open seeds file: " + seeds_path.string());

    struct Seed {
        std::size_t line;
        std::string instruction;
        std::string baseline;
    };
    std::vector<Seed> seeds;
    std::string line;
    std::size_t line_no = 0;
    std::size_t bad_seeds = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        json record = json::parse(line, nullptr, false);
        if (record.is_discarded() || !record.is_object() || !record.contains("instruction") ||
            !record.contains("baseline_response")) {
            std::cerr << "skipping seed line " << line_no << ": bad record\n";
            ++bad_seeds;
            continue;
        }
        seeds.push_back({line_no, record["instruction"].get<std::string>(),
                         record["baseline_response"].get<std::string>()});
    }

    const auto cfg = endpoint_opts.resolve();
    const auto client = inference::make_client(cfg);
    const SamplingParams params = sampling.resolve();

    std::vector<inference::CompletionRequest> requests;
    requests.reserve(seeds.size());
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        inference::CompletionRequest req;
        req.prompt = prompts::render_datagen(seeds[i].instruction, seeds[i].baseline);
        req.params = params;
        req.params.n = 1;
        req.tag = "gen-" + zero_pad(i);
        requests.push_back(std::move(req));
    }
    const auto results = inference::complete_batch(*client, requests, cfg.max_in_flight);

    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write output file: " + out_path.string());

    std::size_t emitted = 0, format_errors = 0, transport_errors = 0;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        const auto& result = results.at("gen-" + zero_pad(i));
        if (!inference::succeeded(result)) {
            ++transport_errors;
            continue;
        }
        const auto& completion = std::get<inference::Completion>(result);
        if (completion.choices.empty()) {
            ++transport_errors;
            continue;
        }
        std::string error;
        const auto sections =
            datagen::parse_datagen_completion(completion.choices.front().text, &error);
        if (!sections) {
            std::cerr << "seed line " << seeds[i].line << ": " << error << "\n";
            ++format_errors;
            continue;
        }
        datagen::DatagenRecord record;
        record.original_instruction = seeds[i].instruction;
        record.baseline_response = seeds[i].baseline;
        record.modified_instruction = sections->modified_instruction;
        record.modified_response = sections->modified_response;
        record.provenance = cfg.model;
        try {
            const PreferenceExample ex =
                datagen::make_openended_pair(record, "oe-" + zero_pad(i));
            out << example_record(ex).dump() << '\n';
            ++emitted;
        } catch (const std::invalid_argument& e) {
            std::cerr << "seed line " << seeds[i].line << ": " << e.what() << "\n";
            ++format_errors;
        }
    }

    json summary{{"type", "gen-data-summary"},
                 {"mode", "openended"},
                 {"config",
                  {{"seeds", seeds_path.string()},
                   {"out", out_path.string()},
                   {"endpoint", endpoint_opts.echo()},
                   {"sampling",
                    {{"temperature", params.temperature},
                     {"top_p", params.top_p},
                     {"max_tokens", params.max_tokens},
                     {"n", 1}}}}},
                 {"seeds_read", seeds.size()},
                 {"bad_seed_lines", bad_seeds},
                 {"emitted", emitted},
                 {"format_errors", format_errors},
                 {"transport_errors", transport_errors},
                 {"incomplete", transport_errors > 0}};
    write_text_file(out_path.string() + ".summary.json", summary.dump(2) + "\n");
    std::cout << "emitted " << emitted << " pairs (" << format_errors << " format errors, "
              << transport_errors << " transport errors)\n";
    return 0;
}

int run_gen_data_math(const std::filesystem::path& seeds_path,
                      const std::filesystem::path& out_path, int max_pairs_per_seed) {
    std::ifstream in(seeds_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open seeds file: " + seeds_path.string());

    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write output file: " + out_path.string());

    std::string line;
    std::size_t line_no = 0;
    std::size_t emitted = 0, bad_seeds = 0, skipped_no_chosen = 0, skipped_no_rejected = 0;
    std::size_t seeds_read = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        json record = json::parse(line, nullptr, false);
        if (record.is_discarded() || !record.is_object() || !record.contains("problem") ||
            !record.contains("gold_answer") || !record.contains("candidates")) {
            std::cerr << "skipping seed line " << line_no << ": bad record\n";
            ++bad_seeds;
            continue;
        }
        ++seeds_read;
        datagen::MathSeed seed;
        seed.problem = record["problem"].get<std::string>();
        seed.gold_answer = record["gold_answer"].get<std::string>();
        for (const auto& candidate : record["candidates"]) {
            seed.candidate_responses.push_back(candidate.get<std::string>());
        }
        const auto pairs =
            datagen::make_math_pairs(seed, "math-" + zero_pad(line_no), max_pairs_per_seed);
        if (pairs.skipped) {
            (*pairs.skipped == datagen::MathSkipReason::NoChosen ? skipped_no_chosen
                                                                 : skipped_no_rejected)++;
            std::cerr << "seed line " << line_no << " skipped: "
                      << datagen::to_string(*pairs.skipped) << "\n";
            continue;
        }
        for (const auto& ex : pairs.examples) {
            out << example_record(ex).dump() << '\n';
            ++emitted;
        }
    }

    json summary{{"type", "gen-data-summary"},
                 {"mode", "math"},
                 {"config",
                  {{"seeds", seeds_path.string()},
                   {"out", out_path.string()},
                   {"max_pairs_per_seed", max_pairs_per_seed}}},
                 {"seeds_read", seeds_read},
                 {"bad_seed_lines", bad_seeds},
                 {"emitted", emitted},
                 {"skipped", {{"no-chosen", skipped_no_chosen}, {"no-rejected", skipped_no_rejected}}},
                 {"incomplete", false}};
    write_text_file(out_path.string() + ".summary.json", summary.dump(2) + "\n");
    std::cout << "emitted " << emitted << " pairs (" << skipped_no_chosen + skipped_no_rejected
              << " seeds skipped)\n";
    return 0;
}

// -----------------------------------------------------------------------
// judge / eval / aggregate
// -----------------------------------------------------------------------

eval::GoldMap load_gold(const std::filesystem::path& dataset_path) {
    const LoadResult loaded = load_dataset(dataset_path);
    report_rejects(loaded);
    return eval::gold_map(loaded.examples);
}

void write_report(const eval::EvalReport& report, const std::filesystem::path& out_path,
                  const std::string& csv_path) {
    write_text_file(out_path, report.to_json().dump(2) + "\n");
    if (!csv_path.empty()) write_text_file(csv_path, report.to_csv());
}

std::atomic<bool> g_shutdown{false};

void handle_signal(int) { g_shutdown.store(true); }

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"LLM-judge orchestration and reward annotation toolkit"};
    app.set_version_flag("--version", kVersion);
    app.set_config("--config", "", "Read defaults from an INI/TOML config file");
    app.require_subcommand(1);

    // ---- gen-data ----
    auto* gen = app.add_subcommand("gen-data", "Generate synthetic preference pairs");
    std::string gen_mode = "openended";
    std::string gen_seeds, gen_out;
    int gen_max_pairs = 4;
    EndpointOptions gen_endpoint;
    SamplingOptions gen_sampling;
    gen_sampling.temperature = 1.0;  // generation uses rollout-style sampling
    gen->add_option("--mode", gen_mode, "openended or math")
        ->check(CLI::IsMember({"openended", "math"}));
    gen->add_option("--seeds", gen_seeds, "Seed JSONL file")->required();
    gen->add_option("--out", gen_out, "Output pairwise JSONL file")->required();
    gen->add_option("--max-pairs-per-seed", gen_max_pairs, "Cap per math seed");
    gen_endpoint.add_options(*gen);
    gen_sampling.add_options(*gen);

    // ---- judge ----
    auto* judge = app.add_subcommand("judge", "Run a judge over a dataset, write a judgment log");
    std::string judge_dataset, judge_out;
    std::string judge_formulation = "PaV", judge_style = "thinking";
    std::string judge_protocol = "both-order", judge_strictness = "lenient";
    std::uint64_t judge_seed = 0;
    EndpointOptions judge_endpoint;
    SamplingOptions judge_sampling;
    judge->add_option("--dataset", judge_dataset, "Pairwise JSONL dataset")->required();
    judge->add_option("--out", judge_out, "Judgment log path (JSONL)")->required();
    judge->add_option("--formulation", judge_formulation, "PaV, PaS, PaVS, or PoS")
        ->check(CLI::IsMember({"PaV", "PaS", "PaVS", "PoS"}));
    judge->add_option("--prompt-style", judge_style, "thinking or plan-execute")
        ->check(CLI::IsMember({"thinking", "plan-execute"}));
    judge->add_option("--protocol", judge_protocol,
                      "both-order, random-single-order, or pointwise-twin")
        ->check(CLI::IsMember({"both-order", "random-single-order", "pointwise-twin"}));
    judge->add_option("--strictness", judge_strictness, "strict or lenient parsing")
        ->check(CLI::IsMember({"strict", "lenient"}));
    judge->add_option("--seed", judge_seed, "Run seed (drives random-single-order)");
    judge_endpoint.add_options(*judge);
    judge_sampling.add_options(*judge);

    // ---- eval ----
    auto* eval_cmd = app.add_subcommand("eval", "Compute an evaluation report from a log");
    std::string eval_log, eval_dataset, eval_out, eval_csv;
    eval_cmd->add_option("--log", eval_log, "Judgment log (JSONL)")->required();
    eval_cmd->add_option("--dataset", eval_dataset, "Dataset with gold labels")->required();
    eval_cmd->add_option("--out", eval_out, "Report JSON path")->required();
    eval_cmd->add_option("--csv", eval_csv, "Optional per-category CSV path");

    // ---- aggregate ----
    auto* agg = app.add_subcommand("aggregate", "Test-time scaling aggregation over a log");
    std::string agg_log, agg_dataset, agg_out, agg_csv, agg_strategy = "majority";
    std::string agg_curve;
    int agg_n = 1;
    agg->add_option("--log", agg_log, "Judgment log (JSONL)")->required();
    agg->add_option("--dataset", agg_dataset, "Dataset with gold labels")->required();
    agg->add_option("--out", agg_out, "Report JSON path")->required();
    agg->add_option("--csv", agg_csv, "Optional per-category CSV path");
    agg->add_option("--strategy", agg_strategy, "majority or mean-score")
        ->check(CLI::IsMember({"majority", "mean-score"}));
    agg->add_option("--N", agg_n, "Samples per presentation to aggregate");
    agg->add_option("--curve", agg_curve, "Comma-separated Ns; writes a scaling curve instead");

    // ---- reward-serve ----
    auto* serve = app.add_subcommand("reward-serve", "Serve reward annotation over HTTP");
    std::string serve_host = "0.0.0.0";
    int serve_port = 8700;
    std::string serve_strictness = "strict";
    std::string serve_token_env;
    serve->add_option("--host", serve_host, "Bind address");
    serve->add_option("--port", serve_port, "Bind port");
    serve->add_option("--strictness", serve_strictness, "strict or lenient parsing")
        ->check(CLI::IsMember({"strict", "lenient"}));
    serve->add_option("--auth-token-env", serve_token_env,
                      "Env var holding a shared token required in X-Auth-Token");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (gen->parsed()) {
            if (gen_mode == "math") {
                return run_gen_data_math(gen_seeds, gen_out, gen_max_pairs);
            }
            return run_gen_data_openended(gen_seeds, gen_out, gen_endpoint, gen_sampling);
        }

        if (judge->parsed()) {
            const LoadResult loaded = load_dataset(judge_dataset);
            report_rejects(loaded);
            eval::RunSpec spec;
            spec.formulation = Formulation::make(*formulation_kind_from_string(judge_formulation),
                                                 *prompt_style_from_string(judge_style));
            spec.protocol = *protocol_from_string(judge_protocol);
            if (spec.formulation.kind == FormulationKind::PoS &&
                judge->get_option("--protocol")->empty()) {
                spec.protocol = SchedulingProtocol::PointwiseTwin;
            }
            spec.strictness = *parser::strictness_from_string(judge_strictness);
            spec.sampling = judge_sampling.resolve();
            spec.seed = judge_seed;
            spec.model = judge_endpoint.model;
            const auto cfg = judge_endpoint.resolve();
            const auto client = inference::make_client(cfg);
            eval::JudgmentLog log = eval::run_eval(loaded.examples, spec, *client, cfg.max_in_flight);
            log.config["dataset"] = judge_dataset;
            log.config["endpoint"] = judge_endpoint.echo();
            eval::save_log(log, judge_out);
            std::size_t failures = 0;
            for (const auto& entry : log.entries) failures += entry.judgment.ok() ? 0 : 1;
            std::cout << "wrote " << log.entries.size() << " judgments (" << failures
                      << " parse failures) to " << judge_out << "\n";
            return 0;
        }

        if (eval_cmd->parsed()) {
            const eval::JudgmentLog log = eval::load_log(eval_log);
            const eval::EvalReport report =
                eval::compute_report(log, eval::AggregationStrategy{eval::StrategyKind::Single, 1},
                                     load_gold(eval_dataset));
            write_report(report, eval_out, eval_csv);
            std::cout << "wrote report to " << eval_out << "\n";
            return 0;
        }

        if (agg->parsed()) {
            const eval::JudgmentLog log = eval::load_log(agg_log);
            const auto gold = load_gold(agg_dataset);
            const eval::StrategyKind kind = *eval::strategy_kind_from_string(agg_strategy);
            if (!agg_curve.empty()) {
                std::vector<int> Ns;
                std::stringstream ss(agg_curve);
                std::string item;
                while (std::getline(ss, item, ',')) Ns.push_back(std::stoi(item));
                const auto points = eval::scaling_curve(log, kind, Ns, gold);
                json out{{"type", "scaling-curve"},
                         {"config", log.config},
                         {"strategy", agg_strategy},
                         {"points", json::array()}};
                for (const auto& p : points) {
                    out["points"].push_back({{"N", p.N},
                                             {"acc_consistent", p.acc_consistent},
                                             {"tie_rate", p.tie_rate}});
                }
                write_text_file(agg_out, out.dump(2) + "\n");
            } else {
                const eval::EvalReport report =
                    eval::compute_report(log, eval::AggregationStrategy{kind, agg_n}, gold);
                write_report(report, agg_out, agg_csv);
            }
            std::cout << "wrote report to " << agg_out << "\n";
            return 0;
        }

        if (serve->parsed()) {
            reward_service::ServiceConfig cfg;
            cfg.host = serve_host;
            cfg.port = serve_port;
            cfg.strictness = *parser::strictness_from_string(serve_strictness);
            if (!serve_token_env.empty()) {
                const char* token = std::getenv(serve_token_env.c_str());
                if (!token || !*token) {
                    throw std::runtime_error("auth token env var " + serve_token_env +
                                             " is not set");
                }
                cfg.auth_token = token;
            }
            json echo{{"host", cfg.host},
                      {"port", cfg.port},
                      {"strictness", serve_strictness},
                      {"auth", cfg.auth_token.has_value()},
                      {"version", kVersion}};
            std::cout << "reward service config: " << echo.dump() << "\n";

            reward_service::Server server(cfg);
            const int bound_port = server.start();
            g_shutdown.store(false);
            std::signal(SIGINT, handle_signal);
            std::signal(SIGTERM, handle_signal);
            std::cout << "serving on " << cfg.host << ":" << bound_port << " (Ctrl-C to stop)"
                      << std::endl;
            while (!g_shutdown.load()) {
                std::this_thread::sleep_for(std::chrono::milliseconds(100));
            }
            server.stop();
            std::cout << "stopped\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

int run(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.push_back("judgekit");
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace judgekit::cli
